//! Nash equilibria of responsibility-aware utilities by support enumeration
//! and damped Newton on the indifference conditions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::utility::{ParamSpace, SpaceBlock, Utilities};
use crate::error::{Error, Result};
use crate::model::AgentId;

#[derive(Clone, Debug, PartialEq)]
pub struct NeOptions {
    /// Spacing of the seed grid on each unknown.
    pub seed_step: f64,
    /// Seeds per support pattern; the grid is coarsened to fit.
    pub max_seeds: usize,
    pub max_patterns: usize,
    /// Residual norm accepted as a solution.
    pub residual: f64,
    pub max_iterations: usize,
    /// Slack allowed in the best-response check.
    pub epsilon: f64,
    /// Max-norm distance under which two solutions coincide.
    pub dedup: f64,
}

impl Default for NeOptions {
    fn default() -> Self {
        Self {
            seed_step: 0.1,
            max_seeds: 729,
            max_patterns: 100_000,
            residual: 1e-10,
            max_iterations: 1000,
            epsilon: 1e-6,
            dedup: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeSolution {
    pub params: BTreeMap<String, f64>,
    /// Played actions per `AGENT@STATE`.
    pub support: BTreeMap<String, Vec<String>>,
    pub utilities: BTreeMap<String, f64>,
    pub residual: f64,
    pub verified: bool,
    pub degenerate: bool,
    #[serde(skip)]
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NeReport {
    pub solutions: Vec<NeSolution>,
}

const PROB_FLOOR: f64 = 1e-9;
const JACOBIAN_STEP: f64 = 1e-7;
const BR_TIES: f64 = 1e-9;
const MAX_BR_STRATEGIES: usize = 1 << 20;

/// Pure strategies of `agent` (over its blocks with several actions) that
/// maximise its utility against `y`, each given as a full point, together
/// with the best value.
pub fn best_response(u: &dyn Utilities, agent: AgentId, y: &[f64]) -> Result<(f64, Vec<Vec<f64>>)> {
    let space = u.space();
    let blocks: Vec<&SpaceBlock> = space
        .blocks
        .iter()
        .filter(|b| b.agent == agent && b.actions.len() > 1)
        .collect();
    let total = blocks
        .iter()
        .try_fold(1usize, |acc, b| acc.checked_mul(b.actions.len()))
        .filter(|&t| t <= MAX_BR_STRATEGIES)
        .ok_or_else(|| Error::Invalid("too many pure strategies for a best response".into()))?;
    let mut scored = Vec::with_capacity(total);
    for code in 0..total {
        let mut z = y.to_vec();
        let mut rest = code;
        for b in &blocks {
            space.set_pure(&mut z, b, rest % b.actions.len());
            rest /= b.actions.len();
        }
        scored.push((u.utility(agent, &z), z));
    }
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let responses = scored
        .into_iter()
        .filter(|(v, _)| *v >= best - BR_TIES)
        .map(|(_, z)| z)
        .collect();
    Ok((best, responses))
}

/// No agent gains more than `epsilon` by a pure deviation.
pub fn verify_ne(u: &dyn Utilities, y: &[f64], epsilon: f64) -> bool {
    u.space().agents().into_iter().all(|i| {
        let here = u.utility(i, y);
        match best_response(u, i, y) {
            Ok((best, _)) => here.is_finite() && best <= here + epsilon,
            Err(_) => false,
        }
    })
}

/// A support pattern: the actions (by position) kept in each active block.
type Pattern = Vec<Vec<usize>>;

struct Problem<'u> {
    u: &'u dyn Utilities,
    active: Vec<usize>,
    base: Vec<f64>,
}

impl Problem<'_> {
    fn block(&self, a: usize) -> &SpaceBlock {
        &self.u.space().blocks[self.active[a]]
    }

    fn unknowns(pattern: &Pattern) -> usize {
        pattern.iter().map(|s| s.len() - 1).sum()
    }

    fn point(&self, pattern: &Pattern, z: &[f64]) -> Vec<f64> {
        let mut y = self.base.clone();
        let mut k = 0;
        for (a, support) in pattern.iter().enumerate() {
            let b = self.block(a);
            for j in 0..b.actions.len() {
                y[b.offset + j] = 0.0;
            }
            let mut rest = 1.0;
            for &j in &support[..support.len() - 1] {
                y[b.offset + j] = z[k];
                rest -= z[k];
                k += 1;
            }
            y[b.offset + support[support.len() - 1]] = rest;
        }
        y
    }

    /// Indifference between each in-support action and the last one.
    fn residual(&self, pattern: &Pattern, z: &[f64]) -> DVector<f64> {
        let y = self.point(pattern, z);
        let space = self.u.space();
        let mut out = Vec::with_capacity(z.len());
        for (a, support) in pattern.iter().enumerate() {
            let b = self.block(a);
            let last = support[support.len() - 1];
            let mut at_last = y.clone();
            space.set_pure(&mut at_last, b, last);
            let reference = self.u.utility(b.agent, &at_last);
            for &j in &support[..support.len() - 1] {
                let mut at = y.clone();
                space.set_pure(&mut at, b, j);
                out.push(self.u.utility(b.agent, &at) - reference);
            }
        }
        DVector::from_vec(out)
    }

    fn jacobian(&self, pattern: &Pattern, z: &[f64]) -> DMatrix<f64> {
        let m = z.len();
        let mut jac = DMatrix::zeros(m, m);
        let mut probe = z.to_vec();
        for c in 0..m {
            probe[c] = z[c] + JACOBIAN_STEP;
            let up = self.residual(pattern, &probe);
            probe[c] = z[c] - JACOBIAN_STEP;
            let down = self.residual(pattern, &probe);
            probe[c] = z[c];
            jac.set_column(c, &((up - down) / (2.0 * JACOBIAN_STEP)));
        }
        jac
    }

    /// Levenberg–Marquardt from `z`; returns the final point and residual.
    fn solve(&self, pattern: &Pattern, mut z: Vec<f64>, opts: &NeOptions) -> (Vec<f64>, f64) {
        let m = z.len();
        let mut f = self.residual(pattern, &z);
        let mut norm = f.norm();
        let mut mu = 1e-3;
        for _ in 0..opts.max_iterations {
            if !norm.is_finite() || norm < opts.residual || mu > 1e12 {
                break;
            }
            let jac = self.jacobian(pattern, &z);
            let jt = jac.transpose();
            let lhs = &jt * &jac + DMatrix::identity(m, m) * mu;
            let rhs = -(&jt * &f);
            let Some(step) = lhs.lu().solve(&rhs) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let tf = self.residual(pattern, &trial);
            let tn = tf.norm();
            if tn.is_finite() && tn < norm {
                z = trial;
                f = tf;
                norm = tn;
                mu = (mu / 3.0).max(1e-15);
            } else {
                mu *= 4.0;
            }
        }
        (z, norm)
    }
}

/// Seeds for `pattern`: a grid on each unknown, coarsened to `max_seeds`,
/// with each block's partial sums kept below one.
fn seeds(pattern: &Pattern, opts: &NeOptions) -> Vec<Vec<f64>> {
    let m = Problem::unknowns(pattern);
    if m == 0 {
        return vec![Vec::new()];
    }
    let fine = ((1.0 / opts.seed_step).round() as usize).saturating_sub(1).max(1);
    let mut per = fine;
    while per > 1 && per.checked_pow(m as u32).is_none_or(|t| t > opts.max_seeds) {
        per -= 1;
    }
    let values: Vec<f64> = (1..=per).map(|j| j as f64 / (per + 1) as f64).collect();
    let total = per.pow(m as u32);
    (0..total)
        .map(|mut code| {
            let mut z = Vec::with_capacity(m);
            for _ in 0..m {
                z.push(values[code % per]);
                code /= per;
            }
            let mut k = 0;
            for support in pattern {
                let n = support.len() - 1;
                let sum: f64 = z[k..k + n].iter().sum();
                if sum >= 1.0 {
                    for v in &mut z[k..k + n] {
                        *v *= 0.9 / sum;
                    }
                }
                k += n;
            }
            z
        })
        .collect()
}

/// All Nash equilibria found by enumerating supports of the blocks the
/// utilities depend on. Unreachable blocks play uniformly; so do reachable
/// blocks no utility depends on, which makes every solution degenerate.
pub fn solve_ne(u: &dyn Utilities, opts: &NeOptions) -> Result<NeReport> {
    let space = u.space();
    let mut base = vec![0.0; space.dim];
    let mut active = Vec::new();
    let mut pruned = false;
    for (idx, b) in space.blocks.iter().enumerate() {
        let n = b.actions.len();
        if n > 1 && b.reachable && u.depends_on_block(b) != Some(false) {
            active.push(idx);
        } else {
            pruned |= n > 1 && b.reachable;
            for j in 0..n {
                base[b.offset + j] = 1.0 / n as f64;
            }
        }
    }
    let problem = Problem { u, active, base };

    let choices: Vec<Vec<Vec<usize>>> = problem
        .active
        .iter()
        .map(|&idx| {
            let n = space.blocks[idx].actions.len();
            (1u64..1 << n)
                .map(|mask| (0..n).filter(|j| mask >> j & 1 == 1).collect())
                .collect()
        })
        .collect();
    let count = choices
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .filter(|&c| c <= opts.max_patterns)
        .ok_or_else(|| Error::Invalid(format!("more than {} support patterns", opts.max_patterns)))?;

    let results: Vec<(bool, Vec<NeSolution>)> = (0..count)
        .into_par_iter()
        .map(|mut code| {
            let pattern: Pattern = choices
                .iter()
                .map(|c| {
                    let s = c[code % c.len()].clone();
                    code /= c.len();
                    s
                })
                .collect();
            solve_pattern(&problem, &pattern, opts, pruned)
        })
        .collect();

    let converged = results.iter().any(|r| r.0);
    let mut solutions: Vec<NeSolution> = Vec::new();
    for sol in results.into_iter().flat_map(|r| r.1) {
        let dup = solutions
            .iter()
            .any(|s| s.point.iter().zip(&sol.point).all(|(a, b)| (a - b).abs() <= opts.dedup));
        if !dup {
            solutions.push(sol);
        }
    }
    if solutions.is_empty() && !converged {
        return Err(Error::NoSolutionFound("no support pattern admits a solution".into()));
    }
    solutions.sort_by(|a, b| {
        a.point
            .iter()
            .zip(&b.point)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(NeReport { solutions })
}

fn solve_pattern(problem: &Problem<'_>, pattern: &Pattern, opts: &NeOptions, pruned: bool) -> (bool, Vec<NeSolution>) {
    let mut converged = false;
    let mut found: Vec<NeSolution> = Vec::new();
    for seed in seeds(pattern, opts) {
        let (z, norm) = problem.solve(pattern, seed, opts);
        // Also rejects a NaN residual.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(norm < opts.residual) {
            continue;
        }
        converged = true;
        let y = problem.point(pattern, &z);
        let in_range = pattern.iter().enumerate().all(|(a, support)| {
            let b = problem.block(a);
            support
                .iter()
                .all(|&j| y[b.offset + j] > PROB_FLOOR && y[b.offset + j] <= 1.0 + PROB_FLOOR)
        });
        if !in_range {
            continue;
        }
        if found
            .iter()
            .any(|s| s.point.iter().zip(&y).all(|(a, b)| (a - b).abs() <= opts.dedup))
        {
            continue;
        }
        let m = z.len();
        let singular = m > 0 && problem.jacobian(pattern, &z).rank(1e-8) < m;
        let verified = verify_ne(problem.u, &y, opts.epsilon);
        if !verified {
            continue;
        }
        found.push(describe(problem.u.space(), problem.u, y, norm, pruned || singular));
        if singular {
            break;
        }
    }
    (converged, found)
}

fn describe(space: &ParamSpace, u: &dyn Utilities, y: Vec<f64>, residual: f64, degenerate: bool) -> NeSolution {
    let params = space.named.iter().map(|(n, c)| (n.clone(), y[*c])).collect();
    let support = space
        .blocks
        .iter()
        .map(|b| {
            let played = b
                .actions
                .iter()
                .enumerate()
                .filter(|(j, _)| y[b.offset + j] > PROB_FLOOR)
                .map(|(_, &a)| space.action_name(b, a).to_string())
                .collect();
            (space.block_label(b), played)
        })
        .collect();
    let utilities = space
        .agents()
        .into_iter()
        .map(|i| (space.agent_names[i].clone(), u.utility(i, &y)))
        .collect();
    NeSolution {
        params,
        support,
        utilities,
        residual,
        verified: true,
        degenerate,
        point: y,
    }
}
