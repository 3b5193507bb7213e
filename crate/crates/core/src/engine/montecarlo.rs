//! Sampling estimates of probabilities and expected rewards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::chain::{InducedChain, Track};
use crate::error::{Error, Result};
use crate::logic::Outcome;
use crate::model::{Game, RewardStructure, StateId, StrategyProfile};

/// Samples per pseudorandom stream.
pub const BLOCK_SIZE: usize = 4096;

#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Probability(&'a Outcome),
    Reward(&'a RewardStructure, &'a Outcome),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Estimates the target by simulating `samples` histories from `start`.
///
/// Block `b` draws from stream `b` of a ChaCha8 generator seeded with
/// `seed`, and block sums are reduced in block order, so the result does
/// not depend on the thread count.
pub fn monte_carlo(
    game: &Game,
    profile: &StrategyProfile,
    target: Target<'_>,
    samples: usize,
    seed: u64,
    start: StateId,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::Invalid("Monte Carlo needs at least one sample".into()));
    }
    let chain = InducedChain::new(game, profile)?;
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = BLOCK_SIZE.min(samples - b * BLOCK_SIZE);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..n {
                let x = sample(&chain, target, start, &mut rng);
                sum += x;
                sq += x * x;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = sum / n;
    let stderr = if samples > 1 {
        let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(Estimate {
        estimate: mean,
        stderr,
        samples,
    })
}

fn sample(chain: &InducedChain<'_>, target: Target<'_>, start: StateId, rng: &mut ChaCha8Rng) -> f64 {
    let game = chain.game();
    let (outcome, reward) = match target {
        Target::Probability(o) => (o, None),
        Target::Reward(r, o) => (o, Some(r)),
    };
    let horizon = match reward {
        Some(_) => outcome.horizon(),
        None => usize::MAX,
    };
    let mut s = start;
    let mut track = Track::start(outcome, s);
    let mut acc = 0.0;
    let mut pos = 0;
    while pos < horizon {
        match track {
            None => return 0.0,
            Some(Track::Satisfied) if reward.is_none() => return 1.0,
            Some(Track::Open(_)) | Some(Track::Satisfied) => {}
        }
        let row = chain.row(s);
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut chosen = row[row.len() - 1];
        for step in row {
            cum += step.prob;
            if u < cum {
                chosen = *step;
                break;
            }
        }
        if let Some(r) = reward {
            acc += r.reward_of(s, &game.joint_actions(s)[chosen.joint]);
        }
        pos += 1;
        s = chosen.next;
        track = track.and_then(|t| t.advance(outcome, pos, s));
    }
    match (track, reward) {
        (Some(Track::Satisfied), Some(r)) => acc + r.state_reward(s),
        _ => 0.0,
    }
}
