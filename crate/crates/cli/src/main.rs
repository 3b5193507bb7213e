mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use respgames::checker::{CheckContext, Checker};
use respgames::engine::{expected_reward, monte_carlo, sat_probability, Direction, RewardAdversary, Target};
use respgames::logic::{parse_path_formula, parse_state_formula, Outcome};
use respgames::model::{parse_model, parse_profiles, serialize_model, Coalition, ModelFile, StrategyProfile};
use respgames::parametric::{
    build_psmas, solve_ne, utility, NeOptions, NumericUtilities, Payoffs, PolyUtilities, Utilities,
};
use respgames::responsibility::{Attribution, DEFAULT_CAP};
use respgames::Error;

use report::{Format, Report};

const EXIT_TRUE: u8 = 0;
const EXIT_FALSE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NO_NE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "respgames",
    version,
    about = "Responsibility analysis for concurrent stochastic games"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "RESPGAMES_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a state formula at the initial state.
    Check(CheckArgs),
    /// Responsibility degrees of every agent for an outcome.
    Resp(RespArgs),
    /// Qualitative responsibility of one agent, with a witness coalition.
    Bcr(BcrArgs),
    /// Responsibility-aware Nash equilibria.
    Ne(NeArgs),
    /// Monte Carlo estimate of an outcome probability or reward.
    Simulate(SimulateArgs),
    /// Parse and validate a model.
    Validate(ModelArgs),
    /// Print a model in canonical form.
    Fmt(ModelArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    model: PathBuf,
    /// Extra file of `profile` blocks.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Min,
    Max,
}

impl From<ModeArg> for Direction {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Min => Direction::Min,
            ModeArg::Max => Direction::Max,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AdversaryArg {
    Hostile,
    Any,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    formula: String,
    /// State to check at instead of the initial one.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Min)]
    mode: ModeArg,
    #[arg(long = "r-adversary", value_enum, default_value_t = AdversaryArg::Hostile)]
    r_adversary: AdversaryArg,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct RespArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    profile: String,
    #[arg(long)]
    outcome: String,
    /// Report this agent's degree on its own.
    #[arg(long)]
    agent: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Min)]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct BcrArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    profile: String,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    agent: String,
}

#[derive(Args, Debug)]
struct NeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Outcome the responsibility term is about.
    #[arg(long, required_unless_present = "utility_file")]
    outcome: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// `AGENT=NAME` per agent, or one reward name for every agent.
    #[arg(long, required_unless_present = "utility_file")]
    reward: Vec<String>,
    /// Utilities given directly as polynomials.
    #[arg(long = "utility-file")]
    utility_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Min)]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    profile: String,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate this reward over the outcome's horizon instead of a probability.
    #[arg(long)]
    reward: Option<String>,
}

struct Loaded {
    ctx: CheckContext,
    sha256: String,
    path: PathBuf,
}

fn load(args: &ModelArgs) -> Result<(ModelFile, String)> {
    let text = std::fs::read_to_string(&args.model).with_context(|| format!("cannot read {}", args.model.display()))?;
    let mut model = parse_model(&text).with_context(|| format!("invalid model {}", args.model.display()))?;
    if let Some(p) = &args.profiles {
        let extra = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        let parsed =
            parse_profiles(&extra, &model.game).with_context(|| format!("invalid profiles {}", p.display()))?;
        for (name, profile) in parsed {
            if model.profiles.insert(name.clone(), profile).is_some() {
                bail!("profile `{name}` defined twice");
            }
        }
    }
    Ok((model, report::sha256_hex(text.as_bytes())))
}

fn load_context(args: &ModelArgs) -> Result<Loaded> {
    let (model, sha256) = load(args)?;
    Ok(Loaded {
        ctx: CheckContext::from_model(model),
        sha256,
        path: args.model.clone(),
    })
}

fn outcome(ctx: &CheckContext, text: &str) -> Result<Outcome> {
    let psi = parse_path_formula(text).map_err(Error::from)?;
    Ok(Checker::new(ctx).outcome(&psi)?)
}

fn full_profile<'c>(ctx: &'c CheckContext, name: &str) -> Result<&'c StrategyProfile> {
    Ok(ctx.profile(name)?)
}

fn run(cli: &Cli) -> Result<(Report, u8)> {
    match &cli.command {
        Command::Check(a) => {
            let mut l = load_context(&a.model)?;
            l.ctx.mode = a.mode.into();
            l.ctx.cap = a.cap;
            l.ctx.r_adversary = match a.r_adversary {
                AdversaryArg::Hostile => RewardAdversary::Hostile,
                AdversaryArg::Any => RewardAdversary::Any,
            };
            let phi = parse_state_formula(&a.formula).map_err(Error::from)?;
            let state = match &a.state {
                Some(s) => l.ctx.game.state_id(s).ok_or_else(|| anyhow!("unknown state `{s}`"))?,
                None => l.ctx.game.initial(),
            };
            let verdict = Checker::new(&l.ctx).eval_state(state, &phi)?;
            let code = if verdict.truth { EXIT_TRUE } else { EXIT_FALSE };
            Ok((
                Report::new("check", &l.path, &l.sha256, serde_json::to_value(verdict)?),
                code,
            ))
        }
        Command::Resp(a) => {
            let l = load_context(&a.model)?;
            let game = &l.ctx.game;
            let sigma = full_profile(&l.ctx, &a.profile)?;
            let o = outcome(&l.ctx, &a.outcome)?;
            let attribution = Attribution::new(game, sigma, &o)?.with_mode(a.mode.into());
            let report = attribution.report(Coalition::grand(game.num_agents()), a.cap)?;
            let mut result = json!({
                "profile": a.profile,
                "outcome": a.outcome,
            });
            if let Some(name) = &a.agent {
                let degree = report.degree(name).ok_or_else(|| anyhow!("unknown agent `{name}`"))?;
                result["agent"] = json!(name);
                result["degree"] = json!(degree);
            }
            merge(&mut result, serde_json::to_value(&report)?);
            Ok((Report::new("resp", &l.path, &l.sha256, result), EXIT_TRUE))
        }
        Command::Bcr(a) => {
            let l = load_context(&a.model)?;
            let game = &l.ctx.game;
            let sigma = full_profile(&l.ctx, &a.profile)?;
            let o = outcome(&l.ctx, &a.outcome)?;
            let i = game
                .agent_id(&a.agent)
                .ok_or_else(|| anyhow!("unknown agent `{}`", a.agent))?;
            let witness = Attribution::new(game, sigma, &o)?.qualitative_bcr(i);
            let mut result = json!({
                "agent": a.agent,
                "profile": a.profile,
                "outcome": a.outcome,
                "responsible": witness.is_some(),
            });
            if let Some(w) = &witness {
                result["witness"] = json!({
                    "coalition": w.coalition.names(game),
                    "history": w.history.display(game),
                    "compatible_histories": w.compatible_histories,
                });
            }
            let code = if witness.is_some() { EXIT_TRUE } else { EXIT_FALSE };
            Ok((Report::new("bcr", &l.path, &l.sha256, result), code))
        }
        Command::Ne(a) => run_ne(a),
        Command::Simulate(a) => {
            if a.samples == 0 {
                bail!(UsageError("--samples must be positive".into()));
            }
            let l = load_context(&a.model)?;
            let game = &l.ctx.game;
            let sigma = full_profile(&l.ctx, &a.profile)?;
            let o = outcome(&l.ctx, &a.outcome)?;
            let start = game.initial();
            let (target, analytic) = match &a.reward {
                Some(r) => {
                    let reward = l.ctx.reward(r)?;
                    (
                        Target::Reward(reward, &o),
                        expected_reward(game, sigma, reward, &o, start)?,
                    )
                }
                None => (Target::Probability(&o), sat_probability(game, sigma, &o, start)?),
            };
            let est = monte_carlo(game, sigma, target, a.samples, a.seed, start)?;
            let diff = (est.estimate - analytic).abs();
            let sigmas = if est.stderr > 0.0 {
                Some(diff / est.stderr)
            } else {
                None
            };
            let result = json!({
                "profile": a.profile,
                "outcome": a.outcome,
                "reward": a.reward,
                "seed": a.seed,
                "samples": est.samples,
                "estimate": est.estimate,
                "stderr": est.stderr,
                "analytic": analytic,
                "abs_diff": diff,
                "diff_over_stderr": sigmas,
            });
            Ok((Report::new("simulate", &l.path, &l.sha256, result), EXIT_TRUE))
        }
        Command::Validate(a) => {
            let (m, sha) = load(a)?;
            let g = &m.game;
            let transitions: usize = (0..g.num_states()).map(|s| g.moves(s).count()).sum();
            let result = json!({
                "valid": true,
                "agents": g.agents(),
                "states": g.num_states(),
                "initial": g.state_name(g.initial()),
                "atoms": g.atoms(),
                "joint_actions": transitions,
                "profiles": m.profiles.keys().collect::<Vec<_>>(),
                "rewards": m.rewards.keys().collect::<Vec<_>>(),
            });
            Ok((Report::new("validate", &a.model, &sha, result), EXIT_TRUE))
        }
        Command::Fmt(_) => unreachable!("handled before dispatch"),
    }
}

fn run_ne(a: &NeArgs) -> Result<(Report, u8)> {
    let l = load_context(&a.model)?;
    let game = &l.ctx.game;
    let opts = NeOptions::default();
    let mut result = json!({});
    let report = if let Some(path) = &a.utility_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let u = PolyUtilities::from_override(&text, game)?;
        result["utilities_from"] = json!("override");
        result["polynomials"] = polynomials(&u, game);
        solve_ne(&u, &opts)
    } else {
        if !a.lambda.is_finite() {
            bail!(UsageError("--lambda must be finite".into()));
        }
        let text = a.outcome.as_deref().expect("clap requires an outcome");
        let o = outcome(&l.ctx, text)?;
        let payoffs = reward_map(&l.ctx, &a.reward)?;
        let all = Coalition::grand(game.num_agents());
        let psmas = build_psmas(game, all, &StrategyProfile::empty(game.num_agents()))?;
        let start = game.initial();
        result["outcome"] = json!(text);
        result["lambda"] = json!(a.lambda);
        match utility(&psmas, a.lambda, &payoffs, &o, a.mode.into(), start) {
            Ok(us) => {
                let u = PolyUtilities::from_psmas(&psmas, &us).within_horizon(&psmas, o.horizon(), start);
                result["utilities_from"] = json!("symbolic");
                result["polynomials"] = polynomials(&u, game);
                solve_ne(&u, &opts)
            }
            Err(Error::NonPolynomial(why)) => {
                eprintln!("note: responsibility is not polynomial ({why}); using numeric utilities");
                let u = NumericUtilities::new(&psmas, a.lambda, payoffs, &o, a.mode.into(), start)?;
                result["utilities_from"] = json!("numeric");
                solve_ne(&u, &opts)
            }
            Err(e) => return Err(e.into()),
        }
    };
    let code = match report {
        Ok(r) => {
            let code = if r.solutions.is_empty() { EXIT_NO_NE } else { EXIT_TRUE };
            merge(&mut result, serde_json::to_value(r)?);
            code
        }
        Err(Error::NoSolutionFound(why)) => {
            eprintln!("no equilibrium: {why}");
            result["solutions"] = json!([]);
            EXIT_NO_NE
        }
        Err(e) => return Err(e.into()),
    };
    Ok((Report::new("ne", &l.path, &l.sha256, result), code))
}

fn polynomials(u: &PolyUtilities, game: &respgames::model::Game) -> Value {
    let map: BTreeMap<&str, String> = u
        .space()
        .agents()
        .into_iter()
        .filter_map(|i| u.polynomial(i).map(|p| (game.agent_name(i), p.to_string())))
        .collect();
    json!(map)
}

fn reward_map<'c>(ctx: &'c CheckContext, specs: &[String]) -> Result<Payoffs<'c>> {
    let game = &ctx.game;
    let mut map = Payoffs::new();
    if let [single] = specs {
        if !single.contains('=') {
            let r = ctx.reward(single)?;
            return Ok((0..game.num_agents()).map(|i| (i, r)).collect());
        }
    }
    for spec in specs {
        let (agent, name) = spec
            .split_once('=')
            .ok_or_else(|| UsageError(format!("expected AGENT=REWARD, got `{spec}`")))?;
        let i = game
            .agent_id(agent.trim())
            .ok_or_else(|| anyhow!("unknown agent `{agent}`"))?;
        if map.insert(i, ctx.reward(name.trim())?).is_some() {
            bail!(UsageError(format!("two rewards for {agent}")));
        }
    }
    Ok(map)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn fmt_model(args: &ModelArgs) -> Result<String> {
    let (m, _) = load(args)?;
    Ok(serialize_model(&m.game, &m.profiles, &m.rewards))
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!(UsageError("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    if let Command::Fmt(a) = &cli.command {
        return match fmt_model(a) {
            Ok(text) => {
                print!("{text}");
                ExitCode::from(EXIT_TRUE)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_INPUT)
            }
        };
    }
    match run(&cli) {
        Ok((report, code)) => {
            print!("{}", report.render(cli.format));
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
