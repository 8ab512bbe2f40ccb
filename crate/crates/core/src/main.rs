use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use aircombat_adp::engine::{run_batch, summarize, EvalSummary, Policy, SimConfig};
use aircombat_adp::io::{
    infer_outcome, load_model, read_trajectory, render_svg, save_model, write_atomic,
    write_trajectory, CreationInfo, ModelFile, PlotOptions, RunConfig,
};
use aircombat_adp::learner::{fit_value_iteration, OpponentSpec, ValueModel};
use aircombat_adp::{Error, Result};

/// One-on-one air combat simulator with a fitted value iteration policy.
#[derive(Parser, Debug)]
#[command(name = "aircombat", version)]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the command (training seed for `train`, base
    /// episode seed otherwise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path: model file for `train`, directory for `rollout`, SVG file
    /// for `plot`, TOML file for `config`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a value model; streams one JSON diagnostics line per iteration.
    Train(TrainArgs),
    /// Play episodes with a trained red and write one CSV per episode.
    Rollout(RolloutArgs),
    /// Evaluate a trained red and print summary statistics as JSON.
    Eval(EvalArgs),
    /// Render a trajectory CSV as SVG.
    Plot(PlotArgs),
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Training opponent: constant:<maneuver> or self.
    #[arg(long)]
    opponent: Option<String>,
}

#[derive(Args, Debug)]
struct RolloutArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Blue policy: constant:<maneuver>, random or self.
    #[arg(long, default_value = "constant:continued")]
    opponent: String,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "constant:continued")]
    opponent: String,
    /// Red baseline played on the same seeds, e.g. `random`.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Trajectory CSV written by `rollout`.
    csv: PathBuf,
    #[arg(long)]
    title: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for numerical failures, 1 for everything caused by bad input.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Singular { .. } | Error::Dynamics(_) | Error::Geometry(_) => 2,
        _ => 1,
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("AIRCOMBAT_WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("AIRCOMBAT_WORKERS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config("AIRCOMBAT_WORKERS must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Train(args) => {
            if let Some(s) = cli.seed {
                cfg.training.seed = s;
            }
            train(cfg, args, cli.out)
        }
        Command::Rollout(args) => {
            if let Some(s) = cli.seed {
                cfg.run.seed = s;
            }
            rollout(cfg, args, cli.out)
        }
        Command::Eval(args) => {
            if let Some(s) = cli.seed {
                cfg.run.seed = s;
            }
            eval(cfg, args)
        }
        Command::Plot(args) => plot(cfg, args, cli.out),
        Command::Config => {
            if let Some(s) = cli.seed {
                cfg.training.seed = s;
                cfg.run.seed = s;
            }
            cfg.validate()?;
            let text = cfg.to_toml_string()?;
            match cli.out {
                Some(p) => write_atomic(&p, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn train(mut cfg: RunConfig, args: TrainArgs, out: Option<PathBuf>) -> Result<()> {
    if let Some(n) = args.samples {
        cfg.training.n_samples = n;
    }
    if let Some(n) = args.iterations {
        cfg.training.iterations = n;
    }
    if let Some(g) = args.gamma {
        cfg.training.gamma = g;
    }
    if let Some(o) = &args.opponent {
        cfg.training.opponent = o.parse().map_err(Error::Config)?;
    }
    cfg.validate()?;
    let path = out.unwrap_or_else(|| cfg.run.model.clone());

    let stdout = std::io::stdout();
    let mut failed = None;
    let fit = fit_value_iteration(&cfg.setup(), |d| {
        let mut lock = stdout.lock();
        if let Err(e) = serde_json::to_writer(&mut lock, d).map_err(std::io::Error::from).and_then(|_| writeln!(lock)) {
            failed.get_or_insert(e);
        }
    })
    .map_err(|e| match e {
        Error::Singular { condition } => {
            eprintln!("least squares fit failed (condition number {condition:.3e}); consider training.ridge > 0");
            e
        }
        other => other,
    })?;
    if let Some(e) = failed {
        return Err(e.into());
    }
    let created = CreationInfo::new(
        Some(cfg.training),
        Some(cfg.dynamics),
        fit.diagnostics.len(),
        fit.samples.states.len(),
    );
    save_model(&path, &ModelFile::new(&fit.model, created)?)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

struct Loaded {
    model: Arc<ValueModel>,
    sim: SimConfig,
}

/// Reads a model and the simulation settings it should be played with: the
/// reward snapshot stored in the model and, when recorded, its dynamics.
fn load(cfg: &RunConfig, model: Option<&Path>) -> Result<Loaded> {
    let path = model.unwrap_or(&cfg.run.model);
    let file = load_model(path)?;
    let model = file.model()?;
    let sim = SimConfig {
        dynamics: file.created.dynamics.unwrap_or(cfg.dynamics),
        reward: model.reward,
        max_steps: cfg.run.max_steps,
    };
    sim.dynamics.validate().map_err(Error::Format)?;
    Ok(Loaded {
        model: Arc::new(model),
        sim,
    })
}

fn opponent_policy(spec: &str, model: &Arc<ValueModel>) -> Result<Policy> {
    Ok(match spec.parse::<OpponentSpec>().map_err(Error::Config)? {
        OpponentSpec::Constant(m) => Policy::Constant(m),
        OpponentSpec::Random => Policy::UniformRandom,
        OpponentSpec::SelfPlay => Policy::Greedy(Arc::clone(model)),
    })
}

fn episodes(cfg: &RunConfig, n: Option<usize>) -> Result<usize> {
    match n.unwrap_or(cfg.run.episodes) {
        0 => Err(Error::Config("episodes must be >= 1".into())),
        n => Ok(n),
    }
}

#[derive(Serialize)]
struct EpisodeEntry {
    file: String,
    seed: u64,
    outcome: String,
    steps: usize,
    error: Option<String>,
}

#[derive(Serialize)]
struct RolloutSummary {
    #[serde(flatten)]
    summary: EvalSummary,
    episodes_detail: Vec<EpisodeEntry>,
}

fn rollout(cfg: RunConfig, args: RolloutArgs, out: Option<PathBuf>) -> Result<()> {
    cfg.validate()?;
    let n = episodes(&cfg, args.episodes)?;
    let loaded = load(&cfg, args.model.as_deref())?;
    let red = Policy::Greedy(Arc::clone(&loaded.model));
    let blue = opponent_policy(&args.opponent, &loaded.model)?;
    let dir = out.unwrap_or_else(|| cfg.run.out_dir.clone());
    std::fs::create_dir_all(&dir)?;

    let records = run_batch(&red, &blue, &cfg.init, &loaded.sim, n, cfg.run.seed);
    let width = n.saturating_sub(1).to_string().len().max(3);
    let mut detail = Vec::with_capacity(n);
    for (i, rec) in records.iter().enumerate() {
        let name = format!("episode_{i:0width$}.csv");
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &rec.rows)?;
        write_atomic(&dir.join(&name), &buf)?;
        detail.push(EpisodeEntry {
            file: name,
            seed: rec.seed,
            outcome: rec.outcome.to_string(),
            steps: rec.steps(),
            error: rec.error.clone(),
        });
    }
    let summary = RolloutSummary {
        summary: summarize(&red, &blue, &records, cfg.run.seed),
        episodes_detail: detail,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(&dir.join("summary.json"), format!("{json}\n").as_bytes())?;
    eprintln!(
        "{} episodes: red {} blue {} draw {} -> {}",
        n,
        summary.summary.red_wins,
        summary.summary.blue_wins,
        summary.summary.draws,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    red_win_rate: f64,
    mean_terminal_reward_red: f64,
}

#[derive(Serialize)]
struct EvalReport {
    trained: EvalSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<EvalSummary>,
    /// Trained minus baseline, on the same episode seeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    difference: Option<Comparison>,
}

fn eval(cfg: RunConfig, args: EvalArgs) -> Result<()> {
    cfg.validate()?;
    let n = episodes(&cfg, args.episodes)?;
    let loaded = load(&cfg, args.model.as_deref())?;
    let red = Policy::Greedy(Arc::clone(&loaded.model));
    let blue = opponent_policy(&args.opponent, &loaded.model)?;
    let run = |red: &Policy| {
        let records = run_batch(red, &blue, &cfg.init, &loaded.sim, n, cfg.run.seed);
        summarize(red, &blue, &records, cfg.run.seed)
    };
    let trained = run(&red);
    let baseline = match &args.baseline {
        Some(spec) => Some(run(&opponent_policy(spec, &loaded.model)?)),
        None => None,
    };
    let difference = baseline.as_ref().map(|b| Comparison {
        red_win_rate: trained.red_win_rate - b.red_win_rate,
        mean_terminal_reward_red: trained.mean_terminal_reward_red - b.mean_terminal_reward_red,
    });
    let report = EvalReport {
        trained,
        baseline,
        difference,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn plot(cfg: RunConfig, args: PlotArgs, out: Option<PathBuf>) -> Result<()> {
    let file = File::open(&args.csv)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", args.csv.display())))?;
    let rows = read_trajectory(file).map_err(|e| Error::Format(format!("{}: {e}", args.csv.display())))?;
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: trajectory has no rows", args.csv.display())));
    }
    let outcome = infer_outcome(&rows, &cfg.reward, cfg.run.max_steps)
        .map_err(|e| Error::Format(format!("{}: {e}", args.csv.display())))?;
    let title = args.title.unwrap_or_else(|| {
        args.csv
            .file_stem()
            .map_or_else(|| "Engagement".into(), |s| s.to_string_lossy().into_owned())
    });
    let svg = render_svg(
        &rows,
        Some(outcome),
        &PlotOptions {
            title,
            ..Default::default()
        },
    );
    let path = out.unwrap_or_else(|| args.csv.with_extension("svg"));
    write_atomic(&path, svg.as_bytes())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
