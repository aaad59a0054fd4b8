mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pavenet::agent::{train_with, training_csv, TrainedModel};
use pavenet::experiments::{
    compare, compare_with_models, emit_report, emit_sweep_report, evaluate, gamma_sweep, Strategy,
};
use pavenet::netgen::generate;
use pavenet::plan::{simulate, PlanFile};
use pavenet::NetworkState;
use serde_json::json;

use config::Config;

#[derive(Parser)]
#[command(name = "pavenet", version, about = "Budget-constrained pavement maintenance planning")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Train a model bundle.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: TrainingFlags,
        /// Bundle directory (replaced if it exists).
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce a plan file for one strategy.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: String,
        /// Model bundle for dql and hybrid.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-simulate a plan file and report its metrics.
    Evaluate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        network: PathBuf,
        /// Per-year CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare strategies and write a report directory.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: TrainingFlags,
        /// Comma-separated strategy names.
        #[arg(long)]
        strategies: Option<String>,
        /// Use this bundle instead of training.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one agent per discount factor and write a report directory.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: TrainingFlags,
        /// Comma-separated discount factors.
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainingFlags {
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl TrainingFlags {
    fn apply(&self, cfg: &mut Config) {
        if let Some(e) = self.episodes {
            cfg.training.episodes = e;
        }
        if let Some(s) = self.seed {
            cfg.training.seed = s;
        }
        if let Some(g) = self.gamma {
            cfg.training.gamma = g;
        }
    }
}

/// Usage and configuration problems exit with 2, everything else with 1.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<pavenet::Error> for Failure {
    fn from(e: pavenet::Error) -> Self {
        match e {
            pavenet::Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

fn require(path: &Path, what: &str) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        usage(format!("{what} not found: {}", path.display()))
    }
}

fn load_config(path: Option<&Path>) -> Outcome<Config> {
    if let Some(p) = path {
        require(p, "config file")?;
    }
    Config::load_or_default(path).map_err(Failure::Usage)
}

fn load_network(flag: Option<&Path>, cfg: &Config) -> Outcome<NetworkState> {
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.network.path.clone())
        .map_or_else(|| usage("no network given (use --network or [network] path)"), Ok)?;
    require(&path, "network file")?;
    Ok(NetworkState::load(&path)?)
}

fn load_model(path: &Path) -> Outcome<TrainedModel> {
    require(path, "model bundle")?;
    Ok(TrainedModel::load(path)?)
}

fn effective_config(cfg: &Config) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn cmd_generate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    segments: Option<usize>,
    horizon: Option<usize>,
) -> Outcome {
    let mut cfg = load_config(Some(config))?;
    if let Some(s) = seed {
        cfg.generator.seed = s;
    }
    if let Some(n) = segments {
        cfg.generator.n_segments = n;
    }
    if let Some(h) = horizon {
        cfg.generator.horizon = h;
    }
    let net = generate(&cfg.generator)?;
    net.save(out)?;
    println!("segments: {}", net.len());
    println!("total area: {:.1} m2", net.total_area());
    println!("annual budget: {}", net.budgets[0]);
    println!("horizon: {} years", net.horizon);
    Ok(())
}

fn cmd_train(common: &Common, flags: &TrainingFlags, out: &Path) -> Outcome {
    let mut cfg = load_config(common.config.as_deref())?;
    flags.apply(&mut cfg);
    let net = load_network(common.network.as_deref(), &cfg)?;
    let episodes = cfg.training.episodes;
    let step = (episodes / 10).max(1);
    let (model, log) = train_with(&net, cfg.training.clone(), |l| {
        if (l.episode + 1) % step == 0 || l.episode + 1 == episodes {
            eprintln!(
                "episode {}/{episodes}: return {:.3}, q_loss {:.3e}, v_loss {:.3e}, epsilon {:.3}",
                l.episode + 1,
                l.episode_return,
                l.q_loss,
                l.v_loss,
                l.epsilon
            );
        }
    })?;
    let csv = training_csv(&log);
    let notes = json!({ "command": "train", "config": effective_config(&cfg) });
    model.save_with_files(out, notes, &[("training.csv", csv.as_bytes())])?;
    let (_, traj) = model.greedy_plan(&net)?;
    println!("model: {}", out.display());
    println!("greedy halos: {:.4}", traj.halos()?);
    println!("greedy ehlos: {:.4}", traj.ehlos()?);
    Ok(())
}

fn parse_strategy(name: &str) -> Outcome<Strategy> {
    name.parse::<Strategy>().map_err(Failure::from)
}

fn cmd_plan(common: &Common, strategy: &str, model: Option<&Path>, out: &Path) -> Outcome {
    let strategy = parse_strategy(strategy)?;
    let cfg = load_config(common.config.as_deref())?;
    let net = load_network(common.network.as_deref(), &cfg)?;
    let model = match (strategy.needs_model(), model) {
        (true, Some(p)) => Some(load_model(p)?),
        (true, None) => return usage(format!("strategy {} needs --model", strategy.name())),
        (false, _) => None,
    };
    let (plan, traj) = evaluate(strategy, &net, model.as_ref())?;
    let file = PlanFile::new(&plan, &net, &traj)?;
    file.save(out)?;
    println!("plan: {}", out.display());
    println!("halos: {:.4}", file.halos);
    println!("ehlos: {:.4}", file.ehlos);
    Ok(())
}

fn cmd_evaluate(plan_path: &Path, network: &Path, out: Option<&Path>) -> Outcome {
    require(plan_path, "plan file")?;
    require(network, "network file")?;
    let file = PlanFile::load(plan_path)?;
    let net = NetworkState::load(network)?;
    let ids: Vec<u64> = net.segments.iter().map(|s| s.id).collect();
    if ids != file.segment_ids {
        return Err(Failure::Runtime("plan segment ids do not match the network".into()));
    }
    let plan = file.to_plan()?;
    plan.validate(&net)?;
    let traj = simulate(&net, &plan)?;
    let los = traj.los_series()?;
    let halos = traj.halos()?;
    let ehlos = traj.ehlos()?;
    let drift = los
        .iter()
        .zip(&file.los)
        .map(|(a, b)| (a - b).abs())
        .fold((halos - file.halos).abs().max((ehlos - file.ehlos).abs()), f64::max);
    if los.len() != file.los.len() || drift > 1e-9 {
        return Err(Failure::Runtime(format!(
            "re-simulated trajectory differs from the stored one (max deviation {drift:e})"
        )));
    }
    if let Some(out) = out {
        let mut csv = String::from("year,los,rehab_cost,recon_cost\n");
        for (year, l) in los.iter().enumerate() {
            let (r, c) = if year == 0 {
                (0.0, 0.0)
            } else {
                let y = &plan.annual[year - 1];
                (y.rehab.dollars(), y.recon.dollars())
            };
            let _ = writeln!(csv, "{year},{l},{r:.2},{c:.2}");
        }
        pavenet::io::write_atomic(out, csv.as_bytes())?;
    }
    println!("strategy: {}", plan.strategy);
    println!("halos: {halos:.6}");
    println!("ehlos: {ehlos:.6}");
    println!("total spend: {}", plan.total_spend());
    println!("budget feasible: yes");
    Ok(())
}

fn print_summary(report: &pavenet::experiments::ComparisonReport) {
    println!("{:<16} {:>8} {:>8}", "strategy", "HALoS", "EHLoS");
    for r in &report.results {
        println!("{:<16} {:>8.4} {:>8.4}", r.strategy, r.halos, r.ehlos);
    }
}

fn cmd_compare(
    common: &Common,
    flags: &TrainingFlags,
    strategies: Option<&str>,
    model: Option<&Path>,
    runs: Option<usize>,
    out: &Path,
) -> Outcome {
    let mut cfg = load_config(common.config.as_deref())?;
    flags.apply(&mut cfg);
    if let Some(r) = runs {
        cfg.experiment.runs = r;
    }
    let list = match strategies {
        Some(s) => Strategy::parse_list(s)?,
        None => Strategy::parse_list(&cfg.experiment.strategies.join(","))?,
    };
    let net = load_network(common.network.as_deref(), &cfg)?;
    let mut report = match model {
        Some(p) => compare_with_models(&net, &list, &[load_model(p)?])?,
        None => compare(&net, &list, cfg.experiment.runs, &cfg.training)?,
    };
    report.manifest["config"] = effective_config(&cfg);
    emit_report(&report, out)?;
    print_summary(&report);
    println!("report: {}", out.display());
    Ok(())
}

fn parse_gammas(s: &str) -> Outcome<Vec<f64>> {
    s.split(',')
        .map(|g| {
            g.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("invalid discount factor '{}'", g.trim())))
        })
        .collect()
}

fn cmd_sweep(common: &Common, flags: &TrainingFlags, gammas: Option<&str>, out: &Path) -> Outcome {
    let mut cfg = load_config(common.config.as_deref())?;
    flags.apply(&mut cfg);
    if let Some(g) = gammas {
        cfg.experiment.gammas = parse_gammas(g)?;
    }
    let net = load_network(common.network.as_deref(), &cfg)?;
    let mut report = gamma_sweep(&net, &cfg.experiment.gammas, &cfg.training)?;
    report.manifest["config"] = effective_config(&cfg);
    emit_sweep_report(&report, out)?;
    println!("{:<8} {:>8} {:>8} {:>10}", "gamma", "HALoS", "EHLoS", "years 1-5");
    for e in &report.entries {
        println!(
            "{:<8} {:>8.4} {:>8.4} {:>10.4}",
            e.gamma,
            e.result.halos,
            e.result.ehlos,
            e.result.mean_los(1, 5)
        );
    }
    println!("report: {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Generate {
            config,
            out,
            seed,
            segments,
            horizon,
        } => cmd_generate(config, out, *seed, *segments, *horizon),
        Command::Train { common, training, out } => cmd_train(common, training, out),
        Command::Plan {
            common,
            strategy,
            model,
            out,
        } => cmd_plan(common, strategy, model.as_deref(), out),
        Command::Evaluate { plan, network, out } => cmd_evaluate(plan, network, out.as_deref()),
        Command::Compare {
            common,
            training,
            strategies,
            model,
            runs,
            out,
        } => cmd_compare(common, training, strategies.as_deref(), model.as_deref(), *runs, out),
        Command::Sweep {
            common,
            training,
            gammas,
            out,
        } => cmd_sweep(common, training, gammas.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
