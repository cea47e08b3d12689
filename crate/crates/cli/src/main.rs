mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qwalk::bosonic::{build_hamiltonian_with_cap, evolve_ct, fock_pair_probability, occupation_distribution, FockState};
use qwalk::dataset::{load_tudataset, split_dataset, Dataset};
use qwalk::diffusion::{Model, ModelConfig};
use qwalk::graph::{line_center, line_graph};
use qwalk::training::{check_dataset, evaluate, run_gradcheck, train_loop, GradcheckSpec, TrainConfig, GRAD_TOL};
use qwalk::walk::{
    build_shift, classical_step, coin_registry, evolve, init_state, measure_positions, CoinBank, DEFAULT_LATTICE_COIN,
};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "qwalk", version, about = "Quantum walk simulators and quantum-walk diffusion networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WalkKind {
    Classical,
    Quantum,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON run config; omitted keys come from its `profile` (default: "default").
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set walk_length=4` or `--set caps.max_nodes=30`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Walker started at the center of a path graph; writes dist.csv.
    Simulate {
        #[arg(long, value_enum)]
        kind: WalkKind,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        steps: usize,
        /// Reference coin for the quantum walk.
        #[arg(long, default_value = DEFAULT_LATTICE_COIN)]
        coin: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two bosons on the center of a path graph under the interacting
    /// hopping Hamiltonian for time `steps`; writes dist.csv and pairs.csv.
    SimulateBosonic {
        #[arg(long)]
        length: usize,
        #[arg(long)]
        steps: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        energy: f64,
        /// Largest Fock basis to build.
        #[arg(long, default_value_t = qwalk::bosonic::DEFAULT_BASIS_CAP)]
        max_states: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analytic gradients against central differences on random small cases.
    Gradcheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Train on the configured dataset; writes report.json, loss.csv and model.json.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved model on the configured dataset split.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: EvalSplit,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSplit {
    Train,
    Test,
    All,
}

/// Usage and config problems exit 2, everything that fails while running exits 1.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<qwalk::Error> for Failure {
    fn from(e: qwalk::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Simulate {
            kind,
            length,
            steps,
            coin,
            out,
        } => simulate(kind, length, steps, &coin, &out),
        Command::SimulateBosonic {
            length,
            steps,
            energy,
            max_states,
            out,
        } => simulate_bosonic(length, steps, energy, max_states, &out),
        Command::Gradcheck { cfg, corrupt_gradient } => gradcheck(&cfg, corrupt_gradient),
        Command::Train { cfg, out } => train(&cfg, out),
        Command::Eval { cfg, model, split } => eval(&cfg, &model, split),
    };
    match result {
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

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    config::load(args.config.as_deref(), &args.set).map_err(Failure::Usage)
}

fn simulate(kind: WalkKind, length: usize, steps: usize, coin: &str, out: &Path) -> CmdResult {
    let g = line_graph(length).map_err(|e| Failure::Usage(e.to_string()))?;
    let c = line_center(length);
    let dist = match kind {
        WalkKind::Classical => {
            let mut p = vec![0.0; length];
            p[c] = 1.0;
            for _ in 0..steps {
                p = classical_step(&g, &p);
            }
            p
        }
        WalkKind::Quantum => {
            let reg = coin_registry();
            let coin = reg
                .get(coin)
                .and_then(|c| c.matrix(2))
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let coins = CoinBank::uniform(&coin, length, steps)?;
            let shift = build_shift(&g, 2)?;
            measure_positions(&evolve(&init_state(&g, c, 2)?, &coins, &shift, steps)?)
        }
    };
    output::write_distribution(out, &dist)
}

fn simulate_bosonic(length: usize, time: f64, energy: f64, cap: usize, out: &Path) -> CmdResult {
    let g = line_graph(length).map_err(|e| Failure::Usage(e.to_string()))?;
    if !(time >= 0.0 && time.is_finite()) || !energy.is_finite() {
        return Err(Failure::Usage("steps must be a finite non-negative time and energy finite".into()));
    }
    let h = build_hamiltonian_with_cap(&g, energy, 2, cap)?;
    let mut occ = vec![0u32; length];
    occ[line_center(length)] = 2;
    let s0 = FockState::occupation(h.basis().clone(), &occ)?;
    let st = evolve_ct(&h, &s0, time)?;
    output::write_distribution(out, &occupation_distribution(&st)?)?;
    output::write_pairs(out, &fock_pair_probability(&st)?)
}

fn gradcheck(args: &ConfigArgs, corrupt: bool) -> CmdResult {
    let cfg = load_config(args)?;
    let s = &cfg.gradcheck;
    let spec = GradcheckSpec {
        mode: cfg.mode.clone(),
        cases: s.cases,
        seed: cfg.seed,
        max_nodes: s.max_nodes,
        max_steps: s.max_steps,
        hidden: s.hidden,
        feature_dim: s.feature_dim,
        layers: s.layers,
        scale: s.scale,
    };
    let outcome = run_gradcheck(&spec, corrupt)?;
    if outcome.params_checked == 0 {
        println!("gradcheck {}: no parameters to check; nothing to compare", spec.mode);
        return Ok(());
    }
    println!(
        "gradcheck {}: {} cases, {} parameters, max relative error {:.3e} (tolerance {GRAD_TOL:e})",
        outcome.mode,
        outcome.cases,
        outcome.params_checked,
        outcome.max_error()
    );
    if outcome.passed() {
        Ok(())
    } else {
        let (case, param, err) = outcome.worst.expect("a failure has a worst entry");
        Err(Failure::Runtime(format!(
            "gradient mismatch in case {case}, parameter index {param}: relative error {err:.3e}"
        )))
    }
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, Failure> {
    Ok(load_tudataset(&cfg.dataset.path, &cfg.dataset.name)?)
}

fn model_config(cfg: &RunConfig, d: &Dataset) -> ModelConfig {
    ModelConfig {
        mode: cfg.mode.clone(),
        walk_length: cfg.walk_length,
        hidden: cfg.hidden,
        pooling: cfg.pooling,
        layers: cfg.layers,
        coin_dim: d.max_degree().max(1),
        feature_dim: d.feature_dim(),
        task: d.task(),
    }
}

fn train(args: &ConfigArgs, out: Option<PathBuf>) -> CmdResult {
    let cfg = load_config(args)?;
    let out = out.unwrap_or_else(|| cfg.out.clone());
    let data = load_dataset(&cfg)?;
    let model = Model::new(model_config(&cfg, &data), cfg.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    check_dataset(&model, &data, &cfg.caps)?;
    let (train, test) = split_dataset(&data, cfg.split, cfg.seed)?;
    let tc = TrainConfig {
        epochs: cfg.epochs,
        lr: cfg.lr,
        seed: cfg.seed,
        caps: cfg.caps,
    };
    let (model, mut report) = train_loop(model, &train, &test, &tc)?;
    output::ensure_dir(&out)?;
    let ckpt = out.join("model.json");
    model.save(&ckpt)?;
    report.checkpoint = Some(ckpt);
    output::write_text(&out.join("report.json"), &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    output::write_text(&out.join("loss.csv"), &report.loss_csv())?;
    println!(
        "trained {} on {} graphs: train loss {:.4} -> {:.4}, test {:?}",
        report.mode,
        report.train_graphs,
        report.initial_train_loss,
        report.final_train_loss(),
        report.final_metric()
    );
    Ok(())
}

fn eval(args: &ConfigArgs, model_path: &Path, split: EvalSplit) -> CmdResult {
    let cfg = load_config(args)?;
    let model = Model::load(model_path)?;
    let data = load_dataset(&cfg)?;
    let (train, test) = split_dataset(&data, cfg.split, cfg.seed)?;
    let d = match split {
        EvalSplit::Train => train,
        EvalSplit::Test => test,
        EvalSplit::All => data,
    };
    let metric = evaluate(&model, &d)?;
    println!("{}", serde_json::json!({ "graphs": d.len(), "metric": metric }));
    Ok(())
}
