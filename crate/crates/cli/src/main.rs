use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use pbn_control::agent::{checkpoint, train, write_training_log, AgentConfig, TrainConfig};
use pbn_control::dynamics::{
    attractors, build_stg, strong_basins, weak_basin, Attractor, StateSet, DEFAULT_EXHAUSTIVE_LIMIT,
};
use pbn_control::env::{EnvConfig, Landmarks, RewardScheme};
use pbn_control::eval::{compare, evaluate, parse_eval_csv, write_eval_csv, write_histogram_csv, EvalConfig};
use pbn_control::model::load_model;
use pbn_control::oracle::{oracle_table, parse_oracle_csv, write_oracle_csv, ControlGraph};
use pbn_control::pasip::{precision, step1_scan, PaRegistry, PasipConfig};
use pbn_control::{rng_from_seed, AgentError, EvalError, ModelError, PbnModel};

#[derive(Parser)]
#[command(name = "pbnctl", version, about = "Attractor control of asynchronous (probabilistic) Boolean networks")]
struct Cli {
    /// Model file in the `.pbn` text format.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files; created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List attractors of the asynchronous state transition graph.
    Attractors,
    /// Weak and strong basin sizes per attractor.
    Basins,
    /// Simulation-based pseudo-attractor state scan.
    Pasip,
    /// Minimal guaranteed control for every ordered attractor pair.
    Oracle {
        #[arg(long, default_value_t = 3)]
        max_flips: usize,
    },
    /// Train a control agent.
    Train {
        #[arg(long, default_value_t = 50_000)]
        steps: u64,
        #[arg(long, default_value = "mixed")]
        reward: RewardScheme,
        #[arg(long, default_value_t = 3)]
        max_flips: usize,
        /// Where to write the trained network.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Greedy evaluation over all ordered pairs.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 3)]
        max_flips: usize,
        /// Registry written by `train` on large models; defaults to exact
        /// attractors when the state space can be enumerated.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Join an evaluation CSV with an oracle CSV into an overhead table.
    Compare {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        oracle: PathBuf,
    },
}

/// Exit status 2 for bad input, 3 for failures while running.
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn load(cli: &Cli) -> Result<PbnModel, Failure> {
    let path = cli.model.as_ref().ok_or_else(|| Failure::Validation(anyhow!("--model is required")))?;
    load_model(path).map_err(|e| match e {
        ModelError::Io(io) => Failure::Runtime(anyhow!(io).context(format!("reading {}", path.display()))),
        other => Failure::Validation(anyhow!(other).context(format!("loading {}", path.display()))),
    })
}

fn exact_attractors(model: &PbnModel) -> Result<(pbn_control::dynamics::Stg, Vec<Attractor>), Failure> {
    let stg = build_stg(model).map_err(|e| Failure::Validation(e.into()))?;
    let attrs = attractors(&stg);
    Ok((stg, attrs))
}

/// Writes `text` to `<out>/<name>` when `--out` is set, else to stdout.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn states_line(states: impl IntoIterator<Item = pbn_control::NetworkState>) -> String {
    states.into_iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Attractors => {
            let model = load(&cli)?;
            let (_, attrs) = exact_attractors(&model)?;
            let mut text = String::new();
            for a in &attrs {
                let kind = if a.is_fixed_point() { "fixed" } else { "cyclic" };
                text.push_str(&format!("A{}: {kind}: {}\n", a.id, states_line(a.states.iter().copied())));
            }
            emit(out, "attractors.txt", &text)?;
        }
        Command::Basins => {
            let model = load(&cli)?;
            let (stg, attrs) = exact_attractors(&model)?;
            let strong = strong_basins(&stg, &attrs);
            let mut text = String::from("attractor,weak_basin,strong_basin\n");
            for (a, s) in attrs.iter().zip(&strong) {
                text.push_str(&format!("A{},{},{}\n", a.id, weak_basin(&stg, a).len(), s.len()));
            }
            emit(out, "basins.csv", &text)?;
        }
        Command::Pasip => {
            let model = load(&cli)?;
            let registry = step1_scan(&model, &PasipConfig::default(), &mut rng_from_seed(cli.seed));
            let mut text = Vec::new();
            registry.write_to(&mut text)?;
            emit(out, "registry.txt", &String::from_utf8(text).expect("registry text is ASCII"))?;
            if model.gene_count() <= DEFAULT_EXHAUSTIVE_LIMIT {
                let (_, attrs) = exact_attractors(&model)?;
                let mut truth = StateSet::empty(model.gene_count());
                for s in attrs.iter().flat_map(|a| a.states.iter()) {
                    truth.insert_index(s.index() as usize);
                }
                let states: Vec<_> = registry.states().collect();
                if let Some(p) = precision(&states, &truth) {
                    eprintln!("registered {} states, precision {p:.4}", states.len());
                }
            }
        }
        Command::Oracle { max_flips } => {
            let model = load(&cli)?;
            let (stg, attrs) = exact_attractors(&model)?;
            let rows = oracle_table(&ControlGraph::new(&stg, &attrs, *max_flips));
            let k = attrs.len();
            if rows.len() < k * (k - 1) {
                eprintln!("warning: {} of {} ordered pairs are unreachable", k * (k - 1) - rows.len(), k * (k - 1));
            }
            emit(out, "oracle.csv", &write_oracle_csv(&rows))?;
        }
        Command::Train { steps, reward, max_flips, checkpoint: ckpt } => {
            let model = load(&cli)?;
            let mut rng = rng_from_seed(cli.seed);
            let (landmarks, registry) =
                Landmarks::prepare(&model, &PasipConfig::default(), DEFAULT_EXHAUSTIVE_LIMIT, &mut rng)?;
            let exact = !landmarks.grows();
            let config = TrainConfig {
                steps: *steps,
                agent: AgentConfig { max_flips: *max_flips, ..AgentConfig::default() },
                env: EnvConfig { reward: *reward, ..EnvConfig::default() },
                ..TrainConfig::default()
            };
            let outcome = train(&model, registry, landmarks, config, &mut rng).map_err(|e| match e {
                AgentError::TooFewLandmarks(_) | AgentError::Config(_) => Failure::Validation(e.into()),
                other => Failure::Runtime(other.into()),
            })?;
            checkpoint::save(&outcome.agent.online, ckpt)?;
            eprintln!("wrote {}", ckpt.display());
            emit(out, "training_log.csv", &write_training_log(&outcome.log))?;
            if !exact {
                let mut text = Vec::new();
                outcome.registry.write_to(&mut text)?;
                let dir = out.unwrap_or(Path::new("."));
                fs::create_dir_all(dir)?;
                fs::write(dir.join("registry.txt"), text)?;
            }
        }
        Command::Eval { checkpoint: ckpt, repeats, max_flips, registry } => {
            let model = load(&cli)?;
            let params = checkpoint::load(ckpt).map_err(|e| Failure::Validation(e.into()))?;
            let (landmarks, registry) = match registry {
                Some(path) => {
                    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                    let registry = PaRegistry::read_from(BufReader::new(file))
                        .map_err(|e| Failure::Validation(anyhow!(e).context(format!("reading {}", path.display()))))?;
                    (Landmarks::pseudo(&registry), registry)
                }
                None => Landmarks::prepare(
                    &model,
                    &PasipConfig::default(),
                    DEFAULT_EXHAUSTIVE_LIMIT,
                    &mut rng_from_seed(cli.seed),
                )?,
            };
            let config = EvalConfig {
                repeats: *repeats,
                seed: cli.seed,
                env: EnvConfig { max_flips: *max_flips, ..EnvConfig::default() },
                ..EvalConfig::default()
            };
            let report = evaluate(&params, &model, &registry, &landmarks, &config).map_err(|e| match e {
                EvalError::InputMismatch { .. } => Failure::Validation(e.into()),
                other => Failure::Runtime(other.into()),
            })?;
            emit(out, "eval.csv", &write_eval_csv(&report.rows))?;
            if out.is_some() {
                emit(out, "length_histogram.csv", &write_histogram_csv(&report.histogram()))?;
            }
            let mean = report.mean_length().map_or_else(|| "-".into(), |m| format!("{m:.3}"));
            eprintln!("success rate {:.1}%, mean successful length {mean}", 100.0 * report.success_rate());
        }
        Command::Compare { eval, oracle } => {
            let read = |p: &PathBuf| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
            let eval_rows = parse_eval_csv(&read(eval)?).map_err(|e| Failure::Validation(e.into()))?;
            let oracle_rows = parse_oracle_csv(&read(oracle)?)
                .map_err(|(line, msg)| Failure::Validation(anyhow!("{}: line {line}: {msg}", oracle.display())))?;
            let cmp = compare(&eval_rows, &oracle_rows);
            for w in &cmp.warnings {
                eprintln!("warning: {w}");
            }
            emit(out, "overhead.csv", &cmp.to_csv())?;
            if let (Some(a), Some(o)) = (cmp.mean_agent_length(), cmp.mean_oracle_length()) {
                eprintln!("mean agent length {a:.3}, mean oracle length {o:.3}");
            }
        }
    }
    Ok(())
}
