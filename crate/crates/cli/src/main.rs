use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dwlab_cli::config::{ConfigInvalid, ExperimentConfig, ExperimentKind};
use dwlab_cli::output;

/// Exit statuses: success, failed verification, usage or config error.
const OK: u8 = 0;
const VERIFICATION_FAILED: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "dwlab", version, about = "Domain-wall and APS index experiments on finite lattices")]
struct Cli {
    /// Worker threads for scan points; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Root directory for run outputs, overriding `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KindArgs {
    /// Config file; the kind's defaults when omitted.
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaWhich {
    Config,
    Result,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Jackiw-Rebbi zero mode on a line.
    Jr(KindArgs),
    /// Spectral gap scan of the domain-wall torus.
    GapScan(KindArgs),
    /// Index against the eta difference of the two mass shifts.
    AsEta(KindArgs),
    /// Index of the cylinder extension.
    Product(KindArgs),
    /// APS index of the half torus.
    ApsIndex(KindArgs),
    /// Domain-wall eta plateau against the APS index.
    MainTheorem(KindArgs),
    /// Eigenvalue counts on two lines sharing a region.
    Excision(KindArgs),
    /// Eta invariance under smoothing of the wall.
    Smoothing(KindArgs),
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the JSON schemas of configs and results.
    Schema {
        #[arg(value_enum, default_value_t = SchemaWhich::All)]
        which: SchemaWhich,
    },
    /// Print the catalog of experiment kinds as JSON.
    ListExperiments,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ConfigInvalid> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigInvalid(vec![format!("{}: {e}", path.display())]))?;
    ExperimentConfig::from_toml_str(&text)
}

fn load_for_kind(kind: ExperimentKind, args: &KindArgs) -> Result<ExperimentConfig, ConfigInvalid> {
    match &args.config {
        None => Ok(ExperimentConfig::defaults(kind)),
        Some(p) => {
            let cfg = load(p)?;
            if cfg.kind != kind {
                return Err(ConfigInvalid(vec![format!("kind: config is `{}` but the subcommand is `{kind}`", cfg.kind)]));
            }
            Ok(cfg)
        }
    }
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(mut cfg: ExperimentConfig, out: Option<PathBuf>) -> u8 {
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    let (result, tables) = output::execute(&cfg);
    let dir = match output::persist(&result, &tables) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("cannot write results under {}: {e}", cfg.output_dir.display());
            return USAGE;
        }
    };
    for e in &result.ledger {
        println!("{} {}{}", if e.passed { "PASS" } else { "FAIL" }, e.name, if e.detail.is_empty() { String::new() } else { format!(": {}", e.detail) });
    }
    println!("{} {} -> {}", cfg.kind, if result.passed { "passed" } else { "FAILED" }, dir.display());
    if result.passed {
        OK
    } else {
        VERIFICATION_FAILED
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("cannot size the worker pool: {e}");
            return ExitCode::from(USAGE);
        }
    }
    let kind_cmd = |kind, args: &KindArgs| load_for_kind(kind, args);
    let loaded = match &cli.command {
        Command::Run { config } => load(config),
        Command::Jr(a) => kind_cmd(ExperimentKind::Jr, a),
        Command::GapScan(a) => kind_cmd(ExperimentKind::GapScan, a),
        Command::AsEta(a) => kind_cmd(ExperimentKind::AsEta, a),
        Command::Product(a) => kind_cmd(ExperimentKind::Product, a),
        Command::ApsIndex(a) => kind_cmd(ExperimentKind::ApsIndex, a),
        Command::MainTheorem(a) => kind_cmd(ExperimentKind::MainTheorem, a),
        Command::Excision(a) => kind_cmd(ExperimentKind::Excision, a),
        Command::Smoothing(a) => kind_cmd(ExperimentKind::Smoothing, a),
        Command::Validate { config } => {
            return ExitCode::from(match load(config) {
                Ok(cfg) => {
                    println!("valid {} config, hash {}", cfg.kind, cfg.hash());
                    OK
                }
                Err(e) => {
                    eprint!("{e}");
                    USAGE
                }
            });
        }
        Command::Schema { which } => {
            let all = output::schemas();
            match which {
                SchemaWhich::Config => print_json(&all["config"]),
                SchemaWhich::Result => print_json(&all["result"]),
                SchemaWhich::All => print_json(&all),
            }
            return ExitCode::from(OK);
        }
        Command::ListExperiments => {
            print_json(&output::catalog());
            return ExitCode::from(OK);
        }
    };
    match loaded {
        Ok(cfg) => ExitCode::from(run(cfg, cli.out)),
        Err(e) => {
            eprint!("{e}");
            ExitCode::from(USAGE)
        }
    }
}
