use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semtrans_cli::commands::baseline::{run_baseline, Baseline};
use semtrans_cli::commands::edit::{edit_image, edit_queries, EDIT_METHOD};
use semtrans_cli::commands::evaluate::{evaluate, report_text};
use semtrans_cli::commands::fixtures::generate_fixtures;
use semtrans_cli::commands::queries::build_queries;
use semtrans_cli::commands::sweep::{sweep, SweepParam, SweepSpec};
use semtrans_cli::{CliError, Result, RunConfig, Session, CONFIG_ENV};
use semtrans_core::dataset::{load_clusters, ClusterRegistry, FixtureSpec, Split};

#[derive(Parser, Debug)]
#[command(name = "semtrans", version, about = "Text-driven semantic image translation experiments")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set hyperparams.steps=32`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Run directory (overrides `paths.output_dir`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Image index (overrides `paths.index`).
    #[arg(long, global = true)]
    index: Option<PathBuf>,

    /// Worker threads (overrides `workers`).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Edit one image, or every selected query when no image is given.
    Edit {
        #[arg(long, requires_all = ["source", "target"])]
        image: Option<PathBuf>,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        target: Option<String>,
        /// Output name for a single-image edit.
        #[arg(long, default_value = "edit")]
        name: String,
        /// Method name for batch edits; outputs go to `outputs/<method>/`.
        #[arg(long, default_value = EDIT_METHOD)]
        method: String,
    },
    /// Build the query set and its dev/test split.
    BuildQueries {
        /// Write only one split.
        #[arg(long)]
        split: Option<Split>,
    },
    /// Score the outputs of a method.
    Evaluate {
        #[arg(long, default_value = EDIT_METHOD)]
        method: String,
    },
    /// Run one hyper-parameter over a grid.
    Sweep {
        /// JSON sweep spec `{"param": ..., "values": [...]}`.
        #[arg(long, conflicts_with_all = ["param", "values"])]
        spec: Option<PathBuf>,
        #[arg(long, requires = "values")]
        param: Option<SweepParam>,
        /// Comma-separated grid.
        #[arg(long)]
        values: Option<String>,
    },
    /// Run a reference method: copy, encode or retrieve.
    Baseline {
        #[arg(long)]
        which: Baseline,
    },
    /// Generate a synthetic labelled image corpus.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FixtureSpec::default().val_per_label)]
        val_per_label: usize,
        #[arg(long, default_value_t = FixtureSpec::default().train_per_label)]
        train_per_label: usize,
        #[arg(long, default_value_t = FixtureSpec::default().size)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for assignment in &cli.overrides {
        config.set(assignment)?;
    }
    if let Some(dir) = &cli.output_dir {
        config.paths.output_dir = dir.clone();
    }
    if let Some(index) = &cli.index {
        config.paths.index = Some(index.clone());
    }
    if let Some(n) = cli.workers {
        config.workers = n;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    if let Command::Fixtures { out, val_per_label, train_per_label, size, seed } = &cli.command {
        config.validate()?;
        let registry = match &config.paths.registry {
            Some(p) => load_clusters(p)?,
            None => ClusterRegistry::shipped()?,
        };
        let spec = FixtureSpec {
            val_per_label: *val_per_label,
            train_per_label: *train_per_label,
            size: *size,
            seed: *seed,
        };
        let index = generate_fixtures(out, &registry, spec)?;
        println!("wrote {} labels to {}", index.validation.len(), out.join("index.json").display());
        return Ok(());
    }
    let session = Session::new(config)?;
    match cli.command {
        Command::Edit { image: Some(image), source, target, name, .. } => {
            let (source, target) = (source.expect("required by clap"), target.expect("required by clap"));
            for path in edit_image(&session, &image, &source, &target, &name)? {
                println!("{}", path.display());
            }
        }
        Command::Edit { image: None, method, .. } => {
            let n = edit_queries(&session, &method)?;
            println!("edited {n} queries into {}", session.output_dir().join("outputs").join(&method).display());
        }
        Command::BuildQueries { split } => {
            let (path, n) = build_queries(&session, split)?;
            println!("wrote {n} queries to {}", path.display());
        }
        Command::Evaluate { method } => {
            let report = evaluate(&session, &method)?;
            print!("{}", report_text(&report));
        }
        Command::Sweep { spec, param, values } => {
            let spec = match (spec, param, values) {
                (Some(path), _, _) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
                }
                (None, Some(param), Some(values)) => SweepSpec::from_list(param, &values),
                _ => return Err(CliError::Config("sweep needs --spec or --param with --values".into())),
            };
            for row in sweep(&session, &spec)? {
                match (&row.error, row.lpips_x100, row.accuracy_pct, row.csfid, row.sfid) {
                    (None, Some(l), Some(a), Some(c), Some(s)) => {
                        println!("{}={}: LPIPS {l:.2}  Acc.% {a:.2}  CSFID {c:.4}  SFID {s:.4}", row.param, row.value)
                    }
                    (err, ..) => println!("{}={}: failed: {}", row.param, row.value, err.as_deref().unwrap_or("?")),
                }
            }
        }
        Command::Baseline { which } => {
            let n = run_baseline(&session, which)?;
            println!("{which}: wrote {n} outputs");
        }
        Command::Fixtures { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
