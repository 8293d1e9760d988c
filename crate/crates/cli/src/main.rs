use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgforge_core::kgraph::{query, triples_tsv, OntologyClass, Query};
use kgforge_core::mentions::Role;
use kgforge_core::candidates::RelationType;
use kgforge_core::pipeline::stages::{files, read_graph, read_reports};
use kgforge_core::pipeline::{run_ablation, run_pipeline, synth_project, PipelineConfig, RunSummary, Stage, StageOutcome};
use kgforge_core::synth::SynthSpec;
use kgforge_core::evaluation::{ablation_csv, metrics_csv};
use kgforge_core::Error;

#[derive(Parser)]
#[command(name = "kgforge", version, about = "Build a probabilistic knowledge graph from incident reports")]
struct Cli {
    /// Log stage progress.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a configuration field, e.g. `--set supervision.mode=db-only`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load the corpus.
    Ingest(ConfigArgs),
    /// Tokenize, tag and lemmatize documents.
    Annotate(ConfigArgs),
    /// Extract mentions, relation candidates and features.
    Extract(ConfigArgs),
    /// Collect database and rule votes, resolve labels and split the corpus.
    Supervise(ConfigArgs),
    /// Train per-relation weights.
    Learn(ConfigArgs),
    /// Compute candidate marginals.
    Infer(ConfigArgs),
    /// Score the test split and print per-relation metrics.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Train and score every supervision mode and print F1 per mode.
        #[arg(long)]
        ablation: bool,
    },
    /// Print the calibration table.
    Calibrate(ConfigArgs),
    /// Build the knowledge graph; with filters, print matching triples.
    Export {
        #[command(flatten)]
        config: ConfigArgs,
        /// Keep triples of this relation type, e.g. `VictimAggressor`
        #[arg(long)]
        relation: Option<RelationType>,
        /// Keep triples with a node of this class or a subclass
        #[arg(long)]
        class: Option<OntologyClass>,
        /// Keep triples with a node in this role (`victim` or `aggressor`)
        #[arg(long, value_parser = parse_role)]
        role: Option<Role>,
        /// Keep triples at or above this probability
        #[arg(long)]
        min_prob: Option<f64>,
        /// Keep triples supported by this document
        #[arg(long)]
        doc: Option<String>,
    },
    /// Generate a synthetic corpus, gold labels, databases and a configuration.
    Synth {
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Generator settings (TOML); command-line values override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of documents
        #[arg(short, long)]
        n: Option<usize>,
        /// Fraction of documents mirrored into the databases
        #[arg(long)]
        db_coverage: Option<f64>,
        /// Generator seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every stage.
    Run(ConfigArgs),
}

fn parse_role(s: &str) -> Result<Role, String> {
    match s.to_ascii_lowercase().as_str() {
        "victim" => Ok(Role::Victim),
        "aggressor" => Ok(Role::Aggressor),
        other => Err(format!("unknown role `{other}` (victim, aggressor)")),
    }
}

fn load(args: &ConfigArgs) -> Result<PipelineConfig, Error> {
    PipelineConfig::load(&args.config, &args.overrides)
}

fn report(summary: &RunSummary) {
    for (stage, outcome) in &summary.outcomes {
        let word = match outcome {
            StageOutcome::Ran => "ran",
            StageOutcome::Skipped => "skipped",
        };
        eprintln!("{stage:<10} {word}");
    }
    eprintln!("outputs in {} (config {})", summary.output.display(), summary.config_hash);
}

fn stage_run(args: &ConfigArgs, until: Stage) -> Result<PipelineConfig, Error> {
    let config = load(args)?;
    report(&run_pipeline(&config, until)?);
    Ok(config)
}

fn print_file(path: &Path) -> Result<(), Error> {
    let text = kgforge_core::io::read_to_string(path)?;
    print!("{}", text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}

fn synth(out: &Path, spec: Option<&Path>, n: Option<usize>, db_coverage: Option<f64>, seed: u64) -> Result<(), Error> {
    let mut s = match spec {
        Some(p) => toml::from_str(&kgforge_core::io::read_to_string(p)?).map_err(|e| Error::Config(format!("synth spec: {e}")))?,
        None => SynthSpec::default(),
    };
    if let Some(n) = n {
        s.n_documents = n;
    }
    if let Some(c) = db_coverage {
        s.db_coverage = c;
    }
    let config = synth_project(out, &s, seed).map_err(|e| Error::Stage {
        stage: "synth".into(),
        message: e.to_string(),
    })?;
    eprintln!("wrote {} documents; configuration {}", s.n_documents, config.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(a) => stage_run(&a, Stage::Ingest).map(drop),
        Command::Annotate(a) => stage_run(&a, Stage::Annotate).map(drop),
        Command::Extract(a) => stage_run(&a, Stage::Features).map(drop),
        Command::Supervise(a) => stage_run(&a, Stage::Supervise).map(drop),
        Command::Learn(a) => stage_run(&a, Stage::Learn).map(drop),
        Command::Infer(a) => stage_run(&a, Stage::Infer).map(drop),
        Command::Eval { config, ablation } => {
            if ablation {
                let rows = run_ablation(&load(&config)?)?;
                print!("{}", ablation_csv(&rows));
            } else {
                let c = stage_run(&config, Stage::Evaluate)?;
                print!("{}", metrics_csv(&read_reports(&c)?));
            }
            Ok(())
        }
        Command::Calibrate(a) => {
            let c = stage_run(&a, Stage::Evaluate)?;
            print_file(&c.paths.output.join(files::CALIBRATION))
        }
        Command::Export { config, relation, class, role, min_prob, doc } => {
            let c = stage_run(&config, Stage::Export)?;
            let filter = Query { relation, class, role, min_prob, doc_id: doc };
            if filter != Query::default() {
                print!("{}", triples_tsv(&query(&read_graph(&c)?, &filter)));
            }
            Ok(())
        }
        Command::Synth { out, spec, n, db_coverage, seed } => synth(&out, spec.as_deref(), n, db_coverage, seed),
        Command::Run(a) => {
            let c = stage_run(&a, Stage::Export)?;
            print!("{}", metrics_csv(&read_reports(&c)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
