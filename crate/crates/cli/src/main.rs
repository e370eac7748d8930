use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nidsx_core::data::synthetic::write_synthetic;
use nidsx_core::nn::ModelFamily;
use nidsx_core::pipeline::{Pipeline, PipelineConfig, StageOutcome};
use nidsx_core::survey::{alpha_report, parse_responses_csv, InstrumentSet};
use nidsx_service::ServiceConfig;

/// Explainable intrusion detection on NSL-KDD: data preparation, CNN/LSTM
/// training, evaluation, Shapley explanations, reporting, survey analytics
/// and the study API server.
#[derive(Debug, Parser)]
#[command(name = "nidsx", version)]
struct Cli {
    /// Pipeline config (TOML). Built-in defaults apply when omitted.
    #[arg(long, global = true, env = "NIDSX_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true, env = "NIDSX_OUT")]
    out: Option<PathBuf>,
    /// Seed for splitting, initialisation, shuffling and sampling.
    #[arg(long, global = true, env = "NIDSX_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the effective pipeline config as TOML.
    Config,
    /// Write a synthetic NSL-KDD-formatted file for trials without the dataset.
    SynthData {
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 5000)]
        rows: usize,
    },
    /// Parse, label, encode, split and scale the training file.
    PrepareData {
        /// NSL-KDD file; overrides `data.train_path`.
        #[arg(long, env = "NIDSX_DATA")]
        data: Option<PathBuf>,
    },
    /// Train one model family, or every configured one.
    Train {
        #[arg(long)]
        model: Option<ModelFamily>,
    },
    /// Score trained models on the test partition.
    Evaluate {
        #[arg(long)]
        model: Option<ModelFamily>,
    },
    /// Compute Shapley attributions for a sample of test rows.
    Explain {
        #[arg(long)]
        model: Option<ModelFamily>,
    },
    /// Write tables, ROC CSVs and a combined JSON report.
    Report,
    /// Run every stage in order.
    Run {
        #[arg(long, env = "NIDSX_DATA")]
        data: Option<PathBuf>,
    },
    /// Cronbach's alpha per construct for survey responses in CSV form.
    Alpha {
        #[arg(long)]
        responses: PathBuf,
        /// Instrument definitions (JSON); built-in set when omitted.
        #[arg(long)]
        instruments: Option<PathBuf>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Serve the JSON API (and UI assets, if configured).
    Serve {
        #[arg(long, env = "NIDSX_PORT")]
        port: Option<u16>,
        /// Service config (TOML); `NIDSX_*` variables override it.
        #[arg(long)]
        service_config: Option<PathBuf>,
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

impl Cli {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

fn models(pipeline: &Pipeline, model: Option<ModelFamily>) -> Vec<ModelFamily> {
    model.map(|m| vec![m]).unwrap_or_else(|| pipeline.config.models.clone())
}

fn print(outcome: &StageOutcome) {
    print!("{}", outcome.summary);
    let m = &outcome.manifest;
    let model = m.model.as_deref().map(|s| format!(" {s}")).unwrap_or_default();
    println!("[{}{model}] {:.1}s, config {}", m.stage, m.duration_seconds, &m.config_hash[..12]);
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut config = cli.pipeline_config()?;
    match cli.command {
        Command::Config => print!("{}", config.to_toml()),
        Command::SynthData { path, rows } => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            write_synthetic(&path, rows, config.seed).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {rows} synthetic records to {}", path.display());
        }
        Command::PrepareData { data } => {
            if let Some(d) = data {
                config.data.train_path = d;
            }
            print(&Pipeline::new(config)?.prepare_data()?);
        }
        Command::Train { model } => {
            let p = Pipeline::new(config)?;
            for m in models(&p, model) {
                print(&p.train_model(m)?);
            }
        }
        Command::Evaluate { model } => {
            let p = Pipeline::new(config)?;
            for m in models(&p, model) {
                print(&p.evaluate_model(m)?);
            }
        }
        Command::Explain { model } => {
            let p = Pipeline::new(config)?;
            for m in models(&p, model) {
                print(&p.explain_model(m)?);
            }
        }
        Command::Report => print(&Pipeline::new(config)?.report()?),
        Command::Run { data } => {
            if let Some(d) = data {
                config.data.train_path = d;
            }
            for outcome in Pipeline::new(config)?.run_all()? {
                print(&outcome);
            }
        }
        Command::Alpha { responses, instruments, json } => {
            let set = match instruments {
                Some(p) => InstrumentSet::from_json(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
                None => InstrumentSet::default(),
            };
            let file = std::fs::File::open(&responses).with_context(|| format!("opening {}", responses.display()))?;
            let parsed = parse_responses_csv(std::io::BufReader::new(file), &set)?;
            if parsed.is_empty() {
                bail!("{} holds no responses", responses.display());
            }
            let report = alpha_report(&parsed, &set)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::Serve { port, service_config, static_dir } => {
            let mut service = match service_config {
                Some(p) => ServiceConfig::load(&p)?,
                None => ServiceConfig {
                    store_path: config.out_dir.join("sessions.jsonl"),
                    artifacts_dir: config.out_dir.clone(),
                    ..Default::default()
                },
            };
            service = service.apply_env(std::env::vars())?;
            if let Some(port) = port {
                service.port = port;
            }
            if static_dir.is_some() {
                service.static_dir = static_dir;
            }
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(nidsx_service::serve(service))?;
        }
    }
    Ok(())
}

