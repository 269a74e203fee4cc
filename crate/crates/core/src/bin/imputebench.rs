use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use imputebench::harness::{
    evaluate_imputations, generate_synthetic_population, impute_file, run_experiment, write_report_tables, ExperimentConfig, Profile,
    SyntheticPopulationSpec,
};
use imputebench::impute::{MethodConfig, MiceSettings};
use imputebench::inference::DEFAULT_CONFIDENCE;
use imputebench::tabular::{load_csv, save_csv, Schema, DEFAULT_BINS, DEFAULT_NA_TOKEN};

#[derive(Parser)]
#[command(version, about = "Multiple imputation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full repeated-sampling experiment
    Simulate(Common),
    /// Impute one CSV with one method
    Impute {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// mice-cart, mice-rf, gain, mida or mean-mode (ignored with --config)
        #[arg(long, default_value = "mice-cart")]
        method: String,
        #[arg(long, short = 'L', default_value_t = 5)]
        imputations: usize,
    },
    /// Score existing imputations against the unamputed data
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        amputed: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        imputed: Vec<PathBuf>,
        /// Population for the estimand values; defaults to the truth sample
        #[arg(long)]
        population: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
    /// Rebuild the quantile tables from a metrics_long.csv
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Write a synthetic population and its schema
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rows: Option<usize>,
    },
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load_json(path)?,
        None => ExperimentConfig::profile(common.profile.unwrap_or(Profile::Smoke)),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(threads) = common.threads {
        config.threads = threads;
    }
    if let Some(out) = &common.out {
        config.output = out.clone();
    }
    Ok(config)
}

fn out_dir(common: &Common, fallback: &str) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(fallback));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn method_by_name(name: &str) -> Result<MethodConfig> {
    Ok(match name {
        "mice-cart" => MethodConfig::MiceCart(MiceSettings::default()),
        "mice-rf" => MethodConfig::MiceRf(MiceSettings::default()),
        "gain" => MethodConfig::Gain(Default::default()),
        "mida" => MethodConfig::Mida(Default::default()),
        "mean-mode" => MethodConfig::MeanMode,
        other => bail!("unknown method {other:?}"),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(common) => {
            let config = experiment_config(&common)?;
            let outcome = run_experiment(&config)?;
            for m in &outcome.methods {
                let secs = outcome.mean_seconds(&m.method).unwrap_or(f64::NAN);
                println!("{:<12} samples {:>3}  {:.3} s/sample", m.method, m.completed_simulations, secs);
            }
            for f in &outcome.failures {
                eprintln!("failed: {} sample {}: {}", f.method, f.simulation, f.error);
            }
            println!("wrote {} files to {}", outcome.files.len() + 1, config.output.display());
        }
        Command::Impute {
            common,
            data,
            schema,
            method,
            imputations,
        } => {
            let method: MethodConfig = match &common.config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => method_by_name(&method)?,
            };
            let output = impute_file(&data, &schema, &method, imputations, common.seed.unwrap_or(0))?;
            let dir = out_dir(&common, "out/impute")?;
            for (l, d) in output.datasets.iter().enumerate() {
                save_csv(d, dir.join(format!("imputed_{l:02}.csv")), DEFAULT_NA_TOKEN)?;
            }
            for (name, trace) in &output.traces {
                trace.save_csv(dir.join(format!("loss_{name}.csv")))?;
            }
            println!("wrote {} imputations to {}", output.datasets.len(), dir.display());
        }
        Command::Evaluate {
            common,
            schema,
            truth,
            amputed,
            imputed,
            population,
            bins,
        } => {
            let schema = Arc::new(Schema::load_json(&schema)?);
            let load = |p: &PathBuf| load_csv(p, schema.clone(), DEFAULT_NA_TOKEN);
            let imputed = imputed.iter().map(load).collect::<Result<Vec<_>, _>>()?;
            let population = population.as_ref().map(load).transpose()?;
            let (scores, errors) = evaluate_imputations(&load(&truth)?, &load(&amputed)?, &imputed, population.as_ref(), bins, DEFAULT_CONFIDENCE)?;
            let dir = out_dir(&common, "out/evaluate")?;
            let mut w = csv::Writer::from_path(dir.join("estimates.csv"))?;
            for s in &scores {
                w.serialize(s)?;
            }
            w.flush()?;
            let mut w = csv::Writer::from_path(dir.join("rmse_accuracy.csv"))?;
            w.write_record(["imputation", "rmse", "accuracy"])?;
            let fmt = |v: &Option<f64>| v.map_or(String::new(), |x| x.to_string());
            for (l, (rmse, acc)) in errors.iter().enumerate() {
                w.write_record([l.to_string(), fmt(rmse), fmt(acc)])?;
            }
            w.flush()?;
            let covered = scores.iter().filter(|s| s.covered).count();
            println!("{covered}/{} estimands covered; wrote {}", scores.len(), dir.display());
        }
        Command::Report { common, input } => {
            let dir = out_dir(&common, "out/report")?;
            let names = write_report_tables(&input, &dir)?;
            println!("wrote {} to {}", names.join(", "), dir.display());
        }
        Command::Synth { common, rows } => {
            let mut spec: SyntheticPopulationSpec = match &common.config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => SyntheticPopulationSpec::desk_default(10_000, 1),
            };
            if let Some(rows) = rows {
                spec.n_rows = rows;
            }
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let data = generate_synthetic_population(&spec)?;
            let dir = out_dir(&common, "out/synth")?;
            save_csv(&data, dir.join("population.csv"), DEFAULT_NA_TOKEN)?;
            data.schema().save_json(dir.join("schema.json"))?;
            println!("wrote {} rows to {}", data.n_rows(), dir.display());
        }
    }
    Ok(())
}
