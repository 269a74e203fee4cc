//! The repeated-sampling experiment: population estimands, per-sample
//! amputation, imputation and pooling, then metric reports on disk.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::impute::MethodConfig;
use crate::inference::{enumerate_estimands, estimate_all, pool, Estimand, EstimandOptions, PointEstimate};
use crate::metrics::{evaluate, overall_accuracy, overall_rmse, weighted_absolute_bias, MetricReport, SimulationEstimate};
use crate::missingness::{apply_mar, apply_mcar, MarConfig};
use crate::nn::LossTrace;
use crate::rng::SeedStream;
use crate::tabular::{draw_sample, load_csv, merge_rare_levels_all, save_csv, Binning, Column, Dataset, Schema, DEFAULT_NA_TOKEN};

use super::config::{ExperimentConfig, MethodEntry, MissingnessConfig, PopulationSource};
use super::report::{report_tables, write_long_csv, LongRow};
use super::synth::generate_synthetic_population;

/// The population with its binning and estimands.
#[derive(Clone, Debug)]
pub struct Population {
    pub data: Dataset,
    pub binning: Binning,
    pub binned: Dataset,
    pub estimands: Vec<Estimand>,
}

impl Population {
    pub fn new(data: Dataset, bins: usize, sample_size: usize, options: &EstimandOptions) -> Result<Self> {
        let binning = Binning::fit(&data, bins)?;
        let binned = binning.apply(&data)?;
        let estimands = enumerate_estimands(&binned, Some(&binning), sample_size, options)?;
        if estimands.is_empty() {
            return Err(Error::Config(format!("no estimand passes the level screen at n = {sample_size}")));
        }
        Ok(Population {
            data,
            binning,
            binned,
            estimands,
        })
    }

    /// Level shares of every binned variable.
    pub fn marginal_shares(&self) -> Vec<Vec<f64>> {
        marginal_shares(&self.binned)
    }
}

fn marginal_shares(binned: &Dataset) -> Vec<Vec<f64>> {
    let n = binned.n_rows() as f64;
    binned
        .schema()
        .variables
        .iter()
        .zip(binned.columns())
        .map(|(var, column)| {
            let mut counts = vec![0usize; var.n_levels()];
            if let Column::Discrete(v) = column {
                for &x in v {
                    counts[x as usize] += 1;
                }
            }
            counts.into_iter().map(|c| c as f64 / n).collect()
        })
        .collect()
}

pub fn load_population(source: &PopulationSource, min_level_count: Option<usize>) -> Result<Dataset> {
    let data = match source {
        PopulationSource::Csv { path, schema, na_token } => {
            for p in [path, schema] {
                if !p.exists() {
                    return Err(Error::Config(format!("{} does not exist", p.display())));
                }
            }
            load_csv(path, Arc::new(Schema::load_json(schema)?), na_token)?
        }
        PopulationSource::Synthetic(spec) => generate_synthetic_population(spec)?,
    };
    if !data.is_fully_observed() {
        return Err(Error::Dataset("the population must be fully observed".into()));
    }
    match min_level_count {
        Some(k) => merge_rare_levels_all(&data, k),
        None => Ok(data),
    }
}

/// One simulated sample: the truth, its amputed copy and the
/// before-amputation estimates.
#[derive(Clone, Debug)]
pub struct SimulationData {
    pub sample: Dataset,
    pub amputed: Dataset,
    pub q_hat: Vec<PointEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellFailure {
    pub method: String,
    pub simulation: usize,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellTiming {
    pub method: String,
    pub simulation: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
struct CellOutput {
    estimates: Vec<SimulationEstimate>,
    rmse: Vec<Option<f64>>,
    accuracy: Vec<Option<f64>>,
    shares: Vec<Vec<f64>>,
    traces: Vec<(String, LossTrace)>,
    imputations: Vec<Dataset>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub completed_simulations: usize,
    pub mean_rmse: Option<f64>,
    pub mean_accuracy: Option<f64>,
    /// `(variable, Σ_k Q_k |q̄_k − Q_k|)` with `q̄` averaged over samples.
    pub weighted_bias: Vec<(String, f64)>,
    pub report: Option<MetricReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub methods: Vec<MethodSummary>,
    pub failures: Vec<CellFailure>,
    pub timings: Vec<CellTiming>,
    /// Paths written, relative to the output directory.
    pub files: Vec<String>,
}

impl ExperimentOutcome {
    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == label)
    }

    /// Mean wall-clock seconds per sample for `label`.
    pub fn mean_seconds(&self, label: &str) -> Option<f64> {
        let t: Vec<f64> = self.timings.iter().filter(|t| t.method == label).map(|t| t.seconds).collect();
        (!t.is_empty()).then(|| t.iter().sum::<f64>() / t.len() as f64)
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Seeds: experiment → simulation `h` → method label, so adding or removing
/// a method leaves the others' draws untouched.
fn simulation_stream(root: SeedStream, h: usize) -> SeedStream {
    root.named("simulation").child(h as u64)
}

pub fn simulate_sample(population: &Population, config: &ExperimentConfig, mar: Option<&MarConfig>, h: usize) -> Result<SimulationData> {
    let stream = simulation_stream(SeedStream::new(config.seed), h);
    let sample = draw_sample(&population.data, config.sample_size, &mut stream.named("sample").rng())?;
    let q_hat = estimate_all(&population.binning.apply(&sample)?, &population.estimands)?;
    let mut rng = stream.named("missingness").rng();
    let amputed = match (&config.missingness, mar) {
        (MissingnessConfig::Mcar { rate }, _) => apply_mcar(&sample, *rate, &mut rng)?,
        (_, Some(design)) => apply_mar(&sample, design, &mut rng)?,
        (_, None) => return Err(Error::Config("MAR design missing".into())),
    };
    Ok(SimulationData { sample, amputed, q_hat })
}

fn score_imputations(population: &Population, sim: &SimulationData, datasets: &[Dataset], confidence: f64) -> Result<CellOutput> {
    let per_dataset: Vec<Vec<PointEstimate>> = datasets
        .iter()
        .map(|d| estimate_all(&population.binning.apply(d)?, &population.estimands))
        .collect::<Result<_>>()?;
    let estimates = (0..population.estimands.len())
        .map(|e| {
            let column: Vec<PointEstimate> = per_dataset.iter().map(|d| d[e]).collect();
            let pooled = pool(&column, confidence)?;
            Ok(SimulationEstimate {
                q_bar: pooled.q_bar,
                q_hat: sim.q_hat[e].q,
                ci_low: pooled.ci_low,
                ci_high: pooled.ci_high,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut shares: Option<Vec<Vec<f64>>> = None;
    for d in datasets {
        let s = marginal_shares(&population.binning.apply(d)?);
        match &mut shares {
            None => shares = Some(s),
            Some(acc) => acc.iter_mut().flatten().zip(s.iter().flatten()).for_each(|(a, b)| *a += b),
        }
    }
    let l = datasets.len() as f64;
    let mut shares = shares.unwrap_or_default();
    shares.iter_mut().flatten().for_each(|a| *a /= l);
    Ok(CellOutput {
        estimates,
        rmse: datasets.iter().map(|d| overall_rmse(&sim.sample, &sim.amputed, d).ok()).collect(),
        accuracy: datasets.iter().map(|d| overall_accuracy(&sim.sample, &sim.amputed, d).ok()).collect(),
        shares,
        traces: Vec::new(),
        imputations: Vec::new(),
    })
}

fn run_cell(method: &MethodEntry, population: &Population, sim: &SimulationData, config: &ExperimentConfig, h: usize) -> Result<CellOutput> {
    let stream = simulation_stream(SeedStream::new(config.seed), h).named("method").named(method.label());
    let output = method.config.impute(&sim.amputed, config.n_imputations, &mut stream.rng())?;
    let mut cell = score_imputations(population, sim, &output.datasets, config.confidence)?;
    cell.traces = output.traces;
    if config.save_imputations {
        cell.imputations = output.datasets;
    }
    Ok(cell)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_string())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct EstimandRow {
    estimand: String,
    class: String,
    population_value: f64,
}

#[derive(Serialize)]
struct WeightedBiasRow {
    method: String,
    variable: String,
    weighted_bias: f64,
}

struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    fn path(&mut self, relative: &str) -> Result<PathBuf> {
        let p = self.root.join(relative);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.files.push(relative.to_string());
        Ok(p)
    }

    fn write(&mut self, relative: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let p = self.path(relative)?;
        std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))
    }

    fn csv<S: Serialize>(&mut self, relative: &str, rows: impl IntoIterator<Item = S>) -> Result<()> {
        let p = self.path(relative)?;
        let mut w = csv::Writer::from_path(&p)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(&p, e))
    }
}

/// Runs the experiment and writes its reports under `config.output`.
/// A failing (sample, method) cell is recorded and skipped.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let pool_builder = rayon::ThreadPoolBuilder::new().num_threads(config.threads);
    let threads = pool_builder.build().map_err(|e| Error::Config(e.to_string()))?;
    threads.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let population = Population::new(
        load_population(&config.population, config.min_level_count)?,
        config.bins,
        config.sample_size,
        &config.estimands,
    )?;
    let root = SeedStream::new(config.seed);
    let mar = match &config.missingness {
        MissingnessConfig::Mcar { .. } => None,
        MissingnessConfig::Mar(design) => {
            design.validate(population.data.schema())?;
            Some(design.clone())
        }
        MissingnessConfig::MarRandom {
            conditioning_variables,
            group_sizes,
            target_rate,
        } => Some(MarConfig::random(
            population.data.schema(),
            conditioning_variables.clone(),
            group_sizes,
            *target_rate,
            &mut root.named("mar-design").rng(),
        )?),
    };

    let simulations: Vec<SimulationData> = (0..config.simulations)
        .into_par_iter()
        .map(|h| simulate_sample(&population, config, mar.as_ref(), h))
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..config.simulations).flat_map(|h| (0..config.methods.len()).map(move |m| (h, m))).collect();
    let results: Vec<(usize, usize, f64, std::result::Result<CellOutput, String>)> = cells
        .par_iter()
        .map(|&(h, m)| {
            let start = Instant::now();
            let outcome = catch_unwind(AssertUnwindSafe(|| run_cell(&config.methods[m], &population, &simulations[h], config, h)));
            let seconds = start.elapsed().as_secs_f64();
            let outcome = match outcome {
                Ok(Ok(cell)) => Ok(cell),
                Ok(Err(e)) => Err(e.to_string()),
                Err(payload) => Err(format!("panicked: {}", panic_message(payload))),
            };
            (h, m, seconds, outcome)
        })
        .collect();

    write_outputs(config, &population, mar.as_ref(), &results)
}

fn write_outputs(
    config: &ExperimentConfig,
    population: &Population,
    mar: Option<&MarConfig>,
    results: &[(usize, usize, f64, std::result::Result<CellOutput, String>)],
) -> Result<ExperimentOutcome> {
    let mut out = OutputDir {
        root: config.output.clone(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(&out.root).map_err(|e| Error::io(&out.root, e))?;
    let labels = config.labels();
    let truths = population.marginal_shares();
    let names = population.data.schema().names();

    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut by_method: BTreeMap<usize, Vec<(usize, &CellOutput)>> = BTreeMap::new();
    for (h, m, seconds, outcome) in results {
        timings.push(CellTiming {
            method: labels[*m].to_string(),
            simulation: *h,
            seconds: *seconds,
        });
        match outcome {
            Ok(cell) => by_method.entry(*m).or_default().push((*h, cell)),
            Err(error) => failures.push(CellFailure {
                method: labels[*m].to_string(),
                simulation: *h,
                error: error.clone(),
            }),
        }
    }

    let mut long_rows = Vec::new();
    let mut accuracy_rows = Vec::new();
    let mut summaries = Vec::new();
    for (m, label) in labels.iter().enumerate() {
        let cells = by_method.get(&m).map(Vec::as_slice).unwrap_or(&[]);
        let mut summary = MethodSummary {
            method: label.to_string(),
            completed_simulations: cells.len(),
            mean_rmse: mean_of(cells.iter().flat_map(|(_, c)| c.rmse.iter().flatten().copied())),
            mean_accuracy: mean_of(cells.iter().flat_map(|(_, c)| c.accuracy.iter().flatten().copied())),
            weighted_bias: Vec::new(),
            report: None,
        };
        for (h, cell) in cells {
            for (l, (rmse, acc)) in cell.rmse.iter().zip(&cell.accuracy).enumerate() {
                accuracy_rows.push((label.to_string(), *h, l, *rmse, *acc));
            }
        }
        if !cells.is_empty() {
            let sims: Vec<Vec<SimulationEstimate>> = cells.iter().map(|(_, c)| c.estimates.clone()).collect();
            let report = evaluate(&population.estimands, &sims, config.asb_variant)?;
            for em in &report.estimands {
                let metrics = [("asb", em.asb), ("rel_mse", em.rel_mse), ("coverage", Some(em.coverage))];
                for (metric, value) in metrics {
                    if let Some(value) = value {
                        long_rows.push(LongRow {
                            method: label.to_string(),
                            estimand: em.id.clone(),
                            class: em.class.label(),
                            population_value: em.population_value,
                            metric: metric.to_string(),
                            value,
                        });
                    }
                }
            }
            for (j, truth) in truths.iter().enumerate() {
                let q: Vec<f64> = (0..truth.len())
                    .map(|k| cells.iter().map(|(_, c)| c.shares[j][k]).sum::<f64>() / cells.len() as f64)
                    .collect();
                summary.weighted_bias.push((names[j].clone(), weighted_absolute_bias(&q, truth)?));
            }
            summary.report = Some(report);
        }
        summaries.push(summary);
    }

    out.csv(
        "estimands.csv",
        population
            .estimands
            .iter()
            .map(|e| EstimandRow {
                estimand: e.id(),
                class: e.class.label(),
                population_value: e.population_value,
            }),
    )?;
    let long_path = out.path("metrics_long.csv")?;
    write_long_csv(&long_rows, &long_path)?;
    if !long_rows.is_empty() {
        for (name, text) in report_tables(&long_rows)? {
            out.write(&format!("tables/{name}"), text)?;
        }
    }
    {
        let p = out.path("rmse_accuracy.csv")?;
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(["method", "simulation", "imputation", "rmse", "accuracy"])?;
        let fmt = |v: &Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (label, h, l, rmse, acc) in &accuracy_rows {
            w.write_record([label.clone(), h.to_string(), l.to_string(), fmt(rmse), fmt(acc)])?;
        }
        for s in &summaries {
            w.write_record([s.method.clone(), "all".into(), "mean".into(), fmt(&s.mean_rmse), fmt(&s.mean_accuracy)])?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    out.csv(
        "weighted_bias.csv",
        summaries.iter().flat_map(|s| {
            s.weighted_bias.iter().map(move |(v, b)| WeightedBiasRow {
                method: s.method.clone(),
                variable: v.clone(),
                weighted_bias: *b,
            })
        }),
    )?;
    out.csv("timings.csv", &timings)?;
    for (h, m, _, outcome) in results {
        let Ok(cell) = outcome else { continue };
        for (name, trace) in &cell.traces {
            let p = out.path(&format!("losses/{}_sim{h:03}_{name}.csv", labels[*m]))?;
            trace.save_csv(&p)?;
        }
        for (l, d) in cell.imputations.iter().enumerate() {
            let p = out.path(&format!("imputations/{}_sim{h:03}_imp{l:02}.csv", labels[*m]))?;
            save_csv(d, &p, DEFAULT_NA_TOKEN)?;
        }
    }
    out.write(
        "summary.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "methods": summaries,
            "failures": failures,
        }))?,
    )?;

    let config_json = serde_json::to_string(config)?;
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    let manifest = serde_json::json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config_sha256": sha256_hex(config_json.as_bytes()),
        "config": config,
        "mar_design": mar,
        "population_rows": population.data.n_rows(),
        "estimands": population.estimands.len(),
        "failures": failures,
        "files": files,
    });
    out.write("manifest.json", serde_json::to_string_pretty(&manifest)?)?;

    Ok(ExperimentOutcome {
        methods: summaries,
        failures,
        timings,
        files: out.files,
    })
}

/// Pooled result of one estimand for [`evaluate_imputations`].
#[derive(Clone, Debug, Serialize)]
pub struct EstimandScore {
    pub estimand: String,
    pub class: String,
    pub population_value: f64,
    pub q_hat: f64,
    pub q_bar: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
}

/// Scores existing completions of `amputed` against the unamputed `truth`.
/// Estimands come from `population` when given, else from `truth` itself.
pub fn evaluate_imputations(
    truth: &Dataset,
    amputed: &Dataset,
    imputed: &[Dataset],
    population: Option<&Dataset>,
    bins: usize,
    confidence: f64,
) -> Result<(Vec<EstimandScore>, Vec<(Option<f64>, Option<f64>)>)> {
    if imputed.is_empty() {
        return Err(Error::EmptyInput("imputed datasets"));
    }
    if let Some(bad) = imputed.iter().position(|d| !amputed.is_completed_by(d)) {
        return Err(Error::Dataset(format!("imputed dataset {bad} does not complete the amputed data")));
    }
    let population = Population::new(population.unwrap_or(truth).clone(), bins, truth.n_rows(), &EstimandOptions::default())?;
    let sim = SimulationData {
        sample: truth.clone(),
        amputed: amputed.clone(),
        q_hat: estimate_all(&population.binning.apply(truth)?, &population.estimands)?,
    };
    let cell = score_imputations(&population, &sim, imputed, confidence)?;
    let scores = population
        .estimands
        .iter()
        .zip(&cell.estimates)
        .map(|(e, s)| EstimandScore {
            estimand: e.id(),
            class: e.class.label(),
            population_value: e.population_value,
            q_hat: s.q_hat,
            q_bar: s.q_bar,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
            covered: s.ci_low <= e.population_value && e.population_value <= s.ci_high,
        })
        .collect();
    Ok((scores, cell.rmse.into_iter().zip(cell.accuracy).collect()))
}

/// Convenience used by the CLI: one method on one dataset.
pub fn impute_file(
    data: &Path,
    schema: &Path,
    method: &MethodConfig,
    n_imputations: usize,
    seed: u64,
) -> Result<crate::impute::ImputationOutput> {
    let dataset = load_csv(data, Arc::new(Schema::load_json(schema)?), DEFAULT_NA_TOKEN)?;
    method.impute(&dataset, n_imputations, &mut SeedStream::new(seed).named(method.name()).rng())
}
