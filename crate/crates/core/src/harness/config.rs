//! Experiment configuration and the built-in profiles.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainConfig;
use crate::impute::{MethodConfig, MiceSettings};
use crate::inference::{EstimandOptions, DEFAULT_CONFIDENCE};
use crate::metrics::AsbVariant;
use crate::mida::MidaConfig;
use crate::missingness::MarConfig;
use crate::tabular::{DEFAULT_BINS, DEFAULT_NA_TOKEN};

use super::synth::SyntheticPopulationSpec;

fn default_na_token() -> String {
    DEFAULT_NA_TOKEN.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum PopulationSource {
    /// A fully observed CSV plus its JSON schema.
    Csv {
        path: PathBuf,
        schema: PathBuf,
        #[serde(default = "default_na_token")]
        na_token: String,
    },
    Synthetic(SyntheticPopulationSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "kebab-case")]
pub enum MissingnessConfig {
    Mcar { rate: f64 },
    Mar(MarConfig),
    /// MAR design drawn once per experiment from the experiment seed.
    MarRandom {
        conditioning_variables: Vec<String>,
        group_sizes: Vec<usize>,
        target_rate: f64,
    },
}

/// A method plus an optional label; the label names its output columns and
/// seeds its random stream, so it must be unique within an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub config: MethodConfig,
}

impl MethodEntry {
    pub fn new(config: MethodConfig) -> Self {
        MethodEntry { label: None, config }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.config.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub population: PopulationSource,
    /// Number of simulated samples, `H`.
    pub simulations: usize,
    /// Rows per sample, `n`.
    pub sample_size: usize,
    pub missingness: MissingnessConfig,
    pub methods: Vec<MethodEntry>,
    /// Completed datasets per method and sample, `L`.
    pub n_imputations: usize,
    /// Quantile bins per continuous variable, `K`.
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub asb_variant: AsbVariant,
    #[serde(default)]
    pub estimands: EstimandOptions,
    /// Merge categorical levels rarer than this in the population first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_level_count: Option<usize>,
    /// Write every completed dataset under `imputations/`.
    #[serde(default)]
    pub save_imputations: bool,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Smoke,
    Desk,
    Paper,
}

fn all_methods(gain: GainConfig, mida: MidaConfig) -> Vec<MethodEntry> {
    vec![
        MethodEntry::new(MethodConfig::MiceCart(MiceSettings::default())),
        MethodEntry::new(MethodConfig::MiceRf(MiceSettings::default())),
        MethodEntry::new(MethodConfig::Gain(gain)),
        MethodEntry::new(MethodConfig::Mida(mida)),
    ]
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Smoke => Self::smoke(),
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    /// Synthetic population of 10,000; `H = 5`, `n = 500`, 30% MCAR, the
    /// four methods with shortened network training, `L = 3`.
    pub fn smoke() -> Self {
        ExperimentConfig {
            population: PopulationSource::Synthetic(SyntheticPopulationSpec::desk_default(10_000, 1)),
            simulations: 5,
            sample_size: 500,
            missingness: MissingnessConfig::Mcar { rate: 0.3 },
            methods: all_methods(
                GainConfig {
                    iterations: 1000,
                    ..GainConfig::default()
                },
                MidaConfig {
                    n_prime: 30,
                    n_tune: 15,
                    ..MidaConfig::default()
                },
            ),
            n_imputations: 3,
            bins: DEFAULT_BINS,
            seed: 20_240_601,
            output: PathBuf::from("out/smoke"),
            threads: 0,
            confidence: DEFAULT_CONFIDENCE,
            asb_variant: AsbVariant::default(),
            estimands: EstimandOptions::default(),
            min_level_count: None,
            save_imputations: false,
        }
    }

    /// Population of 50,000; `H = 20`, `n = 2000`, 30% MCAR, `L = 5`, the
    /// four methods plus the mean/mode baseline.
    pub fn desk() -> Self {
        let mut methods = all_methods(
            GainConfig {
                iterations: 2000,
                ..GainConfig::default()
            },
            MidaConfig {
                n_prime: 30,
                n_tune: 15,
                ..MidaConfig::default()
            },
        );
        methods.push(MethodEntry::new(MethodConfig::MeanMode));
        ExperimentConfig {
            population: PopulationSource::Synthetic(SyntheticPopulationSpec::desk_default(50_000, 1)),
            simulations: 20,
            sample_size: 2000,
            n_imputations: 5,
            methods,
            output: PathBuf::from("out/desk"),
            ..Self::smoke()
        }
    }

    /// `H = 100`, `n = 10,000`, 30% MCAR, `L = 10`, default training budgets.
    pub fn paper() -> Self {
        ExperimentConfig {
            population: PopulationSource::Synthetic(SyntheticPopulationSpec::desk_default(500_000, 1)),
            simulations: 100,
            sample_size: 10_000,
            n_imputations: 10,
            methods: all_methods(GainConfig::default(), MidaConfig::default()),
            output: PathBuf::from("out/paper"),
            ..Self::smoke()
        }
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.methods.iter().map(MethodEntry::label).collect()
    }

    /// Structural checks; file existence is checked when the run starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.simulations == 0 {
            return fail("simulations must be at least 1".into());
        }
        if self.sample_size == 0 {
            return fail("sample_size must be at least 1".into());
        }
        if self.n_imputations == 0 {
            return fail("n_imputations must be at least 1".into());
        }
        if self.bins < 2 {
            return fail("bins must be at least 2".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return fail(format!("confidence {} outside (0, 1)", self.confidence));
        }
        if self.methods.is_empty() {
            return fail("at least one method is required".into());
        }
        let labels = self.labels();
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return fail(format!("method label {label:?} must be non-empty ASCII letters, digits, '-' or '_'"));
            }
            if labels[..i].contains(label) {
                return fail(format!("method label {label:?} is used twice"));
            }
        }
        for m in &self.methods {
            m.config.validate()?;
        }
        match &self.missingness {
            MissingnessConfig::Mcar { rate } if !(0.0..1.0).contains(rate) => fail(format!("MCAR rate {rate} outside [0, 1)")),
            MissingnessConfig::Mar(MarConfig { target_rate, .. }) | MissingnessConfig::MarRandom { target_rate, .. }
                if !(*target_rate > 0.0 && *target_rate < 1.0) =>
            {
                fail(format!("MAR target rate {target_rate} outside (0, 1)"))
            }
            _ => Ok(()),
        }?;
        if let PopulationSource::Synthetic(spec) = &self.population {
            spec.validate()?;
        }
        Ok(())
    }
}
