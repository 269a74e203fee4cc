//! Multiple imputation with denoising autoencoders. A widening encoder and a
//! mirrored decoder are trained on a mean/mode pre-imputed table, first on
//! that table and then on their own reconstruction of it. Independent runs
//! from different initializations give the multiple imputations.

use ndarray::{Array2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{masked_reconstruction, Activation, Adam, AdamConfig, LossTrace, Mlp, OutputHead};
use crate::rng::SeedStream;
use crate::tabular::{CategoricalDecode, Column, Dataset, EncodingMap, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MidaConfig {
    /// Units added per encoder layer.
    pub theta_step: usize,
    pub n_prime: usize,
    pub n_tune: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Share of rows held out to report a validation loss.
    pub validation_fraction: f64,
    pub decode: CategoricalDecode,
}

impl Default for MidaConfig {
    fn default() -> Self {
        MidaConfig {
            theta_step: 7,
            n_prime: 100,
            n_tune: 50,
            batch_size: 128,
            adam: AdamConfig::default(),
            validation_fraction: 0.1,
            decode: CategoricalDecode::Argmax,
        }
    }
}

impl MidaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_step == 0 || self.batch_size == 0 {
            return Err(Error::Config("MIDA needs theta_step >= 1 and batch_size >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MidaModel {
    /// Encoder and decoder as one stack.
    pub network: Mlp,
    pub map: EncodingMap,
    pub config: MidaConfig,
}

impl MidaModel {
    /// Widths `d+θ, d+2θ, d+3θ, d+2θ, d+θ, d` with tanh hidden layers.
    pub fn new<R: Rng + ?Sized>(map: EncodingMap, config: MidaConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = map.dim();
        let t = config.theta_step;
        let dims = [d, d + t, d + 2 * t, d + 3 * t, d + 2 * t, d + t, d];
        let mut acts = vec![Activation::Tanh; 5];
        acts.push(Activation::Head(OutputHead::for_encoding(&map)));
        let network = Mlp::new(&dims, acts, rng)?;
        Ok(MidaModel { network, map, config })
    }

    pub fn encoder_widths(&self) -> Vec<usize> {
        self.network.widths()[..3].to_vec()
    }

    pub fn decoder_widths(&self) -> Vec<usize> {
        self.network.widths()[3..].to_vec()
    }

    fn blocks(&self) -> OutputHead {
        OutputHead::for_encoding(&self.map)
    }
}

/// Mean of observed values for continuous variables, modal observed level
/// (lowest index on ties) for discrete ones.
pub fn initial_impute(data: &Dataset) -> Result<Dataset> {
    let mut columns = data.columns().to_vec();
    for (j, column) in columns.iter_mut().enumerate() {
        let missing = data.missing_rows(j);
        if missing.is_empty() {
            continue;
        }
        let observed = data.observed_rows(j);
        if observed.is_empty() {
            return Err(Error::AllMissing {
                variable: data.schema().variables[j].name.clone(),
            });
        }
        let fill = match data.column(j) {
            Column::Continuous(v) => Value::Real(observed.iter().map(|&i| v[i]).sum::<f64>() / observed.len() as f64),
            Column::Discrete(v) => {
                let mut counts = vec![0usize; data.schema().variables[j].n_levels()];
                for &i in &observed {
                    counts[v[i] as usize] += 1;
                }
                let mut best = 0;
                for (k, &c) in counts.iter().enumerate() {
                    if c > counts[best] {
                        best = k;
                    }
                }
                Value::Level(best as u32)
            }
        };
        for i in missing {
            column.set(i, fill);
        }
    }
    Dataset::complete(data.schema_arc().clone(), columns)
}

/// Reconstruction loss over observed cells: squared error on continuous
/// columns, `−y0 ln ŷ` on one-hot blocks; summed over cells, averaged over
/// rows.
pub fn mida_loss(y0: &Array2<f64>, y_hat: &Array2<f64>, mask: &Array2<f64>, map: &EncodingMap) -> Result<f64> {
    masked_reconstruction(y0, y_hat, mask, OutputHead::for_encoding(map).blocks()).map(|(l, _)| l)
}

fn mean_loss(model: &MidaModel, input: &Array2<f64>, target: &Array2<f64>, mask: &Array2<f64>, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(f64::NAN);
    }
    let x = input.select(Axis(0), rows);
    let out = model.network.predict(&x)?;
    masked_reconstruction(&target.select(Axis(0), rows), &out, &mask.select(Axis(0), rows), model.blocks().blocks()).map(|(l, _)| l)
}

#[allow(clippy::too_many_arguments)]
fn run_phase<R: Rng + ?Sized>(
    model: &mut MidaModel,
    opt: &mut Adam,
    input: &Array2<f64>,
    target: &Array2<f64>,
    mask: &Array2<f64>,
    train: &[usize],
    valid: &[usize],
    epochs: usize,
    phase: f64,
    first_step: usize,
    trace: &mut LossTrace,
    rng: &mut R,
) -> Result<()> {
    let head = model.blocks();
    let mut order = train.to_vec();
    for epoch in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(model.config.batch_size) {
            let x = input.select(Axis(0), chunk);
            let (out, cache) = model.network.forward(&x)?;
            let (loss, grad) = masked_reconstruction(&target.select(Axis(0), chunk), &out, &mask.select(Axis(0), chunk), head.blocks())?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "MIDA loss",
                    step: first_step + epoch,
                });
            }
            let (grads, _) = model.network.backward(&cache, &grad);
            opt.step(&mut model.network, &grads)?;
            total += loss * chunk.len() as f64;
        }
        let valid_loss = mean_loss(model, input, target, mask, valid)?;
        trace.push(first_step + epoch, vec![phase, total / order.len() as f64, valid_loss]);
    }
    Ok(())
}

/// Primary phase on the pre-imputed table, then fine-tuning on the table
/// whose missing cells hold the primary model's output. The trace has one
/// row per epoch: phase (0 primary, 1 fine-tune), training and validation
/// loss.
pub fn train_mida<R: Rng + ?Sized>(data: &Dataset, config: &MidaConfig, rng: &mut R) -> Result<(MidaModel, LossTrace)> {
    config.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyInput("MIDA training data"));
    }
    let map = EncodingMap::fit(data)?;
    let (_, mask) = map.encode(data)?;
    let (y0, _) = map.encode(&initial_impute(data)?)?;
    let mut model = MidaModel::new(map, config.clone(), rng)?;

    let mut rows: Vec<usize> = (0..data.n_rows()).collect();
    rows.shuffle(rng);
    let n_valid = (config.validation_fraction * data.n_rows() as f64).floor() as usize;
    let n_valid = n_valid.min(data.n_rows() - 1);
    let (valid, train) = rows.split_at(n_valid);

    let mut opt = Adam::new(&model.network, config.adam);
    let mut trace = LossTrace::new(["phase", "train", "validation"]);
    run_phase(&mut model, &mut opt, &y0, &y0, &mask, train, valid, config.n_prime, 0.0, 0, &mut trace, rng)?;
    if config.n_tune > 0 {
        let primary_out = model.network.predict(&y0)?;
        let y1 = Zip::from(&y0)
            .and(&mask)
            .and(&primary_out)
            .map_collect(|&y, &m, &o| m * y + (1.0 - m) * o);
        run_phase(&mut model, &mut opt, &y1, &y1, &mask, train, valid, config.n_tune, 1.0, config.n_prime, &mut trace, rng)?;
    }
    Ok((model, trace))
}

/// Completes `data` from one trained model: its reconstruction of the
/// pre-imputed table fills the missing cells.
pub fn mida_complete<R: Rng + ?Sized>(model: &MidaModel, data: &Dataset, rng: &mut R) -> Result<Dataset> {
    let (y0, _) = model.map.encode(&initial_impute(data)?)?;
    let out = model.network.predict(&y0)?;
    model.map.decode_into(&out, data, model.config.decode, rng)
}

/// `n_imputations` independent training runs on disjoint seed streams.
pub fn mida_impute<R: Rng + ?Sized>(
    data: &Dataset,
    config: &MidaConfig,
    n_imputations: usize,
    rng: &mut R,
) -> Result<(Vec<Dataset>, Vec<LossTrace>)> {
    let base = SeedStream::new(rng.random());
    let runs = (0..n_imputations as u64)
        .into_par_iter()
        .map(|l| {
            let mut run_rng = base.child(l).rng();
            let (model, trace) = train_mida(data, config, &mut run_rng)?;
            Ok((mida_complete(&model, data, &mut run_rng)?, trace))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(runs.into_iter().unzip())
}
