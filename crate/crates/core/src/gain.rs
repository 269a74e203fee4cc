//! Generative adversarial imputation: a generator fills missing cells, a
//! discriminator guesses which cells were observed, helped by a hint matrix.
//! Multiple imputations come from re-drawing the input noise.
//!
//! Mask convention: 1 = observed. The discriminator and generator losses are
//! written as negated log-likelihoods so that both are minimized.

use ndarray::{concatenate, s, Array2, Axis, Zip};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{bce_terms, masked_reconstruction, Activation, Adam, AdamConfig, Gradients, HeadKind, LossTrace, Mlp, OutputHead};
use crate::rng::SeedStream;
use crate::tabular::{CategoricalDecode, Dataset, EncodingMap};

/// Which cells the generator's two loss terms cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossConvention {
    /// Adversarial term over missing cells, reconstruction over observed ones.
    #[default]
    Prose,
    /// The factors exactly as printed: adversarial `Σ M·ln(1 − M̂)`,
    /// reconstruction weighted by `1 − M` against the noise-filled input.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainConfig {
    /// Hidden width; `None` uses the encoded dimension.
    pub theta: Option<usize>,
    pub hint_rate: f64,
    pub alpha: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub noise_scale: f64,
    pub adam: AdamConfig,
    pub loss_convention: LossConvention,
    pub decode: CategoricalDecode,
}

impl Default for GainConfig {
    fn default() -> Self {
        GainConfig {
            theta: None,
            hint_rate: 0.9,
            alpha: 100.0,
            batch_size: 128,
            iterations: 10_000,
            noise_scale: 0.01,
            adam: AdamConfig::default(),
            loss_convention: LossConvention::Prose,
            decode: CategoricalDecode::Argmax,
        }
    }
}

impl GainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hint_rate > 0.0 && self.hint_rate <= 1.0) {
            return Err(Error::Config(format!("hint_rate {} outside (0, 1]", self.hint_rate)));
        }
        if !(self.alpha >= 0.0) || self.batch_size == 0 || !(self.noise_scale >= 0.0) {
            return Err(Error::Config("GAIN needs alpha >= 0, batch_size >= 1, noise_scale >= 0".into()));
        }
        if self.theta == Some(0) {
            return Err(Error::Config("theta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GainModel {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub map: EncodingMap,
    pub config: GainConfig,
}

/// One mini-batch: noise-filled values, mask, and hint.
#[derive(Clone, Debug)]
pub struct GainBatch {
    pub values: Array2<f64>,
    pub mask: Array2<f64>,
    pub hint: Array2<f64>,
}

impl GainModel {
    /// Freshly initialized networks: three hidden leaky-ReLU layers each.
    pub fn new<R: Rng + ?Sized>(map: EncodingMap, config: GainConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = map.dim();
        let theta = config.theta.unwrap_or(d);
        let hidden = || vec![Activation::LeakyRelu, Activation::LeakyRelu, Activation::LeakyRelu];
        let mut g_acts = hidden();
        g_acts.push(Activation::Head(OutputHead::for_encoding(&map)));
        let generator = Mlp::new(&[2 * d, theta, theta, theta, d], g_acts, rng)?;
        let mut d_acts = hidden();
        d_acts.push(Activation::Head(OutputHead::uniform(d, HeadKind::Sigmoid)));
        let discriminator = Mlp::new(&[2 * d, theta, theta, theta, d], d_acts, rng)?;
        Ok(GainModel {
            generator,
            discriminator,
            map,
            config,
        })
    }

    fn head(&self) -> OutputHead {
        OutputHead::for_encoding(&self.map)
    }
}

/// `B·M + (1 − B)·0.5` with `B ~ Bernoulli(hint_rate)` per cell.
pub fn sample_hint<R: Rng + ?Sized>(mask: &Array2<f64>, hint_rate: f64, rng: &mut R) -> Result<Array2<f64>> {
    let bern = Bernoulli::new(hint_rate.clamp(0.0, 1.0)).map_err(|e| Error::Config(e.to_string()))?;
    Ok(mask.mapv(|m| if bern.sample(rng) { m } else { 0.5 }))
}

/// `−Σ [M ln M̂ + (1 − M) ln(1 − M̂)]` averaged over rows.
pub fn discriminator_loss(mask: &Array2<f64>, mask_hat: &Array2<f64>) -> Result<f64> {
    bce_terms(mask_hat, mask, &mask.mapv(|m| 1.0 - m)).map(|(l, _)| l)
}

/// `−Σ (1 − M) ln M̂` averaged over rows: small when imputed cells pass as
/// observed.
pub fn generator_adversarial_loss(mask: &Array2<f64>, mask_hat: &Array2<f64>) -> Result<f64> {
    adversarial_terms(mask, mask_hat, LossConvention::Prose).map(|(l, _)| l)
}

fn adversarial_terms(mask: &Array2<f64>, mask_hat: &Array2<f64>, convention: LossConvention) -> Result<(f64, Array2<f64>)> {
    match convention {
        LossConvention::Prose => bce_terms(mask_hat, &mask.mapv(|m| 1.0 - m), &Array2::zeros(mask.raw_dim())),
        LossConvention::Literal => bce_terms(mask_hat, &Array2::zeros(mask.raw_dim()), &mask.mapv(|m| -m)),
    }
}

/// Squared error (continuous) or `−y ln ŷ` (one-hot blocks) over observed
/// cells, summed over cells and averaged over rows.
pub fn reconstruction_loss(y: &Array2<f64>, y_hat: &Array2<f64>, mask: &Array2<f64>, map: &EncodingMap) -> Result<f64> {
    masked_reconstruction(y, y_hat, mask, OutputHead::for_encoding(map).blocks()).map(|(l, _)| l)
}

/// Noise-filled input `M·X + (1 − M)·Z`, `Z ~ U(0, noise_scale)`.
pub fn fill_noise<R: Rng + ?Sized>(values: &Array2<f64>, mask: &Array2<f64>, noise_scale: f64, rng: &mut R) -> Array2<f64> {
    let dist = Uniform::new_inclusive(0.0, noise_scale).expect("non-negative noise scale");
    Zip::from(values)
        .and(mask)
        .map_collect(|&x, &m| if m == 1.0 { x } else { dist.sample(rng) })
}

fn combine(values: &Array2<f64>, mask: &Array2<f64>, generated: &Array2<f64>) -> Array2<f64> {
    Zip::from(values)
        .and(mask)
        .and(generated)
        .map_collect(|&x, &m, &g| m * x + (1.0 - m) * g)
}

fn side_by_side(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[a.view(), b.view()]).expect("equal row counts")
}

/// Discriminator loss on a batch and its parameter gradients.
pub fn discriminator_objective(model: &GainModel, batch: &GainBatch) -> Result<(f64, Gradients)> {
    let generated = model.generator.predict(&side_by_side(&batch.values, &batch.mask))?;
    let imputed = combine(&batch.values, &batch.mask, &generated);
    let (mask_hat, cache) = model.discriminator.forward(&side_by_side(&imputed, &batch.hint))?;
    let (loss, grad) = bce_terms(&mask_hat, &batch.mask, &batch.mask.mapv(|m| 1.0 - m))?;
    let (grads, _) = model.discriminator.backward(&cache, &grad);
    Ok((loss, grads))
}

/// Generator objective `adversarial + α·reconstruction` on a batch, with the
/// two terms separately and the generator's parameter gradients.
pub fn generator_objective(model: &GainModel, batch: &GainBatch) -> Result<(f64, f64, Gradients)> {
    let d = model.map.dim();
    let (generated, g_cache) = model.generator.forward(&side_by_side(&batch.values, &batch.mask))?;
    let imputed = combine(&batch.values, &batch.mask, &generated);
    let (mask_hat, d_cache) = model.discriminator.forward(&side_by_side(&imputed, &batch.hint))?;
    let (adv, adv_grad) = adversarial_terms(&batch.mask, &mask_hat, model.config.loss_convention)?;
    let (_, d_input_grad) = model.discriminator.backward(&d_cache, &adv_grad);
    // imputed = M·X + (1 − M)·G
    let mut grad_generated = &d_input_grad.slice(s![.., ..d]) * &batch.mask.mapv(|m| 1.0 - m);
    let rec_weight = match model.config.loss_convention {
        LossConvention::Prose => batch.mask.clone(),
        LossConvention::Literal => batch.mask.mapv(|m| 1.0 - m),
    };
    let (rec, rec_grad) = masked_reconstruction(&batch.values, &generated, &rec_weight, model.head().blocks())?;
    grad_generated.scaled_add(model.config.alpha, &rec_grad);
    let (grads, _) = model.generator.backward(&g_cache, &grad_generated);
    Ok((adv, rec, grads))
}

/// Generator objective value only, for finite-difference checks.
pub fn generator_loss(model: &GainModel, batch: &GainBatch) -> Result<f64> {
    generator_objective(model, batch).map(|(adv, rec, _)| adv + model.config.alpha * rec)
}

fn check_finite(values: &[f64], step: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what: "GAIN loss", step })
    }
}

/// Draws a mini-batch (rows without replacement) with fresh noise and hint.
pub fn sample_batch<R: Rng + ?Sized>(
    values: &Array2<f64>,
    mask: &Array2<f64>,
    config: &GainConfig,
    rng: &mut R,
) -> Result<GainBatch> {
    let rows = index::sample(rng, values.nrows(), config.batch_size).into_vec();
    let x = values.select(Axis(0), &rows);
    let m = mask.select(Axis(0), &rows);
    let filled = fill_noise(&x, &m, config.noise_scale, rng);
    let hint = sample_hint(&m, config.hint_rate, rng)?;
    Ok(GainBatch {
        values: filled,
        mask: m,
        hint,
    })
}

/// Alternating discriminator and generator Adam steps, one mini-batch each
/// per iteration. The trace records every iteration.
pub fn train_gain<R: Rng + ?Sized>(data: &Dataset, config: &GainConfig, rng: &mut R) -> Result<(GainModel, LossTrace)> {
    config.validate()?;
    if data.n_rows() < config.batch_size {
        return Err(Error::Config(format!(
            "GAIN batch size {} exceeds the {} available rows",
            config.batch_size,
            data.n_rows()
        )));
    }
    let map = EncodingMap::fit(data)?;
    let (values, mask) = map.encode(data)?;
    let mut model = GainModel::new(map, config.clone(), rng)?;
    let mut d_opt = Adam::new(&model.discriminator, config.adam);
    let mut g_opt = Adam::new(&model.generator, config.adam);
    let mut trace = LossTrace::new(["discriminator", "generator_adversarial", "reconstruction"]);
    for step in 0..config.iterations {
        let batch = sample_batch(&values, &mask, config, rng)?;
        let (d_loss, d_grads) = discriminator_objective(&model, &batch)?;
        check_finite(&[d_loss], step)?;
        d_opt.step(&mut model.discriminator, &d_grads)?;

        let batch = sample_batch(&values, &mask, config, rng)?;
        let (adv, rec, g_grads) = generator_objective(&model, &batch)?;
        check_finite(&[adv, rec], step)?;
        g_opt.step(&mut model.generator, &g_grads)?;
        trace.push(step, vec![d_loss, adv, rec]);
    }
    Ok((model, trace))
}

/// `n_imputations` completions, each from one generator pass with fresh
/// noise. Observed cells are copied from `data`.
pub fn gain_impute<R: Rng + ?Sized>(model: &GainModel, data: &Dataset, n_imputations: usize, rng: &mut R) -> Result<Vec<Dataset>> {
    let (values, mask) = model.map.encode(data)?;
    let base = SeedStream::new(rng.random());
    (0..n_imputations as u64)
        .into_par_iter()
        .map(|l| {
            let mut pass_rng = base.child(l).rng();
            let filled = fill_noise(&values, &mask, model.config.noise_scale, &mut pass_rng);
            let generated = model.generator.predict(&side_by_side(&filled, &mask))?;
            model.map.decode_into(&generated, data, model.config.decode, &mut pass_rng)
        })
        .collect()
}
