use ndarray::{Array2, Zip};

use super::{HeadBlock, HeadKind};
use crate::error::{Error, Result};

/// Probabilities inside logarithms are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-8;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `ln(clamp(p))` and its derivative (zero where the clamp is active).
fn clamped_log(p: f64) -> (f64, f64) {
    if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        (p.ln(), 1.0 / p)
    } else {
        (clamp_prob(p).ln(), 0.0)
    }
}

fn check_shapes(context: &'static str, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context,
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// `−Σ [w_pos·ln p + w_neg·ln(1 − p)]`, averaged over rows, with its
/// gradient with respect to `p`.
pub fn bce_terms(p: &Array2<f64>, w_pos: &Array2<f64>, w_neg: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    check_shapes("log-loss weights", p, w_pos)?;
    check_shapes("log-loss weights", p, w_neg)?;
    let n = p.nrows().max(1) as f64;
    let mut loss = 0.0;
    let grad = Zip::from(p).and(w_pos).and(w_neg).map_collect(|&p, &wp, &wn| {
        let (lp, dlp) = clamped_log(p);
        let (lq, dlq) = clamped_log(1.0 - p);
        loss -= wp * lp + wn * lq;
        (-wp * dlp + wn * dlq) / n
    });
    Ok((loss / n, grad))
}

/// Reconstruction loss over cells with `weight = 1` (observed cells for the
/// imputers): squared error on non-softmax blocks, `−y·ln ŷ` on softmax
/// blocks. Summed over cells, averaged over rows; returns the gradient with
/// respect to `y_hat`.
pub fn masked_reconstruction(
    y: &Array2<f64>,
    y_hat: &Array2<f64>,
    weight: &Array2<f64>,
    blocks: &[HeadBlock],
) -> Result<(f64, Array2<f64>)> {
    check_shapes("reconstruction target", y_hat, y)?;
    check_shapes("reconstruction weights", y_hat, weight)?;
    let n = y.nrows().max(1) as f64;
    let mut grad = Array2::<f64>::zeros(y.raw_dim());
    let mut loss = 0.0;
    for b in blocks {
        for c in b.start..b.start + b.width {
            for i in 0..y.nrows() {
                let w = weight[[i, c]];
                if w == 0.0 {
                    continue;
                }
                let (t, p) = (y[[i, c]], y_hat[[i, c]]);
                match b.kind {
                    HeadKind::Softmax => {
                        let (lp, dlp) = clamped_log(p);
                        loss -= w * t * lp;
                        grad[[i, c]] = -w * t * dlp / n;
                    }
                    HeadKind::Sigmoid | HeadKind::Linear => {
                        loss += w * (p - t) * (p - t);
                        grad[[i, c]] = 2.0 * w * (p - t) / n;
                    }
                }
            }
        }
    }
    Ok((loss / n, grad))
}
