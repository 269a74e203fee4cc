use serde::{Deserialize, Serialize};

use super::PointEstimate;
use crate::error::{Error, Result};
use crate::special::{normal_quantile, student_t_quantile};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Rubin's combination of `L` complete-data estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledEstimate {
    pub q_bar: f64,
    /// Between-imputation variance.
    pub b: f64,
    /// Mean within-imputation variance.
    pub u_bar: f64,
    pub t_total: f64,
    /// Degrees of freedom; infinite when `b = 0`.
    pub nu: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Set when `L = 1`: no between-imputation variance is available and the
    /// interval uses `u` alone.
    pub degenerate: bool,
}

impl PooledEstimate {
    /// Closed-interval membership.
    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// `q̄ = mean q`, `b = var q`, `ū = mean u`, `T = (1 + 1/L)·b + ū`,
/// `ν = (L − 1)(1 + ū / ((1 + 1/L)·b))²`, interval `q̄ ± t_ν·√T`.
pub fn pool(estimates: &[PointEstimate], confidence: f64) -> Result<PooledEstimate> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("estimates to pool"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!("confidence {confidence} outside (0, 1)")));
    }
    let l = estimates.len() as f64;
    // centred on the first entry so identical inputs pool to themselves exactly
    let (q0, u0) = (estimates[0].q, estimates[0].u);
    let q_bar = q0 + estimates.iter().map(|e| e.q - q0).sum::<f64>() / l;
    let u_bar = u0 + estimates.iter().map(|e| e.u - u0).sum::<f64>() / l;
    let degenerate = estimates.len() == 1;
    let b = if degenerate {
        0.0
    } else {
        estimates.iter().map(|e| (e.q - q_bar).powi(2)).sum::<f64>() / (l - 1.0)
    };
    let inflated = (1.0 + 1.0 / l) * b;
    let t_total = inflated + u_bar;
    let nu = if b > 0.0 {
        (l - 1.0) * (1.0 + u_bar / inflated).powi(2)
    } else {
        f64::INFINITY
    };
    let p = 0.5 + confidence / 2.0;
    let crit = if nu.is_finite() { student_t_quantile(p, nu) } else { normal_quantile(p) };
    let half = crit * t_total.sqrt();
    Ok(PooledEstimate {
        q_bar,
        b,
        u_bar,
        t_total,
        nu,
        ci_low: q_bar - half,
        ci_high: q_bar + half,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pe(q: f64, u: f64) -> PointEstimate {
        PointEstimate { q, u }
    }

    #[test]
    fn identical_estimates() {
        let p = pool(&[pe(0.5, 0.01); 3], 0.95).unwrap();
        assert_eq!((p.q_bar, p.b, p.t_total), (0.5, 0.0, 0.01));
        assert!(p.nu.is_infinite());
        assert!((p.ci_high - 0.5 - 1.959963984540054 * 0.1).abs() < 1e-9);
    }

    #[test]
    fn hand_computed_three() {
        let p = pool(&[pe(0.4, 0.01), pe(0.5, 0.01), pe(0.6, 0.01)], 0.95).unwrap();
        assert!((p.q_bar - 0.5).abs() < 1e-15);
        assert!((p.b - 0.01).abs() < 1e-15);
        assert!((p.u_bar - 0.01).abs() < 1e-15);
        assert!((p.t_total - 0.07 / 3.0).abs() < 1e-15);
        assert!((p.nu - 6.125).abs() < 1e-12);
        // t quantile at 6.125 dof lies between the tabled 6 and 7 dof values
        let crit = (p.ci_high - p.q_bar) / p.t_total.sqrt();
        assert!(crit < 2.447 && crit > 2.365, "{crit}");
    }

    #[test]
    fn scaling_homogeneity() {
        let base = [pe(0.31, 0.002), pe(0.35, 0.003), pe(0.29, 0.0025), pe(0.33, 0.002)];
        let c: f64 = 0.4;
        let scaled: Vec<_> = base.iter().map(|e| pe(c * e.q, c * c * e.u)).collect();
        let (a, b) = (pool(&base, 0.95).unwrap(), pool(&scaled, 0.95).unwrap());
        assert!((b.q_bar - c * a.q_bar).abs() < 1e-14);
        assert!((b.t_total.sqrt() - c * a.t_total.sqrt()).abs() < 1e-14);
        assert!((b.nu - a.nu).abs() < 1e-9 * a.nu);
    }

    #[test]
    fn single_imputation_is_flagged() {
        let p = pool(&[pe(0.3, 0.01)], 0.95).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.t_total, 0.01);
    }

    #[test]
    fn identical_inputs_pool_exactly() {
        let p = pool(&[pe(0.1, 0.003); 3], 0.95).unwrap();
        assert_eq!((p.q_bar, p.u_bar), (0.1, 0.003));
    }

    #[test]
    fn closed_interval() {
        let p = pool(&[pe(0.5, 0.01); 2], 0.95).unwrap();
        assert!(p.covers(p.ci_low) && p.covers(p.ci_high));
    }
}
