//! Decay curves with batch statistics and log-log rate fits.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::stats::ols;

/// Minimum number of independent batches behind a [`DecayCurve`].
pub const MIN_BATCHES: usize = 16;

/// Values at record times, their standard errors and delete-one-batch
/// replicates (empty for deterministic curves).
#[derive(Clone, Debug, Default)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `leave_one_out[b][m]`: the statistic at `times[m]` recomputed without batch `b`.
    pub leave_one_out: Vec<Vec<f64>>,
}

impl DecayCurve {
    /// A noiseless curve.
    pub fn exact(times: Vec<f64>, values: Vec<f64>) -> Self {
        let n = values.len();
        DecayCurve { times, values, stderr: alloc::vec![0.0; n], leave_one_out: Vec::new() }
    }

    /// Mean and standard error over independent equal-size batches.
    pub fn from_batches(times: Vec<f64>, batches: Vec<Vec<f64>>) -> Result<Self> {
        let b = batches.len();
        if b < MIN_BATCHES {
            return Err(Error::Parameter { what: "decay curves need at least 16 batches" });
        }
        if batches.iter().any(|row| row.len() != times.len()) {
            return Err(Error::GridMismatch { what: "batch length differs from the time grid" });
        }
        let m = times.len();
        let mut values = alloc::vec![0.0; m];
        let mut stderr = alloc::vec![0.0; m];
        for k in 0..m {
            let mean = batches.iter().map(|r| r[k]).sum::<f64>() / b as f64;
            let var = batches.iter().map(|r| libm::pow(r[k] - mean, 2.0)).sum::<f64>() / (b as f64 - 1.0);
            values[k] = mean;
            stderr[k] = libm::sqrt(var / b as f64);
        }
        let leave_one_out = (0..b)
            .map(|drop| (0..m).map(|k| (values[k] * b as f64 - batches[drop][k]) / (b as f64 - 1.0)).collect())
            .collect();
        Ok(DecayCurve { times, values, stderr, leave_one_out })
    }

    /// A nonlinear statistic of pooled batches: `values` from all batches,
    /// `leave_one_out[b]` without batch `b`; jackknife standard errors.
    pub fn from_jackknife(times: Vec<f64>, values: Vec<f64>, leave_one_out: Vec<Vec<f64>>) -> Result<Self> {
        let b = leave_one_out.len();
        if b < MIN_BATCHES {
            return Err(Error::Parameter { what: "decay curves need at least 16 batches" });
        }
        if values.len() != times.len() || leave_one_out.iter().any(|row| row.len() != times.len()) {
            return Err(Error::GridMismatch { what: "replicate length differs from the time grid" });
        }
        let stderr = (0..times.len())
            .map(|k| {
                let mean = leave_one_out.iter().map(|r| r[k]).sum::<f64>() / b as f64;
                let var = leave_one_out.iter().map(|r| libm::pow(r[k] - mean, 2.0)).sum::<f64>();
                libm::sqrt((b as f64 - 1.0) / b as f64 * var)
            })
            .collect();
        Ok(DecayCurve { times, values, stderr, leave_one_out })
    }
}

/// Fitted `log value ≈ slope · log t + intercept` with a 95% half-width.
#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci: f64,
    pub points: usize,
}

fn fit_points(t: &[f64], v: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let x: Vec<f64> = t.iter().map(|x| libm::log(*x)).collect();
    let y: Vec<f64> = v.iter().map(|x| libm::log(*x)).collect();
    ols(&x, &y, w)
}

/// Weighted least squares of `log value` on `log t` over `[lo, hi]`.
///
/// Weights are `(value / stderr)²` (the inverse variance of the log); the
/// interval comes from a delete-one-batch jackknife when replicates exist
/// and from the residual scatter otherwise.
pub fn fit_rate(curve: &DecayCurve, lo: f64, hi: f64) -> Result<RateFit> {
    let idx: Vec<usize> = (0..curve.times.len()).filter(|&k| curve.times[k] >= lo && curve.times[k] <= hi).collect();
    if idx.len() < 5 {
        return Err(Error::InsufficientSignal { what: "fewer than five points in the window" });
    }
    if idx.iter().any(|&k| !(curve.values[k] > 5.0 * curve.stderr[k]) || !(curve.values[k] > 0.0)) {
        return Err(Error::InsufficientSignal { what: "values within five standard errors of zero" });
    }
    let t: Vec<f64> = idx.iter().map(|&k| curve.times[k]).collect();
    let v: Vec<f64> = idx.iter().map(|&k| curve.values[k]).collect();
    let noisy = idx.iter().all(|&k| curve.stderr[k] > 0.0);
    let w: Vec<f64> = if noisy { idx.iter().map(|&k| libm::pow(curve.values[k] / curve.stderr[k], 2.0)).collect() } else { alloc::vec![1.0; idx.len()] };
    let (slope, intercept, se) = fit_points(&t, &v, &w);
    let b = curve.leave_one_out.len();
    let ci = if b >= 2 {
        let mut slopes = Vec::with_capacity(b);
        for row in &curve.leave_one_out {
            let vals: Vec<f64> = idx.iter().map(|&k| row[k]).collect();
            if vals.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::InsufficientSignal { what: "a jackknife replicate is not positive" });
            }
            slopes.push(fit_points(&t, &vals, &w).0);
        }
        let mean = slopes.iter().sum::<f64>() / b as f64;
        let var = (b as f64 - 1.0) / b as f64 * slopes.iter().map(|s| libm::pow(s - mean, 2.0)).sum::<f64>();
        1.96 * libm::sqrt(var)
    } else {
        1.96 * se
    };
    Ok(RateFit { slope, intercept, ci, points: idx.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|k| a * libm::pow(b / a, k as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn synthetic_curves() {
        let t = geom(20, 20.0, 200.0);
        let inv = DecayCurve::exact(t.clone(), t.iter().map(|x| 1.0 / x).collect());
        let f = fit_rate(&inv, 20.0, 200.0).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6 && f.ci < 1e-6);
        let flat = DecayCurve::exact(t.clone(), alloc::vec![3.0; 20]);
        assert!(fit_rate(&flat, 20.0, 200.0).unwrap().slope.abs() < 1e-12);
        // t⁻²(log t)³: independent least-squares evaluation on the same 20
        // log-spaced points gives −1.263839
        let lg = DecayCurve::exact(t.clone(), t.iter().map(|x| libm::pow(libm::log(*x), 3.0) / (x * x)).collect());
        let s = fit_rate(&lg, 20.0, 200.0).unwrap().slope;
        assert!((s + 1.263839).abs() < 1e-5, "{s}");
    }

    #[test]
    fn noise_dominated_window_is_rejected() {
        let t = geom(8, 1.0, 100.0);
        let mut c = DecayCurve::exact(t.clone(), t.iter().map(|x| 1.0 / x).collect());
        c.stderr = c.values.iter().map(|v| v / 3.0).collect();
        assert!(matches!(fit_rate(&c, 1.0, 100.0), Err(Error::InsufficientSignal { .. })));
        assert!(matches!(fit_rate(&c, 50.0, 100.0), Err(Error::InsufficientSignal { .. })));
    }

    #[test]
    fn batches_give_jackknife_interval() {
        let t = geom(10, 1.0, 100.0);
        let batches: Vec<Vec<f64>> = (0..16)
            .map(|b| t.iter().map(|x| (1.0 + 0.01 * libm::sin(b as f64 * 7.0 + x)) / (x * x)).collect())
            .collect();
        let c = DecayCurve::from_batches(t, batches.clone()).unwrap();
        let f = fit_rate(&c, 1.0, 100.0).unwrap();
        assert!((f.slope + 2.0).abs() < 0.01 && f.ci > 0.0 && f.ci < 0.01, "{f:?}");
        assert!(DecayCurve::from_batches(c.times.clone(), batches[..4].to_vec()).is_err());
        // the mean is linear, so pooled replicates reproduce the batch route
        let pooled = DecayCurve::from_jackknife(c.times.clone(), c.values.clone(), c.leave_one_out.clone()).unwrap();
        for k in 0..c.times.len() {
            assert!((pooled.stderr[k] / c.stderr[k] - 1.0).abs() < 1e-9);
        }
        assert!((fit_rate(&pooled, 1.0, 100.0).unwrap().ci / f.ci - 1.0).abs() < 1e-9);
    }
}
