//! Weighted least squares for straight-line fits.

/// Weighted least squares `y ≈ a x + b`; returns `(a, b, se(a))`, with the
/// slope standard error from the weighted residuals (`0` for two points).
pub fn ols(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let n = x.len();
    let se = if n > 2 {
        let rss: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * libm::pow(c - slope * a - icpt, 2.0)).sum();
        libm::sqrt(rss / (n as f64 - 2.0) / sxx)
    } else {
        0.0
    };
    (slope, icpt, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (a, b, se) = ols(&x, &y, &[1.0, 2.0, 1.0, 3.0]);
        assert!((a - 2.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && se < 1e-12);
    }
}
