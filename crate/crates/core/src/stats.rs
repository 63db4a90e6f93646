//! Small fitting helpers for growth-rate and depth reports.

/// Least-squares fit `y ≈ a·x + b`; returns (a, b).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let a = if den == 0.0 { 0.0 } else { num / den };
    (a, my - a * mx)
}

/// Fitted exponent of y against x on log-log axes.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Fit `y ≤ a·x + b` tightly: `a` by least squares, `b` as the maximum
/// residual, so the bound holds on every supplied point.
pub fn envelope_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (a, _) = linear_fit(xs, ys);
    let b = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| y - a * x)
        .fold(f64::NEG_INFINITY, f64::max);
    (a, b)
}
