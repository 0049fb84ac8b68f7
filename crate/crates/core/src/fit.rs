//! Least-squares rate and slope fits on logarithmic data.

/// Straight-line least squares `y ≈ a + b·x`; returns `(a, b)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Fits `err(t) ≈ M e^{−rate·t}` over the points with `err > floor`.
/// Returns `(rate, M)`, or `None` when fewer than two points remain.
pub fn exponential_rate(ts: &[f64], errs: &[f64], floor: f64) -> Option<(f64, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(errs)
        .filter(|(_, e)| **e > floor)
        .map(|(t, e)| (*t, e.ln()))
        .unzip();
    line_fit(&x, &y).map(|(a, b)| (-b, a.exp()))
}

/// Log–log slope of `ys` against `xs` over the points with `y > floor`.
pub fn loglog_slope(xs: &[f64], ys: &[f64], floor: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **y > floor && **x > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    line_fit(&x, &y).map(|(_, b)| b)
}
