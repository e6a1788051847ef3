//! Composite quadrature on uniform grids.

/// Composite Simpson rule for samples `f(a + i·h)`, `i = 0..=N`. Falls back to
/// Simpson plus a closing trapezoid panel when `N` is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let m = values.len();
    match m {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let even_end = if (m - 1).is_multiple_of(2) {
                m - 1
            } else {
                m - 2
            };
            let mut s = values[0] + values[even_end];
            for (i, v) in values.iter().enumerate().take(even_end).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if even_end != m - 1 {
                total += 0.5 * h * (values[m - 2] + values[m - 1]);
            }
            total
        }
    }
}

/// `(1/T) ∫ f` over uniform samples spanning `T = h·(N)`.
pub fn simpson_mean(values: &[f64], h: f64) -> f64 {
    let span = h * (values.len().saturating_sub(1)) as f64;
    if span == 0.0 {
        values.first().copied().unwrap_or(0.0)
    } else {
        simpson(values, h) / span
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&v, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn odd_interval_count_still_converges() {
        let n = 101;
        let h = std::f64::consts::PI / n as f64;
        let v: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
        assert!((simpson(&v, h) - 2.0).abs() < 1e-4);
    }
}
