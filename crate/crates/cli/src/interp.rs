//! Cubic resampling of sampled series onto another grid.

use anyhow::{ensure, Result};

fn check_grid(t: &[f64], at: &[f64]) -> Result<()> {
    ensure!(t.len() >= 2, "need at least two samples to interpolate");
    ensure!(
        t.windows(2).all(|w| w[1] > w[0]),
        "sample times must be strictly increasing"
    );
    let (lo, hi) = (t[0], t[t.len() - 1]);
    let slack = 1e-12 * (hi - lo);
    ensure!(
        at.iter().all(|&s| s >= lo - slack && s <= hi + slack),
        "target grid [{:e}, {:e}] leaves the sampled range [{lo:e}, {hi:e}]",
        at.first().copied().unwrap_or(lo),
        at.last().copied().unwrap_or(hi)
    );
    Ok(())
}

fn interval(t: &[f64], s: f64) -> usize {
    t.partition_point(|&x| x <= s).clamp(1, t.len() - 1) - 1
}

/// Cubic Hermite interpolation using sampled values and their derivatives.
pub fn hermite(t: &[f64], y: &[f64], dy: &[f64], at: &[f64]) -> Result<Vec<f64>> {
    check_grid(t, at)?;
    Ok(at
        .iter()
        .map(|&s| {
            let i = interval(t, s);
            let h = t[i + 1] - t[i];
            let u = (s - t[i]) / h;
            let (u2, u3) = (u * u, u * u * u);
            let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
            let h10 = u3 - 2.0 * u2 + u;
            let h01 = -2.0 * u3 + 3.0 * u2;
            let h11 = u3 - u2;
            h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]
        })
        .collect())
}

/// Natural cubic spline through (t, y), evaluated at `at`.
pub fn spline(t: &[f64], y: &[f64], at: &[f64]) -> Result<Vec<f64>> {
    check_grid(t, at)?;
    let n = t.len();
    // second derivatives m, with m[0] = m[n-1] = 0, by the tridiagonal sweep
    let mut m = vec![0.0; n];
    if n > 2 {
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let b = 2.0 * (h0 + h1);
            let r = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - h0 * c[i - 1];
            c[i] = h1 / denom;
            d[i] = (r - h0 * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
    }
    Ok(at
        .iter()
        .map(|&s| {
            let i = interval(t, s);
            let h = t[i + 1] - t[i];
            let (a, b) = ((t[i + 1] - s) / h, (s - t[i]) / h);
            a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0
        })
        .collect())
}
