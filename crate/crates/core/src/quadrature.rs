//! One-dimensional quadrature and small fitting helpers.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]` to a relative tolerance.
///
/// The tolerance is taken relative to ∫|f|, estimated up front with a
/// composite Simpson pass, so integrands with cancellation still terminate.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Input(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let panels = 64;
    let step = (b - a) / panels as f64;
    let mut scale = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * step;
        scale += step / 6.0 * (f(x0).abs() + 4.0 * f(x0 + 0.5 * step).abs() + f(x0 + step).abs());
    }
    if !scale.is_finite() {
        return Err(Error::Numeric("integrand is not finite".into()));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = rel_tol * scale;
    // Split into the same panels so that piecewise integrands (tabulated
    // kernels) get a fair start.
    let mut total = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * step;
        let x1 = if p + 1 == panels { b } else { x0 + step };
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson_rec(&f, x0, x1, f0, fm, f1, whole, tol / panels as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge near x = {m}"
        )));
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fixed-order composite midpoint rule.
pub fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    let w = (b - a) / samples as f64;
    (0..samples).map(|i| f(a + (i as f64 + 0.5) * w)).sum::<f64>() * w
}
