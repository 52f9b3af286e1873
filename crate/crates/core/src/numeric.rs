//! Small numerical kernels: adaptive Simpson quadrature, 1-D maximization and
//! bisection.

use crate::error::{Error, Result};

pub const QUAD_TOL: f64 = 1e-8;
pub const QUAD_MAX_DEPTH: u32 = 40;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
///
/// Fails with the achieved error estimate when some panel cannot be resolved
/// within `max_depth` bisections.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0f64;
    let v = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut worst);
    if !v.is_finite() {
        return Err(Error::numerical("quadrature", "integrand is not finite"));
    }
    if worst > tol {
        return Err(Error::numerical(
            "quadrature",
            format!("achieved tolerance {worst:e} exceeds requested {tol:e}"),
        ));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-15 {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *worst = worst.max(delta.abs() / 15.0);
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

/// Integrates over `[a, b]` split at the given breakpoints, each piece to
/// `tol / pieces`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let n = (pts.len() - 1).max(1) as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], tol / n, QUAD_MAX_DEPTH)?;
    }
    Ok(total)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Maximize `f` on `[a, b]`: a coarse scan of `scan` cells, then golden
/// section on the bracket around the best scanned point. Endpoints are
/// always considered.
pub fn maximize_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, scan: usize, tol: f64) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let n = scan.max(2);
    let h = (b - a) / n as f64;
    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = if i == n { b } else { a + h * i as f64 };
        let fx = f(x);
        if fx > best_f {
            best_f = fx;
            best_i = i;
        }
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    let (x, fx) = golden_max(&mut f, lo, hi, tol);
    let x_scan = if best_i == n { b } else { a + h * best_i as f64 };
    if fx >= best_f {
        (x, fx)
    } else {
        (x_scan, best_f)
    }
}

/// Bisection for `f(x) = target` with `f` non-decreasing on `[a, b]`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < target {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
