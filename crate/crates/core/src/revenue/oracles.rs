use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{best_bundle, d_raw, PriceVector};
use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};
use crate::numeric;

/// Absolute tolerance for the integration oracle.
pub const INTEGRATION_TOL: f64 = 1e-9;

/// `Σ_i q_i ∫ p_{x(v, d_i)} dF_i(v)` by adaptive quadrature, where `x` is the
/// buyer's best response. The range is split at every pairwise threshold so
/// the purchased bundle is constant on each piece.
pub fn rev_by_integration(p: &PriceVector, inst: &ProblemInstance) -> Result<f64> {
    if p.k() != inst.k() {
        return Err(Error::invalid(format!("{} prices for {} demands", p.k(), inst.k())));
    }
    let k = inst.k();
    let v_bar = inst.v_bar();
    let mut cuts = Vec::new();
    for j in 1..=k {
        for l in 0..j {
            cuts.push(d_raw(p, inst, j, l));
        }
    }
    let tol = INTEGRATION_TOL / k as f64;
    let mut total = 0.0;
    for i in 1..=k {
        let m = inst.marginal(i);
        let mut pts: Vec<f64> = cuts.iter().chain(m.breakpoints().iter()).copied().collect();
        pts.retain(|x| *x > 0.0 && *x < v_bar);
        pts.push(0.0);
        pts.push(v_bar);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * v_bar);
        let pieces = (pts.len() - 1) as f64;
        let mut acc = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let price = p.get(best_bundle(0.5 * (a + b), inst.d(i), p, inst));
            if price == 0.0 {
                continue;
            }
            // keep evaluations strictly inside the piece so density jumps at
            // the ends take their one-sided limits
            let eta = 1e-13 * (b - a).max(1e-300);
            let dens = |x: f64| m.pdf_clamped(x.clamp(a + eta, b - eta));
            let mass = numeric::adaptive_simpson(dens, a, b, tol / (pieces * price), numeric::QUAD_MAX_DEPTH)?;
            acc += price * mass;
        }
        total += inst.q(i) * acc;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

/// Sample mean of the price paid over `n` i.i.d. buyers.
pub fn rev_monte_carlo(p: &PriceVector, inst: &ProblemInstance, n: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if p.k() != inst.k() {
        return Err(Error::invalid(format!("{} prices for {} demands", p.k(), inst.k())));
    }
    if n == 0 {
        return Err(Error::invalid("monte carlo needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford updates: no drift from summing many equal payments
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 1..=n {
        let (v, i) = sample_type(inst, &mut rng);
        let paid = p.get(best_bundle(v, inst.d(i), p, inst));
        let delta = paid - mean;
        mean += delta / t as f64;
        m2 += delta * (paid - mean);
    }
    let nf = n as f64;
    let var = if n > 1 { (m2 / (nf - 1.0)).max(0.0) } else { 0.0 };
    Ok(MonteCarloEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        n,
    })
}

/// Draws `(v, i)`: demand index by the weights, then a value from its
/// marginal.
pub fn sample_type<R: Rng + ?Sized>(inst: &ProblemInstance, rng: &mut R) -> (f64, usize) {
    let u: f64 = rng.random();
    let mut i = inst.k();
    let mut acc = 0.0;
    for (idx, q) in inst.weights().iter().enumerate() {
        acc += q;
        if u < acc {
            i = idx + 1;
            break;
        }
    }
    let v = inst.marginal(i).sample(rng);
    (v, i)
}
