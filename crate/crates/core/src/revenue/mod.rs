//! Buyer best response, thresholds, region assignment and the revenue
//! function with its independent cross-checks.

mod oracles;
mod sigma;

pub use oracles::{rev_by_integration, rev_monte_carlo, sample_type, MonteCarloEstimate};
pub use sigma::{assign_sigma, rev, rev_sigma, supergradient, SigmaAssignment};

use serde::{Deserialize, Serialize};

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};

/// Ordered bundle prices `0 ≤ p_1 ≤ … ≤ p_k`; `p_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("prices must be finite"));
        }
        if p.first().is_some_and(|x| *x < 0.0) {
            return Err(Error::invalid(format!(
                "prices must be non-negative, got p_1 = {}",
                p[0]
            )));
        }
        if let Some(i) = p.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::invalid(format!(
                "prices must be non-decreasing: p_{} = {} > p_{} = {}",
                i + 1,
                p[i],
                i + 2,
                p[i + 1]
            )));
        }
        Ok(PriceVector(p))
    }

    pub fn zeros(k: usize) -> Self {
        PriceVector(vec![0.0; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// `p_i` with `p_0 = 0`.
    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.0[i - 1]
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    fn check_k(&self, inst: &ProblemInstance) -> Result<()> {
        if self.k() != inst.k() {
            return Err(Error::invalid(format!("{} prices for {} demands", self.k(), inst.k())));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for PriceVector {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        PriceVector::new(p)
    }
}

impl From<PriceVector> for Vec<f64> {
    fn from(p: PriceVector) -> Self {
        p.0
    }
}

#[inline]
pub(crate) fn d_raw(p: &PriceVector, inst: &ProblemInstance, j: usize, l: usize) -> f64 {
    (p.get(j) - p.get(l)) / (inst.d(j) - inst.d(l))
}

/// `D_{j,l} = (p_j - p_l) / (d_j - d_l)`, the value at which a buyer with
/// demand at least `d_j` is indifferent between bundles `j` and `l`.
pub fn threshold(p: &PriceVector, inst: &ProblemInstance, j: usize, l: usize) -> Result<f64> {
    p.check_k(inst)?;
    if j <= l || j > inst.k() {
        return Err(Error::invalid(format!(
            "threshold needs k >= j > l >= 0, got j = {j}, l = {l}"
        )));
    }
    Ok(d_raw(p, inst, j, l))
}

/// For `i > j > l`, `D_{i,l}` is the convex combination
/// `(1 - λ) D_{i,j} + λ D_{j,l}` with `λ = (d_j - d_l) / (d_i - d_l)`.
/// Returns `(λ, D_{i,l}, (1 - λ) D_{i,j} + λ D_{j,l})`.
pub fn convex_combination_identity(
    p: &PriceVector,
    inst: &ProblemInstance,
    i: usize,
    j: usize,
    l: usize,
) -> Result<(f64, f64, f64)> {
    p.check_k(inst)?;
    if !(i > j && j > l && i <= inst.k()) {
        return Err(Error::invalid(format!("need k >= i > j > l >= 0, got ({i}, {j}, {l})")));
    }
    let lambda = (inst.d(j) - inst.d(l)) / (inst.d(i) - inst.d(l));
    let lhs = d_raw(p, inst, i, l);
    let rhs = (1.0 - lambda) * d_raw(p, inst, i, j) + lambda * d_raw(p, inst, j, l);
    Ok((lambda, lhs, rhs))
}

/// Bundle index (0 = nothing) maximizing `v min(d, d_j) - p_j`; ties go to
/// the larger bundle.
pub fn best_bundle(v: f64, d: f64, p: &PriceVector, inst: &ProblemInstance) -> usize {
    let mut best = 0;
    let mut best_u = 0.0;
    for j in 1..=p.k() {
        let u = v * d.min(inst.d(j)) - p.get(j);
        if u >= best_u {
            best = j;
            best_u = u;
        }
    }
    best
}

/// [`best_bundle`] for a bare menu: `prices[j - 1]` buys `demands[j - 1]`
/// units.
pub fn best_bundle_menu(v: f64, d: f64, demands: &[f64], prices: &[f64]) -> usize {
    let mut best = 0;
    let mut best_u = 0.0;
    for (j, (dj, pj)) in demands.iter().zip(prices).enumerate() {
        let u = v * d.min(*dj) - pj;
        if u >= best_u {
            best = j + 1;
            best_u = u;
        }
    }
    best
}

/// Utility of demand `d` at value `v` for bundle `j`.
pub fn utility(v: f64, d: f64, j: usize, p: &PriceVector, inst: &ProblemInstance) -> f64 {
    v * d.min(inst.d(j)) - p.get(j)
}
