use serde::{Deserialize, Serialize};

use super::{d_raw, PriceVector};
use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};

/// `σ(i)` for every demand index and the induced paths `i → σ(i) → … → 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaAssignment {
    /// `sigma[i - 1] = σ(i)`.
    sigma: Vec<usize>,
    /// `paths[i - 1] = [i, σ(i), σ²(i), …, 0]`.
    paths: Vec<Vec<usize>>,
}

impl SigmaAssignment {
    /// Builds the assignment from `σ(1..=k)`; requires `σ(i) < i`.
    pub fn from_sigma(sigma: Vec<usize>) -> Result<Self> {
        if let Some(i) = sigma.iter().enumerate().position(|(i, s)| *s > i) {
            return Err(Error::invalid(format!(
                "sigma({}) = {} is not below {}",
                i + 1,
                sigma[i],
                i + 1
            )));
        }
        let paths = (1..=sigma.len())
            .map(|i| {
                let mut path = vec![i];
                let mut j = i;
                while j > 0 {
                    j = sigma[j - 1];
                    path.push(j);
                }
                path
            })
            .collect();
        Ok(SigmaAssignment { sigma, paths })
    }

    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `σ(i)` for `i ≥ 1`.
    pub fn sigma(&self, i: usize) -> usize {
        self.sigma[i - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.sigma
    }

    pub fn path(&self, i: usize) -> &[usize] {
        &self.paths[i - 1]
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }
}

/// `σ(i) = argmax_{j<i} D_{i,j}`, ties to the largest `j`.
pub fn assign_sigma(p: &PriceVector, inst: &ProblemInstance) -> SigmaAssignment {
    let sigma = (1..=inst.k())
        .map(|i| {
            let mut best = 0;
            let mut best_d = d_raw(p, inst, i, 0);
            for j in 1..i {
                let d = d_raw(p, inst, i, j);
                if d >= best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect();
    SigmaAssignment::from_sigma(sigma).expect("argmax below i")
}

fn check(p: &PriceVector, sigma: &SigmaAssignment, inst: &ProblemInstance) -> Result<()> {
    if p.k() != inst.k() || sigma.k() != inst.k() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} prices, sigma of length {}, {} demands",
            p.k(),
            sigma.k(),
            inst.k()
        )));
    }
    Ok(())
}

/// Closed-form revenue of region `σ`, thresholds saturated into `[0, V̄]`.
pub fn rev_sigma(p: &PriceVector, sigma: &SigmaAssignment, inst: &ProblemInstance) -> Result<f64> {
    check(p, sigma, inst)?;
    let mut total = 0.0;
    for i in 1..=inst.k() {
        let m = inst.marginal(i);
        let f = |j: usize| m.cdf_clamped(d_raw(p, inst, j, sigma.sigma(j)));
        let mut term = p.get(i) * (1.0 - f(i));
        for &j in &sigma.path(i)[..sigma.path(i).len() - 1] {
            let s = sigma.sigma(j);
            if s > 0 {
                term += p.get(s) * (f(j) - f(s));
            }
        }
        total += inst.q(i) * term;
    }
    Ok(total)
}

/// Expected revenue of posting `p`.
pub fn rev(p: &PriceVector, inst: &ProblemInstance) -> Result<f64> {
    if p.k() != inst.k() {
        return Err(Error::invalid(format!("{} prices for {} demands", p.k(), inst.k())));
    }
    rev_sigma(p, &assign_sigma(p, inst), inst)
}

/// Gradient of `Rev_σ` at `p` for the assigned `σ`; a supergradient of `Rev`
/// where it is not differentiable.
pub fn supergradient(p: &PriceVector, inst: &ProblemInstance) -> Result<Vec<f64>> {
    if p.k() != inst.k() {
        return Err(Error::invalid(format!("{} prices for {} demands", p.k(), inst.k())));
    }
    let sigma = assign_sigma(p, inst);
    let k = inst.k();
    let v_bar = inst.v_bar();
    let mut g: Vec<f64> = inst.weights().to_vec();
    for i in 1..=k {
        let m = inst.marginal(i);
        let q = inst.q(i);
        let path = sigma.path(i);
        for &j in &path[..path.len() - 1] {
            let s = sigma.sigma(j);
            let d = d_raw(p, inst, j, s);
            // d/dD [D F(D)] with F saturated above V̄
            let h = if d >= v_bar {
                1.0
            } else if d <= 0.0 {
                0.0
            } else {
                m.cdf_clamped(d) + d * m.pdf_clamped(d)
            };
            if !h.is_finite() {
                return Err(Error::numerical("supergradient", format!("density not finite at {d}")));
            }
            g[j - 1] -= q * h;
            if s > 0 {
                g[s - 1] += q * h;
            }
        }
    }
    Ok(g)
}
