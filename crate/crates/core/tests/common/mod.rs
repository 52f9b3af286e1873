#![allow(dead_code)]

use mupricing::revenue::rev;
use mupricing::{PriceVector, ProblemInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pv(p: &[f64]) -> PriceVector {
    PriceVector::new(p.to_vec()).unwrap()
}

pub fn shifted(p: &PriceVector, j: usize, h: f64) -> Vec<f64> {
    let mut v = p.as_slice().to_vec();
    v[j] += h;
    v
}

/// Revenue at raw coordinates, or `None` when they leave the ordered set.
pub fn rev_at(v: &[f64], inst: &ProblemInstance) -> Option<f64> {
    PriceVector::new(v.to_vec()).ok().map(|p| rev(&p, inst).unwrap())
}

/// Central difference along coordinate `j`.
pub fn central_diff(p: &PriceVector, inst: &ProblemInstance, j: usize, h: f64) -> Option<f64> {
    let up = rev_at(&shifted(p, j, h), inst)?;
    let dn = rev_at(&shifted(p, j, -h), inst)?;
    Some((up - dn) / (2.0 * h))
}

/// Brute-force revenue: each demand type buys its favourite bundle at every
/// midpoint of a uniform value grid, weighted by the cdf mass of the cell.
pub fn rev_brute(p: &PriceVector, inst: &ProblemInstance, cells: usize) -> f64 {
    let vb = inst.v_bar();
    let mut total = 0.0;
    for i in 1..=inst.k() {
        let m = inst.marginal(i);
        let di = inst.d(i);
        let mut acc = 0.0;
        for c in 0..cells {
            let lo = vb * c as f64 / cells as f64;
            let hi = vb * (c + 1) as f64 / cells as f64;
            let mass = m.cdf_clamped(hi) - m.cdf_clamped(lo);
            if mass == 0.0 {
                continue;
            }
            let v = 0.5 * (lo + hi);
            let mut best_u = 0.0;
            let mut pay = 0.0;
            for j in 1..=inst.k() {
                let u = v * di.min(inst.d(j)) - p.get(j);
                if u >= best_u {
                    best_u = u;
                    pay = p.get(j);
                }
            }
            acc += mass * pay;
        }
        total += inst.q(i) * acc;
    }
    total
}
