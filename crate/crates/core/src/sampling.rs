//! Random generators for DMR instances and price vectors, used by the test
//! harnesses and the CLI.

use rand::Rng;

use crate::distributions::{Marginal, ProblemInstance};
use crate::optimizer::increment_caps;
use crate::revenue::PriceVector;

/// A random marginal on `[0, v_bar]` whose revenue curve is concave on the
/// whole range.
pub fn random_dmr_marginal<R: Rng + ?Sized>(rng: &mut R, v_bar: f64) -> Marginal {
    random_dmr_marginal_depth(rng, v_bar, 0)
}

fn random_dmr_marginal_depth<R: Rng + ?Sized>(rng: &mut R, v_bar: f64, depth: u32) -> Marginal {
    let choices = if depth == 0 { 6 } else { 5 };
    match rng.random_range(0..choices) {
        0 => {
            let a = rng.random_range(0.0..0.6) * v_bar;
            Marginal::uniform(a, v_bar, v_bar).expect("valid uniform")
        }
        1 => {
            let a = rng.random_range(0.05..0.5) * v_bar;
            let eps = rng.random_range(-3.0..-1.0);
            Marginal::constant_elasticity(a, eps, v_bar).expect("valid elasticity")
        }
        2 => {
            let lambda = rng.random_range(0.1..2.0) / v_bar;
            Marginal::exponential(lambda, v_bar).expect("valid exponential")
        }
        3 => {
            let mu = rng.random_range(0.0..1.0) * v_bar;
            let sigma_min = (0.5 * v_bar * (v_bar - mu)).max(0.0).sqrt().max(0.05 * v_bar);
            let sigma = sigma_min * rng.random_range(1.0..1.5);
            Marginal::truncated_normal(mu, sigma, v_bar).expect("valid normal")
        }
        4 => {
            let n = rng.random_range(2..6);
            let mut dens: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            dens.sort_by(|a, b| a.total_cmp(b));
            dens[n - 1] += 0.1;
            let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.05..0.95)).collect();
            cuts.sort_by(|a, b| a.total_cmp(b));
            let mut xs = vec![0.0];
            xs.extend(cuts);
            xs.push(1.0);
            let mass: Vec<f64> = (0..n).map(|s| dens[s] * (xs[s + 1] - xs[s])).collect();
            let total: f64 = mass.iter().sum();
            let mut knots = vec![(0.0, 0.0)];
            let mut acc = 0.0;
            for s in 0..n {
                acc += mass[s] / total;
                let f = if s + 1 == n { 1.0 } else { acc.min(1.0) };
                knots.push((xs[s + 1] * v_bar, f));
            }
            knots.dedup_by(|a, b| a.0 <= b.0);
            Marginal::piecewise_linear(knots, v_bar).expect("valid piecewise")
        }
        _ => {
            let a = random_dmr_marginal_depth(rng, v_bar, depth + 1);
            let b = random_dmr_marginal_depth(rng, v_bar, depth + 1);
            let w = rng.random_range(0.1..0.9);
            Marginal::mixture(vec![a, b], vec![w, 1.0 - w]).expect("valid mixture")
        }
    }
}

/// Strictly increasing demands drawn from `1..=max_demand`.
pub fn random_demands<R: Rng + ?Sized>(rng: &mut R, k: usize, max_demand: u64) -> Vec<u64> {
    assert!(k as u64 <= max_demand);
    let mut ds: Vec<u64> = Vec::with_capacity(k);
    while ds.len() < k {
        let d = rng.random_range(1..=max_demand);
        if !ds.contains(&d) {
            ds.push(d);
        }
    }
    ds.sort_unstable();
    ds
}

/// Weights bounded away from zero and summing to one exactly.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    w
}

/// Random DMR instance with `k` demands up to `max_demand` and `V̄ = v_bar`.
pub fn random_dmr_instance<R: Rng + ?Sized>(rng: &mut R, k: usize, max_demand: u64, v_bar: f64) -> ProblemInstance {
    let demands = random_demands(rng, k, max_demand);
    let weights = random_weights(rng, k);
    let marginals = (0..k).map(|_| random_dmr_marginal(rng, v_bar)).collect();
    ProblemInstance::new(demands, weights, marginals, v_bar).expect("valid instance")
}

/// Uniform draw from the effective price domain: increments
/// `p_j - p_{j-1} ∈ [0, V̄ (d_j - d_{j-1})]`.
pub fn random_effective_prices<R: Rng + ?Sized>(rng: &mut R, inst: &ProblemInstance) -> PriceVector {
    let caps = increment_caps(inst);
    let mut acc = 0.0;
    let p = caps
        .iter()
        .map(|c| {
            acc += rng.random_range(0.0..=1.0) * c;
            acc
        })
        .collect();
    PriceVector::new(p).expect("ordered")
}

/// Uniform-ish draw from the ordered box `[0, d_k V̄]`: sorted uniforms.
pub fn random_ordered_prices<R: Rng + ?Sized>(rng: &mut R, inst: &ProblemInstance) -> PriceVector {
    let upper = inst.price_upper();
    let mut p: Vec<f64> = (0..inst.k()).map(|_| rng.random_range(0.0..=upper)).collect();
    p.sort_by(|a, b| a.total_cmp(b));
    PriceVector::new(p).expect("ordered")
}
