//! Finite-type mechanisms: the optimal randomized mechanism by linear
//! programming and the optimal deterministic menu by enumeration.

mod simplex;
mod transforms;

pub use simplex::Tableau;
pub use transforms::{expost_payments, support_transform, BundleMechanism, ExPostPayment};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::revenue::best_bundle_menu;

/// Default limit on the number of types accepted by [`lp_optimal`].
pub const DEFAULT_MAX_TYPES: usize = 200;

/// Feasibility tolerance for the post-solve constraint check.
pub const FEAS_TOL: f64 = 1e-8;
/// LP outputs this close to zero are reported as zero.
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteRepr", into = "DiscreteRepr")]
pub struct DiscreteInstance {
    types: Vec<(f64, u64)>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteRepr {
    types: Vec<(f64, u64)>,
    probs: Vec<f64>,
}

impl TryFrom<DiscreteRepr> for DiscreteInstance {
    type Error = Error;

    fn try_from(r: DiscreteRepr) -> Result<Self> {
        DiscreteInstance::new(r.types, r.probs)
    }
}

impl From<DiscreteInstance> for DiscreteRepr {
    fn from(d: DiscreteInstance) -> Self {
        DiscreteRepr {
            types: d.types,
            probs: d.probs,
        }
    }
}

impl DiscreteInstance {
    pub fn new(types: Vec<(f64, u64)>, probs: Vec<f64>) -> Result<Self> {
        if types.is_empty() || types.len() != probs.len() {
            return Err(Error::construction(
                "need one probability per type and at least one type",
            ));
        }
        if let Some(t) = types.iter().find(|t| !(t.0.is_finite() && t.0 >= 0.0) || t.1 == 0) {
            return Err(Error::construction(format!(
                "invalid type ({}, {}): need v >= 0, d >= 1",
                t.0, t.1
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::construction("probabilities must be non-negative"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::construction(format!("probabilities sum to {s}, expected 1")));
        }
        Ok(DiscreteInstance { types, probs })
    }

    /// Types with equal probability.
    pub fn uniform(types: Vec<(f64, u64)>) -> Result<Self> {
        let n = types.len().max(1);
        let mut probs = vec![1.0 / n as f64; types.len()];
        if !probs.is_empty() {
            let rest: f64 = probs[1..].iter().sum();
            probs[0] = 1.0 - rest;
        }
        Self::new(types, probs)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[(f64, u64)] {
        &self.types
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Distinct demands in increasing order.
    pub fn demands(&self) -> Vec<u64> {
        let mut d: Vec<u64> = self.types.iter().map(|t| t.1).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

/// Per-type probability `w` of receiving exactly `d` units and expected
/// payment `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
}

impl Mechanism {
    /// Expected utility of type `t` reporting `s`.
    pub fn utility(&self, inst: &DiscreteInstance, t: usize, s: usize) -> f64 {
        let (v, d) = inst.types[t];
        let ds = inst.types[s].1;
        v * d.min(ds) as f64 * self.w[s] - self.p[s]
    }

    pub fn revenue(&self, inst: &DiscreteInstance) -> f64 {
        self.p.iter().zip(&inst.probs).map(|(p, q)| p * q).sum()
    }

    /// Largest violation over `0 ≤ w ≤ 1`, EIR and all-pairs EIC.
    pub fn max_violation(&self, inst: &DiscreteInstance) -> f64 {
        let n = inst.len();
        let mut worst: f64 = 0.0;
        for t in 0..n {
            worst = worst.max(-self.w[t]).max(self.w[t] - 1.0);
            let truthful = self.utility(inst, t, t);
            worst = worst.max(-truthful);
            for s in 0..n {
                worst = worst.max(self.utility(inst, t, s) - truthful);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpConfig {
    pub max_types: usize,
    /// Keep adding violated incentive constraints until none remain. When
    /// false only the local constraints are imposed.
    pub row_generation: bool,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            max_types: DEFAULT_MAX_TYPES,
            row_generation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub mechanism: Mechanism,
    pub revenue: f64,
    pub rows: usize,
    pub pivots: usize,
    pub rounds: usize,
}

/// Optimal randomized mechanism under all-pairs EIC and EIR.
pub fn lp_optimal(inst: &DiscreteInstance) -> Result<(Mechanism, f64)> {
    let s = lp_optimal_with(inst, &LpConfig::default())?;
    Ok((s.mechanism, s.revenue))
}

/// Pairs `(t, s)` adjacent in value within a demand or adjacent in demand
/// at equal value.
pub fn local_pairs(inst: &DiscreteInstance) -> Vec<(usize, usize)> {
    let n = inst.len();
    let demands = inst.demands();
    let mut pairs = Vec::new();
    for &d in &demands {
        let mut idx: Vec<usize> = (0..n).filter(|&t| inst.types[t].1 == d).collect();
        idx.sort_by(|&a, &b| inst.types[a].0.total_cmp(&inst.types[b].0));
        for w in idx.windows(2) {
            pairs.push((w[0], w[1]));
            pairs.push((w[1], w[0]));
        }
    }
    for t in 0..n {
        let (v, d) = inst.types[t];
        let pos = demands.iter().position(|&x| x == d).expect("own demand");
        for nb in [pos.checked_sub(1), Some(pos + 1)].into_iter().flatten() {
            if let Some(&d2) = demands.get(nb) {
                if let Some(s) = (0..n).find(|&s| inst.types[s].1 == d2 && inst.types[s].0 == v) {
                    pairs.push((t, s));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

pub fn lp_optimal_with(inst: &DiscreteInstance, cfg: &LpConfig) -> Result<LpSolution> {
    let n = inst.len();
    if n > cfg.max_types {
        return Err(Error::Size(format!("{n} types exceed the limit of {}", cfg.max_types)));
    }
    // variables: w_t at t, p_t at n + t
    let mut c = vec![0.0; 2 * n];
    c[n..].copy_from_slice(&inst.probs);
    let mut tab = Tableau::new(&c);
    for t in 0..n {
        let (v, d) = inst.types[t];
        tab.add_row(&[(t, 1.0)], 1.0);
        tab.add_row(&[(n + t, 1.0), (t, -v * d as f64)], 0.0);
    }
    let ic_row = |tab: &mut Tableau, t: usize, s: usize| {
        let (v, d) = inst.types[t];
        let ds = inst.types[s].1;
        // v min(d, d_s) w_s - p_s - v d w_t + p_t ≤ 0
        tab.add_row(
            &[
                (s, v * d.min(ds) as f64),
                (n + s, -1.0),
                (t, -v * d as f64),
                (n + t, 1.0),
            ],
            0.0,
        );
    };
    let mut have = vec![false; n * n];
    for (t, s) in local_pairs(inst) {
        have[t * n + s] = true;
        ic_row(&mut tab, t, s);
    }
    tab.primal()?;
    let mut rounds = 1;
    if cfg.row_generation {
        loop {
            let x = tab.solution();
            let mech = Mechanism {
                w: x[..n].to_vec(),
                p: x[n..].to_vec(),
            };
            let mut added = 0;
            for t in 0..n {
                let truthful = mech.utility(inst, t, t);
                let mut worst = None;
                let mut worst_gap = 1e-10;
                for s in 0..n {
                    if s == t || have[t * n + s] {
                        continue;
                    }
                    let gap = mech.utility(inst, t, s) - truthful;
                    if gap > worst_gap {
                        worst_gap = gap;
                        worst = Some(s);
                    }
                }
                if let Some(s) = worst {
                    have[t * n + s] = true;
                    ic_row(&mut tab, t, s);
                    added += 1;
                }
            }
            if added == 0 {
                break;
            }
            rounds += 1;
            tab.dual()?;
            tab.primal()?;
        }
    }
    tab.finish()?;
    let x = tab.solution();
    let snap = |x: f64| if x.abs() <= SNAP_TOL { 0.0 } else { x };
    let mechanism = Mechanism {
        w: x[..n].iter().map(|&w| snap(w).min(1.0)).collect(),
        p: x[n..].iter().map(|&p| snap(p)).collect(),
    };
    if cfg.row_generation {
        let viol = mechanism.max_violation(inst);
        if viol > FEAS_TOL {
            return Err(Error::numerical(
                "lp_optimal",
                format!("solution violates constraints by {viol:e} after {} pivots", tab.pivots),
            ));
        }
    }
    Ok(LpSolution {
        revenue: mechanism.revenue(inst),
        mechanism,
        rows: tab.rows(),
        pivots: tab.pivots,
        rounds,
    })
}

/// Expected revenue of a deterministic menu; `prices[j]` is the price of
/// `demands[j]` units.
pub fn menu_revenue(inst: &DiscreteInstance, demands: &[u64], prices: &[f64]) -> f64 {
    let df: Vec<f64> = demands.iter().map(|&d| d as f64).collect();
    inst.types
        .iter()
        .zip(&inst.probs)
        .map(|(&(v, d), q)| {
            let j = best_bundle_menu(v, d as f64, &df, prices);
            if j == 0 {
                0.0
            } else {
                q * prices[j - 1]
            }
        })
        .sum()
}

/// Largest number of distinct demands handled by exhaustive enumeration.
pub const MAX_ENUM_DEMANDS: usize = 4;
/// Largest number of candidate menus evaluated.
pub const MAX_ENUM_CANDIDATES: u64 = 50_000_000;

/// Optimal deterministic menu (one price per distinct demand) and its
/// revenue.
///
/// Revenue is piecewise linear in the prices, with pieces cut by the
/// indifference hyperplanes `p_a - p_b = v (d_a - d_b)` (`b = 0` meaning the
/// empty bundle) over type values `v`, and the buyer breaks ties toward the
/// larger, weakly more expensive bundle. The maximum is therefore attained
/// at a vertex, which is fixed by `k` independent tight hyperplanes. These
/// form a spanning tree on `{0, …, k}`: every candidate is a rooted tree
/// plus one value in `{0} ∪ {type values}` per edge.
pub fn deterministic_optimal(inst: &DiscreteInstance) -> Result<(Vec<f64>, f64)> {
    let demands = inst.demands();
    let k = demands.len();
    if k > MAX_ENUM_DEMANDS {
        return Err(Error::Size(format!(
            "{k} distinct demands exceed the enumeration limit of {MAX_ENUM_DEMANDS}"
        )));
    }
    let mut values: Vec<f64> = inst.types.iter().map(|t| t.0).collect();
    values.push(0.0);
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let trees = rooted_trees(k);
    let count = trees.len() as u64 * (values.len() as u64).pow(k as u32);
    if count > MAX_ENUM_CANDIDATES {
        return Err(Error::Size(format!(
            "{count} candidate menus exceed the limit of {MAX_ENUM_CANDIDATES}"
        )));
    }
    let df: Vec<f64> = std::iter::once(0.0).chain(demands.iter().map(|&d| d as f64)).collect();
    let mut best: (Vec<f64>, f64) = (vec![0.0; k], 0.0);
    let mut prices = vec![0.0; k + 1];
    let mut choice = vec![0usize; k];
    for (parent, order) in &trees {
        choice.iter_mut().for_each(|c| *c = 0);
        loop {
            for &j in order {
                let par = parent[j - 1];
                prices[j] = prices[par] + values[choice[j - 1]] * (df[j] - df[par]);
            }
            let p = &prices[1..];
            if p.windows(2).all(|w| w[0] <= w[1]) {
                let r = menu_revenue(inst, &demands, p);
                if r > best.1 + 1e-15 {
                    best = (p.to_vec(), r);
                }
            }
            // odometer over edge values
            let mut pos = 0;
            while pos < k {
                choice[pos] += 1;
                if choice[pos] < values.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    Ok(best)
}

/// All parent maps `{1..k} → {0..k}` whose graph is a tree rooted at 0,
/// each with a topological order of `1..k`.
fn rooted_trees(k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut parent = vec![0usize; k];
    loop {
        if let Some(order) = topo_order(&parent) {
            out.push((parent.clone(), order));
        }
        let mut pos = 0;
        while pos < k {
            parent[pos] += 1;
            if parent[pos] <= k {
                break;
            }
            parent[pos] = 0;
            pos += 1;
        }
        if pos == k {
            return out;
        }
    }
}

fn topo_order(parent: &[usize]) -> Option<Vec<usize>> {
    let k = parent.len();
    let mut placed = vec![false; k + 1];
    placed[0] = true;
    let mut order = Vec::with_capacity(k);
    while order.len() < k {
        let before = order.len();
        for j in 1..=k {
            if !placed[j] && parent[j - 1] != j && placed[parent[j - 1]] {
                placed[j] = true;
                order.push(j);
            }
        }
        if order.len() == before {
            return None;
        }
    }
    Some(order)
}

/// LP revenue minus deterministic revenue.
pub fn determinism_gap(inst: &DiscreteInstance) -> Result<f64> {
    let (_, lp) = lp_optimal(inst)?;
    let (_, det) = deterministic_optimal(inst)?;
    Ok(lp - det)
}
