use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Feedback, MarketInfo, Strategy};
use crate::revenue::PriceVector;

/// Posts the same prices every round.
#[derive(Debug, Clone)]
pub struct FixedPrices {
    p: PriceVector,
}

impl FixedPrices {
    pub fn new(p: PriceVector) -> Self {
        FixedPrices { p }
    }
}

impl Strategy for FixedPrices {
    fn id(&self) -> String {
        "fixed".into()
    }

    fn post(&mut self, _round: u64) -> PriceVector {
        self.p.clone()
    }

    fn observe(&mut self, _feedback: Feedback<'_>) {}

    fn incumbent(&self) -> Option<PriceVector> {
        Some(self.p.clone())
    }
}

/// Exploration probability `min(1, eps0 t^-exponent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsGridConfig {
    pub eps0: f64,
    pub exponent: f64,
}

impl Default for EpsGridConfig {
    fn default() -> Self {
        EpsGridConfig {
            eps0: 1.0,
            exponent: 1.0 / 3.0,
        }
    }
}

/// ε-greedy over a finite set of price vectors.
#[derive(Debug, Clone)]
pub struct EpsGrid {
    arms: Vec<PriceVector>,
    cfg: EpsGridConfig,
    plays: Vec<u64>,
    totals: Vec<f64>,
    current: usize,
    rng: ChaCha8Rng,
}

impl EpsGrid {
    pub fn new(arms: Vec<PriceVector>, cfg: EpsGridConfig, seed: u64) -> Self {
        assert!(!arms.is_empty(), "need at least one arm");
        let n = arms.len();
        EpsGrid {
            arms,
            cfg,
            plays: vec![0; n],
            totals: vec![0.0; n],
            current: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Arms on the lattice with `m` points per increment axis of the box
    /// `p_j - p_{j-1} ∈ [0, V̄ (d_j - d_{j-1})]`.
    pub fn lattice(info: &MarketInfo, m: usize) -> Vec<PriceVector> {
        let m = m.max(2);
        let k = info.k();
        let mut arms = Vec::new();
        let mut idx = vec![0usize; k];
        loop {
            let mut acc = 0.0;
            let p = (1..=k)
                .map(|j| {
                    let cap = info.v_bar * (info.d(j) - info.d(j - 1));
                    acc += cap * idx[j - 1] as f64 / (m - 1) as f64;
                    acc
                })
                .collect();
            arms.push(PriceVector::new(p).expect("ordered"));
            let mut pos = 0;
            while pos < k {
                idx[pos] += 1;
                if idx[pos] < m {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == k {
                return arms;
            }
        }
    }

    pub fn plays(&self) -> &[u64] {
        &self.plays
    }

    pub fn arms(&self) -> &[PriceVector] {
        &self.arms
    }

    fn best_arm(&self) -> usize {
        let mut best = 0;
        let mut best_mean = f64::NEG_INFINITY;
        for (i, (&n, &s)) in self.plays.iter().zip(&self.totals).enumerate() {
            let mean = if n == 0 { f64::INFINITY } else { s / n as f64 };
            if mean > best_mean {
                best = i;
                best_mean = mean;
            }
        }
        best
    }
}

impl Strategy for EpsGrid {
    fn id(&self) -> String {
        "eps-grid".into()
    }

    fn post(&mut self, round: u64) -> PriceVector {
        let eps = (self.cfg.eps0 * (round as f64).powf(-self.cfg.exponent)).min(1.0);
        self.current = if self.rng.random::<f64>() < eps {
            self.rng.random_range(0..self.arms.len())
        } else {
            self.best_arm()
        };
        self.arms[self.current].clone()
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        self.plays[self.current] += 1;
        self.totals[self.current] += feedback.revenue();
    }

    fn incumbent(&self) -> Option<PriceVector> {
        Some(self.arms[self.best_arm()].clone())
    }
}

/// Schedules `δ_s = delta0 s^-delta_exp` and `η_s = eta0 s^-eta_exp`, where
/// `s` counts completed perturbation pairs. Both act on increments
/// normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointConfig {
    pub delta0: f64,
    pub delta_exp: f64,
    pub eta0: f64,
    pub eta_exp: f64,
    /// Starting normalized increments.
    pub start: f64,
}

impl Default for TwoPointConfig {
    fn default() -> Self {
        TwoPointConfig {
            delta0: 0.2,
            delta_exp: 0.25,
            eta0: 0.05,
            eta_exp: 0.75,
            start: 0.25,
        }
    }
}

/// Two-point zeroth-order ascent.
///
/// The state is `x ∈ [0, 1]^k` with `p_j - p_{j-1} = x_j V̄ (d_j - d_{j-1})`.
/// Consecutive rounds post `x + δu` and `x - δu` (clipped to the box) for a
/// random unit `u`; then `x` moves by `η k (r₊ - r₋) / (2δ R) u` with
/// `R = d_k V̄` and is clipped back into the box.
#[derive(Debug, Clone)]
pub struct TwoPoint {
    info: MarketInfo,
    cfg: TwoPointConfig,
    caps: Vec<f64>,
    x: Vec<f64>,
    dir: Vec<f64>,
    r_plus: f64,
    pairs: u64,
    rng: ChaCha8Rng,
}

impl TwoPoint {
    pub fn new(info: MarketInfo, cfg: TwoPointConfig, seed: u64) -> Self {
        let k = info.k();
        let caps = (1..=k).map(|j| info.v_bar * (info.d(j) - info.d(j - 1))).collect();
        TwoPoint {
            x: vec![cfg.start.clamp(0.0, 1.0); k],
            info,
            cfg,
            caps,
            dir: vec![0.0; k],
            r_plus: 0.0,
            pairs: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn delta(&self) -> f64 {
        self.cfg.delta0 * ((self.pairs + 1) as f64).powf(-self.cfg.delta_exp)
    }

    fn eta(&self) -> f64 {
        self.cfg.eta0 * ((self.pairs + 1) as f64).powf(-self.cfg.eta_exp)
    }

    fn prices(&self, x: &[f64]) -> PriceVector {
        let mut acc = 0.0;
        let p = x
            .iter()
            .zip(&self.caps)
            .map(|(xi, c)| {
                acc += xi.clamp(0.0, 1.0) * c;
                acc
            })
            .collect();
        PriceVector::new(p).expect("non-negative increments")
    }

    fn shifted(&self, sign: f64) -> PriceVector {
        let d = sign * self.delta();
        let x: Vec<f64> = self.x.iter().zip(&self.dir).map(|(x, u)| x + d * u).collect();
        self.prices(&x)
    }

    fn unit_direction(&mut self) -> Vec<f64> {
        let k = self.info.k();
        loop {
            // normalized Gaussian coordinates give a uniform direction
            let v: Vec<f64> = (0..k).map(|_| self.rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

impl Strategy for TwoPoint {
    fn id(&self) -> String {
        "two-point".into()
    }

    fn post(&mut self, round: u64) -> PriceVector {
        if round % 2 == 1 {
            self.dir = self.unit_direction();
            self.shifted(1.0)
        } else {
            self.shifted(-1.0)
        }
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        if feedback.round % 2 == 1 {
            self.r_plus = feedback.revenue();
            return;
        }
        let k = self.info.k() as f64;
        let scale = self.info.price_upper();
        let step = self.eta() * k * (self.r_plus - feedback.revenue()) / (2.0 * self.delta() * scale);
        for (x, u) in self.x.iter_mut().zip(&self.dir) {
            *x = (*x + step * u).clamp(0.0, 1.0);
        }
        self.pairs += 1;
    }

    fn incumbent(&self) -> Option<PriceVector> {
        Some(self.prices(&self.x))
    }
}
