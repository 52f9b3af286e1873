//! Per-demand value distributions on `[0, V̄]`.
//!
//! Every family is truncated to `[0, V̄]` by conditioning, so `F(V̄) = 1`
//! exactly. `V̄ = ∞` is allowed for a standalone [`Marginal`] so that the
//! untruncated reference families can be evaluated; a [`ProblemInstance`]
//! requires a finite bound.

mod classify;
mod problem;

pub use classify::DmrVerdict;
pub use problem::ProblemInstance;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// `F(v) = 1 - (v/a)^(1/ε)` for `v ≥ a`, with `ε < 0`.
    ConstantElasticity { a: f64, epsilon: f64 },
    /// Normal(μ, σ²) conditioned on `[0, V̄]`.
    TruncatedNormal { mu: f64, sigma: f64 },
    /// Exponential with rate λ conditioned on `[0, V̄]`.
    ExponentialTruncated { lambda: f64 },
    /// Knots `(v, F)`; the CDF interpolates linearly between them.
    PiecewiseLinearCdf { knots: Vec<(f64, f64)> },
    Mixture {
        components: Vec<Marginal>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalRepr", into = "MarginalRepr")]
pub struct Marginal {
    kind: MarginalKind,
    v_bar: f64,
    norm: Norm,
}

#[derive(Serialize, Deserialize)]
struct MarginalRepr {
    #[serde(flatten)]
    kind: MarginalKind,
    v_bar: f64,
}

impl TryFrom<MarginalRepr> for Marginal {
    type Error = Error;

    fn try_from(r: MarginalRepr) -> Result<Self> {
        Marginal::new(r.kind, r.v_bar)
    }
}

impl From<Marginal> for MarginalRepr {
    fn from(m: Marginal) -> Self {
        MarginalRepr {
            kind: m.kind,
            v_bar: m.v_bar,
        }
    }
}

/// Untruncated CDF and survival at the edges `0` and `V̄`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Norm {
    g0: f64,
    g1: f64,
    s0: f64,
    s1: f64,
}

impl Marginal {
    pub fn new(kind: MarginalKind, v_bar: f64) -> Result<Self> {
        if v_bar.is_nan() || v_bar <= 0.0 {
            return Err(Error::construction(format!("v_bar must be positive, got {v_bar}")));
        }
        validate_kind(&kind, v_bar)?;
        let mut m = Marginal {
            kind,
            v_bar,
            norm: Norm::default(),
        };
        m.norm = Norm {
            g0: m.base_cdf(0.0),
            g1: m.base_cdf(v_bar),
            s0: m.base_sf(0.0),
            s1: m.base_sf(v_bar),
        };
        if (m.norm.g1 - m.norm.g0).is_nan() || m.norm.g1 - m.norm.g0 <= 0.0 {
            return Err(Error::construction("distribution puts no mass on [0, v_bar]"));
        }
        Ok(m)
    }

    pub fn uniform(a: f64, b: f64, v_bar: f64) -> Result<Self> {
        Self::new(MarginalKind::Uniform { a, b }, v_bar)
    }

    pub fn constant_elasticity(a: f64, epsilon: f64, v_bar: f64) -> Result<Self> {
        Self::new(MarginalKind::ConstantElasticity { a, epsilon }, v_bar)
    }

    pub fn truncated_normal(mu: f64, sigma: f64, v_bar: f64) -> Result<Self> {
        Self::new(MarginalKind::TruncatedNormal { mu, sigma }, v_bar)
    }

    pub fn exponential(lambda: f64, v_bar: f64) -> Result<Self> {
        Self::new(MarginalKind::ExponentialTruncated { lambda }, v_bar)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>, v_bar: f64) -> Result<Self> {
        Self::new(MarginalKind::PiecewiseLinearCdf { knots }, v_bar)
    }

    /// Convex combination of marginals sharing one `V̄`.
    pub fn mixture(components: Vec<Marginal>, weights: Vec<f64>) -> Result<Self> {
        let v_bar = components
            .first()
            .map(|c| c.v_bar)
            .ok_or_else(|| Error::construction("mixture needs at least one component"))?;
        Self::new(MarginalKind::Mixture { components, weights }, v_bar)
    }

    pub fn kind(&self) -> &MarginalKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MarginalKind::Uniform { .. } => "uniform",
            MarginalKind::ConstantElasticity { .. } => "constant_elasticity",
            MarginalKind::TruncatedNormal { .. } => "truncated_normal",
            MarginalKind::ExponentialTruncated { .. } => "exponential_truncated",
            MarginalKind::PiecewiseLinearCdf { .. } => "piecewise_linear_cdf",
            MarginalKind::Mixture { .. } => "mixture",
        }
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    /// Smallest and largest points of the support.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            MarginalKind::Uniform { a, b } => (*a, b.min(self.v_bar)),
            MarginalKind::ConstantElasticity { a, .. } => (*a, self.v_bar),
            MarginalKind::TruncatedNormal { .. } | MarginalKind::ExponentialTruncated { .. } => (0.0, self.v_bar),
            MarginalKind::PiecewiseLinearCdf { knots } => {
                let lo = knots
                    .iter()
                    .take_while(|k| k.1 <= 0.0)
                    .last()
                    .map_or(knots[0].0, |k| k.0);
                let hi = knots.iter().find(|k| k.1 >= 1.0).map_or(self.v_bar, |k| k.0);
                (lo, hi.min(self.v_bar))
            }
            MarginalKind::Mixture { components, weights } => components
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(c, _)| c.support())
                .fold((f64::INFINITY, 0.0f64), |acc, s| (acc.0.min(s.0), acc.1.max(s.1))),
        }
    }

    /// Points where the density may jump or kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            MarginalKind::Uniform { a, b } => vec![*a, *b],
            MarginalKind::ConstantElasticity { a, .. } => vec![*a],
            MarginalKind::TruncatedNormal { .. } | MarginalKind::ExponentialTruncated { .. } => vec![],
            MarginalKind::PiecewiseLinearCdf { knots } => knots.iter().map(|k| k.0).collect(),
            MarginalKind::Mixture { components, .. } => components.iter().flat_map(|c| c.breakpoints()).collect(),
        };
        out.retain(|x| *x > 0.0 && *x < self.v_bar);
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }

    fn check_domain(&self, v: f64) -> Result<()> {
        if v.is_nan() || v < 0.0 || v > self.v_bar {
            return Err(Error::Domain {
                value: v,
                lo: 0.0,
                hi: self.v_bar,
            });
        }
        Ok(())
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        Ok(self.cdf_clamped(v))
    }

    pub fn pdf(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        Ok(self.pdf_clamped(v))
    }

    pub fn sf(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        Ok(self.sf_clamped(v))
    }

    /// `v (1 - F(v))`.
    pub fn revenue_curve(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        Ok(if v == 0.0 { 0.0 } else { v * self.sf_clamped(v) })
    }

    /// Myerson virtual value `v - (1 - F(v)) / f(v)`.
    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        let f = self.pdf_clamped(v);
        if f <= 0.0 || !f.is_finite() {
            return Err(Error::Singular { value: v });
        }
        Ok(v - self.sf_clamped(v) / f)
    }

    /// CDF with the argument saturated into `[0, V̄]`.
    pub fn cdf_clamped(&self, v: f64) -> f64 {
        if v.is_nan() || v <= 0.0 {
            return 0.0;
        }
        if v >= self.v_bar {
            return 1.0;
        }
        if let MarginalKind::Mixture { components, weights } = &self.kind {
            return components.iter().zip(weights).map(|(c, w)| w * c.cdf_clamped(v)).sum();
        }
        let n = &self.norm;
        ((self.base_cdf(v) - n.g0) / (n.g1 - n.g0)).clamp(0.0, 1.0)
    }

    pub fn sf_clamped(&self, v: f64) -> f64 {
        if v.is_nan() || v <= 0.0 {
            return 1.0;
        }
        if v >= self.v_bar {
            return 0.0;
        }
        if let MarginalKind::Mixture { components, weights } = &self.kind {
            return components.iter().zip(weights).map(|(c, w)| w * c.sf_clamped(v)).sum();
        }
        let n = &self.norm;
        ((self.base_sf(v) - n.s1) / (n.s0 - n.s1)).clamp(0.0, 1.0)
    }

    /// Density; zero outside `[0, V̄]`. At a jump the right-continuous value
    /// is returned, except at the top of a closed support.
    pub fn pdf_clamped(&self, v: f64) -> f64 {
        if v.is_nan() || v < 0.0 || v > self.v_bar {
            return 0.0;
        }
        if let MarginalKind::Mixture { components, weights } = &self.kind {
            return components.iter().zip(weights).map(|(c, w)| w * c.pdf_clamped(v)).sum();
        }
        let n = &self.norm;
        self.base_pdf(v) / (n.g1 - n.g0)
    }

    /// Inverse CDF, `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let n = &self.norm;
        let (lo, hi) = self.support();
        match &self.kind {
            MarginalKind::Uniform { a, .. } => a + u * (hi - a),
            MarginalKind::ConstantElasticity { a, epsilon } => {
                // base survival s = (v/a)^(1/ε)  =>  v = a s^ε
                let s = n.s0 - u * (n.s0 - n.s1);
                if s <= 0.0 {
                    return self.v_bar;
                }
                (a * s.powf(*epsilon)).clamp(*a, self.v_bar)
            }
            MarginalKind::ExponentialTruncated { lambda } => {
                let g = n.g0 + u * (n.g1 - n.g0);
                (-(-g).ln_1p() / lambda).clamp(0.0, self.v_bar)
            }
            MarginalKind::PiecewiseLinearCdf { knots } => {
                for w in knots.windows(2) {
                    let ((v0, f0), (v1, f1)) = (w[0], w[1]);
                    if u <= f1 && f1 > f0 {
                        return v0 + (u - f0.max(0.0)).max(0.0) / (f1 - f0) * (v1 - v0);
                    }
                }
                hi
            }
            MarginalKind::TruncatedNormal { .. } | MarginalKind::Mixture { .. } => {
                let top = if hi.is_finite() { hi } else { self.finite_upper() };
                numeric::bisect_increasing(|x| self.cdf_clamped(x), u, lo, top)
            }
        }
    }

    /// One draw. Mixtures pick a component first; a truncated normal that
    /// keeps most of its mass is drawn by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            MarginalKind::Mixture { components, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = None;
                for (c, &w) in components.iter().zip(weights) {
                    if w <= 0.0 {
                        continue;
                    }
                    pick = Some(c);
                    acc += w;
                    if u < acc {
                        break;
                    }
                }
                pick.expect("positive weight").sample(rng)
            }
            MarginalKind::TruncatedNormal { mu, sigma } if self.norm.g1 - self.norm.g0 >= 0.1 => loop {
                let z: f64 = rng.sample(StandardNormal);
                let v = mu + sigma * z;
                if (0.0..=self.v_bar).contains(&v) {
                    return v;
                }
            },
            _ => self.quantile(rng.random()),
        }
    }

    /// A finite value above which the remaining mass is negligible.
    pub(crate) fn finite_upper(&self) -> f64 {
        let mut x = self.support().0.max(1.0);
        while self.sf_clamped(x) > 1e-17 && x < 1e300 {
            x *= 2.0;
        }
        x
    }

    fn base_cdf(&self, v: f64) -> f64 {
        match &self.kind {
            MarginalKind::Uniform { a, b } => ((v - a) / (b - a)).clamp(0.0, 1.0),
            MarginalKind::ConstantElasticity { a, epsilon } => {
                if v <= *a {
                    0.0
                } else if v.is_infinite() {
                    1.0
                } else {
                    -((v / a).ln() / epsilon).exp_m1()
                }
            }
            MarginalKind::TruncatedNormal { mu, sigma } => 0.5 * libm::erfc(-(v - mu) / (sigma * SQRT_2)),
            MarginalKind::ExponentialTruncated { lambda } => {
                if v <= 0.0 {
                    0.0
                } else {
                    -(-lambda * v).exp_m1()
                }
            }
            MarginalKind::PiecewiseLinearCdf { knots } => interp(knots, v),
            MarginalKind::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.cdf_clamped(v)).sum()
            }
        }
    }

    fn base_sf(&self, v: f64) -> f64 {
        match &self.kind {
            MarginalKind::Uniform { a, b } => ((b - v) / (b - a)).clamp(0.0, 1.0),
            MarginalKind::ConstantElasticity { a, epsilon } => {
                if v <= *a {
                    1.0
                } else if v.is_infinite() {
                    0.0
                } else {
                    ((v / a).ln() / epsilon).exp()
                }
            }
            MarginalKind::TruncatedNormal { mu, sigma } => 0.5 * libm::erfc((v - mu) / (sigma * SQRT_2)),
            MarginalKind::ExponentialTruncated { lambda } => {
                if v <= 0.0 {
                    1.0
                } else {
                    (-lambda * v).exp()
                }
            }
            MarginalKind::PiecewiseLinearCdf { knots } => 1.0 - interp(knots, v),
            MarginalKind::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.sf_clamped(v)).sum()
            }
        }
    }

    fn base_pdf(&self, v: f64) -> f64 {
        match &self.kind {
            MarginalKind::Uniform { a, b } => {
                if v >= *a && v <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            MarginalKind::ConstantElasticity { a, epsilon } => {
                if v < *a {
                    0.0
                } else {
                    -self.base_sf(v) / (epsilon * v)
                }
            }
            MarginalKind::TruncatedNormal { mu, sigma } => {
                let z = (v - mu) / sigma;
                INV_SQRT_2PI / sigma * (-0.5 * z * z).exp()
            }
            MarginalKind::ExponentialTruncated { lambda } => lambda * (-lambda * v).exp(),
            MarginalKind::PiecewiseLinearCdf { knots } => {
                let last = knots.len() - 1;
                for (i, w) in knots.windows(2).enumerate() {
                    let ((v0, f0), (v1, f1)) = (w[0], w[1]);
                    let in_seg = if i + 1 == last {
                        v >= v0 && v <= v1
                    } else {
                        v >= v0 && v < v1
                    };
                    if in_seg {
                        return (f1 - f0) / (v1 - v0);
                    }
                }
                0.0
            }
            MarginalKind::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.pdf_clamped(v)).sum()
            }
        }
    }
}

fn interp(knots: &[(f64, f64)], v: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if v <= first.0 {
        return first.1;
    }
    if v >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= v);
    let (v0, f0) = knots[i - 1];
    let (v1, f1) = knots[i];
    f0 + (f1 - f0) * (v - v0) / (v1 - v0)
}

fn validate_kind(kind: &MarginalKind, v_bar: f64) -> Result<()> {
    let bad = |msg: String| Err(Error::construction(msg));
    match kind {
        MarginalKind::Uniform { a, b } => {
            if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                return bad(format!("uniform needs 0 <= a < b, got [{a}, {b}]"));
            }
            if *a >= v_bar {
                return bad(format!("uniform support [{a}, {b}] misses [0, {v_bar}]"));
            }
        }
        MarginalKind::ConstantElasticity { a, epsilon } => {
            if !(a.is_finite() && *a > 0.0 && *a < v_bar) {
                return bad(format!("constant elasticity needs 0 < a < v_bar, got a = {a}"));
            }
            if !(epsilon.is_finite() && *epsilon < 0.0) {
                return bad(format!("constant elasticity needs epsilon < 0, got {epsilon}"));
            }
        }
        MarginalKind::TruncatedNormal { mu, sigma } => {
            if !(mu.is_finite() && sigma.is_finite() && *sigma > 0.0) {
                return bad(format!(
                    "truncated normal needs finite mu and sigma > 0, got ({mu}, {sigma})"
                ));
            }
        }
        MarginalKind::ExponentialTruncated { lambda } => {
            if !(lambda.is_finite() && *lambda > 0.0) {
                return bad(format!("exponential needs lambda > 0, got {lambda}"));
            }
        }
        MarginalKind::PiecewiseLinearCdf { knots } => {
            if knots.len() < 2 {
                return bad("piecewise cdf needs at least two knots".into());
            }
            for w in knots.windows(2) {
                if w[1].0.is_nan() || w[0].0.is_nan() || w[1].0 <= w[0].0 {
                    return bad(format!(
                        "knot values must strictly increase: {} then {}",
                        w[0].0, w[1].0
                    ));
                }
                if w[1].1 < w[0].1 {
                    return bad(format!("knot cdf values must not decrease: {} then {}", w[0].1, w[1].1));
                }
            }
            let (v0, f0) = knots[0];
            let (vn, fn_) = knots[knots.len() - 1];
            if !(v0 >= 0.0 && f0 == 0.0) {
                return bad("first knot must be at v >= 0 with F = 0".into());
            }
            if !(fn_ == 1.0 && vn <= v_bar) {
                return bad("last knot must have F = 1 at v <= v_bar".into());
            }
            if knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
                return bad("knots must be finite".into());
            }
        }
        MarginalKind::Mixture { components, weights } => {
            if components.is_empty() || components.len() != weights.len() {
                return bad("mixture needs one weight per component".into());
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return bad("mixture weights must be non-negative".into());
            }
            let s: f64 = weights.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return bad(format!("mixture weights sum to {s}, expected 1"));
            }
            if let Some(c) = components.iter().find(|c| c.v_bar != v_bar) {
                return bad(format!(
                    "mixture components have mismatched supports: v_bar {} vs {v_bar}",
                    c.v_bar
                ));
            }
        }
    }
    Ok(())
}
