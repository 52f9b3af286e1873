//! DMR and regularity classification.

use serde::{Deserialize, Serialize};

use super::{Marginal, MarginalKind};

/// Tolerance on midpoint concavity and monotonicity checks.
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmrVerdict {
    pub is_dmr: bool,
    /// `(v_left, v_mid, v_right)` with `R(v_mid) < (R(v_left) + R(v_right))/2`.
    pub witness: Option<(f64, f64, f64)>,
}

impl DmrVerdict {
    fn yes() -> Self {
        DmrVerdict {
            is_dmr: true,
            witness: None,
        }
    }
}

impl Marginal {
    /// Whether `v (1 - F(v))` is concave on `[0, top]`, `top` being the upper
    /// end of the support.
    pub fn is_dmr(&self, grid_n: usize) -> DmrVerdict {
        let grid_n = grid_n.max(3);
        let top = self.support_top_finite();
        match &self.kind {
            MarginalKind::Uniform { .. } => DmrVerdict::yes(),
            MarginalKind::ConstantElasticity { a, epsilon } => {
                if *epsilon <= -1.0 {
                    DmrVerdict::yes()
                } else {
                    let r = if self.v_bar.is_finite() { self.v_bar } else { 4.0 * a };
                    self.convex_witness(*a, r, grid_n)
                }
            }
            MarginalKind::ExponentialTruncated { lambda } => {
                let l = 2.0 / lambda;
                if self.v_bar <= l {
                    DmrVerdict::yes()
                } else {
                    let r = if self.v_bar.is_finite() {
                        self.v_bar
                    } else {
                        6.0 / lambda
                    };
                    self.convex_witness(l, r, grid_n)
                }
            }
            MarginalKind::TruncatedNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                if self.v_bar.is_finite() && self.v_bar * (self.v_bar - mu) <= 2.0 * s2 {
                    DmrVerdict::yes()
                } else {
                    let root = 0.5 * (mu + (mu * mu + 8.0 * s2).sqrt());
                    let r = if self.v_bar.is_finite() {
                        self.v_bar
                    } else {
                        root + 4.0 * sigma
                    };
                    self.convex_witness(root, r, grid_n)
                }
            }
            MarginalKind::PiecewiseLinearCdf { .. } => self.grid_dmr(0.0, top, grid_n),
            MarginalKind::Mixture { components, weights } => {
                let active: Vec<&Marginal> = components
                    .iter()
                    .zip(weights)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(c, _)| c)
                    .collect();
                let same_top = active.iter().all(|c| c.support_top_finite() == top);
                if same_top && active.iter().all(|c| c.is_dmr(grid_n).is_dmr) {
                    DmrVerdict::yes()
                } else {
                    self.grid_dmr(0.0, top, grid_n)
                }
            }
        }
    }

    /// Whether the virtual value is non-decreasing on the support.
    pub fn is_regular(&self, grid_n: usize) -> bool {
        let grid_n = grid_n.max(3);
        match &self.kind {
            // log-concave densities
            MarginalKind::Uniform { .. }
            | MarginalKind::ExponentialTruncated { .. }
            | MarginalKind::TruncatedNormal { .. } => true,
            MarginalKind::ConstantElasticity { a, epsilon } => {
                // φ'(v) = 1 + ε + (1 - ε)(V̄/v)^(1/ε), smallest at v = a
                let tail = if self.v_bar.is_finite() {
                    (self.v_bar / a).powf(1.0 / epsilon)
                } else {
                    0.0
                };
                1.0 + epsilon + (1.0 - epsilon) * tail >= -CLASSIFY_TOL
            }
            MarginalKind::PiecewiseLinearCdf { .. } | MarginalKind::Mixture { .. } => self.grid_regular(grid_n),
        }
    }

    fn support_top_finite(&self) -> f64 {
        let top = self.support().1;
        if top.is_finite() {
            top
        } else {
            self.finite_upper()
        }
    }

    fn rev_c(&self, v: f64) -> f64 {
        v * self.sf_clamped(v)
    }

    fn midpoint_gap(&self, l: f64, m: f64, r: f64) -> f64 {
        0.5 * (self.rev_c(l) + self.rev_c(r)) - self.rev_c(m)
    }

    /// Witness inside an interval where `R'' > 0` is known analytically.
    fn convex_witness(&self, l: f64, r: f64, grid_n: usize) -> DmrVerdict {
        let m = 0.5 * (l + r);
        let h = 0.25 * (r - l);
        if self.midpoint_gap(m - h, m, m + h) > CLASSIFY_TOL {
            return DmrVerdict {
                is_dmr: false,
                witness: Some((m - h, m, m + h)),
            };
        }
        let v = self.grid_dmr(l, r, grid_n);
        if v.is_dmr {
            // Convexity too weak to register at the tolerance.
            DmrVerdict {
                is_dmr: false,
                witness: Some((m - h, m, m + h)),
            }
        } else {
            v
        }
    }

    fn grid_dmr(&self, lo: f64, hi: f64, grid_n: usize) -> DmrVerdict {
        let step = (hi - lo) / (grid_n - 1) as f64;
        let rs: Vec<f64> = (0..grid_n).map(|i| self.rev_c(lo + step * i as f64)).collect();
        let mut worst: Option<(usize, f64)> = None;
        for i in 1..grid_n - 1 {
            let gap = 0.5 * (rs[i - 1] + rs[i + 1]) - rs[i];
            if gap > CLASSIFY_TOL && worst.is_none_or(|w| gap > w.1) {
                worst = Some((i, gap));
            }
        }
        match worst {
            None => DmrVerdict::yes(),
            Some((i, _)) => {
                let x = |j: usize| lo + step * j as f64;
                DmrVerdict {
                    is_dmr: false,
                    witness: Some((x(i - 1), x(i), x(i + 1))),
                }
            }
        }
    }

    fn grid_regular(&self, grid_n: usize) -> bool {
        let (lo, hi) = self.support();
        let hi = if hi.is_finite() { hi } else { self.finite_upper() };
        let step = (hi - lo) / grid_n as f64;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..grid_n {
            let v = lo + step * (i as f64 + 0.5);
            let f = self.pdf_clamped(v);
            if f <= 0.0 {
                continue;
            }
            let phi = v - self.sf_clamped(v) / f;
            if phi < prev - CLASSIFY_TOL * (1.0 + prev.abs()) {
                return false;
            }
            prev = phi;
        }
        true
    }
}
