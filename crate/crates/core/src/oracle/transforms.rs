use serde::{Deserialize, Serialize};

use super::{DiscreteInstance, Mechanism, FEAS_TOL};
use crate::error::{Error, Result};
use crate::revenue::best_bundle_menu;

/// Realized payments of one type: `on_allocation` when the `d` units are
/// delivered (probability `w`), `on_no_allocation` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExPostPayment {
    pub w: f64,
    pub on_allocation: f64,
    pub on_no_allocation: f64,
}

impl ExPostPayment {
    pub fn expected(&self) -> f64 {
        self.w * self.on_allocation + (1.0 - self.w) * self.on_no_allocation
    }
}

/// Charges in proportion to the delivered quantity: `p / w` on allocation
/// and nothing otherwise. The expected payment is unchanged, and if the
/// mechanism is EIR no realization leaves the buyer with negative utility.
pub fn expost_payments(mech: &Mechanism) -> Result<Vec<ExPostPayment>> {
    mech.w
        .iter()
        .zip(&mech.p)
        .enumerate()
        .map(|(t, (&w, &p))| {
            if w <= 0.0 {
                if p > FEAS_TOL {
                    return Err(Error::InvalidMechanism(format!(
                        "type {t} pays {p} but is never allocated"
                    )));
                }
                // roundoff-sized payments stay where they are
                return Ok(ExPostPayment {
                    w: 0.0,
                    on_allocation: 0.0,
                    on_no_allocation: p,
                });
            }
            Ok(ExPostPayment {
                w,
                on_allocation: p / w,
                on_no_allocation: 0.0,
            })
        })
        .collect()
}

/// A deterministic mechanism that may hand a type any number of units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMechanism {
    pub units: Vec<u64>,
    pub pay: Vec<f64>,
}

impl BundleMechanism {
    /// Each type buys its best bundle from the menu.
    pub fn from_menu(inst: &DiscreteInstance, demands: &[u64], prices: &[f64]) -> Self {
        let df: Vec<f64> = demands.iter().map(|&d| d as f64).collect();
        let (units, pay) = inst
            .types()
            .iter()
            .map(|&(v, d)| match best_bundle_menu(v, d as f64, &df, prices) {
                0 => (0, 0.0),
                j => (demands[j - 1], prices[j - 1]),
            })
            .unzip();
        BundleMechanism { units, pay }
    }

    pub fn utility(&self, inst: &DiscreteInstance, t: usize, s: usize) -> f64 {
        let (v, d) = inst.types()[t];
        v * d.min(self.units[s]) as f64 - self.pay[s]
    }

    pub fn revenue(&self, inst: &DiscreteInstance) -> f64 {
        self.pay.iter().zip(inst.probs()).map(|(p, q)| p * q).sum()
    }
}

/// Replaces an allocation of `a < d` units by `d` units with probability
/// `a / d` (and `a ≥ d` by `d` units for sure), keeping payments.
pub fn support_transform(inst: &DiscreteInstance, m: &BundleMechanism) -> Mechanism {
    let w = inst
        .types()
        .iter()
        .zip(&m.units)
        .map(|(&(_, d), &a)| a.min(d) as f64 / d as f64)
        .collect();
    Mechanism { w, p: m.pay.clone() }
}
