//! Closed-form optimal prices for two demands.
//!
//! A demand-`d_i` buyer buys bundle `i` above a value threshold `v_i`. The
//! optimum is one of four candidates:
//!
//! 1. both thresholds at their monopoly values, if `v̂_2 ≤ v̂_1 ≤ (d_2/d_1) v̂_2`;
//! 2. `v_2 = v̂_2` and `v_1` maximizing the pooled revenue of one unit, if `v_1 ≤ v_2`;
//! 3. a common threshold `v_1 = v_2`;
//! 4. one price for both bundles, `v_1 = (d_2/d_1) v_2`.

use serde::{Deserialize, Serialize};

use crate::distributions::{Marginal, ProblemInstance};
use crate::error::{Error, Result};
use crate::numeric;
use crate::revenue::PriceVector;

const SCAN: usize = 2000;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    SeparateMonopoly,
    LinkedPair,
    EqualThresholds,
    BundleOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub case_id: CaseId,
    pub v1: f64,
    pub v2: f64,
    /// `-∞` when the candidate violates its feasibility constraint.
    pub revenue: f64,
}

impl Candidate {
    pub fn feasible(&self) -> bool {
        self.revenue > f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTwoSolution {
    pub v1_star: f64,
    pub v2_star: f64,
    pub case_id: CaseId,
    pub prices: (f64, f64),
    pub revenue: f64,
}

impl KTwoSolution {
    pub fn price_vector(&self) -> PriceVector {
        PriceVector::new(vec![self.prices.0, self.prices.1]).expect("ordered k=2 prices")
    }
}

/// `argmax_v v (1 - F(v))` on `[0, V̄]`. The demand only scales the
/// objective.
pub fn monopoly_threshold(m: &Marginal, _d: u64) -> f64 {
    let top = m.support().1;
    numeric::maximize_1d(|v| v * m.sf_clamped(v), 0.0, top, SCAN, GOLDEN_TOL).0
}

fn check_k2(inst: &ProblemInstance) -> Result<()> {
    if inst.k() != 2 {
        return Err(Error::invalid(format!("closed form needs k = 2, got k = {}", inst.k())));
    }
    Ok(())
}

/// The four candidate threshold pairs with their revenues.
pub fn candidate_objectives(inst: &ProblemInstance) -> Result<[Candidate; 4]> {
    check_k2(inst)?;
    let (d1, d2) = (inst.d(1), inst.d(2));
    let (q1, q2) = (inst.q(1), inst.q(2));
    let (f1, f2) = (inst.marginal(1), inst.marginal(2));
    let v_bar = inst.v_bar();
    let s1 = |v: f64| f1.sf_clamped(v);
    let s2 = |v: f64| f2.sf_clamped(v);

    let vh1 = monopoly_threshold(f1, inst.demands()[0]);
    let vh2 = monopoly_threshold(f2, inst.demands()[1]);
    let c1 = Candidate {
        case_id: CaseId::SeparateMonopoly,
        v1: vh1,
        v2: vh2,
        revenue: if vh2 <= vh1 && vh1 * d1 <= vh2 * d2 {
            q1 * vh1 * d1 * s1(vh1) + q2 * vh2 * d2 * s2(vh2)
        } else {
            f64::NEG_INFINITY
        },
    };

    let (v1, pooled) = numeric::maximize_1d(|v| v * d1 * (q1 * s1(v) + q2 * s2(v)), 0.0, v_bar, SCAN, GOLDEN_TOL);
    let c2 = Candidate {
        case_id: CaseId::LinkedPair,
        v1,
        v2: vh2,
        revenue: if vh2 >= v1 {
            pooled + q2 * vh2 * (d2 - d1) * s2(vh2)
        } else {
            f64::NEG_INFINITY
        },
    };

    let (v, r3) = numeric::maximize_1d(
        |v| v * (q1 * d1 * s1(v) + q2 * d2 * s2(v)),
        0.0,
        v_bar,
        SCAN,
        GOLDEN_TOL,
    );
    let c3 = Candidate {
        case_id: CaseId::EqualThresholds,
        v1: v,
        v2: v,
        revenue: r3,
    };

    let (v2, r4) = numeric::maximize_1d(
        |v| v * d2 * (q1 * s1(v * d2 / d1) + q2 * s2(v)),
        0.0,
        v_bar,
        SCAN,
        GOLDEN_TOL,
    );
    let c4 = Candidate {
        case_id: CaseId::BundleOnly,
        v1: v2 * d2 / d1,
        v2,
        revenue: r4,
    };
    Ok([c1, c2, c3, c4])
}

/// Menu prices realizing a candidate's thresholds.
pub fn candidate_prices(inst: &ProblemInstance, c: &Candidate) -> (f64, f64) {
    let (d1, d2) = (inst.d(1), inst.d(2));
    match c.case_id {
        CaseId::SeparateMonopoly | CaseId::EqualThresholds => (c.v1 * d1, c.v2 * d2),
        CaseId::LinkedPair => (c.v1 * d1, c.v2 * d2 - (c.v2 - c.v1) * d1),
        CaseId::BundleOnly => (c.v2 * d2, c.v2 * d2),
    }
}

/// Best feasible candidate; ties go to the earlier case.
pub fn solve_k2(inst: &ProblemInstance) -> Result<KTwoSolution> {
    let cands = candidate_objectives(inst)?;
    let mut best = &cands[0];
    for c in &cands[1..] {
        if c.revenue > best.revenue + 1e-12 {
            best = c;
        }
    }
    let (p1, p2) = candidate_prices(inst, best);
    Ok(KTwoSolution {
        v1_star: best.v1,
        v2_star: best.v2,
        case_id: best.case_id,
        prices: (p1, p2.max(p1)),
        revenue: best.revenue,
    })
}
