use serde::{Deserialize, Serialize};

use super::Marginal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct ProblemInstance {
    demands: Vec<u64>,
    weights: Vec<f64>,
    marginals: Vec<Marginal>,
    v_bar: f64,
    dem_f: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    demands: Vec<u64>,
    weights: Vec<f64>,
    marginals: Vec<Marginal>,
    v_bar: f64,
}

impl TryFrom<InstanceRepr> for ProblemInstance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        ProblemInstance::new(r.demands, r.weights, r.marginals, r.v_bar)
    }
}

impl From<ProblemInstance> for InstanceRepr {
    fn from(p: ProblemInstance) -> Self {
        InstanceRepr {
            demands: p.demands,
            weights: p.weights,
            marginals: p.marginals,
            v_bar: p.v_bar,
        }
    }
}

impl ProblemInstance {
    pub fn new(demands: Vec<u64>, weights: Vec<f64>, marginals: Vec<Marginal>, v_bar: f64) -> Result<Self> {
        let k = demands.len();
        if k == 0 {
            return Err(Error::construction("at least one demand is required"));
        }
        if weights.len() != k || marginals.len() != k {
            return Err(Error::construction(format!(
                "{k} demands but {} weights and {} marginals",
                weights.len(),
                marginals.len()
            )));
        }
        if demands[0] == 0 || demands.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::construction("demands must be positive and strictly increasing"));
        }
        if weights.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(Error::construction("weights must be non-negative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::construction(format!("weights sum to {s}, expected 1")));
        }
        if !(v_bar.is_finite() && v_bar > 0.0) {
            return Err(Error::construction(format!(
                "v_bar must be finite and positive, got {v_bar}"
            )));
        }
        if let Some(m) = marginals.iter().find(|m| m.v_bar() != v_bar) {
            return Err(Error::construction(format!(
                "marginal has v_bar {} but the instance uses {v_bar}",
                m.v_bar()
            )));
        }
        let dem_f = demands.iter().map(|&d| d as f64).collect();
        Ok(ProblemInstance {
            demands,
            weights,
            marginals,
            v_bar,
            dem_f,
        })
    }

    /// Same marginal and equal weight for every demand.
    pub fn iid(demands: Vec<u64>, marginal: Marginal) -> Result<Self> {
        let k = demands.len();
        let v_bar = marginal.v_bar();
        let mut weights = vec![1.0 / k as f64; k];
        if k > 0 {
            // make the sum exact
            let rest: f64 = weights[1..].iter().sum();
            weights[0] = 1.0 - rest;
        }
        Self::new(demands, weights, vec![marginal; k], v_bar)
    }

    pub fn k(&self) -> usize {
        self.demands.len()
    }

    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    /// `d_i` as a float, with the sentinel `d_0 = 0`; `i` is 1-based.
    pub fn d(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.dem_f[i - 1]
        }
    }

    /// Weight and marginal of demand `i` (1-based).
    pub fn q(&self, i: usize) -> f64 {
        self.weights[i - 1]
    }

    pub fn marginal(&self, i: usize) -> &Marginal {
        &self.marginals[i - 1]
    }

    /// `d_k V̄`: no buyer pays more than this.
    pub fn price_upper(&self) -> f64 {
        self.d(self.k()) * self.v_bar
    }

    /// Every marginal passes the DMR test.
    pub fn is_dmr(&self, grid_n: usize) -> bool {
        self.marginals.iter().all(|m| m.is_dmr(grid_n).is_dmr)
    }
}
