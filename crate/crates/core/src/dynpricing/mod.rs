//! Repeated posted pricing against i.i.d. buyers with bandit feedback.

mod strategies;

pub use strategies::{EpsGrid, EpsGridConfig, FixedPrices, TwoPoint, TwoPointConfig};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};
use crate::revenue::{best_bundle, rev, sample_type, PriceVector};

/// What a strategy may know about the market before the first round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInfo {
    pub demands: Vec<u64>,
    pub v_bar: f64,
}

impl MarketInfo {
    pub fn of(inst: &ProblemInstance) -> Self {
        MarketInfo {
            demands: inst.demands().to_vec(),
            v_bar: inst.v_bar(),
        }
    }

    pub fn k(&self) -> usize {
        self.demands.len()
    }

    pub fn d(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.demands[j - 1] as f64
        }
    }

    /// `d_k V̄`.
    pub fn price_upper(&self) -> f64 {
        self.d(self.k()) * self.v_bar
    }
}

/// Everything the seller observes after a round. The buyer's value and
/// demand are deliberately absent.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub round: u64,
    pub prices: &'a PriceVector,
    /// Purchased bundle index, 0 for no purchase.
    pub bundle: usize,
}

impl Feedback<'_> {
    /// Revenue of the round, known to the seller from its own prices.
    pub fn revenue(&self) -> f64 {
        self.prices.get(self.bundle)
    }
}

pub trait Strategy {
    fn id(&self) -> String;
    /// Prices for round `round` (1-based).
    fn post(&mut self, round: u64) -> PriceVector;
    fn observe(&mut self, feedback: Feedback<'_>);
    /// Current point estimate of the best prices, if the strategy keeps one.
    fn incumbent(&self) -> Option<PriceVector> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub prices: Vec<f64>,
    pub value: f64,
    pub demand: u64,
    pub bundle: usize,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub seed: u64,
    pub strategy: String,
    pub rounds: Vec<Round>,
    /// The strategy's incumbent after the last round.
    pub final_incumbent: Option<Vec<f64>>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// First `n` rounds.
    pub fn prefix(&self, n: usize) -> SimulationTrace {
        SimulationTrace {
            seed: self.seed,
            strategy: self.strategy.clone(),
            rounds: self.rounds[..n.min(self.rounds.len())].to_vec(),
            final_incumbent: None,
        }
    }

    /// CSV with one row per round: `round, p_1..p_k, value, demand, bundle,
    /// revenue`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.rounds.first().map_or(0, |r| r.prices.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["round".to_string()];
        header.extend((1..=k).map(|j| format!("p{j}")));
        header.extend(["value", "demand", "bundle", "revenue"].map(String::from));
        w.write_record(&header)?;
        for (t, r) in self.rounds.iter().enumerate() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(r.prices.iter().map(|p| p.to_string()));
            rec.push(r.value.to_string());
            rec.push(r.demand.to_string());
            rec.push(r.bundle.to_string());
            rec.push(r.revenue.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `rounds` rounds; buyer types come from a ChaCha8 stream seeded by
/// `seed`.
pub fn simulate(
    inst: &ProblemInstance,
    strategy: &mut dyn Strategy,
    rounds: u64,
    seed: u64,
) -> Result<SimulationTrace> {
    if rounds == 0 {
        return Err(Error::invalid("need at least one round"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(rounds as usize);
    for tau in 1..=rounds {
        let p = strategy.post(tau);
        if p.k() != inst.k() || p.as_slice().iter().any(|x| *x < 0.0) {
            return Err(Error::invalid(format!(
                "strategy posted an invalid price vector at round {tau}"
            )));
        }
        let (v, i) = sample_type(inst, &mut rng);
        let d = inst.demands()[i - 1];
        let bundle = best_bundle(v, d as f64, &p, inst);
        let revenue = p.get(bundle);
        strategy.observe(Feedback {
            round: tau,
            prices: &p,
            bundle,
        });
        out.push(Round {
            prices: p.into_vec(),
            value: v,
            demand: d,
            bundle,
            revenue,
        });
    }
    Ok(SimulationTrace {
        seed,
        strategy: strategy.id(),
        rounds: out,
        final_incumbent: strategy.incumbent().map(PriceVector::into_vec),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rounds: u64,
    pub cumulative_revenue: f64,
    /// `Rev(p*)`.
    pub baseline_revenue: f64,
    /// `T Rev(p*)`.
    pub baseline_total: f64,
    /// `Rev(p*) - (1/T) Σ revenue`; an empirical estimate that can be
    /// negative.
    pub average_regret: f64,
    /// Standard error of the per-round realized revenue mean.
    pub revenue_stderr: f64,
    /// `(1/T) Σ Rev(p^τ)`, the expected revenue of the posted prices.
    pub average_expected_revenue: f64,
    /// `Rev(p*) - average_expected_revenue`.
    pub average_pseudo_regret: f64,
    pub cumulative_pseudo_regret: f64,
}

/// Regret against `Rev(p*) = rev_star`.
pub fn regret_against(trace: &SimulationTrace, inst: &ProblemInstance, rev_star: f64) -> Result<RegretReport> {
    if trace.is_empty() {
        return Err(Error::invalid("empty trace"));
    }
    let t = trace.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut expected = 0.0;
    let mut last: Option<(&[f64], f64)> = None;
    for r in &trace.rounds {
        sum += r.revenue;
        sum_sq += r.revenue * r.revenue;
        let e = match last {
            Some((p, e)) if p == r.prices.as_slice() => e,
            _ => rev(&PriceVector::new(r.prices.clone())?, inst)?,
        };
        last = Some((&r.prices, e));
        expected += e;
    }
    let mean = sum / t;
    let var = if trace.len() > 1 {
        ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    let avg_exp = expected / t;
    Ok(RegretReport {
        rounds: trace.len() as u64,
        cumulative_revenue: sum,
        baseline_revenue: rev_star,
        baseline_total: t * rev_star,
        average_regret: rev_star - mean,
        revenue_stderr: (var / t).sqrt(),
        average_expected_revenue: avg_exp,
        average_pseudo_regret: rev_star - avg_exp,
        cumulative_pseudo_regret: t * rev_star - expected,
    })
}

/// Regret against the optimizer's `rev_star` with default settings.
pub fn regret(trace: &SimulationTrace, inst: &ProblemInstance) -> Result<RegretReport> {
    let opt = crate::optimizer::maximize(inst, &crate::optimizer::OptimizeConfig::default())?;
    regret_against(trace, inst, opt.rev_star)
}
