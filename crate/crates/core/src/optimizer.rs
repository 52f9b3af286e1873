//! Maximization of the expected revenue over ordered price vectors.
//!
//! Prices are parametrized by increments `u_j = p_j - p_{j-1}` in the box
//! `[0, V̄ (d_j - d_{j-1})]`. Every ordered vector can be trimmed into this
//! box without changing revenue (see [`trim_to_effective`]), and on the box
//! no threshold exceeds `V̄`, which keeps the objective concave for DMR
//! marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};
use crate::numeric;
use crate::revenue::{rev, supergradient, PriceVector};

/// Grid size used to decide whether an instance is DMR.
pub const DMR_GRID: usize = 1000;

/// Step for the finite-difference optimality certificate.
pub const CERT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub max_iters: usize,
    /// Stop once a polish round improves revenue by less than this.
    pub tol: f64,
    /// Initial step, in units of `V̄`; step `t` is `eta0 V̄ / t^decay`.
    pub eta0: f64,
    pub decay: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            max_iters: 2000,
            tol: 1e-12,
            eta0: 0.5,
            decay: 0.5,
            restarts: 5,
            seed: 0,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::invalid("eta0 must be positive"));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::invalid("decay must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub p_star: PriceVector,
    pub rev_star: f64,
    pub iterations: usize,
    /// Largest one-sided directional derivative over feasible coordinate
    /// directions at `p_star`.
    pub certificate: f64,
    /// False when some marginal fails the DMR test.
    pub certified: bool,
    pub restart_revenues: Vec<f64>,
    /// Largest revenue change to a one-step lattice neighbour, for grid
    /// results.
    pub lattice_gap: Option<f64>,
    /// Best objective seen after each ascent iteration of the winning run.
    #[serde(skip)]
    pub best_history: Vec<f64>,
}

/// Euclidean projection onto `{0 ≤ p_1 ≤ … ≤ p_k ≤ upper}`: pool adjacent
/// violators, then clip.
pub fn project_ordered(p: &[f64], upper: f64) -> PriceVector {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(p.len());
    for &x in p {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 > s1 / n1 as f64 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(p.len());
    for (s, n) in blocks {
        let v = (s / n as f64).clamp(0.0, upper.max(0.0));
        out.extend(std::iter::repeat_n(v, n));
    }
    PriceVector::new(out).expect("projection is ordered")
}

/// `V̄ (d_j - d_{j-1})` for each `j`.
pub fn increment_caps(inst: &ProblemInstance) -> Vec<f64> {
    (1..=inst.k())
        .map(|j| inst.v_bar() * (inst.d(j) - inst.d(j - 1)))
        .collect()
}

/// `p'_j = min(p_j, p'_{j-1} + V̄ (d_j - d_{j-1}))`. Bundle `j` priced above
/// this bound is never strictly preferred to `j - 1` by any value in
/// `[0, V̄]`, so revenue is unchanged almost surely.
pub fn trim_to_effective(p: &PriceVector, inst: &ProblemInstance) -> PriceVector {
    let caps = increment_caps(inst);
    let mut prev = 0.0;
    let out = (1..=p.k())
        .map(|j| {
            prev = p.get(j).min(prev + caps[j - 1]).max(prev);
            prev
        })
        .collect();
    PriceVector::new(out).expect("trim keeps order")
}

fn to_prices(u: &[f64]) -> PriceVector {
    let mut acc = 0.0;
    PriceVector::new(
        u.iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect(),
    )
    .expect("non-negative increments")
}

struct Objective<'a> {
    inst: &'a ProblemInstance,
    caps: Vec<f64>,
    evals: usize,
}

impl Objective<'_> {
    fn value(&mut self, u: &[f64]) -> Result<f64> {
        self.evals += 1;
        let r = rev(&to_prices(u), self.inst)?;
        if !r.is_finite() {
            return Err(Error::numerical("maximize", format!("objective is {r} at {u:?}")));
        }
        Ok(r)
    }

    fn clip(&self, u: &mut [f64]) {
        for (x, c) in u.iter_mut().zip(&self.caps) {
            *x = x.clamp(0.0, *c);
        }
    }

    /// Supergradient with respect to the increments.
    fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        let gp = supergradient(&to_prices(u), self.inst)?;
        let mut gu = gp.clone();
        for j in (0..gu.len().saturating_sub(1)).rev() {
            gu[j] += gu[j + 1];
        }
        Ok(gu)
    }

    /// Parameter range `t` keeping `u + t dir` inside the box.
    fn segment(&self, u: &[f64], dir: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for ((x, d), c) in u.iter().zip(dir).zip(&self.caps) {
            if *d > 0.0 {
                lo = lo.max(-x / d);
                hi = hi.min((c - x) / d);
            } else if *d < 0.0 {
                lo = lo.max((c - x) / d);
                hi = hi.min(-x / d);
            }
        }
        (lo.min(0.0), hi.max(0.0))
    }

    /// Exact line maximization along `dir` (the objective is concave on
    /// lines inside the box).
    fn line_search(&mut self, u: &mut Vec<f64>, f_u: f64, dir: &[f64]) -> Result<f64> {
        let (lo, hi) = self.segment(u, dir);
        if hi - lo <= 0.0 {
            return Ok(f_u);
        }
        let base = u.clone();
        let point = |t: f64| -> Vec<f64> { base.iter().zip(dir).map(|(x, d)| x + t * d).collect() };
        let mut err = None;
        let eval = |t: f64| -> f64 {
            let mut x = point(t);
            self.clip(&mut x);
            match self.value(&x) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NEG_INFINITY
                }
            }
        };
        let (t, f_t) = numeric::golden_max(eval, lo, hi, 1e-13 * (hi - lo).max(1.0));
        if let Some(e) = err {
            return Err(e);
        }
        if f_t > f_u {
            let mut x = point(t);
            self.clip(&mut x);
            *u = x;
            Ok(f_t)
        } else {
            Ok(f_u)
        }
    }
}

/// Polish directions in increment space: increment axes, price axes, and
/// pairwise sums and differences of price axes.
fn polish_directions(k: usize) -> Vec<Vec<f64>> {
    let price_dir = |dp: &[f64]| -> Vec<f64> { (0..k).map(|j| dp[j] - if j > 0 { dp[j - 1] } else { 0.0 }).collect() };
    let mut dirs = Vec::new();
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        dirs.push(e.clone());
        dirs.push(price_dir(&e));
    }
    for a in 0..k {
        for b in a + 1..k {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; k];
                e[a] = 1.0;
                e[b] = s;
                dirs.push(price_dir(&e));
            }
        }
    }
    dirs
}

fn run_one(obj: &mut Objective, start: Vec<f64>, cfg: &OptimizeConfig) -> Result<(Vec<f64>, f64, usize, Vec<f64>)> {
    let v_bar = obj.inst.v_bar();
    let mut u = start;
    obj.clip(&mut u);
    let mut best_u = u.clone();
    let mut best_f = obj.value(&u)?;
    let mut history = Vec::with_capacity(cfg.max_iters);
    let mut stale = 0;
    let mut iters = 0;
    for t in 1..=cfg.max_iters {
        iters = t;
        let g = obj.grad(&u)?;
        let eta = cfg.eta0 * v_bar / (t as f64).powf(cfg.decay);
        for (x, gj) in u.iter_mut().zip(&g) {
            *x += eta * gj;
        }
        obj.clip(&mut u);
        let f = obj.value(&u)?;
        if f > best_f + cfg.tol {
            stale = 0;
        } else {
            stale += 1;
        }
        if f > best_f {
            best_f = f;
            best_u.clone_from(&u);
        }
        history.push(best_f);
        if stale >= 200 {
            break;
        }
    }
    // polish around the incumbent
    let dirs = polish_directions(obj.inst.k());
    for _ in 0..200 {
        let before = best_f;
        for d in &dirs {
            best_f = obj.line_search(&mut best_u, best_f, d)?;
        }
        let g = obj.grad(&best_u)?;
        if g.iter().any(|x| *x != 0.0) {
            best_f = obj.line_search(&mut best_u, best_f, &g)?;
        }
        if best_f - before < cfg.tol {
            break;
        }
    }
    Ok((best_u, best_f, iters, history))
}

/// Projected supergradient ascent with multi-start and a line-search polish.
pub fn maximize(inst: &ProblemInstance, cfg: &OptimizeConfig) -> Result<OptimizeResult> {
    cfg.validate()?;
    let mut obj = Objective {
        inst,
        caps: increment_caps(inst),
        evals: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut restart_revenues = Vec::with_capacity(cfg.restarts);
    let mut iterations = 0;
    for r in 0..cfg.restarts {
        let start: Vec<f64> = if r == 0 {
            obj.caps.iter().map(|c| 0.5 * c).collect()
        } else {
            obj.caps.iter().map(|c| rng.random_range(0.0..=1.0) * c).collect()
        };
        let (u, f, it, hist) = run_one(&mut obj, start, cfg)?;
        iterations += it;
        restart_revenues.push(f);
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((u, f, hist));
        }
    }
    let (u, _, best_history) = best.expect("at least one restart");
    let p_star = to_prices(&u);
    let rev_star = rev(&p_star, inst)?;
    Ok(OptimizeResult {
        certificate: certificate(&p_star, inst, CERT_STEP)?,
        certified: inst.is_dmr(DMR_GRID),
        p_star,
        rev_star,
        iterations,
        restart_revenues,
        lattice_gap: None,
        best_history,
    })
}

/// Max over feasible `±e_j` of the one-sided difference quotient of `rev`.
pub fn certificate(p: &PriceVector, inst: &ProblemInstance, h: f64) -> Result<f64> {
    let upper = inst.price_upper();
    let base = rev(p, inst)?;
    let mut worst = f64::NEG_INFINITY;
    for j in 1..=p.k() {
        for s in [1.0, -1.0] {
            let mut q = p.as_slice().to_vec();
            q[j - 1] += s * h;
            let ok = q[j - 1] >= 0.0
                && q[j - 1] <= upper
                && q[j - 1] >= p.get(j - 1)
                && (j == p.k() || q[j - 1] <= p.get(j + 1));
            if !ok {
                continue;
            }
            let moved = PriceVector::new(q).expect("feasible move");
            worst = worst.max((rev(&moved, inst)? - base) / h);
        }
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

/// Ordered lattice points `{0, s, 2s, …}^k ∩ [lo_j, hi_j]` with `s` the
/// step; calls `f` on each.
fn for_each_ordered<F: FnMut(&[f64])>(lo: &[f64], hi: &[f64], step: f64, origin: &[f64], f: &mut F) {
    fn rec<F: FnMut(&[f64])>(
        j: usize,
        lo: &[f64],
        hi: &[f64],
        step: f64,
        origin: &[f64],
        cur: &mut Vec<f64>,
        f: &mut F,
    ) {
        if j == lo.len() {
            f(cur);
            return;
        }
        let floor = if j == 0 { lo[0] } else { lo[j].max(cur[j - 1]) };
        let mut n = ((floor - origin[j]) / step - 1e-9).ceil() as i64;
        loop {
            let x = origin[j] + n as f64 * step;
            if x > hi[j] + 1e-12 * step.max(1.0) {
                break;
            }
            if x >= floor - 1e-12 {
                cur.push(x.max(floor).min(hi[j]));
                rec(j + 1, lo, hi, step, origin, cur, f);
                cur.pop();
            }
            n += 1;
        }
    }
    let mut cur = Vec::with_capacity(lo.len());
    rec(0, lo, hi, step, origin, &mut cur, f);
}

/// Exhaustive search over the ordered lattice on `[0, d_k V̄]^k` with
/// `resolution` points per axis.
pub fn grid_search(inst: &ProblemInstance, resolution: usize) -> Result<OptimizeResult> {
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    let k = inst.k();
    let upper = inst.price_upper();
    let step = upper / (resolution - 1) as f64;
    let lo = vec![0.0; k];
    let hi = vec![upper; k];
    let origin = vec![0.0; k];
    let (p, f, evals) = lattice_best(inst, &lo, &hi, step, &origin)?;
    finish_grid(inst, p, f, evals, step)
}

/// Grid search refined by zooming: a coarse lattice of `resolution` points
/// per axis, then repeated lattices over `±2` cells around the incumbent
/// until the step is at most `final_step`.
pub fn grid_search_refined(inst: &ProblemInstance, resolution: usize, final_step: f64) -> Result<OptimizeResult> {
    if resolution < 5 {
        return Err(Error::invalid("refined grid needs resolution >= 5"));
    }
    if final_step.is_nan() || final_step <= 0.0 {
        return Err(Error::invalid("final step must be positive"));
    }
    let k = inst.k();
    let upper = inst.price_upper();
    let mut step = upper / (resolution - 1) as f64;
    let (mut p, mut f, mut evals) = lattice_best(inst, &vec![0.0; k], &vec![upper; k], step, &vec![0.0; k])?;
    while step > final_step {
        let half_width = 2.0 * step;
        step = (half_width * 2.0 / (resolution - 1) as f64).max(final_step);
        let lo: Vec<f64> = p.iter().map(|x| (x - half_width).max(0.0)).collect();
        let hi: Vec<f64> = p.iter().map(|x| (x + half_width).min(upper)).collect();
        let (np, nf, ne) = lattice_best(inst, &lo, &hi, step, &p)?;
        evals += ne;
        if nf >= f {
            p = np;
            f = nf;
        }
    }
    finish_grid(inst, p, f, evals, step)
}

fn lattice_best(
    inst: &ProblemInstance,
    lo: &[f64],
    hi: &[f64],
    step: f64,
    origin: &[f64],
) -> Result<(Vec<f64>, f64, usize)> {
    let mut best = (lo.to_vec(), f64::NEG_INFINITY);
    let mut evals = 0;
    let mut err = None;
    for_each_ordered(lo, hi, step, origin, &mut |p: &[f64]| {
        evals += 1;
        match PriceVector::new(p.to_vec()).and_then(|pv| rev(&pv, inst)) {
            Ok(r) if r > best.1 => best = (p.to_vec(), r),
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if !best.1.is_finite() {
        return Err(Error::numerical("grid_search", "no lattice point evaluated"));
    }
    Ok((best.0, best.1, evals))
}

fn finish_grid(inst: &ProblemInstance, p: Vec<f64>, f: f64, evals: usize, step: f64) -> Result<OptimizeResult> {
    let p_star = PriceVector::new(p)?;
    let gap = lattice_gap(inst, &p_star, step)?;
    Ok(OptimizeResult {
        certificate: certificate(&p_star, inst, CERT_STEP)?,
        certified: inst.is_dmr(DMR_GRID),
        rev_star: f,
        p_star,
        iterations: evals,
        restart_revenues: vec![f],
        lattice_gap: Some(gap),
        best_history: Vec::new(),
    })
}

/// Largest `|rev(q) - rev(p)|` over ordered neighbours `q = p ± step e_j`.
pub fn lattice_gap(inst: &ProblemInstance, p: &PriceVector, step: f64) -> Result<f64> {
    let upper = inst.price_upper();
    let base = rev(p, inst)?;
    let mut gap: f64 = 0.0;
    for j in 0..p.k() {
        for s in [1.0, -1.0] {
            let mut q = p.as_slice().to_vec();
            q[j] += s * step;
            if q[j] < 0.0 || q[j] > upper + 1e-12 {
                continue;
            }
            if let Ok(pv) = PriceVector::new(q) {
                gap = gap.max((rev(&pv, inst)? - base).abs());
            }
        }
    }
    Ok(gap)
}
