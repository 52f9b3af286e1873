//! Dense compact-tableau simplex for `max c·x  s.t.  A x ≤ b, x ≥ 0` with
//! `b ≥ 0`, so the slack basis is feasible from the start. Rows can be
//! appended to a solved tableau and re-optimized with dual simplex pivots.
//!
//! Incentive LPs are massively degenerate (almost every right-hand side is
//! zero). Pivoting runs on a slightly perturbed right-hand side carried
//! alongside the true one; [`Tableau::finish`] drops the perturbation and
//! repairs the basis.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-11;
/// Harris ratio-test slack.
const HARRIS: f64 = 1e-10;
const PERTURB: f64 = 1e-7;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub struct Tableau {
    n: usize,
    /// Nonbasic column labels; labels `< n` are structural variables, the
    /// rest are slacks.
    nonbasic: Vec<usize>,
    basic: Vec<usize>,
    /// Row-major `m × n`; basic `x_B[i] = rhs[i] - Σ_j t[i][j] x_N[j]`.
    t: Vec<f64>,
    rhs: Vec<f64>,
    /// Transformed perturbation of the right-hand side.
    pert: Vec<f64>,
    perturbed: bool,
    /// `z = z0 + Σ_j cost[j] x_N[j]`.
    cost: Vec<f64>,
    z0: f64,
    next_label: usize,
    pub pivots: usize,
}

impl Tableau {
    pub fn new(c: &[f64]) -> Self {
        let n = c.len();
        Tableau {
            n,
            nonbasic: (0..n).collect(),
            basic: Vec::new(),
            t: Vec::new(),
            rhs: Vec::new(),
            pert: Vec::new(),
            perturbed: true,
            cost: c.to_vec(),
            z0: 0.0,
            next_label: n,
            pivots: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.basic.len()
    }

    /// Objective value at the current basis (true right-hand side).
    pub fn objective(&self) -> f64 {
        self.z0
    }

    fn eff(&self, i: usize) -> f64 {
        if self.perturbed {
            self.rhs[i] + self.pert[i]
        } else {
            self.rhs[i]
        }
    }

    /// Appends `Σ coef·x_var ≤ b`, rewritten in the current nonbasic
    /// variables. May leave the tableau primal infeasible.
    pub fn add_row(&mut self, terms: &[(usize, f64)], b: f64) {
        let n = self.n;
        let label = self.next_label;
        // deterministic, distinct perturbations
        let eps = PERTURB * (1.0 + ((label as f64) * 0.618_033_988_749_895).fract());
        let mut row = vec![0.0; n];
        let mut r = b;
        let mut e = eps;
        for &(var, a) in terms {
            if let Some(j) = self.nonbasic.iter().position(|&l| l == var) {
                row[j] += a;
            } else if let Some(i) = self.basic.iter().position(|&l| l == var) {
                r -= a * self.rhs[i];
                e -= a * self.pert[i];
                let src = &self.t[i * n..(i + 1) * n];
                for (x, s) in row.iter_mut().zip(src) {
                    *x -= a * s;
                }
            }
        }
        self.t.extend_from_slice(&row);
        self.rhs.push(r);
        self.pert.push(e);
        self.basic.push(label);
        self.next_label += 1;
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let n = self.n;
        let piv = self.t[r * n + s];
        let inv = 1.0 / piv;
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for x in row.iter_mut() {
                *x *= inv;
            }
            row[s] = inv;
        }
        self.rhs[r] *= inv;
        self.pert[r] *= inv;
        let prow: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        let (pr, pe) = (self.rhs[r], self.pert[r]);
        for i in 0..self.basic.len() {
            if i == r {
                continue;
            }
            let f = self.t[i * n + s];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            for (x, p) in row.iter_mut().zip(&prow) {
                *x -= f * p;
            }
            row[s] = -f * inv;
            self.rhs[i] -= f * pr;
            self.pert[i] -= f * pe;
        }
        let cs = self.cost[s];
        if cs != 0.0 {
            for (c, p) in self.cost.iter_mut().zip(&prow) {
                *c -= cs * p;
            }
            self.cost[s] = -cs * inv;
            self.z0 += cs * pr;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
        self.pivots += 1;
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.rows() + self.n) + 1000
    }

    /// Primal simplex from a feasible tableau: Dantzig pricing with a Harris
    /// ratio test, Bland's rule after a run of degenerate pivots.
    pub fn primal(&mut self) -> Result<()> {
        let n = self.n;
        let mut degenerate = 0;
        for _ in 0..self.iteration_cap() {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let s = if bland {
                (0..n)
                    .filter(|&j| self.cost[j] > COST_EPS)
                    .min_by_key(|&j| self.nonbasic[j])
            } else {
                (0..n)
                    .filter(|&j| self.cost[j] > COST_EPS)
                    .max_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]))
            };
            let Some(s) = s else { return Ok(()) };
            // pass 1: bound on the step with relaxed feasibility
            let mut bound = f64::INFINITY;
            for i in 0..self.rows() {
                let a = self.t[i * n + s];
                if a > PIVOT_EPS {
                    bound = bound.min((self.eff(i).max(0.0) + HARRIS) / a);
                }
            }
            if bound == f64::INFINITY {
                return Err(Error::numerical("simplex", "objective unbounded"));
            }
            // pass 2: largest pivot among rows within the bound
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.t[i * n + s];
                if a > PIVOT_EPS && self.eff(i).max(0.0) / a <= bound {
                    let better = match best {
                        None => true,
                        Some((bi, ba)) => {
                            if bland {
                                self.basic[i] < self.basic[bi]
                            } else {
                                a > ba
                            }
                        }
                    };
                    if better {
                        best = Some((i, a));
                    }
                }
            }
            let (r, a) = best.expect("bound attained");
            let step = self.eff(r).max(0.0) / a;
            degenerate = if step <= 1e-14 { degenerate + 1 } else { 0 };
            self.pivot(r, s);
        }
        Err(self.stall("primal"))
    }

    /// Dual simplex from a dual-feasible tableau (all costs ≤ 0).
    pub fn dual(&mut self) -> Result<()> {
        let n = self.n;
        let mut degenerate = 0;
        for _ in 0..self.iteration_cap() {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let rows = 0..self.rows();
            let leaving = if bland {
                rows.filter(|&i| self.eff(i) < -FEAS_EPS).min_by_key(|&i| self.basic[i])
            } else {
                rows.filter(|&i| self.eff(i) < -FEAS_EPS)
                    .min_by(|&a, &b| self.eff(a).total_cmp(&self.eff(b)))
            };
            let Some(r) = leaving else { return Ok(()) };
            let mut bound = f64::INFINITY;
            for j in 0..n {
                let a = self.t[r * n + j];
                if a < -PIVOT_EPS {
                    bound = bound.min((self.cost[j].min(0.0) - HARRIS) / a);
                }
            }
            if bound == f64::INFINITY {
                return Err(Error::numerical("simplex", format!("row {r} is infeasible")));
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let a = self.t[r * n + j];
                if a < -PIVOT_EPS && self.cost[j].min(0.0) / a <= bound {
                    let better = match best {
                        None => true,
                        Some((bj, ba)) => {
                            if bland {
                                self.nonbasic[j] < self.nonbasic[bj]
                            } else {
                                a.abs() > ba
                            }
                        }
                    };
                    if better {
                        best = Some((j, a.abs()));
                    }
                }
            }
            let (s, a) = best.expect("bound attained");
            let step = self.cost[s].min(0.0).abs() / a;
            degenerate = if step <= 1e-14 { degenerate + 1 } else { 0 };
            self.pivot(r, s);
        }
        Err(self.stall("dual"))
    }

    /// Optimal for the perturbed problem → optimal for the true one.
    pub fn finish(&mut self) -> Result<()> {
        self.perturbed = false;
        for _ in 0..10 {
            self.dual()?;
            self.primal()?;
            let infeasible = (0..self.rows()).any(|i| self.rhs[i] < -FEAS_EPS);
            if !infeasible {
                return Ok(());
            }
        }
        Err(self.stall("cleanup"))
    }

    /// Solve from scratch: primal simplex then cleanup.
    pub fn solve(&mut self) -> Result<()> {
        self.primal()?;
        self.finish()
    }

    fn stall(&self, phase: &str) -> Error {
        let max_abs = self.t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let min_rhs = self.rhs.iter().copied().fold(f64::INFINITY, f64::min);
        Error::numerical(
            "simplex",
            format!(
                "{phase} iteration cap reached after {} pivots; {} rows, max |entry| {max_abs:e}, min rhs {min_rhs:e}",
                self.pivots,
                self.rows()
            ),
        )
    }

    /// Values of the structural variables.
    pub fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &l) in self.basic.iter().enumerate() {
            if l < self.n {
                x[l] = self.rhs[i].max(0.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y  s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), 36
        let mut t = Tableau::new(&[3.0, 5.0]);
        t.add_row(&[(0, 1.0)], 4.0);
        t.add_row(&[(1, 2.0)], 12.0);
        t.add_row(&[(0, 3.0), (1, 2.0)], 18.0);
        t.solve().unwrap();
        assert!((t.objective() - 36.0).abs() < 1e-12);
        let x = t.solution();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn incremental_rows_match_full_solve() {
        let mut t = Tableau::new(&[3.0, 5.0]);
        t.add_row(&[(0, 1.0)], 4.0);
        t.add_row(&[(1, 2.0)], 12.0);
        t.solve().unwrap();
        assert!((t.objective() - 42.0).abs() < 1e-12);
        t.add_row(&[(0, 3.0), (1, 2.0)], 18.0);
        t.finish().unwrap();
        assert!((t.objective() - 36.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example under textbook Dantzig pricing
        let mut t = Tableau::new(&[0.75, -150.0, 0.02, -6.0]);
        t.add_row(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0);
        t.add_row(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0);
        t.add_row(&[(2, 1.0)], 1.0);
        t.solve().unwrap();
        assert!((t.objective() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn unbounded_reported() {
        let mut t = Tableau::new(&[1.0, 1.0]);
        t.add_row(&[(0, 1.0), (1, -1.0)], 1.0);
        assert!(t.primal().is_err());
    }
}
