//! Dense two-phase simplex for small linear programs.
//!
//! Problems are maximizations over `x` with equality rows, `<=` rows, and
//! per-variable lower bounds (or free variables). Pricing is Dantzig's rule
//! with a switch to Bland's least-index rule after a run of degenerate
//! pivots, so the solver cannot cycle. Ties always break toward the lowest
//! index, which makes the result a deterministic function of the input.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 50_000;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 25;
const REINVERT_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    /// Maximize `objective . x`.
    pub objective: Vec<f64>,
    pub eq_lhs: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_lhs: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    /// `Some(l)` requires `x_j >= l`; `None` leaves `x_j` free.
    pub lower_bounds: Vec<Option<f64>>,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n_vars],
            lower_bounds: vec![Some(0.0); n_vars],
            ..Default::default()
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_lhs.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) {
        self.ub_lhs.push(row);
        self.ub_rhs.push(rhs);
    }

    fn check(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower_bounds.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        if self.eq_lhs.len() != self.eq_rhs.len() || self.ub_lhs.len() != self.ub_rhs.len() {
            return Err(Error::InvalidInput("row count does not match rhs length".into()));
        }
        let rows = self.eq_lhs.iter().chain(&self.ub_lhs);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "constraint row has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.eq_lhs.iter().flatten())
            .chain(self.ub_lhs.iter().flatten())
            .chain(&self.eq_rhs)
            .chain(&self.ub_rhs)
            .chain(self.lower_bounds.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite LP coefficient".into()));
        }
        Ok(())
    }

    /// Largest scaled constraint violation of `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        let eq_scale = 1.0 + self.eq_rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ub_scale = 1.0 + self.ub_rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eq = self
            .eq_lhs
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r) - b).abs() / eq_scale);
        let ub = self
            .ub_lhs
            .iter()
            .zip(&self.ub_rhs)
            .map(|(r, b)| (dot(r) - b).max(0.0) / ub_scale);
        let lb = self
            .lower_bounds
            .iter()
            .zip(x)
            .filter_map(|(l, v)| l.map(|l| (l - v).max(0.0)));
        eq.chain(ub).chain(lb).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective_value: f64::NAN,
        }
    }
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// The unpivoted standard-form system, for reinversion.
    original: Vec<f64>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Resets the reduced-cost row for column costs `cost` (maximization).
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        for c in 0..w {
            let mut d: f64 = (0..self.rows)
                .map(|r| cost[self.basis[r]] * self.at(r, c))
                .sum();
            if c < w - 1 {
                d -= cost[c];
            }
            self.obj[c] = d;
        }
    }

    /// Rebuilds the tableau as `B^-1 [A | b]` from the unpivoted system,
    /// discarding the round-off accumulated over earlier pivots.
    fn reinvert(&mut self, cost: &[f64]) {
        let (m, w) = (self.rows, self.width);
        if m > 0 {
            let b_mat = DMatrix::from_fn(m, m, |i, k| self.original[i * w + self.basis[k]]);
            let rest = DMatrix::from_fn(m, w, |i, c| self.original[i * w + c]);
            if let Some(sol) = b_mat.lu().solve(&rest) {
                if sol.iter().all(|v| v.is_finite()) {
                    for i in 0..m {
                        for c in 0..w {
                            self.data[i * w + c] = sol[(i, c)];
                        }
                        self.data[i * w + self.basis[i]] = 1.0;
                    }
                }
            }
        }
        self.set_objective(cost);
    }

    /// Runs simplex iterations over columns `< allowed` for column costs
    /// `cost`; the reduced-cost row must already match `cost`.
    fn optimize(&mut self, allowed: usize, cost: &[f64], pivots: &mut usize) -> LpStatus {
        let mut degenerate_run = 0;
        let mut since_reinvert = 0;
        let mut refreshed = false;
        // Columns whose only positive entries are round-off noise.
        let mut banned = vec![false; allowed];
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let mut entering = None;
            let mut best = -PIVOT_TOL;
            for c in (0..allowed).filter(|c| !banned[*c]) {
                let d = self.obj[c];
                if d < best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else {
                if !refreshed {
                    self.reinvert(cost);
                    refreshed = true;
                    continue;
                }
                return LpStatus::Optimal;
            };

            let leaving = if bland {
                self.bland_row(pc)
            } else {
                self.harris_row(pc)
            };
            let Some(pr) = leaving else {
                if !refreshed {
                    self.reinvert(cost);
                    refreshed = true;
                    continue;
                }
                let col_max = (0..self.rows).map(|r| self.at(r, pc)).fold(0.0, f64::max);
                if col_max <= 1e-13 {
                    return LpStatus::Unbounded;
                }
                banned[pc] = true;
                continue;
            };
            banned.iter_mut().for_each(|b| *b = false);
            refreshed = false;
            if self.rhs(pr).max(0.0) / self.at(pr, pc) <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return LpStatus::IterationLimit;
            }
            self.pivot(pr, pc);
            since_reinvert += 1;
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert(cost);
                since_reinvert = 0;
            }
        }
    }

    /// Minimum-ratio row, ties to the least basic index.
    fn bland_row(&self, pc: usize) -> Option<usize> {
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            let replace = match leaving {
                None => true,
                Some((lr, lratio)) => {
                    ratio < lratio || ratio == lratio && self.basis[r] < self.basis[lr]
                }
            };
            if replace {
                leaving = Some((r, ratio));
            }
        }
        leaving.map(|(r, _)| r)
    }

    /// Two-pass Harris ratio test: bound the step with rhs relaxed by the
    /// feasibility tolerance, then take the largest pivot within the bound.
    fn harris_row(&self, pc: usize) -> Option<usize> {
        let mut bound = f64::INFINITY;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL {
                bound = bound.min((self.rhs(r).max(0.0) + FEAS_TOL) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL && self.rhs(r).max(0.0) / a <= bound {
                let replace = match leaving {
                    None => true,
                    Some((lr, la)) => a > la || a == la && self.basis[r] < self.basis[lr],
                };
                if replace {
                    leaving = Some((r, a));
                }
            }
        }
        leaving.map(|(r, _)| r)
    }
}

/// Solves `problem` to optimality or reports why it cannot.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.check()?;
    let n = problem.n_vars();

    let mut maps = Vec::with_capacity(n);
    let mut n_struct = 0;
    for lb in &problem.lower_bounds {
        match lb {
            Some(l) => {
                maps.push(VarMap::Shifted {
                    col: n_struct,
                    lower: *l,
                });
                n_struct += 1;
            }
            None => {
                maps.push(VarMap::Split {
                    pos: n_struct,
                    neg: n_struct + 1,
                });
                n_struct += 2;
            }
        }
    }

    // Standard-form rows: (coefficients over structural columns, rhs, slack?)
    let n_eq = problem.eq_lhs.len();
    let n_ub = problem.ub_lhs.len();
    let m = n_eq + n_ub;
    let xform = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n_struct];
        let mut b = rhs;
        for (a, map) in row.iter().zip(&maps) {
            match *map {
                VarMap::Shifted { col, lower } => {
                    out[col] = *a;
                    b -= a * lower;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] = *a;
                    out[neg] = -a;
                }
            }
        }
        let scale = out.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if scale > 0.0 {
            out.iter_mut().for_each(|v| *v /= scale);
            b /= scale;
        }
        (out, b)
    };

    let n_slack = n_ub;
    let mut rows: Vec<(Vec<f64>, f64, Option<f64>)> = Vec::with_capacity(m);
    for (r, b) in problem.eq_lhs.iter().zip(&problem.eq_rhs) {
        let (a, b) = xform(r, *b);
        rows.push((a, b, None));
    }
    for (r, b) in problem.ub_lhs.iter().zip(&problem.ub_rhs) {
        let (a, b) = xform(r, *b);
        rows.push((a, b, Some(1.0)));
    }
    for (a, b, slack) in &mut rows {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            if let Some(s) = slack {
                *s = -*s;
            }
        }
    }
    let needs_art: Vec<bool> = rows.iter().map(|(_, _, s)| *s != Some(1.0)).collect();
    let n_art = needs_art.iter().filter(|v| **v).count();
    let n_cols = n_struct + n_slack + n_art;
    let width = n_cols + 1;

    let mut data = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut art = n_struct + n_slack;
    for (i, (a, b, slack)) in rows.iter().enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        row[..n_struct].copy_from_slice(a);
        row[n_cols] = *b;
        if let Some(s) = slack {
            row[n_struct + (i - n_eq)] = *s;
        }
        if needs_art[i] {
            row[art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = n_struct + (i - n_eq);
        }
    }
    let original = data.clone();
    let mut tab = Tableau {
        rows: m,
        width,
        data,
        obj: vec![0.0; width],
        basis,
        original,
    };
    let mut pivots = 0;

    if n_art > 0 {
        let mut cost = vec![0.0; n_cols];
        cost[n_struct + n_slack..].iter_mut().for_each(|c| *c = -1.0);
        tab.set_objective(&cost);
        match tab.optimize(n_cols, &cost, &mut pivots) {
            LpStatus::Optimal => {}
            LpStatus::IterationLimit => return Ok(LpSolution::failed(LpStatus::IterationLimit)),
            // Phase 1 is bounded below by zero.
            other => {
                return Err(Error::AssemblyBug(format!("phase 1 returned {other:?}")));
            }
        }
        let b_norm = rows.iter().fold(0.0f64, |s, (_, b, _)| s.max(b.abs()));
        if tab.obj[n_cols] < -FEAS_TOL * (1.0 + b_norm) {
            return Ok(LpSolution::failed(LpStatus::Infeasible));
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < n_struct + n_slack {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for c in 0..n_struct + n_slack {
                let a = tab.at(r, c).abs();
                if a > PIVOT_TOL && best.map_or(true, |(_, b)| a > b) {
                    best = Some((c, a));
                }
            }
            if let Some((c, _)) = best {
                tab.pivot(r, c);
            }
        }
    }

    let mut cost = vec![0.0; n_cols];
    for (c, map) in problem.objective.iter().zip(&maps) {
        match *map {
            VarMap::Shifted { col, .. } => cost[col] = *c,
            VarMap::Split { pos, neg } => {
                cost[pos] = *c;
                cost[neg] = -c;
            }
        }
    }
    tab.set_objective(&cost);
    match tab.optimize(n_struct + n_slack, &cost, &mut pivots) {
        LpStatus::Optimal => {}
        status => return Ok(LpSolution::failed(status)),
    }

    let cols = refine_basic_solution(&tab);
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, lower } => lower + cols[col].max(0.0),
            VarMap::Split { pos, neg } => cols[pos].max(0.0) - cols[neg].max(0.0),
        })
        .collect();
    let objective_value = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
    })
}

/// Basic variable values of the final basis.
fn refine_basic_solution(tab: &Tableau) -> Vec<f64> {
    let mut values = vec![0.0; tab.width - 1];
    for r in 0..tab.rows {
        values[tab.basis[r]] = tab.rhs(r);
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable() {
        let mut lp = LpProblem::new(1);
        lp.objective = vec![1.0];
        lp.add_ub(vec![1.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_face() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_ub(vec![1.0, 1.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
        assert!(lp.max_violation(&s.x) < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LpProblem::new(1);
        lp.objective = vec![1.0];
        lp.add_ub(vec![1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_ub(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max t s.t. t <= x, t <= 2 - x, x free, t free
        let mut lp = LpProblem::new(2);
        lp.objective = vec![0.0, 1.0];
        lp.lower_bounds = vec![None, None];
        lp.add_ub(vec![-1.0, 1.0], 0.0);
        lp.add_ub(vec![1.0, 1.0], 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);

        // min x + y (as max of the negation) with x + 2y = 4, x >= 1
        let mut lp = LpProblem::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.lower_bounds = vec![Some(1.0), Some(0.0)];
        lp.add_eq(vec![1.0, 2.0], 4.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_eq(vec![1.0, 1.0], 1.0);
        lp.add_eq(vec![2.0, 2.0], 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut lp = LpProblem::new(2);
        lp.add_ub(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn deterministic() {
        let mut lp = LpProblem::new(3);
        lp.objective = vec![0.3, 0.7, 0.1];
        lp.add_ub(vec![1.0, 1.0, 1.0], 3.0);
        lp.add_ub(vec![0.2, 0.9, 0.0], 1.0);
        lp.add_eq(vec![1.0, 0.0, -1.0], 0.5);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
