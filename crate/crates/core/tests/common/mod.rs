#![allow(dead_code)]

use csk_core::linprog::LpProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const BOX: f64 = 10.0;

/// Random bounded LP: `max c x` s.t. `A x <= b`, `0 <= x <= BOX`, with an
/// optional equality row through a known feasible point.
pub fn random_lp(rng: &mut ChaCha8Rng) -> (LpProblem, Vec<(Vec<f64>, f64)>) {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=8);
    let mut lp = LpProblem::new(n);
    lp.objective = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut rows = Vec::new();
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let slack = rng.gen_range(0.0..4.0);
        let b = a.iter().zip(&x0).map(|(a, x)| a * x).sum::<f64>() + slack;
        lp.add_ub(a.clone(), b);
        rows.push((a, b));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        lp.add_ub(a.clone(), BOX);
        rows.push((a, BOX));
    }
    if rng.gen_bool(0.3) {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let b = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        lp.add_eq(a, b);
    }
    (lp, rows)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Best objective over all basic feasible points: every choice of `n`
/// linearly independent active constraints.
pub fn vertex_oracle(lp: &LpProblem) -> Option<f64> {
    let n = lp.n_vars();
    let mut ineq: Vec<(Vec<f64>, f64)> = lp.ub_lhs.iter().cloned().zip(lp.ub_rhs.iter().copied()).collect();
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = -1.0;
        ineq.push((a, 0.0));
    }
    let eqs: Vec<(Vec<f64>, f64)> = lp.eq_lhs.iter().cloned().zip(lp.eq_rhs.iter().copied()).collect();
    let k = n - eqs.len();
    let mut best: Option<f64> = None;
    combinations(ineq.len(), k, &mut |pick| {
        let active: Vec<&(Vec<f64>, f64)> = eqs.iter().chain(pick.iter().map(|&i| &ineq[i])).collect();
        let a = DMatrix::from_fn(n, n, |r, c| active[r].0[c]);
        let b = DVector::from_iterator(n, active.iter().map(|r| r.1));
        let lu = a.full_piv_lu();
        if !lu.is_invertible() {
            return;
        }
        let Some(x) = lu.solve(&b) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        let ok = ineq.iter().all(|(a, b)| dot(a, &x) <= b + 1e-9)
            && eqs.iter().all(|(a, b)| (dot(a, &x) - b).abs() <= 1e-9);
        if ok {
            let v = dot(&lp.objective, &x);
            if best.map_or(true, |b| v > b) {
                best = Some(v);
            }
        }
    });
    best
}
