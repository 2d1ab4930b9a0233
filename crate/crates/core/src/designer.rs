//! Max-min-distance constellation design by successive linearization.
//!
//! Each pairwise constraint `||c_p - c_q||^2 >= t` is replaced by its
//! first-order expansion around the current reference point, which turns
//! the design problem into an LP over `(c_T, t)`. Solving that LP and
//! re-linearizing around the solution gives a non-decreasing sequence of
//! `t` values; several random starts are run and the best kept.
//!
//! With a pre-equalizer `P` the decision variables live in the
//! `r`-dimensional design space and every lighting constraint is applied to
//! the transmitted intensities `P c_i` instead.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linprog::{solve_lp, LpProblem, LpStatus};
use crate::model::{
    average_color_vector, Color, Constellation, DesignSpec, DomainTag,
};
use crate::rng::{rng_from_seed, sub_seed};

/// A symbol pair with its linear index; `p` and `q` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub p: usize,
    pub q: usize,
    pub l: usize,
}

/// `l = (p - 1) N_c - p (p + 1) / 2 + q` for `1 <= p < q <= N_c`.
pub fn pair_index(p: usize, q: usize, n_symbols: usize) -> Result<PairIndex> {
    if p == 0 || p >= q || q > n_symbols {
        return Err(Error::InvalidPair { p, q, n: n_symbols });
    }
    let l = (p - 1) * n_symbols + q - p * (p + 1) / 2;
    Ok(PairIndex { p, q, l })
}

/// Inverse of [`pair_index`].
pub fn pair_from_linear(l: usize, n_symbols: usize) -> Result<PairIndex> {
    let total = n_symbols * n_symbols.saturating_sub(1) / 2;
    if l == 0 || l > total {
        return Err(Error::InvalidInput(format!(
            "pair index {l} outside 1..={total}"
        )));
    }
    let mut first = 1;
    for p in 1..n_symbols {
        let count = n_symbols - p;
        if l < first + count {
            return pair_index(p, p + 1 + (l - first), n_symbols);
        }
        first += count;
    }
    unreachable!("l is range checked above")
}

/// `h(c) = gradient . c + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFunctional {
    pub gradient: Vec<f64>,
    pub offset: f64,
}

impl AffineFunctional {
    pub fn eval(&self, c: &[f64]) -> f64 {
        self.gradient.iter().zip(c).map(|(g, v)| g * v).sum::<f64>() + self.offset
    }
}

/// First-order expansion of `||c_p - c_q||^2` around `c_ref`, where `p` and
/// `q` are 0-based symbol ids. The result is tight at `c_ref` and below the
/// true squared distance everywhere else.
pub fn linearized_distance(c_ref: &[f64], dim: usize, p: usize, q: usize) -> Result<AffineFunctional> {
    if dim == 0 || c_ref.len() % dim != 0 {
        return Err(Error::InvalidInput(format!(
            "reference of length {} is not a multiple of dim {dim}",
            c_ref.len()
        )));
    }
    let n = c_ref.len() / dim;
    if p >= n || q >= n || p == q {
        return Err(Error::InvalidInput(format!("bad symbol pair ({p}, {q}) for {n} symbols")));
    }
    let mut gradient = vec![0.0; c_ref.len()];
    let mut norm2 = 0.0;
    for k in 0..dim {
        let g = c_ref[p * dim + k] - c_ref[q * dim + k];
        gradient[p * dim + k] = 2.0 * g;
        gradient[q * dim + k] = -2.0 * g;
        norm2 += g * g;
    }
    Ok(AffineFunctional {
        gradient,
        offset: -norm2,
    })
}

/// Coefficients mapping design coordinates to transmitted intensities.
/// `None` means the identity.
fn transmit_row(pre: Option<&DMatrix<f64>>, led: usize, dim: usize) -> Vec<f64> {
    match pre {
        Some(p) => p.row(led).iter().copied().collect(),
        None => {
            let mut r = vec![0.0; dim];
            r[led] = 1.0;
            r
        }
    }
}

fn design_dim(spec: &DesignSpec, pre: Option<&DMatrix<f64>>) -> Result<usize> {
    match pre {
        None => Ok(spec.n_leds()),
        Some(p) if p.nrows() == spec.n_leds() && p.ncols() > 0 => Ok(p.ncols()),
        Some(p) => Err(Error::InvalidInput(format!(
            "pre-equalizer is {}x{}, expected {} rows",
            p.nrows(),
            p.ncols(),
            spec.n_leds()
        ))),
    }
}

/// Builds the LP solved at one linearization point.
///
/// Variables are the stacked design coordinates followed by `t`.
pub fn assemble_subproblem(
    spec: &DesignSpec,
    c_ref: &[f64],
    pre: Option<&DMatrix<f64>>,
) -> Result<LpProblem> {
    spec.validate()?;
    let dim = design_dim(spec, pre)?;
    let n_sym = spec.n_symbols;
    let n_c = n_sym * dim;
    if c_ref.len() != n_c {
        return Err(Error::InvalidInput(format!(
            "reference has length {}, expected {n_c}",
            c_ref.len()
        )));
    }
    let n_leds = spec.n_leds();
    let t_col = n_c;
    let mut lp = LpProblem::new(n_c + 1);
    lp.objective[t_col] = 1.0;
    lp.lower_bounds[t_col] = None;
    if pre.is_some() {
        lp.lower_bounds[..n_c].iter_mut().for_each(|b| *b = None);
    }
    let rows: Vec<Vec<f64>> = (0..n_leds).map(|j| transmit_row(pre, j, dim)).collect();

    // Average color of each group.
    let target = spec.target_color();
    for color in Color::ALL {
        let range = spec.color_range(color);
        let c3 = target[color as usize];
        if range.is_empty() {
            if c3 > 0.0 {
                return Err(Error::InfeasibleSpec(format!(
                    "color {color:?} has fraction {} but no LEDs",
                    spec.color_fractions[color as usize]
                )));
            }
            continue;
        }
        let mut row = vec![0.0; n_c + 1];
        for i in 0..n_sym {
            for j in range.clone() {
                for (k, a) in rows[j].iter().enumerate() {
                    row[i * dim + k] += a / n_sym as f64;
                }
            }
        }
        lp.add_eq(row, c3);
    }

    // Nonnegative transmitted intensity (plain bounds without pre-equalizer).
    if pre.is_some() {
        for i in 0..n_sym {
            for r in &rows {
                let mut row = vec![0.0; n_c + 1];
                for (k, a) in r.iter().enumerate() {
                    row[i * dim + k] = -a;
                }
                lp.add_ub(row, 0.0);
            }
        }
    }

    // t <= h_l(c) for every pair.
    for p in 0..n_sym {
        for q in p + 1..n_sym {
            let h = linearized_distance(c_ref, dim, p, q)?;
            let mut row: Vec<f64> = h.gradient.iter().map(|g| -g).collect();
            row.push(1.0);
            lp.add_ub(row, h.offset);
        }
    }

    // N_c x_{i,j} - alpha_j sum_k x_{k,j} <= 0 for every LED j and symbol i.
    if let Some(caps) = &spec.papr_caps {
        for (j, alpha) in caps.iter().enumerate() {
            for i in 0..n_sym {
                let mut row = vec![0.0; n_c + 1];
                for k in 0..n_sym {
                    let w = if k == i { n_sym as f64 - alpha } else { -alpha };
                    for (m, a) in rows[j].iter().enumerate() {
                        row[k * dim + m] += w * a;
                    }
                }
                lp.add_ub(row, 0.0);
            }
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub constellation: Constellation,
    /// Optimized lower bound on the squared minimum distance.
    pub t_star: f64,
    pub iterations: usize,
    pub start_index: usize,
    pub feasible: bool,
    /// `t` after each linearization step.
    pub t_history: Vec<f64>,
}

/// Transmitted intensities `P c_i` of a design-space constellation.
pub fn transmit_intensities(
    constellation: &Constellation,
    pre: Option<&DMatrix<f64>>,
) -> Result<Constellation> {
    let Some(p) = pre else {
        return Ok(constellation.clone());
    };
    if p.ncols() != constellation.dim {
        return Err(Error::InvalidInput(format!(
            "pre-equalizer has {} columns, constellation dim is {}",
            p.ncols(),
            constellation.dim
        )));
    }
    let points = constellation
        .points
        .iter()
        .map(|c| {
            let x = p * DVector::from_column_slice(c);
            x.iter().map(|v| if v.abs() < 1e-12 { 0.0 } else { *v }).collect()
        })
        .collect();
    Constellation::new(points, DomainTag::Intensity)
}

/// Checks the lighting constraints on the transmitted intensities.
pub fn is_feasible(
    spec: &DesignSpec,
    constellation: &Constellation,
    pre: Option<&DMatrix<f64>>,
) -> bool {
    let Ok(tx) = transmit_intensities(constellation, pre) else {
        return false;
    };
    let Ok(avg) = average_color_vector(&tx, spec) else {
        return false;
    };
    let color_ok = avg
        .iter()
        .zip(spec.target_color())
        .all(|(a, t)| (a - t).abs() <= 1e-6 * spec.avg_power);
    let papr_ok = match &spec.papr_caps {
        None => true,
        Some(caps) => {
            let n = tx.len() as f64;
            caps.iter().enumerate().all(|(j, alpha)| {
                let col = tx.points.iter().map(|p| p[j]);
                let peak = col.clone().fold(0.0, f64::max);
                let mean = col.sum::<f64>() / n;
                if mean > 0.0 {
                    peak / mean <= alpha + 1e-6
                } else {
                    // an all-dark LED has no PAPR to violate
                    peak <= 1e-9
                }
            })
        }
    };
    color_ok && papr_ok
}

/// One successive-linearization run from `init`.
pub fn design_once(
    spec: &DesignSpec,
    init: &[f64],
    pre: Option<&DMatrix<f64>>,
) -> Result<DesignResult> {
    let dim = design_dim(spec, pre)?;
    let n_c = spec.n_symbols * dim;
    if init.len() != n_c {
        return Err(Error::InvalidInput(format!(
            "init has length {}, expected {n_c}",
            init.len()
        )));
    }
    let mut reference = init.to_vec();
    let mut t_history: Vec<f64> = Vec::new();
    for iter in 0..spec.sca_max_iter {
        let lp = assemble_subproblem(spec, &reference, pre)?;
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => {
                return Err(Error::AssemblyBug("linearized subproblem is unbounded".into()));
            }
            LpStatus::Infeasible if iter == 0 => {
                return Err(Error::InfeasibleSpec(
                    "lighting constraints admit no constellation".into(),
                ));
            }
            LpStatus::IterationLimit if iter == 0 => {
                return Err(Error::AssemblyBug("LP iteration limit on first step".into()));
            }
            // The previous iterate stays the answer.
            LpStatus::Infeasible | LpStatus::IterationLimit => break,
        }
        let t = sol.x[n_c];
        reference.copy_from_slice(&sol.x[..n_c]);
        let converged = t_history
            .last()
            .is_some_and(|prev| (t - prev).abs() <= spec.sca_tol * (1.0 + t.abs()));
        t_history.push(t);
        if converged {
            break;
        }
    }
    let tag = if pre.is_some() {
        DomainTag::PreEqualized
    } else {
        DomainTag::Intensity
    };
    let constellation = Constellation::from_joint(&reference, dim, tag)?;
    let feasible = is_feasible(spec, &constellation, pre);
    Ok(DesignResult {
        constellation,
        t_star: *t_history.last().expect("at least one LP solved"),
        iterations: t_history.len(),
        start_index: 0,
        feasible,
        t_history,
    })
}

/// Uniform random intensities rescaled so every color group meets its
/// average-power target exactly.
pub fn random_init<R: Rng + ?Sized>(spec: &DesignSpec, rng: &mut R) -> Vec<f64> {
    let n_leds = spec.n_leds();
    let n_sym = spec.n_symbols;
    let mut x: Vec<f64> = (0..n_sym * n_leds).map(|_| rng.gen::<f64>()).collect();
    let target = spec.target_color();
    for color in Color::ALL {
        let range = spec.color_range(color);
        if range.is_empty() {
            continue;
        }
        let sum: f64 = (0..n_sym)
            .flat_map(|i| range.clone().map(move |j| i * n_leds + j))
            .map(|idx| x[idx])
            .sum();
        let scale = target[color as usize] * n_sym as f64 / sum;
        for i in 0..n_sym {
            for j in range.clone() {
                x[i * n_leds + j] *= scale;
            }
        }
    }
    x
}

/// Maps intensities into design coordinates with the pseudo-inverse of `P`.
pub fn to_design_space(intensity: &[f64], n_leds: usize, pre: &DMatrix<f64>) -> Vec<f64> {
    let pinv = pre
        .clone()
        .pseudo_inverse(1e-12)
        .expect("pseudo-inverse with nonnegative epsilon");
    intensity
        .chunks(n_leds)
        .flat_map(|x| (&pinv * DVector::from_column_slice(x)).iter().copied().collect::<Vec<_>>())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub best: DesignResult,
    /// MED of every restart that completed, in restart order.
    pub meds: Vec<f64>,
}

/// Runs `spec.restarts` independent designs and keeps the largest MED.
pub fn multi_start_design(
    spec: &DesignSpec,
    pre: Option<&DMatrix<f64>>,
) -> Result<MultiStartResult> {
    spec.validate()?;
    design_dim(spec, pre)?;
    let runs: Vec<Result<DesignResult>> = (0..spec.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(sub_seed(spec.seed, k as u64));
            let init = random_init(spec, &mut rng);
            let init = match pre {
                Some(p) => to_design_space(&init, spec.n_leds(), p),
                None => init,
            };
            design_once(spec, &init, pre).map(|mut r| {
                r.start_index = k;
                r
            })
        })
        .collect();
    let meds: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.as_ref().ok().map(|d| d.constellation.med))
        .collect();
    let mut best: Option<DesignResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                if best
                    .as_ref()
                    .map_or(true, |b| r.constellation.med > b.constellation.med)
                {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(best) => Ok(MultiStartResult { best, meds }),
        None => Err(first_err.expect("restarts >= 1")),
    }
}
