//! Bit-to-symbol labeling by the binary switching algorithm.
//!
//! The cost of a labeling is the pairwise union bound on the bit error
//! rate. Starting from a random labeling, symbols are visited in order of
//! decreasing cost contribution and each tries every label swap; the best
//! strictly improving swap is taken and the pass restarts.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{squared_distance, Constellation, LabelingMap};

pub const DEFAULT_BSA_RESTARTS: usize = 10;
const MAX_PASSES: usize = 100_000;

/// Gaussian upper tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Pairwise error probabilities `Q(d_ij / sqrt(2 N0))`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseErrorMatrix {
    pub n: usize,
    pub prob: Vec<f64>,
    pub n0: f64,
}

impl PairwiseErrorMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.prob[i * self.n + j]
    }
}

pub fn pairwise_error_matrix(constellation: &Constellation, n0: f64) -> Result<PairwiseErrorMatrix> {
    if !(n0 > 0.0) {
        return Err(Error::InvalidInput(format!("N0 must be positive, got {n0}")));
    }
    let n = constellation.len();
    let scale = (2.0 * n0).sqrt();
    let mut prob = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&constellation.points[i], &constellation.points[j]).sqrt();
            let p = q_function(d / scale);
            prob[i * n + j] = p;
            prob[j * n + i] = p;
        }
    }
    Ok(PairwiseErrorMatrix { n, prob, n0 })
}

fn hamming(a: usize, b: usize) -> u32 {
    (a ^ b).count_ones()
}

fn cost_of_words(words: &[usize], pem: &PairwiseErrorMatrix) -> f64 {
    let n = pem.n;
    let bits = n.trailing_zeros() as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += f64::from(hamming(words[i], words[j])) * pem.get(i, j);
            }
        }
    }
    total / (n as f64 * bits)
}

/// `(1 / (N_c N_B)) sum_{i != j} hamming(w_i, w_j) P(i -> j)`.
pub fn union_bound_ber(labeling: &LabelingMap, pem: &PairwiseErrorMatrix) -> Result<f64> {
    if labeling.len() != pem.n {
        return Err(Error::InvalidInput(format!(
            "labeling has {} symbols, error matrix has {}",
            labeling.len(),
            pem.n
        )));
    }
    Ok(cost_of_words(&labeling.word_of_symbol, pem))
}

/// One descent from `words`; returns the final words and the cost after
/// every accepted swap (starting with the initial cost).
pub fn bsa_descend(words: &[usize], pem: &PairwiseErrorMatrix) -> (Vec<usize>, Vec<f64>) {
    let n = pem.n;
    let mut words = words.to_vec();
    let mut cost = cost_of_words(&words, pem);
    let mut history = vec![cost];
    for _ in 0..MAX_PASSES {
        let contribution: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|j| *j != i)
                    .map(|j| f64::from(hamming(words[i], words[j])) * pem.get(i, j))
                    .sum()
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| contribution[*b].total_cmp(&contribution[*a]).then(a.cmp(b)));

        let mut improved = false;
        for &s in &order {
            let mut best: Option<(usize, f64)> = None;
            for t in 0..n {
                if t == s {
                    continue;
                }
                words.swap(s, t);
                let c = cost_of_words(&words, pem);
                words.swap(s, t);
                let gain = cost - c;
                if gain > 1e-15 * cost.max(f64::MIN_POSITIVE)
                    && best.map_or(true, |(_, g)| gain > g)
                {
                    best = Some((t, gain));
                }
            }
            if let Some((t, _)) = best {
                words.swap(s, t);
                cost = cost_of_words(&words, pem);
                history.push(cost);
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (words, history)
}

pub fn bsa_optimize<R: Rng + ?Sized>(
    constellation: &Constellation,
    n0: f64,
    rng: &mut R,
) -> Result<LabelingMap> {
    bsa_optimize_with_restarts(constellation, n0, DEFAULT_BSA_RESTARTS, rng)
}

/// Best of `restarts` descents from random labelings.
pub fn bsa_optimize_with_restarts<R: Rng + ?Sized>(
    constellation: &Constellation,
    n0: f64,
    restarts: usize,
    rng: &mut R,
) -> Result<LabelingMap> {
    let n = constellation.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "labeling needs a power-of-two constellation, got {n} points"
        )));
    }
    let pem = pairwise_error_matrix(constellation, n0)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let mut init: Vec<usize> = (0..n).collect();
        init.shuffle(rng);
        let (words, history) = bsa_descend(&init, &pem);
        let cost = *history.last().expect("history starts with the initial cost");
        if best.as_ref().map_or(true, |(_, c)| cost < *c) {
            best = Some((words, cost));
        }
    }
    let (words, cost) = best.expect("at least one restart");
    LabelingMap::new(words, cost)
}
