//! Seeded Monte Carlo BER simulation over a cross-talk channel and
//! equalizer chain.
//!
//! Every OSNR grid point draws from its own ChaCha stream derived from the
//! run seed, so points can run in parallel and results do not depend on
//! scheduling.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::baselines::decoupled_constellation;
use crate::channel::{lmmse_equalizer, ChannelModel, EqualizerKind, EqualizerSet};
use crate::error::{Error, Result};
use crate::model::{
    squared_distance, BerPoint, BerReport, Constellation, DesignSpec, DomainTag, LabelingMap,
};
use crate::rng::{sub_seed, Gaussian};

pub const DEFAULT_BITS_PER_POINT: u64 = 300_000;

/// Negative drive levels down to this are round-off and clip to zero.
pub const DRIVE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub osnr_db_grid: Vec<f64>,
    /// Bits per grid point; a whole number of symbols.
    pub n_bits: u64,
    pub seed: u64,
    pub equalizer_kind: EqualizerKind,
    pub channel: ChannelModel,
    /// LED count in the OSNR normalization.
    pub osnr_leds: usize,
}

impl SimConfig {
    pub fn new(osnr_db_grid: Vec<f64>, channel: ChannelModel, equalizer_kind: EqualizerKind) -> Self {
        SimConfig {
            osnr_db_grid,
            n_bits: DEFAULT_BITS_PER_POINT,
            seed: 1,
            equalizer_kind,
            channel,
            osnr_leds: 1,
        }
    }
}

/// Inverts `osnr = 10 log10(P_o / sqrt(n_blue N0))` for `N0`.
pub fn noise_param_from_osnr(osnr_db: f64, avg_power: f64, n_blue: usize) -> f64 {
    avg_power * avg_power / (n_blue as f64 * 10f64.powf(osnr_db / 5.0))
}

/// Index of the nearest candidate; ties go to the lowest index.
pub fn detect_nearest(received: &[f64], candidates: &[Vec<f64>]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidates to detect among".into()));
    }
    if candidates.iter().any(|c| c.len() != received.len()) {
        return Err(Error::InvalidInput("candidate dimension mismatch".into()));
    }
    Ok(nearest(received, candidates))
}

fn nearest(received: &[f64], candidates: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let d = squared_distance(received, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

/// Everything needed to simulate one grid point.
struct Chain {
    /// Transmitted intensity per symbol.
    tx: Vec<Vec<f64>>,
    /// Receive matrix applied before detection, if any.
    post: Option<DMatrix<f64>>,
    candidates: Vec<Vec<f64>>,
}

fn build_chain(
    constellation: &Constellation,
    equalizers: &EqualizerSet,
    channel: &ChannelModel,
    n0: f64,
) -> Result<Chain> {
    let h = &channel.matrix;
    match equalizers.kind {
        EqualizerKind::SvdPre => {
            if constellation.domain_tag != DomainTag::PreEqualized {
                return Err(Error::InvalidDomain(
                    "svd-pre simulation needs a pre-equalized constellation".into(),
                ));
            }
            let pre = equalizers
                .pre
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("svd-pre set has no pre-equalizer".into()))?;
            let post = equalizers
                .post
                .clone()
                .ok_or_else(|| Error::InvalidInput("svd-pre set has no post-equalizer".into()))?;
            let tx: Vec<Vec<f64>> = constellation.points.iter().map(|c| mat_vec(pre, c)).collect();
            if let Some(v) = tx.iter().flatten().find(|v| **v < -DRIVE_TOL) {
                return Err(Error::DomainViolation(format!(
                    "pre-equalized symbol drives an LED at negative intensity {v}"
                )));
            }
            let tx = tx
                .into_iter()
                .map(|x| x.into_iter().map(|v| v.max(0.0)).collect())
                .collect();
            Ok(Chain {
                tx,
                post: Some(post),
                candidates: constellation.points.clone(),
            })
        }
        kind => {
            if constellation.domain_tag != DomainTag::Intensity {
                return Err(Error::InvalidDomain(format!(
                    "{} simulation needs an intensity constellation",
                    kind.as_str()
                )));
            }
            if let Some(v) = constellation.points.iter().flatten().find(|v| **v < -DRIVE_TOL) {
                return Err(Error::DomainViolation(format!("negative intensity {v}")));
            }
            let tx = constellation.points.clone();
            let (post, candidates) = match kind {
                EqualizerKind::Identity => (None, tx.clone()),
                EqualizerKind::Zf => {
                    let g = equalizers
                        .post
                        .clone()
                        .ok_or_else(|| Error::InvalidInput("zf set has no receive matrix".into()))?;
                    (Some(g), tx.clone())
                }
                EqualizerKind::Lmmse => {
                    // The Wiener receiver depends on N0, so it is rebuilt per point.
                    let g = lmmse_equalizer(h, constellation, n0)?.post.expect("lmmse post");
                    let images = tx.iter().map(|c| mat_vec(&(&g * h), c)).collect();
                    (Some(g), images)
                }
                EqualizerKind::SvdPre => unreachable!("handled above"),
            };
            Ok(Chain {
                tx,
                post,
                candidates,
            })
        }
    }
}

fn simulate_point(
    chain: &Chain,
    labeling: &LabelingMap,
    channel: &ChannelModel,
    n0: f64,
    n_symbols_sent: u64,
    seed: u64,
) -> (u64, u64) {
    let h = &channel.matrix;
    let n = labeling.len();
    let mask = (n - 1) as u64;
    let symbol_of_word = labeling.symbol_of_word();
    let sigma = (n0 / 2.0).sqrt();
    let rx_images: Vec<Vec<f64>> = chain.tx.iter().map(|x| mat_vec(h, x)).collect();
    let dim = h.nrows();
    let mut gauss = Gaussian::new(seed);
    let mut y = vec![0.0; dim];
    let (mut bit_errors, mut symbol_errors) = (0u64, 0u64);
    for _ in 0..n_symbols_sent {
        let word = (gauss.next_u64() & mask) as usize;
        let sym = symbol_of_word[word];
        for (v, clean) in y.iter_mut().zip(&rx_images[sym]) {
            *v = clean + sigma * gauss.sample();
        }
        let detected = match &chain.post {
            Some(g) => nearest(&mat_vec(g, &y), &chain.candidates),
            None => nearest(&y, &chain.candidates),
        };
        if detected != sym {
            symbol_errors += 1;
            bit_errors += u64::from((labeling.word_of_symbol[detected] ^ word).count_ones());
        }
    }
    (bit_errors, symbol_errors)
}

/// Simulates `constellation` under `labeling` at every OSNR of `sim`.
pub fn run_ber(
    constellation: &Constellation,
    labeling: &LabelingMap,
    equalizers: &EqualizerSet,
    sim: &SimConfig,
    spec: &DesignSpec,
) -> Result<BerReport> {
    if labeling.len() != constellation.len() {
        return Err(Error::InvalidInput(format!(
            "labeling has {} words for {} symbols",
            labeling.len(),
            constellation.len()
        )));
    }
    if equalizers.kind != sim.equalizer_kind {
        return Err(Error::InvalidInput(format!(
            "equalizer set is {} but simulation asks for {}",
            equalizers.kind.as_str(),
            sim.equalizer_kind.as_str()
        )));
    }
    let bits = labeling.bits_per_symbol as u64;
    if sim.n_bits == 0 || sim.n_bits % bits != 0 {
        return Err(Error::InvalidInput(format!(
            "n_bits {} is not a positive multiple of {bits}",
            sim.n_bits
        )));
    }
    let tx_dim = match equalizers.kind {
        EqualizerKind::SvdPre => equalizers.pre.as_ref().map_or(0, |p| p.nrows()),
        _ => constellation.dim,
    };
    if tx_dim != sim.channel.dim() {
        return Err(Error::InvalidInput(format!(
            "transmit dimension {tx_dim} does not match {}x{} channel",
            sim.channel.dim(),
            sim.channel.dim()
        )));
    }
    let n_symbols_sent = sim.n_bits / bits;
    let points: Result<Vec<BerPoint>> = sim
        .osnr_db_grid
        .par_iter()
        .enumerate()
        .map(|(k, &osnr_db)| {
            let n0 = noise_param_from_osnr(osnr_db, spec.avg_power, sim.osnr_leds);
            let chain = build_chain(constellation, equalizers, &sim.channel, n0)?;
            let (bit_errors, symbol_errors) = simulate_point(
                &chain,
                labeling,
                &sim.channel,
                n0,
                n_symbols_sent,
                sub_seed(sim.seed, k as u64),
            );
            assert!(bit_errors <= bits * symbol_errors);
            Ok(BerPoint {
                osnr_db,
                n_bits: sim.n_bits,
                bit_errors,
                symbol_errors,
                n_symbols_sent,
            })
        })
        .collect();
    Ok(BerReport {
        bits_per_symbol: labeling.bits_per_symbol,
        points: points?,
    })
}

struct ConventionalStats {
    /// `(bits sent, bit errors)` per branch.
    branches: [(u64, u64); 3],
    word_errors: u64,
    words: u64,
}

fn simulate_conventional(
    fractions: [f64; 3],
    avg_power: f64,
    sim: &SimConfig,
) -> Result<Vec<ConventionalStats>> {
    if sim.n_bits == 0 || sim.n_bits % 3 != 0 {
        return Err(Error::InvalidInput(format!(
            "n_bits {} is not a positive multiple of 3",
            sim.n_bits
        )));
    }
    let scheme = decoupled_constellation(fractions, avg_power)?;
    Ok(sim
        .osnr_db_grid
        .par_iter()
        .enumerate()
        .map(|(k, &osnr_db)| {
            let n0 = noise_param_from_osnr(osnr_db, avg_power, sim.osnr_leds);
            let sigma = (n0 / 2.0).sqrt();
            let mut gauss = Gaussian::new(sub_seed(sim.seed, k as u64));
            let words = sim.n_bits / 3;
            let mut st = ConventionalStats {
                branches: [(0, 0); 3],
                word_errors: 0,
                words,
            };
            for _ in 0..words {
                let word = gauss.next_u64();
                let mut wrong = false;
                for (b, level) in scheme.levels.iter().enumerate() {
                    let bit = (word >> b) & 1;
                    let y = bit as f64 * level + sigma * gauss.sample();
                    // nearest of {0, level}, ties to 0
                    let decided = u64::from(y > level / 2.0 && *level > 0.0);
                    st.branches[b].0 += 1;
                    if decided != bit {
                        st.branches[b].1 += 1;
                        wrong = true;
                    }
                }
                st.word_errors += u64::from(wrong);
            }
            st
        })
        .collect())
}

/// Per-branch reports of the decoupled on-off keying scheme over an ideal
/// channel, with threshold detection on each color.
pub fn conventional_branch_reports(
    fractions: [f64; 3],
    avg_power: f64,
    sim: &SimConfig,
) -> Result<[BerReport; 3]> {
    let stats = simulate_conventional(fractions, avg_power, sim)?;
    Ok(std::array::from_fn(|b| BerReport {
        bits_per_symbol: 1,
        points: sim
            .osnr_db_grid
            .iter()
            .zip(&stats)
            .map(|(&osnr_db, st)| {
                let (sent, err) = st.branches[b];
                BerPoint {
                    osnr_db,
                    n_bits: sent,
                    bit_errors: err,
                    symbol_errors: err,
                    n_symbols_sent: sent,
                }
            })
            .collect(),
    }))
}

/// Aggregate BER of the decoupled scheme; a symbol is the 3-bit word.
pub fn conventional_chain_ber(
    fractions: [f64; 3],
    avg_power: f64,
    sim: &SimConfig,
) -> Result<BerReport> {
    let stats = simulate_conventional(fractions, avg_power, sim)?;
    let points = sim
        .osnr_db_grid
        .iter()
        .zip(&stats)
        .map(|(&osnr_db, st)| BerPoint {
            osnr_db,
            n_bits: sim.n_bits,
            bit_errors: st.branches.iter().map(|b| b.1).sum(),
            symbol_errors: st.word_errors,
            n_symbols_sent: st.words,
        })
        .collect();
    Ok(BerReport {
        bits_per_symbol: 3,
        points,
    })
}
