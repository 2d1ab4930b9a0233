//! End-to-end pipelines behind `csk reproduce`.

use rand::seq::SliceRandom;

use crate::channel::{
    crosstalk_channel, lmmse_equalizer, svd_equalizers, zf_equalizer, ChannelModel, EqualizerKind,
    EqualizerSet,
};
use crate::designer::{multi_start_design, MultiStartResult};
use crate::error::Result;
use crate::labeling::{bsa_optimize_with_restarts, DEFAULT_BSA_RESTARTS};
use crate::model::{BerPoint, BerReport, ColorProfile, Constellation, DesignSpec, LabelingMap};
use crate::reference;
use crate::rng::{rng_from_seed, sub_seed};
use crate::simulate::{conventional_chain_ber, noise_param_from_osnr, run_ber, SimConfig};

pub const FIG5_EPS: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];

#[derive(Debug, Clone, PartialEq)]
pub struct MedCell {
    /// PAPR cap or cross-talk, depending on the table.
    pub param: f64,
    pub profile: ColorProfile,
    pub med: f64,
    pub paper: f64,
}

impl MedCell {
    pub fn rel_dev(&self) -> f64 {
        (self.med - self.paper) / self.paper
    }
}

fn base_spec(profile: ColorProfile, restarts: usize, seed: u64) -> DesignSpec {
    let mut spec = DesignSpec::for_profile(profile);
    spec.restarts = restarts;
    spec.seed = seed;
    spec
}

/// Best-of-`restarts` designs on the identity channel under each PAPR cap.
pub fn table1_cells(restarts: usize, seed: u64) -> Result<Vec<MedCell>> {
    let mut cells = Vec::new();
    for (a, &alpha) in reference::TABLE1_ALPHAS.iter().enumerate() {
        for profile in ColorProfile::ALL {
            let spec = base_spec(profile, restarts, seed).with_uniform_papr(alpha);
            let r = multi_start_design(&spec, None)?;
            cells.push(MedCell {
                param: alpha,
                profile,
                med: r.best.constellation.med,
                paper: reference::TABLE1_MED[a][reference::profile_column(profile)],
            });
        }
    }
    Ok(cells)
}

/// Multi-start design for cross-talk `eps` behind the SVD pre-equalizer;
/// the cross-talk-free case designs intensities directly.
pub fn design_for_crosstalk(spec: &DesignSpec, eps: f64) -> Result<(MultiStartResult, EqualizerSet)> {
    let mut spec = spec.clone();
    spec.crosstalk_eps = eps;
    let ch = crosstalk_channel(eps, spec.n_leds())?;
    if eps == 0.0 {
        return Ok((multi_start_design(&spec, None)?, EqualizerSet::identity(spec.n_leds())));
    }
    let eq = svd_equalizers(&ch.matrix)?;
    Ok((multi_start_design(&spec, eq.pre.as_ref())?, eq))
}

pub fn table3_cells(restarts: usize, seed: u64) -> Result<Vec<MedCell>> {
    let mut cells = Vec::new();
    for (e, &eps) in reference::TABLE3_EPS.iter().enumerate() {
        for profile in ColorProfile::ALL {
            let (r, _) = design_for_crosstalk(&base_spec(profile, restarts, seed), eps)?;
            cells.push(MedCell {
                param: eps,
                profile,
                med: r.best.constellation.med,
                paper: reference::TABLE3_MED[e][reference::profile_column(profile)],
            });
        }
    }
    Ok(cells)
}

/// Per-restart MEDs of the balanced design.
pub fn fig4_meds(restarts: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(multi_start_design(&base_spec(ColorProfile::Balanced, restarts, seed), None)?.meds)
}

pub fn near_best_fraction(meds: &[f64], ratio: f64) -> f64 {
    let best = meds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    meds.iter().filter(|m| **m >= ratio * best).count() as f64 / meds.len() as f64
}

/// `(lo, hi, count)` bins of width `width` covering the data.
pub fn histogram(values: &[f64], width: f64) -> Vec<(f64, f64, usize)> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = (lo / width).floor() as i64;
    let end = (hi / width).floor() as i64;
    let mut counts = vec![0usize; (end - start + 1) as usize];
    for v in values {
        counts[((v / width).floor() as i64 - start) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let b = (start + k as i64) as f64 * width;
            (b, b + width, c)
        })
        .collect()
}

/// A constellation and the receiver it is simulated with.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub name: String,
    pub constellation: Constellation,
    pub labeling: LabelingMap,
    pub equalizers: EqualizerSet,
    pub channel: ChannelModel,
}

impl Scheme {
    pub fn simulate(&self, osnr_db: &[f64], n_bits: u64, seed: u64, spec: &DesignSpec) -> Result<BerReport> {
        let mut sim = SimConfig::new(osnr_db.to_vec(), self.channel.clone(), self.equalizers.kind);
        sim.n_bits = n_bits;
        sim.seed = seed;
        sim.osnr_leds = spec.n_blue;
        run_ber(&self.constellation, &self.labeling, &self.equalizers, &sim, spec)
    }
}

pub fn bsa_labeling(c: &Constellation, spec: &DesignSpec, design_osnr_db: f64, seed: u64) -> Result<LabelingMap> {
    let n0 = noise_param_from_osnr(design_osnr_db, spec.avg_power, spec.n_blue);
    bsa_optimize_with_restarts(c, n0, DEFAULT_BSA_RESTARTS, &mut rng_from_seed(seed))
}

/// Jointly designed constellation behind the SVD pre-equalizer at `eps`.
pub fn svd_scheme(spec: &DesignSpec, eps: f64, design_osnr_db: f64) -> Result<Scheme> {
    let ch = crosstalk_channel(eps, spec.n_leds())?;
    let eq = svd_equalizers(&ch.matrix)?;
    let mut s = spec.clone();
    s.crosstalk_eps = eps;
    let r = multi_start_design(&s, eq.pre.as_ref())?;
    let c = r.best.constellation;
    Ok(Scheme {
        name: EqualizerKind::SvdPre.as_str().into(),
        labeling: bsa_labeling(&c, spec, design_osnr_db, spec.seed)?,
        constellation: c,
        equalizers: eq,
        channel: ch,
    })
}

/// A cross-talk-free design received through a post-equalizer.
pub fn post_equalized_scheme(
    kind: EqualizerKind,
    base: &Constellation,
    labeling: &LabelingMap,
    spec: &DesignSpec,
    eps: f64,
    design_osnr_db: f64,
) -> Result<Scheme> {
    let ch = crosstalk_channel(eps, spec.n_leds())?;
    let eq = match kind {
        EqualizerKind::Zf => zf_equalizer(&ch.matrix)?,
        EqualizerKind::Lmmse => {
            let n0 = noise_param_from_osnr(design_osnr_db, spec.avg_power, spec.n_blue);
            lmmse_equalizer(&ch.matrix, base, n0)?
        }
        _ => EqualizerSet::identity(spec.n_leds()),
    };
    Ok(Scheme {
        name: kind.as_str().into(),
        constellation: base.clone(),
        labeling: labeling.clone(),
        equalizers: eq,
        channel: ch,
    })
}

/// Balanced design and labeling for the ideal channel.
pub fn ideal_design(spec: &DesignSpec, design_osnr_db: f64) -> Result<(Constellation, LabelingMap)> {
    let c = multi_start_design(spec, None)?.best.constellation;
    let l = bsa_labeling(&c, spec, design_osnr_db, spec.seed)?;
    Ok((c, l))
}

/// Schemes compared at one cross-talk level: svd-pre, lmmse, zf.
pub fn crosstalk_schemes(spec: &DesignSpec, eps: f64, design_osnr_db: f64) -> Result<Vec<Scheme>> {
    let (c, l) = ideal_design(spec, design_osnr_db)?;
    Ok(vec![
        svd_scheme(spec, eps, design_osnr_db)?,
        post_equalized_scheme(EqualizerKind::Lmmse, &c, &l, spec, eps, design_osnr_db)?,
        post_equalized_scheme(EqualizerKind::Zf, &c, &l, spec, eps, design_osnr_db)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemePoint {
    pub param: f64,
    pub scheme: String,
    pub point: BerPoint,
}

/// BER against cross-talk at a fixed OSNR.
pub fn fig5_points(spec: &DesignSpec, eps_grid: &[f64], osnr_db: f64, n_bits: u64) -> Result<Vec<SchemePoint>> {
    let mut out = Vec::new();
    for (k, &eps) in eps_grid.iter().enumerate() {
        for scheme in crosstalk_schemes(spec, eps, osnr_db)? {
            let rep = scheme.simulate(&[osnr_db], n_bits, sub_seed(spec.seed, k as u64), spec)?;
            out.push(SchemePoint {
                param: eps,
                scheme: scheme.name.clone(),
                point: rep.points[0],
            });
        }
    }
    Ok(out)
}

/// BER against OSNR at a fixed cross-talk.
pub fn fig6_points(
    spec: &DesignSpec,
    eps: f64,
    osnr_grid: &[f64],
    design_osnr_db: f64,
    n_bits: u64,
) -> Result<Vec<SchemePoint>> {
    let mut out = Vec::new();
    for scheme in crosstalk_schemes(spec, eps, design_osnr_db)? {
        let rep = scheme.simulate(osnr_grid, n_bits, spec.seed, spec)?;
        for p in rep.points {
            out.push(SchemePoint {
                param: p.osnr_db,
                scheme: scheme.name.clone(),
                point: p,
            });
        }
    }
    Ok(out)
}

/// Joint design with optimized labeling against independent per-color OOK.
pub fn csk_vs_conventional(
    spec: &DesignSpec,
    osnr_grid: &[f64],
    design_osnr_db: f64,
    n_bits: u64,
) -> Result<(BerReport, BerReport)> {
    let (c, l) = ideal_design(spec, design_osnr_db)?;
    let scheme = post_equalized_scheme(EqualizerKind::Identity, &c, &l, spec, 0.0, design_osnr_db)?;
    let csk = scheme.simulate(osnr_grid, n_bits, spec.seed, spec)?;
    let mut sim = SimConfig::new(osnr_grid.to_vec(), ChannelModel::identity(3), EqualizerKind::Identity);
    sim.n_bits = n_bits;
    sim.seed = spec.seed;
    sim.osnr_leds = spec.n_blue;
    let conv = conventional_chain_ber(spec.color_fractions, spec.avg_power, &sim)?;
    Ok((csk, conv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Result {
    pub labeling: LabelingMap,
    pub optimized: BerPoint,
    /// Bit errors per symbol error of each random labeling.
    pub random: Vec<f64>,
}

impl Table2Result {
    pub fn random_mean(&self) -> f64 {
        self.random.iter().sum::<f64>() / self.random.len() as f64
    }
}

/// BSA labeling of the printed balanced constellation and the bit errors
/// per symbol error it achieves against `n_random` random labelings.
pub fn table2(osnr_db: f64, n_bits: u64, n_random: usize, seed: u64) -> Result<Table2Result> {
    let spec = DesignSpec::for_profile(ColorProfile::Balanced);
    let c = reference::balanced_constellation();
    let labeling = bsa_labeling(&c, &spec, osnr_db, seed)?;
    let ideal = |l: &LabelingMap, s: u64| -> Result<BerPoint> {
        let scheme = Scheme {
            name: "none".into(),
            constellation: c.clone(),
            labeling: l.clone(),
            equalizers: EqualizerSet::identity(3),
            channel: ChannelModel::identity(3),
        };
        Ok(scheme.simulate(&[osnr_db], n_bits, s, &spec)?.points[0])
    };
    let optimized = ideal(&labeling, seed)?;
    let mut rng = rng_from_seed(sub_seed(seed, 0x7ab1e2));
    let mut random = Vec::with_capacity(n_random);
    for k in 0..n_random {
        let mut words: Vec<usize> = (0..c.len()).collect();
        words.shuffle(&mut rng);
        let l = LabelingMap::new(words, 0.0)?;
        random.push(ideal(&l, sub_seed(seed, k as u64 + 1))?.avg_bit_errors_per_symbol_error());
    }
    Ok(Table2Result {
        labeling,
        optimized,
        random,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins() {
        let h = histogram(&[7.26, 7.27, 7.20, 6.9], 0.05);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 4);
        assert_eq!(h.last().unwrap().2, 2);
        assert!((h[0].0 - 6.9).abs() < 1e-9);
        assert!(histogram(&[], 0.1).is_empty());
    }

    #[test]
    fn fraction() {
        assert_eq!(near_best_fraction(&[1.0, 0.995, 0.5, 0.2], 0.99), 0.5);
    }

    #[test]
    fn table1_first_row() {
        let cells = table1_cells(4, 1).unwrap();
        assert_eq!(cells.len(), 12);
        assert!(cells[0].rel_dev().abs() < 0.02, "{:?}", cells[0]);
    }
}
