//! Decoupled per-color on-off keying, the reference point for joint design.

use crate::error::{Error, Result};
use crate::model::{Constellation, DomainTag, LabelingMap};

/// Three independent OOK branches, one bit per color.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledScheme {
    /// On level per color; the off level is zero.
    pub levels: [f64; 3],
    /// The 8-point product constellation; symbol index equals its bit pattern.
    pub joint: Constellation,
    pub natural_labeling: LabelingMap,
}

/// Each branch toggles between `0` and `2 P_o f_k`, so its mean is the
/// color target. Bit `k` of the symbol index drives color `k`.
pub fn decoupled_constellation(fractions: [f64; 3], avg_power: f64) -> Result<DecoupledScheme> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::InvalidInput(format!("fractions out of range: {fractions:?}")));
    }
    if ((fractions.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("fractions must sum to 1: {fractions:?}")));
    }
    if !(avg_power > 0.0) {
        return Err(Error::InvalidInput(format!("average power must be positive, got {avg_power}")));
    }
    let levels = fractions.map(|f| 2.0 * avg_power * f);
    let points = (0..8usize)
        .map(|s| (0..3).map(|k| if (s >> k) & 1 == 1 { levels[k] } else { 0.0 }).collect())
        .collect();
    Ok(DecoupledScheme {
        levels,
        joint: Constellation::new(points, DomainTag::Intensity)?,
        natural_labeling: LabelingMap::natural(8)?,
    })
}
