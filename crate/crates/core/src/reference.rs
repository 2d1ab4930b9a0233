//! Published reference data: the printed constellations and MED tables.
//!
//! Cell labels follow `table<N>:<row>:<column>` so that diff reports can
//! point back at a specific table entry.

use crate::model::{ColorProfile, Constellation, DomainTag, LabelingMap};

/// Rows are LEDs `(r, g, b)`, columns are symbols.
const BALANCED: [[f64; 8]; 3] = [
    [0.0, 0.0, 0.0, 4.8485, 0.0, 0.0, 14.5455, 7.2727],
    [14.5455, 0.0, 7.2727, 4.8485, 0.0, 0.0, 0.0, 0.0],
    [0.0, 14.5455, 0.0, 4.8485, 0.0, 7.2727, 0.0, 0.0],
];

const UNBALANCED: [[f64; 8]; 3] = [
    [0.0, 7.2590, 14.5550, 0.0, 6.4454, 0.0, 7.2960, 0.0],
    [6.4859, 0.0, 0.0, 12.9718, 7.2090, 0.0, 0.0, 0.0],
    [3.2598, 7.2589, 0.0, 0.0, 0.0, 7.2590, 0.0, 0.0],
];

const EXTREME: [[f64; 8]; 3] = [
    [12.6277, 0.0, 0.0, 6.3139, 9.0584, 0.0, 9.0584, 18.9416],
    [0.0, 0.0, 6.3139, 0.0, 0.0, 0.0, 5.6861, 0.0],
    [0.0, 0.0, 0.0, 0.0, 5.6861, 6.3139, 0.0, 0.0],
];

/// Balanced design for the `eps = 0.1` channel, in pre-equalized coordinates.
const BALANCED_EPS_0_1: [[f64; 8]; 3] = [
    [-7.8376, -5.7208, -4.6893, 0.0, -8.4386, -3.9188, -7.8123, -7.7708],
    [8.6391, -0.9559, -5.1688, 0.0, 4.5539, 4.3196, 0.0, -0.0742],
    [3.8794, -2.0338, 2.3211, 0.0, -2.2190, 1.9397, -7.7338, 3.8463],
];

fn from_rows(rows: &[[f64; 8]; 3], tag: DomainTag) -> Constellation {
    let points = (0..8).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    Constellation::new(points, tag).expect("reference constellation is well formed")
}

pub fn balanced_constellation() -> Constellation {
    from_rows(&BALANCED, DomainTag::Intensity)
}

pub fn unbalanced_constellation() -> Constellation {
    from_rows(&UNBALANCED, DomainTag::Intensity)
}

pub fn extreme_constellation() -> Constellation {
    from_rows(&EXTREME, DomainTag::Intensity)
}

pub fn printed_constellation(profile: ColorProfile) -> Constellation {
    match profile {
        ColorProfile::Balanced => balanced_constellation(),
        ColorProfile::Unbalanced => unbalanced_constellation(),
        ColorProfile::Extreme => extreme_constellation(),
    }
}

pub fn balanced_eps_0_1_constellation() -> Constellation {
    from_rows(&BALANCED_EPS_0_1, DomainTag::PreEqualized)
}

/// The optimized labeling of [`balanced_constellation`] at 5 dB.
pub fn table2_labeling() -> LabelingMap {
    LabelingMap::new(vec![0b010, 0b100, 0b011, 0b111, 0b001, 0b000, 0b110, 0b101], 0.0)
        .expect("reference labeling is a bijection")
}

pub const TABLE1_ALPHAS: [f64; 4] = [1.5, 2.0, 4.0, 6.0];

/// MED by PAPR cap, columns `[balanced, unbalanced, extreme]`.
pub const TABLE1_MED: [[f64; 3]; 4] = [
    [3.54, 3.40, 2.84],
    [6.67, 5.58, 4.38],
    [7.07, 7.26, 6.31],
    [7.27, 7.26, 6.31],
];

pub const TABLE3_EPS: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];

/// MED by cross-talk parameter, columns `[balanced, unbalanced, extreme]`.
pub const TABLE3_MED: [[f64; 3]; 5] = [
    [7.2727, 7.2590, 6.3139],
    [6.7621, 6.6748, 5.9275],
    [6.3275, 6.1464, 5.5657],
    [5.9462, 5.7769, 5.1635],
    [5.5670, 5.3692, 4.7727],
];

/// Average bit errors per symbol error with the optimized labeling at 5 dB.
pub const BITS_PER_SYMBOL_ERROR_OPTIMIZED: f64 = 1.33;
/// Same quantity averaged over random labelings.
pub const BITS_PER_SYMBOL_ERROR_RANDOM: f64 = 1.73;

pub fn profile_column(profile: ColorProfile) -> usize {
    match profile {
        ColorProfile::Balanced => 0,
        ColorProfile::Unbalanced => 1,
        ColorProfile::Extreme => 2,
    }
}
