//! Domain types shared by the designer, labeler, and simulator.
//!
//! Every symbol vector orders its LEDs as `[red.., green.., blue..]`; the
//! color-selection logic everywhere else keys off that ordering instead of
//! materializing selection matrices.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a primary color inside a 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    Red = 0,
    Green = 1,
    Blue = 2,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Red, Color::Green, Color::Blue];
}

/// Named illumination profiles used throughout the reproduction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorProfile {
    Balanced,
    Unbalanced,
    Extreme,
}

impl ColorProfile {
    pub const ALL: [ColorProfile; 3] = [
        ColorProfile::Balanced,
        ColorProfile::Unbalanced,
        ColorProfile::Extreme,
    ];

    /// Color fractions `(r, g, b)`. The unbalanced profile uses exact ninths.
    pub fn fractions(self) -> [f64; 3] {
        match self {
            ColorProfile::Balanced => [1.0 / 3.0; 3],
            ColorProfile::Unbalanced => [4.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0],
            ColorProfile::Extreme => [0.7, 0.15, 0.15],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorProfile::Balanced => "balanced",
            ColorProfile::Unbalanced => "unbalanced",
            ColorProfile::Extreme => "extreme",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(ColorProfile::Balanced),
            "unbalanced" => Ok(ColorProfile::Unbalanced),
            "extreme" => Ok(ColorProfile::Extreme),
            other => Err(Error::InvalidInput(format!("unknown color profile '{other}'"))),
        }
    }
}

/// All inputs to a constellation design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n_red: usize,
    pub n_green: usize,
    pub n_blue: usize,
    pub n_symbols: usize,
    pub avg_power: f64,
    pub color_fractions: [f64; 3],
    pub papr_caps: Option<Vec<f64>>,
    pub crosstalk_eps: f64,
    pub restarts: usize,
    pub seed: u64,
    pub sca_tol: f64,
    pub sca_max_iter: usize,
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec::for_profile(ColorProfile::Balanced)
    }
}

impl DesignSpec {
    /// One RGB LED, 8 symbols, `P_o = 10`, 30 restarts.
    pub fn for_profile(profile: ColorProfile) -> Self {
        DesignSpec {
            n_red: 1,
            n_green: 1,
            n_blue: 1,
            n_symbols: 8,
            avg_power: 10.0,
            color_fractions: profile.fractions(),
            papr_caps: None,
            crosstalk_eps: 0.0,
            restarts: 30,
            seed: 1,
            sca_tol: 1e-7,
            sca_max_iter: 200,
        }
    }

    /// Sets an identical PAPR cap on every LED.
    pub fn with_uniform_papr(mut self, alpha: f64) -> Self {
        self.papr_caps = Some(vec![alpha; self.n_leds()]);
        self
    }

    pub fn n_leds(&self) -> usize {
        self.n_red + self.n_green + self.n_blue
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.n_symbols.trailing_zeros() as usize
    }

    /// Number of LEDs of each color, in `[r, g, b]` order.
    pub fn led_counts(&self) -> [usize; 3] {
        [self.n_red, self.n_green, self.n_blue]
    }

    /// Index range of the LEDs of `color` inside a symbol vector.
    pub fn color_range(&self, color: Color) -> Range<usize> {
        match color {
            Color::Red => 0..self.n_red,
            Color::Green => self.n_red..self.n_red + self.n_green,
            Color::Blue => self.n_red + self.n_green..self.n_leds(),
        }
    }

    pub fn color_of_led(&self, led: usize) -> Color {
        if led < self.n_red {
            Color::Red
        } else if led < self.n_red + self.n_green {
            Color::Green
        } else {
            Color::Blue
        }
    }

    /// Target per-color average power `c3 = P_o * fractions`.
    pub fn target_color(&self) -> [f64; 3] {
        self.color_fractions.map(|f| f * self.avg_power)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_leds() == 0 {
            return Err(Error::InvalidInput("at least one LED is required".into()));
        }
        if self.n_symbols < 2 || !self.n_symbols.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "n_symbols must be a power of two >= 2, got {}",
                self.n_symbols
            )));
        }
        if !(self.avg_power > 0.0 && self.avg_power.is_finite()) {
            return Err(Error::InvalidInput("avg_power must be positive".into()));
        }
        if self.color_fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::InvalidInput("color fractions must be nonnegative".into()));
        }
        let sum: f64 = self.color_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "color fractions must sum to 1, got {sum}"
            )));
        }
        if let Some(caps) = &self.papr_caps {
            if caps.len() != self.n_leds() {
                return Err(Error::InvalidInput(format!(
                    "expected {} PAPR caps, got {}",
                    self.n_leds(),
                    caps.len()
                )));
            }
            if let Some(bad) = caps.iter().find(|a| !(**a >= 1.0)) {
                return Err(Error::InvalidInput(format!("PAPR cap {bad} is below 1")));
            }
        }
        if !(0.0..0.5).contains(&self.crosstalk_eps) {
            return Err(Error::InvalidInput(format!(
                "crosstalk_eps must lie in [0, 0.5), got {}",
                self.crosstalk_eps
            )));
        }
        if self.restarts == 0 || self.sca_max_iter == 0 {
            return Err(Error::InvalidInput("restarts and sca_max_iter must be positive".into()));
        }
        if !(self.sca_tol > 0.0) {
            return Err(Error::InvalidInput("sca_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Whether constellation points are physical LED drive intensities or
/// coordinates in the pre-equalized design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainTag {
    Intensity,
    PreEqualized,
}

impl DomainTag {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::Intensity => "intensity",
            DomainTag::PreEqualized => "pre-equalized",
        }
    }
}

/// An ordered set of symbol vectors; the index of a point is its symbol id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub med: f64,
    pub domain_tag: DomainTag,
}

impl Constellation {
    pub fn new(points: Vec<Vec<f64>>, domain_tag: DomainTag) -> Result<Self> {
        let med = minimum_euclidean_distance(&points)?;
        let dim = points[0].len();
        if domain_tag == DomainTag::Intensity {
            if let Some(v) = points.iter().flatten().find(|v| **v < -1e-9) {
                return Err(Error::InvalidDomain(format!(
                    "intensity constellation has negative coordinate {v}"
                )));
            }
        }
        Ok(Constellation {
            dim,
            points,
            med,
            domain_tag,
        })
    }

    /// Splits a stacked joint vector `[c_1; ..; c_Nc]` into points.
    pub fn from_joint(joint: &[f64], dim: usize, domain_tag: DomainTag) -> Result<Self> {
        if dim == 0 || joint.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "joint vector of length {} is not a multiple of dim {dim}",
                joint.len()
            )));
        }
        Constellation::new(joint.chunks(dim).map(<[f64]>::to_vec).collect(), domain_tag)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The stacked joint vector `c_T`.
    pub fn joint(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| p.iter().map(|v| v * s).collect())
            .collect();
        Constellation::new(points, self.domain_tag)
    }
}

/// Bijection between `N_B`-bit words and symbol indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingMap {
    pub bits_per_symbol: usize,
    pub word_of_symbol: Vec<usize>,
    pub cost: f64,
}

impl LabelingMap {
    pub fn new(word_of_symbol: Vec<usize>, cost: f64) -> Result<Self> {
        let n = word_of_symbol.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "labeling size {n} is not a power of two >= 2"
            )));
        }
        let mut seen = vec![false; n];
        for &w in &word_of_symbol {
            if w >= n || seen[w] {
                return Err(Error::InvalidInput(format!("labeling is not a bijection (word {w})")));
            }
            seen[w] = true;
        }
        Ok(LabelingMap {
            bits_per_symbol: n.trailing_zeros() as usize,
            word_of_symbol,
            cost,
        })
    }

    /// Symbol `i` carries word `i`.
    pub fn natural(n_symbols: usize) -> Result<Self> {
        LabelingMap::new((0..n_symbols).collect(), 0.0)
    }

    pub fn len(&self) -> usize {
        self.word_of_symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_of_symbol.is_empty()
    }

    /// The inverse map `f^-1`: word -> symbol index.
    pub fn symbol_of_word(&self) -> Vec<usize> {
        let mut inv = vec![0; self.word_of_symbol.len()];
        for (sym, &w) in self.word_of_symbol.iter().enumerate() {
            inv[w] = sym;
        }
        inv
    }
}

/// Error counts at one OSNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub osnr_db: f64,
    pub n_bits: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub n_symbols_sent: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.n_bits as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.n_symbols_sent as f64
    }

    pub fn avg_bit_errors_per_symbol_error(&self) -> f64 {
        if self.symbol_errors == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.symbol_errors as f64
        }
    }

    /// Binomial standard deviation of the BER estimate.
    pub fn ber_sigma(&self) -> f64 {
        let p = self.ber();
        (p * (1.0 - p) / self.n_bits as f64).sqrt()
    }
}

/// Per-OSNR bit and symbol error statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub bits_per_symbol: usize,
    pub points: Vec<BerPoint>,
}

/// Smallest pairwise Euclidean distance of a point set.
pub fn minimum_euclidean_distance(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points have mismatched dimensions".into()));
    }
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(squared_distance(a, b));
        }
    }
    Ok(best.sqrt())
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-color sums of the per-LED symbol averages, i.e. `K J̄ c_T`.
pub fn average_color_vector(constellation: &Constellation, spec: &DesignSpec) -> Result<[f64; 3]> {
    if constellation.domain_tag != DomainTag::Intensity {
        return Err(Error::InvalidDomain(
            "average color is defined for intensity constellations only".into(),
        ));
    }
    if constellation.dim != spec.n_leds() {
        return Err(Error::InvalidInput(format!(
            "constellation dim {} does not match {} LEDs",
            constellation.dim,
            spec.n_leds()
        )));
    }
    let n = constellation.len() as f64;
    let mut out = [0.0; 3];
    for color in Color::ALL {
        let range = spec.color_range(color);
        out[color as usize] = constellation
            .points
            .iter()
            .map(|p| p[range.clone()].iter().sum::<f64>())
            .sum::<f64>()
            / n;
    }
    Ok(out)
}

/// Peak-to-average intensity ratio of every LED.
pub fn papr_per_led(constellation: &Constellation) -> Result<Vec<f64>> {
    if constellation.domain_tag != DomainTag::Intensity {
        return Err(Error::InvalidDomain(
            "PAPR is defined for intensity constellations only".into(),
        ));
    }
    let n = constellation.len() as f64;
    (0..constellation.dim)
        .map(|led| {
            let column = constellation.points.iter().map(|p| p[led]);
            let peak = column.clone().fold(f64::NEG_INFINITY, f64::max);
            let mean = column.sum::<f64>() / n;
            if mean <= 0.0 {
                Err(Error::UndefinedPapr { led })
            } else {
                Ok(peak / mean)
            }
        })
        .collect()
}
