//! Flat run configuration: `key = value` files overlaid by flags.

use std::path::{Path, PathBuf};

use crate::channel::EqualizerKind;
use crate::error::{Error, Result};
use crate::model::{ColorProfile, DesignSpec};

pub const KEYS: &[&str] = &[
    "profile",
    "color_fractions",
    "n_red",
    "n_green",
    "n_blue",
    "n_symbols",
    "avg_power",
    "papr_alpha",
    "crosstalk_eps",
    "restarts",
    "seed",
    "sca_tol",
    "sca_max_iter",
    "osnr_db",
    "n_bits",
    "equalizer",
    "design_osnr_db",
    "bsa_restarts",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: ColorProfile,
    /// Overrides the profile's fractions when set.
    pub color_fractions: Option<[f64; 3]>,
    pub n_red: usize,
    pub n_green: usize,
    pub n_blue: usize,
    pub n_symbols: usize,
    pub avg_power: f64,
    pub papr_alpha: Option<f64>,
    pub crosstalk_eps: f64,
    /// `None` lets each command pick its own default.
    pub restarts: Option<usize>,
    pub seed: u64,
    pub sca_tol: f64,
    pub sca_max_iter: usize,
    pub osnr_db: Vec<f64>,
    pub n_bits: u64,
    pub equalizer: EqualizerKind,
    pub design_osnr_db: f64,
    pub bsa_restarts: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = DesignSpec::default();
        RunConfig {
            profile: ColorProfile::Balanced,
            color_fractions: None,
            n_red: spec.n_red,
            n_green: spec.n_green,
            n_blue: spec.n_blue,
            n_symbols: spec.n_symbols,
            avg_power: spec.avg_power,
            papr_alpha: None,
            crosstalk_eps: 0.0,
            restarts: None,
            seed: spec.seed,
            sca_tol: spec.sca_tol,
            sca_max_iter: spec.sca_max_iter,
            osnr_db: (0..=12).map(f64::from).collect(),
            n_bits: crate::simulate::DEFAULT_BITS_PER_POINT,
            equalizer: EqualizerKind::Identity,
            design_osnr_db: 5.0,
            bsa_restarts: crate::labeling::DEFAULT_BSA_RESTARTS,
            out_dir: PathBuf::from("."),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| num::<f64>(key, v.trim()))
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "profile" => self.profile = ColorProfile::parse(value).map_err(|e| Error::Config(e.to_string()))?,
            "color_fractions" => {
                let v = list(key, value)?;
                let arr: [f64; 3] = v
                    .try_into()
                    .map_err(|_| Error::Config("color_fractions needs three values".into()))?;
                self.color_fractions = Some(arr);
            }
            "n_red" => self.n_red = num(key, value)?,
            "n_green" => self.n_green = num(key, value)?,
            "n_blue" => self.n_blue = num(key, value)?,
            "n_symbols" => self.n_symbols = num(key, value)?,
            "avg_power" => self.avg_power = num(key, value)?,
            "papr_alpha" => {
                self.papr_alpha = match value {
                    "" | "none" => None,
                    v => Some(num(key, v)?),
                }
            }
            "crosstalk_eps" => self.crosstalk_eps = num(key, value)?,
            "restarts" => self.restarts = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "sca_tol" => self.sca_tol = num(key, value)?,
            "sca_max_iter" => self.sca_max_iter = num(key, value)?,
            "osnr_db" => self.osnr_db = list(key, value)?,
            "n_bits" => self.n_bits = num(key, value)?,
            "equalizer" => {
                self.equalizer = EqualizerKind::parse(value).map_err(|e| Error::Config(e.to_string()))?
            }
            "design_osnr_db" => self.design_osnr_db = num(key, value)?,
            "bsa_restarts" => self.bsa_restarts = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    /// Renders the config in the file format; reparses to the same value.
    pub fn to_config_string(&self) -> String {
        let f = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        s += &format!("profile = {}\n", self.profile.name());
        if let Some(c) = self.color_fractions {
            s += &format!("color_fractions = {}\n", f(&c));
        }
        s += &format!("n_red = {}\nn_green = {}\nn_blue = {}\n", self.n_red, self.n_green, self.n_blue);
        s += &format!("n_symbols = {}\navg_power = {}\n", self.n_symbols, self.avg_power);
        if let Some(a) = self.papr_alpha {
            s += &format!("papr_alpha = {a}\n");
        }
        s += &format!("crosstalk_eps = {}\n", self.crosstalk_eps);
        if let Some(r) = self.restarts {
            s += &format!("restarts = {r}\n");
        }
        s += &format!(
            "seed = {}\nsca_tol = {:e}\nsca_max_iter = {}\n",
            self.seed, self.sca_tol, self.sca_max_iter
        );
        s += &format!("osnr_db = {}\nn_bits = {}\n", f(&self.osnr_db), self.n_bits);
        s += &format!("equalizer = {}\n", self.equalizer.as_str());
        s += &format!(
            "design_osnr_db = {}\nbsa_restarts = {}\nout_dir = {}\n",
            self.design_osnr_db,
            self.bsa_restarts,
            self.out_dir.display()
        );
        s
    }

    pub fn design_spec(&self, default_restarts: usize) -> Result<DesignSpec> {
        let mut spec = DesignSpec::for_profile(self.profile);
        if let Some(c) = self.color_fractions {
            spec.color_fractions = c;
        }
        spec.n_red = self.n_red;
        spec.n_green = self.n_green;
        spec.n_blue = self.n_blue;
        spec.n_symbols = self.n_symbols;
        spec.avg_power = self.avg_power;
        spec.crosstalk_eps = self.crosstalk_eps;
        spec.restarts = self.restarts.unwrap_or(default_restarts);
        spec.seed = self.seed;
        spec.sca_tol = self.sca_tol;
        spec.sca_max_iter = self.sca_max_iter;
        if let Some(a) = self.papr_alpha {
            spec = spec.with_uniform_papr(a);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_comments() {
        let mut c = RunConfig::default();
        c.apply_str("# header\nseed = 9 # trailing\n\nosnr_db = 1, 2.5,4\nequalizer = svd-pre\npapr_alpha = 4\n")
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.osnr_db, vec![1.0, 2.5, 4.0]);
        assert_eq!(c.equalizer, EqualizerKind::SvdPre);
        assert_eq!(c.papr_alpha, Some(4.0));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut c = RunConfig::default();
        let e = c.apply_str("seeed = 3\n").unwrap_err();
        assert!(e.to_string().contains("seeed"));
        assert!(c.apply_str("seed 3\n").is_err());
        assert!(c.apply_str("seed = x\n").is_err());
    }

    #[test]
    fn round_trips() {
        let mut c = RunConfig::default();
        c.apply_str("profile = extreme\nrestarts = 7\ncolor_fractions = 0.5,0.25,0.25\nsca_tol = 1e-9\n")
            .unwrap();
        let mut d = RunConfig::default();
        d.apply_str(&c.to_config_string()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn builds_specs() {
        let mut c = RunConfig::default();
        c.set("papr_alpha", "2").unwrap();
        let s = c.design_spec(30).unwrap();
        assert_eq!(s.restarts, 30);
        assert_eq!(s.papr_caps, Some(vec![2.0; 3]));
        c.set("n_symbols", "6").unwrap();
        assert!(c.design_spec(30).is_err());
    }
}
