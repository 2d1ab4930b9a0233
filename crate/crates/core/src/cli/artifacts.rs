//! On-disk artifact formats and the all-or-nothing output writer.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::EqualizerKind;
use crate::error::{Error, Result};
use crate::model::{BerPoint, BerReport, Constellation, DomainTag, LabelingMap};

pub const BER_HEADER: &str = "osnr_db,n_bits,bit_errors,ber,symbol_errors,ser,avg_bit_err_per_sym_err";

pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationDoc {
    pub dim: usize,
    pub domain_tag: DomainTag,
    pub crosstalk_eps: f64,
    pub equalizer: EqualizerKind,
    /// One row per symbol.
    pub points: Vec<Vec<f64>>,
    pub med: f64,
    pub t_star: f64,
    pub restart_meds: Vec<f64>,
}

impl ConstellationDoc {
    pub fn new(
        c: &Constellation,
        t_star: f64,
        restart_meds: &[f64],
        crosstalk_eps: f64,
        equalizer: EqualizerKind,
    ) -> Self {
        ConstellationDoc {
            dim: c.dim,
            domain_tag: c.domain_tag,
            crosstalk_eps,
            equalizer,
            points: c.points.iter().map(|p| p.iter().map(|v| round6(*v)).collect()).collect(),
            med: round6(c.med),
            t_star: round6(t_star),
            restart_meds: restart_meds.iter().map(|v| round6(*v)).collect(),
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        if self.points.iter().any(|p| p.len() != self.dim) {
            return Err(Error::InvalidInput("point length does not match dim".into()));
        }
        Constellation::new(self.points.clone(), self.domain_tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingDoc {
    pub bits_per_symbol: usize,
    pub word_of_symbol: Vec<usize>,
    pub cost: f64,
    pub design_osnr_db: f64,
}

impl LabelingDoc {
    pub fn labeling(&self) -> Result<LabelingMap> {
        let l = LabelingMap::new(self.word_of_symbol.clone(), self.cost)?;
        if l.bits_per_symbol != self.bits_per_symbol {
            return Err(Error::InvalidInput("bits_per_symbol does not match word count".into()));
        }
        Ok(l)
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn ber_csv(report: &BerReport) -> String {
    let mut s = String::from(BER_HEADER);
    s.push('\n');
    for p in &report.points {
        s += &format!(
            "{:.6},{},{},{:.6e},{},{:.6e},{:.6}\n",
            p.osnr_db,
            p.n_bits,
            p.bit_errors,
            p.ber(),
            p.symbol_errors,
            p.ser(),
            p.avg_bit_errors_per_symbol_error()
        );
    }
    s
}

/// Parses `ber.csv`; symbol counts are recovered from `bits_per_symbol`.
pub fn parse_ber_csv(text: &str, bits_per_symbol: usize) -> Result<BerReport> {
    let mut lines = text.lines();
    if lines.next() != Some(BER_HEADER) {
        return Err(Error::Config("ber.csv header mismatch".into()));
    }
    let bad = |l: &str| Error::Config(format!("bad ber.csv row {l:?}"));
    let mut points = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(line));
        }
        let n_bits: u64 = f[1].parse().map_err(|_| bad(line))?;
        points.push(BerPoint {
            osnr_db: f[0].parse().map_err(|_| bad(line))?,
            n_bits,
            bit_errors: f[2].parse().map_err(|_| bad(line))?,
            symbol_errors: f[4].parse().map_err(|_| bad(line))?,
            n_symbols_sent: n_bits / bits_per_symbol as u64,
        });
    }
    Ok(BerReport {
        bits_per_symbol,
        points,
    })
}

/// Files staged under temporary names and renamed together on commit.
#[derive(Debug, Default)]
pub struct Outputs {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    pub fn stage(&mut self, name: &str, contents: &str) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.partial"));
        fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
        self.staged.push((tmp, self.dir.join(name)));
        Ok(())
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (tmp, dst) in std::mem::take(&mut self.staged) {
            fs::rename(&tmp, &dst).map_err(|e| Error::Io(format!("{}: {e}", dst.display())))?;
            done.push(dst);
        }
        Ok(done)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for (tmp, _) in &self.staged {
            let _ = fs::remove_file(tmp);
        }
    }
}
