//! The `csk` command line: design, label, simulate, reproduce.

pub mod artifacts;
pub mod config;
pub mod reproduce;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::{
    crosstalk_channel, lmmse_equalizer, svd_equalizers, zf_equalizer, ChannelModel, EqualizerKind,
    EqualizerSet,
};
use crate::designer::multi_start_design;
use crate::error::Error;
use crate::labeling::bsa_optimize_with_restarts;
use crate::model::{BerPoint, ColorProfile, Constellation, DesignSpec};
use crate::rng::rng_from_seed;
use crate::simulate::{noise_param_from_osnr, run_ber, SimConfig};

use artifacts::{ber_csv, read_json, round6, to_json, ConstellationDoc, LabelingDoc, Outputs};
use config::RunConfig;
use reproduce::{MedCell, SchemePoint};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Error,
    },
}

trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for crate::error::Result<T> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage {
            stage: stage.to_string(),
            source,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "csk", version, about = "Joint color-shift-keying constellation design and BER simulation")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub restarts: Option<String>,
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    #[arg(long, global = true)]
    pub papr: Option<String>,
    /// Comma-separated OSNR grid in dB.
    #[arg(long, global = true)]
    pub osnr: Option<String>,
    #[arg(long, global = true)]
    pub bits: Option<String>,
    /// One of none, svd-pre, zf, lmmse.
    #[arg(long, global = true)]
    pub equalizer: Option<String>,
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multi-start constellation design; writes constellation.json.
    Design,
    /// Binary switching labeling of a designed constellation.
    Label {
        #[arg(long)]
        constellation: PathBuf,
    },
    /// Monte Carlo BER over the configured OSNR grid.
    Simulate {
        #[arg(long)]
        constellation: PathBuf,
        #[arg(long)]
        labeling: PathBuf,
    },
    /// Regenerates a table or figure data series.
    Reproduce { target: Target },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Table1,
    Table2,
    Table3,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("seed", &self.seed),
            ("restarts", &self.restarts),
            ("crosstalk_eps", &self.epsilon),
            ("papr_alpha", &self.papr),
            ("osnr_db", &self.osnr),
            ("n_bits", &self.bits),
            ("equalizer", &self.equalizer),
            ("profile", &self.profile),
            ("out_dir", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    pub fn resolve(&self) -> crate::error::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.pairs() {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

/// Parses `args` (including the program name) and runs the command;
/// returns the files written.
pub fn run<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let cfg = cli.flags.resolve().stage("config")?;
    match cli.command {
        Command::Design => cmd_design(&cfg),
        Command::Label { constellation } => cmd_label(&cfg, &constellation),
        Command::Simulate {
            constellation,
            labeling,
        } => cmd_simulate(&cfg, &constellation, &labeling),
        Command::Reproduce { target } => cmd_reproduce(&cfg, target),
    }
}

fn channel_for(cfg: &RunConfig, dim: usize) -> crate::error::Result<ChannelModel> {
    if cfg.crosstalk_eps == 0.0 {
        Ok(ChannelModel::identity(dim))
    } else {
        crosstalk_channel(cfg.crosstalk_eps, dim)
    }
}

fn profile_label(cfg: &RunConfig) -> &'static str {
    if cfg.color_fractions.is_some() {
        "custom"
    } else {
        cfg.profile.name()
    }
}

pub fn cmd_design(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.design_spec(30).stage("config")?;
    let pre = match cfg.equalizer {
        EqualizerKind::SvdPre => {
            let ch = crosstalk_channel(spec.crosstalk_eps, spec.n_leds()).stage("channel")?;
            svd_equalizers(&ch.matrix).stage("channel")?.pre
        }
        _ => None,
    };
    let r = multi_start_design(&spec, pre.as_ref()).stage("design")?;
    let doc = ConstellationDoc::new(
        &r.best.constellation,
        r.best.t_star,
        &r.meds,
        cfg.crosstalk_eps,
        cfg.equalizer,
    );
    let summary = format!(
        "profile,n_leds,n_symbols,avg_power,papr_alpha,crosstalk_eps,equalizer,restarts,seed,med,t_star,iterations,best_restart,feasible\n\
         {},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{},{}\n",
        profile_label(cfg),
        spec.n_leds(),
        spec.n_symbols,
        spec.avg_power,
        cfg.papr_alpha.map_or("none".to_string(), |a| a.to_string()),
        spec.crosstalk_eps,
        cfg.equalizer.as_str(),
        spec.restarts,
        spec.seed,
        r.best.constellation.med,
        r.best.t_star,
        r.best.iterations,
        r.best.start_index,
        r.best.feasible,
    );
    let mut out = Outputs::new(&cfg.out_dir).stage("write")?;
    out.stage("constellation.json", &to_json(&doc)).stage("write")?;
    out.stage("design_summary.csv", &summary).stage("write")?;
    out.commit().stage("write")
}

fn load_constellation(cfg: &RunConfig, path: &std::path::Path) -> crate::error::Result<Constellation> {
    let doc: ConstellationDoc = read_json(path)?;
    let c = doc.constellation()?;
    if c.len() != cfg.n_symbols {
        return Err(Error::InvalidInput(format!(
            "constellation has {} symbols, config expects {}",
            c.len(),
            cfg.n_symbols
        )));
    }
    Ok(c)
}

pub fn cmd_label(cfg: &RunConfig, constellation: &std::path::Path) -> Result<Vec<PathBuf>, CliError> {
    let c = load_constellation(cfg, constellation).stage("load")?;
    let n0 = noise_param_from_osnr(cfg.design_osnr_db, cfg.avg_power, cfg.n_blue);
    let l = bsa_optimize_with_restarts(&c, n0, cfg.bsa_restarts, &mut rng_from_seed(cfg.seed))
        .stage("label")?;
    let doc = LabelingDoc {
        bits_per_symbol: l.bits_per_symbol,
        word_of_symbol: l.word_of_symbol,
        cost: l.cost,
        design_osnr_db: cfg.design_osnr_db,
    };
    let mut out = Outputs::new(&cfg.out_dir).stage("write")?;
    out.stage("labeling.json", &to_json(&doc)).stage("write")?;
    out.commit().stage("write")
}

fn equalizers_for(
    kind: EqualizerKind,
    channel: &ChannelModel,
    c: &Constellation,
    n0: f64,
) -> crate::error::Result<EqualizerSet> {
    match kind {
        EqualizerKind::Identity => Ok(EqualizerSet::identity(channel.dim())),
        EqualizerKind::SvdPre => svd_equalizers(&channel.matrix),
        EqualizerKind::Zf => zf_equalizer(&channel.matrix),
        EqualizerKind::Lmmse => lmmse_equalizer(&channel.matrix, c, n0),
    }
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    constellation: &std::path::Path,
    labeling: &std::path::Path,
) -> Result<Vec<PathBuf>, CliError> {
    let c = load_constellation(cfg, constellation).stage("load")?;
    let ldoc: LabelingDoc = read_json(labeling).stage("load")?;
    let l = ldoc.labeling().stage("load")?;
    let spec = cfg.design_spec(1).stage("config")?;
    let tx_dim = spec.n_leds();
    let channel = channel_for(cfg, tx_dim).stage("channel")?;
    let n0 = noise_param_from_osnr(cfg.design_osnr_db, cfg.avg_power, cfg.n_blue);
    let eq = equalizers_for(cfg.equalizer, &channel, &c, n0).stage("channel")?;
    let mut sim = SimConfig::new(cfg.osnr_db.clone(), channel, cfg.equalizer);
    sim.n_bits = cfg.n_bits;
    sim.seed = cfg.seed;
    sim.osnr_leds = cfg.n_blue;
    let report = run_ber(&c, &l, &eq, &sim, &spec).stage("simulate")?;
    let mut out = Outputs::new(&cfg.out_dir).stage("write")?;
    out.stage("ber.csv", &ber_csv(&report)).stage("write")?;
    out.commit().stage("write")
}

const DIFF_HEADER: &str = "cell,paper,ours,rel_dev\n";

fn diff_row(cell: &str, paper: f64, ours: f64) -> String {
    format!("{cell},{paper:.6},{ours:.6},{:.6}\n", (ours - paper) / paper)
}

fn med_table(param: &str, table: &str, cells: &[MedCell]) -> (String, String) {
    let mut csv = format!("{param},profile,med,paper,rel_dev\n");
    let mut diff = String::from(DIFF_HEADER);
    for c in cells {
        csv += &format!(
            "{},{},{:.6},{},{:.6}\n",
            c.param,
            c.profile.name(),
            c.med,
            c.paper,
            c.rel_dev()
        );
        diff += &diff_row(
            &format!("{table} {param}={} {}", c.param, c.profile.name()),
            c.paper,
            c.med,
        );
    }
    (csv, diff)
}

fn ber_cols(p: &BerPoint) -> String {
    format!(
        "{},{},{:.6e},{:.6e},{},{:.6}",
        p.n_bits,
        p.bit_errors,
        p.ber(),
        p.ber_sigma(),
        p.symbol_errors,
        p.avg_bit_errors_per_symbol_error()
    )
}

fn scheme_csv(param: &str, points: &[SchemePoint]) -> String {
    let mut s = format!("{param},scheme,n_bits,bit_errors,ber,ber_sigma,symbol_errors,avg_bit_err_per_sym_err\n");
    for p in points {
        s += &format!("{},{},{}\n", p.param, p.scheme, ber_cols(&p.point));
    }
    s
}

pub fn cmd_reproduce(cfg: &RunConfig, target: Target) -> Result<Vec<PathBuf>, CliError> {
    let stage = format!("reproduce {target:?}").to_lowercase();
    let mut out = Outputs::new(&cfg.out_dir).stage("write")?;
    let mut spec = DesignSpec::for_profile(ColorProfile::Balanced);
    spec.seed = cfg.seed;
    spec.restarts = cfg.restarts.unwrap_or(30);
    match target {
        Target::Table1 => {
            let cells = reproduce::table1_cells(spec.restarts, cfg.seed).stage(&stage)?;
            let (csv, diff) = med_table("alpha", "Table I", &cells);
            out.stage("table1.csv", &csv).stage("write")?;
            out.stage("diff_vs_paper.csv", &diff).stage("write")?;
        }
        Target::Table3 => {
            let cells = reproduce::table3_cells(spec.restarts, cfg.seed).stage(&stage)?;
            let (csv, diff) = med_table("eps", "Table III", &cells);
            out.stage("table3.csv", &csv).stage("write")?;
            out.stage("diff_vs_paper.csv", &diff).stage("write")?;
        }
        Target::Fig4 => {
            let meds = reproduce::fig4_meds(cfg.restarts.unwrap_or(1000), cfg.seed).stage(&stage)?;
            let mut csv = String::from("bin_lo,bin_hi,count\n");
            for (lo, hi, n) in reproduce::histogram(&meds, 0.05) {
                csv += &format!("{:.6},{:.6},{n}\n", round6(lo), round6(hi));
            }
            let frac = reproduce::near_best_fraction(&meds, 0.99);
            let mut diff = String::from(DIFF_HEADER);
            diff += &diff_row("Fig. 4 fraction of runs with MED >= 0.99 best", 0.25, frac);
            out.stage("fig4_hist.csv", &csv).stage("write")?;
            out.stage("diff_vs_paper.csv", &diff).stage("write")?;
        }
        Target::Fig5 => {
            let pts = reproduce::fig5_points(&spec, &reproduce::FIG5_EPS, cfg.design_osnr_db, cfg.n_bits)
                .stage(&stage)?;
            out.stage("fig5.csv", &scheme_csv("eps", &pts)).stage("write")?;
        }
        Target::Fig6 => {
            let eps = if cfg.crosstalk_eps > 0.0 { cfg.crosstalk_eps } else { 0.1 };
            let pts = reproduce::fig6_points(&spec, eps, &cfg.osnr_db, cfg.design_osnr_db, cfg.n_bits)
                .stage(&stage)?;
            out.stage("fig6.csv", &scheme_csv("osnr_db", &pts)).stage("write")?;
        }
        Target::Fig2 | Target::Fig3 => {
            let profile = if target == Target::Fig2 {
                ColorProfile::Balanced
            } else {
                ColorProfile::Extreme
            };
            let mut s = DesignSpec::for_profile(profile);
            s.seed = spec.seed;
            s.restarts = spec.restarts;
            let (csk, conv) =
                reproduce::csk_vs_conventional(&s, &cfg.osnr_db, cfg.design_osnr_db, cfg.n_bits)
                    .stage(&stage)?;
            let mut pts = Vec::new();
            for (name, rep) in [("csk", csk), ("conventional", conv)] {
                for p in rep.points {
                    pts.push(SchemePoint {
                        param: p.osnr_db,
                        scheme: name.into(),
                        point: p,
                    });
                }
            }
            let name = if target == Target::Fig2 { "fig2.csv" } else { "fig3.csv" };
            out.stage(name, &scheme_csv("osnr_db", &pts)).stage("write")?;
        }
        Target::Table2 => {
            let t = reproduce::table2(cfg.design_osnr_db, cfg.n_bits, 100, cfg.seed).stage(&stage)?;
            let bits = t.labeling.bits_per_symbol;
            let mut csv = String::from("symbol,word\n");
            for (s, w) in t.labeling.word_of_symbol.iter().enumerate() {
                csv += &format!("{},{:0width$b}\n", s + 1, w, width = bits);
            }
            let mut diff = String::from(DIFF_HEADER);
            diff += &diff_row(
                "Table II bit errors per symbol error optimized",
                crate::reference::BITS_PER_SYMBOL_ERROR_OPTIMIZED,
                t.optimized.avg_bit_errors_per_symbol_error(),
            );
            diff += &diff_row(
                "Table II bit errors per symbol error random mean",
                crate::reference::BITS_PER_SYMBOL_ERROR_RANDOM,
                t.random_mean(),
            );
            out.stage("table2.csv", &csv).stage("write")?;
            out.stage("diff_vs_paper.csv", &diff).stage("write")?;
        }
    }
    out.commit().stage("write")
}
