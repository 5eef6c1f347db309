//! Command dispatch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::functionals::FunctionalReport;
use crate::functions::BoundaryFamily;
use crate::grids::{classify_intervals, Anchor, GridSystem, Partition};
use crate::operator::{
    alternating_parity_check, block_split_diagnostic, epsilon_partition, k_estimate,
    lemma_key_checks, singular_values, spectrum_with_refinement, theorem_ratio_report,
    discretize, require_p2, KappaResolution, PartitionOptions, Resolution,
};
use crate::problem::Problem;
use crate::report::{Check, CheckStatus, FairwayRow, RunReport, SpectrumPair, SweepPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Fairway,
    Grids,
    Functionals,
    Spectrum,
    Kappa,
    Partition,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fairway => "fairway",
            Command::Grids => "grids",
            Command::Functionals => "functionals",
            Command::Spectrum => "spectrum",
            Command::Kappa => "kappa",
            Command::Partition => "partition",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

/// Largest relative change of `s_1..s_10` allowed under refinement.
pub const SELF_CONVERGENCE_TOL: f64 = 1e-3;
/// Combined tolerance of the `𝒦` sandwich.
pub const SANDWICH_TOL: f64 = 1e-3;
pub const BLOCK_SPLIT_TOL: f64 = 1e-8;
pub const PARITY_TOL: f64 = 1e-10;
/// Sweep ratios must stay within this factor of their median.
pub const SWEEP_FACTOR: f64 = 10.0;
const PARITY_NODES: usize = 32;

pub fn run_command(cmd: Command, cfg: &ProblemConfig) -> Result<RunReport> {
    let problem = cfg.problem()?;
    let mut report = RunReport::new(cmd.name(), cfg);
    match cmd {
        Command::Fairway => fairway(&problem, cfg, &mut report)?,
        Command::Grids => {
            grids(&problem, &mut report)?;
        }
        Command::Functionals => {
            let g = grids(&problem, &mut report)?;
            functionals(&problem, cfg, &g, &mut report)?;
        }
        Command::Spectrum => {
            spectrum(&problem, cfg, &mut report)?;
        }
        Command::Kappa => kappa_cmd(&problem, cfg, &mut report)?,
        Command::Partition => partition_cmd(&problem, cfg, &mut report)?,
        Command::Verify => verify(&problem, cfg, &mut report)?,
        Command::Sweep => sweep(cfg, &mut report)?,
    }
    if cmd == Command::Verify && (cfg.v.is_identically_zero() || cfg.w.is_identically_zero()) {
        for c in report.checks.iter_mut().filter(|c| c.status == CheckStatus::Pass) {
            c.status = CheckStatus::Vacuous;
            c.detail = format!("zero operator; {}", c.detail);
        }
    }
    Ok(report)
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (r * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn fairway(problem: &Problem, cfg: &ProblemConfig, report: &mut RunReport) -> Result<()> {
    let f = problem.fairway();
    let ts = log_points(cfg.window.0, cfg.window.1, cfg.fairway_samples);
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        match f.sigma(t) {
            Ok(s) => rows.push(FairwayRow {
                t,
                sigma: Some(s),
                residual: Some(f.balance_residual(t, s)?),
            }),
            Err(Error::ZeroMass { .. }) => rows.push(FairwayRow {
                t,
                sigma: None,
                residual: None,
            }),
            Err(e) => return Err(e),
        }
    }
    let defined: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.sigma.map(|s| (r.t, s))).collect();
    if defined.is_empty() {
        report.push(Check::vacuous("fairway_monotone", "v carries no mass on the window"));
    } else {
        let ok = defined.windows(2).all(|w| w[1].1 > w[0].1);
        report.push(Check::new(
            "fairway_monotone",
            ok,
            format!("{} sampled points", defined.len()),
        ));
    }
    if let (BoundaryFamily::Linear { a, b }, true) = (&cfg.boundaries, cfg.v.is_unit_constant()) {
        let err = defined
            .iter()
            .map(|&(t, s)| (s - (a + b) * t / 2.0).abs() / t)
            .fold(0.0, f64::max);
        report.push(Check::new(
            "fairway_linear_closed_form",
            err <= 1e-8,
            format!("max |sigma - (A+B)t/2|/t = {err:e}"),
        ));
    }
    report.outputs.fairway = Some(rows);
    Ok(())
}

fn grids(problem: &Problem, report: &mut RunReport) -> Result<GridSystem> {
    let g = GridSystem::build(problem)?;
    let bd = &problem.boundaries;
    let tele = g
        .xi
        .values
        .windows(2)
        .map(|w| (bd.a(w[1]) - bd.b(w[0])).abs() / bd.b(w[0]))
        .fold(0.0, f64::max);
    report.push(Check::new(
        "grid_telescoping",
        tele <= 1e-10,
        format!("max |a(xi_k+1) - b(xi_k)|/b(xi_k) = {tele:e}"),
    ));
    let inc = g.cells.iter().all(|c| c.points.windows(2).all(|w| w[1] > w[0]));
    report.push(Check::new(
        "refinement_increasing",
        inc,
        format!("{} cells", g.cells.len()),
    ));
    report.outputs.grids = Some(g.clone());
    Ok(g)
}

fn functionals(
    problem: &Problem,
    cfg: &ProblemConfig,
    g: &GridSystem,
    report: &mut RunReport,
) -> Result<FunctionalReport> {
    let f = FunctionalReport::build(problem, g, &cfg.alphas, cfg.beta_p, cfg.gamma_p)?;
    let slack = 1e-12;
    let bad = f
        .nu
        .iter()
        .filter(|r| {
            r.nu_tilde > r.nu_bar * (1.0 + slack) + slack || r.nu_bar > r.nu * (1.0 + slack) + slack
        })
        .count();
    report.push(Check::new(
        "nu_ordering",
        bad == 0,
        format!("{bad} of {} cells violate nu_tilde <= nu_bar <= nu", f.nu.len()),
    ));
    let mut holder_bad = 0;
    for r in &f.mu {
        let cut = [(r.x_m * r.x_m1).sqrt()];
        let h = crate::functionals::holder_subdivision_check(problem, r.x_m, r.x_m1, &cut, 1e-8)?;
        if !h.holds {
            holder_bad += 1;
        }
    }
    report.push(Check::new(
        "holder_midpoint",
        holder_bad == 0,
        format!("{holder_bad} of {} pieces fail", f.mu.len()),
    ));
    for t in &f.tails {
        use crate::functionals::TailStatus::*;
        for (side, s) in [("lower", t.lower_status), ("upper", t.upper_status)] {
            match s {
                Converged => {}
                Exceeds => report.warnings.push(format!(
                    "alpha = {}: {side} tail of sum nu_tilde^alpha exceeds tail_tol; widen the window",
                    t.alpha
                )),
                Divergent => report.warnings.push(format!(
                    "alpha = {}: {side} tail of sum nu_tilde^alpha does not decay; the untruncated operator is not in S_alpha",
                    t.alpha
                )),
            }
        }
    }
    report.outputs.functionals = Some(f.clone());
    Ok(f)
}

fn spectral(problem: &Problem, report: &mut RunReport, what: &str) -> bool {
    if (problem.p() - 2.0).abs() > 1e-12 {
        report.push(Check::vacuous(what, "spectral checks need p = 2"));
        false
    } else {
        true
    }
}

fn spectrum(problem: &Problem, cfg: &ProblemConfig, report: &mut RunReport) -> Result<SpectrumPair> {
    let (coarse, fine) = spectrum_with_refinement(problem, cfg.resolution, &cfg.alphas)?;
    let change = fine.refinement_change.unwrap_or(0.0);
    if coarse.norm() == 0.0 {
        report.push(Check::vacuous("self_convergence", "zero operator"));
    } else {
        report.push(Check::new(
            "self_convergence",
            change <= SELF_CONVERGENCE_TOL,
            format!("max relative change of s_1..s_10 = {change:e}"),
        ));
    }
    let pair = SpectrumPair { coarse, fine };
    report.outputs.spectrum = Some(pair.clone());
    Ok(pair)
}

fn kappa_res(cfg: &ProblemConfig) -> KappaResolution {
    KappaResolution {
        nodes_per_half: cfg.kappa_nodes,
    }
}

/// Configured intervals, or log-uniform random ones inside the window.
fn kappa_intervals(cfg: &ProblemConfig) -> Vec<(f64, f64)> {
    if !cfg.intervals.is_empty() {
        return cfg.intervals.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (l, h) = (cfg.window.0.ln(), cfg.window.1.ln());
    (0..cfg.random_intervals)
        .map(|_| {
            let u: f64 = rng.gen_range(l..h);
            let v: f64 = rng.gen_range(l..h);
            let (d, e) = (u.min(v), u.max(v));
            let e = e.max(d + 0.01).min(h);
            let d = d.min(e - 0.01);
            (d.exp(), e.exp())
        })
        .collect()
}

fn kappa_cmd(problem: &Problem, cfg: &ProblemConfig, report: &mut RunReport) -> Result<()> {
    require_p2(problem)?;
    let res = kappa_res(cfg);
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for (d, e) in kappa_intervals(cfg) {
        let k = match k_estimate(problem, d, e, res) {
            Err(Error::ZeroMass { .. }) => {
                report.warnings.push(format!("W_I = 0 on ({d}, {e}); interval skipped"));
                continue;
            }
            r => r?,
        };
        let scale = k.kappa.max(f64::MIN_POSITIVE);
        worst = worst
            .max((k.lower - k.kappa) / scale)
            .max((k.kappa - k.upper) / scale);
        if !k.hidden_cells.is_empty() {
            report.warnings.push(format!(
                "({d}, {e}): cells {:?} meet the viewless zone [{}, {}]",
                k.hidden_cells, k.viewless_zone.0, k.viewless_zone.1
            ));
        }
        out.push(k);
    }
    report.push(Check::new(
        "kappa_sandwich",
        worst <= SANDWICH_TOL,
        format!("{} intervals, worst excess {worst:e}", out.len()),
    ));
    report
        .warnings
        .push("lower bound uses supp f in [b(c), b(e)] for the second term".into());
    report.outputs.kappa = Some(out);
    Ok(())
}

fn partition_opts(cfg: &ProblemConfig) -> PartitionOptions {
    PartitionOptions {
        kappa: kappa_res(cfg),
        max_intervals: cfg.max_intervals,
        ..Default::default()
    }
}

fn partition_cmd(problem: &Problem, cfg: &ProblemConfig, report: &mut RunReport) -> Result<()> {
    require_p2(problem)?;
    let op = discretize(problem, cfg.resolution, &Default::default())?;
    let norm = singular_values(&op, &[])?.norm();
    if norm == 0.0 {
        report.push(Check::vacuous("partition_accuracy", "zero operator"));
        return Ok(());
    }
    let opts = partition_opts(cfg);
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for &f in &cfg.eps_fractions {
        let p = epsilon_partition(problem, f * norm, &opts)?;
        for n in 0..p.full_intervals {
            let k = p.partition.kappa[n].unwrap_or(0.0);
            worst = worst.max((k - p.eps).abs() / p.eps);
        }
        report.warnings.extend(p.warnings.iter().cloned());
        parts.push(p);
    }
    report.push(Check::new(
        "partition_accuracy",
        worst <= 10.0 * opts.tol_part,
        format!("max |K(I_n) - eps|/eps = {worst:e}"),
    ));
    report.outputs.partitions = Some(parts);
    Ok(())
}

fn verify(problem: &Problem, cfg: &ProblemConfig, report: &mut RunReport) -> Result<()> {
    let g = grids(problem, report)?;
    let f = functionals(problem, cfg, &g, report)?;
    if !spectral(problem, report, "spectral_checks") {
        return Ok(());
    }
    let spectra = spectrum(problem, cfg, report)?;
    let ratios = theorem_ratio_report(&f, &spectra.coarse, &cfg.alphas);
    report.push(Check::new(
        "ratios_finite_together",
        ratios.rows.iter().all(|r| r.finite_together),
        "sum nu^alpha, sum s^alpha, sum mu^alpha finite together",
    ));
    report.push(Check::new(
        "schatten_monotone_in_alpha",
        ratios.monotone_in_alpha,
        "each sum nonincreasing in alpha",
    ));
    report.outputs.ratios = Some(ratios);

    let norm = spectra.fine.norm();
    if norm == 0.0 {
        report.push(Check::vacuous("lemma_key", "zero operator"));
        report.push(Check::vacuous("lemma_key2", "zero operator"));
    } else {
        let eps: Vec<f64> = cfg.eps_fractions.iter().map(|f| f * norm).collect();
        let l = lemma_key_checks(problem, &eps, &spectra.coarse, &spectra.fine, &partition_opts(cfg))?;
        for c in &l.checks {
            report.warnings.extend(c.warnings.iter().cloned());
        }
        let detail = |key2: bool| {
            l.checks
                .iter()
                .map(|c| format!("eps={}: {:?}", c.eps, if key2 { c.key2 } else { c.key }))
                .collect::<Vec<_>>()
                .join("; ")
        };
        report.push(Check::new(
            "lemma_key",
            l.checks.iter().all(|c| c.key.ok()),
            detail(false),
        ));
        report.push(Check::new(
            "lemma_key2",
            l.checks.iter().all(|c| c.key2.ok()),
            detail(true),
        ));
        report.outputs.lemma = Some(l);
    }

    let b = block_split_diagnostic(problem, &g, cfg.resolution, &cfg.alphas)?;
    report.push(Check::new(
        "block_split",
        b.ok(BLOCK_SPLIT_TOL),
        format!(
            "reconstruction {:e}, overlaps {}, unclaimed {}, stray {}",
            b.reconstruction_error, b.overlaps, b.unclaimed, b.stray
        ),
    ));
    report.outputs.block_split = Some(b);

    // grid segments inside the window are I1 by construction
    let inside: Vec<f64> = g
        .xi
        .values
        .iter()
        .copied()
        .filter(|x| problem.window.contains(*x))
        .collect();
    if inside.len() >= 3 {
        let part = classify_intervals(&Partition::new(inside)?, &problem.boundaries, Anchor::Grid)?;
        let checks = [0, 1]
            .iter()
            .map(|&par| alternating_parity_check(problem, &part, par, PARITY_NODES))
            .collect::<Result<Vec<_>>>()?;
        let ok = checks
            .iter()
            .all(|c| c.all_type_one && c.disjoint && c.max_deviation <= PARITY_TOL);
        let dev = checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max);
        report.push(Check::new(
            "parity_union",
            ok,
            format!("max |s_full - s_union|/s_1 = {dev:e}"),
        ));
        report.outputs.parity = Some(checks);
    } else {
        report.push(Check::vacuous("parity_union", "fewer than two grid segments in the window"));
    }
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Largest `max(r/median, median/r)` over the values of one ratio.
pub fn spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mut v = values.to_vec();
    let m = median(&mut v);
    values
        .iter()
        .map(|&r| (r / m).max(m / r))
        .fold(1.0, f64::max)
}

fn sweep(cfg: &ProblemConfig, report: &mut RunReport) -> Result<()> {
    require_p2(&cfg.problem()?)?;
    let mut ratios = cfg.sweep.ratios.clone();
    if cfg.sweep.random_points > 0 {
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.sweep.random_points {
            ratios.push(if hi > lo { rng.gen_range(lo..hi) } else { lo });
        }
    }
    let mut points = Vec::new();
    for &r in &ratios {
        let c = cfg.with_ratio(r)?;
        let p = c.problem()?;
        let g = GridSystem::build(&p)?;
        let f = FunctionalReport::build(&p, &g, &c.alphas, c.beta_p, c.gamma_p)?;
        let op = discretize(&p, c.resolution, &Default::default())?;
        let s = singular_values(&op, &c.alphas)?;
        points.push(SweepPoint {
            ratio: r,
            ratios: theorem_ratio_report(&f, &s, &c.alphas),
        });
    }
    let mut worst: f64 = 1.0;
    let mut undefined = false;
    for a in &cfg.alphas {
        for which in 0..2 {
            let vals: Vec<Option<f64>> = points
                .iter()
                .flat_map(|p| p.ratios.rows.iter().filter(|x| x.alpha == *a))
                .map(|row| if which == 0 { row.r1 } else { row.r2 })
                .collect();
            if vals.iter().any(Option::is_none) {
                undefined = true;
                continue;
            }
            let vals: Vec<f64> = vals.into_iter().flatten().collect();
            worst = worst.max(spread(&vals));
        }
    }
    if undefined && worst == 1.0 {
        report.push(Check::vacuous("sweep_ratio_stability", "ratios undefined by zero"));
    } else {
        report.push(Check::new(
            "sweep_ratio_stability",
            worst <= SWEEP_FACTOR && !undefined,
            format!("largest factor from the sweep median = {worst}"),
        ));
    }
    report.push(Check::new(
        "sweep_finite_together",
        points.iter().all(|p| p.ratios.rows.iter().all(|r| r.finite_together)),
        format!("{} sweep points", points.len()),
    ));
    report.outputs.sweep = Some(points);
    Ok(())
}

/// Resolution for `--resolution N`.
pub fn resolution_override(n: usize) -> Result<Resolution> {
    Resolution::from_nx(n)
}

