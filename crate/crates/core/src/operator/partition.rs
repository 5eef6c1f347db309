//! ε-partitions `𝒦(I_n) = ε` and the two counting lemmas built on them.

use serde::{Deserialize, Serialize};

use super::kappa::{kappa, KappaResolution};
use super::SpectralReport;
use crate::error::{Error, Result};
use crate::grids::{classify_intervals, Anchor, Partition};
use crate::problem::Problem;
use crate::roots::{solve_increasing, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionOptions {
    pub kappa: KappaResolution,
    pub max_intervals: usize,
    /// `|𝒦(I_n) − ε| <= tol_part·ε` on full intervals.
    pub tol_part: f64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            kappa: KappaResolution::default(),
            max_intervals: 2000,
            tol_part: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPartition {
    pub eps: f64,
    pub partition: Partition,
    /// Intervals with `𝒦 = ε` (all but the last).
    pub full_intervals: usize,
    /// Non-monotone `e ↦ 𝒦(c_n, e)` was seen; the smallest root was taken.
    pub warnings: Vec<String>,
}

fn kappa_or_zero(problem: &Problem, d: f64, e: f64, res: KappaResolution) -> Result<f64> {
    if !(e > d * (1.0 + 1e-13)) {
        return Ok(0.0);
    }
    match kappa(problem, d, e, res) {
        Err(Error::ZeroMass { .. }) => Ok(0.0),
        r => r,
    }
}

/// Left-to-right ε-partition of the window.
pub fn epsilon_partition(problem: &Problem, eps: f64, opts: &PartitionOptions) -> Result<EpsilonPartition> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    let (lo, hi) = (problem.window.lo, problem.window.hi);
    let res = opts.kappa;
    let k = |e: f64, c: f64| kappa_or_zero(problem, c, e, res);
    let mut points = vec![lo];
    let mut kap = Vec::new();
    let mut warnings = Vec::new();
    let mut c = lo;
    loop {
        if kap.len() >= opts.max_intervals {
            return Err(Error::Budget {
                max: opts.max_intervals,
            });
        }
        let k_end = k(hi, c)?;
        if k_end <= eps {
            points.push(hi);
            kap.push(Some(k_end));
            break;
        }
        // bracket by doubling the distance from c
        let mut a = c;
        let mut ka = 0.0;
        let mut step = (c * 1.0).min(hi - c);
        let mut b;
        let mut non_monotone = false;
        loop {
            b = (c + step).min(hi);
            let kb = k(b, c)?;
            if kb < ka {
                non_monotone = true;
            }
            if kb > eps {
                break;
            }
            a = b;
            ka = kb;
            step *= 2.0;
        }
        let root_opts = RootOptions {
            abs_tol: opts.tol_part * eps,
            x_rel_tol: 1e-14,
            max_iter: 200,
        };
        let e = match solve_increasing(|e| Ok(k(e, c)? - eps), a, b, &root_opts) {
            Ok(e) => e,
            Err(Error::NonMonotone { .. }) => {
                non_monotone = true;
                smallest_root(&|e| k(e, c), eps, a, b, opts.tol_part)?
            }
            Err(err) => return Err(err),
        };
        if non_monotone {
            warnings.push(format!(
                "NonMonotoneWarning: K(c, e) not monotone in e for c = {c}; smallest root taken"
            ));
        }
        let ke = k(e, c)?;
        points.push(e);
        kap.push(Some(ke));
        c = e;
    }
    let mut partition = classify_intervals(&Partition::new(points)?, &problem.boundaries, Anchor::Grid)?;
    partition.kappa = kap;
    let full = partition.len() - 1;
    Ok(EpsilonPartition {
        eps,
        partition,
        full_intervals: full,
        warnings,
    })
}

/// Scan then bisect for the first crossing of `eps` in `[a, b]`.
fn smallest_root<F: Fn(f64) -> Result<f64>>(f: &F, eps: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    const SCAN: usize = 64;
    let mut prev = a;
    let mut hit = b;
    for i in 1..=SCAN {
        let t = a + (b - a) * i as f64 / SCAN as f64;
        if f(t)? > eps {
            hit = t;
            break;
        }
        prev = t;
    }
    let (mut l, mut h) = (prev, hit);
    for _ in 0..200 {
        let m = 0.5 * (l + h);
        if !(m > l && m < h) {
            break;
        }
        let v = f(m)?;
        if (v - eps).abs() <= tol * eps {
            return Ok(m);
        }
        if v > eps {
            h = m;
        } else {
            l = m;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The refinement error bar straddles the bound.
    Indeterminate,
    /// The hypothesis leaves nothing to check.
    Vacuous,
}

impl Outcome {
    pub fn ok(self) -> bool {
        matches!(self, Outcome::Pass | Outcome::Vacuous)
    }
}

fn judge(lo: f64, hi: f64, bound: f64, at_least: bool) -> Outcome {
    let (pass_lo, pass_hi) = if at_least {
        (lo >= bound, hi >= bound)
    } else {
        (lo <= bound, hi <= bound)
    };
    match (pass_lo, pass_hi) {
        (true, true) => Outcome::Pass,
        (false, false) => Outcome::Fail,
        _ => Outcome::Indeterminate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyCheck {
    pub eps: f64,
    /// Intervals with `𝒦 = ε`.
    pub full_intervals: usize,
    /// `⌊M/7⌋`: the partition contains `7N` full intervals.
    pub n_key: usize,
    /// `s_N` at the two resolutions; absent for `N = 0`.
    pub s_key: Option<(f64, f64)>,
    pub key: Outcome,
    /// `N + 2` with `N` full intervals.
    pub key2_index: usize,
    pub s_key2: (f64, f64),
    /// `7^{1/2} ε`.
    pub key2_bound: f64,
    pub key2: Outcome,
    /// `7ε < 𝒦(window)`, the hypothesis of the `7N` construction.
    pub seven_eps_below_kappa: bool,
    /// Largest `|𝒦 − ε|/ε` over full intervals re-evaluated at doubled `𝒦`
    /// resolution.
    pub kappa_recheck: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaKeyReport {
    pub kappa_window: f64,
    pub checks: Vec<KeyCheck>,
}

impl LemmaKeyReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.key.ok() && c.key2.ok())
    }
}

/// Key: `s_N >= ε/2` for `N = ⌊M/7⌋`; Key2: `s_{M+2} <= √7 ε`, with `s_n`
/// from the coarse and refined spectra.
pub fn lemma_key_checks(
    problem: &Problem,
    eps_list: &[f64],
    coarse: &SpectralReport,
    fine: &SpectralReport,
    opts: &PartitionOptions,
) -> Result<LemmaKeyReport> {
    let (lo, hi) = (problem.window.lo, problem.window.hi);
    let kw = kappa_or_zero(problem, lo, hi, opts.kappa)?;
    let mut checks = Vec::new();
    for &eps in eps_list {
        let part = epsilon_partition(problem, eps, opts)?;
        let m = part.full_intervals;
        let n_key = m / 7;
        let pair = |n: usize| (coarse.s(n), fine.s(n));
        let span = |(a, b): (f64, f64)| (a.min(b), a.max(b));
        let s_key = (n_key > 0).then(|| pair(n_key));
        let key = match s_key {
            None => Outcome::Vacuous,
            Some(s) => {
                let (l, h) = span(s);
                judge(l, h, 0.5 * eps, true)
            }
        };
        let s_key2 = pair(m + 2);
        let bound2 = 7f64.sqrt() * eps;
        let (l, h) = span(s_key2);
        let key2 = judge(l, h, bound2, false);
        let mut recheck = 0.0f64;
        for n in 0..m {
            let (d, e) = part.partition.interval(n);
            let kk = kappa_or_zero(problem, d, e, opts.kappa.doubled())?;
            recheck = recheck.max((kk - eps).abs() / eps);
        }
        checks.push(KeyCheck {
            eps,
            full_intervals: m,
            n_key,
            s_key,
            key,
            key2_index: m + 2,
            s_key2,
            key2_bound: bound2,
            key2,
            seven_eps_below_kappa: 7.0 * eps < kw,
            kappa_recheck: recheck,
            warnings: part.warnings,
        });
    }
    Ok(LemmaKeyReport {
        kappa_window: kw,
        checks,
    })
}
