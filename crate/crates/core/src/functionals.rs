//! Discrete functionals `ν̃_k`, `ν̄_k`, `ν_k`, `μ_m`, the integral functionals
//! `𝒱`, `𝒲`, `F` and Schatten sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairway::FairwayMap;
use crate::functions::BoundaryFamily;
use crate::grids::{Cell, GridSystem};
use crate::problem::Problem;
use crate::quadrature::{adaptive_pieces, compensated_sum, spaced_points, QuadOptions};

/// Log-spaced samples per cell for the suprema.
pub const SUP_SAMPLES: usize = 256;
const GOLDEN_STEPS: usize = 48;
/// Relative tolerance for the outer integrals of `𝒱`, `𝒲`, `F`.
const OUTER_TOL: f64 = 1e-9;

/// `(Σ s_n^α)^{1/α}` with compensated summation; `∞` once a partial sum
/// overflows.
pub fn schatten_sum(s: &[f64], alpha: f64) -> f64 {
    assert!(alpha > 0.0, "Schatten index must be positive");
    let terms = s.iter().map(|&x| x.abs().powf(alpha));
    let total = compensated_sum(terms);
    if !total.is_finite() {
        return f64::INFINITY;
    }
    total.powf(1.0 / alpha)
}

/// `Σ s_n^α` (no root).
pub fn schatten_power_sum(s: &[f64], alpha: f64) -> f64 {
    let total = compensated_sum(s.iter().map(|&x| x.abs().powf(alpha)));
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

fn root(x: f64, r: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(r)
    }
}

/// The `ν̄` and `ν` integrands at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuSample {
    pub t: f64,
    pub bar: f64,
    pub full: f64,
}

/// Evaluator of the `ν` integrands on one cell `[ξ_k, ξ_{k+1}]`.
struct NuCell<'a> {
    problem: &'a Problem,
    fairway: FairwayMap<'a>,
    lo: f64,
    hi: f64,
}

impl NuCell<'_> {
    /// `ν̄` keeps the part of `[b⁻¹(σ(t)), a⁻¹(σ(t))]` inside the cell; `ν`
    /// adds the (nonnegative) parts outside, so `ν >= ν̄` sample by sample.
    fn sample(&self, t: f64) -> Result<NuSample> {
        let p = self.problem;
        let zero = NuSample { t, bar: 0.0, full: 0.0 };
        let (at, bt) = (p.boundaries.a(t), p.boundaries.b(t));
        let vm = p.v_mass(at, bt)?;
        if vm == 0.0 {
            return Ok(zero);
        }
        let s = match self.fairway.sigma(t) {
            Ok(s) => s,
            Err(Error::ZeroMass { .. }) => return Ok(zero),
            Err(e) => return Err(e),
        };
        let x_lo = p.boundaries.b_inv(s)?;
        let x_hi = p.boundaries.a_inv(s)?;
        let inner = p.w_mass(x_lo.max(self.lo), x_hi.min(self.hi))?;
        let mut outer = 0.0;
        if x_lo < self.lo {
            outer += p.w_mass(x_lo, x_hi.min(self.lo))?;
        }
        if x_hi > self.hi {
            outer += p.w_mass(x_lo.max(self.hi), x_hi)?;
        }
        let vf = root(vm, 1.0 / p.p_conj());
        Ok(NuSample {
            t,
            bar: root(inner, 1.0 / p.p()) * vf,
            full: root(inner + outer, 1.0 / p.p()) * vf,
        })
    }
}

/// Sampled supremum with the gap between the two best samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sup {
    pub value: f64,
    pub argmax: f64,
    pub gap: f64,
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    // works in log t
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    let mut best = if fc >= fd { (c.exp(), fc) } else { (d.exp(), fd) };
    for _ in 0..GOLDEN_STEPS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c.exp())?;
            if fc > best.1 {
                best = (c.exp(), fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d.exp())?;
            if fd > best.1 {
                best = (d.exp(), fd);
            }
        }
    }
    Ok(best)
}

fn sample_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (r * (i as f64 + 0.5) / n as f64).exp())
        .collect()
}

fn polish<F: Fn(f64) -> Result<f64>>(f: F, ts: &[f64], vals: &[f64], lo: f64, hi: f64) -> Result<Sup> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    let i = order[0];
    let second = order.get(1).map(|&j| vals[j]).unwrap_or(vals[i]);
    let mut best = Sup {
        value: vals[i],
        argmax: ts[i],
        gap: vals[i] - second,
    };
    if vals[i] > 0.0 {
        let l = if i > 0 { ts[i - 1] } else { lo };
        let h = if i + 1 < ts.len() { ts[i + 1] } else { hi };
        let (t, v) = golden_max(&f, l, h)?;
        if v > best.value {
            best.value = v;
            best.argmax = t;
        }
    }
    Ok(best)
}

/// `ν̃_k <= ν̄_k <= ν_k` for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuRow {
    pub k: i64,
    pub xi_k: f64,
    pub xi_k1: f64,
    pub nu_tilde: f64,
    pub nu_bar: f64,
    pub nu: f64,
    /// Best-minus-second-best sample; a rough size of the sampling error.
    pub nu_bar_gap: f64,
    pub nu_gap: f64,
    pub argmax_bar: f64,
    pub argmax: f64,
}

/// `ν̃_k` from its two fixed integrals, with `x_0 = σ⁻¹(b(ξ_k))`.
pub fn nu_tilde(problem: &Problem, cell: &Cell) -> Result<f64> {
    let Some(x0) = cell.x0() else {
        return Ok(0.0);
    };
    let wm = problem.w_mass(cell.xi_lo(), cell.xi_hi())?;
    let vm = problem.v_mass(problem.boundaries.a(x0), problem.boundaries.b(x0))?;
    Ok(root(wm, 1.0 / problem.p()) * root(vm, 1.0 / problem.p_conj()))
}

/// `(ν̃_k, ν̄_k, ν_k)` with sampled suprema.
pub fn nu_variants(problem: &Problem, cell: &Cell, samples: usize) -> Result<NuRow> {
    let (lo, hi) = (cell.xi_lo(), cell.xi_hi());
    let ev = NuCell {
        problem,
        fairway: problem.fairway(),
        lo,
        hi,
    };
    let nt = nu_tilde(problem, cell)?;
    let ts = sample_points(lo, hi, samples.max(2));
    let s: Vec<NuSample> = ts.iter().map(|&t| ev.sample(t)).collect::<Result<_>>()?;
    let bars: Vec<f64> = s.iter().map(|x| x.bar).collect();
    let fulls: Vec<f64> = s.iter().map(|x| x.full).collect();
    let mut bar = polish(|t| Ok(ev.sample(t)?.bar), &ts, &bars, lo, hi)?;
    let mut full = polish(|t| Ok(ev.sample(t)?.full), &ts, &fulls, lo, hi)?;
    // at t = x_0 the ν̄ limits are exactly the cell, which is ν̃
    if nt > bar.value {
        bar.value = nt;
        bar.argmax = cell.x0().unwrap_or(bar.argmax);
    }
    let at_bar = ev.sample(bar.argmax)?.full;
    if at_bar > full.value {
        full.value = at_bar;
        full.argmax = bar.argmax;
    }
    if bar.value > full.value {
        full.value = bar.value;
        full.argmax = bar.argmax;
    }
    Ok(NuRow {
        k: cell.k,
        xi_k: lo,
        xi_k1: hi,
        nu_tilde: nt,
        nu_bar: bar.value,
        nu: full.value,
        nu_bar_gap: bar.gap,
        nu_gap: full.gap,
        argmax_bar: bar.argmax,
        argmax: full.argmax,
    })
}

/// `ν` rows for every grid cell, in cell order.
pub fn nu_table(problem: &Problem, grid: &GridSystem, samples: usize) -> Result<Vec<NuRow>> {
    grid.cells
        .par_iter()
        .map(|c| nu_variants(problem, c, samples))
        .collect()
}

/// `μ_m` for one refinement piece `[x_m, x_{m+1}]`.
pub fn mu(problem: &Problem, x_m: f64, x_m1: f64) -> Result<f64> {
    let wm = problem.w_mass(x_m, x_m1)?;
    if wm == 0.0 {
        return Ok(0.0);
    }
    let vm = problem.v_mass(problem.boundaries.a(x_m), problem.boundaries.b(x_m1))?;
    Ok(root(wm, 1.0 / problem.p()) * root(vm, 1.0 / problem.p_conj()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRow {
    pub m: usize,
    pub k: i64,
    pub j: i64,
    pub x_m: f64,
    pub x_m1: f64,
    pub mu: f64,
}

/// `μ_m` over the grid, `m` flattened lexicographically in `(k, j)`.
pub fn mu_table(problem: &Problem, grid: &GridSystem) -> Result<Vec<MuRow>> {
    grid.flattened()
        .into_par_iter()
        .enumerate()
        .map(|(m, (k, j, l, r))| {
            Ok(MuRow {
                m,
                k,
                j,
                x_m: l,
                x_m1: r,
                mu: mu(problem, l, r)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub mu: f64,
    pub holds: bool,
}

/// Sum over the pieces `[c_i, c_{i+1}]` of `[x_m, x_{m+1}]` cut at `cuts`
/// of `(∫ w^p χ_{I_i})^{1/p} (∫ v^{p'}[χ_{[a(c_i),a(c_{i+1})]} + χ_{[b(c_i),b(c_{i+1})]}])^{1/p'}`,
/// compared with `μ_m (1 + tol)`. The `v` integrals are restricted to
/// `[a(x_m), b(x_{m+1})]`.
pub fn holder_subdivision_check(
    problem: &Problem,
    x_m: f64,
    x_m1: f64,
    cuts: &[f64],
    tol: f64,
) -> Result<HolderCheck> {
    if cuts.iter().any(|c| !(*c > x_m && *c < x_m1)) {
        return Err(Error::Domain("cuts must lie strictly inside the piece".into()));
    }
    let mut c: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    c.push(x_m);
    c.extend_from_slice(cuts);
    c.push(x_m1);
    c.sort_by(f64::total_cmp);
    let bd = &problem.boundaries;
    let (ylo, yhi) = (bd.a(x_m), bd.b(x_m1));
    let clipped = |l: f64, h: f64| problem.v_mass(l.max(ylo), h.min(yhi));
    let mut terms = Vec::with_capacity(c.len());
    for w in c.windows(2) {
        let wm = problem.w_mass(w[0], w[1])?;
        let vm = clipped(bd.a(w[0]), bd.a(w[1]))? + clipped(bd.b(w[0]), bd.b(w[1]))?;
        terms.push(root(wm, 1.0 / problem.p()) * root(vm, 1.0 / problem.p_conj()));
    }
    let lhs = compensated_sum(terms);
    let m = mu(problem, x_m, x_m1)?;
    Ok(HolderCheck {
        lhs,
        mu: m,
        holds: lhs <= m * (1.0 + tol),
    })
}

fn outer_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|x| *x > lo && *x < hi);
    pts.extend(spaced_points(lo, hi, ((hi / lo).log2().ceil() as usize + 1).max(2)));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    pts
}

fn outer_quad() -> QuadOptions {
    QuadOptions::with_rel_tol(OUTER_TOL)
}

/// `𝒱^α = ∫ [∫_{b⁻¹(t)}^{a⁻¹(t)} w^p]^{α/p} [∫_{a(σ⁻¹(t))}^{b(σ⁻¹(t))} v^{p'}]^{α/p'-1} v^{p'}(t) dt`.
///
/// With `w` truncated to the window the integrand vanishes outside
/// `[a(t_lo), b(t_hi)]`, so that range is integrated exactly.
pub fn functional_v_power(problem: &Problem, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if problem.weights.v.is_identically_zero() || problem.weights.w.is_identically_zero() {
        return Ok(0.0);
    }
    let (p, pc) = (problem.p(), problem.p_conj());
    let bd = &problem.boundaries;
    let f = problem.fairway();
    let (lo, hi) = (problem.window.lo, problem.window.hi);
    let (ylo, yhi) = problem.y_window();
    let breaks = outer_breaks(vec![bd.b(lo), bd.a(hi)], ylo, yhi);
    let err = std::sync::Mutex::new(None);
    let integrand = |t: f64| -> f64 {
        let run = || -> Result<f64> {
            let vt = problem.v(t);
            if vt == 0.0 {
                return Ok(0.0);
            }
            let wm = problem.w_mass(bd.b_inv(t)?, bd.a_inv(t)?)?;
            if wm == 0.0 {
                return Ok(0.0);
            }
            let s = f.sigma_inverse(t)?;
            let vm = problem.v_mass(bd.a(s), bd.b(s))?;
            Ok(wm.powf(alpha / p) * vm.powf(alpha / pc - 1.0) * vt.powf(pc))
        };
        run().unwrap_or_else(|e| {
            err.lock().unwrap().get_or_insert(e);
            f64::NAN
        })
    };
    let r = adaptive_pieces(integrand, &breaks, &outer_quad());
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    r
}

/// `𝒲^α = ∫ [∫_{b⁻¹(σ(t))}^{a⁻¹(σ(t))} w^p]^{α/p-1} [∫_{a(t)}^{b(t)} v^{p'}]^{α/p'} w^p(t) dt`
/// over the window.
pub fn functional_w_power(problem: &Problem, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if problem.weights.v.is_identically_zero() || problem.weights.w.is_identically_zero() {
        return Ok(0.0);
    }
    let (p, pc) = (problem.p(), problem.p_conj());
    let (lo, hi) = (problem.window.lo, problem.window.hi);
    let breaks = outer_breaks(Vec::new(), lo, hi);
    let err = std::sync::Mutex::new(None);
    let integrand = |t: f64| -> f64 {
        let run = || -> Result<f64> { w_integrand(problem, t, alpha, p, pc, |t| {
            let bd = &problem.boundaries;
            problem.v_mass(bd.a(t), bd.b(t))
        }) };
        run().unwrap_or_else(|e| {
            err.lock().unwrap().get_or_insert(e);
            f64::NAN
        })
    };
    let r = adaptive_pieces(integrand, &breaks, &outer_quad());
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    r
}

/// `[∫_{b⁻¹(σ(t))}^{a⁻¹(σ(t))} w^p]^{α/p-1} · vfac(t)^{α/p'} · w^p(t)`.
fn w_integrand<V: Fn(f64) -> Result<f64>>(
    problem: &Problem,
    t: f64,
    alpha: f64,
    p: f64,
    pc: f64,
    vfac: V,
) -> Result<f64> {
    let wt = problem.w(t);
    if wt == 0.0 {
        return Ok(0.0);
    }
    let vm = vfac(t)?;
    if vm == 0.0 {
        return Ok(0.0);
    }
    let bd = &problem.boundaries;
    let s = problem.fairway().sigma(t)?;
    let wm = problem.w_mass(bd.b_inv(s)?, bd.a_inv(s)?)?;
    Ok(wm.powf(alpha / p - 1.0) * vm.powf(alpha / pc) * wt.powf(p))
}

/// The `F` criterion for the linear family with `v ≡ 1`, both readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleF {
    pub alpha: f64,
    /// `(k, F_k^α)` with `F_k^α` the display integrated over `[ξ_k, ξ_{k+1}]`.
    pub per_cell: Vec<(i64, f64)>,
    /// `F` read on the single cell `[ξ_0, ξ_1] = [1, B/A]` (the cell containing
    /// `1`), or the first window cell when `1` lies outside the grid.
    pub single_cell: f64,
    /// `F` read as the sum over all cells in the window.
    pub summed: f64,
}

/// `F^α` on `[t1, t2]`.
pub fn example_f_power_on(problem: &Problem, alpha: f64, t1: f64, t2: f64) -> Result<f64> {
    check_f_config(problem)?;
    if problem.weights.w.is_identically_zero() {
        return Ok(0.0);
    }
    let (p, pc) = (problem.p(), problem.p_conj());
    let err = std::sync::Mutex::new(None);
    let bd = &problem.boundaries;
    let integrand = |t: f64| -> f64 {
        w_integrand(problem, t, alpha, p, pc, |t| Ok(bd.b(t) - bd.a(t))).unwrap_or_else(|e| {
            err.lock().unwrap().get_or_insert(e);
            f64::NAN
        })
    };
    let breaks = outer_breaks(vec![problem.window.lo, problem.window.hi], t1, t2);
    let r = adaptive_pieces(integrand, &breaks, &outer_quad());
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    r
}

fn check_f_config(problem: &Problem) -> Result<()> {
    let linear = matches!(problem.boundaries.family, BoundaryFamily::Linear { .. });
    if !linear || !problem.weights.v.is_unit_constant() {
        return Err(Error::Config(
            "the F criterion needs the linear boundary family with v = 1".into(),
        ));
    }
    Ok(())
}

pub fn example_f(problem: &Problem, grid: &GridSystem, alpha: f64) -> Result<ExampleF> {
    check_f_config(problem)?;
    let per_cell: Vec<(i64, f64)> = grid
        .cells
        .par_iter()
        .map(|c| Ok((c.k, example_f_power_on(problem, alpha, c.xi_lo(), c.xi_hi())?)))
        .collect::<Result<_>>()?;
    let single = per_cell
        .iter()
        .find(|(k, _)| *k == 0)
        .or(per_cell.first())
        .map(|x| x.1)
        .unwrap_or(0.0);
    let summed = compensated_sum(per_cell.iter().map(|x| x.1));
    Ok(ExampleF {
        alpha,
        per_cell,
        single_cell: root(single, 1.0 / alpha),
        summed: root(summed, 1.0 / alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    /// Discarded cells add less than `tail_tol` relative to the kept sum.
    Converged,
    /// Finite but above `tail_tol`: the window should be widened.
    Exceeds,
    /// The tail terms do not decay.
    Divergent,
}

/// Untruncated `Σ ν̃_k^α` over cells outside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub alpha: f64,
    #[serde(with = "crate::float")]
    pub kept: f64,
    #[serde(with = "crate::float")]
    pub lower_tail: f64,
    #[serde(with = "crate::float")]
    pub upper_tail: f64,
    pub lower_status: TailStatus,
    pub upper_status: TailStatus,
}

/// Cap on the number of cells examined on each side.
const TAIL_CELLS: usize = 200;

/// `ν̃_k` of the untruncated operator for the cell `[lo, hi]`.
fn nu_tilde_untruncated(problem: &Problem, lo: f64, hi: f64) -> Result<f64> {
    let bd = &problem.boundaries;
    let x0 = match problem.fairway().sigma_inverse(bd.b(lo)) {
        Ok(x) => x,
        Err(Error::ZeroMass { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let wm = problem.w_mass_untruncated(lo, hi)?;
    let vm = problem.v_mass(bd.a(x0), bd.b(x0))?;
    Ok(root(wm, 1.0 / problem.p()) * root(vm, 1.0 / problem.p_conj()))
}

fn tail_side(
    problem: &Problem,
    grid: &GridSystem,
    alphas: &[f64],
    kept: &[f64],
    upward: bool,
) -> Vec<(f64, TailStatus)> {
    let bd = &problem.boundaries;
    let tol = problem.tol.tail_tol;
    let mut x = if upward {
        *grid.xi.values.last().unwrap()
    } else {
        grid.xi.values[0]
    };
    let mut terms: Vec<f64> = Vec::new();
    let mut failed = false;
    for _ in 0..TAIL_CELLS {
        let nx = if upward {
            bd.a_inv(bd.b(x))
        } else {
            bd.b_inv(bd.a(x))
        };
        let Ok(nx) = nx else { break };
        if !(nx > 0.0 && nx.is_finite() && nx > 1e-300 && nx < 1e300) || nx == x {
            break;
        }
        let (l, h) = if upward { (x, nx) } else { (nx, x) };
        match nu_tilde_untruncated(problem, l, h) {
            Ok(v) if v.is_finite() => terms.push(v),
            _ => {
                failed = true;
                break;
            }
        }
        x = nx;
        if terms.len() >= 8 {
            let last = terms[terms.len() - 4..].iter().cloned().fold(0.0, f64::max);
            let first = terms[..4].iter().cloned().fold(0.0, f64::max);
            if last <= 1e-6 * first.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    alphas
        .iter()
        .zip(kept)
        .map(|(&a, &k)| {
            let tail = schatten_power_sum(&terms, a);
            let growing = terms.len() >= 8 && {
                let n = terms.len();
                terms[n - 1] >= terms[n - 5] && terms[n - 1] > 0.0
            };
            let status = if failed || growing || !tail.is_finite() {
                TailStatus::Divergent
            } else if tail <= tol * k.max(f64::MIN_POSITIVE) || tail == 0.0 {
                TailStatus::Converged
            } else {
                TailStatus::Exceeds
            };
            (tail, status)
        })
        .collect()
}

/// Tail estimates for `Σ ν̃_k^α` of the untruncated operator.
pub fn tail_report(problem: &Problem, grid: &GridSystem, alphas: &[f64]) -> Vec<TailReport> {
    let nt: Vec<f64> = grid
        .cells
        .iter()
        .map(|c| nu_tilde_untruncated(problem, c.xi_lo(), c.xi_hi()).unwrap_or(0.0))
        .collect();
    let kept: Vec<f64> = alphas.iter().map(|&a| schatten_power_sum(&nt, a)).collect();
    let lower = tail_side(problem, grid, alphas, &kept, false);
    let upper = tail_side(problem, grid, alphas, &kept, true);
    alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| TailReport {
            alpha: a,
            kept: kept[i],
            lower_tail: lower[i].0,
            upper_tail: upper[i].0,
            lower_status: lower[i].1,
            upper_status: upper[i].1,
        })
        .collect()
}

/// Per-α scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    /// `𝒱^α`.
    pub v_power: f64,
    /// `𝒲^α`.
    pub w_power: f64,
    /// `F` (single-cell and summed readings) when the configuration allows it.
    pub f: Option<ExampleF>,
    #[serde(with = "crate::float")]
    pub sum_nu_tilde: f64,
    #[serde(with = "crate::float")]
    pub sum_nu_bar: f64,
    #[serde(with = "crate::float")]
    pub sum_nu: f64,
    #[serde(with = "crate::float")]
    pub sum_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub nu: Vec<NuRow>,
    pub mu: Vec<MuRow>,
    pub alphas: Vec<AlphaRow>,
    pub tails: Vec<TailReport>,
    pub sup_nu: f64,
    pub sup_mu: f64,
    pub beta_p: f64,
    pub gamma_p: f64,
}

impl FunctionalReport {
    pub fn build(
        problem: &Problem,
        grid: &GridSystem,
        alphas: &[f64],
        beta_p: f64,
        gamma_p: f64,
    ) -> Result<Self> {
        let nu = nu_table(problem, grid, SUP_SAMPLES)?;
        let mu = mu_table(problem, grid)?;
        let f_ok = check_f_config(problem).is_ok();
        let rows = alphas
            .iter()
            .map(|&a| {
                let col = |f: fn(&NuRow) -> f64| -> Vec<f64> { nu.iter().map(f).collect() };
                let mus: Vec<f64> = mu.iter().map(|r| r.mu).collect();
                Ok(AlphaRow {
                    alpha: a,
                    v_power: functional_v_power(problem, a)?,
                    w_power: functional_w_power(problem, a)?,
                    f: if f_ok {
                        Some(example_f(problem, grid, a)?)
                    } else {
                        None
                    },
                    sum_nu_tilde: schatten_power_sum(&col(|r| r.nu_tilde), a),
                    sum_nu_bar: schatten_power_sum(&col(|r| r.nu_bar), a),
                    sum_nu: schatten_power_sum(&col(|r| r.nu), a),
                    sum_mu: schatten_power_sum(&mus, a),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tails = tail_report(problem, grid, alphas);
        Ok(Self {
            sup_nu: nu.iter().map(|r| r.nu).fold(0.0, f64::max),
            sup_mu: mu.iter().map(|r| r.mu).fold(0.0, f64::max),
            nu,
            mu,
            alphas: rows,
            tails,
            beta_p,
            gamma_p,
        })
    }
}
