//! Constant-free checks tying the spectrum to `ν`, `μ` and the block split.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    assemble, discretize, require_p2, singular_values_of, x_nodes, y_breaks, DiscretizeOptions,
    Resolution, SpectralReport,
};
use crate::error::{Error, Result};
use crate::functionals::{schatten_power_sum, schatten_sum, FunctionalReport};
use crate::grids::{GridSystem, IntervalClass, Partition};
use crate::problem::Problem;

/// `x / y`, undefined when the denominator vanishes or either side is not
/// finite.
fn ratio(x: f64, y: f64) -> Option<f64> {
    (y != 0.0 && x.is_finite() && y.is_finite()).then(|| x / y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub alpha: f64,
    /// `(Σ ν_k^α)^{1/α}`.
    #[serde(with = "crate::float")]
    pub nu: f64,
    /// `(Σ s_n^α)^{1/α}`.
    #[serde(with = "crate::float")]
    pub s: f64,
    /// `(Σ μ_m^α)^{1/α}`.
    #[serde(with = "crate::float")]
    pub mu: f64,
    /// `None` when undefined by `0/0`.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    /// All three sums finite, or none of them.
    pub finite_together: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub norm: f64,
    pub sup_nu: f64,
    pub sup_mu: f64,
    /// `‖ℋ‖ / sup ν_k`.
    pub r3: Option<f64>,
    /// `‖ℋ‖ / sup μ_m`.
    pub r4: Option<f64>,
    /// Each of the three sums is nonincreasing in `α`.
    pub monotone_in_alpha: bool,
    pub beta_p: f64,
    pub gamma_p: f64,
}

/// `r₁..r₄` from a functional report and a spectrum on the same window.
pub fn theorem_ratio_report(
    functionals: &FunctionalReport,
    spectrum: &SpectralReport,
    alphas: &[f64],
) -> RatioReport {
    let nus: Vec<f64> = functionals.nu.iter().map(|r| r.nu).collect();
    let mus: Vec<f64> = functionals.mu.iter().map(|r| r.mu).collect();
    let mut rows: Vec<RatioRow> = alphas
        .iter()
        .map(|&a| {
            let nu = schatten_sum(&nus, a);
            let s = schatten_sum(&spectrum.values, a);
            let mu = schatten_sum(&mus, a);
            let fin = [nu, s, mu].map(f64::is_finite);
            RatioRow {
                alpha: a,
                nu,
                s,
                mu,
                r1: ratio(nu, s),
                r2: ratio(s, mu),
                finite_together: fin.iter().all(|&f| f) || fin.iter().all(|&f| !f),
            }
        })
        .collect();
    rows.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));
    let tol = |x: f64, y: f64| y <= x * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let monotone = rows
        .windows(2)
        .all(|w| tol(w[0].nu, w[1].nu) && tol(w[0].s, w[1].s) && tol(w[0].mu, w[1].mu));
    let norm = spectrum.norm();
    RatioReport {
        rows,
        norm,
        sup_nu: functionals.sup_nu,
        sup_mu: functionals.sup_mu,
        r3: ratio(norm, functionals.sup_nu),
        r4: ratio(norm, functionals.sup_mu),
        monotone_in_alpha: monotone,
        beta_p: functionals.beta_p,
        gamma_p: functionals.gamma_p,
    }
}

pub const BLOCK_NAMES: [&str; 4] = ["T1", "T2", "S1", "S2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFamily {
    pub name: String,
    pub frobenius: f64,
    pub norm: f64,
    /// `(α, (Σ s_n^α)^{1/α})`.
    pub schatten: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSplitReport {
    pub resolution: Resolution,
    /// `‖ℋ − Σ blocks‖_F / ‖ℋ‖_F` (`0` when `ℋ = 0`).
    pub reconstruction_error: f64,
    /// Support entries claimed by more than one block.
    pub overlaps: usize,
    /// Support entries claimed by no block.
    pub unclaimed: usize,
    /// Entries off the support claimed by some block.
    pub stray: usize,
    pub families: Vec<BlockFamily>,
}

impl BlockSplitReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.reconstruction_error <= tol && self.overlaps == 0 && self.unclaimed == 0 && self.stray == 0
    }
}

/// `T_{k,1}, T_{k,2}, S_{k,1}, S_{k,2}` as masked kernel matrices.
///
/// For `x ∈ [ξ_k, x_0)` with `x_0 = σ⁻¹(b(ξ_k))`: `T_{k,2}` keeps
/// `y ∈ [a(x), b(ξ_k)]`, `S_{k,1}` keeps `y ∈ [b(ξ_k), b(x)]`. For
/// `x ∈ [x_0, ξ_{k+1})`: `T_{k,1}` keeps `y ∈ [a(x), a(ξ_{k+1})]`, `S_{k,2}`
/// keeps `y ∈ [a(ξ_{k+1}), b(x)]`.
pub fn block_split_diagnostic(
    problem: &Problem,
    grid: &GridSystem,
    resolution: Resolution,
    alphas: &[f64],
) -> Result<BlockSplitReport> {
    require_p2(problem)?;
    let bd = &problem.boundaries;
    let extra: Vec<f64> = grid
        .cells
        .iter()
        .flat_map(|c| [bd.b(c.xi_lo()), bd.a(c.xi_hi())])
        .collect();
    let op = discretize(
        problem,
        resolution,
        &DiscretizeOptions {
            extra_breaks: extra,
            ..Default::default()
        },
    )?;
    let (nr, nc) = op.matrix.shape();
    let mut blocks: Vec<DMatrix<f64>> = (0..4).map(|_| DMatrix::zeros(nr, nc)).collect();
    let (mut overlaps, mut unclaimed, mut stray) = (0, 0, 0);
    for (i, &x) in op.x.iter().enumerate() {
        let k = grid
            .xi
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("row {x} outside the grid")))?;
        let cell = grid
            .cell(k)
            .ok_or_else(|| Error::Domain(format!("no cell {k} for row {x}")))?;
        let x0 = cell.x0().unwrap_or(cell.xi_hi());
        let (ax, bx) = (bd.a(x), bd.b(x));
        let limits = if x < x0 {
            let m = bd.b(cell.xi_lo());
            [None, Some((ax, m)), Some((m, bx)), None]
        } else {
            let m = bd.a(cell.xi_hi());
            [Some((ax, m)), None, None, Some((m, bx))]
        };
        let (f, l) = op.row_support[i];
        for j in 0..nc {
            let (y0, y1) = (op.y_breaks[j], op.y_breaks[j + 1]);
            let mut claims = 0;
            for (b, lim) in limits.iter().enumerate() {
                if let Some((lo, hi)) = *lim {
                    if y0 >= lo && y1 <= hi {
                        claims += 1;
                        blocks[b][(i, j)] = op.row_scale[i] * op.col_norm[j];
                    }
                }
            }
            let in_support = j >= f && j < l;
            match (in_support, claims) {
                (true, 0) => unclaimed += 1,
                (true, 1) | (false, 0) => {}
                (true, _) => overlaps += 1,
                (false, _) => stray += 1,
            }
        }
    }
    let total = norm_f(&op.matrix);
    let mut diff = op.matrix.clone();
    for b in &blocks {
        diff -= b;
    }
    let err = if total == 0.0 {
        norm_f(&diff)
    } else {
        norm_f(&diff) / total
    };
    let families = blocks
        .iter()
        .zip(BLOCK_NAMES)
        .map(|(m, name)| {
            let s = singular_values_of(m)?;
            Ok(BlockFamily {
                name: name.to_string(),
                frobenius: norm_f(m),
                norm: s.first().copied().unwrap_or(0.0),
                schatten: alphas.iter().map(|&a| (a, schatten_sum(&s, a))).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockSplitReport {
        resolution: op.resolution,
        reconstruction_error: err,
        overlaps,
        unclaimed,
        stray,
        families,
    })
}

fn norm_f(m: &DMatrix<f64>) -> f64 {
    schatten_power_sum(m.as_slice(), 2.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityCheck {
    /// Intervals `I_n` with `n ≡ parity (mod 2)`.
    pub intervals: Vec<usize>,
    /// Every interval of the partition is of class `I1`.
    pub all_type_one: bool,
    /// Column supports of different blocks are disjoint.
    pub disjoint: bool,
    /// Largest `|s_n(full) − s_n(union)| / s_1(full)`.
    pub max_deviation: f64,
    pub full: Vec<f64>,
    pub union: Vec<f64>,
}

/// Spectrum of `ℋ` restricted to every other interval versus the union of the
/// per-interval spectra.
pub fn alternating_parity_check(
    problem: &Problem,
    partition: &Partition,
    parity: usize,
    nodes_per_interval: usize,
) -> Result<ParityCheck> {
    require_p2(problem)?;
    let bd = &problem.boundaries;
    let intervals: Vec<usize> = (0..partition.len()).filter(|n| n % 2 == parity % 2).collect();
    let mut x = Vec::new();
    let mut om = Vec::new();
    let mut rows = Vec::new();
    for &n in &intervals {
        let (d, e) = partition.interval(n);
        let (xs, ws) = x_nodes(d, e, nodes_per_interval);
        let start = x.len();
        x.extend(xs);
        om.extend(ws);
        rows.push(start..x.len());
    }
    let lo = partition.points[0];
    let hi = *partition.points.last().unwrap();
    let pts: Vec<f64> = x.iter().flat_map(|&t| [bd.a(t), bd.b(t)]).collect();
    let breaks = y_breaks(pts, bd.a(lo), bd.b(hi));
    let (_, _, support, m) = assemble(problem, &x, &om, &breaks)?;
    let mut cols: Vec<(usize, usize)> = rows
        .iter()
        .map(|r| {
            let f = r.clone().map(|i| support[i].0).min().unwrap_or(0);
            let l = r.clone().map(|i| support[i].1).max().unwrap_or(0);
            (f, l)
        })
        .collect();
    cols.sort();
    let disjoint = cols.windows(2).all(|w| w[0].1 <= w[1].0);
    let full = singular_values_of(&m)?;
    let mut union = Vec::new();
    for r in &rows {
        let sub = m.rows(r.start, r.len()).into_owned();
        union.extend(singular_values_of(&sub)?);
    }
    union.sort_by(|a, b| b.total_cmp(a));
    let scale = full.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let n = full.len().max(union.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let dev = (0..n)
        .map(|i| (at(&full, i) - at(&union, i)).abs() / scale)
        .fold(0.0, f64::max);
    Ok(ParityCheck {
        intervals,
        all_type_one: partition.classes.iter().all(|c| *c == IntervalClass::I1),
        disjoint,
        max_deviation: dev,
        full,
        union,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::FunctionalReport;
    use crate::functions::Weight;
    use crate::grids::{classify_intervals, Anchor};
    use crate::operator::singular_values;

    fn ex(b: f64, v: Weight, window: (f64, f64)) -> Problem {
        Problem::linear(1.0, b, v, Weight::Power { c: 1.0, beta: -0.5 }, 2.0, window).unwrap()
    }

    #[test]
    fn ratio_undefined_by_zero() {
        assert_eq!(ratio(0.0, 0.0), None);
        assert_eq!(ratio(1.0, 0.0), None);
        assert_eq!(ratio(f64::INFINITY, 1.0), None);
        assert_eq!(ratio(1.0, 2.0), Some(0.5));
    }

    #[test]
    fn ratios_zero_v() {
        let p = ex(3.0, Weight::Zero, (0.1, 10.0));
        let g = GridSystem::build(&p).unwrap();
        let f = FunctionalReport::build(&p, &g, &[2.0], 1.0, 1.0).unwrap();
        let op = discretize(&p, Resolution::new(40, 80).unwrap(), &Default::default()).unwrap();
        let s = singular_values(&op, &[2.0]).unwrap();
        let r = theorem_ratio_report(&f, &s, &[2.0]);
        assert_eq!((r.rows[0].r1, r.rows[0].r2, r.r3, r.r4), (None, None, None, None));
        assert!(r.rows[0].finite_together);
    }

    #[test]
    fn block_split_reconstructs() {
        let p = ex(3.0, Weight::Const { c: 1.0 }, (0.1, 10.0));
        let g = GridSystem::build(&p).unwrap();
        let r = block_split_diagnostic(&p, &g, Resolution::new(120, 240).unwrap(), &[2.0]).unwrap();
        assert!(r.ok(1e-12), "{r:?}");
        assert!(r.families.iter().all(|f| f.frobenius > 0.0));
        let p = ex(3.0, Weight::Zero, (0.1, 10.0));
        let g = GridSystem::build(&p).unwrap();
        let r = block_split_diagnostic(&p, &g, Resolution::new(40, 80).unwrap(), &[2.0]).unwrap();
        assert!(r.families.iter().all(|f| f.frobenius == 0.0));
        assert_eq!(r.reconstruction_error, 0.0);
    }

    #[test]
    fn parity_blocks_union() {
        let p = ex(3.0, Weight::Const { c: 1.0 }, (0.5, 100.0));
        let part = classify_intervals(
            &Partition::new(vec![1.0, 3.0, 9.0, 27.0]).unwrap(),
            &p.boundaries,
            Anchor::Grid,
        )
        .unwrap();
        for parity in [0, 1] {
            let c = alternating_parity_check(&p, &part, parity, 48).unwrap();
            assert!(c.all_type_one && c.disjoint);
            assert!(c.max_deviation <= 1e-12, "{}", c.max_deviation);
        }
    }
}
