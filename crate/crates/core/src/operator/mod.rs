//! Discretization of the operator at `p = 2`, singular values, `𝒦(I)`,
//! ε-partitions and the verification reports built on them.

mod kappa;
mod partition;
mod verify;

pub use kappa::{k_estimate, kappa, KEstimate, KappaResolution};
pub use partition::{
    epsilon_partition, lemma_key_checks, EpsilonPartition, KeyCheck, LemmaKeyReport,
    PartitionOptions,
};
pub use verify::{
    alternating_parity_check, block_split_diagnostic, theorem_ratio_report, BlockSplitReport,
    ParityCheck, RatioReport,
};

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::schatten_sum;
use crate::problem::Problem;
use crate::quadrature::{composite_gauss, spaced_points};

/// Gauss points per x panel.
pub const GAUSS_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { nx: 800, ny: 1600 }
    }
}

impl Resolution {
    pub const CAP: Resolution = Resolution { nx: 4000, ny: 8000 };

    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < GAUSS_ORDER || ny < 1 {
            return Err(Error::Config(format!("resolution {nx}x{ny} too small")));
        }
        if nx > Self::CAP.nx || ny > Self::CAP.ny {
            return Err(Error::Config(format!(
                "resolution {nx}x{ny} exceeds the cap {}x{}",
                Self::CAP.nx,
                Self::CAP.ny
            )));
        }
        Ok(Self { nx, ny })
    }

    /// Both node counts doubled, clamped to the cap.
    pub fn doubled(self) -> Self {
        Self {
            nx: (2 * self.nx).min(Self::CAP.nx),
            ny: (2 * self.ny).min(Self::CAP.ny),
        }
    }

    /// `n·nx × 2n·nx` scaling used by `--resolution N`.
    pub fn from_nx(nx: usize) -> Result<Self> {
        Self::new(nx, 2 * nx)
    }
}

/// `ConfigError` unless `p = 2`.
pub fn require_p2(problem: &Problem) -> Result<()> {
    if (problem.p() - 2.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "spectral computations need p = 2, got p = {}",
            problem.p()
        )));
    }
    Ok(())
}

/// Gauss nodes and weights on `[lo, hi]` with `n` nodes (rounded up to whole
/// panels); panels are log-spaced when the range spans more than a factor 4.
pub fn x_nodes(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = n.div_ceil(GAUSS_ORDER).max(1);
    composite_gauss(&spaced_points(lo, hi, panels + 1), GAUSS_ORDER)
}

/// Sorted, deduplicated breakpoints inside `[lo, hi]`, with both ends.
pub(crate) fn y_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|y| *y > lo && *y < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `K_ij = √ω_i w(x_i) V_j 1[cell_j ⊂ [a(x_i), b(x_i)]]` with
/// `V_j = (∫_{cell_j} v²)^{1/2}`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    /// `√ω_i w(x_i)`.
    pub row_scale: Vec<f64>,
    pub y_breaks: Vec<f64>,
    /// `V_j`.
    pub col_norm: Vec<f64>,
    /// Support `[first, last)` of each row in column indices.
    pub row_support: Vec<(usize, usize)>,
    pub matrix: DMatrix<f64>,
    pub resolution: Resolution,
}

/// Discretization options.
#[derive(Debug, Clone, Default)]
pub struct DiscretizeOptions {
    /// Replaces `[a(t_lo), b(t_hi)]` as the `y` range.
    pub y_window: Option<(f64, f64)>,
    /// Extra `y` breakpoints, e.g. `b(ξ_k)` for the block split.
    pub extra_breaks: Vec<f64>,
}

/// Columns `[first, last)` of cells inside `[ya, yb]`.
fn support(breaks: &[f64], ya: f64, yb: f64) -> (usize, usize) {
    let first = breaks.partition_point(|&y| y < ya);
    let end = breaks.partition_point(|&y| y <= yb);
    // cells j with breaks[j] >= ya and breaks[j+1] <= yb
    let last = end.saturating_sub(1);
    if last > first {
        (first, last)
    } else {
        (first, first)
    }
}

/// Assemble the matrix for rows `(x_i, ω_i)` over the given cells.
pub(crate) fn assemble(
    problem: &Problem,
    x: &[f64],
    omega: &[f64],
    breaks: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<(usize, usize)>, DMatrix<f64>)> {
    let bd = &problem.boundaries;
    let col_norm: Vec<f64> = breaks
        .par_windows(2)
        .map(|c| Ok(problem.v_mass(c[0], c[1])?.sqrt()))
        .collect::<Result<_>>()?;
    let row_scale: Vec<f64> = x
        .iter()
        .zip(omega)
        .map(|(&xi, &wi)| wi.sqrt() * problem.w(xi))
        .collect();
    let rows: Vec<(usize, usize)> = x.iter().map(|&xi| support(breaks, bd.a(xi), bd.b(xi))).collect();
    let ncol = col_norm.len();
    let mut m = DMatrix::<f64>::zeros(x.len(), ncol);
    for (i, &(f, l)) in rows.iter().enumerate() {
        let s = row_scale[i];
        if s == 0.0 {
            continue;
        }
        for j in f..l {
            m[(i, j)] = s * col_norm[j];
        }
    }
    Ok((row_scale, col_norm, rows, m))
}

/// Discretize on the window with the given resolution.
pub fn discretize(
    problem: &Problem,
    resolution: Resolution,
    opts: &DiscretizeOptions,
) -> Result<DiscreteOperator> {
    require_p2(problem)?;
    let resolution = Resolution::new(resolution.nx, resolution.ny)?;
    let (lo, hi) = (problem.window.lo, problem.window.hi);
    let (x, omega) = x_nodes(lo, hi, resolution.nx);
    let (ylo, yhi) = opts.y_window.unwrap_or_else(|| problem.y_window());
    if !(ylo > 0.0 && yhi > ylo) {
        return Err(Error::Domain(format!("bad y window [{ylo}, {yhi}]")));
    }
    let bd = &problem.boundaries;
    let mut pts: Vec<f64> = x.iter().flat_map(|&xi| [bd.a(xi), bd.b(xi)]).collect();
    pts.extend(opts.extra_breaks.iter().copied());
    let mut breaks = y_breaks(pts, ylo, yhi);
    let cells = breaks.len() - 1;
    if resolution.ny > cells {
        // fill up to ny cells with log points; they refine no indicator edge
        let extra = spaced_points(ylo, yhi, resolution.ny - cells + 2);
        breaks.extend(extra);
        breaks = y_breaks(breaks, ylo, yhi);
    }
    let (row_scale, col_norm, row_support, matrix) = assemble(problem, &x, &omega, &breaks)?;
    Ok(DiscreteOperator {
        x,
        omega,
        row_scale,
        y_breaks: breaks,
        col_norm,
        row_support,
        matrix,
        resolution,
    })
}

/// Singular values, nonincreasing.
pub fn singular_values_of(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence("matrix has non-finite entries".into()));
    }
    // tall orientation is the cheaper one for the bidiagonalization
    let a = if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        m.transpose()
    };
    let svd = SVD::try_new(a, false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Convergence("SVD iteration did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Largest singular value through the smaller Gram matrix.
pub fn top_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let eig = SymmetricEigen::new(g);
    eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub resolution: Resolution,
    pub values: Vec<f64>,
    /// `(α, (Σ s_n^α)^{1/α})`.
    pub schatten: Vec<(f64, f64)>,
    /// Largest relative change of `s_1..s_10` against the previous
    /// refinement, when one was computed.
    pub refinement_change: Option<f64>,
}

impl SpectralReport {
    pub fn norm(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `s_n` with `n` counted from 1; zero past the computed spectrum.
    pub fn s(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        self.values.get(n - 1).copied().unwrap_or(0.0)
    }
}

pub fn singular_values(op: &DiscreteOperator, alphas: &[f64]) -> Result<SpectralReport> {
    let values = singular_values_of(&op.matrix)?;
    let schatten = alphas.iter().map(|&a| (a, schatten_sum(&values, a))).collect();
    Ok(SpectralReport {
        resolution: op.resolution,
        values,
        schatten,
        refinement_change: None,
    })
}

/// Largest relative change among the first `n` values.
pub fn relative_change(a: &[f64], b: &[f64], n: usize) -> f64 {
    let scale = a.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    (0..n)
        .map(|i| {
            let (x, y) = (a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0));
            let d = (x - y).abs();
            // values far below s_1 are compared against s_1
            d / x.abs().max(y.abs()).max(1e-12 * scale).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Spectrum at `resolution` and at the doubled resolution.
pub fn spectrum_with_refinement(
    problem: &Problem,
    resolution: Resolution,
    alphas: &[f64],
) -> Result<(SpectralReport, SpectralReport)> {
    let opts = DiscretizeOptions::default();
    let coarse = singular_values(&discretize(problem, resolution, &opts)?, alphas)?;
    let mut fine = singular_values(&discretize(problem, resolution.doubled(), &opts)?, alphas)?;
    fine.refinement_change = Some(relative_change(&coarse.values, &fine.values, 10));
    Ok((coarse, fine))
}
