//! The `ξ_k` orbit of `a⁻¹∘b`, the per-cell refinement `x_j`, weighted median
//! points and classification of partition intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairway::FairwayMap;
use crate::functions::{BoundaryPair, WeightPair};
use crate::problem::{Problem, Window};
use crate::roots::{solve_increasing, RootOptions};

/// Iteration cap for orbits and refinements.
pub const STEP_CAP: usize = 100_000;

/// Relative slack when deciding that an iterate has reached a cell end.
const END_SLACK: f64 = 1e-10;

/// `ξ_k` for `k = k_min ..= k_min + values.len() - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSequence {
    pub k_min: i64,
    pub values: Vec<f64>,
}

impl XiSequence {
    pub fn k_max(&self) -> i64 {
        self.k_min + self.values.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        let i = k - self.k_min;
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    /// Segment index `k` with `ξ_k <= x < ξ_{k+1}`.
    pub fn locate(&self, x: f64) -> Option<i64> {
        let i = self.values.partition_point(|&v| v <= x);
        (i > 0 && i < self.values.len()).then(|| self.k_min + i as i64 - 1)
    }
}

fn checked(x: f64, step: i64) -> Result<f64> {
    if x > 0.0 && x.is_finite() && x > f64::MIN_POSITIVE {
        Ok(x)
    } else {
        Err(Error::WindowExhausted { step })
    }
}

/// Orbit of `anchor` under `a⁻¹∘b` covering `[lo, hi]`: the first value is
/// `<= lo`, the last `>= hi`, and `anchor` has index 0.
pub fn orbit(boundaries: &BoundaryPair, anchor: f64, lo: f64, hi: f64) -> Result<XiSequence> {
    let mut fwd = vec![anchor];
    let mut x = anchor;
    let mut step = 0i64;
    while x < hi {
        step += 1;
        if step as usize > STEP_CAP {
            return Err(Error::WindowExhausted { step });
        }
        let nx = checked(boundaries.a_inv(boundaries.b(x)).map_err(|_| Error::WindowExhausted { step })?, step)?;
        if nx <= x {
            return Err(Error::WindowExhausted { step });
        }
        x = nx;
        fwd.push(x);
    }
    let mut back = Vec::new();
    let mut x = anchor;
    let mut step = 0i64;
    while x > lo {
        step -= 1;
        if (-step) as usize > STEP_CAP {
            return Err(Error::WindowExhausted { step });
        }
        let nx = checked(boundaries.b_inv(boundaries.a(x)).map_err(|_| Error::WindowExhausted { step })?, step)?;
        if nx >= x {
            return Err(Error::WindowExhausted { step });
        }
        x = nx;
        back.push(x);
    }
    let k_min = -(back.len() as i64);
    back.reverse();
    back.extend(fwd);
    // trim to the cells meeting [lo, hi]
    let first = back.partition_point(|&v| v <= lo).saturating_sub(1);
    let last = back.partition_point(|&v| v < hi).min(back.len() - 1);
    Ok(XiSequence {
        k_min: k_min + first as i64,
        values: back[first..=last].to_vec(),
    })
}

/// `ξ_k = (a⁻¹∘b)^k(1)` for every cell `[ξ_k, ξ_{k+1}]` meeting the window.
pub fn xi_sequence(boundaries: &BoundaryPair, window: &Window) -> Result<XiSequence> {
    orbit(boundaries, 1.0, window.lo, window.hi)
}

/// Refinement `x_{-j_a} = ξ_k < … < x_0 < … < x_{j_b} = ξ_{k+1}` of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub k: i64,
    pub points: Vec<f64>,
    pub j_a: usize,
    pub j_b: usize,
    /// `σ` is undefined on the cell (no `v` mass), so only the ends are kept.
    pub degenerate: bool,
}

impl Cell {
    pub fn xi_lo(&self) -> f64 {
        self.points[0]
    }

    pub fn xi_hi(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// `x_0 = σ⁻¹(b(ξ_k))`, absent for degenerate cells.
    pub fn x0(&self) -> Option<f64> {
        (!self.degenerate).then(|| self.points[self.j_a])
    }

    /// `x_j` for `j` in `-j_a ..= j_b`.
    pub fn x(&self, j: i64) -> Option<f64> {
        let i = j + self.j_a as i64;
        (i >= 0).then(|| self.points.get(i as usize).copied()).flatten()
    }

    /// Consecutive pairs `(x_j, x_{j+1})`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

fn zero_mass(e: &Error) -> bool {
    matches!(e, Error::ZeroMass { .. })
}

/// Items (1)-(5): `x_0 = σ⁻¹(b(ξ_k))`, then `σ⁻¹∘b` forward and `σ⁻¹∘a`
/// backward until the iterates leave `(ξ_k, ξ_{k+1})`.
pub fn x_refinement(
    boundaries: &BoundaryPair,
    fairway: &FairwayMap<'_>,
    k: i64,
    xi_lo: f64,
    xi_hi: f64,
) -> Result<Cell> {
    let degenerate = || Cell {
        k,
        points: vec![xi_lo, xi_hi],
        j_a: 1,
        j_b: 0,
        degenerate: true,
    };
    let x0 = match fairway.sigma_inverse(boundaries.b(xi_lo)) {
        Ok(x) => x,
        Err(e) if zero_mass(&e) => return Ok(degenerate()),
        Err(e) => return Err(e),
    };
    let x0 = x0.clamp(xi_lo, xi_hi);
    if !(x0 > xi_lo && x0 < xi_hi) {
        return Err(Error::NonTermination { k, steps: 0 });
    }
    let mut forward = Vec::new();
    let mut x = x0;
    loop {
        if forward.len() > STEP_CAP {
            return Err(Error::NonTermination { k, steps: forward.len() });
        }
        let nx = match fairway.sigma_inverse(boundaries.b(x)) {
            Ok(v) => v,
            Err(e) if zero_mass(&e) => return Ok(degenerate()),
            Err(e) => return Err(e),
        };
        if nx <= x {
            return Err(Error::NonTermination { k, steps: forward.len() });
        }
        if nx >= xi_hi * (1.0 - END_SLACK) {
            break;
        }
        forward.push(nx);
        x = nx;
    }
    let mut backward = Vec::new();
    let mut x = x0;
    loop {
        if backward.len() > STEP_CAP {
            return Err(Error::NonTermination { k, steps: backward.len() });
        }
        let nx = match fairway.sigma_inverse(boundaries.a(x)) {
            Ok(v) => v,
            Err(e) if zero_mass(&e) => return Ok(degenerate()),
            Err(e) => return Err(e),
        };
        if nx >= x {
            return Err(Error::NonTermination { k, steps: backward.len() });
        }
        if nx <= xi_lo * (1.0 + END_SLACK) {
            break;
        }
        backward.push(nx);
        x = nx;
    }
    let j_a = backward.len() + 1;
    let j_b = forward.len() + 1;
    let mut points = Vec::with_capacity(j_a + j_b + 1);
    points.push(xi_lo);
    points.extend(backward.into_iter().rev());
    points.push(x0);
    points.extend(forward);
    points.push(xi_hi);
    Ok(Cell {
        k,
        points,
        j_a,
        j_b,
        degenerate: false,
    })
}

/// `ξ` sequence and refinements for every cell meeting the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSystem {
    pub window: Window,
    pub xi: XiSequence,
    pub cells: Vec<Cell>,
}

impl GridSystem {
    pub fn build(problem: &Problem) -> Result<Self> {
        let xi = xi_sequence(&problem.boundaries, &problem.window)?;
        let fairway = problem.fairway();
        let cells = xi
            .values
            .par_windows(2)
            .enumerate()
            .map(|(i, w)| {
                x_refinement(&problem.boundaries, &fairway, xi.k_min + i as i64, w[0], w[1])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            window: problem.window,
            xi,
            cells,
        })
    }

    pub fn cell(&self, k: i64) -> Option<&Cell> {
        let i = k - self.xi.k_min;
        (i >= 0).then(|| self.cells.get(i as usize)).flatten()
    }

    /// Refinement pieces `(k, j, x_j, x_{j+1})` flattened lexicographically
    /// in `(k, j)`; the position in this list is the index `m`.
    pub fn flattened(&self) -> Vec<(i64, i64, f64, f64)> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.pieces()
                    .enumerate()
                    .map(move |(i, (l, r))| (c.k, i as i64 - c.j_a as i64, l, r))
            })
            .collect()
    }
}

/// `c ∈ (d, e)` with `∫_d^c w^p = ½ ∫_d^e w^p`.
pub fn median_point(weights: &WeightPair, d: f64, e: f64) -> Result<f64> {
    let total = weights.w_mass(d, e)?;
    if total == 0.0 {
        return Err(Error::ZeroMass { lo: d, hi: e });
    }
    let half = 0.5 * total;
    let opts = RootOptions {
        abs_tol: 0.0,
        ..RootOptions::default()
    };
    let c = solve_increasing(|c| Ok(weights.w_mass(d, c)? - half), d, e, &opts)?;
    let miss = (weights.w_mass(d, c)? - half).abs();
    // two quadratures are compared, so allow a little above tol_quad
    if miss > 1e-9 * total {
        return Err(Error::Convergence(format!(
            "median point of [{d}, {e}] misses half mass by {:e}",
            miss / total
        )));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalClass {
    /// `b(c_n) <= a(c_{n+1})`.
    #[serde(rename = "I1")]
    I1,
    /// Meets two neighbouring segments with positive measure.
    #[serde(rename = "I2_1")]
    I21,
    /// Inside a single segment.
    #[serde(rename = "I2_2")]
    I22,
}

impl std::fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntervalClass::I1 => "I1",
            IntervalClass::I21 => "I2_1",
            IntervalClass::I22 => "I2_2",
        })
    }
}

/// Points `c_0 < … < c_M` and intervals `I_n = (c_n, c_{n+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub points: Vec<f64>,
    pub classes: Vec<IntervalClass>,
    pub kappa: Vec<Option<f64>>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[1] > w[0])) || points[0] <= 0.0 {
            return Err(Error::Domain(
                "partition points must be positive and strictly increasing".into(),
            ));
        }
        let n = points.len() - 1;
        Ok(Self {
            points,
            classes: Vec::new(),
            kappa: vec![None; n],
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.points[n], self.points[n + 1])
    }
}

/// Where the segments `Δ_k` used by [`classify_intervals`] are anchored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Anchor {
    /// `ξ_0 = 1`.
    Grid,
    /// `ξ_0 = c` for a chosen point, e.g. the left end of the first
    /// non-`I1` interval.
    At(f64),
}

impl Anchor {
    fn value(self) -> f64 {
        match self {
            Anchor::Grid => 1.0,
            Anchor::At(c) => c,
        }
    }
}

fn is_type_one(boundaries: &BoundaryPair, c0: f64, c1: f64) -> bool {
    let (bc, ac) = (boundaries.b(c0), boundaries.a(c1));
    bc <= ac * (1.0 + 1e-12)
}

/// Tag every interval of `partition` with its class.
pub fn classify_intervals(
    partition: &Partition,
    boundaries: &BoundaryPair,
    anchor: Anchor,
) -> Result<Partition> {
    let lo = partition.points[0];
    let hi = *partition.points.last().unwrap();
    let seg = orbit(boundaries, anchor.value(), lo, hi)?;
    let classes = partition
        .points
        .windows(2)
        .map(|w| {
            let (c0, c1) = (w[0], w[1]);
            if is_type_one(boundaries, c0, c1) {
                return IntervalClass::I1;
            }
            let len = c1 - c0;
            let meets = seg
                .values
                .windows(2)
                .filter(|s| (c1.min(s[1]) - c0.max(s[0])) > 1e-12 * len)
                .count();
            if meets >= 2 {
                IntervalClass::I21
            } else {
                IntervalClass::I22
            }
        })
        .collect();
    Ok(Partition {
        classes,
        ..partition.clone()
    })
}

/// Left end of the first interval that is not of class `I1`.
pub fn first_type_two_anchor(partition: &Partition, boundaries: &BoundaryPair) -> Option<f64> {
    partition
        .points
        .windows(2)
        .find(|w| !is_type_one(boundaries, w[0], w[1]))
        .map(|w| w[0])
}
