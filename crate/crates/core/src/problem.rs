//! A configured operator: boundaries, weights, exponent and truncation window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairway::FairwayMap;
use crate::functions::{BoundaryPair, Tolerances, Weight, WeightPair};

/// Truncation window `[lo, hi] ⊂ (0, ∞)` in the `x` variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Domain(format!(
                "window must satisfy 0 < t_lo < t_hi < inf, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// `[x1, x2] ∩ [lo, hi]`, or `None` when the overlap is empty.
    pub fn clip(&self, x1: f64, x2: f64) -> Option<(f64, f64)> {
        let l = x1.max(self.lo);
        let h = x2.min(self.hi);
        (h > l).then_some((l, h))
    }
}

/// The operator `f ↦ χ_W(x) w(x) ∫_{a(x)}^{b(x)} f v` studied on a window.
///
/// Truncating `w` to the window turns the windowed operator into a
/// Hardy-Steklov operator of its own, so every functional below is the
/// functional of exactly the operator that gets discretized.
#[derive(Debug, Clone)]
pub struct Problem {
    pub boundaries: BoundaryPair,
    pub weights: WeightPair,
    pub window: Window,
    pub tol: Tolerances,
}

impl Problem {
    pub fn new(
        boundaries: BoundaryPair,
        weights: WeightPair,
        window: Window,
        tol: Tolerances,
    ) -> Result<Self> {
        let weights = weights.with_quad(tol.quad());
        let y_lo = boundaries.a(window.lo);
        let y_hi = boundaries.b(window.hi);
        // generous ranges: tail diagnostics look a few cells past the window
        let v_range = (y_lo * 1e-3, y_hi * 1e3);
        let w_range = (window.lo * 1e-3, window.hi * 1e3);
        let weights = weights.with_caches(v_range, w_range)?;
        Ok(Self {
            boundaries,
            weights,
            window,
            tol,
        })
    }

    /// Linear boundaries `Ax`, `Bx` with default tolerances.
    pub fn linear(a: f64, b: f64, v: Weight, w: Weight, p: f64, window: (f64, f64)) -> Result<Self> {
        Self::new(
            BoundaryPair::linear(a, b)?,
            WeightPair::new(v, w, p)?,
            Window::new(window.0, window.1)?,
            Tolerances::default(),
        )
    }

    pub fn p(&self) -> f64 {
        self.weights.p
    }

    pub fn p_conj(&self) -> f64 {
        self.weights.p_conj
    }

    pub fn fairway(&self) -> FairwayMap<'_> {
        FairwayMap::new(&self.boundaries, &self.weights, self.tol)
    }

    /// `∫ v^{p'}` over `[y1, y2]`.
    pub fn v_mass(&self, y1: f64, y2: f64) -> Result<f64> {
        self.weights.v_mass(y1, y2)
    }

    /// `∫ w^p` over `[x1, x2] ∩ window`.
    pub fn w_mass(&self, x1: f64, x2: f64) -> Result<f64> {
        match self.window.clip(x1, x2) {
            Some((l, h)) => self.weights.w_mass(l, h),
            None => Ok(0.0),
        }
    }

    /// `∫ w^p` over `[x1, x2]` ignoring the window.
    pub fn w_mass_untruncated(&self, x1: f64, x2: f64) -> Result<f64> {
        self.weights.w_mass(x1, x2)
    }

    /// Truncated weight `w·χ_W`.
    pub fn w(&self, x: f64) -> f64 {
        if self.window.contains(x) {
            self.weights.w.eval(x)
        } else {
            0.0
        }
    }

    pub fn v(&self, y: f64) -> f64 {
        self.weights.v.eval(y)
    }

    /// The `y` range `[a(t_lo), b(t_hi)]` seen by the windowed operator.
    pub fn y_window(&self) -> (f64, f64) {
        (
            self.boundaries.a(self.window.lo),
            self.boundaries.b(self.window.hi),
        )
    }
}
