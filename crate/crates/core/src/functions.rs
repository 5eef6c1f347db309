//! Boundary and weight functions.
//!
//! Boundaries come from a fixed registry (linear, power, tabulated) and are
//! strictly increasing maps of the half-line with computable inverses.
//! Weights are nonnegative functions whose powers `v^{p'}` and `w^p` are
//! integrated in closed form when the family allows it and by adaptive
//! quadrature otherwise.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_pieces, powered, CumulativeIntegral, QuadOptions};
use crate::roots::invert_monotone;

/// Numerical tolerances shared by all modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of monotone inversions.
    pub tol_inv: f64,
    /// Relative tolerance of adaptive quadrature.
    pub tol_quad: f64,
    /// Relative balance residual allowed for the fairway.
    pub tol_fair: f64,
    /// Budget for discarded tail cells in `Σ ν̃_k^α`.
    pub tail_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_inv: 1e-12,
            tol_quad: 1e-10,
            tol_fair: 1e-9,
            tail_tol: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn quad(&self) -> QuadOptions {
        QuadOptions::with_rel_tol(self.tol_quad)
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes,
/// weighted harmonic mean in the interior, one-sided secants at the ends)
/// with linear extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// Requires at least two samples, strictly increasing `x` and strictly
    /// increasing `y`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Domain(format!(
                "tabulated map needs matching sample vectors of length >= 2 (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated samples must be finite".into()));
        }
        for i in 1..x.len() {
            if x[i] <= x[i - 1] {
                return Err(Error::Domain(format!(
                    "tabulated abscissae must be strictly increasing (index {i})"
                )));
            }
            if y[i] <= y[i - 1] {
                return Err(Error::Domain(format!(
                    "tabulated values must be strictly increasing (index {i})"
                )));
            }
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
        Ok(Self { x, y, d })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.x.partition_point(|&k| k <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn inverse(&self, v: f64, tol: f64) -> Result<f64> {
        let n = self.x.len();
        if v <= self.y[0] {
            return Ok(self.x[0] + (v - self.y[0]) / self.d[0]);
        }
        if v >= self.y[n - 1] {
            return Ok(self.x[n - 1] + (v - self.y[n - 1]) / self.d[n - 1]);
        }
        let i = self.y.partition_point(|&k| k <= v) - 1;
        if self.y[i] == v {
            return Ok(self.x[i]);
        }
        invert_monotone(|t| self.eval(t), v, self.x[i], self.x[i + 1], tol)
    }
}

/// Strictly increasing map of the half-line onto itself.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneMap {
    Linear { slope: f64 },
    Power { coef: f64, gamma: f64 },
    /// Monotone cubic through `(ln x, ln f(x))`, power-law extrapolation.
    LogTabulated(MonotoneCubic),
}

impl MonotoneMap {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            MonotoneMap::Linear { slope } => slope * x,
            MonotoneMap::Power { coef, gamma } => coef * x.powf(*gamma),
            MonotoneMap::LogTabulated(c) => {
                if x.is_infinite() {
                    return f64::INFINITY;
                }
                c.eval(x.ln()).exp()
            }
        }
    }

    pub fn inverse(&self, y: f64, tol: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        match self {
            MonotoneMap::Linear { slope } => Ok(y / slope),
            MonotoneMap::Power { coef, gamma } => Ok((y / coef).powf(1.0 / gamma)),
            MonotoneMap::LogTabulated(c) => {
                if y.is_infinite() {
                    return Ok(f64::INFINITY);
                }
                // tolerance in log space is relative in y
                c.inverse(y.ln(), tol).map(f64::exp)
            }
        }
    }
}

/// Boundary family as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryFamily {
    /// `a(x) = A x`, `b(x) = B x`.
    Linear {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
    /// `a(x) = A x^γ`, `b(x) = B x^γ`.
    Power {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        gamma: f64,
    },
    /// Samples of `a` and `b` at the abscissae `x`.
    Tabulated { x: Vec<f64>, a: Vec<f64>, b: Vec<f64> },
}

/// The moving limits `a(x) < b(x)` of the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub a: MonotoneMap,
    pub b: MonotoneMap,
    pub family: BoundaryFamily,
    tol_inv: f64,
}

impl BoundaryPair {
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        Self::from_family(BoundaryFamily::Linear { a, b }, Tolerances::default().tol_inv)
    }

    pub fn power(a: f64, b: f64, gamma: f64) -> Result<Self> {
        Self::from_family(
            BoundaryFamily::Power { a, b, gamma },
            Tolerances::default().tol_inv,
        )
    }

    pub fn from_family(family: BoundaryFamily, tol_inv: f64) -> Result<Self> {
        let (a, b) = match &family {
            BoundaryFamily::Linear { a, b } => {
                check_coefficients(*a, *b)?;
                (
                    MonotoneMap::Linear { slope: *a },
                    MonotoneMap::Linear { slope: *b },
                )
            }
            BoundaryFamily::Power { a, b, gamma } => {
                check_coefficients(*a, *b)?;
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::Domain(format!(
                        "power boundary exponent must be positive, got {gamma}"
                    )));
                }
                (
                    MonotoneMap::Power {
                        coef: *a,
                        gamma: *gamma,
                    },
                    MonotoneMap::Power {
                        coef: *b,
                        gamma: *gamma,
                    },
                )
            }
            BoundaryFamily::Tabulated { x, a, b } => {
                let pos = |v: &[f64], name: &str| -> Result<Vec<f64>> {
                    if v.iter().any(|s| !(*s > 0.0)) {
                        return Err(Error::Domain(format!(
                            "tabulated {name} samples must be positive"
                        )));
                    }
                    Ok(v.iter().map(|s| s.ln()).collect())
                };
                let lx = pos(x, "x")?;
                let la = MonotoneCubic::new(lx.clone(), pos(a, "a")?)?;
                let lb = MonotoneCubic::new(lx, pos(b, "b")?)?;
                (MonotoneMap::LogTabulated(la), MonotoneMap::LogTabulated(lb))
            }
        };
        let pair = Self {
            a,
            b,
            family,
            tol_inv,
        };
        pair.validate()?;
        Ok(pair)
    }

    /// Check `a < b`, positivity and inverse consistency on 10³ log-spaced
    /// points of `[1e-6, 1e6]`.
    pub fn validate(&self) -> Result<()> {
        for i in 0..1000 {
            let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 999.0);
            let (ax, bx) = (self.a.eval(x), self.b.eval(x));
            if !(ax > 0.0 && ax.is_finite() && bx.is_finite()) {
                return Err(Error::Domain(format!("boundary not positive/finite at x = {x}")));
            }
            if ax >= bx {
                return Err(Error::Domain(format!("a(x) < b(x) violated at x = {x}")));
            }
            for (m, y) in [(&self.a, ax), (&self.b, bx)] {
                let back = m.eval(m.inverse(y, self.tol_inv)?);
                // tabulated maps invert in log space, so the error is relative in y
                let allowed = 10.0 * self.tol_inv * (1.0 + y.abs()) * (1.0 + y.ln().abs());
                if (back - y).abs() > allowed {
                    return Err(Error::Domain(format!(
                        "boundary inverse inconsistent at y = {y}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn a(&self, x: f64) -> f64 {
        self.a.eval(x)
    }

    pub fn b(&self, x: f64) -> f64 {
        self.b.eval(x)
    }

    pub fn a_inv(&self, y: f64) -> Result<f64> {
        self.a.inverse(y, self.tol_inv)
    }

    pub fn b_inv(&self, y: f64) -> Result<f64> {
        self.b.inverse(y, self.tol_inv)
    }

    /// Ratio `B/A` when both boundaries are linear.
    pub fn linear_ratio(&self) -> Option<f64> {
        match self.family {
            BoundaryFamily::Linear { a, b } => Some(b / a),
            _ => None,
        }
    }
}

fn check_coefficients(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a > 0.0) {
        return Err(Error::Domain(format!(
            "boundary coefficients must be positive and finite, got A = {a}, B = {b}"
        )));
    }
    if a >= b {
        return Err(Error::Domain(format!(
            "a(x) < b(x) violated: A = {a} must be smaller than B = {b}"
        )));
    }
    Ok(())
}

/// Nonnegative weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    Zero,
    /// `c`.
    Const { c: f64 },
    /// `c·y^β`.
    Power {
        #[serde(default = "one")]
        c: f64,
        beta: f64,
    },
    /// `c·y^β·e^{-λy}`.
    PowerExp {
        #[serde(default = "one")]
        c: f64,
        beta: f64,
        lambda: f64,
    },
    /// Piecewise-linear through samples, constant beyond the end samples.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Weight {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |c: f64| {
            if c.is_finite() && c >= 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("weight coefficient must be >= 0, got {c}")))
            }
        };
        match self {
            Weight::Zero => Ok(()),
            Weight::Const { c } => nonneg(*c),
            Weight::Power { c, beta } => {
                nonneg(*c)?;
                if beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain("power weight exponent must be finite".into()))
                }
            }
            Weight::PowerExp { c, beta, lambda } => {
                nonneg(*c)?;
                if beta.is_finite() && lambda.is_finite() && *lambda >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(
                        "power-exp weight needs finite beta and lambda >= 0".into(),
                    ))
                }
            }
            Weight::Tabulated { x, y } => {
                if x.len() != y.len() || x.is_empty() {
                    return Err(Error::Domain(
                        "tabulated weight needs matching non-empty samples".into(),
                    ));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain(
                        "tabulated weight abscissae must be finite and strictly increasing".into(),
                    ));
                }
                if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Domain("tabulated weight values must be >= 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Weight::Zero => 0.0,
            Weight::Const { c } => *c,
            Weight::Power { c, beta } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * y.powf(*beta)
                }
            }
            Weight::PowerExp { c, beta, lambda } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * y.powf(*beta) * (-lambda * y).exp()
                }
            }
            Weight::Tabulated { x, y: vals } => {
                let n = x.len();
                if y <= x[0] {
                    return vals[0];
                }
                if y >= x[n - 1] {
                    return vals[n - 1];
                }
                let i = x.partition_point(|&k| k <= y) - 1;
                let s = (y - x[i]) / (x[i + 1] - x[i]);
                vals[i] + s * (vals[i + 1] - vals[i])
            }
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Weight::Zero => true,
            Weight::Const { c } | Weight::Power { c, .. } | Weight::PowerExp { c, .. } => *c == 0.0,
            Weight::Tabulated { y, .. } => y.iter().all(|v| *v == 0.0),
        }
    }

    /// True for `Const { c: 1 }`.
    pub fn is_unit_constant(&self) -> bool {
        matches!(self, Weight::Const { c } if *c == 1.0)
    }

    /// `∫_{t1}^{t2} u^r` in closed form where the family has one.
    pub fn closed_power_mass(&self, r: f64, t1: f64, t2: f64) -> Option<Result<f64>> {
        if t1 == t2 {
            return Some(Ok(0.0));
        }
        match self {
            Weight::Zero => Some(Ok(0.0)),
            Weight::Const { c } => Some(Ok(powered(*c, r) * (t2 - t1))),
            Weight::Power { c, beta } => {
                if *c == 0.0 {
                    return Some(Ok(0.0));
                }
                let q = beta * r + 1.0;
                let scale = c.powf(r);
                let v = if t1 == 0.0 {
                    if q > 0.0 {
                        t2.powf(q) / q
                    } else {
                        return Some(Err(Error::DivergentIntegral {
                            lo: t1,
                            hi: t2,
                            end: crate::error::End::Lower,
                        }));
                    }
                } else {
                    let log_ratio = ((t2 - t1) / t1).ln_1p();
                    if q == 0.0 {
                        log_ratio
                    } else {
                        t1.powf(q) * (q * log_ratio).exp_m1() / q
                    }
                };
                Some(Ok(scale * v))
            }
            Weight::PowerExp { .. } | Weight::Tabulated { .. } => None,
        }
    }

    fn knots(&self) -> &[f64] {
        match self {
            Weight::Tabulated { x, .. } => x,
            _ => &[],
        }
    }
}

/// Which side of the pair a mass query concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    V,
    W,
}

/// The weights `v`, `w` with the exponent `p`.
#[derive(Debug, Clone)]
pub struct WeightPair {
    pub v: Weight,
    pub w: Weight,
    pub p: f64,
    pub p_conj: f64,
    /// Use closed-form antiderivatives where available.
    pub analytic: bool,
    quad: QuadOptions,
    v_cache: Option<Arc<CumulativeIntegral>>,
    w_cache: Option<Arc<CumulativeIntegral>>,
}

impl WeightPair {
    pub fn new(v: Weight, w: Weight, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Domain(format!("exponent p must lie in (1, inf), got {p}")));
        }
        v.validate()?;
        w.validate()?;
        Ok(Self {
            v,
            w,
            p,
            p_conj: p / (p - 1.0),
            analytic: true,
            quad: Tolerances::default().quad(),
            v_cache: None,
            w_cache: None,
        })
    }

    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    /// Force every mass through adaptive quadrature.
    pub fn without_closed_forms(mut self) -> Self {
        self.analytic = false;
        self
    }

    /// Tabulate cumulative integrals for families without closed forms.
    pub fn with_caches(mut self, v_range: (f64, f64), w_range: (f64, f64)) -> Result<Self> {
        let analytic = self.analytic;
        let needs = |u: &Weight| {
            !analytic || !matches!(u, Weight::Zero | Weight::Const { .. } | Weight::Power { .. })
        };
        if needs(&self.v) && v_range.0 > 0.0 && v_range.1 > v_range.0 {
            let v = self.v.clone();
            self.v_cache = Some(Arc::new(CumulativeIntegral::build(
                Arc::new(move |y| v.eval(y)),
                self.p_conj,
                v_range.0,
                v_range.1,
                v_range.0,
                16,
                self.quad,
            )?));
        }
        if needs(&self.w) && w_range.0 > 0.0 && w_range.1 > w_range.0 {
            let w = self.w.clone();
            self.w_cache = Some(Arc::new(CumulativeIntegral::build(
                Arc::new(move |y| w.eval(y)),
                self.p,
                w_range.0,
                w_range.1,
                w_range.0,
                16,
                self.quad,
            )?));
        }
        Ok(self)
    }

    pub fn weight(&self, side: Side) -> &Weight {
        match side {
            Side::V => &self.v,
            Side::W => &self.w,
        }
    }

    pub fn exponent(&self, side: Side) -> f64 {
        match side {
            Side::V => self.p_conj,
            Side::W => self.p,
        }
    }

    /// `∫_{t1}^{t2} v^{p'}` (side V) or `∫_{t1}^{t2} w^p` (side W); zero when
    /// `t2 <= t1`.
    pub fn mass(&self, side: Side, t1: f64, t2: f64) -> Result<f64> {
        if !(t2 > t1) {
            return Ok(0.0);
        }
        let t1 = t1.max(0.0);
        let u = self.weight(side);
        let r = self.exponent(side);
        if u.is_identically_zero() {
            return Ok(0.0);
        }
        if self.analytic {
            if let Some(v) = u.closed_power_mass(r, t1, t2) {
                return v;
            }
        }
        let cache = match side {
            Side::V => self.v_cache.as_deref(),
            Side::W => self.w_cache.as_deref(),
        };
        if let Some(c) = cache {
            return c.between(t1, t2);
        }
        let mut breaks = vec![t1];
        breaks.extend(u.knots().iter().copied().filter(|k| *k > t1 && *k < t2));
        breaks.push(t2);
        adaptive_pieces(|y| powered(u.eval(y), r), &breaks, &self.quad)
    }

    pub fn v_mass(&self, y1: f64, y2: f64) -> Result<f64> {
        self.mass(Side::V, y1, y2)
    }

    pub fn w_mass(&self, x1: f64, x2: f64) -> Result<f64> {
        self.mass(Side::W, x1, x2)
    }
}
