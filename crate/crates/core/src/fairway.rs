//! The fairway `σ(t)`: the point of `(a(t), b(t))` splitting the
//! `v^{p'}`-mass of `[a(t), b(t)]` into equal halves, and its inverse.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{BoundaryPair, Tolerances, WeightPair};
use crate::roots::{solve_increasing, RootOptions};

#[derive(Debug, Clone, Copy)]
pub struct FairwayMap<'a> {
    boundaries: &'a BoundaryPair,
    weights: &'a WeightPair,
    tol: Tolerances,
    /// Optional `t` domain; `sigma_inverse` rejects values outside its image.
    domain: Option<(f64, f64)>,
}

/// A sampled pair `t1 < t2` with `σ(t1) >= σ(t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub t1: f64,
    pub t2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl<'a> FairwayMap<'a> {
    pub fn new(boundaries: &'a BoundaryPair, weights: &'a WeightPair, tol: Tolerances) -> Self {
        Self {
            boundaries,
            weights,
            tol,
            domain: None,
        }
    }

    /// Restrict `sigma_inverse` to the image of `[t_lo, t_hi]`.
    pub fn restricted_to(mut self, t_lo: f64, t_hi: f64) -> Self {
        self.domain = Some((t_lo, t_hi));
        self
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    fn root_opts() -> RootOptions {
        RootOptions {
            abs_tol: 0.0,
            x_rel_tol: 4.0 * f64::EPSILON,
            max_iter: 200,
        }
    }

    /// `σ(t)`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("fairway needs t > 0, got {t}")));
        }
        let (a, b) = (self.boundaries.a(t), self.boundaries.b(t));
        let total = self.weights.v_mass(a, b)?;
        if total == 0.0 {
            return Err(Error::ZeroMass { lo: a, hi: b });
        }
        if !total.is_finite() {
            return Err(Error::DivergentIntegral {
                lo: a,
                hi: b,
                end: crate::error::End::Interior,
            });
        }
        let half = 0.5 * total;
        let s = solve_increasing(
            |s| Ok(self.weights.v_mass(a, s)? - half),
            a,
            b,
            &Self::root_opts(),
        )?;
        let residual = self.balance_residual(t, s)?;
        if residual > self.tol.tol_fair {
            return Err(Error::Convergence(format!(
                "fairway balance residual {residual:e} at t = {t}"
            )));
        }
        Ok(s)
    }

    /// `|∫_{a(t)}^{s} v^{p'} − ∫_{s}^{b(t)} v^{p'}| / ∫_{a(t)}^{b(t)} v^{p'}`.
    pub fn balance_residual(&self, t: f64, s: f64) -> Result<f64> {
        let (a, b) = (self.boundaries.a(t), self.boundaries.b(t));
        let left = self.weights.v_mass(a, s)?;
        let right = self.weights.v_mass(s, b)?;
        let total = left + right;
        if total == 0.0 {
            return Err(Error::ZeroMass { lo: a, hi: b });
        }
        Ok((left - right).abs() / total)
    }

    /// `σ⁻¹(y)`, found directly from the balance
    /// `∫_{a(t)}^{y} v^{p'} = ∫_{y}^{b(t)} v^{p'}`, which decreases in `t`.
    pub fn sigma_inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Bracket {
                y,
                f_lo: 0.0,
                f_hi: f64::INFINITY,
            });
        }
        if let Some((lo, hi)) = self.domain {
            let (s_lo, s_hi) = (self.sigma(lo)?, self.sigma(hi)?);
            if y < s_lo || y > s_hi {
                return Err(Error::Bracket {
                    y,
                    f_lo: s_lo,
                    f_hi: s_hi,
                });
            }
        }
        let t_lo = self.boundaries.b_inv(y)?;
        let t_hi = self.boundaries.a_inv(y)?;
        let balance = |t: f64| -> Result<f64> {
            let left = self.weights.v_mass(self.boundaries.a(t), y)?;
            let right = self.weights.v_mass(y, self.boundaries.b(t))?;
            // increasing in t
            Ok(right - left)
        };
        let t = solve_increasing(balance, t_lo, t_hi, &Self::root_opts()).map_err(|e| match e {
            Error::Bracket { f_lo, f_hi, .. } => {
                if f_lo == 0.0 && f_hi == 0.0 {
                    Error::ZeroMass {
                        lo: self.boundaries.a(t_lo),
                        hi: self.boundaries.b(t_hi),
                    }
                } else {
                    Error::Bracket { y, f_lo, f_hi }
                }
            }
            other => other,
        })?;
        let left = self.weights.v_mass(self.boundaries.a(t), y)?;
        let right = self.weights.v_mass(y, self.boundaries.b(t))?;
        let total = left + right;
        if total == 0.0 {
            return Err(Error::ZeroMass {
                lo: self.boundaries.a(t),
                hi: self.boundaries.b(t),
            });
        }
        if (left - right).abs() > self.tol.tol_fair * total {
            return Err(Error::Convergence(format!(
                "inverse fairway balance residual {:e} at y = {y}",
                (left - right).abs() / total
            )));
        }
        Ok(t)
    }

    /// Evaluate `σ` on sorted samples and report every adjacent pair where it
    /// fails to increase.
    pub fn check_monotone(&self, ts: &[f64]) -> Result<Vec<MonotonicityViolation>> {
        let sig: Vec<f64> = ts.iter().map(|&t| self.sigma(t)).collect::<Result<_>>()?;
        Ok(ts
            .windows(2)
            .zip(sig.windows(2))
            .filter(|(_, s)| s[1] <= s[0])
            .map(|(t, s)| MonotonicityViolation {
                t1: t[0],
                t2: t[1],
                sigma1: s[0],
                sigma2: s[1],
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Weight;

    fn pair(a: f64, b: f64, v: Weight, p: f64) -> (BoundaryPair, WeightPair) {
        (
            BoundaryPair::linear(a, b).unwrap(),
            WeightPair::new(v, Weight::Const { c: 1.0 }, p).unwrap(),
        )
    }

    #[test]
    fn linear_family_with_unit_v_is_the_mean_slope() {
        let (bp, wp) = pair(1.0, 3.0, Weight::Const { c: 1.0 }, 2.0);
        let f = FairwayMap::new(&bp, &wp, Tolerances::default());
        assert!((f.sigma(1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((f.sigma_inverse(4.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_v_gives_midpoint_for_power_boundaries() {
        let bp = BoundaryPair::power(0.5, 2.0, 1.5).unwrap();
        let wp = WeightPair::new(Weight::Const { c: 1.0 }, Weight::Zero, 3.0).unwrap();
        let f = FairwayMap::new(&bp, &wp, Tolerances::default());
        for t in [0.01, 0.7, 5.0, 80.0] {
            let mid = 0.5 * (bp.a(t) + bp.b(t));
            assert!((f.sigma(t).unwrap() - mid).abs() <= 1e-12 * mid);
        }
    }

    #[test]
    fn linear_v_closed_form() {
        // v(y) = y, p' = 2: σ³ = (a³ + b³)/2 with a = 1, b = 2
        let (bp, wp) = pair(1.0, 2.0, Weight::Power { c: 1.0, beta: 1.0 }, 2.0);
        let f = FairwayMap::new(&bp, &wp, Tolerances::default());
        let want = 4.5f64.cbrt();
        assert!((f.sigma(1.0).unwrap() - want).abs() < 1e-12);
        assert!((f.sigma_inverse(want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_is_an_error() {
        let (bp, wp) = pair(1.0, 3.0, Weight::Zero, 2.0);
        let f = FairwayMap::new(&bp, &wp, Tolerances::default());
        assert!(matches!(f.sigma(1.0), Err(Error::ZeroMass { .. })));
        assert!(matches!(f.sigma_inverse(1.0), Err(Error::ZeroMass { .. })));
    }

    #[test]
    fn restricted_inverse_rejects_values_outside_image() {
        let (bp, wp) = pair(1.0, 3.0, Weight::Const { c: 1.0 }, 2.0);
        let f = FairwayMap::new(&bp, &wp, Tolerances::default()).restricted_to(1.0, 10.0);
        assert!(f.sigma_inverse(10.0).is_ok());
        assert!(matches!(f.sigma_inverse(30.0), Err(Error::Bracket { .. })));
        assert!(matches!(f.sigma_inverse(1.0), Err(Error::Bracket { .. })));
    }

    #[test]
    fn monotone_on_samples() {
        let bp = BoundaryPair::power(0.5, 2.0, 1.5).unwrap();
        let wp = WeightPair::new(
            Weight::PowerExp {
                c: 1.0,
                beta: -0.4,
                lambda: 0.3,
            },
            Weight::Zero,
            2.5,
        )
        .unwrap();
        let f = FairwayMap::new(&bp, &wp, Tolerances::default());
        let ts: Vec<f64> = (0..60).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 59.0)).collect();
        assert!(f.check_monotone(&ts).unwrap().is_empty());
    }
}
