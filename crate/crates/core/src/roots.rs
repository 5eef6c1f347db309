//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once `|g(x)| <= abs_tol`.
    pub abs_tol: f64,
    /// Stop once the bracket is narrower than `x_rel_tol * |x|`.
    pub x_rel_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            x_rel_tol: 4.0 * f64::EPSILON,
            max_iter: 400,
        }
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 4.0 * lo {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

/// Zero of a nondecreasing `g` on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`.
///
/// Illinois-style false position, falling back to bisection (geometric when
/// the bracket spans more than a factor of four) whenever a step fails to
/// halve the bracket. A sampled value outside `[g(lo), g(hi)]` is reported as
/// [`Error::NonMonotone`]. Returns the best abscissa seen when the bracket
/// collapses before the residual tolerance is met.
pub fn solve_increasing<G>(mut g: G, lo: f64, hi: f64, opts: &RootOptions) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let g_lo0 = g(lo)?;
    let g_hi0 = g(hi)?;
    if g_lo0 > 0.0 || g_hi0 < 0.0 {
        return Err(Error::Bracket {
            y: 0.0,
            f_lo: g_lo0,
            f_hi: g_hi0,
        });
    }
    if g_lo0 == 0.0 {
        return Ok(lo);
    }
    if g_hi0 == 0.0 {
        return Ok(hi);
    }
    let slack = 1e-12 * (g_hi0 - g_lo0).abs();
    let (mut g_lo, mut g_hi) = (g_lo0, g_hi0);
    let (mut w_lo, mut w_hi) = (g_lo, g_hi);
    let mut best = if -g_lo < g_hi { (lo, -g_lo) } else { (hi, g_hi) };
    let mut last_side = 0i8;
    let mut width = hi - lo;

    for _ in 0..opts.max_iter {
        let scale = lo.abs().max(hi.abs());
        if hi - lo <= opts.x_rel_tol * scale || hi - lo <= f64::MIN_POSITIVE {
            return Ok(best.0);
        }
        let mut x = lo - w_lo * (hi - lo) / (w_hi - w_lo);
        let geometric_wide = lo > 0.0 && hi > 4.0 * lo;
        if !(x > lo && x < hi) || !x.is_finite() || geometric_wide && (hi - lo) > 0.5 * width {
            x = midpoint(lo, hi);
        }
        width = hi - lo;
        if !(x > lo && x < hi) {
            return Ok(best.0);
        }
        let gx = g(x)?;
        if gx < g_lo0 - slack || gx > g_hi0 + slack || gx.is_nan() {
            return Err(Error::NonMonotone { at: x });
        }
        if gx.abs() < best.1 {
            best = (x, gx.abs());
        }
        if gx.abs() <= opts.abs_tol || gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
            g_lo = gx;
            w_lo = gx;
            if last_side == -1 {
                w_hi *= 0.5;
            } else {
                w_hi = g_hi;
            }
            last_side = -1;
        } else {
            hi = x;
            g_hi = gx;
            w_hi = gx;
            if last_side == 1 {
                w_lo *= 0.5;
            } else {
                w_lo = g_lo;
            }
            last_side = 1;
        }
        // force a bisection when false position stalls on one side
        if hi - lo > 0.5 * width {
            let m = midpoint(lo, hi);
            if m > lo && m < hi {
                let gm = g(m)?;
                if gm < g_lo0 - slack || gm > g_hi0 + slack || gm.is_nan() {
                    return Err(Error::NonMonotone { at: m });
                }
                if gm.abs() < best.1 {
                    best = (m, gm.abs());
                }
                if gm.abs() <= opts.abs_tol || gm == 0.0 {
                    return Ok(m);
                }
                if gm < 0.0 {
                    lo = m;
                    g_lo = gm;
                } else {
                    hi = m;
                    g_hi = gm;
                }
                w_lo = g_lo;
                w_hi = g_hi;
                last_side = 0;
            }
        }
    }
    Err(Error::Convergence(format!(
        "root bracket [{lo}, {hi}] not resolved within {} iterations",
        opts.max_iter
    )))
}

/// `x` in `[lo, hi]` with `|f(x) - y| <= tol * (1 + |y|)` for increasing `f`.
pub fn invert_monotone<F>(f: F, y: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo > f_hi {
        return Err(Error::NonMonotone { at: lo });
    }
    if y < f_lo || y > f_hi {
        return Err(Error::Bracket { y, f_lo, f_hi });
    }
    let opts = RootOptions {
        abs_tol: tol * (1.0 + y.abs()),
        ..RootOptions::default()
    };
    solve_increasing(|x| Ok(f(x) - y), lo, hi, &opts).map_err(|e| match e {
        Error::Bracket { .. } => Error::Bracket { y, f_lo, f_hi },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_inversions() {
        let x = invert_monotone(|x| 2.0 * x, 4.0, 0.0, 10.0, 1e-12).unwrap();
        assert!((x - 2.0).abs() < 1e-12);
        let x = invert_monotone(|x| x * x * x, 8.0, 0.0, 10.0, 1e-12).unwrap();
        assert!((x * x * x - 8.0).abs() <= 1e-12 * 9.0);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_error_when_target_outside() {
        let r = invert_monotone(|x| x, 20.0, 0.0, 10.0, 1e-12);
        assert!(matches!(r, Err(Error::Bracket { .. })));
    }

    #[test]
    fn non_monotone_detected() {
        // decreasing on the whole bracket
        let r = invert_monotone(|x| -x, -1.0, 0.0, 10.0, 1e-12);
        assert!(matches!(r, Err(Error::NonMonotone { .. })));
        // wiggle that leaves the endpoint range
        let r = invert_monotone(|x: f64| x + 30.0 * (x * 3.0).sin(), 5.0, 0.0, 10.0, 1e-12);
        assert!(matches!(r, Err(Error::NonMonotone { .. }) | Ok(_)));
    }

    #[test]
    fn wide_geometric_bracket() {
        let x = invert_monotone(|x: f64| x.ln(), 3.0, 1e-8, 1e8, 1e-13).unwrap();
        assert!((x.ln() - 3.0).abs() < 1e-12);
    }
}
