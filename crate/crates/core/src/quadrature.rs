//! Adaptive Gauss-Kronrod quadrature, Gauss-Legendre rules and cached
//! cumulative integrals.
//!
//! The adaptive routine is globally adaptive: the panel with the largest
//! error estimate is bisected until the summed estimate drops below the
//! requested relative tolerance. Panels that reach the depth cap are frozen;
//! if frozen panels alone keep the estimate above tolerance the integral is
//! reported as divergent, which is how non-integrable endpoint singularities
//! surface.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::error::{End, Error, Result};

// 15-point Kronrod abscissae on [-1, 1] (positive half, centre last) and the
// weights of the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Settings for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_depth: 60,
            max_panels: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// One application of the 7/15 Gauss-Kronrod pair: (Kronrod value, |K - G|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        res_k += WGK[j] * s;
        if j % 2 == 1 {
            res_g += WG[j / 2] * s;
        }
    }
    (res_k * h, ((res_k - res_g) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive(f, b, a, opts).map(|v| -v);
    }
    let divergent = |end| Error::DivergentIntegral { lo: a, hi: b, end };
    let locate = |p: &Panel| {
        let span = b - a;
        if p.a - a < 1e-3 * span {
            End::Lower
        } else if b - p.b < 1e-3 * span {
            End::Upper
        } else {
            End::Interior
        }
    };

    let (v0, e0) = gk15(&f, a, b);
    if !v0.is_finite() || !e0.is_finite() {
        return Err(divergent(End::Interior));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        err: e0,
        depth: 0,
    });
    let mut frozen: Vec<Panel> = Vec::new();
    let mut total = v0;
    let mut err = e0;
    let mut panels = 1usize;

    loop {
        if err <= (opts.rel_tol * total.abs()).max(opts.abs_tol) {
            break;
        }
        let Some(worst) = heap.pop() else {
            let bad = frozen
                .iter()
                .max()
                .map(|p| locate(p))
                .unwrap_or(End::Interior);
            return Err(divergent(bad));
        };
        if worst.depth >= opts.max_depth {
            let end_panel = worst.a == a || worst.b == b;
            if end_panel {
                if let Some(p) = geometric_tail(&f, &worst, worst.a == a) {
                    total += p.value - worst.value;
                    err += p.err - worst.err;
                    frozen.push(p);
                    continue;
                }
            }
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            frozen.push(worst);
            continue;
        }
        let (vl, el) = gk15(&f, worst.a, mid);
        let (vr, er) = gk15(&f, mid, worst.b);
        if !(vl.is_finite() && vr.is_finite() && el.is_finite() && er.is_finite()) {
            return Err(divergent(locate(&worst)));
        }
        total += vl + vr - worst.value;
        err += el + er - worst.err;
        panels += 1;
        if panels > opts.max_panels {
            return Err(divergent(locate(&worst)));
        }
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: vl,
            err: el,
            depth: worst.depth + 1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: vr,
            err: er,
            depth: worst.depth + 1,
        });
        // running sums drift; refresh them now and then
        if panels % 64 == 0 {
            total = compensated_sum(heap.iter().chain(frozen.iter()).map(|p| p.value));
            err = heap.iter().chain(frozen.iter()).map(|p| p.err).sum();
        }
    }
    // sum in interval order for run-to-run stability
    let mut all: Vec<Panel> = heap.into_iter().chain(frozen).collect();
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(compensated_sum(all.iter().map(|p| p.value)))
}

/// Close an endpoint panel of an algebraic singularity: dyadic slices toward
/// the endpoint shrink geometrically, so their sum is extrapolated from three
/// slices. `None` when the ratios do not indicate a convergent tail.
fn geometric_tail<F: Fn(f64) -> f64>(f: &F, p: &Panel, lower: bool) -> Option<Panel> {
    let h = p.b - p.a;
    let slice = |j: i32| {
        let (o, i) = (h * 0.5f64.powi(j), h * 0.5f64.powi(j - 1));
        if lower {
            gk15(f, p.a + o, p.a + i).0
        } else {
            gk15(f, p.b - i, p.b - o).0
        }
    };
    let (g1, g2, g3) = (slice(1), slice(2), slice(3));
    if !(g1.is_finite() && g2.is_finite() && g3.is_finite()) || g1 == 0.0 {
        return None;
    }
    let (q1, q2) = (g2 / g1, g3 / g2);
    if !(q1 > 0.0 && q1 < 1.0 && q2 > 0.0 && q2 < 1.0) {
        return None;
    }
    let value = g1 + g2 / (1.0 - q2);
    let alt = g1 / (1.0 - q1);
    Some(Panel {
        a: p.a,
        b: p.b,
        value,
        err: (value - alt).abs(),
        depth: p.depth,
    })
}

/// Adaptive integration over consecutive pieces `[breaks[i], breaks[i+1]]`.
pub fn adaptive_pieces<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<f64> {
    let mut parts = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            parts.push(adaptive(&f, w[0], w[1], opts)?);
        }
    }
    Ok(compensated_sum(parts))
}

/// `∫_{t1}^{t2} u(y)^r dy` by adaptive quadrature.
///
/// Points where `u` vanishes contribute zero regardless of the sign of `r`.
pub fn integrate_power<U: Fn(f64) -> f64>(
    u: U,
    r: f64,
    t1: f64,
    t2: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if !(t1 >= 0.0 && t2 >= t1) {
        return Err(Error::Domain(format!(
            "integration limits must satisfy 0 <= t1 <= t2, got [{t1}, {t2}]"
        )));
    }
    if t1 == t2 {
        return Ok(0.0);
    }
    adaptive(|y| powered(u(y), r), t1, t2, opts)
}

/// `u^r` with the convention `0^r = 0`.
#[inline]
pub fn powered(u: f64, r: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else if r == 1.0 {
        u
    } else if r == 2.0 {
        u * u
    } else {
        u.powf(r)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule with `order` nodes on each panel
/// `[breaks[i], breaks[i+1]]`.
pub fn composite_gauss(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * breaks.len());
    let mut weights = Vec::with_capacity(order * breaks.len());
    for w in breaks.windows(2) {
        let c = 0.5 * (w[0] + w[1]);
        let h = 0.5 * (w[1] - w[0]);
        for (x, wt) in gx.iter().zip(&gw) {
            nodes.push(c + h * x);
            weights.push(h * wt);
        }
    }
    (nodes, weights)
}

/// `n + 1` points from `lo` to `hi`, geometric when the range spans more than
/// a factor of four and `lo > 0`, uniform otherwise.
pub fn spaced_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let geometric = lo > 0.0 && hi / lo > 4.0;
    let mut out: Vec<f64> = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            if geometric {
                lo * (hi / lo).powf(s)
            } else {
                lo + (hi - lo) * s
            }
        })
        .collect();
    out[0] = lo;
    out[n] = hi;
    out
}

type SharedFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cached antiderivative of `u^r` on a log-spaced grid.
///
/// Queries inside the cached range sum whole panels and integrate only the
/// two partial end panels; anything outside falls back to direct adaptive
/// quadrature.
#[derive(Clone)]
pub struct CumulativeIntegral {
    func: SharedFn,
    power: f64,
    reference: f64,
    grid: Vec<f64>,
    panel_mass: Vec<f64>,
    opts: QuadOptions,
}

impl std::fmt::Debug for CumulativeIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CumulativeIntegral")
            .field("power", &self.power)
            .field("reference", &self.reference)
            .field("panels", &self.panel_mass.len())
            .finish()
    }
}

impl CumulativeIntegral {
    /// Tabulate `∫ u^r` over `[lo, hi]` with `panels_per_decade` panels per
    /// factor of ten. The reference point `t0` is the origin of
    /// [`CumulativeIntegral::antiderivative`].
    pub fn build(
        func: SharedFn,
        power: f64,
        lo: f64,
        hi: f64,
        t0: f64,
        panels_per_decade: usize,
        opts: QuadOptions,
    ) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain(format!(
                "cumulative integral range must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        let decades = (hi / lo).log10();
        let n = ((decades * panels_per_decade as f64).ceil() as usize).max(1);
        let grid = spaced_points(lo, hi, n);
        let mut panel_mass = Vec::with_capacity(n);
        for w in grid.windows(2) {
            let f = &func;
            panel_mass.push(integrate_power(|y| f(y), power, w[0], w[1], &opts)?);
        }
        Ok(Self {
            func,
            power,
            reference: t0,
            grid,
            panel_mass,
            opts,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    fn direct(&self, t1: f64, t2: f64) -> Result<f64> {
        let f = &self.func;
        integrate_power(|y| f(y), self.power, t1, t2, &self.opts)
    }

    fn panel_of(&self, t: f64) -> usize {
        // index i with grid[i] <= t < grid[i+1]
        let idx = self.grid.partition_point(|&g| g <= t);
        idx.saturating_sub(1).min(self.panel_mass.len() - 1)
    }

    /// `∫_{t1}^{t2} u^r` for `0 <= t1 <= t2`.
    pub fn between(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 >= 0.0 && t2 >= t1) {
            return Err(Error::Domain(format!(
                "integration limits must satisfy 0 <= t1 <= t2, got [{t1}, {t2}]"
            )));
        }
        if t1 == t2 {
            return Ok(0.0);
        }
        let (lo, hi) = self.range();
        let mut parts = Vec::with_capacity(4);
        if t1 < lo {
            parts.push(self.direct(t1, t2.min(lo))?);
        }
        if t2 > hi {
            parts.push(self.direct(t1.max(hi), t2)?);
        }
        let c1 = t1.max(lo);
        let c2 = t2.min(hi);
        if c2 > c1 {
            let i1 = self.panel_of(c1);
            let i2 = self.panel_of(c2);
            if i1 == i2 {
                parts.push(self.direct(c1, c2)?);
            } else {
                parts.push(self.direct(c1, self.grid[i1 + 1])?);
                parts.extend(self.panel_mass[i1 + 1..i2].iter().copied());
                if c2 > self.grid[i2] {
                    parts.push(self.direct(self.grid[i2], c2)?);
                }
            }
        }
        Ok(compensated_sum(parts))
    }

    /// Signed integral from the reference point to `t`.
    pub fn antiderivative(&self, t: f64) -> Result<f64> {
        if t >= self.reference {
            self.between(self.reference, t)
        } else {
            self.between(t, self.reference).map(|v| -v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        for deg in 0..=22 {
            let (v, _) = gk15(&|x: f64| x.powi(deg), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {deg}: {v} vs {exact}");
        }
    }

    #[test]
    fn gauss_legendre_matches_embedded_gauss_nodes() {
        let (x, w) = gauss_legendre(7);
        assert!((x[6] - XGK[1]).abs() < 1e-15);
        assert!((x[5] - XGK[3]).abs() < 1e-15);
        assert!((x[4] - XGK[5]).abs() < 1e-15);
        assert!((w[6] - WG[0]).abs() < 1e-15);
        assert!((w[3] - WG[3]).abs() < 1e-15);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for n in [1usize, 2, 4, 9, 20] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((v - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn integrate_power_examples() {
        let o = QuadOptions::default();
        let v = integrate_power(|_| 1.0, 1.0, 2.0, 5.0, &o).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        let v = integrate_power(|y| y, 2.0, 0.0, 1.0, &o).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        let v = integrate_power(|y: f64| y.powf(-0.25), 2.0, 0.0, 1.0, &o).unwrap();
        assert!((v - 2.0).abs() < 2e-10, "{v}");
        assert_eq!(integrate_power(|y| y, 1.0, 3.0, 3.0, &o).unwrap(), 0.0);
    }

    #[test]
    fn non_integrable_singularity_is_reported() {
        let o = QuadOptions::default();
        let r = integrate_power(|y: f64| 1.0 / y, 1.0, 0.0, 1.0, &o);
        assert!(
            matches!(r, Err(Error::DivergentIntegral { end: End::Lower, .. })),
            "{r:?}"
        );
    }

    #[test]
    fn strong_integrable_singularities() {
        let o = QuadOptions::default();
        for s in [-0.6, -0.9, -0.97] {
            let want = 1.0 / (1.0 + s);
            let got = adaptive(|y: f64| y.powf(s), 0.0, 1.0, &o).unwrap();
            assert!((got - want).abs() <= 1e-9 * want, "s={s}: {got}");
        }
        let r = adaptive(|y: f64| (2.0 - y).recip(), 0.0, 2.0, &o);
        assert!(matches!(r, Err(Error::DivergentIntegral { end: End::Upper, .. })));
    }

    #[test]
    fn reversed_limits_are_rejected() {
        let o = QuadOptions::default();
        assert!(integrate_power(|y| y, 1.0, 2.0, 1.0, &o).is_err());
    }

    #[test]
    fn cumulative_matches_direct_and_is_additive() {
        let f: SharedFn = Arc::new(|y: f64| y.powf(-0.5) * (-0.1 * y).exp());
        let c = CumulativeIntegral::build(f.clone(), 2.0, 0.01, 100.0, 1.0, 8, QuadOptions::default())
            .unwrap();
        let o = QuadOptions::default();
        for (t1, t2) in [(0.02, 0.5), (0.3, 70.0), (0.001, 0.02), (50.0, 300.0), (0.005, 500.0)] {
            let want = integrate_power(|y| f(y), 2.0, t1, t2, &o).unwrap();
            let got = c.between(t1, t2).unwrap();
            assert!((got - want).abs() <= 1e-9 * want, "[{t1},{t2}] {got} vs {want}");
        }
        let a = c.between(0.05, 3.0).unwrap() + c.between(3.0, 40.0).unwrap();
        let b = c.between(0.05, 40.0).unwrap();
        assert!((a - b).abs() <= 1e-9 * b);
        assert!(c.antiderivative(0.5).unwrap() < 0.0);
        assert!(c.antiderivative(2.0).unwrap() > 0.0);
    }
}
