//! `𝒦(I) = sup ‖w(Hf − H_I f)‖_{2,I} / ‖f‖_2` and its two-sided bound.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{require_p2, top_singular_value, x_nodes, y_breaks};
use crate::error::{Error, Result};
use crate::grids::{median_point, orbit};
use crate::problem::Problem;

/// Gauss nodes on each half `[d, c]`, `[c, e]` of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaResolution {
    pub nodes_per_half: usize,
}

impl Default for KappaResolution {
    fn default() -> Self {
        Self { nodes_per_half: 96 }
    }
}

impl KappaResolution {
    pub fn doubled(self) -> Self {
        Self {
            nodes_per_half: 2 * self.nodes_per_half,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    pub d: f64,
    pub e: f64,
    /// Median point: `∫_d^c w² = ½ ∫_d^e w²`.
    pub c: f64,
    pub kappa: f64,
    /// `¼(L1 + L2)`.
    pub lower: f64,
    /// `2‖w H̄‖`.
    pub upper: f64,
    /// `sup ‖w_d H f‖/‖f‖` over `supp f ⊆ [a(d), a(c)]`.
    pub l1: f64,
    /// `sup ‖w_e H f‖/‖f‖` over `supp f ⊆ [b(c), b(e)]`.
    pub l2: f64,
    /// `[b⁻¹(a(c)), a⁻¹(b(c))]`.
    pub viewless_zone: (f64, f64),
    /// Segments `Δ_k ⊂ I` meeting the viewless zone.
    pub hidden_cells: Vec<i64>,
    pub note: String,
}

struct Assembled {
    x: Vec<f64>,
    u: Vec<f64>,
    breaks: Vec<f64>,
    vcol: Vec<f64>,
    split: usize,
    c: f64,
    d: f64,
    e: f64,
}

fn assemble(problem: &Problem, d: f64, e: f64, res: KappaResolution) -> Result<Option<Assembled>> {
    require_p2(problem)?;
    let Some((d, e)) = problem.window.clip(d, e) else {
        return Ok(None);
    };
    let wm = problem.w_mass(d, e)?;
    if wm == 0.0 {
        return Err(Error::ZeroMass { lo: d, hi: e });
    }
    let c = median_point(&problem.weights, d, e)?;
    let (mut x, mut om) = x_nodes(d, c, res.nodes_per_half);
    let split = x.len();
    let (x2, om2) = x_nodes(c, e, res.nodes_per_half);
    x.extend(x2);
    om.extend(om2);
    let bd = &problem.boundaries;
    let (ylo, yhi) = (bd.a(d), bd.b(e));
    let mut pts: Vec<f64> = x.iter().flat_map(|&t| [bd.a(t), bd.b(t)]).collect();
    pts.extend([bd.a(c), bd.b(c)]);
    let breaks = y_breaks(pts, ylo, yhi);
    let vcol = breaks
        .windows(2)
        .map(|w| Ok(problem.v_mass(w[0], w[1])?.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let u = x
        .iter()
        .zip(&om)
        .map(|(&t, &w)| w.sqrt() * problem.w(t))
        .collect();
    Ok(Some(Assembled {
        x,
        u,
        breaks,
        vcol,
        split,
        c,
        d,
        e,
    }))
}

impl Assembled {
    /// Matrix over `rows` whose entry `(i, j)` is `u_i V_j` when `keep(x_i, cell_j)`.
    fn matrix<F: Fn(f64, f64, f64) -> bool>(&self, rows: std::ops::Range<usize>, keep: F) -> DMatrix<f64> {
        let n = rows.len();
        let m = self.vcol.len();
        let mut k = DMatrix::zeros(n, m);
        for (r, i) in rows.enumerate() {
            let xi = self.x[i];
            for j in 0..m {
                if keep(xi, self.breaks[j], self.breaks[j + 1]) {
                    k[(r, j)] = self.u[i] * self.vcol[j];
                }
            }
        }
        k
    }
}

/// `𝒦(I)` alone.
pub fn kappa(problem: &Problem, d: f64, e: f64, res: KappaResolution) -> Result<f64> {
    let Some(a) = assemble(problem, d, e, res)? else {
        return Ok(0.0);
    };
    let bd = &problem.boundaries;
    let k = a.matrix(0..a.x.len(), |x, y0, y1| y0 >= bd.a(x) && y1 <= bd.b(x));
    Ok(top_singular_value(&center(&k, &a.u)))
}

/// `(I − u uᵀ/‖u‖²) K`: subtracts the `w²`-weighted mean `H_I`.
fn center(k: &DMatrix<f64>, u: &[f64]) -> DMatrix<f64> {
    let un = nalgebra::DVector::from_column_slice(u);
    let nn = un.norm_squared();
    if nn == 0.0 {
        return k.clone();
    }
    let row = un.transpose() * k / nn;
    k - un * row
}

/// `𝒦(I)` with the lower bound `¼(L1 + L2)` and the upper bound `2‖wH̄‖`.
pub fn k_estimate(problem: &Problem, d: f64, e: f64, res: KappaResolution) -> Result<KEstimate> {
    let bd = &problem.boundaries;
    let note = "lower bound uses supp f in [b(c), b(e)]".to_string();
    let Some(a) = assemble(problem, d, e, res)? else {
        return Ok(KEstimate {
            d,
            e,
            c: 0.5 * (d + e),
            kappa: 0.0,
            lower: 0.0,
            upper: 0.0,
            l1: 0.0,
            l2: 0.0,
            viewless_zone: (d, e),
            hidden_cells: Vec::new(),
            note,
        });
    };
    let n = a.x.len();
    let inside = |x: f64, y0: f64, y1: f64| y0 >= bd.a(x) && y1 <= bd.b(x);
    let k = a.matrix(0..n, inside);
    let kap = top_singular_value(&center(&k, &a.u));
    let (ad, ac, bc, be) = (bd.a(a.d), bd.a(a.c), bd.b(a.c), bd.b(a.e));
    let l1 = top_singular_value(&a.matrix(0..a.split, |x, y0, y1| {
        inside(x, y0, y1) && y0 >= ad && y1 <= ac
    }));
    let l2 = top_singular_value(&a.matrix(a.split..n, |x, y0, y1| {
        inside(x, y0, y1) && y0 >= bc && y1 <= be
    }));
    let hbar = a.matrix(0..n, |x, y0, y1| {
        (y0 >= ad && y1 <= bd.a(x)) || (y0 >= bd.b(x) && y1 <= be)
    });
    let upper = 2.0 * top_singular_value(&hbar);
    let zone = (bd.b_inv(ac)?, bd.a_inv(bc)?);
    let hidden = match orbit(bd, 1.0, a.d, a.e) {
        Ok(xi) => xi
            .values
            .windows(2)
            .enumerate()
            .filter(|(_, s)| s[0] >= a.d && s[1] <= a.e && s[1] > zone.0 && s[0] < zone.1)
            .map(|(i, _)| xi.k_min + i as i64)
            .collect(),
        Err(_) => Vec::new(),
    };
    Ok(KEstimate {
        d: a.d,
        e: a.e,
        c: a.c,
        kappa: kap,
        lower: 0.25 * (l1 + l2),
        upper,
        l1,
        l2,
        viewless_zone: zone,
        hidden_cells: hidden,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Weight;

    fn ex() -> Problem {
        Problem::linear(
            1.0,
            3.0,
            Weight::Const { c: 1.0 },
            Weight::Power { c: 1.0, beta: -0.5 },
            2.0,
            (0.01, 100.0),
        )
        .unwrap()
    }

    #[test]
    fn sandwich_and_resolution() {
        let p = ex();
        let r = KappaResolution::default();
        for (d, e) in [(1.0, 2.0), (0.5, 7.0), (2.0, 30.0), (0.02, 0.05)] {
            let k = k_estimate(&p, d, e, r).unwrap();
            assert!(k.lower <= k.kappa && k.kappa <= k.upper, "{k:?}");
            let k2 = kappa(&p, d, e, r.doubled()).unwrap();
            assert!((k.kappa - k2).abs() <= 1e-3 * k2, "{} vs {k2}", k.kappa);
        }
    }

    #[test]
    fn zero_v_and_constant_h() {
        let p = Problem::linear(1.0, 3.0, Weight::Zero, Weight::Const { c: 1.0 }, 2.0, (0.5, 10.0))
            .unwrap();
        let k = k_estimate(&p, 1.0, 2.0, KappaResolution::default()).unwrap();
        assert_eq!((k.kappa, k.lower, k.upper), (0.0, 0.0, 0.0));
        // v supported where every [a(x), b(x)], x ∈ I, sees all of it: H is
        // constant on I, so the centered operator vanishes
        let p = Problem::linear(
            0.1,
            10.0,
            Weight::Tabulated {
                x: vec![0.3, 0.30001, 0.99999, 1.0],
                y: vec![0.0, 1.0, 1.0, 0.0],
            },
            Weight::Const { c: 1.0 },
            2.0,
            (1.0, 2.0),
        )
        .unwrap();
        let k = kappa(&p, 1.0, 2.0, KappaResolution::default()).unwrap();
        assert!(k <= 1e-12, "{k}");
    }

    #[test]
    fn viewless_zone_for_linear_family() {
        let p = ex();
        let k = k_estimate(&p, 1.0, 81.0, KappaResolution::default()).unwrap();
        // w = x^{-1/2}: c = √(81) = 9; zone = [b⁻¹(a(9)), a⁻¹(b(9))] = [3, 27]
        assert!((k.c - 9.0).abs() < 1e-9);
        assert!((k.viewless_zone.0 - 3.0).abs() < 1e-9 && (k.viewless_zone.1 - 27.0).abs() < 1e-9);
        assert_eq!(k.hidden_cells, vec![1, 2]);
    }
}
