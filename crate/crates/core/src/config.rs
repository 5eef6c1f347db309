//! Problem configuration: a JSON document with defaults for everything but
//! the boundaries, the weights and `p`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::functions::{BoundaryFamily, BoundaryPair, Tolerances, Weight, WeightPair};
use crate::operator::Resolution;
use crate::problem::{Problem, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `B/A` values; `A` is kept fixed.
    pub ratios: Vec<f64>,
    /// Extra `B/A` values drawn uniformly from `[min, max]` of `ratios`.
    pub random_points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ratios: vec![1.5, 2.0, 3.0, 5.0],
            random_points: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub boundaries: BoundaryFamily,
    pub v: Weight,
    pub w: Weight,
    pub p: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_window")]
    pub window: (f64, f64),
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "one")]
    pub beta_p: f64,
    #[serde(default = "one")]
    pub gamma_p: f64,
    #[serde(default)]
    pub seed: u64,
    /// `ε` as fractions of `‖ℋ‖` for the partition and lemma checks.
    #[serde(default = "default_eps")]
    pub eps_fractions: Vec<f64>,
    /// Intervals for the `kappa` command; random ones are drawn when empty.
    #[serde(default)]
    pub intervals: Vec<(f64, f64)>,
    #[serde(default = "default_random_intervals")]
    pub random_intervals: usize,
    /// Gauss nodes per half interval for `𝒦`.
    #[serde(default = "default_kappa_nodes")]
    pub kappa_nodes: usize,
    #[serde(default = "default_max_intervals")]
    pub max_intervals: usize,
    /// Points of the `fairway` table.
    #[serde(default = "default_fairway_samples")]
    pub fairway_samples: usize,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn one() -> f64 {
    1.0
}
fn default_alphas() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}
fn default_window() -> (f64, f64) {
    (1e-2, 1e2)
}
fn default_eps() -> Vec<f64> {
    vec![0.25, 0.125, 0.0625]
}
fn default_random_intervals() -> usize {
    8
}
fn default_kappa_nodes() -> usize {
    96
}
fn default_max_intervals() -> usize {
    2000
}
fn default_fairway_samples() -> usize {
    64
}

/// Field of a `family`-tagged object responsible for `msg`. Tagged enums
/// are buffered by serde, so the path stops at the object; probe by
/// dropping one field at a time.
fn tagged_culprit<T: DeserializeOwned>(v: &Value, msg: &str) -> Option<String> {
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        return rest.split('`').next().map(str::to_string);
    }
    let obj = v.as_object()?;
    obj.keys().filter(|k| *k != "family").find_map(|k| {
        let mut trimmed = obj.clone();
        trimmed.remove(k);
        match serde_json::from_value::<T>(Value::Object(trimmed)) {
            Ok(_) => Some(k.clone()),
            Err(e) if e.to_string().starts_with(&format!("missing field `{k}`")) => Some(k.clone()),
            Err(_) => None,
        }
    })
}

fn schema(path: &str, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_string(),
        msg: msg.into(),
    }
}

impl ProblemConfig {
    /// Parse from JSON text; errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = e.path().to_string();
            let msg = e.into_inner().to_string();
            if let Ok(root) = serde_json::from_str::<Value>(text) {
                let field = match (path.as_str(), root.get(&path)) {
                    ("boundaries", Some(v)) => tagged_culprit::<BoundaryFamily>(v, &msg),
                    ("v" | "w", Some(v)) => tagged_culprit::<Weight>(v, &msg),
                    _ => None,
                };
                if let Some(f) = field {
                    path = format!("{path}.{f}");
                }
            }
            schema(&path, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks on scalars (schema errors) and on the function families
    /// (domain errors).
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(schema("p", format!("need 1 < p < inf, got {}", self.p)));
        }
        if self.alphas.is_empty() {
            return Err(schema("alphas", "at least one alpha is required"));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if !(a.is_finite() && *a > 0.0) {
                return Err(schema(&format!("alphas[{i}]"), format!("need alpha > 0, got {a}")));
            }
        }
        let (lo, hi) = self.window;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(schema("window", format!("need 0 < t_lo < t_hi < inf, got [{lo}, {hi}]")));
        }
        Resolution::new(self.resolution.nx, self.resolution.ny)
            .map_err(|e| schema("resolution", e.to_string()))?;
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_inv", t.tol_inv),
            ("tol_quad", t.tol_quad),
            ("tol_fair", t.tol_fair),
            ("tail_tol", t.tail_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(schema(&format!("tolerances.{name}"), format!("need 0 < tol < 1, got {v}")));
            }
        }
        for (name, v) in [("beta_p", self.beta_p), ("gamma_p", self.gamma_p)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(schema(name, format!("must be positive, got {v}")));
            }
        }
        for (i, f) in self.eps_fractions.iter().enumerate() {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(schema(&format!("eps_fractions[{i}]"), format!("need 0 < f < 1, got {f}")));
            }
        }
        for (i, (d, e)) in self.intervals.iter().enumerate() {
            if !(*d > 0.0 && e > d && e.is_finite()) {
                return Err(schema(&format!("intervals[{i}]"), format!("need 0 < d < e, got ({d}, {e})")));
            }
        }
        if self.kappa_nodes < 4 {
            return Err(schema("kappa_nodes", "need at least 4 nodes"));
        }
        if self.fairway_samples < 2 {
            return Err(schema("fairway_samples", "need at least 2 samples"));
        }
        for (i, r) in self.sweep.ratios.iter().enumerate() {
            if !(r.is_finite() && *r > 1.0) {
                return Err(schema(&format!("sweep.ratios[{i}]"), format!("need B/A > 1, got {r}")));
            }
        }
        self.boundary_pair()?;
        WeightPair::new(self.v.clone(), self.w.clone(), self.p)?;
        Ok(())
    }

    pub fn boundary_pair(&self) -> Result<BoundaryPair> {
        BoundaryPair::from_family(self.boundaries.clone(), self.tolerances.tol_inv)
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(
            self.boundary_pair()?,
            WeightPair::new(self.v.clone(), self.w.clone(), self.p)?,
            Window::new(self.window.0, self.window.1)?,
            self.tolerances,
        )
    }

    /// The same configuration with `B = A·ratio`.
    pub fn with_ratio(&self, ratio: f64) -> Result<Self> {
        let boundaries = match &self.boundaries {
            BoundaryFamily::Linear { a, .. } => BoundaryFamily::Linear { a: *a, b: a * ratio },
            BoundaryFamily::Power { a, gamma, .. } => BoundaryFamily::Power {
                a: *a,
                b: a * ratio,
                gamma: *gamma,
            },
            BoundaryFamily::Tabulated { .. } => {
                return Err(Error::Config("sweeps need a linear or power family".into()))
            }
        };
        Ok(Self {
            boundaries,
            ..self.clone()
        })
    }
}

pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ProblemConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "boundaries": {"family": "linear", "A": 1, "B": 3},
        "v": {"family": "const", "c": 1},
        "w": {"family": "power", "beta": -0.5},
        "p": 2
    }"#;

    #[test]
    fn minimal_config_is_valid() {
        let c = ProblemConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.window, (1e-2, 1e2));
        assert_eq!(c.resolution, Resolution::default());
        assert_eq!(c.w, Weight::Power { c: 1.0, beta: -0.5 });
        c.problem().unwrap();
    }

    #[test]
    fn equal_coefficients_are_a_domain_error() {
        let t = MINIMAL.replace("\"B\": 3", "\"B\": 1");
        let e = ProblemConfig::from_json(&t).unwrap_err();
        assert!(matches!(e, Error::Domain(ref m) if m.contains("a(x) < b(x)")), "{e:?}");
    }

    #[test]
    fn p_one_is_a_schema_error() {
        let t = MINIMAL.replace("\"p\": 2", "\"p\": 1");
        assert!(matches!(
            ProblemConfig::from_json(&t),
            Err(Error::Schema { ref path, .. }) if path == "p"
        ));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let t = MINIMAL.replace("\"beta\": -0.5", "\"beta\": \"x\"");
        match ProblemConfig::from_json(&t) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "w.beta"),
            other => panic!("{other:?}"),
        }
        let t = MINIMAL.replace("\"p\": 2", "\"p\": 2, \"colour\": 1");
        assert!(matches!(ProblemConfig::from_json(&t), Err(Error::Schema { .. })));
        let t = MINIMAL.replace("\"p\": 2", "\"p\": 2, \"alphas\": [2, -1]");
        assert!(matches!(
            ProblemConfig::from_json(&t),
            Err(Error::Schema { ref path, .. }) if path == "alphas[1]"
        ));
    }

    #[test]
    fn round_trip() {
        let c = ProblemConfig::from_json(MINIMAL).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(ProblemConfig::from_json(&s).unwrap(), c);
    }
}
