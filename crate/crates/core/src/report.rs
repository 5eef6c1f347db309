//! Run reports: JSON document plus one flat CSV per table.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::functionals::FunctionalReport;
use crate::functions::Tolerances;
use crate::grids::GridSystem;
use crate::operator::{
    BlockSplitReport, EpsilonPartition, KEstimate, LemmaKeyReport, ParityCheck, RatioReport,
    Resolution, SpectralReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Nothing to check (e.g. `v ≡ 0`, or `p ≠ 2` for spectral checks).
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }

    pub fn vacuous(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Vacuous,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairwayRow {
    pub t: f64,
    /// Absent where `[a(t), b(t)]` carries no `v` mass.
    pub sigma: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPair {
    pub coarse: SpectralReport,
    pub fine: SpectralReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `B/A`.
    pub ratio: f64,
    pub ratios: RatioReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairway: Option<Vec<FairwayRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<GridSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionals: Option<FunctionalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<KEstimate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<EpsilonPartition>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaKeyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<RatioReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_split: Option<BlockSplitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Vec<ParityCheck>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub tolerances: Tolerances,
    pub resolution: Resolution,
    pub kappa_nodes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub input: ProblemConfig,
    pub provenance: Provenance,
    pub outputs: Outputs,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(command: &str, input: &ProblemConfig) -> Self {
        Self {
            command: command.into(),
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").into(),
                tolerances: input.tolerances,
                resolution: input.resolution,
                kappa_nodes: input.kappa_nodes,
                seed: input.seed,
            },
            input: input.clone(),
            outputs: Outputs::default(),
            checks: Vec::new(),
            warnings: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        if check.status == CheckStatus::Fail {
            self.passed = false;
        }
        self.checks.push(check);
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))
    }

    /// `report.json` and the CSV tables present in this report.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        for (name, table) in self.tables() {
            write_csv(&dir.join(name), &table)?;
        }
        Ok(())
    }

    /// `(file name, header + rows)` for every table in the report.
    pub fn tables(&self) -> Vec<(&'static str, Vec<Vec<String>>)> {
        let mut out = Vec::new();
        let o = &self.outputs;
        if let Some(rows) = &o.fairway {
            let mut t = header(&["t", "sigma", "residual"]);
            t.extend(rows.iter().map(|r| vec![num(r.t), opt(r.sigma), opt(r.residual)]));
            out.push(("fairway.csv", t));
        }
        if let Some(g) = &o.grids {
            let mut xi = header(&["k", "xi_k"]);
            xi.extend(
                g.xi.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![(g.xi.k_min + i as i64).to_string(), num(*v)]),
            );
            out.push(("xi.csv", xi));
            let mut t = header(&["k", "j", "x_j"]);
            for c in &g.cells {
                for (i, x) in c.points.iter().enumerate() {
                    t.push(vec![
                        c.k.to_string(),
                        (i as i64 - c.j_a as i64).to_string(),
                        num(*x),
                    ]);
                }
            }
            out.push(("grid.csv", t));
        }
        if let Some(f) = &o.functionals {
            let mut t = header(&["k", "xi_k", "xi_k1", "nu_tilde", "nu_bar", "nu"]);
            t.extend(f.nu.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    num(r.xi_k),
                    num(r.xi_k1),
                    num(r.nu_tilde),
                    num(r.nu_bar),
                    num(r.nu),
                ]
            }));
            out.push(("nu.csv", t));
            let mut t = header(&["m", "k", "j", "x_m", "x_m1", "mu"]);
            t.extend(f.mu.iter().map(|r| {
                vec![
                    r.m.to_string(),
                    r.k.to_string(),
                    r.j.to_string(),
                    num(r.x_m),
                    num(r.x_m1),
                    num(r.mu),
                ]
            }));
            out.push(("mu.csv", t));
            let mut t = header(&[
                "alpha",
                "v_power",
                "w_power",
                "sum_nu_tilde",
                "sum_nu_bar",
                "sum_nu",
                "sum_mu",
            ]);
            t.extend(f.alphas.iter().map(|r| {
                vec![
                    num(r.alpha),
                    num(r.v_power),
                    num(r.w_power),
                    num(r.sum_nu_tilde),
                    num(r.sum_nu_bar),
                    num(r.sum_nu),
                    num(r.sum_mu),
                ]
            }));
            out.push(("alpha.csv", t));
            let mut t = header(&["alpha", "kept", "lower_tail", "upper_tail", "lower_status", "upper_status"]);
            t.extend(f.tails.iter().map(|r| {
                vec![
                    num(r.alpha),
                    num(r.kept),
                    num(r.lower_tail),
                    num(r.upper_tail),
                    tag(&r.lower_status),
                    tag(&r.upper_status),
                ]
            }));
            out.push(("tails.csv", t));
        }
        if let Some(s) = &o.spectrum {
            let mut t = header(&["n", "s_coarse", "s_fine"]);
            let n = s.coarse.values.len().max(s.fine.values.len());
            t.extend((1..=n).map(|i| vec![i.to_string(), num(s.coarse.s(i)), num(s.fine.s(i))]));
            out.push(("spectrum.csv", t));
        }
        if let Some(ks) = &o.kappa {
            let mut t = header(&["d", "e", "c", "kappa", "lower", "upper", "l1", "l2"]);
            t.extend(ks.iter().map(|k| {
                [k.d, k.e, k.c, k.kappa, k.lower, k.upper, k.l1, k.l2]
                    .into_iter()
                    .map(num)
                    .collect()
            }));
            out.push(("kappa.csv", t));
        }
        if let Some(ps) = &o.partitions {
            let mut t = header(&["eps", "n", "c_n", "c_n1", "class", "kappa"]);
            for p in ps {
                for n in 0..p.partition.len() {
                    let (d, e) = p.partition.interval(n);
                    t.push(vec![
                        num(p.eps),
                        n.to_string(),
                        num(d),
                        num(e),
                        p.partition.classes.get(n).map(|c| c.to_string()).unwrap_or_default(),
                        opt(p.partition.kappa[n]),
                    ]);
                }
            }
            out.push(("partition.csv", t));
        }
        if let Some(l) = &o.lemma {
            let mut t = header(&["eps", "full_intervals", "n_key", "key", "key2_index", "key2", "kappa_recheck"]);
            t.extend(l.checks.iter().map(|c| {
                vec![
                    num(c.eps),
                    c.full_intervals.to_string(),
                    c.n_key.to_string(),
                    tag(&c.key),
                    c.key2_index.to_string(),
                    tag(&c.key2),
                    num(c.kappa_recheck),
                ]
            }));
            out.push(("lemma.csv", t));
        }
        if let Some(r) = &o.ratios {
            let mut t = header(&["alpha", "nu", "s", "mu", "r1", "r2"]);
            t.extend(r.rows.iter().map(|x| {
                vec![num(x.alpha), num(x.nu), num(x.s), num(x.mu), opt(x.r1), opt(x.r2)]
            }));
            out.push(("ratios.csv", t));
        }
        if let Some(b) = &o.block_split {
            let mut t = header(&["block", "frobenius", "norm"]);
            t.extend(
                b.families
                    .iter()
                    .map(|f| vec![f.name.clone(), num(f.frobenius), num(f.norm)]),
            );
            out.push(("blocks.csv", t));
        }
        if let Some(sw) = &o.sweep {
            let mut t = header(&["ratio", "alpha", "nu", "s", "mu", "r1", "r2", "r3", "r4"]);
            for p in sw {
                for x in &p.ratios.rows {
                    t.push(vec![
                        num(p.ratio),
                        num(x.alpha),
                        num(x.nu),
                        num(x.s),
                        num(x.mu),
                        opt(x.r1),
                        opt(x.r2),
                        opt(p.ratios.r3),
                        opt(p.ratios.r4),
                    ]);
                }
            }
            out.push(("sweep.csv", t));
        }
        let mut t = header(&["name", "status", "detail"]);
        t.extend(
            self.checks
                .iter()
                .map(|c| vec![c.name.clone(), tag(&c.status), c.detail.clone()]),
        );
        out.push(("checks.csv", t));
        out
    }
}

fn header(cols: &[&str]) -> Vec<Vec<String>> {
    vec![cols.iter().map(|s| s.to_string()).collect()]
}

/// Shortest representation that parses back to the same value.
fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
