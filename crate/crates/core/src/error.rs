use thiserror::Error;

/// Which end of an integration range misbehaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Lower,
    Upper,
    Interior,
}

impl std::fmt::Display for End {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            End::Lower => "lower",
            End::Upper => "upper",
            End::Interior => "interior",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("target {y} outside bracket values [{f_lo}, {f_hi}]")]
    Bracket { y: f64, f_lo: f64, f_hi: f64 },

    #[error("monotonicity violated near x = {at}")]
    NonMonotone { at: f64 },

    #[error("integral over [{lo}, {hi}] did not converge ({end} end)")]
    DivergentIntegral { lo: f64, hi: f64, end: End },

    #[error("zero mass on [{lo}, {hi}]")]
    ZeroMass { lo: f64, hi: f64 },

    #[error("grid iteration left (0, inf) at step {step}")]
    WindowExhausted { step: i64 },

    #[error("refinement of cell {k} did not terminate within {steps} steps")]
    NonTermination { k: i64, steps: usize },

    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("iteration did not converge: {0}")]
    Convergence(String),

    #[error("partition exceeded {max} intervals")]
    Budget { max: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Module-qualified code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Bracket { .. } => "function_core.bracket",
            Error::NonMonotone { .. } => "function_core.non_monotone",
            Error::DivergentIntegral { .. } => "function_core.divergent_integral",
            Error::ZeroMass { .. } => "fairway.zero_mass",
            Error::WindowExhausted { .. } => "grids.window_exhausted",
            Error::NonTermination { .. } => "grids.non_termination",
            Error::Schema { .. } => "cli.schema",
            Error::Domain(_) => "cli.domain",
            Error::Config(_) => "cli.config",
            Error::Convergence(_) => "operator_lab.convergence",
            Error::Budget { .. } => "operator_lab.budget",
            Error::Io(_) => "cli.io",
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. } | Error::Domain(_) | Error::Config(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
