//! Output documents. Floats carry 17 significant digits; non-finite values
//! are written as `null`.

use std::str::FromStr;

use nmfeb_core::DesignReport;
use serde::{Serialize, Serializer};

/// A float serialized as `{:.16e}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let text = format!("{:.16e}", self.0);
        serde_json::Number::from_str(&text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

pub fn f17s(values: impl IntoIterator<Item = f64>) -> Vec<F17> {
    values.into_iter().map(F17).collect()
}

#[derive(Debug, Serialize)]
pub struct DesignJson {
    pub lambda_min: F17,
    pub lambda_max: F17,
    pub trace_a2_over_p: F17,
    pub full_column_rank: bool,
    pub passes_assumption1: bool,
    pub meanfield_ok: bool,
}

impl From<&DesignReport> for DesignJson {
    fn from(r: &DesignReport) -> Self {
        DesignJson {
            lambda_min: F17(r.lambda_min),
            lambda_max: F17(r.lambda_max),
            trace_a2_over_p: F17(r.trace_a2_over_p),
            full_column_rank: r.full_column_rank,
            passes_assumption1: r.passes_assumption1,
            meanfield_ok: r.meanfield_ok,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PriorJson {
    pub atoms: Vec<F17>,
    pub weights: Vec<F17>,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceJson {
    pub converged: bool,
    pub outer_iterations: usize,
    pub gamma_iterations: usize,
    pub weight_iterations: usize,
    pub line_search_failures: usize,
}

#[derive(Debug, Serialize)]
pub struct ElboJson {
    /// Mean-field objective without the data-only terms.
    pub m_tilde: F17,
    /// Lower bound on the log marginal likelihood.
    pub evidence_lower_bound: F17,
}

#[derive(Debug, Serialize)]
pub struct PosteriorJson {
    pub mean: Vec<F17>,
    pub alpha: F17,
    pub eps: F17,
    pub lower: Vec<F17>,
    pub upper: Vec<F17>,
}

#[derive(Debug, Serialize)]
pub struct NullJson {
    pub eps: F17,
    pub proportion: F17,
}

#[derive(Debug, Serialize)]
pub struct TimingJson {
    pub read_seconds: F17,
    pub fit_seconds: F17,
    pub total_seconds: F17,
}

#[derive(Debug, Serialize)]
pub struct FitJson {
    pub n: usize,
    pub p: usize,
    pub sigma2: F17,
    pub seed: Option<u64>,
    pub prior: PriorJson,
    pub gamma: Vec<F17>,
    pub trace: Vec<F17>,
    pub convergence: ConvergenceJson,
    pub elbo: ElboJson,
    pub design: DesignJson,
    pub posterior: PosteriorJson,
    pub null_proportion: NullJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingJson>,
}

#[derive(Debug, Serialize)]
pub struct SimMetaJson {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub design: &'static str,
    pub rho: Option<F17>,
    pub sigma2: F17,
    pub row_normalize: bool,
    pub prior: PriorJson,
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output documents always serialize");
    s.push('\n');
    s
}
