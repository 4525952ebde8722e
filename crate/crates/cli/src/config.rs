//! Run configuration. Every field is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use nmfeb_core::problem::DesignThresholds;
use nmfeb_core::sim::{DesignKind, SimConfig};
use nmfeb_core::{FitConfig, GridSpec, InitMode, PriorGrid};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Known noise variance. Required by `fit` and `check`.
    pub sigma2: Option<f64>,
    pub grid: GridSection,
    pub fit: FitSection,
    pub alpha: Option<f64>,
    pub eps_null: Option<f64>,
    pub eps_ci: Option<f64>,
    pub input: InputSection,
    pub output: Option<PathBuf>,
    /// Optional `atom,weight` CSV of the fitted prior.
    pub histogram: Option<PathBuf>,
    pub seed: Option<u64>,
    pub include_timing: bool,
    pub design_check: DesignCheckSection,
    pub sim: Option<SimSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSection {
            lo: g.lo,
            hi: g.hi,
            k: g.k,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub tol_outer: Option<f64>,
    pub max_outer: Option<usize>,
    pub tol_grad: Option<f64>,
    pub max_inner_gamma: Option<usize>,
    pub max_inner_weights: Option<usize>,
    pub lbfgs_memory: Option<usize>,
    pub armijo_c: Option<f64>,
    pub backtrack_factor: Option<f64>,
    pub init: Option<InitSection>,
    pub ridge_lambda: Option<f64>,
}

/// `{"mode": "ridge" | "ols" | "provided", "beta": [...]}`; `beta` only
/// with `provided`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub mode: InitName,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    Ridge,
    Ols,
    Provided,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    /// Skip a header row in both CSV files.
    pub header: bool,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignCheckSection {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub mf_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub design: DesignSection,
    pub prior: PriorSection,
    /// Falls back to the top-level `sigma2`, then to 1.
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "yes")]
    pub row_normalize: bool,
}

fn yes() -> bool {
    true
}

/// `{"kind": "iid_gaussian"}` or `{"kind": "ar_gaussian", "rho": r}`.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub kind: DesignName,
    #[serde(default)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignName {
    #[default]
    IidGaussian,
    ArGaussian,
}

/// Either explicit `atoms` and `weights`, or `uniform`: equal weights on an
/// equally spaced grid.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub atoms: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub uniform: Option<GridSection>,
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.input.x,
            &mut self.input.y,
            &mut self.output,
            &mut self.histogram,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            lo: self.grid.lo,
            hi: self.grid.hi,
            k: self.grid.k,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.05)
    }

    pub fn eps_null(&self) -> f64 {
        self.eps_null.unwrap_or(0.05)
    }

    pub fn eps_ci(&self) -> f64 {
        self.eps_ci.unwrap_or(0.0)
    }

    pub fn fit_config(&self) -> FitConfig {
        let d = FitConfig::default();
        let f = &self.fit;
        FitConfig {
            tol_outer: f.tol_outer.unwrap_or(d.tol_outer),
            max_outer: f.max_outer.unwrap_or(d.max_outer),
            tol_grad: f.tol_grad.unwrap_or(d.tol_grad),
            max_inner_gamma: f.max_inner_gamma.unwrap_or(d.max_inner_gamma),
            max_inner_weights: f.max_inner_weights.unwrap_or(d.max_inner_weights),
            lbfgs_memory: f.lbfgs_memory.unwrap_or(d.lbfgs_memory),
            armijo_c: f.armijo_c.unwrap_or(d.armijo_c),
            backtrack_factor: f.backtrack_factor.unwrap_or(d.backtrack_factor),
            init_mode: match &f.init {
                None => d.init_mode,
                Some(InitSection {
                    mode: InitName::Ridge, ..
                }) => InitMode::Ridge,
                Some(InitSection {
                    mode: InitName::Ols, ..
                }) => InitMode::Ols,
                Some(InitSection {
                    mode: InitName::Provided,
                    beta,
                }) => InitMode::Provided(beta.clone().unwrap_or_default()),
            },
            ridge_lambda: f.ridge_lambda.or(d.ridge_lambda),
        }
    }

    pub fn thresholds(&self) -> DesignThresholds {
        let d = DesignThresholds::default();
        DesignThresholds {
            c1: self.design_check.c1.unwrap_or(d.c1),
            c2: self.design_check.c2.unwrap_or(d.c2),
            mf_threshold: self.design_check.mf_threshold.unwrap_or(d.mf_threshold),
        }
    }

    /// Checks values that serde cannot, before any data is read.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if let Some(s) = self.sigma2 {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sigma2 must be positive, got {s}"));
            }
        }
        if !(self.alpha() > 0.0 && self.alpha() < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha()));
        }
        for (name, v) in [("eps_null", self.eps_null()), ("eps_ci", self.eps_ci())] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        self.grid_spec()
            .atoms()
            .map_err(|e| CliError::Validation(format!("grid: {e}")))?;
        if let Some(init) = &self.fit.init {
            if (init.mode == InitName::Provided) != init.beta.is_some() {
                return bad("fit.init: `beta` is required with mode `provided` and not allowed otherwise".into());
            }
        }
        self.fit_config()
            .validate()
            .map_err(|e| CliError::Validation(format!("fit: {e}")))?;
        Ok(())
    }

    /// Simulation settings, with `seed` taking precedence over the file.
    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig, CliError> {
        let sim = self
            .sim
            .as_ref()
            .ok_or_else(|| CliError::Input("config has no `sim` section".into()))?;
        let prior = match &sim.prior {
            PriorSection {
                atoms: Some(atoms),
                weights: Some(weights),
                uniform: None,
            } => PriorGrid::normalized(atoms.clone(), weights.clone()),
            PriorSection {
                atoms: None,
                weights: None,
                uniform: Some(u),
            } => PriorGrid::uniform(GridSpec {
                lo: u.lo,
                hi: u.hi,
                k: u.k,
            }),
            _ => {
                return Err(CliError::Input(
                    "sim.prior needs either `atoms` and `weights`, or `uniform`".into(),
                ))
            }
        }
        .map_err(|e| CliError::Input(format!("sim prior: {e}")))?;
        let cfg = SimConfig {
            n: sim.n,
            p: sim.p,
            design: match (sim.design.kind, sim.design.rho) {
                (DesignName::IidGaussian, None) => DesignKind::IidGaussian,
                (DesignName::ArGaussian, Some(rho)) => DesignKind::ArGaussian { rho },
                _ => {
                    return Err(CliError::Input(
                        "sim.design: `rho` is required for `ar_gaussian` and not allowed otherwise".into(),
                    ))
                }
            },
            prior_truth: prior,
            sigma2: sim.sigma2.or(self.sigma2).unwrap_or(1.0),
            seed: seed.or(sim.seed).or(self.seed).unwrap_or(0),
            row_normalize: sim.row_normalize,
        };
        cfg.validate().map_err(|e| CliError::Input(format!("sim: {e}")))?;
        Ok(cfg)
    }
}
