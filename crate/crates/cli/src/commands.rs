use std::path::{Path, PathBuf};
use std::time::Instant;

use nmfeb_core::elbo::objective;
use nmfeb_core::posterior::{build_posterior, credible_intervals, null_proportion, posterior_mean};
use nmfeb_core::problem::{build_stats, check_design};
use nmfeb_core::sim::{simulate, DesignKind};
use nmfeb_core::{fit, DMatrix, DVector, DesignReport, PriorGrid};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{read_matrix, read_vector, write_histogram, write_matrix, write_vector};
use crate::report::{
    f17s, to_json, ConvergenceJson, DesignJson, ElboJson, FitJson, NullJson, PosteriorJson, PriorJson, SimMetaJson,
    TimingJson, F17,
};

/// Paths and overrides shared by the commands. Flags take precedence over
/// the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub sigma2: Option<f64>,
}

impl Overrides {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.x.is_some() {
            cfg.input.x.clone_from(&self.x);
        }
        if self.y.is_some() {
            cfg.input.y.clone_from(&self.y);
        }
        if self.out.is_some() {
            cfg.output.clone_from(&self.out);
        }
        cfg.seed = self.seed.or(cfg.seed);
        cfg.sigma2 = self.sigma2.or(cfg.sigma2);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn required<'a, T>(value: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Input(format!("missing {what}")))
}

/// Messages for a design that falls outside the supported regime.
pub fn design_warnings(report: &DesignReport) -> Vec<String> {
    let mut out = Vec::new();
    if !report.passes_assumption1 {
        out.push(format!(
            "design eigenvalues [{:.3e}, {:.3e}] fall outside the configured bounds; the prior may not be identifiable",
            report.lambda_min, report.lambda_max
        ));
    }
    if !report.meanfield_ok {
        out.push(format!(
            "Tr(A^2)/p = {:.3e} exceeds the mean-field threshold; the approximation may be loose",
            report.trace_a2_over_p
        ));
    }
    out
}

/// Result of a successful `fit`: the document and any warnings.
#[derive(Debug)]
pub struct FitOutcome {
    pub json: String,
    pub warnings: Vec<String>,
    pub prior: PriorGrid,
    pub elapsed: std::time::Duration,
    /// Where the document was written, if anywhere.
    pub output: Option<PathBuf>,
}

/// Fits the prior and writes the result document (to stdout when no output
/// path is given). Nothing is written on failure.
pub fn cmd_fit(args: &Overrides) -> Result<FitOutcome, CliError> {
    let start = Instant::now();
    let cfg = args.load()?;
    required(&cfg.sigma2, "sigma2 (config `sigma2` or --sigma2)")?;
    let x = read_matrix(required(&cfg.input.x, "design path (--x)")?, cfg.input.header)?;
    let y = read_vector(required(&cfg.input.y, "response path (--y)")?, cfg.input.header)?;
    let mut outcome = fit_report(&cfg, &x, &y, start)?;
    if let Some(path) = &cfg.output {
        write_text(path, &outcome.json).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    if let Some(path) = &cfg.histogram {
        write_histogram(path, outcome.prior.atoms(), outcome.prior.weights())
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    outcome.output.clone_from(&cfg.output);
    Ok(outcome)
}

/// Runs the fit on in-memory data and renders the result document.
/// `start` marks when the command began, for the optional timing block.
pub fn fit_report(cfg: &RunConfig, x: &DMatrix<f64>, y: &DVector<f64>, start: Instant) -> Result<FitOutcome, CliError> {
    let sigma2 = *required(&cfg.sigma2, "sigma2 (config `sigma2` or --sigma2)")?;
    if x.nrows() != y.len() {
        return Err(CliError::Validation(format!(
            "design has {} rows but response has {} values",
            x.nrows(),
            y.len()
        )));
    }
    let read_done = Instant::now();

    let report = check_design(x, sigma2, cfg.thresholds())?;
    let mut warnings = design_warnings(&report);
    let res = fit(x, y, sigma2, cfg.grid_spec(), &cfg.fit_config())?;
    if !res.converged {
        warnings.push(format!(
            "optimizer stopped after {} outer iterations without converging",
            res.outer_iters
        ));
    }
    let stats = build_stats(x, y, sigma2)?;
    let post = build_posterior(&res.prior, &res.gamma, &stats.d)?;
    let intervals = credible_intervals(&post, cfg.alpha(), cfg.eps_ci());
    let value = objective(&stats, &res.gamma, &res.prior)?;
    let fit_done = Instant::now();

    let doc = FitJson {
        n: x.nrows(),
        p: x.ncols(),
        sigma2: F17(sigma2),
        seed: cfg.seed,
        prior: prior_json(&res.prior),
        gamma: f17s(res.gamma.iter().copied()),
        trace: f17s(res.trace.iter().copied()),
        convergence: ConvergenceJson {
            converged: res.converged,
            outer_iterations: res.outer_iters,
            gamma_iterations: res.gamma_iters,
            weight_iterations: res.weight_iters,
            line_search_failures: res.line_search_failures,
        },
        elbo: ElboJson {
            m_tilde: F17(value.m_tilde),
            evidence_lower_bound: F17(value.elbo_evidence),
        },
        design: DesignJson::from(&report),
        posterior: PosteriorJson {
            mean: f17s(posterior_mean(&post).iter().copied()),
            alpha: F17(cfg.alpha()),
            eps: F17(cfg.eps_ci()),
            lower: f17s(intervals.iter().map(|iv| iv.lower)),
            upper: f17s(intervals.iter().map(|iv| iv.upper)),
        },
        null_proportion: NullJson {
            eps: F17(cfg.eps_null()),
            proportion: F17(null_proportion(&res.prior, cfg.eps_null())),
        },
        timing: cfg.include_timing.then(|| TimingJson {
            read_seconds: F17((read_done - start).as_secs_f64()),
            fit_seconds: F17((fit_done - read_done).as_secs_f64()),
            total_seconds: F17(start.elapsed().as_secs_f64()),
        }),
    };
    Ok(FitOutcome {
        json: to_json(&doc),
        warnings,
        prior: res.prior,
        elapsed: start.elapsed(),
        output: None,
    })
}

fn prior_json(prior: &PriorGrid) -> PriorJson {
    PriorJson {
        atoms: f17s(prior.atoms().iter().copied()),
        weights: f17s(prior.weights().iter().copied()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Unwritable(format!("cannot write {}: {e}", path.display())))
}

/// Generates a dataset into the output directory: `X.csv`, `y.csv`,
/// `beta_true.csv` and `meta.json`.
pub fn cmd_simulate(args: &Overrides) -> Result<PathBuf, CliError> {
    let cfg = args.load()?;
    let sim = cfg.sim_config(args.seed)?;
    let dir = required(&cfg.output, "output directory (--out)")?.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Unwritable(format!("cannot create {}: {e}", dir.display())))?;
    let (x, beta, y) = simulate(&sim)?;
    write_matrix(&dir.join("X.csv"), &x)?;
    write_vector(&dir.join("y.csv"), &y)?;
    write_vector(&dir.join("beta_true.csv"), &beta)?;
    let (design, rho) = match sim.design {
        DesignKind::IidGaussian => ("iid_gaussian", None),
        DesignKind::ArGaussian { rho } => ("ar_gaussian", Some(F17(rho))),
    };
    let meta = SimMetaJson {
        seed: sim.seed,
        n: sim.n,
        p: sim.p,
        design,
        rho,
        sigma2: F17(sim.sigma2),
        row_normalize: sim.row_normalize,
        prior: prior_json(&sim.prior_truth),
    };
    write_text(&dir.join("meta.json"), &to_json(&meta))?;
    Ok(dir)
}

/// Design diagnostics as a JSON document.
pub fn cmd_check(args: &Overrides) -> Result<String, CliError> {
    let cfg = args.load()?;
    let sigma2 = *required(&cfg.sigma2, "sigma2 (config `sigma2` or --sigma2)")?;
    let x = read_matrix(required(&cfg.input.x, "design path (--x)")?, cfg.input.header)?;
    let report = check_design(&x, sigma2, cfg.thresholds())?;
    Ok(to_json(&DesignJson::from(&report)))
}
