use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::stats::{fit_rate, Aggregate, RateFit};
use crate::error::{Error, Result};
use crate::linalg::projection_distance_spectral;
use crate::metrics::{
    aligned_errors, concentration_rate, eigengap_stats, spectral_proximity_rate, submatrix_concentration_stat,
    theorem_bounds, BoundBreakdown,
};
use crate::model::{build_diagnostic_model, build_spiked_sparse_model, SparseCovarianceModel};
use crate::pipeline::estimate_sparse_subspace;
use crate::sampling::{empirical_covariance, DesignSampler};
use crate::selectors::{default_rho, diagonal_threshold_select, fps_select, oracle_select, SelectorKind, SupportEstimate};
use crate::linalg::SymmetricMatrix;

/// Column order of the per-trial CSV.
pub const RECORD_HEADER: [&str; 17] = [
    "trial_id",
    "seed",
    "n",
    "p",
    "s",
    "k",
    "selector",
    "support_correct",
    "support_size",
    "err_2inf",
    "err_frob",
    "err_proj_spectral",
    "submatrix_concentration",
    "cor_bound",
    "thm1_total",
    "lemma2_all_ok",
    "elapsed_ms",
];

/// One Monte Carlo trial. Error fields are NaN when the trial failed (`|J_hat| < k`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub k: usize,
    pub selector: SelectorKind,
    pub support_correct: bool,
    pub support_size: usize,
    pub err_2inf: f64,
    pub err_frob: f64,
    pub err_proj_spectral: f64,
    pub submatrix_concentration: f64,
    pub cor_bound: f64,
    pub thm1_total: f64,
    pub lemma2_all_ok: bool,
    pub elapsed_ms: f64,
    /// Position of the trial inside its cell. Not persisted.
    #[serde(skip)]
    pub trial_index: usize,
    /// `|J_hat symmetric-difference J|`. Not persisted.
    #[serde(skip)]
    pub support_symdiff: usize,
    /// FPS convergence flag, `None` for other selectors. Not persisted.
    #[serde(skip)]
    pub fps_converged: Option<bool>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.err_2inf.is_nan()
    }

    /// CSV fields in [`RECORD_HEADER`] order; floats carry 17 significant digits.
    pub fn csv_fields(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.16e}");
        vec![
            self.trial_id.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.s.to_string(),
            self.k.to_string(),
            self.selector.name().to_string(),
            u8::from(self.support_correct).to_string(),
            self.support_size.to_string(),
            f(self.err_2inf),
            f(self.err_frob),
            f(self.err_proj_spectral),
            f(self.submatrix_concentration),
            f(self.cor_bound),
            f(self.thm1_total),
            u8::from(self.lemma2_all_ok).to_string(),
            format!("{:.3}", self.elapsed_ms),
        ]
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` in cell `(n, s)`: `master XOR hash(n, s, trial_index)`.
pub fn trial_seed(master_seed: u64, n: usize, s: usize, trial_index: usize) -> u64 {
    master_seed ^ mix(mix(mix(n as u64) ^ s as u64) ^ trial_index as u64)
}

/// Whether the ground-truth model must have a positive eigengap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPolicy {
    Strict,
    /// Admits `min(spikes) == bulk`, for diagnostics only.
    AllowZeroGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub s: usize,
}

struct ModelContext {
    model: SparseCovarianceModel<f64>,
    sampler: Option<DesignSampler<f64>>,
}

/// A configuration with its models and square roots built once.
pub struct Experiment {
    config: ExperimentConfig,
    contexts: Vec<ModelContext>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        Self::with_policy(config, ModelPolicy::Strict)
    }

    pub fn with_policy(config: ExperimentConfig, policy: ModelPolicy) -> Result<Self> {
        config.validate()?;
        let model_seed = config.model_seed.unwrap_or_else(|| mix(config.master_seed ^ 0x6d6f_6465_6c00));
        let mut contexts = Vec::new();
        for s in config.support_sizes() {
            let params = config.model_params(s);
            let mut model = match policy {
                ModelPolicy::Strict => build_spiked_sparse_model(&params, model_seed)?,
                ModelPolicy::AllowZeroGap => build_diagnostic_model(&params, model_seed)?,
            };
            if config.permute {
                model = model.permuted_seeded(mix(model_seed ^ 1))?;
            }
            let sampler = if config.noiseless { None } else { Some(DesignSampler::new(&model)?) };
            contexts.push(ModelContext { model, sampler });
        }
        Ok(Self { config, contexts })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn model(&self, s: usize) -> Option<&SparseCovarianceModel<f64>> {
        self.context(s).map(|c| &c.model)
    }

    fn context(&self, s: usize) -> Option<&ModelContext> {
        self.config.support_sizes().iter().position(|&v| v == s).map(|i| &self.contexts[i])
    }

    /// Cells in sweep order: support sizes outermost, then ascending `n`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for s in self.config.support_sizes() {
            for &n in &self.config.n_grid {
                cells.push(Cell { n, s });
            }
        }
        cells
    }

    /// Sample covariance of one trial (or `Sigma` itself in noiseless mode).
    pub fn sample_covariance(&self, cell: Cell, seed: u64) -> Result<SymmetricMatrix<f64>> {
        let ctx = self.context(cell.s).ok_or_else(|| crate::error::invalid(format!("s={} is not in the grid", cell.s)))?;
        match &ctx.sampler {
            None => Ok(ctx.model.sigma.clone()),
            Some(sampler) => empirical_covariance(&sampler.sample(cell.n, self.config.distribution, seed)?),
        }
    }

    pub fn select(&self, sigma_hat: &SymmetricMatrix<f64>, cell: Cell) -> Result<SupportEstimate> {
        let model = self.model(cell.s).ok_or_else(|| crate::error::invalid("unknown support size"))?;
        let sel = &self.config.selector;
        match sel.kind {
            SelectorKind::Oracle => oracle_select(model),
            SelectorKind::Diag => diagonal_threshold_select(sigma_hat, sel.s_target.unwrap_or(cell.s)),
            SelectorKind::Fps => {
                let rho = sel.rho.unwrap_or_else(|| default_rho(sigma_hat, cell.n, sel.rho_scale));
                Ok(fps_select(sigma_hat, model.k, rho, sel.admm)?.0)
            }
        }
    }

    /// Runs one trial. Deterministic in `(config, cell, trial_index)` except for `elapsed_ms`.
    pub fn run_trial(&self, cell: Cell, trial_index: usize) -> Result<TrialRecord> {
        let start = Instant::now();
        let model = self.model(cell.s).ok_or_else(|| crate::error::invalid("unknown support size"))?;
        let seed = trial_seed(self.config.master_seed, cell.n, cell.s, trial_index);
        let sigma_hat = self.sample_covariance(cell, seed)?;
        let support = self.select(&sigma_hat, cell)?;
        let bounds = match theorem_bounds(model, cell.n) {
            Ok(b) => Some(b),
            Err(Error::DegenerateGap { .. }) => None,
            Err(e) => return Err(e),
        };
        let symdiff = support.symmetric_difference(&model.support);
        let support_size = support.len();
        let fps_converged = support.diagnostics.converged;
        let submatrix_concentration = submatrix_concentration_stat(&sigma_hat, model)?;

        let (err_2inf, err_frob, err_proj, lemma2) = if support_size < model.k {
            (f64::NAN, f64::NAN, f64::NAN, false)
        } else {
            let est = estimate_sparse_subspace(&sigma_hat, support, model.k)?;
            let errs = aligned_errors(&est.u_tilde, &model.u)?;
            let proj = projection_distance_spectral(&est.u_tilde, &model.u)?;
            (errs.two_to_inf, errs.frobenius, proj, eigengap_stats(&est, model).all_ok())
        };

        Ok(TrialRecord {
            trial_id: 0,
            seed,
            n: cell.n,
            p: model.p,
            s: cell.s,
            k: model.k,
            selector: self.config.selector.kind,
            support_correct: symdiff == 0,
            support_size,
            err_2inf,
            err_frob,
            err_proj_spectral: err_proj,
            submatrix_concentration,
            cor_bound: bounds.map_or(f64::NAN, |b| b.cor_bound),
            thm1_total: bounds.map_or(f64::NAN, |b| b.thm1_total),
            lemma2_all_ok: lemma2,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            trial_index,
            support_symdiff: symdiff,
            fps_converged,
        })
    }

    /// Every trial of every cell on a pool of `workers` threads (0 = rayon default).
    ///
    /// Records come back sorted by (cell, trial index) and numbered in that order, so
    /// the output does not depend on the worker count.
    pub fn run_records(&self, workers: usize) -> Result<Vec<TrialRecord>> {
        let cells = self.cells();
        let tasks: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..self.config.trials_per_cell).map(move |t| (c, t)))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        let results: Vec<Result<(usize, TrialRecord)>> = pool.install(|| {
            tasks.par_iter().map(|&(c, t)| self.run_trial(cells[c], t).map(|r| (c, r))).collect()
        });
        let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;
        records.sort_by_key(|(c, r)| (*c, r.trial_index));
        Ok(records
            .into_iter()
            .enumerate()
            .map(|(id, (_, mut r))| {
                r.trial_id = id;
                r
            })
            .collect())
    }

    pub fn run(&self, workers: usize) -> Result<SweepResult> {
        let records = self.run_records(workers)?;
        let summary = self.summarize(&records)?;
        Ok(SweepResult { records, summary })
    }

    /// Aggregates computed from exactly the persisted record fields.
    pub fn summarize(&self, records: &[TrialRecord]) -> Result<Summary> {
        let mut cells = Vec::new();
        for cell in self.cells() {
            let model = self.model(cell.s).expect("cell from grid");
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.n == cell.n && r.s == cell.s).collect();
            cells.push(CellSummary::from_records(cell, &rows, model));
        }
        let primary_s = if self.config.support_sizes().contains(&self.config.s) { self.config.s } else { self.config.support_sizes()[0] };
        let mut fits = Vec::new();
        for s in self.config.support_sizes() {
            let along_n: Vec<&CellSummary> = cells.iter().filter(|c| c.s == s).collect();
            let pts = |get: &dyn Fn(&CellSummary) -> f64| -> Vec<(f64, f64)> {
                along_n.iter().map(|c| ((c.n as f64).ln(), get(c).ln())).collect()
            };
            fits.push(FitReport::new("err_2inf", "n", s, &pts(&|c| c.err_2inf.mean)));
            fits.push(FitReport::new("err_frob", "n", s, &pts(&|c| c.err_frob.mean)));
            fits.push(FitReport::new("submatrix_concentration", "n", s, &pts(&|c| c.submatrix_concentration.mean)));
        }
        let mut slope_s = None;
        if self.config.support_sizes().len() > 1 {
            let n_max = *self.config.n_grid.last().expect("validated");
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.n == n_max)
                .map(|c| ((c.s as f64).ln(), c.err_2inf.mean.ln()))
                .collect();
            let fit = FitReport::new("err_2inf", "s", n_max, &pts);
            slope_s = fit.slope;
            fits.push(fit);
        }
        let primary = fits
            .iter()
            .find(|f| f.quantity == "err_2inf" && f.along == "n" && f.fixed == primary_s)
            .expect("primary fit present");
        Ok(Summary {
            selector: self.config.selector.kind,
            distribution: self.config.distribution.name().to_string(),
            total_trials: records.len(),
            failed_trials: records.iter().filter(|r| r.failed()).count(),
            slope_n: primary.slope,
            slope_n_defined: primary.defined,
            slope_s,
            cells,
            fits,
        })
    }
}

/// Builds the experiment and runs the full sweep.
pub fn run_sweep(config: &ExperimentConfig, workers: usize) -> Result<SweepResult> {
    Experiment::new(config.clone())?.run(workers)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub s: usize,
    pub trials: usize,
    pub failed: usize,
    pub support_recovery_rate: f64,
    pub lemma2_rate: f64,
    pub err_2inf: Aggregate,
    pub err_frob: Aggregate,
    pub err_proj_spectral: Aggregate,
    pub submatrix_concentration: Aggregate,
    pub cor_bound: f64,
    pub thm1_total: f64,
    /// Mean `2->inf` error over mean Frobenius error.
    pub ratio_2inf_frob: f64,
    /// Mean `2->inf` error over the corollary bound.
    pub ratio_2inf_cor_bound: f64,
    pub concentration_rate: f64,
    pub spectral_proximity_rate: f64,
}

impl CellSummary {
    fn from_records(cell: Cell, rows: &[&TrialRecord], model: &SparseCovarianceModel<f64>) -> Self {
        let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| !r.failed()).collect();
        let col = |get: fn(&TrialRecord) -> f64| -> Aggregate { Aggregate::of(&ok.iter().map(|r| get(r)).collect::<Vec<_>>()) };
        let trials = rows.len();
        let frac = |count: usize| if trials == 0 { f64::NAN } else { count as f64 / trials as f64 };
        let err_2inf = col(|r| r.err_2inf);
        let err_frob = col(|r| r.err_frob);
        let cor_bound = rows.first().map_or(f64::NAN, |r| r.cor_bound);
        let bounds: Option<BoundBreakdown> = theorem_bounds(model, cell.n).ok();
        Self {
            n: cell.n,
            s: cell.s,
            trials,
            failed: trials - ok.len(),
            support_recovery_rate: frac(rows.iter().filter(|r| r.support_correct).count()),
            lemma2_rate: frac(rows.iter().filter(|r| r.lemma2_all_ok).count()),
            err_proj_spectral: col(|r| r.err_proj_spectral),
            submatrix_concentration: col(|r| r.submatrix_concentration),
            cor_bound,
            thm1_total: rows.first().map_or(f64::NAN, |r| r.thm1_total),
            ratio_2inf_frob: err_2inf.mean / err_frob.mean,
            ratio_2inf_cor_bound: err_2inf.mean / cor_bound,
            concentration_rate: concentration_rate(model, cell.n),
            spectral_proximity_rate: if bounds.is_some() { spectral_proximity_rate(model, cell.n) } else { f64::NAN },
            err_2inf,
            err_frob,
        }
    }
}

/// A log-log rate fit of one aggregated quantity along `n` (or `s`), the other held fixed.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub quantity: String,
    pub along: String,
    pub fixed: usize,
    pub defined: bool,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl FitReport {
    fn new(quantity: &str, along: &str, fixed: usize, points: &[(f64, f64)]) -> Self {
        let fit: Result<RateFit> = fit_rate(points);
        let (defined, slope, intercept, r_squared, reason) = match fit {
            Ok(f) => (true, Some(f.slope), Some(f.intercept), Some(f.r_squared), None),
            Err(e) => (false, None, None, None, Some(e.to_string())),
        };
        Self { quantity: quantity.into(), along: along.into(), fixed, defined, slope, intercept, r_squared, reason }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub selector: SelectorKind,
    pub distribution: String,
    pub total_trials: usize,
    pub failed_trials: usize,
    /// Slope of log mean `2->inf` error against log `n` at the configured `s`.
    pub slope_n: Option<f64>,
    pub slope_n_defined: bool,
    /// Slope of log mean `2->inf` error against log `s` at the largest `n`.
    pub slope_s: Option<f64>,
    pub cells: Vec<CellSummary>,
    pub fits: Vec<FitReport>,
}

impl Summary {
    pub fn cell(&self, n: usize, s: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.s == s)
    }
}
