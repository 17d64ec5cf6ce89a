//! Empirical checks of the concentration, eigengap and spectral-proximity lemmas,
//! plus the exact sin-theta inequalities on random frame pairs.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::engine::{Experiment, ModelPolicy, SweepResult};
use crate::error::Result;
use crate::linalg::{
    orthonormalize_columns, procrustes_align, projection_distance_spectral, sin_theta_spectral, spectral_norm,
    OrthonormalFrame,
};
use crate::model::check_assumptions;
use crate::selectors::SelectorKind;

/// Ratio ceiling shared by the concentration and spectral-proximity suites.
pub const RATIO_CEILING: f64 = 10.0;
/// Accepted slope window for the submatrix concentration fit.
pub const CONCENTRATION_SLOPE: (f64, f64) = (-0.6, -0.4);
/// Minimum frequency of the eigengap inequalities at qualifying cells.
pub const EIGENGAP_FREQUENCY: f64 = 0.99;
pub const SIN_THETA_PAIRS: usize = 1000;
const SIN_THETA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteOutcome {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Runs all four suites. The sweep uses the true support whatever selector is configured.
pub fn verify_lemmas(config: &ExperimentConfig, workers: usize) -> Result<Vec<SuiteOutcome>> {
    let mut cfg = config.clone();
    cfg.selector.kind = SelectorKind::Oracle;
    let exp = Experiment::with_policy(cfg, ModelPolicy::AllowZeroGap)?;
    let sweep = exp.run(workers)?;
    Ok(vec![
        concentration_suite(&sweep),
        eigengap_suite(&exp, &sweep),
        proximity_suite(&exp, &sweep),
        sin_theta_suite(config.master_seed),
    ])
}

pub fn concentration_suite(sweep: &SweepResult) -> SuiteOutcome {
    let max_ratio = sweep
        .summary
        .cells
        .iter()
        .map(|c| c.submatrix_concentration.mean / c.concentration_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let fits: Vec<_> = sweep.summary.fits.iter().filter(|f| f.quantity == "submatrix_concentration").collect();
    let mut passed = max_ratio <= RATIO_CEILING;
    let mut slopes = Vec::new();
    for f in &fits {
        match f.slope {
            Some(slope) => {
                passed &= (CONCENTRATION_SLOPE.0..=CONCENTRATION_SLOPE.1).contains(&slope);
                slopes.push(format!("s={}: {slope:.3}", f.fixed));
            }
            None => slopes.push(format!("s={}: undefined", f.fixed)),
        }
    }
    SuiteOutcome {
        name: "submatrix-concentration",
        passed,
        detail: format!(
            "max mean/rate = {max_ratio:.3} (<= {RATIO_CEILING}); slope in n [{}] (window {:?})",
            slopes.join(", "),
            CONCENTRATION_SLOPE
        ),
    }
}

pub fn eigengap_suite(exp: &Experiment, sweep: &SweepResult) -> SuiteOutcome {
    let constants = exp.config().assumptions.into();
    let mut qualifying = Vec::new();
    let (mut hits, mut total) = (0usize, 0usize);
    for cell in &sweep.summary.cells {
        let model = exp.model(cell.s).expect("cell from grid");
        if !check_assumptions(model, cell.n, &constants).eigengap_ok {
            continue;
        }
        qualifying.push(format!("(n={}, s={})", cell.n, cell.s));
        for r in sweep.records.iter().filter(|r| r.n == cell.n && r.s == cell.s) {
            total += 1;
            hits += usize::from(r.lemma2_all_ok);
        }
    }
    let name = "eigengap";
    let model = exp.model(exp.config().support_sizes()[0]).expect("first model");
    if model.eigengap() <= 0.0 {
        return SuiteOutcome {
            name,
            passed: false,
            detail: format!(
                "zero eigengap: lambda_k = {} equals lambda_k+1 = {}",
                model.lambda_k(),
                model.lambda_k_plus_1()
            ),
        };
    }
    if total == 0 {
        return SuiteOutcome {
            name,
            passed: false,
            detail: "no cell satisfies the eigengap assumption; increase n".into(),
        };
    }
    let freq = hits as f64 / total as f64;
    SuiteOutcome {
        name,
        passed: freq >= EIGENGAP_FREQUENCY,
        detail: format!(
            "all three inequalities in {hits}/{total} trials = {freq:.4} (>= {EIGENGAP_FREQUENCY}) at {}",
            qualifying.join(" ")
        ),
    }
}

pub fn proximity_suite(exp: &Experiment, sweep: &SweepResult) -> SuiteOutcome {
    let name = "spectral-proximity";
    let model = exp.model(exp.config().support_sizes()[0]).expect("first model");
    if model.eigengap() <= 0.0 {
        return SuiteOutcome { name, passed: false, detail: "zero eigengap: proximity rate undefined".into() };
    }
    let max_ratio = sweep
        .summary
        .cells
        .iter()
        .map(|c| c.err_proj_spectral.mean / c.spectral_proximity_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    SuiteOutcome {
        name,
        passed: max_ratio <= RATIO_CEILING,
        detail: format!("max mean distance/rate = {max_ratio:.3} (<= {RATIO_CEILING})"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinThetaReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `||A - B W*|| / sin` observed.
    pub max_procrustes_ratio: f64,
    /// Largest `||AA^T - BB^T|| / sin` observed.
    pub max_projection_ratio: f64,
}

/// Random pair `(A, B)` with `p <= 50`, `k <= 5`; `B` is a perturbation of `A` at a random scale.
pub fn random_frame_pair(rng: &mut ChaCha8Rng) -> Result<(OrthonormalFrame<f64>, OrthonormalFrame<f64>)> {
    let p = rng.random_range(2..=50);
    let k = rng.random_range(1..=5.min(p - 1));
    let a = OrthonormalFrame::random(p, k, rng)?;
    let scale = 10f64.powf(rng.random_range(-4.0..1.0));
    loop {
        let noise = Array2::from_shape_simple_fn((p, k), || rng.sample::<f64, _>(StandardNormal));
        let b = &a.view() + &(noise * scale);
        if let Some(q) = orthonormalize_columns(b) {
            return Ok((a, OrthonormalFrame::new(q)?));
        }
    }
}

/// Checks `sin <= ||A - B W*|| <= sqrt(2) sin` and `sin <= ||AA^T - BB^T|| <= 2 sin` in spectral norm.
pub fn check_sin_theta(pairs: usize, seed: u64) -> Result<SinThetaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SinThetaReport { pairs, violations: 0, max_procrustes_ratio: 0.0, max_projection_ratio: 0.0 };
    for _ in 0..pairs {
        let (a, b) = random_frame_pair(&mut rng)?;
        let sin = sin_theta_spectral(&a, &b)?;
        let aligned = procrustes_align(&a, &b)?.aligned;
        let procrustes = spectral_norm(&(&a.view() - &aligned).view())?;
        let projection = projection_distance_spectral(&a, &b)?;
        let ok = sin <= procrustes + SIN_THETA_SLACK
            && procrustes <= 2f64.sqrt() * sin + SIN_THETA_SLACK
            && sin <= projection + SIN_THETA_SLACK
            && projection <= 2.0 * sin + SIN_THETA_SLACK;
        report.violations += usize::from(!ok);
        if sin > 1e-12 {
            report.max_procrustes_ratio = report.max_procrustes_ratio.max(procrustes / sin);
            report.max_projection_ratio = report.max_projection_ratio.max(projection / sin);
        }
    }
    Ok(report)
}

pub fn sin_theta_suite(seed: u64) -> SuiteOutcome {
    let name = "sin-theta";
    match check_sin_theta(SIN_THETA_PAIRS, seed) {
        Ok(r) => SuiteOutcome {
            name,
            passed: r.violations == 0,
            detail: format!(
                "{} violations over {} pairs; max ratios {:.4} (<= 1.4142), {:.4} (<= 2)",
                r.violations, r.pairs, r.max_procrustes_ratio, r.max_projection_ratio
            ),
        },
        Err(e) => SuiteOutcome { name, passed: false, detail: e.to_string() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_theta_has_no_violations() {
        let r = check_sin_theta(300, 5).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_procrustes_ratio >= 1.0 - 1e-9 && r.max_procrustes_ratio <= 2f64.sqrt() + 1e-9);
    }

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            "p = 40\ns = 8\nk = 1\nspikes = [6.0]\nbulk = 1.0\nn_grid = [1000, 4000, 16000]\ntrials_per_cell = 30\nmaster_seed = 2\n",
            &[],
        )
        .unwrap()
    }

    #[test]
    fn suites_pass_on_a_well_separated_model() {
        let out = verify_lemmas(&small(), 0).unwrap();
        assert_eq!(out.len(), 4);
        for s in &out {
            assert!(s.passed, "{}", s.line());
        }
    }

    #[test]
    fn zero_gap_fails_with_reason() {
        let mut cfg = small();
        cfg.spikes = vec![1.0];
        let out = verify_lemmas(&cfg, 0).unwrap();
        let gap = out.iter().find(|s| s.name == "eigengap").unwrap();
        assert!(!gap.passed);
        assert!(gap.detail.contains("zero eigengap"));
        assert!(out.iter().find(|s| s.name == "sin-theta").unwrap().passed);
    }
}
