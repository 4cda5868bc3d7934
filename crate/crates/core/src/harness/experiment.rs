//! Experiment execution: rate experiments, the Adam/GD separation run,
//! spectral dumps and the global Adam hyperparameter check.

use serde::Serialize;

use super::config::{linspace, ExperimentPlan, SeparationSpec, SpectrumSpec};
use crate::error::{usage, Error, Result};
use crate::objectives::make_quadratic;
use crate::optim::{run, OptimizerConfig, OptimizerKind, Termination};
use crate::ratefit::{compare_rates, estimate_rate, log_sup_ratio_statistic, Verdict};
use crate::spectral::{random_spd_with_spectrum, spectral_report, SpectralReport, SquareMatrix};
use crate::{Objective, ParamVector};

/// Outcome of one seeded initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub seed: Option<u64>,
    /// `None` when no fit was possible (divergence, or too few points above the floor).
    pub rho_hat: Option<f64>,
    pub residual: Option<f64>,
    pub verdict: Verdict,
    pub terminated: Termination,
    pub steps_used: usize,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: String,
    pub objective: Objective,
    pub optimizer: OptimizerConfig,
    pub predicted_rate: f64,
    pub tolerance: f64,
    pub repeats: Vec<RepeatOutcome>,
    /// `max_n (ρ+δ)^{−n} d_n` over all repeats, with `ρ` the predicted rate
    /// and `δ` the tolerance. `None` when `ρ + δ ≥ 1`.
    pub sup_statistic: Option<f64>,
}

impl ExperimentResult {
    pub fn kind(&self) -> OptimizerKind {
        self.optimizer.kind
    }

    pub fn gamma_used(&self) -> f64 {
        self.optimizer.gamma
    }

    pub fn alpha_used(&self) -> Option<f64> {
        self.kind().uses_alpha().then_some(self.optimizer.alpha)
    }

    pub fn beta_used(&self) -> Option<f64> {
        self.kind().uses_beta().then_some(self.optimizer.beta)
    }

    pub fn epsilon_used(&self) -> Option<f64> {
        self.kind().uses_epsilon().then_some(self.optimizer.epsilon)
    }

    /// Mean fitted rate over repeats that produced a fit.
    pub fn rho_hat_mean(&self) -> Option<f64> {
        let fits: Vec<f64> = self.repeats.iter().filter_map(|r| r.rho_hat).collect();
        (!fits.is_empty()).then(|| fits.iter().sum::<f64>() / fits.len() as f64)
    }

    /// Largest `|rho_hat − predicted|` over repeats that produced a fit.
    pub fn rho_hat_max_dev(&self) -> Option<f64> {
        self.repeats
            .iter()
            .filter_map(|r| r.rho_hat)
            .map(|r| (r - self.predicted_rate).abs())
            .reduce(f64::max)
    }

    /// Slower if any repeat is slower, else faster if any is faster, else match.
    pub fn verdict(&self) -> Verdict {
        let vs = self.repeats.iter().map(|r| r.verdict);
        if vs.clone().any(|v| v == Verdict::Slower) {
            Verdict::Slower
        } else if vs.clone().any(|v| v == Verdict::Faster) {
            Verdict::Faster
        } else {
            Verdict::Match
        }
    }

    pub fn steps_used(&self) -> usize {
        self.repeats.iter().map(|r| r.steps_used).max().unwrap_or(0)
    }

    /// Distinct termination reasons in order of first appearance, joined by `|`.
    pub fn terminated(&self) -> String {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.repeats {
            let s = r.terminated.as_str();
            if !seen.contains(&s) {
                seen.push(s);
            }
        }
        seen.join("|")
    }
}

/// Runs every repeat of `plan`. Divergence is recorded as a `slower` verdict.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let mut repeats = Vec::with_capacity(plan.inits.len());
    for (init, &seed) in plan.inits.iter().zip(&plan.seeds) {
        let traj = run(&plan.objective, init, &plan.optimizer, plan.budget, plan.floor)?;
        let fit = match traj.terminated {
            Termination::Diverged => None,
            _ => match estimate_rate(&traj.distances, plan.burn_in, plan.floor) {
                Ok(est) => Some(est),
                Err(Error::InsufficientData { .. }) => None,
                Err(e) => return Err(e),
            },
        };
        let verdict = match (fit, traj.terminated) {
            (Some(est), _) => compare_rates(est.rho_hat, plan.predicted_rate, plan.tolerance),
            // reached the floor before enough points accumulated
            (None, Termination::BelowFloor) => Verdict::Faster,
            (None, _) => Verdict::Slower,
        };
        repeats.push(RepeatOutcome {
            seed,
            rho_hat: fit.map(|e| e.rho_hat),
            residual: fit.map(|e| e.residual),
            verdict,
            terminated: traj.terminated,
            steps_used: traj.steps_used(),
            distances: traj.distances,
        });
    }

    let rho = plan.predicted_rate + plan.tolerance;
    let sup_statistic = if rho > 0.0 && rho < 1.0 {
        let mut worst = f64::NEG_INFINITY;
        for r in &repeats {
            worst = worst.max(log_sup_ratio_statistic(&r.distances, rho)?);
        }
        Some(worst.exp())
    } else {
        None
    };

    Ok(ExperimentResult {
        id: plan.id.clone(),
        objective: plan.objective.clone(),
        optimizer: plan.optimizer,
        predicted_rate: plan.predicted_rate,
        tolerance: plan.tolerance,
        repeats,
        sup_statistic,
    })
}

/// Runs every plan and returns results sorted by experiment id.
pub fn run_suite(plans: &[ExperimentPlan]) -> Result<Vec<ExperimentResult>> {
    let mut results = plans.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(results)
}

/// Outcome of the Adam-versus-GD separation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub spectrum: Vec<f64>,
    /// Adam's first-moment decay `((1−γ̄κ)/(1+γ̄κ))²`.
    pub alpha: f64,
    /// Adam's learning rate `εγ̄`.
    pub adam_gamma: f64,
    /// `1 − γ̄κ − δ`, the scaling base for GD.
    pub gd_reference: f64,
    /// `(1−γ̄κ)/(1+γ̄κ) + δ`, the scaling base for Adam.
    pub adam_reference: f64,
    /// Local contraction of GD at `γ̄`: `max_i |1 − γ̄λ_i|`.
    pub gd_rate: f64,
    /// Local contraction of Adam: `√α`.
    pub adam_rate: f64,
    /// `log(gd_reference^{−n} ‖Φ_n − ϑ‖)`, `n = 0..=budget`.
    pub gd_log_scaled: Vec<f64>,
    /// `log(adam_reference^{−n} ‖Θ_n − ϑ‖)`, `n = 0..=budget`.
    pub adam_log_scaled: Vec<f64>,
    /// Last-quarter mean minus first-quarter mean of `gd_log_scaled`.
    pub gd_log_ratio: f64,
    /// Last-quarter mean minus first-quarter mean of `adam_log_scaled`.
    pub adam_log_ratio: f64,
}

impl SeparationReport {
    /// GD's scaled sequence grows and Adam's decays.
    pub fn signs_as_predicted(&self) -> bool {
        self.gd_log_ratio > 0.0 && self.adam_log_ratio < 0.0
    }
}

fn quarter_log_ratio(logs: &[f64]) -> f64 {
    let q = (logs.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    mean(&logs[logs.len() - q..]) - mean(&logs[..q])
}

/// Runs GD at `γ̄` and Adam at `(α, β, εγ̄)` on the shifted quadratic and
/// scales both distance sequences by their reference rates.
pub fn run_separation(spec: &SeparationSpec) -> Result<SeparationReport> {
    let SeparationSpec {
        kappa_min: k,
        kappa_max: kk,
        gamma_bar: gb,
        epsilon: eps,
        beta,
        delta,
        budget,
        ..
    } = *spec;
    if !(k > 0.0 && kk > k && kk.is_finite()) {
        return Err(usage(format!(
            "curvature bounds violate 0 < kappa_min < kappa_max (got {k}, {kk})"
        )));
    }
    if !(gb > 0.0 && gb < 1.0 / (4.0 * kk)) {
        return Err(usage(format!(
            "learning-rate bound violates 0 < gamma_bar < 1/(4 kappa_max) = {} (got {gb})",
            1.0 / (4.0 * kk)
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(usage(format!("epsilon violates 0 < epsilon < 1 (got {eps})")));
    }
    let root = (1.0 - gb * k) / (1.0 + gb * k);
    let alpha = root * root;
    if !(beta > alpha * alpha && beta < 1.0) {
        return Err(usage(format!(
            "second-moment decay violates alpha^2 < beta < 1 with alpha = {alpha} (alpha^2 = {}, got beta = {beta})",
            alpha * alpha
        )));
    }
    if !(delta > 0.0 && delta < 1.0 - gb * k) {
        return Err(usage(format!(
            "delta violates 0 < delta < 1 - gamma_bar kappa_min = {} (got {delta})",
            1.0 - gb * k
        )));
    }
    if budget < 4 {
        return Err(usage(format!("budget must be >= 4, got {budget}")));
    }
    let d = spec.init.len();
    let spectrum = match &spec.spectrum {
        Some(s) => s.clone(),
        None if d >= 2 => linspace(k, kk, d),
        None => {
            return Err(usage(
                "init must have dimension >= 2 to carry both kappa_min and kappa_max, or give spectrum",
            ))
        }
    };
    if spectrum.len() != d {
        return Err(usage(format!(
            "spectrum has length {}, init has length {d}",
            spectrum.len()
        )));
    }
    let smin = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if smin != k || smax != kk {
        return Err(usage(format!(
            "spectrum extremes ({smin}, {smax}) must equal (kappa_min, kappa_max) = ({k}, {kk})"
        )));
    }
    let minimizer = match &spec.minimizer {
        Some(m) if m.len() != d => {
            return Err(usage(format!("minimizer has length {}, init has length {d}", m.len())))
        }
        Some(m) => ParamVector::from(m.as_slice()),
        None => ParamVector::zeros(d),
    };
    let init = ParamVector::from(spec.init.as_slice());
    let gap = init
        .iter()
        .zip(minimizer.iter())
        .map(|(x, t)| (x - t).abs())
        .fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(usage(
            "init violates min_i |init_i - minimizer_i| > 0: every coordinate must start off the minimizer",
        ));
    }

    let objective = make_quadratic(&spectrum, minimizer)?;
    let gd = run(&objective, &init, &OptimizerConfig::gd(gb)?, budget, 0.0)?;
    let adam_cfg = OptimizerConfig::adam(alpha, beta, eps, eps * gb)?;
    let adam = run(&objective, &init, &adam_cfg, budget, 0.0)?;
    for (name, t) in [("GD", &gd), ("Adam", &adam)] {
        if t.terminated == Termination::Diverged {
            return Err(Error::Divergence(format!("{name} diverged during the separation run")));
        }
    }

    let gd_reference = 1.0 - gb * k - delta;
    let adam_reference = root + delta;
    let scale = |ds: &[f64], base: f64| -> Vec<f64> {
        let lb = base.ln();
        ds.iter().enumerate().map(|(n, d)| d.ln() - n as f64 * lb).collect()
    };
    let gd_log_scaled = scale(&gd.distances, gd_reference);
    let adam_log_scaled = scale(&adam.distances, adam_reference);

    Ok(SeparationReport {
        gd_rate: spectrum.iter().map(|l| (1.0 - gb * l).abs()).fold(0.0, f64::max),
        adam_rate: root,
        gd_log_ratio: quarter_log_ratio(&gd_log_scaled),
        adam_log_ratio: quarter_log_ratio(&adam_log_scaled),
        spectrum,
        alpha,
        adam_gamma: eps * gb,
        gd_reference,
        adam_reference,
        gd_log_scaled,
        adam_log_scaled,
    })
}

/// Verdict of [`validate_adam_global_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalConfigCheck {
    pub ok: bool,
    /// One message per failed inequality.
    pub diagnostics: Vec<String>,
}

/// Checks the sufficient conditions `α² < β` and `γ < αε/𝒦` for global
/// convergence of Adam, where `𝒦` bounds the gradient's Lipschitz constant.
pub fn validate_adam_global_config(
    kappa_max_lipschitz: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
) -> GlobalConfigCheck {
    let mut diagnostics = Vec::new();
    if !(alpha * alpha < beta) {
        diagnostics.push(format!(
            "alpha^2 < beta fails: alpha^2 = {} >= beta = {beta}",
            alpha * alpha
        ));
    }
    let bound = alpha * epsilon / kappa_max_lipschitz;
    if !(gamma < bound) {
        diagnostics.push(format!(
            "gamma < alpha*epsilon/kappa_max fails: gamma = {gamma} >= {bound}"
        ));
    }
    GlobalConfigCheck {
        ok: diagnostics.is_empty(),
        diagnostics,
    }
}

/// Spectrum of the momentum block matrix for a `[spectrum]` config entry.
/// Without explicit `alpha`/`gamma` the heavy-ball choice is used.
pub fn run_spectrum(spec: &SpectrumSpec) -> Result<(SpectralReport, f64, f64)> {
    if spec.spectrum.is_empty() || spec.spectrum.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(usage("spectrum must be nonempty with positive finite entries"));
    }
    let k = spec.spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let kk = spec.spectrum.iter().copied().fold(0.0, f64::max);
    let gamma = spec.gamma.unwrap_or(1.0 / (k * kk).sqrt());
    let alpha = spec.alpha.unwrap_or_else(|| {
        let r = (1.0 - gamma * k) / (1.0 + gamma * k);
        r * r
    });
    if !(gamma > 0.0) {
        return Err(usage(format!("gamma must be > 0, got {gamma}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(usage(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let hessian = match spec.rotation_seed {
        Some(seed) => random_spd_with_spectrum(&spec.spectrum, seed)?,
        None => SquareMatrix::diagonal(&spec.spectrum),
    };
    Ok((spectral_report(&hessian, alpha, gamma)?, alpha, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separation() -> SeparationSpec {
        SeparationSpec {
            kappa_min: 1.0,
            kappa_max: 4.0,
            gamma_bar: 0.05,
            epsilon: 0.1,
            beta: 0.9,
            delta: 0.01,
            budget: 100,
            init: vec![1.0, 1.0],
            minimizer: None,
            spectrum: None,
        }
    }

    #[test]
    fn validator_examples() {
        assert!(validate_adam_global_config(4.0, 0.9, 0.999, 0.02, 0.1).ok);
        let bad = validate_adam_global_config(4.0, 0.9, 0.8, 0.02, 0.1);
        assert!(!bad.ok);
        assert_eq!(bad.diagnostics.len(), 1);
        assert!(bad.diagnostics[0].starts_with("alpha^2 < beta"));
        let edge = validate_adam_global_config(4.0, 0.5, 0.5, 0.5 * 0.1 / 4.0, 0.1);
        assert!(!edge.ok);
        assert!(edge.diagnostics[0].starts_with("gamma <"));
    }

    #[test]
    fn separation_preconditions_name_hypothesis() {
        let mut s = separation();
        s.gamma_bar = 0.25;
        assert!(matches!(run_separation(&s), Err(Error::Usage(m)) if m.contains("1/(4 kappa_max)")));
        let mut s = separation();
        s.beta = 0.5;
        assert!(matches!(run_separation(&s), Err(Error::Usage(m)) if m.contains("alpha^2 < beta")));
        let mut s = separation();
        s.init = vec![1.0, 0.0];
        assert!(matches!(run_separation(&s), Err(Error::Usage(m)) if m.contains("min_i")));
        let mut s = separation();
        s.init = vec![1.0];
        assert!(run_separation(&s).is_err());
    }

    #[test]
    fn separation_reports_rates() {
        let r = run_separation(&separation()).unwrap();
        assert!((r.alpha - 0.818594).abs() < 5e-7);
        assert!((r.adam_rate - r.alpha.sqrt()).abs() < 1e-15);
        assert!((r.gd_rate - 0.95).abs() < 1e-15);
        assert_eq!(r.gd_log_scaled.len(), 101);
        assert!(r.gd_log_ratio > 0.0);
    }

    #[test]
    fn spectrum_defaults_to_heavy_ball() {
        let spec = SpectrumSpec {
            spectrum: vec![1.0, 4.0],
            alpha: None,
            gamma: None,
            rotation_seed: Some(3),
        };
        let (rep, alpha, gamma) = run_spectrum(&spec).unwrap();
        assert!((gamma - 0.5).abs() < 1e-15);
        assert!((alpha - 1.0 / 9.0).abs() < 1e-15);
        assert!((rep.spectral_radius - 1.0 / 3.0).abs() < 1e-10);
    }
}
