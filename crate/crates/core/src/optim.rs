//! GD, momentum, RMSprop and Adam.
//!
//! Every optimizer is available in two equivalent forms:
//!
//! * a *history function* `Φ_n(g_1, …, g_n)` that sees the whole gradient
//!   history and returns the direction for step `n`
//!   (`Θ_n = Θ_{n−1} − γ Φ_n`). These are O(n) per step and exist for
//!   cross-validation only.
//! * a *recursive form* carrying the moment accumulators `m_n` and `𝕄_n`
//!   in [`OptimizerState`], used for all real trajectories.
//!
//! Both moments start at zero. Gradients are always evaluated at the
//! pre-update iterate. In Adam and RMSprop `ε` is added outside the square
//! root of the (bias-corrected) second moment.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::objectives::Objective;
use crate::{ParamVector, DIVERGENCE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    Momentum,
    Rmsprop,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [Self::Gd, Self::Momentum, Self::Rmsprop, Self::Adam];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gd => "GD",
            Self::Momentum => "Momentum",
            Self::Rmsprop => "RMSprop",
            Self::Adam => "Adam",
        }
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Self::Momentum | Self::Adam)
    }

    pub fn uses_beta(self) -> bool {
        matches!(self, Self::Rmsprop | Self::Adam)
    }

    pub fn uses_epsilon(self) -> bool {
        self.uses_beta()
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optimizer kind plus hyperparameters.
///
/// `alpha` is the first-moment decay, `beta` the second-moment decay,
/// `epsilon` the denominator regulariser and `gamma` the learning rate.
/// Parameters a kind does not use are carried but ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, alpha: f64, beta: f64, epsilon: f64, gamma: f64) -> Result<Self> {
        let cfg = Self {
            kind,
            alpha,
            beta,
            epsilon,
            gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gd(gamma: f64) -> Result<Self> {
        Self::new(OptimizerKind::Gd, 0.0, 0.0, 1.0, gamma)
    }

    pub fn momentum(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(OptimizerKind::Momentum, alpha, 0.0, 1.0, gamma)
    }

    pub fn rmsprop(beta: f64, epsilon: f64, gamma: f64) -> Result<Self> {
        Self::new(OptimizerKind::Rmsprop, 0.0, beta, epsilon, gamma)
    }

    pub fn adam(alpha: f64, beta: f64, epsilon: f64, gamma: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, alpha, beta, epsilon, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(usage(format!("gamma must be finite and > 0, got {}", self.gamma)));
        }
        if self.kind.uses_epsilon() && (!(self.epsilon > 0.0) || !self.epsilon.is_finite()) {
            return Err(usage(format!("epsilon must be finite and > 0, got {}", self.epsilon)));
        }
        match self.kind {
            OptimizerKind::Gd => {}
            OptimizerKind::Momentum => check_unit_interval("alpha", self.alpha, true, false)?,
            OptimizerKind::Rmsprop => check_unit_interval("beta", self.beta, true, true)?,
            OptimizerKind::Adam => {
                // β = 1 makes the bias correction (1 − βⁿ)⁻¹ᐟ² singular
                check_unit_interval("alpha", self.alpha, true, false)?;
                check_unit_interval("beta", self.beta, true, false)?;
            }
        }
        Ok(())
    }
}

fn check_unit_interval(name: &str, v: f64, closed_low: bool, closed_high: bool) -> Result<()> {
    let low_ok = if closed_low { v >= 0.0 } else { v > 0.0 };
    let high_ok = if closed_high { v <= 1.0 } else { v < 1.0 };
    if low_ok && high_ok {
        Ok(())
    } else {
        Err(usage(format!(
            "{name} must lie in {}0, 1{}, got {v}",
            if closed_low { "[" } else { "(" },
            if closed_high { "]" } else { ")" }
        )))
    }
}

/// State of the recursive form after `step` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    /// First moment `m_n`.
    pub m: ParamVector,
    /// Second moment `𝕄_n`, entrywise nonnegative.
    pub big_m: ParamVector,
    pub theta: ParamVector,
}

impl OptimizerState {
    pub fn new(theta: ParamVector) -> Self {
        let d = theta.len();
        Self {
            step: 0,
            m: ParamVector::zeros(d),
            big_m: ParamVector::zeros(d),
            theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetReached,
    BelowFloor,
    Diverged,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BudgetReached => "budget",
            Self::BelowFloor => "floor",
            Self::Diverged => "diverged",
        }
    }
}

/// The orbit of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `Θ_0, Θ_1, …`
    pub iterates: Vec<ParamVector>,
    /// `∇L(Θ_0), ∇L(Θ_1), …`, one per performed step.
    pub gradients: Vec<ParamVector>,
    /// `‖Θ_n − ϑ*‖`, same length as `iterates`.
    pub distances: Vec<f64>,
    /// Effective learning rates `Γ_n`, recorded for RMSprop and Adam only.
    pub effective_lr: Vec<ParamVector>,
    pub terminated: Termination,
}

impl Trajectory {
    pub fn steps_used(&self) -> usize {
        self.iterates.len() - 1
    }
}

fn check_history(history: &[ParamVector]) -> Result<usize> {
    let first = history
        .first()
        .ok_or_else(|| usage("gradient history must be nonempty"))?;
    let d = first.len();
    if history.iter().any(|g| g.len() != d) {
        return Err(usage("gradient history entries differ in length"));
    }
    Ok(d)
}

/// `Σ_{i=1}^n w^{n−i} f(g_{i,j})` for every coordinate `j`.
fn discounted_sum(history: &[ParamVector], w: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = history.len();
    let d = history[0].len();
    let mut acc = vec![0.0; d];
    for (i, g) in history.iter().enumerate() {
        let weight = w.powi((n - 1 - i) as i32);
        for (a, &x) in acc.iter_mut().zip(g.iter()) {
            *a += weight * f(x);
        }
    }
    acc
}

/// GD history function: the last gradient.
pub fn gd_direction(history: &[ParamVector]) -> Result<ParamVector> {
    check_history(history)?;
    Ok(history[history.len() - 1].clone())
}

/// Momentum history function `(1−α) Σ α^{n−i} g_i`.
pub fn momentum_direction(history: &[ParamVector], alpha: f64) -> Result<ParamVector> {
    check_history(history)?;
    check_unit_interval("alpha", alpha, true, false)?;
    let sum = discounted_sum(history, alpha, |x| x);
    Ok(ParamVector::new(sum.into_iter().map(|s| (1.0 - alpha) * s).collect()))
}

/// RMSprop history function `g_n / (ε + ((1−β) Σ β^{n−i} g_i²)^{1/2})`.
pub fn rmsprop_direction(history: &[ParamVector], beta: f64, epsilon: f64) -> Result<ParamVector> {
    check_history(history)?;
    check_unit_interval("beta", beta, true, true)?;
    if !(epsilon > 0.0) {
        return Err(usage(format!("epsilon must be > 0, got {epsilon}")));
    }
    let second = discounted_sum(history, beta, |x| x * x);
    let last = &history[history.len() - 1];
    Ok(ParamVector::new(
        last.iter()
            .zip(second)
            .map(|(&g, s)| g / (epsilon + ((1.0 - beta) * s).sqrt()))
            .collect(),
    ))
}

/// Adam history function: bias-corrected first moment over
/// `ε + sqrt(bias-corrected second moment)`.
pub fn adam_direction(history: &[ParamVector], alpha: f64, beta: f64, epsilon: f64) -> Result<ParamVector> {
    check_history(history)?;
    check_unit_interval("alpha", alpha, true, false)?;
    check_unit_interval("beta", beta, true, false)?;
    if !(epsilon > 0.0) {
        return Err(usage(format!("epsilon must be > 0, got {epsilon}")));
    }
    let n = history.len() as i32;
    let first = discounted_sum(history, alpha, |x| x);
    let second = discounted_sum(history, beta, |x| x * x);
    let first_scale = (1.0 - alpha) / (1.0 - alpha.powi(n));
    let second_scale = (1.0 - beta) / (1.0 - beta.powi(n));
    Ok(ParamVector::new(
        first
            .into_iter()
            .zip(second)
            .map(|(f, s)| first_scale * f / (epsilon + (second_scale * s).sqrt()))
            .collect(),
    ))
}

/// History function `Φ_n` of `config.kind` applied to `history`.
pub fn direction(history: &[ParamVector], config: &OptimizerConfig) -> Result<ParamVector> {
    match config.kind {
        OptimizerKind::Gd => gd_direction(history),
        OptimizerKind::Momentum => momentum_direction(history, config.alpha),
        OptimizerKind::Rmsprop => rmsprop_direction(history, config.beta, config.epsilon),
        OptimizerKind::Adam => adam_direction(history, config.alpha, config.beta, config.epsilon),
    }
}

/// One step of the recursive form. Returns the new state and, for RMSprop
/// and Adam, the effective learning rate `Γ_n` applied to the update.
pub fn step_with_lr(
    state: &OptimizerState,
    gradient: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(OptimizerState, Option<ParamVector>)> {
    if gradient.len() != state.theta.len() {
        return Err(usage(format!(
            "gradient has length {}, state has length {}",
            gradient.len(),
            state.theta.len()
        )));
    }
    if !gradient.is_finite() {
        return Err(Error::Divergence(format!(
            "non-finite gradient at step {}",
            state.step + 1
        )));
    }
    let n = state.step + 1;
    let OptimizerConfig {
        kind,
        alpha,
        beta,
        epsilon,
        gamma,
    } = *config;

    let (m, big_m, theta, lr) = match kind {
        OptimizerKind::Gd => {
            let theta = state.theta.zip_map(gradient, |t, g| t - gamma * g);
            (state.m.clone(), state.big_m.clone(), theta, None)
        }
        OptimizerKind::Momentum => {
            let m = state.m.zip_map(gradient, |m, g| alpha * m + (1.0 - alpha) * g);
            let theta = state.theta.zip_map(&m, |t, m| t - gamma * m);
            (m, state.big_m.clone(), theta, None)
        }
        OptimizerKind::Rmsprop => {
            let big_m = update_second_moment(&state.big_m, gradient, beta);
            let lr = big_m.map(|v| gamma / (epsilon + v.sqrt()));
            let theta = ParamVector::new(
                state
                    .theta
                    .iter()
                    .zip(lr.iter().zip(gradient.iter()))
                    .map(|(t, (l, g))| t - l * g)
                    .collect(),
            );
            (state.m.clone(), big_m, theta, Some(lr))
        }
        OptimizerKind::Adam => {
            let exp = i32::try_from(n).unwrap_or(i32::MAX);
            let m = state.m.zip_map(gradient, |m, g| alpha * m + (1.0 - alpha) * g);
            let big_m = update_second_moment(&state.big_m, gradient, beta);
            let first_corr = 1.0 / (1.0 - alpha.powi(exp));
            let second_corr = 1.0 / (1.0 - beta.powi(exp)).sqrt();
            let lr = big_m.map(|v| gamma * first_corr / (epsilon + second_corr * v.sqrt()));
            let theta = ParamVector::new(
                state
                    .theta
                    .iter()
                    .zip(lr.iter().zip(m.iter()))
                    .map(|(t, (l, m))| t - l * m)
                    .collect(),
            );
            (m, big_m, theta, Some(lr))
        }
    };

    Ok((
        OptimizerState {
            step: n,
            m,
            big_m,
            theta,
        },
        lr,
    ))
}

fn update_second_moment(big_m: &ParamVector, gradient: &ParamVector, beta: f64) -> ParamVector {
    big_m.zip_map(gradient, |v, g| beta * v + (1.0 - beta) * g * g)
}

/// One step of the recursive form for `config.kind`.
pub fn step_recursive(
    state: &OptimizerState,
    gradient: &ParamVector,
    config: &OptimizerConfig,
) -> Result<OptimizerState> {
    step_with_lr(state, gradient, config).map(|(s, _)| s)
}

/// Largest entrywise gap between `γ Φ_n(g_1..g_n)` and the recursive
/// displacement `Θ_{n−1} − Θ_n`, over every prefix of `history`.
pub fn form_discrepancy(history: &[ParamVector], config: &OptimizerConfig) -> Result<f64> {
    let d = check_history(history)?;
    config.validate()?;
    let mut state = OptimizerState::new(ParamVector::zeros(d));
    let mut worst = 0.0_f64;
    for n in 1..=history.len() {
        let next = step_recursive(&state, &history[n - 1], config)?;
        let displacement = state.theta.sub(&next.theta);
        let phi = direction(&history[..n], config)?.scale(config.gamma);
        worst = worst.max(displacement.max_abs_diff(&phi));
        state = next;
    }
    Ok(worst)
}

/// Absolute per-entry tolerance for [`direction_form_equivalence`].
pub const FORM_EQUIVALENCE_TOL: f64 = 1e-12;

/// Whether the history form and the recursive form agree on every prefix.
pub fn direction_form_equivalence(history: &[ParamVector], config: &OptimizerConfig) -> Result<bool> {
    Ok(form_discrepancy(history, config)? <= FORM_EQUIVALENCE_TOL)
}

/// Runs the recursive form from `init` until `budget` steps, until the
/// distance to the minimizer drops below `distance_floor`, or until an
/// iterate becomes non-finite or exceeds [`DIVERGENCE_THRESHOLD`].
///
/// Divergence is an outcome, not an error.
pub fn run(
    objective: &Objective,
    init: &ParamVector,
    config: &OptimizerConfig,
    budget: usize,
    distance_floor: f64,
) -> Result<Trajectory> {
    if init.len() != objective.dimension() {
        return Err(usage(format!(
            "init has dimension {}, objective has {}",
            init.len(),
            objective.dimension()
        )));
    }
    if budget == 0 {
        return Err(usage("budget must be >= 1"));
    }
    if !(distance_floor >= 0.0) {
        return Err(usage(format!("distance floor must be >= 0, got {distance_floor}")));
    }
    config.validate()?;

    let minimizer = objective.minimizer();
    let records_lr = matches!(config.kind, OptimizerKind::Rmsprop | OptimizerKind::Adam);
    let mut state = OptimizerState::new(init.clone());
    let d0 = init.distance(minimizer);
    let mut traj = Trajectory {
        iterates: vec![init.clone()],
        gradients: Vec::with_capacity(budget),
        distances: vec![d0],
        effective_lr: Vec::new(),
        terminated: Termination::BudgetReached,
    };
    if !init.is_finite() || !(d0 <= DIVERGENCE_THRESHOLD) {
        traj.terminated = Termination::Diverged;
        return Ok(traj);
    }
    if d0 < distance_floor {
        traj.terminated = Termination::BelowFloor;
        return Ok(traj);
    }

    for _ in 0..budget {
        let g = objective.gradient(&state.theta);
        let (next, lr) = match step_with_lr(&state, &g, config) {
            Ok(v) => v,
            Err(Error::Divergence(_)) => {
                traj.terminated = Termination::Diverged;
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        let dist = next.theta.distance(minimizer);
        traj.gradients.push(g);
        traj.iterates.push(next.theta.clone());
        traj.distances.push(dist);
        if records_lr {
            if let Some(lr) = lr {
                traj.effective_lr.push(lr);
            }
        }
        state = next;
        if !state.theta.is_finite() || !(dist <= DIVERGENCE_THRESHOLD) {
            traj.terminated = Termination::Diverged;
            return Ok(traj);
        }
        if dist < distance_floor {
            traj.terminated = Termination::BelowFloor;
            return Ok(traj);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_quadratic;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from(v)
    }

    #[test]
    fn gd_direction_is_last_gradient() {
        assert_eq!(gd_direction(&[pv(&[1.0, 2.0]), pv(&[3.0, 4.0])]).unwrap(), pv(&[3.0, 4.0]));
        assert_eq!(gd_direction(&[pv(&[0.0, 0.0])]).unwrap(), pv(&[0.0, 0.0]));
        assert_eq!(gd_direction(&[pv(&[-1.5])]).unwrap(), pv(&[-1.5]));
        assert!(matches!(gd_direction(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn momentum_direction_examples() {
        assert_eq!(momentum_direction(&[pv(&[2.0])], 0.5).unwrap(), pv(&[1.0]));
        assert_eq!(
            momentum_direction(&[pv(&[0.0]), pv(&[0.0]), pv(&[0.0])], 0.9).unwrap(),
            pv(&[0.0])
        );
        assert_eq!(momentum_direction(&[pv(&[1.0]), pv(&[1.0])], 0.5).unwrap(), pv(&[0.75]));
        assert!(momentum_direction(&[], 0.5).is_err());
    }

    #[test]
    fn rmsprop_direction_examples() {
        assert_eq!(rmsprop_direction(&[pv(&[3.0])], 0.0, 1.0).unwrap(), pv(&[0.75]));
        assert_eq!(rmsprop_direction(&[pv(&[0.0]), pv(&[0.0])], 0.3, 0.1).unwrap(), pv(&[0.0]));
        let got = rmsprop_direction(&[pv(&[1.0]), pv(&[1.0])], 0.5, 0.5).unwrap();
        assert!((got[0] - 1.0 / (0.5 + 0.75_f64.sqrt())).abs() < 1e-15);
        assert!(rmsprop_direction(&[], 0.5, 0.5).is_err());
    }

    #[test]
    fn adam_direction_examples() {
        for n in [1, 2, 7, 30] {
            let ones = vec![pv(&[1.0]); n];
            let got = adam_direction(&ones, 0.9, 0.999, 0.1).unwrap();
            assert!((got[0] - 1.0 / 1.1).abs() < 1e-12, "n={n}: {}", got[0]);
            let twos = vec![pv(&[-2.0]); n];
            let got = adam_direction(&twos, 0.9, 0.999, 0.5).unwrap();
            assert!((got[0] + 0.8).abs() < 1e-12, "n={n}: {}", got[0]);
        }
        assert_eq!(adam_direction(&vec![pv(&[0.0]); 4], 0.9, 0.99, 0.1).unwrap(), pv(&[0.0]));
        assert!(adam_direction(&[pv(&[1.0])], 1.0, 0.9, 0.1).is_err());
        assert!(adam_direction(&[pv(&[1.0])], 0.9, 1.0, 0.1).is_err());
        // α = 0 and β = 0 reduce to g / (ε + |g|)
        let got = adam_direction(&[pv(&[3.0]), pv(&[1.0])], 0.0, 0.0, 0.5).unwrap();
        assert!((got[0] - 1.0 / 1.5).abs() < 1e-15);
        assert!(adam_direction(&[], 0.9, 0.9, 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::gd(0.0).is_err());
        assert!(OptimizerConfig::momentum(1.0, 0.1).is_err());
        assert!(OptimizerConfig::momentum(0.0, 0.1).is_ok());
        assert!(OptimizerConfig::rmsprop(1.0, 0.1, 0.1).is_ok());
        assert!(OptimizerConfig::rmsprop(0.5, 0.0, 0.1).is_err());
        assert!(OptimizerConfig::adam(0.0, 0.9, 0.1, 0.1).is_ok());
        assert!(OptimizerConfig::adam(1.0, 0.9, 0.1, 0.1).is_err());
        assert!(OptimizerConfig::adam(0.9, 1.0, 0.1, 0.1).is_err());
        // GD ignores the other fields entirely
        assert!(OptimizerConfig::new(OptimizerKind::Gd, 5.0, -1.0, -1.0, 0.1).is_ok());
    }

    #[test]
    fn gd_step_exact_for_unit_curvature() {
        let s = OptimizerState::new(pv(&[1.0]));
        let next = step_recursive(&s, &pv(&[1.0]), &OptimizerConfig::gd(1.0).unwrap()).unwrap();
        assert_eq!(next.theta, pv(&[0.0]));
        assert_eq!(next.step, 1);
    }

    #[test]
    fn adam_zero_gradient_shrinks_first_moment() {
        let cfg = OptimizerConfig::adam(0.9, 0.999, 0.1, 0.05).unwrap();
        let s = OptimizerState {
            step: 3,
            m: pv(&[0.0, 0.0]),
            big_m: pv(&[0.2, 0.0]),
            theta: pv(&[1.0, -1.0]),
        };
        let next = step_recursive(&s, &pv(&[0.0, 0.0]), &cfg).unwrap();
        assert_eq!(next.theta, s.theta);
        assert_eq!(next.m, pv(&[0.0, 0.0]));

        let s = OptimizerState {
            m: pv(&[0.5, -2.0]),
            ..s
        };
        let next = step_recursive(&s, &pv(&[0.0, 0.0]), &cfg).unwrap();
        assert_eq!(next.m, pv(&[0.45, -1.8]));
    }

    #[test]
    fn momentum_step_example() {
        let cfg = OptimizerConfig::momentum(0.5, 0.1).unwrap();
        let s = OptimizerState::new(pv(&[1.0]));
        let next = step_recursive(&s, &pv(&[2.0]), &cfg).unwrap();
        assert_eq!(next.m, pv(&[1.0]));
        assert!((next.theta[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let cfg = OptimizerConfig::gd(0.1).unwrap();
        let s = OptimizerState::new(pv(&[1.0]));
        assert!(matches!(
            step_recursive(&s, &pv(&[f64::NAN]), &cfg),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn forms_agree_for_gd_and_momentum() {
        let hist: Vec<_> = (0..10).map(|i| pv(&[i as f64 * 0.3 - 1.0, (i as f64).sin()])).collect();
        assert!(direction_form_equivalence(&hist, &OptimizerConfig::gd(0.7).unwrap()).unwrap());
        assert!(direction_form_equivalence(&hist, &OptimizerConfig::momentum(0.99, 0.2).unwrap()).unwrap());
    }

    #[test]
    fn run_exact_one_step() {
        let q = make_quadratic(&[1.0], pv(&[0.0])).unwrap();
        let t = run(&q, &pv(&[1.0]), &OptimizerConfig::gd(1.0).unwrap(), 50, 1e-12).unwrap();
        assert_eq!(t.distances, vec![1.0, 0.0]);
        assert_eq!(t.terminated, Termination::BelowFloor);
        assert_eq!(t.gradients.len(), 1);
    }

    #[test]
    fn run_gd_decays_at_point_six() {
        let q = make_quadratic(&[1.0, 4.0], pv(&[0.0, 0.0])).unwrap();
        let t = run(&q, &pv(&[1.0, 1.0]), &OptimizerConfig::gd(0.4).unwrap(), 40, 0.0).unwrap();
        // both modes contract by exactly 0.6 in magnitude each step
        for (n, d) in t.distances.iter().enumerate() {
            let expected = 2.0_f64.sqrt() * 0.6_f64.powi(n as i32);
            assert!((d / expected - 1.0).abs() < 1e-12);
        }
        assert_eq!(t.terminated, Termination::BudgetReached);
    }

    #[test]
    fn run_detects_divergence() {
        let q = make_quadratic(&[1.0, 4.0], pv(&[0.0, 0.0])).unwrap();
        let t = run(&q, &pv(&[1.0, 1.0]), &OptimizerConfig::gd(3.0).unwrap(), 300, 1e-12).unwrap();
        assert_eq!(t.terminated, Termination::Diverged);
        assert!(t.steps_used() < 300);
        assert!(*t.distances.last().unwrap() > 1e12);
    }

    #[test]
    fn run_records_effective_lr_only_for_adaptive_kinds() {
        let q = make_quadratic(&[1.0, 4.0], pv(&[0.0, 0.0])).unwrap();
        let init = pv(&[0.3, 0.2]);
        let t = run(&q, &init, &OptimizerConfig::momentum(0.5, 0.2).unwrap(), 20, 0.0).unwrap();
        assert!(t.effective_lr.is_empty());
        let t = run(&q, &init, &OptimizerConfig::rmsprop(0.9, 0.1, 0.04).unwrap(), 20, 0.0).unwrap();
        assert_eq!(t.effective_lr.len(), 20);
    }

    #[test]
    fn run_rejects_bad_input() {
        let q = make_quadratic(&[1.0, 4.0], pv(&[0.0, 0.0])).unwrap();
        let cfg = OptimizerConfig::gd(0.1).unwrap();
        assert!(run(&q, &pv(&[1.0]), &cfg, 10, 0.0).is_err());
        assert!(run(&q, &pv(&[1.0, 1.0]), &cfg, 0, 0.0).is_err());
        assert!(run(&q, &pv(&[1.0, 1.0]), &cfg, 10, -1.0).is_err());
    }
}
