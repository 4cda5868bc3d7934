//! Experiment config files.
//!
//! A config is a TOML document with up to three kinds of entries:
//!
//! ```toml
//! [[experiment]]
//! id = "adam-cond4"
//!
//! [experiment.objective]
//! family = "quadratic"          # or "quartic_perturbed"
//! spectrum = [1.0, 4.0]         # or kappa_min / kappa_max / dimension
//! minimizer = [0.0, 0.0]        # default: origin
//! perturbation = 0.0            # quartic coefficient c
//!
//! [experiment.optimizer]
//! kind = "adam"                 # gd | momentum | rmsprop | adam
//! auto = true                   # derive gamma (and alpha) from the spectrum
//! beta = 0.9
//! epsilon = 0.1
//!
//! [experiment.init]
//! radius = 0.5                  # or point = [..]
//! seed = 1                      # repeat r uses seed + r
//!
//! [experiment.run]
//! budget = 300
//! repeats = 5
//! burn_in = 0.5
//! tolerance = 0.02
//! # floor = 1e-12               # default: see `default_floor`
//!
//! [separation]                  # for `ratelab separation`
//! kappa_min = 1.0
//! kappa_max = 4.0
//! gamma_bar = 0.05
//! epsilon = 0.1
//! beta = 0.9
//! delta = 0.01
//! budget = 500
//! init = [1.0, 1.0]
//!
//! [spectrum]                    # for `ratelab spectrum`
//! spectrum = [1.0, 4.0]
//! alpha = 0.1111111111111111    # default: heavy-ball choice
//! gamma = 0.5
//! rotation_seed = 42            # optional: non-diagonal Hessian
//! ```
//!
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::objectives::{make_quadratic, make_quartic_perturbed, Objective, ObjectiveFamily};
use crate::optim::{OptimizerConfig, OptimizerKind};
use crate::ratefit::{DEFAULT_BURN_IN, DEFAULT_RATE_TOLERANCE, MIN_FIT_POINTS};
use crate::rng::{seeded, uniform_in_ball};
use crate::spectral::{linearized_rate, predicted_rate};
use crate::{ParamVector, DEFAULT_DISTANCE_FLOOR};

pub const DEFAULT_BUDGET: usize = 300;
pub const DEFAULT_REPEATS: usize = 5;
pub const DEFAULT_INIT_RADIUS: f64 = 0.5;
pub const DEFAULT_BASE_SEED: u64 = 1;

/// Smallest floor ever chosen by [`default_floor`]; squares of distances
/// above it stay well inside the normal f64 range.
pub const MIN_DEFAULT_FLOOR: f64 = 1e-150;

/// Distance floor used when a config does not set one.
///
/// `Θ_n − ϑ*` loses all significant digits once it falls to about
/// `u ‖ϑ*‖`, so the floor is [`DEFAULT_DISTANCE_FLOOR`] relative to the
/// largest minimizer entry. A minimizer at the origin has no cancellation
/// and gets [`MIN_DEFAULT_FLOOR`].
pub fn default_floor(minimizer: &ParamVector) -> f64 {
    let scale = minimizer.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    (DEFAULT_DISTANCE_FLOOR * scale).max(MIN_DEFAULT_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub experiment: Vec<ExperimentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<SeparationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Applies `--seed` / `--budget` style overrides to every experiment.
    pub fn apply_overrides(&mut self, seed: Option<u64>, budget: Option<usize>) {
        for exp in &mut self.experiment {
            if let Some(s) = seed {
                exp.init.seed = Some(s);
            }
            if let Some(b) = budget {
                exp.run.budget = Some(b);
            }
        }
        if let (Some(b), Some(sep)) = (budget, self.separation.as_mut()) {
            sep.budget = b;
        }
    }

    /// Resolves every experiment, collecting all field errors.
    pub fn plans(&self) -> Result<Vec<ExperimentPlan>> {
        if self.experiment.is_empty() {
            return Err(Error::InvalidSpec(vec![FieldError::new(
                "experiment",
                "config contains no [[experiment]] entries",
            )]));
        }
        let mut errors = Vec::new();
        let mut plans = Vec::new();
        for (i, exp) in self.experiment.iter().enumerate() {
            match exp.plan_at(&format!("experiment[{i}]")) {
                Ok(p) => plans.push(p),
                Err(Error::InvalidSpec(mut e)) => errors.append(&mut e),
                Err(e) => return Err(e),
            }
        }
        let mut ids: Vec<&str> = self.experiment.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                errors.push(FieldError::new("experiment.id", format!("duplicate id {:?}", pair[0])));
            }
        }
        if errors.is_empty() {
            Ok(plans)
        } else {
            Err(Error::InvalidSpec(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub objective: ObjectiveSpec,
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    #[serde(default = "default_family")]
    pub family: ObjectiveFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimizer: Option<Vec<f64>>,
    #[serde(default)]
    pub perturbation: f64,
}

fn default_family() -> ObjectiveFamily {
    ObjectiveFamily::Quadratic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    #[serde(default)]
    pub auto: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSpec {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub gamma_bar: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub delta: f64,
    pub budget: usize,
    pub init: Vec<f64>,
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimizer: Option<Vec<f64>>,
    /// Defaults to `init.len()` values evenly spaced over `[kappa_min, kappa_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub spectrum: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

/// `d` values evenly spaced over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, d: usize) -> Vec<f64> {
    match d {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..d)
            .map(|i| if i == d - 1 { hi } else { lo + (hi - lo) * i as f64 / (d - 1) as f64 })
            .collect(),
    }
}

/// A fully resolved experiment: every default applied, every "auto"
/// hyperparameter derived, every initial point drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub id: String,
    pub objective: Objective,
    pub optimizer: OptimizerConfig,
    pub auto: bool,
    pub predicted_rate: f64,
    pub inits: Vec<ParamVector>,
    pub seeds: Vec<Option<u64>>,
    pub budget: usize,
    pub floor: f64,
    pub burn_in: f64,
    pub tolerance: f64,
}

impl ExperimentSpec {
    pub fn plan(&self) -> Result<ExperimentPlan> {
        self.plan_at("experiment")
    }

    fn plan_at(&self, path: &str) -> Result<ExperimentPlan> {
        let mut errs = Vec::new();
        let mut err = |field: &str, msg: String| errs.push(FieldError::new(format!("{path}.{field}"), msg));

        if self.id.trim().is_empty() {
            err("id", "must be nonempty".into());
        }

        // objective
        let o = &self.objective;
        let spectrum = match (&o.spectrum, o.kappa_min, o.kappa_max) {
            (Some(s), None, None) => Some(s.clone()),
            (None, Some(lo), Some(hi)) => {
                let d = o.dimension.unwrap_or(2);
                if d == 0 {
                    err("objective.dimension", "must be positive".into());
                    None
                } else if d == 1 && lo != hi {
                    err("objective.dimension", "dimension 1 requires kappa_min == kappa_max".into());
                    None
                } else if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    err("objective.kappa_max", format!("need 0 < kappa_min <= kappa_max, got {lo}, {hi}"));
                    None
                } else {
                    Some(linspace(lo, hi, d))
                }
            }
            (Some(_), _, _) => {
                err("objective.spectrum", "give either spectrum or kappa_min/kappa_max, not both".into());
                None
            }
            _ => {
                err(
                    "objective.spectrum",
                    "missing: give spectrum or both kappa_min and kappa_max".into(),
                );
                None
            }
        };
        if o.spectrum.is_some() && o.dimension.is_some() {
            err("objective.dimension", "only valid with kappa_min/kappa_max".into());
        }
        let objective = spectrum.and_then(|spec| {
            if let Some((i, l)) = spec.iter().enumerate().find(|(_, l)| !(**l > 0.0 && l.is_finite())) {
                err(&format!("objective.spectrum[{i}]"), format!("eigenvalue {l} is not positive"));
                return None;
            }
            if spec.is_empty() {
                err("objective.spectrum", "must be nonempty".into());
                return None;
            }
            let minimizer = match &o.minimizer {
                Some(m) if m.len() != spec.len() => {
                    err(
                        "objective.minimizer",
                        format!("length {} does not match dimension {}", m.len(), spec.len()),
                    );
                    return None;
                }
                Some(m) => ParamVector::from(m.as_slice()),
                None => ParamVector::zeros(spec.len()),
            };
            let built = match o.family {
                ObjectiveFamily::Quadratic => {
                    if o.perturbation != 0.0 {
                        err("objective.perturbation", "only valid for family = \"quartic_perturbed\"".into());
                        return None;
                    }
                    make_quadratic(&spec, minimizer)
                }
                ObjectiveFamily::QuarticPerturbed => make_quartic_perturbed(&spec, minimizer, o.perturbation),
            };
            match built {
                Ok(obj) => Some(obj),
                Err(e) => {
                    err("objective", e.to_string());
                    None
                }
            }
        });

        // optimizer
        let p = &self.optimizer;
        let kind = p.kind;
        let epsilon = if kind.uses_epsilon() {
            match p.epsilon {
                Some(e) => Some(e),
                None => {
                    err("optimizer.epsilon", format!("required for {kind}"));
                    None
                }
            }
        } else {
            if p.epsilon.is_some() {
                err("optimizer.epsilon", format!("not used by {kind}"));
            }
            Some(1.0)
        };
        let beta = if kind.uses_beta() {
            match p.beta {
                Some(b) => Some(b),
                None => {
                    err("optimizer.beta", format!("required for {kind}"));
                    None
                }
            }
        } else {
            if p.beta.is_some() {
                err("optimizer.beta", format!("not used by {kind}"));
            }
            Some(0.0)
        };
        if !kind.uses_alpha() && p.alpha.is_some() {
            err("optimizer.alpha", format!("not used by {kind}"));
        }
        if p.auto {
            if p.gamma.is_some() {
                err("optimizer.gamma", "cannot be set together with auto = true".into());
            }
            if p.alpha.is_some() {
                err("optimizer.alpha", "cannot be set together with auto = true".into());
            }
        } else {
            if p.gamma.is_none() {
                err("optimizer.gamma", "required unless auto = true".into());
            }
            if kind.uses_alpha() && p.alpha.is_none() {
                err("optimizer.alpha", format!("required for {kind} unless auto = true"));
            }
        }

        let mut resolved = None;
        if let (Some(obj), Some(eps), Some(beta)) = (&objective, epsilon, beta) {
            let (gamma, alpha, rate) = if p.auto {
                match predicted_rate(kind, obj.kappa_min(), obj.kappa_max(), eps) {
                    Ok(pred) => (Some(pred.gamma_star), pred.alpha_star.unwrap_or(0.0), Some(pred.rate)),
                    Err(e) => {
                        err("optimizer.auto", e.to_string());
                        (None, 0.0, None)
                    }
                }
            } else {
                (p.gamma, p.alpha.unwrap_or(0.0), None)
            };
            if let Some(gamma) = gamma {
                match OptimizerConfig::new(kind, alpha, beta, eps, gamma) {
                    Ok(cfg) => {
                        let rate = rate.unwrap_or_else(|| {
                            linearized_rate(kind, obj.spectrum(), cfg.alpha, cfg.gamma, cfg.epsilon)
                        });
                        resolved = Some((cfg, rate));
                    }
                    Err(e) => err("optimizer", e.to_string()),
                }
            }
        }

        // run
        let r = &self.run;
        let budget = r.budget.unwrap_or(DEFAULT_BUDGET);
        let burn_in = r.burn_in.unwrap_or(DEFAULT_BURN_IN);
        let tolerance = r.tolerance.unwrap_or(DEFAULT_RATE_TOLERANCE);
        let repeats = r.repeats.unwrap_or(DEFAULT_REPEATS);
        if !(0.0..1.0).contains(&burn_in) {
            err("run.burn_in", format!("must lie in [0, 1), got {burn_in}"));
        } else if (((budget + 1) as f64) * (1.0 - burn_in)).floor() < MIN_FIT_POINTS as f64 {
            err(
                "run.budget",
                format!("{budget} steps leave fewer than {MIN_FIT_POINTS} fit points after burn-in {burn_in}"),
            );
        }
        if !(tolerance > 0.0) {
            err("run.tolerance", format!("must be > 0, got {tolerance}"));
        }
        if repeats == 0 {
            err("run.repeats", "must be >= 1".into());
        }
        if let Some(f) = r.floor {
            if !(f > 0.0) {
                err("run.floor", format!("must be > 0, got {f}"));
            }
        }

        // init
        let i = &self.init;
        let radius = i.radius.unwrap_or(DEFAULT_INIT_RADIUS);
        if i.point.is_some() && (i.radius.is_some() || i.seed.is_some()) {
            err("init.point", "give either point or radius/seed, not both".into());
        }
        if !(radius > 0.0 && radius.is_finite()) {
            err("init.radius", format!("must be > 0, got {radius}"));
        }
        let mut inits = Vec::new();
        let mut seeds = Vec::new();
        if let Some(obj) = &objective {
            match &i.point {
                Some(pt) if pt.len() != obj.dimension() => err(
                    "init.point",
                    format!("length {} does not match dimension {}", pt.len(), obj.dimension()),
                ),
                Some(pt) if !pt.iter().all(|x| x.is_finite()) => err("init.point", "entries must be finite".into()),
                Some(pt) => {
                    inits = vec![ParamVector::from(pt.as_slice()); repeats];
                    seeds = vec![None; repeats];
                }
                None if radius > 0.0 && radius.is_finite() => {
                    let base = i.seed.unwrap_or(DEFAULT_BASE_SEED);
                    for r in 0..repeats as u64 {
                        let seed = base.wrapping_add(r);
                        inits.push(uniform_in_ball(&mut seeded(seed), obj.minimizer(), radius));
                        seeds.push(Some(seed));
                    }
                }
                None => {}
            }
        }

        if !errs.is_empty() {
            return Err(Error::InvalidSpec(errs));
        }
        let objective = objective.expect("validated");
        let (optimizer, predicted_rate) = resolved.expect("validated");
        let floor = r.floor.unwrap_or_else(|| default_floor(objective.minimizer()));
        Ok(ExperimentPlan {
            id: self.id.clone(),
            objective,
            optimizer,
            auto: p.auto,
            predicted_rate,
            inits,
            seeds,
            budget,
            floor,
            burn_in,
            tolerance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUITE: &str = r#"
[[experiment]]
id = "gd"
[experiment.objective]
spectrum = [1.0, 4.0]
[experiment.optimizer]
kind = "gd"
auto = true

[[experiment]]
id = "adam"
[experiment.objective]
family = "quartic_perturbed"
kappa_min = 1.0
kappa_max = 4.0
dimension = 3
perturbation = 0.1
[experiment.optimizer]
kind = "adam"
auto = true
beta = 0.9
epsilon = 0.1
[experiment.init]
radius = 0.1
seed = 7
[experiment.run]
budget = 200
repeats = 2
"#;

    #[test]
    fn parses_and_resolves_auto() {
        let cfg = ConfigFile::parse(SUITE).unwrap();
        let plans = cfg.plans().unwrap();
        assert_eq!(plans.len(), 2);
        let gd = &plans[0];
        assert!((gd.optimizer.gamma - 0.4).abs() < 1e-15);
        assert!((gd.predicted_rate - 0.6).abs() < 1e-15);
        assert_eq!(gd.inits.len(), DEFAULT_REPEATS);
        assert_eq!(gd.seeds[0], Some(1));
        assert_eq!(gd.floor, MIN_DEFAULT_FLOOR);
        let adam = &plans[1];
        assert_eq!(adam.objective.spectrum(), &[1.0, 2.5, 4.0]);
        assert!((adam.optimizer.alpha - 1.0 / 9.0).abs() < 1e-15);
        assert!((adam.optimizer.gamma - 0.05).abs() < 1e-15);
        assert_eq!(adam.seeds, vec![Some(7), Some(8)]);
        for p in &adam.inits {
            assert!(p.norm() < 0.1);
        }
    }

    #[test]
    fn round_trip_gives_identical_plan() {
        let cfg = ConfigFile::parse(SUITE).unwrap();
        let text = cfg.to_toml().unwrap();
        let again = ConfigFile::parse(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.plans().unwrap(), again.plans().unwrap());
    }

    #[test]
    fn field_level_diagnostics() {
        let text = r#"
[[experiment]]
id = "bad"
[experiment.objective]
spectrum = [1.0, -4.0]
[experiment.optimizer]
kind = "adam"
gamma = 0.1
[experiment.run]
repeats = 0
tolerance = 0.0
"#;
        let err = ConfigFile::parse(text).unwrap().plans().unwrap_err();
        let Error::InvalidSpec(fields) = err else {
            panic!("expected InvalidSpec");
        };
        let names: Vec<&str> = fields.iter().map(|f| f.field.as_str()).collect();
        for expected in [
            "experiment[0].objective.spectrum[1]",
            "experiment[0].optimizer.epsilon",
            "experiment[0].optimizer.beta",
            "experiment[0].optimizer.alpha",
            "experiment[0].run.repeats",
            "experiment[0].run.tolerance",
        ] {
            assert!(names.contains(&expected), "missing {expected} in {names:?}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "[[experiment]]\nid = \"x\"\nbogus = 1\n";
        assert!(matches!(ConfigFile::parse(text), Err(Error::Parse(_))));
    }

    #[test]
    fn auto_needs_declared_curvature() {
        let text = r#"
[[experiment]]
id = "x"
[experiment.objective]
dimension = 2
[experiment.optimizer]
kind = "gd"
auto = true
"#;
        assert!(matches!(
            ConfigFile::parse(text).unwrap().plans(),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ConfigFile::parse(SUITE).unwrap();
        cfg.apply_overrides(Some(100), Some(50));
        let plans = cfg.plans().unwrap();
        assert!(plans.iter().all(|p| p.budget == 50));
        assert_eq!(plans[1].seeds[0], Some(100));
    }

    #[test]
    fn floor_defaults() {
        assert_eq!(default_floor(&ParamVector::zeros(2)), MIN_DEFAULT_FLOOR);
        assert_eq!(default_floor(&ParamVector::new(vec![1.0, -1.0])), DEFAULT_DISTANCE_FLOOR);
        assert_eq!(default_floor(&ParamVector::new(vec![3.0])), 3.0 * DEFAULT_DISTANCE_FLOOR);
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 4.0, 2), vec![1.0, 4.0]);
        assert_eq!(linspace(1.0, 4.0, 4), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(linspace(2.0, 2.0, 1), vec![2.0]);
    }
}
