//! Test objectives with a known minimizer and Hessian spectrum.
//!
//! Both families are separable: the Hessian at the minimizer is
//! `diag(spectrum)`, so `kappa_min`/`kappa_max` are read off the spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::rng::{seeded, uniform_in_ball};
use crate::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveFamily {
    /// `L(θ) = ½ Σ λ_i (θ_i − ϑ_i)²`
    Quadratic,
    /// `L(θ) = ½ Σ λ_i (θ_i − ϑ_i)² + c Σ (θ_i − ϑ_i)⁴`
    QuarticPerturbed,
}

/// A gradient oracle with known minimizer and curvature bounds at it.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    family: ObjectiveFamily,
    spectrum: Vec<f64>,
    minimizer: ParamVector,
    quartic: f64,
}

/// Quadratic with diagonal Hessian `diag(spectrum)` and minimizer `minimizer`.
pub fn make_quadratic(spectrum: &[f64], minimizer: ParamVector) -> Result<Objective> {
    validate_spectrum(spectrum, &minimizer)?;
    Ok(Objective {
        family: ObjectiveFamily::Quadratic,
        spectrum: spectrum.to_vec(),
        minimizer,
        quartic: 0.0,
    })
}

/// Quadratic plus `c Σ (θ_i − ϑ_i)⁴`. The quartic term has zero Hessian at
/// the minimizer, so curvature bounds there match [`make_quadratic`].
pub fn make_quartic_perturbed(spectrum: &[f64], minimizer: ParamVector, c: f64) -> Result<Objective> {
    validate_spectrum(spectrum, &minimizer)?;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(usage(format!("quartic coefficient must be finite and >= 0, got {c}")));
    }
    Ok(Objective {
        family: ObjectiveFamily::QuarticPerturbed,
        spectrum: spectrum.to_vec(),
        minimizer,
        quartic: c,
    })
}

fn validate_spectrum(spectrum: &[f64], minimizer: &ParamVector) -> Result<()> {
    if spectrum.is_empty() {
        return Err(usage("spectrum must be nonempty"));
    }
    if let Some((i, l)) = spectrum
        .iter()
        .enumerate()
        .find(|(_, l)| !(**l > 0.0) || !l.is_finite())
    {
        return Err(usage(format!("spectrum[{i}] = {l} is not a positive finite eigenvalue")));
    }
    if minimizer.len() != spectrum.len() {
        return Err(usage(format!(
            "minimizer has length {}, spectrum has length {}",
            minimizer.len(),
            spectrum.len()
        )));
    }
    if !minimizer.is_finite() {
        return Err(usage("minimizer entries must be finite"));
    }
    Ok(())
}

impl Objective {
    pub fn family(&self) -> ObjectiveFamily {
        self.family
    }

    pub fn dimension(&self) -> usize {
        self.spectrum.len()
    }

    pub fn minimizer(&self) -> &ParamVector {
        &self.minimizer
    }

    /// Eigenvalues of the Hessian at the minimizer.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn quartic_coefficient(&self) -> f64 {
        self.quartic
    }

    pub fn kappa_min(&self) -> f64 {
        self.spectrum.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn kappa_max(&self) -> f64 {
        self.spectrum.iter().copied().fold(0.0, f64::max)
    }

    pub fn cond(&self) -> f64 {
        self.kappa_max() / self.kappa_min()
    }

    /// Global gradient Lipschitz constant, known only for the quadratic family.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self.family {
            ObjectiveFamily::Quadratic => Some(self.kappa_max()),
            ObjectiveFamily::QuarticPerturbed if self.quartic == 0.0 => Some(self.kappa_max()),
            ObjectiveFamily::QuarticPerturbed => None,
        }
    }

    pub fn value(&self, theta: &ParamVector) -> f64 {
        debug_assert_eq!(theta.len(), self.dimension());
        self.spectrum
            .iter()
            .zip(theta.iter().zip(self.minimizer.iter()))
            .map(|(l, (t, m))| {
                let x = t - m;
                0.5 * l * x * x + self.quartic * x.powi(4)
            })
            .sum()
    }

    pub fn gradient(&self, theta: &ParamVector) -> ParamVector {
        debug_assert_eq!(theta.len(), self.dimension());
        ParamVector::new(
            self.spectrum
                .iter()
                .zip(theta.iter().zip(self.minimizer.iter()))
                .map(|(l, (t, m))| {
                    let x = t - m;
                    if self.quartic == 0.0 {
                        l * x
                    } else {
                        l * x + 4.0 * self.quartic * x * x * x
                    }
                })
                .collect(),
        )
    }
}

/// Largest entrywise gap between a central finite difference of `value` and `gradient`.
pub fn check_gradient_fd(obj: &Objective, point: &ParamVector, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(usage(format!("finite-difference step must be > 0, got {h}")));
    }
    if point.len() != obj.dimension() {
        return Err(usage("point dimension does not match objective"));
    }
    let grad = obj.gradient(point);
    let mut worst = 0.0_f64;
    let mut probe = point.clone().into_inner();
    for i in 0..probe.len() {
        let x = probe[i];
        probe[i] = x + h;
        let up = obj.value(&ParamVector::from(probe.as_slice()));
        probe[i] = x - h;
        let down = obj.value(&ParamVector::from(probe.as_slice()));
        probe[i] = x;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs());
    }
    Ok(worst)
}

/// Minimum of `⟨θ − ϑ*, ∇L(θ)⟩ / ‖θ − ϑ*‖²` over `samples` seeded uniform
/// draws from the `radius`-ball around the minimizer.
pub fn check_coercivity(obj: &Objective, samples: usize, radius: f64, seed: u64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(usage(format!("radius must be > 0, got {radius}")));
    }
    if samples == 0 {
        return Err(usage("samples must be positive"));
    }
    let mut rng = seeded(seed);
    let center = obj.minimizer();
    let mut min_ratio = f64::INFINITY;
    let mut taken = 0;
    while taken < samples {
        let theta = uniform_in_ball(&mut rng, center, radius);
        let offset = theta.sub(center);
        let sq = offset.dot(&offset);
        if sq == 0.0 {
            continue;
        }
        let ratio = offset.dot(&obj.gradient(&theta)) / sq;
        min_ratio = min_ratio.min(ratio);
        taken += 1;
    }
    Ok(min_ratio)
}
