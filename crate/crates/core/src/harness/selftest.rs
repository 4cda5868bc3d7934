//! Built-in invariant suites behind `ratelab selftest`.

use rand::Rng;

use super::experiment::validate_adam_global_config;
use crate::objectives::{check_coercivity, check_gradient_fd, make_quartic_perturbed};
use crate::optim::{form_discrepancy, OptimizerConfig, OptimizerKind, FORM_EQUIVALENCE_TOL};
use crate::ratefit::estimate_rate;
use crate::rng::{seeded, SeededRng};
use crate::spectral::{
    build_momentum_block_matrix, eigenvalues, gelfand_product_check, momentum_stability_predicate, mu_pm,
    random_orthogonal, random_spd_with_spectrum, spectral_radius, SquareMatrix, C64,
};
use crate::{ParamVector, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> SuiteOutcome {
    SuiteOutcome { name, passed, detail }
}

/// Random optimizer config of the given kind with valid hyperparameters.
pub fn random_config(rng: &mut SeededRng, kind: OptimizerKind) -> OptimizerConfig {
    let alpha = rng.random_range(0.05..0.95);
    let beta = rng.random_range(0.05..0.999);
    let epsilon = 10f64.powf(rng.random_range(-3.0..0.0));
    let gamma = 10f64.powf(rng.random_range(-3.0..0.0));
    OptimizerConfig::new(kind, alpha, beta, epsilon, gamma).expect("sampled hyperparameters are valid")
}

/// Random gradient history of length `1..=max_len` in dimension `1..=max_d`.
pub fn random_history(rng: &mut SeededRng, max_len: usize, max_d: usize) -> Vec<ParamVector> {
    let len = rng.random_range(1..=max_len);
    let d = rng.random_range(1..=max_d);
    (0..len)
        .map(|_| ParamVector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect()
}

pub fn form_equivalence_suite(samples: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut rng = seeded(seed);
    let mut worst = 0.0_f64;
    for i in 0..samples {
        let kind = OptimizerKind::ALL[i % 4];
        let cfg = random_config(&mut rng, kind);
        let history = random_history(&mut rng, 50, 5);
        worst = worst.max(form_discrepancy(&history, &cfg)?);
    }
    Ok(outcome(
        "form-equivalence",
        worst <= FORM_EQUIVALENCE_TOL,
        format!("{samples} histories, max entrywise gap {worst:.3e} (tol {FORM_EQUIVALENCE_TOL:e})"),
    ))
}

/// Largest distance in an optimal-by-greedy pairing of two multisets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Eigensolver against the closed-form roots on random rotated Hessians
/// with `λ ∈ (0, 10]`, `α ∈ (0, 1)` and `γ` up to the stability bound.
/// Every other sample is placed in the heavy-ball regime to check `sr = √α`.
/// Also checks the stability predicate away from the boundary and
/// invariance of `sr` under orthogonal conjugation.
pub fn spectrum_agreement_suite(samples: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut rng = seeded(seed);
    let (mut worst_set, mut worst_sr, mut worst_conj) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut predicate_mismatches = 0;
    for i in 0..samples {
        let d = rng.random_range(1..=4);
        let spectrum: Vec<f64> = (0..d).map(|_| 10.0 * (1.0 - rng.random::<f64>())).collect();
        let k = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        let kk = spectrum.iter().copied().fold(0.0, f64::max);
        let heavy_ball = i % 2 == 1;
        let (alpha, gamma) = if heavy_ball {
            let gamma = (1.0 - rng.random::<f64>()) / (k * kk).sqrt();
            let r = (1.0 - gamma * k) / (1.0 + gamma * k);
            (r * r, gamma)
        } else {
            let alpha = rng.random_range(0.0..1.0_f64).max(f64::EPSILON);
            // up to 1.2x the bound so unstable samples occur too
            let bound = 2.0 * (1.0 + alpha) / ((1.0 - alpha) * kk);
            (alpha, 1.2 * (1.0 - rng.random::<f64>()) * bound)
        };
        let h = random_spd_with_spectrum(&spectrum, rng.random())?;
        let a = build_momentum_block_matrix(&h, alpha, &ParamVector::filled(d, gamma))?;
        let numeric = eigenvalues(&a)?;
        let formula: Vec<C64> = spectrum
            .iter()
            .flat_map(|&l| {
                let (p, m) = mu_pm(l, alpha, gamma);
                [p, m]
            })
            .collect();
        worst_set = worst_set.max(multiset_distance(&numeric, &formula));
        let sr = numeric.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if heavy_ball {
            worst_sr = worst_sr.max((sr - alpha.sqrt()).abs());
        }
        if (sr - 1.0).abs() > 1e-6 && (sr < 1.0) != momentum_stability_predicate(k, kk, alpha, gamma) {
            predicate_mismatches += 1;
        }
        let q = random_orthogonal(2 * d, rng.random());
        let conj = q.matmul(&a).matmul(&q.transpose());
        worst_conj = worst_conj.max((spectral_radius(&conj)? - sr).abs());
    }
    Ok(outcome(
        "spectrum-agreement",
        worst_set <= 1e-8 && worst_sr <= 1e-10 && predicate_mismatches == 0 && worst_conj <= 1e-9,
        format!(
            "{samples} samples, multiset gap {worst_set:.3e} (tol 1e-8), heavy-ball |sr - sqrt(alpha)| \
             {worst_sr:.3e} (tol 1e-10), stability mismatches {predicate_mismatches}, conjugation gap {worst_conj:.3e} (tol 1e-9)"
        ),
    ))
}

/// `A_n = A + c ρ^n E` with `sr(A) = 1/3`; the Gelfand constant must
/// stabilise as the product length doubles.
pub fn gelfand_sequence(len: usize) -> Result<(Vec<SquareMatrix>, SquareMatrix)> {
    let h = SquareMatrix::diagonal(&[1.0, 4.0]);
    let limit = build_momentum_block_matrix(&h, 1.0 / 9.0, &ParamVector::filled(2, 0.5))?;
    let perturb = SquareMatrix::from_row_major(
        4,
        &[
            0.3, -0.1, 0.2, 0.0, //
            0.1, 0.2, 0.0, -0.3, //
            -0.2, 0.0, 0.1, 0.1, //
            0.0, 0.3, -0.1, 0.2,
        ],
    )?;
    let seq = (1..=len)
        .map(|n| {
            let w = 0.5_f64.powi(n as i32);
            SquareMatrix::from_dmatrix(limit.as_dmatrix() + perturb.as_dmatrix() * w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((seq, limit))
}

pub fn gelfand_suite() -> Result<SuiteOutcome> {
    let (seq, limit) = gelfand_sequence(128)?;
    let c64 = gelfand_product_check(&seq[..64], &limit, 0.05)?;
    let c128 = gelfand_product_check(&seq, &limit, 0.05)?;
    let growth = c128 / c64 - 1.0;
    Ok(outcome(
        "gelfand-bound",
        c64.is_finite() && growth < 0.01,
        format!("C(64) = {c64:.6}, C(128) = {c128:.6}, growth {:.4}%", 100.0 * growth),
    ))
}

pub fn validator_suite() -> SuiteOutcome {
    // (kmax, alpha, beta, gamma, eps, expected)
    let cases: &[(f64, f64, f64, f64, f64, bool)] = &[
        (4.0, 0.9, 0.999, 0.02, 0.1, true),
        (4.0, 0.9, 0.8, 0.02, 0.1, false),
        (4.0, 0.5, 0.25, 0.01, 0.1, false),
        (4.0, 0.5, 0.5, 0.0125, 0.1, false),
        (4.0, 0.5, 0.5, 0.0124, 0.1, true),
        (2.0, 0.25, 0.0625, 0.0125, 0.1, false),
    ];
    let bad: Vec<usize> = cases
        .iter()
        .enumerate()
        .filter(|(_, c)| validate_adam_global_config(c.0, c.1, c.2, c.3, c.4).ok != c.5)
        .map(|(i, _)| i)
        .collect();
    outcome(
        "adam-global-validator",
        bad.is_empty(),
        format!("{} boundary cases, mismatches at {bad:?}", cases.len()),
    )
}

pub fn objectives_suite() -> Result<SuiteOutcome> {
    let obj = make_quartic_perturbed(&[1.0, 2.5, 4.0], ParamVector::new(vec![0.3, -0.2, 1.0]), 0.1)?;
    let fd = check_gradient_fd(&obj, &ParamVector::new(vec![0.5, 0.1, 0.4]), 1e-5)?;
    let coercive = check_coercivity(&obj, 500, 1.0, 11)?;
    let at_min = obj.gradient(obj.minimizer()).norm();
    Ok(outcome(
        "objectives",
        fd < 1e-8 && coercive >= obj.kappa_min() && at_min == 0.0,
        format!("fd residual {fd:.3e}, min coercivity ratio {coercive:.4}, |grad at minimizer| {at_min:e}"),
    ))
}

pub fn ratefit_suite() -> Result<SuiteOutcome> {
    let mut worst = 0.0_f64;
    for rho in [1.0_f64 / 3.0, 0.6, 0.9, 0.95] {
        let d: Vec<f64> = (0..=300).map(|n| 2.0 * rho.powi(n)).collect();
        worst = worst.max((estimate_rate(&d, 0.5, 1e-150)?.rho_hat - rho).abs());
    }
    Ok(outcome(
        "ratefit",
        worst < 1e-12,
        format!("max |rho_hat - rho| on exact sequences {worst:.3e}"),
    ))
}

/// Every built-in suite with its default size and seed.
pub fn run_selftest() -> Result<Vec<SuiteOutcome>> {
    Ok(vec![
        form_equivalence_suite(1000, 9)?,
        spectrum_agreement_suite(200, 6)?,
        gelfand_suite()?,
        validator_suite(),
        objectives_suite()?,
        ratefit_suite()?,
    ])
}
