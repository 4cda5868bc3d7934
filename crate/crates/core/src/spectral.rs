//! Linearised iteration matrices, their spectra and predicted local rates.
//!
//! Near the minimizer, momentum and Adam (with its effective learning rate
//! frozen at `Γ`) act on the stacked state `(Θ − ϑ*, m)` through the block
//! matrix
//!
//! ```text
//! A_Γ = [ I − (1−α) diag(Γ) H    −α diag(Γ) ]
//!       [ (1−α) H                 α I        ]
//! ```
//!
//! For `Γ = γ 1` and symmetric `H` with eigenvalues `λ_i`, the spectrum of
//! `A` is the union of the roots `μ±⁽ⁱ⁾` of `t² − (1+α−(1−α)γλ_i) t + α`.
//! GD and RMSprop linearise to the first-order map `I − diag(Γ) H`.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::optim::OptimizerKind;
use crate::rng::seeded;
use crate::ParamVector;

pub type C64 = Complex<f64>;

/// Dense real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn from_row_major(order: usize, entries: &[f64]) -> Result<Self> {
        if order == 0 {
            return Err(usage("matrix order must be positive"));
        }
        if entries.len() != order * order {
            return Err(usage(format!(
                "expected {} entries for order {order}, got {}",
                order * order,
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(order, order, entries)))
    }

    pub fn identity(order: usize) -> Self {
        Self(DMatrix::identity(order, order))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(usage("matrix must be square and nonempty"));
        }
        Ok(Self(m))
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn matmul(&self, rhs: &SquareMatrix) -> Self {
        Self(&self.0 * &rhs.0)
    }

    /// Frobenius norm of `A − Aᵀ`.
    pub fn asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).norm()
    }
}

/// Both roots `μ±` for one Hessian mode.
///
/// When the discriminant is negative the roots form a conjugate pair of
/// modulus exactly `√α`. A discriminant within rounding of zero is taken as
/// zero (double root).
pub fn mu_pm(lambda: f64, alpha: f64, gamma: f64) -> (C64, C64) {
    let mid = (1.0 + alpha - gamma * lambda * (1.0 - alpha)) / 2.0;
    let mut disc = mid * mid - alpha;
    if disc.abs() <= 8.0 * f64::EPSILON * (mid * mid + alpha) {
        disc = 0.0;
    }
    if disc >= 0.0 {
        let s = disc.sqrt();
        (C64::new(mid + s, 0.0), C64::new(mid - s, 0.0))
    } else {
        let s = (-disc).sqrt();
        (C64::new(mid, s), C64::new(mid, -s))
    }
}

/// `[ I − (1−α) diag(Γ) H, −α diag(Γ) ; (1−α) H, α I ]`.
pub fn build_momentum_block_matrix(
    hessian: &SquareMatrix,
    alpha: f64,
    gamma_vector: &ParamVector,
) -> Result<SquareMatrix> {
    let d = hessian.order();
    if gamma_vector.len() != d {
        return Err(usage(format!(
            "learning-rate vector has length {}, hessian has order {d}",
            gamma_vector.len()
        )));
    }
    let asym = hessian.asymmetry();
    if asym > 1e-12 {
        return Err(usage(format!("hessian is not symmetric (‖H − Hᵀ‖_F = {asym:e})")));
    }
    let h = hessian.as_dmatrix();
    let mut a = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        let g = gamma_vector[i];
        for j in 0..d {
            let id = if i == j { 1.0 } else { 0.0 };
            a[(i, j)] = id - (1.0 - alpha) * g * h[(i, j)];
            a[(d + i, j)] = (1.0 - alpha) * h[(i, j)];
        }
        a[(i, d + i)] = -alpha * g;
        a[(d + i, d + i)] = alpha;
    }
    Ok(SquareMatrix(a))
}

/// Largest order accepted by the dense eigensolver.
pub const MAX_EIGEN_ORDER: usize = 64;

/// Eigenvalues closer than this (relative to `max(1, ‖A‖_F)`) are treated
/// as one numerically unresolved cluster.
///
/// A defective double eigenvalue is split by rounding into two values about
/// `sqrt(u ‖A‖)` apart; the cluster mean is accurate to `O(u)`.
pub const CLUSTER_REL_TOL: f64 = 2e-7;

/// All eigenvalues of `matrix` from a real Schur decomposition
/// (Hessenberg reduction followed by shifted QR iteration).
///
/// Eigenvalues within [`CLUSTER_REL_TOL`] of each other are replaced by
/// the mean of their cluster.
pub fn eigenvalues(matrix: &SquareMatrix) -> Result<Vec<C64>> {
    let order = matrix.order();
    if order > MAX_EIGEN_ORDER {
        return Err(usage(format!(
            "order {order} exceeds the dense eigensolver limit {MAX_EIGEN_ORDER}"
        )));
    }
    if !matrix.0.iter().all(|x| x.is_finite()) {
        return Err(Error::Computation("matrix has non-finite entries".into()));
    }
    let max_iter = 1000 * order.max(1);
    let schur = matrix
        .0
        .clone()
        .try_schur(f64::EPSILON, max_iter)
        .ok_or_else(|| {
            Error::Computation(format!(
                "Schur iteration did not converge within {max_iter} sweeps (order {order}, ‖A‖_F = {:e})",
                matrix.frobenius_norm()
            ))
        })?;
    let raw: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    let tol = CLUSTER_REL_TOL * matrix.frobenius_norm().max(1.0);
    Ok(merge_clusters(raw, tol))
}

fn merge_clusters(values: Vec<C64>, tol: f64) -> Vec<C64> {
    let n = values.len();
    // single-linkage grouping via union-find
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut out = values.clone();
    for i in 0..n {
        let root = find(&mut parent, i);
        let members: Vec<usize> = (0..n).filter(|&j| find(&mut parent, j) == root).collect();
        if members.len() > 1 {
            let sum: C64 = members.iter().map(|&j| values[j]).sum();
            out[i] = sum / members.len() as f64;
        }
    }
    out
}

/// `max |λ|` over the eigenvalues of `matrix`.
pub fn spectral_radius(matrix: &SquareMatrix) -> Result<f64> {
    Ok(eigenvalues(matrix)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// `sr(A) < 1` for the momentum block matrix with curvature in
/// `[kappa_min, kappa_max]`: `κ > 0` and `γ𝒦 < 2(1+α)/(1−α)`.
pub fn momentum_stability_predicate(kappa_min: f64, kappa_max: f64, alpha: f64, gamma: f64) -> bool {
    kappa_min > 0.0 && gamma * kappa_max < 2.0 * (1.0 + alpha) / (1.0 - alpha)
}

/// Tuned hyperparameters and the local rate they achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePrediction {
    pub gamma_star: f64,
    pub alpha_star: Option<f64>,
    pub rate: f64,
}

/// Rate-optimal step size (and momentum) for `kind` on curvature in
/// `[kappa_min, kappa_max]`.
///
/// GD and RMSprop use `γ* = 2ε/(κ+𝒦)` with rate `(𝒦−κ)/(𝒦+κ)`; momentum
/// and Adam use `γ* = ε/√(κ𝒦)` and `α* = ((1−γ*κ/ε)/(1+γ*κ/ε))²` with rate
/// `√α* = (√cond−1)/(√cond+1)`. `epsilon` is taken as 1 for GD and momentum.
pub fn predicted_rate(kind: OptimizerKind, kappa_min: f64, kappa_max: f64, epsilon: f64) -> Result<RatePrediction> {
    if !(kappa_min > 0.0) || !(kappa_max >= kappa_min) || !kappa_max.is_finite() {
        return Err(usage(format!(
            "need 0 < kappa_min <= kappa_max, got kappa_min = {kappa_min}, kappa_max = {kappa_max}"
        )));
    }
    let eps = if kind.uses_epsilon() { epsilon } else { 1.0 };
    if !(eps > 0.0) {
        return Err(usage(format!("epsilon must be > 0, got {epsilon}")));
    }
    Ok(match kind {
        OptimizerKind::Gd | OptimizerKind::Rmsprop => RatePrediction {
            gamma_star: 2.0 * eps / (kappa_min + kappa_max),
            alpha_star: None,
            rate: (kappa_max - kappa_min) / (kappa_max + kappa_min),
        },
        OptimizerKind::Momentum | OptimizerKind::Adam => {
            let gamma_star = eps / (kappa_min * kappa_max).sqrt();
            let x = gamma_star / eps * kappa_min;
            let root = (1.0 - x) / (1.0 + x);
            RatePrediction {
                gamma_star,
                alpha_star: Some(root * root),
                rate: root,
            }
        }
    })
}

/// Spectral radius of the linearised iteration at the minimizer for
/// arbitrary hyperparameters, using the limiting effective learning rate
/// `γ/ε` (ε = 1 for GD and momentum).
pub fn linearized_rate(kind: OptimizerKind, spectrum: &[f64], alpha: f64, gamma: f64, epsilon: f64) -> f64 {
    let step = if kind.uses_epsilon() { gamma / epsilon } else { gamma };
    match kind {
        OptimizerKind::Gd | OptimizerKind::Rmsprop => spectrum
            .iter()
            .map(|l| (1.0 - step * l).abs())
            .fold(0.0, f64::max),
        OptimizerKind::Momentum | OptimizerKind::Adam => spectrum
            .iter()
            .map(|&l| {
                let (p, m) = mu_pm(l, alpha, step);
                p.norm().max(m.norm())
            })
            .fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRoots {
    pub lambda: f64,
    pub mu_plus: (f64, f64),
    pub mu_minus: (f64, f64),
}

/// Spectrum of the momentum block matrix together with the closed-form
/// per-mode roots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    /// `(re, im)` pairs from the numerical eigensolver.
    pub eigenvalues: Vec<(f64, f64)>,
    pub spectral_radius: f64,
    /// `None` when the iteration is not contractive (`sr ≥ 1`).
    pub predicted_rate: Option<f64>,
    pub per_mode: Vec<ModeRoots>,
}

/// Builds `A` for `Γ = γ 1` and reports its spectrum.
pub fn spectral_report(hessian: &SquareMatrix, alpha: f64, gamma: f64) -> Result<SpectralReport> {
    let d = hessian.order();
    let a = build_momentum_block_matrix(hessian, alpha, &ParamVector::filled(d, gamma))?;
    let eig = eigenvalues(&a)?;
    let sr = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sym = SymmetricEigen::new(hessian.as_dmatrix().clone());
    let mut lambdas: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    lambdas.sort_by(f64::total_cmp);
    let per_mode = lambdas
        .into_iter()
        .map(|lambda| {
            let (p, m) = mu_pm(lambda, alpha, gamma);
            ModeRoots {
                lambda,
                mu_plus: (p.re, p.im),
                mu_minus: (m.re, m.im),
            }
        })
        .collect();
    Ok(SpectralReport {
        eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
        spectral_radius: sr,
        predicted_rate: (sr < 1.0).then_some(sr),
        per_mode,
    })
}

/// Empirical constant `Ĉ = max_{0≤n<m≤L} ‖A_m ⋯ A_{n+1}‖_F / (sr(M)+δ)^{m−n}`
/// for the sequence `matrices = (A_1, …, A_L)` and its limit `M`.
///
/// Products are accumulated by left-multiplication and renormalised after
/// every factor, keeping the scale in log space.
pub fn gelfand_product_check(matrices: &[SquareMatrix], limit: &SquareMatrix, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(usage(format!("delta must be > 0, got {delta}")));
    }
    let order = limit.order();
    if let Some(i) = matrices.iter().position(|a| a.order() != order) {
        return Err(usage(format!(
            "matrix {} has order {}, limit has order {order}",
            i + 1,
            matrices[i].order()
        )));
    }
    let log_base = (spectral_radius(limit)? + delta).ln();
    let mut best = f64::NEG_INFINITY;
    for start in 0..matrices.len() {
        let mut product = DMatrix::<f64>::identity(order, order);
        let mut log_scale = 0.0;
        for (k, a) in matrices[start..].iter().enumerate() {
            product = &a.0 * &product;
            let norm = product.norm();
            if norm == 0.0 {
                break;
            }
            log_scale += norm.ln();
            product /= norm;
            let length = (k + 1) as f64;
            best = best.max(log_scale - length * log_base);
        }
    }
    Ok(best.exp())
}

/// Random orthogonal matrix: product of `d` Householder reflections with
/// seeded Gaussian normals.
pub fn random_orthogonal(d: usize, seed: u64) -> SquareMatrix {
    let mut rng = seeded(seed);
    let mut q = DMatrix::<f64>::identity(d, d);
    for _ in 0..d {
        let v = loop {
            let v = nalgebra::DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
            if v.norm() > 1e-8 {
                break v;
            }
        };
        let h = DMatrix::<f64>::identity(d, d) - (&v * v.transpose()) * (2.0 / v.norm_squared());
        q = h * q;
    }
    SquareMatrix(q)
}

/// `Q diag(spectrum) Qᵀ` for a seeded random orthogonal `Q`, symmetrised.
pub fn random_spd_with_spectrum(spectrum: &[f64], seed: u64) -> Result<SquareMatrix> {
    if spectrum.is_empty() {
        return Err(usage("spectrum must be nonempty"));
    }
    let q = random_orthogonal(spectrum.len(), seed);
    let d = SquareMatrix::diagonal(spectrum);
    let a = q.matmul(&d).matmul(&q.transpose()).0;
    Ok(SquareMatrix((&a + a.transpose()) * 0.5))
}
