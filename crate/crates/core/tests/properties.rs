use proptest::prelude::*;

use ratelab::harness::{ConfigFile, ExperimentSpec};
use ratelab::harness::config::{InitSpec, ObjectiveSpec, OptimizerSpec, RunSpec};
use ratelab::objectives::{check_coercivity, check_gradient_fd, make_quadratic, make_quartic_perturbed};
use ratelab::optim::{form_discrepancy, run, step_recursive, FORM_EQUIVALENCE_TOL};
use ratelab::ratefit::{estimate_rate, sup_ratio_statistic};
use ratelab::rng::{seeded, uniform_in_ball};
use ratelab::spectral::{
    build_momentum_block_matrix, momentum_stability_predicate, mu_pm, random_orthogonal, random_spd_with_spectrum,
    spectral_radius,
};
use ratelab::{ObjectiveFamily, OptimizerConfig, OptimizerKind, OptimizerState, ParamVector, Termination};

fn kind() -> impl Strategy<Value = OptimizerKind> {
    prop_oneof![
        Just(OptimizerKind::Gd),
        Just(OptimizerKind::Momentum),
        Just(OptimizerKind::Rmsprop),
        Just(OptimizerKind::Adam),
    ]
}

fn config() -> impl Strategy<Value = OptimizerConfig> {
    (kind(), 0.01..0.99f64, 0.01..0.999f64, -3.0..0.0f64, -3.0..0.0f64).prop_map(|(k, a, b, le, lg)| {
        OptimizerConfig::new(k, a, b, 10f64.powf(le), 10f64.powf(lg)).unwrap()
    })
}

fn history() -> impl Strategy<Value = Vec<ParamVector>> {
    (1usize..=5).prop_flat_map(|d| {
        prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d).prop_map(ParamVector::new), 1..=50)
    })
}

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1..10.0f64, 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn history_and_recursive_forms_agree(cfg in config(), hist in history()) {
        prop_assert!(form_discrepancy(&hist, &cfg).unwrap() <= FORM_EQUIVALENCE_TOL);
    }

    #[test]
    fn second_moment_is_a_bounded_average(cfg in config(), hist in history()) {
        let d = hist[0].len();
        let mut state = OptimizerState::new(ParamVector::zeros(d));
        let mut max_sq = vec![0.0_f64; d];
        for g in &hist {
            for (m, x) in max_sq.iter_mut().zip(g.iter()) {
                *m = m.max(x * x);
            }
            state = step_recursive(&state, g, &cfg).unwrap();
            for j in 0..d {
                prop_assert!(state.big_m[j] >= 0.0);
                if cfg.kind.uses_beta() {
                    prop_assert!(state.big_m[j] <= max_sq[j] * (1.0 + 1e-15));
                }
            }
        }
    }

    #[test]
    fn minimizer_is_a_fixed_point(cfg in config(), spec in spectrum(), shift in -2.0..2.0f64) {
        let minimizer = ParamVector::filled(spec.len(), shift);
        let obj = make_quadratic(&spec, minimizer.clone()).unwrap();
        let traj = run(&obj, &minimizer, &cfg, 20, 0.0).unwrap();
        prop_assert!(traj.iterates.iter().all(|t| *t == minimizer));
    }

    #[test]
    fn gd_scale_covariance(spec in spectrum(), c in 0.1..10.0f64, seed in 0u64..1000) {
        let k = spec.iter().copied().fold(0.0, f64::max);
        let gamma = 1.0 / k;
        let init = uniform_in_ball(&mut seeded(seed), &ParamVector::zeros(spec.len()), 1.0);
        let base = make_quadratic(&spec, ParamVector::zeros(spec.len())).unwrap();
        let scaled_spec: Vec<f64> = spec.iter().map(|l| c * l).collect();
        let scaled = make_quadratic(&scaled_spec, ParamVector::zeros(spec.len())).unwrap();
        let a = run(&base, &init, &OptimizerConfig::gd(gamma).unwrap(), 100, 0.0).unwrap();
        let b = run(&scaled, &init, &OptimizerConfig::gd(gamma / c).unwrap(), 100, 0.0).unwrap();
        prop_assert_eq!(a.distances.len(), b.distances.len());
        for (x, y) in a.distances.iter().zip(&b.distances) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn adam_effective_lr_tends_to_gamma_over_epsilon(
        spec in spectrum(),
        seed in 0u64..1000,
        eps in 0.05..0.5f64,
    ) {
        let k = spec.iter().copied().fold(f64::INFINITY, f64::min);
        let kk = spec.iter().copied().fold(0.0, f64::max);
        let pred = ratelab::spectral::predicted_rate(OptimizerKind::Adam, k, kk, eps).unwrap();
        let cfg = OptimizerConfig::adam(pred.alpha_star.unwrap().max(0.01), 0.9, eps, pred.gamma_star).unwrap();
        let obj = make_quadratic(&spec, ParamVector::zeros(spec.len())).unwrap();
        let init = uniform_in_ball(&mut seeded(seed), obj.minimizer(), 0.1);
        let traj = run(&obj, &init, &cfg, 600, 0.0).unwrap();
        prop_assume!(traj.terminated == Termination::BudgetReached);
        prop_assume!(traj.gradients.last().unwrap().norm() < 1e-100);
        let limit = cfg.gamma / cfg.epsilon;
        for lr in &traj.effective_lr[traj.effective_lr.len() - 10..] {
            for v in lr.iter() {
                prop_assert!((v - limit).abs() < 1e-6, "{} vs {}", v, limit);
            }
        }
    }

    #[test]
    fn objective_invariants(
        spec in spectrum(),
        family in prop_oneof![Just(ObjectiveFamily::Quadratic), Just(ObjectiveFamily::QuarticPerturbed)],
        shift in -3.0..3.0f64,
        c in 0.0..1.0f64,
        seed in 0u64..1000,
    ) {
        let d = spec.len();
        let minimizer = ParamVector::new((0..d).map(|i| shift + i as f64).collect());
        let obj = match family {
            ObjectiveFamily::Quadratic => make_quadratic(&spec, minimizer.clone()).unwrap(),
            ObjectiveFamily::QuarticPerturbed => make_quartic_perturbed(&spec, minimizer.clone(), c).unwrap(),
        };
        prop_assert!(obj.gradient(&minimizer).norm() <= 1e-14);
        let mut rng = seeded(seed);
        for _ in 0..10 {
            let p = uniform_in_ball(&mut rng, &minimizer, 1.0);
            prop_assert!(check_gradient_fd(&obj, &p, 1e-5).unwrap() < 1e-6);
            if family == ObjectiveFamily::Quadratic {
                let x = p.sub(&minimizer);
                let closed: f64 = 0.5 * x.iter().zip(&spec).map(|(xi, l)| l * xi * xi).sum::<f64>();
                prop_assert_eq!(obj.value(&p) - obj.value(&minimizer), closed);
            }
        }
        prop_assert!(check_coercivity(&obj, 50, 2.0, seed).unwrap() >= obj.kappa_min() - 1e-10);
    }

    #[test]
    fn rate_fit_exact_and_affine_invariant(rho in 0.1..0.99f64, logc in -6.0..6.0f64, scale in 1e-3..1e3f64) {
        let c = 10f64.powf(logc);
        let d: Vec<f64> = (0..=200).map(|n| c * rho.powi(n)).collect();
        let est = estimate_rate(&d, 0.5, 1e-150).unwrap();
        prop_assert!((est.rho_hat - rho).abs() < 1e-10);
        let scaled: Vec<f64> = d.iter().map(|x| x * scale).collect();
        let est2 = estimate_rate(&scaled, 0.5, 1e-150).unwrap();
        prop_assert!((est.rho_hat - est2.rho_hat).abs() < 1e-12);
    }

    #[test]
    fn sup_ratio_non_increasing_in_rho(
        d in prop::collection::vec(1e-8..10.0f64, 1..60),
        r1 in 0.05..0.95f64,
        dr in 0.0..0.04f64,
    ) {
        let a = sup_ratio_statistic(&d, r1).unwrap();
        let b = sup_ratio_statistic(&d, r1 + dr).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_radius_invariants(
        spec in spectrum(),
        alpha in 0.0..0.99f64,
        frac in 0.01..1.5f64,
        seed in 0u64..1000,
    ) {
        let d = spec.len();
        let k = spec.iter().copied().fold(f64::INFINITY, f64::min);
        let kk = spec.iter().copied().fold(0.0, f64::max);
        let gamma = frac * 2.0 * (1.0 + alpha) / ((1.0 - alpha) * kk);
        let h = random_spd_with_spectrum(&spec, seed).unwrap();
        let a = build_momentum_block_matrix(&h, alpha, &ParamVector::filled(d, gamma)).unwrap();
        let sr = spectral_radius(&a).unwrap();
        let q = random_orthogonal(2 * d, seed + 1);
        let conj = q.matmul(&a).matmul(&q.transpose());
        prop_assert!((spectral_radius(&conj).unwrap() - sr).abs() < 1e-9);
        let modes = spec
            .iter()
            .map(|&l| {
                let (p, m) = mu_pm(l, alpha, gamma);
                p.norm().max(m.norm())
            })
            .fold(0.0, f64::max);
        prop_assert!((modes - sr).abs() < 1e-8);
        if (sr - 1.0).abs() > 1e-6 {
            prop_assert_eq!(sr < 1.0, momentum_stability_predicate(k, kk, alpha, gamma));
        }
    }

    #[test]
    fn config_round_trip(
        spec in spectrum(),
        kind in kind(),
        auto in any::<bool>(),
        seed in 0u64..1000,
        budget in 40usize..400,
        repeats in 1usize..6,
        radius in 0.05..1.0f64,
    ) {
        let optimizer = OptimizerSpec {
            kind,
            auto,
            gamma: (!auto).then_some(0.01),
            alpha: (!auto && kind.uses_alpha()).then_some(0.5),
            beta: kind.uses_beta().then_some(0.9),
            epsilon: kind.uses_epsilon().then_some(0.1),
        };
        let exp = ExperimentSpec {
            id: format!("e{seed}"),
            objective: ObjectiveSpec {
                family: ObjectiveFamily::Quadratic,
                spectrum: Some(spec),
                kappa_min: None,
                kappa_max: None,
                dimension: None,
                minimizer: None,
                perturbation: 0.0,
            },
            optimizer,
            init: InitSpec { point: None, radius: Some(radius), seed: Some(seed) },
            run: RunSpec { budget: Some(budget), repeats: Some(repeats), ..RunSpec::default() },
        };
        let cfg = ConfigFile { experiment: vec![exp], ..ConfigFile::default() };
        let again = ConfigFile::parse(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.plans().unwrap(), again.plans().unwrap());
    }
}
