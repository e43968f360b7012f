use num_complex::Complex;
use proptest::prelude::*;

use qtransport::fit::DampedOscFit;
use qtransport::kernel::LeakageSpectrum;
use qtransport::morse::MorseModel;
use qtransport::numerics::{find_real_roots, gamma, kummer_m, GaussLegendre, Polynomial};
use qtransport::optimizer::{el_residual, solve_trajectory, KernelSource, PoleExpansion};
use qtransport::scalar::linspace;
use qtransport::survival::{cross_term, free_loss_spectral, ContinuumGrid, TimeDomainSurvival};

fn model() -> MorseModel<f64> {
    MorseModel::standard()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_recurrence(re in -4.5f64..6.0, im in -5.0f64..5.0) {
        let z = Complex::new(re, im);
        prop_assume!((z - z.re.round()).norm() > 1e-3 || z.re > 0.5);
        let lhs = gamma(z + 1.0).unwrap();
        let rhs = z * gamma(z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * lhs.norm().max(1e-300));
    }

    #[test]
    fn kummer_transformation(a in -2.0f64..2.0, b in 0.3f64..3.0, x in -8.0f64..8.0, ai in -1.0f64..1.0) {
        let a = Complex::new(a, ai);
        let b = Complex::new(b, 0.0);
        let z = Complex::new(x, 0.0);
        let lhs = kummer_m(a, b, z).unwrap();
        let rhs = z.exp() * kummer_m(b - a, b, -z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1.0));
    }

    #[test]
    fn vieta_relations(coeffs in prop::collection::vec(-3.0f64..3.0, 3..9)) {
        let n = coeffs.len() - 1;
        prop_assume!(coeffs[n].abs() > 0.2 && coeffs[0].abs() > 0.05);
        let roots = find_real_roots(&Polynomial::new(coeffs.clone()).unwrap()).unwrap().roots;
        let sum: Complex<f64> = roots.iter().sum();
        let product: Complex<f64> = roots.iter().product();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((sum + coeffs[n - 1] / coeffs[n]).norm() < 1e-7);
        prop_assert!((product - sign * coeffs[0] / coeffs[n]).norm() < 1e-7 * product.norm().max(1.0));
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials(c in prop::collection::vec(-1.0f64..1.0, 1..20)) {
        let rule = GaussLegendre::<f64>::new(10);
        let p = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let exact: f64 = c.iter().enumerate().map(|(k, &ck)| ck * (2f64.powi(k as i32 + 1) - (-1f64).powi(k as i32 + 1)) / (k as f64 + 1.0)).sum();
        prop_assert!((rule.integrate(p, -1.0, 2.0) - exact).abs() < 1e-11 * exact.abs().max(1.0));
    }

    #[test]
    fn trajectory_initial_conditions(lambda in prop_oneof![-1.0f64..-1e-4, 1e-3f64..2.0], pd in 0.1f64..3.0) {
        let fit = DampedOscFit::<f64>::reference();
        let traj = solve_trajectory(&fit, lambda, pd, 2.0).unwrap();
        prop_assert!(traj.velocity(0.0).unwrap().abs() < 1e-12 * pd.max(1.0));
        prop_assert!((traj.acceleration(0.0).unwrap() - pd).abs() < 1e-9 * pd);
        let grid = linspace(0.0, 2.0, 21);
        prop_assert!(el_residual(&traj, &KernelSource::Fitted(&fit), &grid).unwrap() < 1e-8);
    }

    #[test]
    fn spectrum_is_even_and_gapped(w in 0.0f64..10.0) {
        let spec = LeakageSpectrum::new(&model());
        prop_assert_eq!(spec.value(w).unwrap(), spec.value(-w).unwrap());
        if w <= 0.125 {
            prop_assert_eq!(spec.value(w).unwrap(), 0.0);
        } else {
            prop_assert!(spec.value(w).unwrap() >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loss_scales_quadratically(decay in 0.0f64..0.3, w in 0.2f64..4.0, eps in 0.05f64..2.0, t in 0.2f64..4.0) {
        let p = PoleExpansion::new(
            vec![Complex::new(-decay, w), Complex::new(-decay, -w)],
            vec![Complex::new(0.0, -0.1), Complex::new(0.0, 0.1)],
        ).unwrap();
        let td = TimeDomainSurvival::new(&model(), t).unwrap();
        let base = td.loss(&p, t).unwrap();
        let scaled = td.loss(&p.scaled(eps), t).unwrap();
        prop_assert!((scaled - eps * eps * base).abs() <= 1e-10 * scaled.abs().max(1e-14));
        let spec = LeakageSpectrum::new(&model());
        let sb = free_loss_spectral(&p, &spec, t).unwrap();
        let ss = free_loss_spectral(&p.scaled(eps), &spec, t).unwrap();
        prop_assert!((ss - eps * eps * sb).abs() <= 1e-10 * ss.abs().max(1e-14));
    }

    #[test]
    fn cross_term_is_non_negative(re in -0.5f64..0.5, im in -0.5f64..0.5, big_omega in 0.05f64..3.0, t in 0.1f64..5.0) {
        let m = model();
        let grid = ContinuumGrid::new(&m, 0.25, 4.0).unwrap();
        let d: Vec<Complex<f64>> = grid.kappa.iter().map(|&k| Complex::new(re, im) * (-k).exp()).collect();
        let p = PoleExpansion::new(
            vec![Complex::new(-0.1, 1.3), Complex::new(-0.1, -1.3)],
            vec![Complex::new(0.05, -0.1), Complex::new(0.05, 0.1)],
        ).unwrap();
        prop_assert!(cross_term(&p, &grid, &d, big_omega, t).unwrap() >= 0.0);
    }
}
