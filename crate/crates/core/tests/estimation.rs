mod common;

use common::*;
use povm_core::sampling::{random_density_matrix, random_ensemble, random_hermitian, random_povm, stream_rng};
use povm_core::{
    alternate_dual, born_probabilities, coefficients, epsilon_relative, expected_value,
    sigma_functional, validate_povm, Analysis, Complex64, Ensemble, Error, Operator, ValidationMode,
};
use proptest::prelude::*;
use rand::Rng;

fn random_operator(rng: &mut impl Rng, d: usize) -> Operator {
    let a = random_hermitian(d, rng);
    let b = random_hermitian(d, rng);
    &a + &b.scale(Complex64::new(0.0, 1.0))
}

struct Setup {
    povm: povm_core::Povm,
    ens: Ensemble,
    analysis: Analysis,
}

fn setup(seed: u64, d: usize, n: usize) -> Option<Setup> {
    let mut rng = stream_rng(seed, 0);
    let povm = random_povm(d, n, &mut rng).unwrap();
    let ens = random_ensemble(d, 3, &mut rng).unwrap();
    let analysis = Analysis::new(&povm, &ens).unwrap();
    let (a, b) = analysis.frame().frame_bounds();
    (a / b > 1e-4 && analysis.metric().has_full_support()).then_some(Setup { povm, ens, analysis })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn every_dual_is_unbiased(seed in any::<u64>(), d in 2usize..=3, extra in 0usize..=4) {
        let Some(s) = setup(seed, d, d * d + extra) else { return Ok(()); };
        let mut rng = stream_rng(seed, 1);
        let x = random_operator(&mut rng, d);
        let rho = random_density_matrix(d, 1 + rng.random_range(0..d), &mut rng);
        let truth = (&rho * &x).trace();
        let probs = born_probabilities(&s.povm, &rho).unwrap();
        let ys: Vec<Operator> = (0..s.povm.len()).map(|_| random_operator(&mut rng, d)).collect();
        let alt = alternate_dual(s.analysis.frame(), s.analysis.canonical(), &ys).unwrap();
        for df in [s.analysis.canonical(), s.analysis.optimal(), &alt] {
            let est = expected_value(&coefficients(df, &x).unwrap(), &probs).unwrap();
            prop_assert!((est - truth).norm() < 1e-8 * (1.0 + x.hs_norm()), "{:?}: {} vs {}", df.kind(), est, truth);
        }
    }

    #[test]
    fn optimal_dual_beats_every_alternate(seed in any::<u64>(), d in 2usize..=3, extra in 1usize..=4, amp in 0.01f64..5.0) {
        let Some(s) = setup(seed, d, d * d + extra) else { return Ok(()); };
        let mut rng = stream_rng(seed, 2);
        let x = random_operator(&mut rng, d);
        let m = s.analysis.metric();
        let best = sigma_functional(s.analysis.optimal(), &x, m).unwrap();
        let canon = sigma_functional(s.analysis.canonical(), &x, m).unwrap();
        prop_assert!(best <= canon * (1.0 + 1e-10) + 1e-12);
        for _ in 0..5 {
            let ys: Vec<Operator> = (0..s.povm.len())
                .map(|_| random_operator(&mut rng, d).scale(Complex64::new(amp, 0.0)))
                .collect();
            let alt = alternate_dual(s.analysis.frame(), s.analysis.canonical(), &ys).unwrap();
            let other = sigma_functional(&alt, &x, m).unwrap();
            prop_assert!(best <= other * (1.0 + 1e-10) + 1e-12, "{} > {}", best, other);
        }
    }

    #[test]
    fn psi_is_the_variance_gap(seed in any::<u64>(), d in 2usize..=3, extra in 0usize..=4) {
        let Some(s) = setup(seed, d, d * d + extra) else { return Ok(()); };
        let mut rng = stream_rng(seed, 3);
        let x = random_operator(&mut rng, d);
        let c = s.analysis.compare(&x).unwrap();
        let gap = c.canonical.sigma - c.optimal.sigma;
        prop_assert!((gap - c.psi).abs() < 1e-8 * c.canonical.sigma.max(1.0), "gap {} psi {}", gap, c.psi);
        prop_assert!(c.psi >= 0.0);
        prop_assert!((c.canonical.moment - s.ens.second_moment(&x).unwrap()).abs() < 1e-14);
        // conditional variance of any unbiased estimator is non-negative
        prop_assert!(c.optimal.delta > -1e-9);
    }

    #[test]
    fn functionals_scale_quadratically(seed in any::<u64>(), d in 2usize..=3, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.hypot(im) > 1e-2);
        let Some(s) = setup(seed, d, d * d + 2) else { return Ok(()); };
        let mut rng = stream_rng(seed, 4);
        let x = random_hermitian(d, &mut rng);
        let k = Complex64::new(re, im);
        let a = s.analysis.compare(&x).unwrap();
        let b = s.analysis.compare(&x.scale(k)).unwrap();
        let k2 = k.norm_sqr();
        prop_assert!((b.canonical.sigma - k2 * a.canonical.sigma).abs() < 1e-9 * b.canonical.sigma.max(1.0));
        prop_assert!((b.optimal.sigma - k2 * a.optimal.sigma).abs() < 1e-9 * b.optimal.sigma.max(1.0));
        prop_assert!((b.psi - k2 * a.psi).abs() < 1e-9 * b.canonical.sigma.max(1.0));
        if let (Some(ea), Some(eb)) = (a.epsilon, b.epsilon) {
            prop_assert!((ea - eb).abs() < 1e-6 * ea.max(1.0));
        }
    }

    #[test]
    fn identity_is_estimated_without_noise_by_the_optimal_dual(seed in any::<u64>(), d in 2usize..=3, extra in 0usize..=4) {
        let Some(s) = setup(seed, d, d * d + extra) else { return Ok(()); };
        let id = Operator::identity(d);
        let c = s.analysis.compare(&id).unwrap();
        prop_assert!((c.optimal.sigma - 1.0).abs() < 1e-9);
        prop_assert!((c.psi - (c.canonical.sigma - 1.0)).abs() < 1e-9 * c.canonical.sigma.max(1.0));
        prop_assert!(c.optimal.delta.abs() < 1e-9);
    }

    #[test]
    fn adjoint_operator_has_the_same_variance(seed in any::<u64>(), d in 2usize..=3) {
        let Some(s) = setup(seed, d, d * d + 1) else { return Ok(()); };
        let mut rng = stream_rng(seed, 5);
        let x = random_operator(&mut rng, d);
        let a = s.analysis.compare(&x).unwrap();
        let b = s.analysis.compare(&x.adjoint()).unwrap();
        prop_assert!((a.optimal.sigma - b.optimal.sigma).abs() < 1e-9 * a.optimal.sigma.max(1.0));
        prop_assert!((a.psi - b.psi).abs() < 1e-9 * a.canonical.sigma.max(1.0));
    }
}

#[test]
fn operator_outside_the_span_is_rejected() {
    let povm = validate_povm(
        vec![Operator::matrix_unit(2, 0, 0), Operator::matrix_unit(2, 1, 1)],
        ValidationMode::Strict,
    )
    .unwrap();
    let a = Analysis::new(&povm, &Ensemble::uniform(2)).unwrap();
    assert!(matches!(a.compare(&Operator::pauli_x()), Err(Error::OutsideSpan { .. })));
    assert!(a.compare(&Operator::pauli_z()).is_ok());
}

#[test]
fn fixture_canonical_variance_matches_gauss_jordan_oracle() {
    let povm = validate_povm(example_operators_conj5(), ValidationMode::Strict).unwrap();
    let a = Analysis::new(&povm, &Ensemble::uniform(2)).unwrap();
    let lambda = a.frame().lambda();
    let gamma = &lambda.adjoint() * &gauss_jordan_inverse(&(lambda * &lambda.adjoint()));
    let f = gamma.mul_vec(example_x().vectorize().components());
    let pi = [52.0, 34.0, 855.0, 144.0, 112.0].map(|v| v / 1197.0);
    let sigma: f64 = f.iter().zip(pi).map(|(c, p)| c.norm_sqr() * p).sum();
    let report = a.compare(&example_x()).unwrap();
    assert!((report.canonical.sigma - sigma).abs() < 1e-9 * sigma);
}

#[test]
fn fixture_variant_reproduces_published_values() {
    let povm = validate_povm(example_operators_conj5(), ValidationMode::Strict).unwrap();
    let a = Analysis::new(&povm, &Ensemble::uniform(2)).unwrap();
    let c = a.compare(&example_x()).unwrap();
    assert!((c.canonical.sigma - 799.66).abs() < 0.01, "{}", c.canonical.sigma);
    assert!((c.psi - 133.05).abs() < 0.01, "{}", c.psi);
    let eps = c.epsilon.unwrap();
    assert!((eps - 0.2).abs() < 0.001, "{eps}");
    assert!((epsilon_relative(&example_x(), &povm, &Ensemble::uniform(2)).unwrap() - eps).abs() < 1e-15);
}
