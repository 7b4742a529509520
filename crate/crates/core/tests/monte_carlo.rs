mod common;

use common::*;
use povm_core::estimation::ProcessingRule;
use povm_core::sampling::{
    conditional_variance, outcomes_of, simulate, simulate_stream, variance_difference, Shot,
};
use povm_core::{
    coefficients, empirical_estimate, sample_outcomes, validate_povm, Analysis, Complex64, DualKind,
    Ensemble, Error, Operator, Povm, SimulationConfig, StateSource, ValidationMode,
};

fn variant() -> Povm {
    validate_povm(example_operators_conj5(), ValidationMode::Strict).unwrap()
}

fn rules(a: &Analysis, x: &Operator) -> (ProcessingRule, ProcessingRule) {
    (coefficients(a.canonical(), x).unwrap(), coefficients(a.optimal(), x).unwrap())
}

fn within(value: f64, target: f64, se: f64, k: f64) -> bool {
    (value - target).abs() <= k * se
}

#[test]
fn outcome_frequency_matches_born_rule() {
    let povm = validate_povm(example_operators(), ValidationMode::Permissive).unwrap();
    let cfg = SimulationConfig::new(1_000_000, 20240601, StateSource::Fixed(half_identity(2))).unwrap();
    let outcomes = sample_outcomes(&povm, &half_identity(2), &cfg).unwrap();
    let p = 52.0 / 1197.0;
    let freq = outcomes.iter().filter(|&&i| i == 0).count() as f64 / outcomes.len() as f64;
    let se = (p * (1.0 - p) / outcomes.len() as f64).sqrt();
    assert!(within(freq, p, se, 4.0), "freq {freq} p {p} se {se}");
}

#[test]
fn haar_record_recovers_mean_and_sigma() {
    let povm = variant();
    let ens = Ensemble::uniform(2);
    let a = Analysis::new(&povm, &ens).unwrap();
    let x = example_x();
    let cfg = SimulationConfig::new(400_000, 99, StateSource::HaarUniform).unwrap();
    let shots = simulate(&povm, &cfg, Some(&x), 4).unwrap();
    let outcomes = outcomes_of(&shots);
    let (canon, opt) = rules(&a, &x);
    for (rule, df) in [(&canon, a.canonical()), (&opt, a.optimal())] {
        let rep = empirical_estimate(rule, &outcomes).unwrap();
        let v = a.variance(df, &x).unwrap();
        // Tr[ρ_E X] = 0 for traceless X
        assert!(within(rep.mean_estimate.re, 0.0, rep.standard_error, 4.0), "{:?} mean {}", df.kind(), rep.mean_estimate);
        assert!(rep.mean_estimate.im.abs() < 1e-9);
        assert!(
            within(rep.second_moment, v.sigma, rep.second_moment_error, 4.0),
            "{:?}: {} vs {} (se {})",
            df.kind(),
            rep.second_moment,
            v.sigma,
            rep.second_moment_error
        );
    }
}

#[test]
fn conditional_variance_estimates_delta() {
    let povm = variant();
    let a = Analysis::new(&povm, &Ensemble::uniform(2)).unwrap();
    let x = example_x();
    let cfg = SimulationConfig::new(300_000, 5, StateSource::Ensemble(Ensemble::uniform(2))).unwrap();
    let shots = simulate(&povm, &cfg, Some(&x), 3).unwrap();
    let (canon, opt) = rules(&a, &x);
    let c = a.compare(&x).unwrap();
    let ec = conditional_variance(&canon, &shots).unwrap();
    let eo = conditional_variance(&opt, &shots).unwrap();
    assert!(within(ec.value, c.canonical.delta, ec.standard_error, 4.0), "{ec:?} vs {}", c.canonical.delta);
    assert!(within(eo.value, c.optimal.delta, eo.standard_error, 4.0), "{eo:?} vs {}", c.optimal.delta);
    assert!(ec.value > eo.value);
}

#[test]
fn paired_variance_difference_estimates_psi() {
    let povm = variant();
    let a = Analysis::new(&povm, &Ensemble::uniform(2)).unwrap();
    let x = example_x();
    let cfg = SimulationConfig::new(300_000, 17, StateSource::HaarUniform).unwrap();
    let outcomes = outcomes_of(&simulate(&povm, &cfg, None, 2).unwrap());
    let (canon, opt) = rules(&a, &x);
    let diff = variance_difference(&canon, &opt, &outcomes).unwrap();
    let psi = a.compare(&x).unwrap().psi;
    assert!(within(diff.value, psi, diff.standard_error, 4.0), "{diff:?} vs {psi}");
}

#[test]
fn finite_ensemble_sampling_matches_sigma() {
    let povm = variant();
    let plus = Operator::projector(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).scale(Complex64::new(0.5, 0.0));
    let ens = Ensemble::new(vec![(plus, 0.3), (half_identity(2), 0.2), (Operator::matrix_unit(2, 1, 1), 0.5)]).unwrap();
    let a = Analysis::new(&povm, &ens).unwrap();
    let x = example_x();
    let cfg = SimulationConfig::new(300_000, 3, StateSource::Ensemble(ens.clone())).unwrap();
    let shots = simulate(&povm, &cfg, Some(&x), 2).unwrap();
    let opt = coefficients(a.optimal(), &x).unwrap();
    let rep = empirical_estimate(&opt, &outcomes_of(&shots)).unwrap();
    let v = a.variance(a.optimal(), &x).unwrap();
    assert!(within(rep.second_moment, v.sigma, rep.second_moment_error, 4.0));
    let truth = (&ens.avg_state().clone() * &x).trace();
    assert!(within(rep.mean_estimate.re, truth.re, rep.standard_error, 4.0));
}

#[test]
fn split_streams_agree_with_a_single_stream() {
    let povm = variant();
    let a = Analysis::new(&povm, &Ensemble::uniform(2)).unwrap();
    let x = example_x();
    let rule = coefficients(a.dual(DualKind::Optimal).unwrap(), &x).unwrap();
    let cfg = SimulationConfig::new(200_000, 4242, StateSource::HaarUniform).unwrap();
    let one = empirical_estimate(&rule, &outcomes_of(&simulate(&povm, &cfg, None, 1).unwrap())).unwrap();
    let many = empirical_estimate(&rule, &outcomes_of(&simulate(&povm, &cfg, None, 8).unwrap())).unwrap();
    let se = one.second_moment_error.hypot(many.second_moment_error);
    assert!(within(one.second_moment, many.second_moment, se, 4.0));
    let se = one.standard_error.hypot(many.standard_error);
    assert!(within(one.mean_estimate.re, many.mean_estimate.re, se, 4.0));
}

#[test]
fn streams_are_deterministic_and_distinct() {
    let povm = variant();
    let cfg = SimulationConfig::new(1000, 1, StateSource::HaarUniform).unwrap();
    let a: Vec<Shot> = simulate_stream(&povm, &cfg, Some(&example_x()), 3, 1000).unwrap();
    let b = simulate_stream(&povm, &cfg, Some(&example_x()), 3, 1000).unwrap();
    let c = simulate_stream(&povm, &cfg, Some(&example_x()), 4, 1000).unwrap();
    assert_eq!(a, b);
    assert_ne!(outcomes_of(&a), outcomes_of(&c));
    let whole = simulate(&povm, &cfg, None, 3).unwrap();
    assert_eq!(whole.len(), 1000);
    assert_eq!(simulate(&povm, &cfg, None, 3).unwrap(), whole);
}

#[test]
fn incomplete_povm_cannot_be_sampled_with_random_states() {
    let povm = validate_povm(example_operators(), ValidationMode::Permissive).unwrap();
    let cfg = SimulationConfig::new(10, 1, StateSource::HaarUniform).unwrap();
    assert!(matches!(simulate(&povm, &cfg, None, 1), Err(Error::InvalidProbabilities { .. })));
}

#[test]
fn malformed_records_are_rejected() {
    let a = Analysis::new(&variant(), &Ensemble::uniform(2)).unwrap();
    let rule = coefficients(a.canonical(), &example_x()).unwrap();
    assert_eq!(empirical_estimate(&rule, &[]).unwrap_err(), Error::Empty("outcome list"));
    assert_eq!(
        empirical_estimate(&rule, &[0, 5]).unwrap_err(),
        Error::OutcomeOutOfRange { index: 5, outcomes: 5 }
    );
    let shots = [Shot { outcome: 0, state_mean: None }];
    assert!(matches!(conditional_variance(&rule, &shots), Err(Error::InvalidConfig(_))));
    assert!(SimulationConfig::new(0, 1, StateSource::HaarUniform).is_err());
    let cfg = SimulationConfig::new(10, 1, StateSource::HaarUniform).unwrap();
    assert!(simulate(&variant(), &cfg, None, 0).is_err());
}
