//! Seeded simulation of measurement records.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the master seed;
//! stream `k` is selected with `set_stream(k)`, so shot ranges can be
//! simulated independently (and in parallel) and still reproduce exactly.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomp::hermitian_eigen;
use crate::error::{Error, Result};
use crate::estimation::ProcessingRule;
use crate::matrix::CMatrix;
use crate::measurement::{born_probabilities, validate_povm, Ensemble, Povm, ValidationMode};
use crate::operator::Operator;

/// Largest `|Σp_i − 1|` that sampling silently renormalizes.
pub const RENORMALIZATION_TOL: f64 = 1e-6;

/// Where the state of each shot comes from.
#[derive(Debug, Clone)]
pub enum StateSource {
    /// The same state for every shot.
    Fixed(Operator),
    /// A fresh draw from the ensemble for every shot (Haar for the uniform ensemble).
    Ensemble(Ensemble),
    /// A fresh Haar-random pure state for every shot.
    HaarUniform,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub shots: usize,
    pub seed: u64,
    pub source: StateSource,
}

impl SimulationConfig {
    pub fn new(shots: usize, seed: u64, source: StateSource) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1"));
        }
        Ok(Self { shots, seed, source })
    }
}

/// Summary statistics of processed outcomes `f_{i_s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalReport {
    pub mean_estimate: Complex64,
    /// Unbiased sample variance of `f_{i_s}`.
    pub empirical_variance: f64,
    /// `sqrt(empirical_variance / shots)`.
    pub standard_error: f64,
    pub shots_used: usize,
    /// Sample mean of `|f_{i_s}|²`.
    pub second_moment: f64,
    /// Standard error of `second_moment`.
    pub second_moment_error: f64,
}

/// One simulated shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub outcome: usize,
    /// `Tr[ρ_s X]` for the state of this shot, when an observable was given.
    pub state_mean: Option<Complex64>,
}

/// RNG for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Number of shots assigned to stream `k` when `total` shots are split
/// across `streams` streams.
pub fn stream_shots(total: usize, streams: usize, k: usize) -> usize {
    let base = total / streams;
    base + usize::from(k < total % streams)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Haar-random unit vector: normalized independent complex Gaussians.
pub fn sample_haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let norm = Float::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if norm > 1e-300 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// `|ψ⟩⟨ψ|` for a Haar-random `|ψ⟩`.
pub fn sample_haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    Operator::projector(&sample_haar_vector(dim, rng))
}

/// Clamps negatives and rescales to unit sum; fails when the raw sum is
/// further than [`RENORMALIZATION_TOL`] from one.
pub fn normalized_probabilities(raw: &[f64]) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = raw.iter().map(|&p| p.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if !sum.is_finite() || sum <= 0.0 || (sum - 1.0).abs() > RENORMALIZATION_TOL {
        return Err(Error::InvalidProbabilities { sum });
    }
    Ok(clamped.into_iter().map(|p| p / sum).collect())
}

/// Inverse-CDF lookup: smallest index with positive probability and
/// `u ≤ cumulative`.
fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u <= acc {
            return i;
        }
    }
    last
}

fn expectation_pure(op: &Operator, psi: &[Complex64]) -> Complex64 {
    let d = psi.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..d {
        let mut row = Complex64::new(0.0, 0.0);
        for n in 0..d {
            row += op[(m, n)] * psi[n];
        }
        acc += psi[m].conj() * row;
    }
    acc
}

fn expectation_mixed(op: &Operator, rho: &Operator) -> Complex64 {
    let d = rho.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..d {
        for n in 0..d {
            acc += rho[(m, n)] * op[(n, m)];
        }
    }
    acc
}

/// Outcome indices for a fixed state, drawn i.i.d. from stream 0 of
/// `cfg.seed`. `cfg.source` is ignored.
pub fn sample_outcomes(povm: &Povm, rho: &Operator, cfg: &SimulationConfig) -> Result<Vec<usize>> {
    let probs = normalized_probabilities(&born_probabilities(povm, rho)?)?;
    let mut rng = stream_rng(cfg.seed, 0);
    Ok((0..cfg.shots).map(|_| pick(&probs, rng.random())).collect())
}

/// Simulates `shots` shots on stream `stream`, drawing a state per shot from
/// `cfg.source`. With an observable, each shot also records `Tr[ρ_s X]`.
pub fn simulate_stream(
    povm: &Povm,
    cfg: &SimulationConfig,
    observable: Option<&Operator>,
    stream: u64,
    shots: usize,
) -> Result<Vec<Shot>> {
    let d = povm.dim();
    if let Some(x) = observable {
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.dim(),
            });
        }
    }
    let mut rng = stream_rng(cfg.seed, stream);
    let mut out = Vec::with_capacity(shots);

    match &cfg.source {
        StateSource::Fixed(rho) => {
            let probs = normalized_probabilities(&born_probabilities(povm, rho)?)?;
            let mean = observable.map(|x| expectation_mixed(x, rho));
            for _ in 0..shots {
                out.push(Shot {
                    outcome: pick(&probs, rng.random()),
                    state_mean: mean,
                });
            }
        }
        StateSource::HaarUniform => haar_shots(povm, observable, &mut rng, shots, &mut out)?,
        StateSource::Ensemble(ens) if ens.is_uniform() => {
            haar_shots(povm, observable, &mut rng, shots, &mut out)?
        }
        StateSource::Ensemble(ens) => {
            if ens.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: ens.dim(),
                });
            }
            let weights: Vec<f64> = ens.members().iter().map(|(_, w)| *w).collect();
            let tables = ens
                .members()
                .iter()
                .map(|(rho, _)| {
                    let probs = normalized_probabilities(&born_probabilities(povm, rho)?)?;
                    Ok((probs, observable.map(|x| expectation_mixed(x, rho))))
                })
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..shots {
                let (probs, mean) = &tables[pick(&weights, rng.random())];
                out.push(Shot {
                    outcome: pick(probs, rng.random()),
                    state_mean: *mean,
                });
            }
        }
    }
    Ok(out)
}

fn haar_shots(
    povm: &Povm,
    observable: Option<&Operator>,
    rng: &mut ChaCha8Rng,
    shots: usize,
    out: &mut Vec<Shot>,
) -> Result<()> {
    let d = povm.dim();
    let mut raw = alloc::vec![0.0; povm.len()];
    for _ in 0..shots {
        let psi = sample_haar_vector(d, rng);
        for (p, e) in raw.iter_mut().zip(povm.elements()) {
            *p = expectation_pure(e, &psi).re;
        }
        let probs = normalized_probabilities(&raw)?;
        out.push(Shot {
            outcome: pick(&probs, rng.random()),
            state_mean: observable.map(|x| expectation_pure(x, &psi)),
        });
    }
    Ok(())
}

/// Simulates `cfg.shots` shots split over `streams` consecutive streams.
pub fn simulate(
    povm: &Povm,
    cfg: &SimulationConfig,
    observable: Option<&Operator>,
    streams: usize,
) -> Result<Vec<Shot>> {
    if streams == 0 {
        return Err(Error::InvalidConfig("at least one stream is required"));
    }
    let mut all = Vec::with_capacity(cfg.shots);
    for k in 0..streams {
        let part = simulate_stream(povm, cfg, observable, k as u64, stream_shots(cfg.shots, streams, k))?;
        all.extend(part);
    }
    Ok(all)
}

fn processed<'a>(
    rule: &'a ProcessingRule,
    outcomes: &'a [usize],
) -> Result<impl Iterator<Item = Complex64> + 'a> {
    if outcomes.is_empty() {
        return Err(Error::Empty("outcome list"));
    }
    let n = rule.len();
    if let Some(&index) = outcomes.iter().find(|&&i| i >= n) {
        return Err(Error::OutcomeOutOfRange { index, outcomes: n });
    }
    Ok(outcomes.iter().map(move |&i| rule.coefficients[i]))
}

/// Sample mean and variance of `f_{i_s}` over an outcome record.
pub fn empirical_estimate(rule: &ProcessingRule, outcomes: &[usize]) -> Result<EmpiricalReport> {
    let n = outcomes.len();
    let nf = n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    for f in processed(rule, outcomes)? {
        sum += f;
        sum_sq += f.norm_sqr();
    }
    let mean = sum / nf;
    let second_moment = sum_sq / nf;
    // Second pass for numerically stable centred sums.
    let mut centred = 0.0;
    let mut moment_dev = 0.0;
    for f in processed(rule, outcomes)? {
        centred += (f - mean).norm_sqr();
        moment_dev += (f.norm_sqr() - second_moment).powi(2);
    }
    let (variance, moment_var) = if n > 1 {
        (centred / (nf - 1.0), moment_dev / (nf - 1.0))
    } else {
        (0.0, 0.0)
    };
    Ok(EmpiricalReport {
        mean_estimate: mean,
        empirical_variance: variance,
        standard_error: Float::sqrt(variance / nf),
        shots_used: n,
        second_moment,
        second_moment_error: Float::sqrt(moment_var / nf),
    })
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
}

fn mean_with_error(values: impl Iterator<Item = f64> + Clone) -> Estimate {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        standard_error: Float::sqrt(var / nf),
    }
}

/// Unbiased estimate of the state-averaged variance `δ_D(X)` from shots
/// carrying their per-state means: the sample mean of `|f_{i_s} − Tr[ρ_s X]|²`.
pub fn conditional_variance(rule: &ProcessingRule, shots: &[Shot]) -> Result<Estimate> {
    if shots.is_empty() {
        return Err(Error::Empty("outcome list"));
    }
    let n = rule.len();
    let mut values = Vec::with_capacity(shots.len());
    for s in shots {
        if s.outcome >= n {
            return Err(Error::OutcomeOutOfRange {
                index: s.outcome,
                outcomes: n,
            });
        }
        let m = s
            .state_mean
            .ok_or(Error::InvalidConfig("shots were simulated without an observable"))?;
        values.push((rule.coefficients[s.outcome] - m).norm_sqr());
    }
    Ok(mean_with_error(values.iter().copied()))
}

/// Paired estimate of `Var(f^a) − Var(f^b)` on one outcome record.
pub fn variance_difference(
    a: &ProcessingRule,
    b: &ProcessingRule,
    outcomes: &[usize],
) -> Result<Estimate> {
    let ea = empirical_estimate(a, outcomes)?;
    let eb = empirical_estimate(b, outcomes)?;
    let fa: Vec<Complex64> = processed(a, outcomes)?.collect();
    let fb: Vec<Complex64> = processed(b, outcomes)?.collect();
    Ok(mean_with_error(
        fa.iter()
            .zip(&fb)
            .map(|(x, y)| (x - ea.mean_estimate).norm_sqr() - (y - eb.mean_estimate).norm_sqr()),
    ))
}

pub fn outcomes_of(shots: &[Shot]) -> Vec<usize> {
    shots.iter().map(|s| s.outcome).collect()
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(dim, dim, rng);
    Operator::new((&g + &g.adjoint()).scale(Complex64::new(0.5, 0.0))).expect("square")
}

/// Random density operator `GG†/Tr[GG†]` with `G` a `dim × rank` Gaussian matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    Operator::new(w.scale(Complex64::new(1.0 / tr, 0.0)).hermitian_part()).expect("square")
}

/// Random finite ensemble of `members` mixed states with random weights.
pub fn random_ensemble<R: Rng + ?Sized>(dim: usize, members: usize, rng: &mut R) -> Result<Ensemble> {
    let raw: Vec<f64> = (0..members).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let rest: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - rest;
    Ensemble::new(
        weights
            .into_iter()
            .map(|w| (random_density_matrix(dim, dim, rng), w))
            .collect(),
    )
}

/// Random `n`-outcome POVM: `P_k = S^{-1/2} A_k S^{-1/2}` with Wishart
/// `A_k` and `S = Σ_k A_k`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Result<Povm> {
    if n == 0 {
        return Err(Error::Empty("POVM"));
    }
    let raw: Vec<CMatrix> = (0..n)
        .map(|_| {
            let g = gaussian_matrix(dim, dim, rng);
            &g * &g.adjoint()
        })
        .collect();
    let mut sum = CMatrix::zeros(dim, dim);
    for a in &raw {
        sum = &sum + a;
    }
    let eig = hermitian_eigen(&sum)?;
    let inv_sqrt: Vec<f64> = eig.values.iter().map(|&v| 1.0 / Float::sqrt(v)).collect();
    let s = &(&eig.vectors * &CMatrix::from_diag(&inv_sqrt)) * &eig.vectors.adjoint();
    let elements = raw
        .iter()
        .map(|a| Operator::new((&(&s * a) * &s).hermitian_part()))
        .collect::<Result<Vec<_>>>()?;
    validate_povm(elements, ValidationMode::Strict)
}
