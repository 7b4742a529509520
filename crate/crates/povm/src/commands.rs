//! Subcommand bodies. Each produces a machine-readable report and a
//! human-readable summary; the caller decides where they go.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedSub};
use povm_core::sampling::{
    conditional_variance, outcomes_of, simulate_stream, stream_shots, Shot,
};
use povm_core::{
    coefficients, empirical_estimate, validate_povm, verify_min_norm, Analysis, CMatrix, Complex64,
    DualFrame, Ensemble, Operator, Povm, SimulationConfig, StateSource, ValidationMode,
};
use serde::Serialize;

use crate::error::{Category, CliError};
use crate::format::{OperatorFile, Scalar};
use crate::inputs::{self, EnsembleSpec, NamedPovm};
use crate::manifest::DualChoice;
use crate::output::{complex_vec, sig6, sig6c, to_json, C};

/// Fixed number of sampling streams; output depends on it, thread count does not.
pub const STREAMS: usize = 8;

/// Report bytes plus a summary for the terminal.
#[derive(Debug)]
pub struct Output {
    pub json: Vec<u8>,
    pub summary: String,
}

/// A failed command that still has a summary worth showing.
#[derive(Debug)]
pub struct Failure {
    pub error: CliError,
    pub summary: Option<String>,
}

impl From<CliError> for Failure {
    fn from(error: CliError) -> Self {
        Self { error, summary: None }
    }
}

fn rows_of(m: &CMatrix) -> Vec<Vec<C>> {
    (0..m.rows()).map(|r| complex_vec(m.row(r))).collect()
}

#[derive(Debug, Serialize)]
pub struct ElementReport {
    pub name: String,
    pub trace: C,
    pub hermitian_deviation: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub dim: usize,
    pub outcomes: usize,
    pub mode: &'static str,
    pub valid: bool,
    pub error: Option<String>,
    pub elements: Vec<ElementReport>,
    /// `‖Σ P_i − I‖_HS`.
    pub completeness_defect: f64,
    pub sum_minus_identity: Vec<Vec<C>>,
    /// Exact `Σ P_i − I` when every entry of the file is rational.
    pub exact_sum_minus_identity: Option<Vec<Vec<[String; 2]>>>,
}

type Q = Ratio<i128>;

fn exact(s: Scalar) -> Option<Q> {
    match s {
        Scalar::Rational(r) => Some(Q::new(*r.numer() as i128, *r.denom() as i128)),
        Scalar::Decimal(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => Some(Q::from_integer(x as i128)),
        Scalar::Decimal(_) => None,
    }
}

/// Exact `Σ P_i − I` in rational arithmetic; `None` on decimals or overflow.
pub fn exact_completeness(file: &OperatorFile) -> Option<Vec<Vec<(Q, Q)>>> {
    let d = file.dim;
    let mut acc = vec![vec![(Q::from_integer(0), Q::from_integer(0)); d]; d];
    for m in &file.matrices {
        for (r, row) in m.rows.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                let slot = &mut acc[r][c];
                slot.0 = slot.0.checked_add(&exact(e.0)?)?;
                slot.1 = slot.1.checked_add(&exact(e.1)?)?;
            }
        }
    }
    for (k, row) in acc.iter_mut().enumerate() {
        row[k].0 = row[k].0.checked_sub(&Q::from_integer(1))?;
    }
    Some(acc)
}

fn element_reports(names: &[String], ops: &[Operator]) -> Result<Vec<ElementReport>, CliError> {
    names
        .iter()
        .zip(ops)
        .map(|(name, op)| {
            let ev = op.eigenvalues().map_err(|e| CliError::core(name, e))?;
            Ok(ElementReport {
                name: name.clone(),
                trace: C(op.trace()),
                hermitian_deviation: op.hermitian_deviation(),
                min_eigenvalue: ev[0],
            })
        })
        .collect()
}

pub fn validate(path: &Path, permissive: bool) -> Result<Output, Failure> {
    let file = inputs::load_operator_file(path)?;
    let named = file.operators();
    let names: Vec<String> = named.iter().map(|o| o.name.clone()).collect();
    let ops: Vec<Operator> = named.into_iter().map(|o| o.operator).collect();
    let d = file.dim;
    let mut sum = Operator::zeros(d);
    for op in &ops {
        sum = &sum + op;
    }
    let residual = &sum - &Operator::identity(d);
    let mode = inputs::mode(permissive);
    let result = validate_povm(ops.clone(), mode);
    let report = ValidateReport {
        dim: d,
        outcomes: ops.len(),
        mode: if permissive { "permissive" } else { "strict" },
        valid: result.is_ok(),
        error: result.as_ref().err().map(|e| e.to_string()),
        elements: element_reports(&names, &ops)?,
        completeness_defect: residual.hs_norm(),
        sum_minus_identity: rows_of(residual.matrix()),
        exact_sum_minus_identity: exact_completeness(&file).map(|m| {
            m.into_iter()
                .map(|row| row.into_iter().map(|(re, im)| [re.to_string(), im.to_string()]).collect())
                .collect()
        }),
    };

    let mut s = String::new();
    let _ = writeln!(s, "POVM {} ({} outcomes, dim {}), {} mode", path.display(), report.outcomes, d, report.mode);
    for e in &report.elements {
        let _ = writeln!(
            s,
            "  {:<8} Tr = {:<12} min eig = {:<12} herm dev = {}",
            e.name,
            sig6c(e.trace.0),
            sig6(e.min_eigenvalue),
            sig6(e.hermitian_deviation)
        );
    }
    let _ = writeln!(s, "  completeness defect ‖ΣP_i − I‖ = {}", sig6(report.completeness_defect));
    if let Some(ex) = &report.exact_sum_minus_identity {
        let _ = writeln!(s, "  exact ΣP_i − I = {}", format_exact(ex));
    }
    match result {
        Ok(_) => {
            let _ = writeln!(s, "  valid");
            Ok(Output {
                json: to_json(&report),
                summary: s,
            })
        }
        Err(e) => {
            let _ = writeln!(s, "  INVALID: {e}");
            Err(Failure {
                error: CliError::core(&path.display().to_string(), e),
                summary: Some(s),
            })
        }
    }
}

fn format_exact(m: &[Vec<[String; 2]>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|[re, im]| format!("{re}{}{im}i", if im.starts_with('-') { "" } else { "+" })).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

#[derive(Debug, Serialize)]
pub struct NamedMatrix {
    pub name: String,
    pub rows: Vec<Vec<C>>,
}

#[derive(Debug, Serialize)]
pub struct DualReport {
    pub kind: &'static str,
    pub elements: Vec<NamedMatrix>,
    pub traces: Vec<C>,
    pub min_norm_residual: f64,
    pub generalized_inverse_residual: f64,
    pub dual_residual: f64,
    pub identity_residual: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct DualsReport {
    pub dim: usize,
    pub outcomes: usize,
    pub ensemble: String,
    pub completeness_defect: f64,
    pub metric: Vec<f64>,
    pub frame_bounds: [f64; 2],
    pub span_rank: usize,
    pub informationally_complete: bool,
    pub gram_projector_residual: f64,
    pub duals: Vec<DualReport>,
}

fn analysis(p: &NamedPovm, ens: &Ensemble) -> Result<Analysis, CliError> {
    Analysis::new(&p.povm, ens).map_err(|e| CliError::core("analysis", e))
}

fn selected<'a>(a: &'a Analysis, choice: Option<DualChoice>) -> Vec<(DualChoice, &'a DualFrame)> {
    let all = [(DualChoice::Canonical, a.canonical()), (DualChoice::Optimal, a.optimal())];
    all.into_iter().filter(|(c, _)| choice.is_none_or(|x| x == *c)).collect()
}

pub fn duals(path: &Path, ensemble: &EnsembleSpec, choice: Option<DualChoice>, permissive: bool) -> Result<Output, Failure> {
    let p = inputs::load_povm(path, inputs::mode(permissive))?;
    let ens = inputs::load_ensemble(ensemble, p.povm.dim())?;
    let a = analysis(&p, &ens)?;
    let mut duals = Vec::new();
    for (kind, df) in selected(&a, choice) {
        let r = verify_min_norm(a.frame(), df, a.metric()).map_err(|e| CliError::core("min-norm check", e))?;
        duals.push(DualReport {
            kind: kind.label(),
            elements: p
                .names
                .iter()
                .zip(df.duals())
                .map(|(n, d)| NamedMatrix {
                    name: n.clone(),
                    rows: rows_of(d.matrix()),
                })
                .collect(),
            traces: complex_vec(&df.traces()),
            min_norm_residual: r.min_norm_residual,
            generalized_inverse_residual: r.generalized_inverse_residual,
            dual_residual: r.dual_residual,
            identity_residual: r.identity_residual,
        });
    }
    let (lo, hi) = a.frame().frame_bounds();
    let report = DualsReport {
        dim: p.povm.dim(),
        outcomes: p.povm.len(),
        ensemble: ensemble.to_string(),
        completeness_defect: p.povm.completeness_defect(),
        metric: a.metric().diag().to_vec(),
        frame_bounds: [lo, hi],
        span_rank: a.frame().span_rank(),
        informationally_complete: a.frame().is_informationally_complete(),
        gram_projector_residual: a.gram().projector_residual(),
        duals,
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "frame: rank {} of {}, bounds [{}, {}], defect {}",
        report.span_rank,
        report.dim * report.dim,
        sig6(lo),
        sig6(hi),
        sig6(report.completeness_defect)
    );
    let _ = writeln!(s, "metric π = [{}]", report.metric.iter().map(|v| sig6(*v)).collect::<Vec<_>>().join(", "));
    for d in &report.duals {
        let _ = writeln!(s, "{} dual:", d.kind);
        for (e, t) in d.elements.iter().zip(&d.traces) {
            let rows: Vec<String> = e
                .rows
                .iter()
                .map(|r| format!("[{}]", r.iter().map(|z| sig6c(z.0)).collect::<Vec<_>>().join(", ")))
                .collect();
            let _ = writeln!(s, "  {:<8} Tr = {:<12} {}", e.name, sig6c(t.0), rows.join(" "));
        }
        let _ = writeln!(
            s,
            "  ‖πΓΛ − Λ†Γ†π‖ = {}, ‖ΛΓΛ − Λ‖ = {}",
            sig6(d.min_norm_residual),
            sig6(d.generalized_inverse_residual)
        );
    }
    Ok(Output {
        json: to_json(&report),
        summary: s,
    })
}

#[derive(Debug, Serialize)]
pub struct VarianceBlock {
    pub sigma: f64,
    pub delta: f64,
    pub coefficients: Vec<C>,
}

#[derive(Debug, Serialize)]
pub struct OperatorEstimate {
    pub name: String,
    /// `Tr[ρ_E X]`.
    pub expected_value: C,
    pub moment: f64,
    pub psi: f64,
    pub epsilon: Option<f64>,
    pub canonical: Option<VarianceBlock>,
    pub optimal: Option<VarianceBlock>,
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub ensemble: String,
    pub completeness_defect: f64,
    pub operators: Vec<OperatorEstimate>,
}

pub fn estimate(
    povm_path: &Path,
    operator_path: &Path,
    ensemble: &EnsembleSpec,
    choice: Option<DualChoice>,
    permissive: bool,
) -> Result<Output, Failure> {
    let p = inputs::load_povm(povm_path, inputs::mode(permissive))?;
    let xs = inputs::load_operators(operator_path, p.povm.dim())?;
    let ens = inputs::load_ensemble(ensemble, p.povm.dim())?;
    let a = analysis(&p, &ens)?;
    let mut operators = Vec::new();
    for x in &xs {
        let ctx = format!("operator {:?}", x.name);
        let cmp = a.compare(&x.operator).map_err(|e| CliError::core(&ctx, e))?;
        let block = |kind: DualChoice| -> Result<Option<VarianceBlock>, CliError> {
            if choice.is_some_and(|c| c != kind) {
                return Ok(None);
            }
            let (df, v) = match kind {
                DualChoice::Canonical => (a.canonical(), cmp.canonical),
                DualChoice::Optimal => (a.optimal(), cmp.optimal),
            };
            let rule = coefficients(df, &x.operator).map_err(|e| CliError::core(&ctx, e))?;
            Ok(Some(VarianceBlock {
                sigma: v.sigma,
                delta: v.delta,
                coefficients: complex_vec(&rule.coefficients),
            }))
        };
        operators.push(OperatorEstimate {
            name: x.name.clone(),
            expected_value: C((ens.avg_state() * &x.operator).trace()),
            moment: cmp.canonical.moment,
            psi: cmp.psi,
            epsilon: cmp.epsilon,
            canonical: block(DualChoice::Canonical)?,
            optimal: block(DualChoice::Optimal)?,
        });
    }
    let report = EstimateReport {
        ensemble: ensemble.to_string(),
        completeness_defect: p.povm.completeness_defect(),
        operators,
    };

    let mut s = String::new();
    for o in &report.operators {
        let _ = writeln!(s, "operator {} (ensemble {}):", o.name, report.ensemble);
        let _ = writeln!(s, "  avg |Tr ρX|² = {}", sig6(o.moment));
        for (label, b) in [("canonical", &o.canonical), ("optimal", &o.optimal)] {
            if let Some(b) = b {
                let f: Vec<String> = b.coefficients.iter().map(|z| sig6c(z.0)).collect();
                let _ = writeln!(s, "  {label:<9} Σ = {:<12} δ = {:<12} f = [{}]", sig6(b.sigma), sig6(b.delta), f.join(", "));
            }
        }
        let eps = o.epsilon.map_or_else(|| "undefined".to_string(), sig6);
        let _ = writeln!(s, "  Ψ = {}  ε = {}", sig6(o.psi), eps);
    }
    Ok(Output {
        json: to_json(&report),
        summary: s,
    })
}

/// Samples `cfg.shots` shots over [`STREAMS`] streams on scoped threads.
/// The result equals the sequential concatenation of the streams.
pub fn simulate_parallel(
    povm: &Povm,
    cfg: &SimulationConfig,
    observable: Option<&Operator>,
    streams: usize,
) -> Result<Vec<Shot>, povm_core::Error> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..streams)
            .map(|k| {
                scope.spawn(move || {
                    simulate_stream(povm, cfg, observable, k as u64, stream_shots(cfg.shots, streams, k))
                })
            })
            .collect();
        let mut all = Vec::with_capacity(cfg.shots);
        for h in handles {
            all.extend(h.join().expect("sampling thread panicked")?);
        }
        Ok(all)
    })
}

#[derive(Debug, Serialize)]
pub struct Analytic {
    pub expected_value: C,
    pub sigma: f64,
    pub delta: f64,
    pub moment: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub povm: String,
    pub operator: String,
    pub ensemble: String,
    pub dual: &'static str,
    pub shots: usize,
    pub seed: u64,
    pub streams: usize,
    pub outcome_counts: Vec<usize>,
    pub mean_estimate: C,
    pub standard_error: f64,
    pub empirical_variance: f64,
    pub second_moment: f64,
    pub second_moment_error: f64,
    /// Mean of `|f_i − Tr[ρ_s X]|²`, an estimate of `δ`.
    pub conditional_variance: f64,
    pub conditional_variance_error: f64,
    pub analytic: Analytic,
}

pub struct SimulateArgs<'a> {
    pub povm: &'a Path,
    pub operator: &'a Path,
    pub ensemble: &'a EnsembleSpec,
    pub dual: DualChoice,
    pub shots: usize,
    pub seed: u64,
    pub permissive: bool,
}

pub fn simulate(args: &SimulateArgs<'_>) -> Result<Output, Failure> {
    let p = inputs::load_povm(args.povm, inputs::mode(args.permissive))?;
    let xs = inputs::load_operators(args.operator, p.povm.dim())?;
    let [x] = xs.as_slice() else {
        return Err(CliError::new(
            Category::Validation,
            format!("{}: simulate needs exactly one operator, found {}", args.operator.display(), xs.len()),
        )
        .into());
    };
    let ens = inputs::load_ensemble(args.ensemble, p.povm.dim())?;
    let a = analysis(&p, &ens)?;
    let df = match args.dual {
        DualChoice::Canonical => a.canonical(),
        DualChoice::Optimal => a.optimal(),
    };
    let ctx = format!("operator {:?}", x.name);
    let rule = coefficients(df, &x.operator).map_err(|e| CliError::core(&ctx, e))?;
    let v = a.variance(df, &x.operator).map_err(|e| CliError::core(&ctx, e))?;
    let source = match args.ensemble {
        EnsembleSpec::Uniform => StateSource::HaarUniform,
        EnsembleSpec::File(_) => StateSource::Ensemble(ens.clone()),
    };
    let cfg = SimulationConfig::new(args.shots, args.seed, source).map_err(|e| CliError::core("simulate", e))?;
    let shots = simulate_parallel(&p.povm, &cfg, Some(&x.operator), STREAMS).map_err(|e| CliError::core("simulate", e))?;
    let outcomes = outcomes_of(&shots);
    let emp = empirical_estimate(&rule, &outcomes).map_err(|e| CliError::core("simulate", e))?;
    let cond = conditional_variance(&rule, &shots).map_err(|e| CliError::core("simulate", e))?;
    let mut counts = vec![0usize; p.povm.len()];
    for &i in &outcomes {
        counts[i] += 1;
    }
    let report = SimulateReport {
        povm: args.povm.display().to_string(),
        operator: x.name.clone(),
        ensemble: args.ensemble.to_string(),
        dual: args.dual.label(),
        shots: args.shots,
        seed: args.seed,
        streams: STREAMS,
        outcome_counts: counts,
        mean_estimate: C(emp.mean_estimate),
        standard_error: emp.standard_error,
        empirical_variance: emp.empirical_variance,
        second_moment: emp.second_moment,
        second_moment_error: emp.second_moment_error,
        conditional_variance: cond.value,
        conditional_variance_error: cond.standard_error,
        analytic: Analytic {
            expected_value: C((ens.avg_state() * &x.operator).trace()),
            sigma: v.sigma,
            delta: v.delta,
            moment: v.moment,
        },
    };

    let mut s = String::new();
    let _ = writeln!(s, "{} shots, seed {}, {} dual, operator {}", report.shots, report.seed, report.dual, report.operator);
    let _ = writeln!(
        s,
        "  mean estimate  {} ± {}  (analytic {})",
        sig6c(emp.mean_estimate),
        sig6(emp.standard_error),
        sig6c(report.analytic.expected_value.0)
    );
    let _ = writeln!(
        s,
        "  mean |f|²      {} ± {}  (analytic Σ {})",
        sig6(emp.second_moment),
        sig6(emp.second_moment_error),
        sig6(v.sigma)
    );
    let _ = writeln!(
        s,
        "  mean |f − ⟨X⟩|² {} ± {}  (analytic δ {})",
        sig6(cond.value),
        sig6(cond.standard_error),
        sig6(v.delta)
    );
    Ok(Output {
        json: to_json(&report),
        summary: s,
    })
}

/// `σ_z + x σ_x + y σ_y`.
pub fn grid_operator(x: f64, y: f64) -> Operator {
    let sx = Operator::pauli_x().scale(Complex64::new(x, 0.0));
    let sy = Operator::pauli_y().scale(Complex64::new(y, 0.0));
    &(&Operator::pauli_z() + &sx) + &sy
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub epsilon: Option<f64>,
    pub sigma_canonical: f64,
    pub sigma_optimal: f64,
    pub psi: f64,
}

/// ε over a `points × points` grid on `[-range, range]²`.
pub fn noise_grid(povm: &Povm, ens: &Ensemble, range: f64, points: usize) -> Result<Vec<GridRow>, CliError> {
    if povm.dim() != 2 {
        return Err(CliError::new(Category::Validation, "the noise grid needs a qubit POVM"));
    }
    if points < 2 || !(range > 0.0) || !range.is_finite() {
        return Err(CliError::new(Category::Validation, "grid needs at least 2 points and a positive range"));
    }
    let a = Analysis::new(povm, ens).map_err(|e| CliError::core("analysis", e))?;
    let step = 2.0 * range / (points - 1) as f64;
    let mut rows = Vec::with_capacity(points * points);
    for i in 0..points {
        let x = -range + step * i as f64;
        for j in 0..points {
            let y = -range + step * j as f64;
            let c = a
                .compare(&grid_operator(x, y))
                .map_err(|e| CliError::core(&format!("grid point ({x}, {y})"), e))?;
            rows.push(GridRow {
                x,
                y,
                epsilon: c.epsilon,
                sigma_canonical: c.canonical.sigma,
                sigma_optimal: c.optimal.sigma,
                psi: c.psi,
            });
        }
    }
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn grid_summary(rows: &[GridRow], range: f64, points: usize) -> String {
    let defined: Vec<&GridRow> = rows.iter().filter(|r| r.epsilon.is_some()).collect();
    let max = defined.iter().max_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).expect("finite"));
    let min = defined.iter().min_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).expect("finite"));
    let mut s = format!("ε grid: {points}×{points} points on [−{r}, {r}]²\n", r = sig6(range));
    if let (Some(lo), Some(hi)) = (min, max) {
        let _ = writeln!(s, "  min ε = {} at ({}, {})", sig6(lo.epsilon.unwrap_or(0.0)), sig6(lo.x), sig6(lo.y));
        let _ = writeln!(s, "  max ε = {} at ({}, {})", sig6(hi.epsilon.unwrap_or(0.0)), sig6(hi.x), sig6(hi.y));
    }
    let undefined = rows.len() - defined.len();
    if undefined > 0 {
        let _ = writeln!(s, "  {undefined} points with zero optimal variance (ε undefined)");
    }
    s
}

/// Validates `ops` as a POVM in the given mode, for callers holding parsed files.
pub fn povm_of(file: &OperatorFile, mode: ValidationMode) -> Result<NamedPovm, CliError> {
    inputs::povm_from_file(file, mode).map_err(|e| CliError::core("POVM", e))
}
