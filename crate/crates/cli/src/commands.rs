//! One function per subcommand. Each returns a [`Run`]: the report, a CSV
//! view of it and an [`Outcome`] that fixes the exit code.

use std::path::PathBuf;

use anyhow::{bail, Result};
use limitlab::algebra::{entanglement_check, split, EntanglementVerdict, Verdict};
use limitlab::cayley::{pushforward_to_line, resolvent_two_ways, ResolventReport};
use limitlab::dynamics::{
    default_frame, limit_operator_estimate, recurrence_certificate, trajectory, weakly_wandering_search, Certificate,
    LimitOperatorEstimate, SequenceSpec, Tier, WanderOutcome,
};
use limitlab::oracle::{classify_finite, decay_at, sample_limit_operators};
use limitlab::{CircleMeasure, FourierValue, OperatorModel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{unit_vector, ExperimentConfig, Format};
use crate::report::{self, sci, Table};

/// Frame-scale residual a complete membership witness must reach.
pub const WITNESS_BOUND: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    /// Nothing failed, but some label or search stayed open.
    Undetermined(String),
    /// A certified bound was violated.
    Fail(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail(_) => 1,
            Outcome::Undetermined(_) => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub name: &'static str,
    pub report: Value,
    pub table: Table,
    pub outcome: Outcome,
}

impl Run {
    /// Writes the report in the configured format and returns the file.
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        match cfg.format {
            Format::Json => report::write_json(&cfg.out, self.name, &self.report),
            Format::Csv => report::write_csv(&cfg.out, self.name, &self.table),
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn input(cfg: &ExperimentConfig, extra: Value) -> Result<Value> {
    let mut v = json!({
        "exact": true,
        "model": to_value(&cfg.file.model)?,
        "model_file": cfg.model_path.file_name().map(|f| f.to_string_lossy().into_owned()),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    Ok(v)
}

fn tier_name(t: Tier) -> &'static str {
    match t {
        Tier::Certified => "certified",
        Tier::Predicted => "predicted",
        Tier::Empirical => "empirical",
    }
}

/// Integral frequencies print as integers.
fn frequency(xi: f64) -> Value {
    if xi.fract() == 0.0 && xi.abs() < 9.0e15 {
        json!(xi as i64)
    } else {
        json!(xi)
    }
}

fn cyclic_measure(model: &OperatorModel) -> Result<&CircleMeasure> {
    match model {
        OperatorModel::CyclicUnitary(mu) => Ok(mu),
        other => bail!("this command needs a cyclic_unitary model, got {}", other.kind()),
    }
}

/// `μ̂(ξ)` over `--seq`, the file's `frequencies` list, or `1..=10`.
pub fn cmd_fourier(cfg: &ExperimentConfig) -> Result<Run> {
    let mu = cyclic_measure(&cfg.file.model)?;
    let tol = cfg.tol.unwrap_or(1e-12);
    let xs: Vec<f64> = match (&cfg.seq, &cfg.file.frequencies) {
        (Some(s), _) => s.times()?,
        (None, Some(f)) => f.clone(),
        (None, None) => (1..=10).map(f64::from).collect(),
    };
    let values: Vec<FourierValue> =
        cfg.execution.map(&xs, |&xi| mu.fourier(xi, tol)).into_iter().collect::<limitlab::Result<_>>()?;
    let mut table = Table::new(&["xi", "re", "im", "error_bound"]);
    let mut rows = Vec::new();
    for (&xi, v) in xs.iter().zip(&values) {
        rows.push(json!({"xi": frequency(xi), "value": [v.value.re, v.value.im], "error_bound": v.error_bound}));
        table.push(vec![report::to_json_string(&frequency(xi)).trim().to_string(), sci(v.value.re), sci(v.value.im), sci(v.error_bound)]);
    }
    let report = json!({
        "input": input(cfg, json!({"tol": tol, "sequence": to_value(&cfg.seq)?}))?,
        "values": rows,
    });
    Ok(Run { name: "fourier", report, table, outcome: Outcome::Pass })
}

/// Discrete-side splitting of every component.
pub fn cmd_classify(cfg: &ExperimentConfig) -> Result<Run> {
    let mut policy = cfg.file.policy.classify.with_execution(cfg.execution);
    if let Some(t) = cfg.tol {
        policy.tol = t;
    }
    let s = split(&cfg.file.model, &policy)?;
    let mut table = Table::new(&["component", "kind", "label", "tier"]);
    for c in &s.components {
        table.push(vec![c.index.to_string(), c.kind.to_string(), label_name(&to_value(&c.label)?), tier_name(c.certificate.tier()).into()]);
    }
    let outcome = if s.unknown.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Undetermined(format!("components {:?} are unlabeled", s.unknown))
    };
    let report = json!({
        "input": input(cfg, json!({"policy": to_value(&policy)?}))?,
        "splitting": to_value(&s)?,
    });
    Ok(Run { name: "classify", report, table, outcome })
}

fn label_name(v: &Value) -> String {
    v.as_str().unwrap_or_default().to_string()
}

/// The sequence along which the model's first cyclic component has a
/// closed-form limit.
pub fn natural_sequence(model: &OperatorModel) -> SequenceSpec {
    let first = model.components().into_iter().find_map(|c| match c {
        OperatorModel::CyclicUnitary(mu) => Some(mu),
        _ => None,
    });
    match first {
        Some(CircleMeasure::InfiniteConvolution(conv)) => (1..=5)
            .rev()
            .map(|len| SequenceSpec::Tower { base: conv.base(), exponents: conv.rule().clone(), len })
            .find(|s| s.indices().is_ok())
            .unwrap_or(SequenceSpec::Powers { base: 2, len: 12 }),
        Some(CircleMeasure::SelfSimilar(s)) => SequenceSpec::Powers { base: s.base(), len: 16 },
        _ => SequenceSpec::Powers { base: 2, len: 12 },
    }
}

#[derive(Debug, Clone, Serialize)]
struct Assertion {
    name: String,
    value: f64,
    bound: f64,
    pass: bool,
}

impl Assertion {
    fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound }
    }
}

fn assertions(estimate: &LimitOperatorEstimate, verdict: &EntanglementVerdict) -> Vec<Assertion> {
    let mut out = Vec::new();
    if let Some(p) = estimate.prediction.as_ref().filter(|p| p.tier == Tier::Certified) {
        out.push(Assertion::new("limit_estimate", p.max_deviation, p.rate_bound + estimate.element_bound));
    }
    for c in &verdict.components {
        if let Certificate::PoissonRecurrence { tier: Tier::Certified, epsilons, defects, error_bound, .. } =
            &c.discrete.certificate
        {
            let excess = defects.iter().zip(epsilons).map(|(d, e)| d - e).fold(f64::NEG_INFINITY, f64::max);
            out.push(Assertion::new(format!("recurrence[{}]", c.index), excess, *error_bound));
        }
        if let Some(w) = c.witness.as_ref().filter(|w| !w.truncated) {
            let residual = w.discrete_in_continuous.max(w.continuous_in_discrete);
            out.push(Assertion::new(format!("membership[{}]", c.index), residual, WITNESS_BOUND + w.error_bound));
        }
    }
    out
}

fn resolvent_bound(r: &ResolventReport) -> f64 {
    r.spectral.error_bound + r.laplace.error_bound
}

fn resolvent_entry(component: usize, r: &ResolventReport) -> Result<Value> {
    Ok(json!({
        "component": component,
        "tier": if r.simpson_certified { "certified" } else { "empirical" },
        "bound": resolvent_bound(r),
        "report": to_value(r)?,
    }))
}

/// Resolvent both ways on each cyclic component whose line measure has
/// bounded support; witnesses that already carry one are reused.
fn resolvent_section(
    model: &OperatorModel,
    verdict: &EntanglementVerdict,
    tol: Option<f64>,
    cfg: &ExperimentConfig,
) -> Result<(Vec<Value>, Vec<Assertion>)> {
    let mut entries = Vec::new();
    let mut checks = Vec::new();
    for (i, c) in model.components().into_iter().enumerate() {
        let OperatorModel::CyclicUnitary(mu) = c else { continue };
        let from_witness = verdict.components[i].witness.as_ref().and_then(|w| w.resolvent.clone());
        let report = match (from_witness, tol) {
            (Some(r), _) => Some(r),
            (None, Some(t)) if pushforward_to_line(mu)?.support_bound().is_finite() => {
                let e0 = limitlab::VectorRep::character(0);
                Some(resolvent_two_ways(c, &e0, &e0, t, cfg.execution)?)
            }
            (None, Some(_)) => {
                entries.push(json!({"component": i, "skipped": "line measure has unbounded support"}));
                None
            }
            (None, None) => None,
        };
        if let Some(r) = report {
            if r.simpson_certified {
                checks.push(Assertion::new(format!("resolvent[{i}]"), r.discrepancy, resolvent_bound(&r)));
            }
            entries.push(resolvent_entry(i, &r)?);
        }
    }
    Ok((entries, checks))
}

/// Trajectory, limit estimate, recurrence, splitting, entanglement verdict and
/// resolvent cross-check for one model, with every certified claim re-checked.
pub fn cmd_example56(cfg: &ExperimentConfig) -> Result<Run> {
    let model = &cfg.file.model;
    let exec = cfg.execution;
    let mut policy = cfg.file.policy.clone().with_execution(exec);
    if let Some(t) = cfg.tol {
        policy.classify.tol = t;
    }
    let seq = cfg.seq.clone().unwrap_or_else(|| natural_sequence(model));
    let frame = cfg.frame.clone().unwrap_or_else(|| default_frame(model));
    let x = cfg.file.x.clone().unwrap_or_else(|| unit_vector(model));
    let tol = 1e-12;

    let orbit = trajectory(model, &x, &x, &seq, tol, exec)?;
    let indices = seq.times()?;
    let trajectory_rows: Vec<Value> = indices
        .iter()
        .zip(&orbit)
        .map(|(&n, v)| json!({"index": frequency(n), "value": [v.value.re, v.value.im], "error_bound": v.error_bound}))
        .collect();
    let estimate = limit_operator_estimate(model, &seq, &frame, tol, exec)?;

    let mut recurrence = Vec::new();
    for (i, c) in model.components().into_iter().enumerate() {
        if matches!(c, OperatorModel::CyclicUnitary(_)) {
            let cert = recurrence_certificate(c, &policy.classify.recurrence, exec)?;
            recurrence.push(json!({"component": i, "certificate": to_value(&cert)?}));
        }
    }

    let verdict = entanglement_check(model, &policy)?;
    let (resolvent, resolvent_checks) = resolvent_section(model, &verdict, policy.resolvent_tol, cfg)?;
    let mut checks = assertions(&estimate, &verdict);
    checks.extend(resolvent_checks);

    let failed: Vec<&Assertion> = checks.iter().filter(|a| !a.pass).collect();
    let outcome = if !failed.is_empty() {
        Outcome::Fail(
            failed
                .iter()
                .map(|a| format!("{}: {} exceeds bound {}", a.name, sci(a.value), sci(a.bound)))
                .collect::<Vec<_>>()
                .join("; "),
        )
    } else if verdict.verdict == Verdict::Undetermined {
        Outcome::Undetermined("entanglement verdict is undetermined".into())
    } else {
        Outcome::Pass
    };
    let status = match &outcome {
        Outcome::Pass => "pass",
        Outcome::Undetermined(_) => "undetermined",
        Outcome::Fail(_) => "fail",
    };

    let mut table = Table::new(&["component", "kind", "discrete", "discrete_tier", "continuous", "continuous_tier", "status"]);
    for c in &verdict.components {
        table.push(vec![
            c.index.to_string(),
            c.kind.to_string(),
            label_name(&to_value(&c.discrete.label)?),
            tier_name(c.discrete.certificate.tier()).into(),
            label_name(&to_value(&c.continuous.label)?),
            tier_name(c.continuous.certificate.tier()).into(),
            to_value(&c.status)?.as_str().unwrap_or_default().to_string(),
        ]);
    }

    let report = json!({
        "input": input(cfg, json!({"policy": to_value(&policy)?, "sequence": to_value(&seq)?, "tol": tol}))?,
        "trajectory": {"vector": x.to_json(), "empirical": true, "values": trajectory_rows},
        "limit_estimate": to_value(&estimate)?,
        "recurrence": recurrence,
        "splitting": {
            "h_m": verdict.h_m_discrete,
            "h_w": verdict.h_w_discrete,
            "unknown": verdict.components.iter().filter(|c| c.discrete.label == limitlab::dynamics::Label::Unknown).map(|c| c.index).collect::<Vec<_>>(),
        },
        "entanglement": to_value(&verdict)?,
        "resolvent": resolvent,
        "assertions": checks,
        "status": status,
    });
    Ok(Run { name: "example56", report, table, outcome })
}

/// Finite-dimensional ground truth: unitary part, flight decay and sampled
/// limit operators of the unitary restriction.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<Run> {
    let OperatorModel::FiniteContraction(f) = &cfg.file.model else {
        bail!("oracle needs a finite model, got {}", cfg.file.model.kind());
    };
    let p = cfg.file.oracle;
    let t = f.matrix();
    let s = classify_finite(t)?;
    let decay = decay_at(t, &s.h_w_basis, p.decay_power);
    let basis = &s.analysis.unitary_basis;
    let samples = if basis.ncols() > 0 && p.budget > 0 {
        let restricted = basis.adjoint() * t * basis;
        let samples = sample_limit_operators(&restricted, p.budget, p.radius, cfg.execution)?;
        json!({
            "empirical": true,
            "budget": p.budget,
            "radius": p.radius,
            "clusters": samples.len(),
            "samples": to_value(&samples)?,
        })
    } else {
        Value::Null
    };
    let mut table = Table::new(&["index", "re", "im", "modulus"]);
    for (i, z) in s.analysis.unitary_eigenvalues.iter().enumerate() {
        table.push(vec![i.to_string(), sci(z.re), sci(z.im), sci(z.norm())]);
    }
    let check = Assertion::new(format!("decay at power {}", p.decay_power), decay, p.decay_tol);
    let outcome = if check.pass {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("{}: {} exceeds bound {}", check.name, sci(check.value), sci(check.bound)))
    };
    let report = json!({
        "input": input(cfg, json!({"oracle": {"budget": p.budget, "radius": p.radius, "decay_power": p.decay_power, "decay_tol": p.decay_tol}}))?,
        "splitting": {
            "error_bound": s.analysis.restriction_defect.max(s.analysis.threshold),
            "unitary_dim": s.analysis.unitary_dim(),
            "flight_dim": s.h_w_basis.ncols(),
            "report": to_value(&s)?,
        },
        "decay": check,
        "limit_samples": samples,
    });
    Ok(Run { name: "oracle", report, table, outcome })
}

/// Greedy weakly wandering index search.
pub fn cmd_wander(cfg: &ExperimentConfig) -> Result<Run> {
    let p = cfg.file.wander;
    let x = cfg.file.x();
    let result = weakly_wandering_search(&cfg.file.model, &x, p.count, p.epsilon, p.n_max, cfg.execution)?;
    let mut table = Table::new(&["position", "index"]);
    let (indices, outcome) = match &result {
        WanderOutcome::Found { certificate: Certificate::WeaklyWandering { indices, .. } } => (indices.clone(), Outcome::Pass),
        WanderOutcome::Found { .. } => (Vec::new(), Outcome::Pass),
        WanderOutcome::Failed { partial, best_epsilon, requested } => (
            partial.clone(),
            Outcome::Undetermined(format!(
                "found {} of {requested} indices up to {}; best admissible epsilon {}",
                partial.len(),
                p.n_max,
                sci(*best_epsilon)
            )),
        ),
    };
    for (i, k) in indices.iter().enumerate() {
        table.push(vec![i.to_string(), k.to_string()]);
    }
    let mut result = to_value(&result)?;
    if let (Value::Object(m), Outcome::Undetermined(_)) = (&mut result, &outcome) {
        m.insert("empirical".into(), json!(true));
    }
    let report = json!({
        "input": input(cfg, json!({"vector": x.to_json(), "count": p.count, "epsilon": p.epsilon, "n_max": p.n_max}))?,
        "result": result,
    });
    Ok(Run { name: "wander", report, table, outcome })
}

/// `⟨(I − iA)^{-1} x, y⟩` spectrally and by Laplace transform.
pub fn cmd_resolvent(cfg: &ExperimentConfig) -> Result<Run> {
    cyclic_measure(&cfg.file.model)?;
    let tol = cfg.tol.unwrap_or(1e-6);
    let (x, y) = (cfg.file.x(), cfg.file.y());
    let r = resolvent_two_ways(&cfg.file.model, &x, &y, tol, cfg.execution)?;
    let bound = resolvent_bound(&r);
    let mut table = Table::new(&["method", "re", "im", "error_bound"]);
    for (name, v) in [("spectral", r.spectral), ("laplace", r.laplace)] {
        table.push(vec![name.into(), sci(v.value.re), sci(v.value.im), sci(v.error_bound)]);
    }
    let outcome = if r.discrepancy <= bound {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("resolvent discrepancy {} exceeds bound {}", sci(r.discrepancy), sci(bound)))
    };
    let report = json!({
        "input": input(cfg, json!({"x": x.to_json(), "y": y.to_json(), "tol": tol}))?,
        "resolvent": resolvent_entry(0, &r)?,
    });
    Ok(Run { name: "resolvent", report, table, outcome })
}
