use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{default_frame, group_pairing, limit_operator_estimate, tower_grid, SequenceSpec};
use crate::cayley::pushforward_to_line;
use crate::error::{LabError, Result};
use crate::exec::Execution;
use crate::measure::{AdaptivePolicy, Angle, CircleMeasure, FourierValue};
use crate::model::{apply_power, inner_product_with, norm_sq, OperatorModel, VectorRep};
use crate::numeric::TAU;
use crate::oracle::spectral_radius;

/// How much a claim is backed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Closed-form rate bound, re-verified numerically.
    Certified,
    /// Closed-form limit, observed rate only.
    Predicted,
    /// Observed data, no proof.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityReason {
    RiemannLebesgue,
    ShiftStructure,
    SpectralRadiusLt1,
}

/// Observed pairings `⟨T_t x, x⟩` at sample times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub times: Vec<f64>,
    pub values: Vec<FourierValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `⟨U^{n_k} x, x⟩ ≥ ‖x‖² − ε_k` with `ε_k → 0`.
    PoissonRecurrence {
        tier: Tier,
        sequence: SequenceSpec,
        indices: Vec<u64>,
        epsilons: Vec<f64>,
        /// `‖x‖² − Re⟨U^{n_k} x, x⟩`.
        defects: Vec<f64>,
        /// `‖U^{n_k} x − x‖²`, evaluated on the explicit difference vector.
        strong_defects: Vec<f64>,
        /// Evaluation error of each defect.
        error_bound: f64,
    },
    /// A certified limit `V = c·I` with `c ≠ 0`, so `x = c^{-1} V x` lies in
    /// the closed span of the limit orbit.
    ScalarLimit {
        tier: Tier,
        sequence: SequenceSpec,
        scalar: FourierValue,
        rate_bound: f64,
    },
    WeakStabilityByClass {
        tier: Tier,
        reason: StabilityReason,
        #[serde(skip_serializing_if = "Option::is_none")]
        spectral_radius: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        evidence: Option<Evidence>,
        /// Set when the label was imposed by policy rather than derived.
        synthetic: bool,
    },
    WeaklyWandering {
        tier: Tier,
        indices: Vec<u64>,
        epsilon: f64,
        max_observed: f64,
    },
    Empirical {
        tier: Tier,
        note: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        sequence: Option<SequenceSpec>,
        observed: Vec<f64>,
    },
}

impl Certificate {
    pub fn tier(&self) -> Tier {
        match self {
            Certificate::PoissonRecurrence { tier, .. }
            | Certificate::ScalarLimit { tier, .. }
            | Certificate::WeakStabilityByClass { tier, .. }
            | Certificate::WeaklyWandering { tier, .. }
            | Certificate::Empirical { tier, .. } => *tier,
        }
    }

    fn empirical(note: impl Into<String>, sequence: Option<SequenceSpec>, observed: Vec<f64>) -> Self {
        Certificate::Empirical { tier: Tier::Empirical, note: note.into(), sequence, observed }
    }

    fn stable(reason: StabilityReason) -> Self {
        Certificate::WeakStabilityByClass {
            tier: Tier::Certified,
            reason,
            spectral_radius: None,
            evidence: None,
            synthetic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "H_m")]
    Hm,
    #[serde(rename = "H_w")]
    Hw,
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: Label,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecurrencePolicy {
    /// Longest tower sequence tried.
    pub tower_len: usize,
    pub arithmetic_len: usize,
    /// Range of the greedy scan.
    pub n_max: u64,
    /// A tower certificate needs `ε_K` at or below this.
    pub target_epsilon: f64,
    pub tol: f64,
}

impl Default for RecurrencePolicy {
    fn default() -> Self {
        Self { tower_len: 5, arithmetic_len: 8, n_max: 4096, target_epsilon: 1e-6, tol: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyPolicy {
    pub recurrence: RecurrencePolicy,
    /// Length of the `Powers(b)` sequence used for scalar limits.
    pub powers_len: usize,
    pub tol: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ClassifyPolicy {
    fn default() -> Self {
        Self { recurrence: RecurrencePolicy::default(), powers_len: 16, tol: 1e-10, execution: Execution::default() }
    }
}

impl ClassifyPolicy {
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self
    }
}

/// Common denominator `q` when every atom sits at a rational angle, so that
/// `μ̂(kq) = 1` exactly.
pub(crate) fn rational_period(mu: &CircleMeasure) -> Option<u64> {
    let mut q: u64 = 1;
    for (_, part) in mu.simple_parts() {
        let CircleMeasure::Atomic(a) = part else { return None };
        for at in a.atoms() {
            match at.angle {
                Angle::Rational(r) => q = lcm(q, *r.denom() as u64),
                Angle::Float(x) if x == 0.0 => {}
                Angle::Float(_) => return None,
            }
        }
    }
    Some(q)
}

fn lcm(a: u64, b: u64) -> u64 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

fn cyclic_measure(model: &OperatorModel) -> Result<&CircleMeasure> {
    match model {
        OperatorModel::CyclicUnitary(mu) => Ok(mu),
        other => Err(LabError::Unsupported(format!("recurrence certificates need a cyclic model, got {}", other.kind()))),
    }
}

/// Re-evaluates `⟨U^{n_k} e_0, e_0⟩` and the strong defect on explicit vectors;
/// `None` if any stated `ε_k` is violated.
fn verify_recurrence(
    model: &OperatorModel,
    seq: SequenceSpec,
    epsilons: Vec<f64>,
    tier: Tier,
    tol: f64,
    exec: Execution,
) -> Result<Option<Certificate>> {
    let indices = seq.indices()?;
    let x = VectorRep::character(0);
    let rows = exec.map(&indices, |&n| -> Result<(f64, f64, f64)> {
        let ux = apply_power(model, n as i64, &x)?;
        let p = inner_product_with(model, &ux, &x, tol, Execution::Sequential)?;
        let strong = norm_sq(model, &ux.sub(&x)?, tol)?;
        Ok((1.0 - p.value.re, strong.value.re, p.error_bound.max(strong.error_bound)))
    });
    let rows: Vec<(f64, f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let error_bound = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let ok = rows
        .iter()
        .zip(&epsilons)
        .all(|(&(d, s, e), &eps)| d <= eps + e && s <= 2.0 * eps + 2.0 * e);
    Ok(ok.then(|| Certificate::PoissonRecurrence {
        tier,
        sequence: seq,
        indices,
        epsilons,
        defects: rows.iter().map(|r| r.0).collect(),
        strong_defects: rows.iter().map(|r| r.1).collect(),
        error_bound,
    }))
}

/// Poisson recurrence of the cyclic vector `e_0`, from known sequence
/// families first and a greedy scan of `Re μ̂(n)` otherwise.
pub fn recurrence_certificate(model: &OperatorModel, policy: &RecurrencePolicy, exec: Execution) -> Result<Certificate> {
    let mu = cyclic_measure(model)?;
    if let Some(q) = rational_period(mu) {
        let seq = SequenceSpec::Arithmetic { start: q, step: q, len: policy.arithmetic_len.max(1) };
        let eps = vec![0.0; seq.len()];
        if let Some(c) = verify_recurrence(model, seq, eps, Tier::Certified, policy.tol, exec)? {
            return Ok(c);
        }
    }
    if let CircleMeasure::InfiniteConvolution(conv) = mu {
        let len = (1..=policy.tower_len)
            .rev()
            .find(|&l| SequenceSpec::Tower { base: conv.base(), exponents: conv.rule().clone(), len: l }.indices().is_ok());
        if let Some(len) = len {
            let seq = SequenceSpec::Tower { base: conv.base(), exponents: conv.rule().clone(), len };
            let eps: Vec<f64> = seq
                .indices()?
                .iter()
                .enumerate()
                .map(|(i, &n)| 2.0 * std::f64::consts::PI * n as f64 * conv.tail_sum(i + 1))
                .collect();
            let decreasing = eps.windows(2).all(|w| w[1] <= w[0]);
            if decreasing && eps[eps.len() - 1] <= policy.target_epsilon {
                if let Some(c) = verify_recurrence(model, seq, eps, Tier::Certified, policy.tol, exec)? {
                    return Ok(c);
                }
            }
        }
    }
    greedy_recurrence(mu, policy, exec)
}

/// Record-setting values of `Re μ̂(n)` for `1 ≤ n ≤ N_max`.
fn greedy_recurrence(mu: &CircleMeasure, policy: &RecurrencePolicy, exec: Execution) -> Result<Certificate> {
    let tol = policy.tol.max(1e-12);
    let values = exec.map_range(policy.n_max as usize, |i| mu.fourier_at(i as i64 + 1, tol).map(|v| v.value.re));
    let mut records = Vec::new();
    let mut observed = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best + 1e-12 {
            best = v;
            records.push(i as u64 + 1);
            observed.push(v);
        }
    }
    Ok(Certificate::empirical(
        format!("no certified recurrence family; max Re μ̂(n) over n ≤ {} is {best:.6e}", policy.n_max),
        Some(SequenceSpec::Explicit { values: records }),
        observed,
    ))
}

/// Discrete-side label of a single direct summand.
pub fn classify_component(component: &OperatorModel, policy: &ClassifyPolicy) -> Result<Classification> {
    let exec = policy.execution;
    match component {
        OperatorModel::DirectSum(_) => {
            Err(LabError::InvalidModel("classify_component expects a single direct summand".into()))
        }
        OperatorModel::UnilateralShift { .. } => {
            Ok(Classification { label: Label::Hw, certificate: Certificate::stable(StabilityReason::ShiftStructure) })
        }
        OperatorModel::FiniteContraction(f) => {
            let rho = spectral_radius(f.matrix());
            if rho < 1.0 - 1e-9 {
                return Ok(Classification {
                    label: Label::Hw,
                    certificate: Certificate::WeakStabilityByClass {
                        tier: Tier::Certified,
                        reason: StabilityReason::SpectralRadiusLt1,
                        spectral_radius: Some(rho),
                        evidence: None,
                        synthetic: false,
                    },
                });
            }
            if f.is_unitary() {
                return Ok(finite_unitary_recurrence(f.matrix(), policy.recurrence.n_max));
            }
            Ok(Classification {
                label: Label::Unknown,
                certificate: Certificate::empirical(
                    "finite block with both unimodular and decaying spectrum; split it with the finite oracle",
                    None,
                    vec![rho],
                ),
            })
        }
        OperatorModel::CyclicUnitary(mu) => {
            if mu.is_absolutely_continuous() {
                return Ok(Classification {
                    label: Label::Hw,
                    certificate: Certificate::stable(StabilityReason::RiemannLebesgue),
                });
            }
            let rec = recurrence_certificate(component, &policy.recurrence, exec)?;
            if rec.tier() == Tier::Certified {
                return Ok(Classification { label: Label::Hm, certificate: rec });
            }
            if let CircleMeasure::SelfSimilar(s) = mu {
                let len = (1..=policy.powers_len)
                    .rev()
                    .find(|&l| SequenceSpec::Powers { base: s.base(), len: l }.indices().is_ok())
                    .unwrap_or(1);
                let seq = SequenceSpec::Powers { base: s.base(), len };
                let est = limit_operator_estimate(component, &seq, &default_frame(component), policy.tol, exec)?;
                if let (Tier::Certified, Some(p)) = (est.tier, &est.prediction) {
                    if let Some(c) = p.nonzero_scalar() {
                        return Ok(Classification {
                            label: Label::Hm,
                            certificate: Certificate::ScalarLimit {
                                tier: Tier::Certified,
                                sequence: seq,
                                scalar: c,
                                rate_bound: p.rate_bound,
                            },
                        });
                    }
                }
            }
            Ok(Classification { label: Label::Unknown, certificate: rec })
        }
    }
}

/// Near-returns `‖U^n − I‖₂` of a finite unitary. Every vector is recurrent
/// by almost periodicity; the returns found are reported as evidence.
fn finite_unitary_recurrence(u: &nalgebra::DMatrix<Complex64>, n_max: u64) -> Classification {
    let d = u.nrows();
    let id = nalgebra::DMatrix::<Complex64>::identity(d, d);
    let mut p = id.clone();
    let mut best = f64::INFINITY;
    let mut indices = Vec::new();
    let mut epsilons = Vec::new();
    for n in 1..=n_max {
        p = &p * u;
        let e = (&p - &id).singular_values().max();
        if e < best - 1e-15 {
            best = e;
            indices.push(n);
            epsilons.push(e);
        }
    }
    // ‖U^n x − x‖² = 2 − 2 Re⟨U^n x, x⟩ ≤ ‖U^n − I‖² for unit x.
    let strong: Vec<f64> = epsilons.iter().map(|e| e * e).collect();
    Classification {
        label: Label::Hm,
        certificate: Certificate::PoissonRecurrence {
            tier: Tier::Predicted,
            sequence: SequenceSpec::Explicit { values: indices.clone() },
            indices,
            epsilons: epsilons.clone(),
            defects: epsilons,
            strong_defects: strong,
            error_bound: 1e-12,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuousPolicy {
    /// Sample times; derived from the measure when absent.
    pub grid: Option<Vec<f64>>,
    pub grid_len: usize,
    /// `|⟨U_t x, x⟩|` staying above this on the late grid counts as non-decay.
    pub threshold: f64,
    pub tol: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ContinuousPolicy {
    fn default() -> Self {
        Self { grid: None, grid_len: 4, threshold: 0.1, tol: 1e-4, execution: Execution::default() }
    }
}

impl ContinuousPolicy {
    /// `t_k = 2π b^{n_k}` for infinite convolutions, `2π b^k` for
    /// self-similar measures, `2π 2^k` otherwise.
    pub fn grid_for(&self, component: &OperatorModel) -> Result<Vec<f64>> {
        if let Some(g) = &self.grid {
            return Ok(g.clone());
        }
        let len = self.grid_len.max(1);
        let powers = |b: u64| (1..=len as i32).map(|k| TAU * (b as f64).powi(k)).collect::<Vec<_>>();
        Ok(match component {
            OperatorModel::CyclicUnitary(CircleMeasure::InfiniteConvolution(c)) => {
                let fit = (1..=len).rev().find(|&l| tower_grid(c.base(), c.rule(), l).is_ok()).unwrap_or(1);
                tower_grid(c.base(), c.rule(), fit)?
            }
            OperatorModel::CyclicUnitary(CircleMeasure::SelfSimilar(s)) => powers(s.base()),
            OperatorModel::UnilateralShift { .. } => vec![1.0, 2.0, 4.0, 8.0],
            _ => powers(2),
        })
    }
}

/// Continuous-time label of a single direct summand: the group for cyclic
/// components (through the Cayley bridge), the translation semigroup for
/// shifts.
pub fn classify_continuous(component: &OperatorModel, policy: &ContinuousPolicy) -> Result<Classification> {
    let exec = policy.execution;
    match component {
        OperatorModel::DirectSum(_) => {
            Err(LabError::InvalidModel("classify_continuous expects a single direct summand".into()))
        }
        OperatorModel::UnilateralShift { .. } => {
            let times = policy.grid_for(component)?;
            let b0 = VectorRep::basis(0);
            let ap = AdaptivePolicy::with_execution(Execution::Sequential);
            let values = exec
                .map(&times, |&t| group_pairing(component, t, &b0, &b0, policy.tol, &ap))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok(Classification {
                label: Label::Hw,
                certificate: Certificate::WeakStabilityByClass {
                    tier: Tier::Certified,
                    reason: StabilityReason::ShiftStructure,
                    spectral_radius: None,
                    evidence: Some(Evidence { times, values }),
                    synthetic: false,
                },
            })
        }
        OperatorModel::FiniteContraction(f) => {
            let rho = spectral_radius(f.matrix());
            if rho < 1.0 - 1e-9 {
                Ok(Classification {
                    label: Label::Hw,
                    certificate: Certificate::WeakStabilityByClass {
                        tier: Tier::Certified,
                        reason: StabilityReason::SpectralRadiusLt1,
                        spectral_radius: Some(rho),
                        evidence: None,
                        synthetic: false,
                    },
                })
            } else {
                Ok(Classification {
                    label: Label::Unknown,
                    certificate: Certificate::empirical(
                        "no continuous-time bridge for finite blocks with unimodular spectrum",
                        None,
                        vec![rho],
                    ),
                })
            }
        }
        OperatorModel::CyclicUnitary(mu) => {
            if let Err(e) = pushforward_to_line(mu) {
                return Ok(Classification {
                    label: Label::Unknown,
                    certificate: Certificate::empirical(format!("no generator: {e}"), None, Vec::new()),
                });
            }
            if mu.is_absolutely_continuous() {
                return Ok(Classification {
                    label: Label::Hw,
                    certificate: Certificate::stable(StabilityReason::RiemannLebesgue),
                });
            }
            let times = policy.grid_for(component)?;
            let e0 = VectorRep::character(0);
            let ap = AdaptivePolicy::with_execution(Execution::Sequential);
            let values = exec
                .map(&times, |&t| group_pairing(component, t, &e0, &e0, policy.tol, &ap))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let lower: Vec<f64> = values.iter().map(|v| (v.value.norm() - v.error_bound).max(0.0)).collect();
            let late = &lower[lower.len() / 2..];
            let holds = late.iter().copied().fold(f64::INFINITY, f64::min) >= policy.threshold;
            let observed = values.iter().map(|v| v.value.norm()).collect();
            let seq = Some(SequenceSpec::Grid { times });
            Ok(if holds {
                Classification {
                    label: Label::Hm,
                    certificate: Certificate::empirical(
                        format!("|⟨U_t x, x⟩| stays ≥ {} on the late grid; no certified recurrence bound", policy.threshold),
                        seq,
                        observed,
                    ),
                }
            } else {
                Classification {
                    label: Label::Unknown,
                    certificate: Certificate::empirical("grid shows neither decay certificate nor recurrence", seq, observed),
                }
            })
        }
    }
}
