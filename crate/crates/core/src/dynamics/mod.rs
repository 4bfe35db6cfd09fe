//! Orbit scanning and limit operators.
//!
//! A limit operator is a weak limit `V = lim T^{n_k}` along an increasing
//! sequence. Weak convergence cannot be decided from finitely many terms, so
//! every claim here carries a [`Tier`]: `Certified` claims come with a
//! closed-form rate bound, `Predicted` ones with a closed-form limit but only
//! an observed rate, and `Empirical` ones with nothing but the data.

mod certify;
mod sequence;
mod wander;

pub use certify::{
    classify_component, classify_continuous, recurrence_certificate, Certificate, ClassifyPolicy, Classification,
    ContinuousPolicy, Label, RecurrencePolicy, StabilityReason, Tier,
};
pub use sequence::SequenceSpec;
pub use wander::{weakly_wandering_search, WanderOutcome};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::cayley::apply_group;
use crate::error::{check_tol, LabError, Result};
use crate::exec::Execution;
use crate::measure::{AdaptivePolicy, CircleMeasure, FourierValue, InfiniteConvolution};
use crate::model::{apply_power, inner_product_with, matrix_power, shift_semigroup_element, OperatorModel, VectorRep};
use crate::numeric::TAU;

/// `⟨U_t x, y⟩` for the continuous-time group (cyclic components, through the
/// Cayley bridge) or semigroup (shift components, through Laguerre coordinates).
pub fn group_pairing(
    model: &OperatorModel,
    t: f64,
    x: &VectorRep,
    y: &VectorRep,
    tol: f64,
    policy: &AdaptivePolicy,
) -> Result<FourierValue> {
    check_tol(tol)?;
    model.check(x)?;
    model.check(y)?;
    match (model, x, y) {
        (OperatorModel::CyclicUnitary(_), _, _) => apply_group(model, t, x, tol, *policy)?.pair(y),
        (OperatorModel::UnilateralShift { truncation }, VectorRep::Shift(_), VectorRep::Shift(d)) => {
            if let Some((&k, _)) = d.iter().next_back().filter(|(&k, _)| k as usize >= *truncation) {
                return Err(LabError::ShapeMismatch(format!("coordinate {k} outside the Laguerre window")));
            }
            let y_l1: f64 = d.values().map(|c| c.norm()).sum();
            let r = shift_semigroup_element(model, t, x, tol / y_l1.max(1.0))?;
            let v = d.iter().map(|(&k, c)| r.coefficients[k as usize] * c.conj()).sum();
            Ok(FourierValue::new(v, r.error_bound * y_l1))
        }
        (OperatorModel::DirectSum(ms), VectorRep::Sum(xs), VectorRep::Sum(ys)) => {
            let weights: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a.l1_norm() * b.l1_norm()).collect();
            let total: f64 = weights.iter().sum();
            let mut acc = FourierValue::exact(Complex64::default());
            for ((m, (a, b)), w) in ms.iter().zip(xs.iter().zip(ys)).zip(weights) {
                if w > 0.0 {
                    acc = acc + group_pairing(m, t, a, b, tol * w / total, policy)?;
                }
            }
            Ok(acc)
        }
        _ => Err(LabError::Unsupported(format!("no continuous-time group for a {} model", model.kind()))),
    }
}

/// Weak observables `⟨T^{n_k} x, y⟩` (or `⟨U_{t_k} x, y⟩` on a time grid).
pub fn trajectory(
    model: &OperatorModel,
    x: &VectorRep,
    y: &VectorRep,
    seq: &SequenceSpec,
    tol: f64,
    exec: Execution,
) -> Result<Vec<FourierValue>> {
    check_tol(tol)?;
    model.check(x)?;
    model.check(y)?;
    if seq.is_continuous() {
        let policy = AdaptivePolicy::with_execution(Execution::Sequential);
        let times = seq.times()?;
        return exec.map(&times, |&t| group_pairing(model, t, x, y, tol, &policy)).into_iter().collect();
    }
    let idx = seq.indices()?;
    exec.map(&idx, |&n| orbit_pairing(model, n, x, y, tol)).into_iter().collect()
}

/// `⟨T^n x, y⟩`.
fn orbit_pairing(model: &OperatorModel, n: u64, x: &VectorRep, y: &VectorRep, tol: f64) -> Result<FourierValue> {
    let tx = apply_power(model, n as i64, x)?;
    inner_product_with(model, &tx, y, tol, Execution::Sequential)
}

/// Closed-form limit of `T^{n_k}` on one component along one sequence.
#[derive(Debug, Clone)]
pub(crate) enum LimitLaw<'a> {
    /// Self-similar measure along powers of its base: `V = μ̂(1)·I`, with
    /// `|μ̂(N + ℓ) − μ̂(ℓ)μ̂(1)| ≤ 4π|ℓ|/N`.
    SelfSimilar { c: FourierValue },
    /// Infinite convolution along its own tower: `V = I`, with
    /// `|μ̂(N + ℓ) − μ̂(ℓ)| ≤ π(|N + ℓ| + |ℓ|)·Σ_{j>k} b^{-n_j}`.
    Tower { conv: &'a InfiniteConvolution },
    /// Rational atoms along multiples of the common denominator: `V = I` exactly.
    Periodic,
    /// `⟨T^N e_n, e_m⟩` vanishes exactly once `N` clears the frequency spread.
    Lebesgue,
    Trig { degree: i64 },
    Shift,
    /// Finite matrix with spectral radius below one: `V = 0`, `|⟨T^N a, b⟩| ≤ ‖T^N‖‖a‖‖b‖`.
    Stable { matrix: &'a DMatrix<Complex64> },
}

impl LimitLaw<'_> {
    fn scalar(&self) -> FourierValue {
        match self {
            LimitLaw::SelfSimilar { c } => *c,
            LimitLaw::Tower { .. } | LimitLaw::Periodic => FourierValue::exact(Complex64::new(1.0, 0.0)),
            _ => FourierValue::exact(Complex64::default()),
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            LimitLaw::SelfSimilar { .. } => "self_similar_powers",
            LimitLaw::Tower { .. } => "tower_identity",
            LimitLaw::Periodic => "rational_period",
            LimitLaw::Lebesgue | LimitLaw::Trig { .. } => "riemann_lebesgue",
            LimitLaw::Shift => "shift_structure",
            LimitLaw::Stable { .. } => "spectral_radius_lt_1",
        }
    }

    /// Certified bound on `|⟨T^N a, b⟩ − c⟨a, b⟩|` at the `k`-th entry `N`,
    /// or `None` when the law gives no bound at this `N`.
    fn rate(&self, k: usize, n: u64, a: &VectorRep, b: &VectorRep) -> Option<f64> {
        let nf = n as f64;
        let pairs = |f: &dyn Fn(i64) -> f64| -> Option<f64> {
            let (VectorRep::Cyclic(p), VectorRep::Cyclic(q)) = (a, b) else { return None };
            Some(p.iter().flat_map(|(i, x)| q.iter().map(move |(j, y)| x.norm() * y.norm() * f(i - j))).sum())
        };
        match self {
            LimitLaw::SelfSimilar { .. } => pairs(&|l| 4.0 * std::f64::consts::PI * l.abs() as f64 / nf),
            LimitLaw::Tower { conv } => {
                let tail = conv.tail_sum(k);
                pairs(&|l| std::f64::consts::PI * ((nf + l as f64).abs() + l.abs() as f64) * tail)
            }
            LimitLaw::Periodic => Some(0.0),
            LimitLaw::Lebesgue | LimitLaw::Trig { .. } => {
                let degree = if let LimitLaw::Trig { degree } = self { *degree } else { 0 };
                let (VectorRep::Cyclic(p), VectorRep::Cyclic(q)) = (a, b) else { return None };
                let clear = p.keys().all(|i| q.keys().all(|j| (n as i64 + i - j).abs() > degree));
                clear.then_some(0.0)
            }
            LimitLaw::Shift => {
                let (VectorRep::Shift(p), VectorRep::Shift(q)) = (a, b) else { return None };
                let clear = p.keys().all(|i| q.keys().all(|j| n + i != *j));
                clear.then_some(0.0)
            }
            LimitLaw::Stable { matrix } => {
                let (VectorRep::Finite(p), VectorRep::Finite(q)) = (a, b) else { return None };
                let norm = matrix_power(matrix, n).singular_values().max();
                Some(norm * p.norm() * q.norm())
            }
        }
    }
}

fn limit_law<'a>(component: &'a OperatorModel, seq: &SequenceSpec, tol: f64) -> Result<Option<LimitLaw<'a>>> {
    Ok(match component {
        OperatorModel::CyclicUnitary(mu) => match (mu, seq) {
            (CircleMeasure::SelfSimilar(s), SequenceSpec::Powers { base, .. }) if is_power_of(*base, s.base()) => {
                Some(LimitLaw::SelfSimilar { c: mu.fourier_at(1, tol)? })
            }
            (CircleMeasure::InfiniteConvolution(c), SequenceSpec::Tower { base, exponents, .. })
                if *base == c.base() && exponents == c.rule() =>
            {
                Some(LimitLaw::Tower { conv: c })
            }
            (CircleMeasure::Lebesgue, _) => Some(LimitLaw::Lebesgue),
            (CircleMeasure::TrigDensity(d), _) => Some(LimitLaw::Trig { degree: d.coefficients().len() as i64 - 1 }),
            _ => match certify::rational_period(mu) {
                Some(q) if seq.indices()?.iter().all(|n| n % q == 0) => Some(LimitLaw::Periodic),
                _ => None,
            },
        },
        OperatorModel::UnilateralShift { .. } => Some(LimitLaw::Shift),
        OperatorModel::FiniteContraction(f) if crate::oracle::spectral_radius(f.matrix()) < 1.0 => {
            Some(LimitLaw::Stable { matrix: f.matrix() })
        }
        _ => None,
    })
}

fn is_power_of(n: u64, b: u64) -> bool {
    let mut m = b;
    while m < n {
        match m.checked_mul(b) {
            Some(next) => m = next,
            None => return false,
        }
    }
    m == n
}

/// Per-component laws, or `None` if some component has no closed form.
pub(crate) fn limit_laws<'a>(model: &'a OperatorModel, seq: &SequenceSpec, tol: f64) -> Result<Option<Vec<LimitLaw<'a>>>> {
    if seq.is_continuous() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for c in model.components() {
        match limit_law(c, seq, tol)? {
            Some(l) => out.push(l),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn parts(v: &VectorRep) -> Vec<&VectorRep> {
    match v {
        VectorRep::Sum(p) => p.iter().collect(),
        other => vec![other],
    }
}

/// `Σ_c rate_c(a_c, b_c)` over components.
fn combined_rate(laws: &[LimitLaw], k: usize, n: u64, a: &VectorRep, b: &VectorRep) -> Option<f64> {
    laws.iter().zip(parts(a).into_iter().zip(parts(b))).map(|(l, (p, q))| l.rate(k, n, p, q)).sum()
}

/// `V` acting blockwise by the scalars of each component's law.
fn apply_scalars(scalars: &[Complex64], x: &VectorRep) -> VectorRep {
    match x {
        VectorRep::Sum(p) => VectorRep::Sum(p.iter().zip(scalars).map(|(v, c)| v.scale(*c)).collect()),
        other => other.scale(scalars[0]),
    }
}

/// Error in `V` from the scalars themselves: `Σ_c δc_c ‖a_c‖₁‖b_c‖₁`.
fn scalar_error(laws: &[LimitLaw], a: &VectorRep, b: &VectorRep) -> f64 {
    laws.iter()
        .zip(parts(a).into_iter().zip(parts(b)))
        .map(|(l, (p, q))| l.scalar().error_bound * p.l1_norm() * q.l1_norm())
        .sum()
}

/// Closed-form limit attached to an estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub tier: Tier,
    /// `V` restricted to each component is `scalars[c]·I`.
    pub scalars: Vec<FourierValue>,
    pub laws: Vec<&'static str>,
    #[serde(with = "crate::numeric::complex_matrix")]
    pub matrix: Vec<Vec<Complex64>>,
    /// Certified bound on `|⟨T^{n_K} f_i, f_j⟩ − ⟨V f_i, f_j⟩|` over the frame.
    pub rate_bound: f64,
    /// Observed `max |element − predicted|`.
    pub max_deviation: f64,
}

impl Prediction {
    /// `V x`.
    pub fn apply(&self, x: &VectorRep) -> VectorRep {
        let s: Vec<Complex64> = self.scalars.iter().map(|c| c.value).collect();
        apply_scalars(&s, x)
    }

    /// True when `V = c·I` on a single component with `|c|` certified nonzero.
    pub fn nonzero_scalar(&self) -> Option<FourierValue> {
        match self.scalars.as_slice() {
            [c] if c.value.norm() > c.error_bound => Some(*c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitOperatorEstimate {
    pub sequence: SequenceSpec,
    pub frame: Vec<VectorRep>,
    /// Last sequence entry `n_K` (or `t_K`).
    pub index: f64,
    /// `⟨T^{n_K} f_i, f_j⟩`, row `i`, column `j`.
    #[serde(with = "crate::numeric::complex_matrix")]
    pub matrix_elements: Vec<Vec<Complex64>>,
    pub element_bound: f64,
    /// `max |M_K − M_{K−1}|`; absent for one-entry sequences.
    pub cauchy_residual: Option<f64>,
    pub prediction: Option<Prediction>,
    /// `Certified` when a certified prediction is met within its bound, else `Empirical`.
    pub tier: Tier,
}

/// Frame Gram data at the last two entries of `seq`, with a closed-form limit
/// where the component classes provide one. Reports evidence; does not claim
/// convergence unless the prediction is certified.
pub fn limit_operator_estimate(
    model: &OperatorModel,
    seq: &SequenceSpec,
    frame: &[VectorRep],
    tol: f64,
    exec: Execution,
) -> Result<LimitOperatorEstimate> {
    check_tol(tol)?;
    if frame.is_empty() {
        return Err(LabError::InvalidSequence("limit estimate needs a nonempty frame".into()));
    }
    for f in frame {
        model.check(f)?;
    }
    let times = seq.times()?;
    let last = times.len() - 1;
    let pairs: Vec<(usize, usize)> = (0..frame.len()).flat_map(|i| (0..frame.len()).map(move |j| (i, j))).collect();
    let gram_at = |pos: usize| -> Result<Vec<FourierValue>> {
        let single = match seq {
            SequenceSpec::Grid { .. } => SequenceSpec::Grid { times: vec![times[pos]] },
            _ => SequenceSpec::Explicit { values: vec![times[pos] as u64] },
        };
        exec.map(&pairs, |&(i, j)| trajectory(model, &frame[i], &frame[j], &single, tol, Execution::Sequential).map(|v| v[0]))
            .into_iter()
            .collect()
    };
    let now = gram_at(last)?;
    let n = frame.len();
    let matrix: Vec<Vec<Complex64>> = (0..n).map(|i| (0..n).map(|j| now[i * n + j].value).collect()).collect();
    let element_bound = now.iter().map(|v| v.error_bound).fold(0.0, f64::max);
    let cauchy_residual = if last > 0 {
        let before = gram_at(last - 1)?;
        Some(now.iter().zip(&before).map(|(a, b)| (a.value - b.value).norm()).fold(0.0, f64::max))
    } else {
        None
    };

    let prediction = match limit_laws(model, seq, tol)? {
        Some(laws) => {
            let idx = seq.indices()?;
            let n_k = idx[last];
            let scalars: Vec<FourierValue> = laws.iter().map(|l| l.scalar()).collect();
            let cs: Vec<Complex64> = scalars.iter().map(|c| c.value).collect();
            let mut rate_bound: Option<f64> = Some(0.0);
            let mut predicted = vec![vec![Complex64::default(); n]; n];
            let mut max_deviation: f64 = 0.0;
            for &(i, j) in &pairs {
                let v = inner_product_with(model, &apply_scalars(&cs, &frame[i]), &frame[j], tol, Execution::Sequential)?;
                predicted[i][j] = v.value;
                max_deviation = max_deviation.max((matrix[i][j] - v.value).norm());
                let r = combined_rate(&laws, last + 1, n_k, &frame[i], &frame[j])
                    .map(|r| r + v.error_bound + scalar_error(&laws, &frame[i], &frame[j]));
                rate_bound = rate_bound.zip(r).map(|(a, b)| a.max(b));
            }
            rate_bound.map(|rate_bound| Prediction {
                tier: Tier::Certified,
                scalars,
                laws: laws.iter().map(|l| l.describe()).collect(),
                matrix: predicted,
                rate_bound,
                max_deviation,
            })
        }
        None => None,
    };
    let tier = match &prediction {
        Some(p) if p.max_deviation <= p.rate_bound + element_bound => Tier::Certified,
        _ => Tier::Empirical,
    };
    Ok(LimitOperatorEstimate {
        sequence: seq.clone(),
        frame: frame.to_vec(),
        index: times[last],
        matrix_elements: matrix,
        element_bound,
        cauchy_residual,
        prediction,
        tier,
    })
}

/// Default frame: `e_{−2}..e_2` on cyclic components, `basis_0..basis_3` on
/// shifts, coordinate vectors on finite blocks; one frame vector per
/// component-local vector, zero elsewhere.
pub fn default_frame(model: &OperatorModel) -> Vec<VectorRep> {
    fn local(m: &OperatorModel) -> Vec<VectorRep> {
        match m {
            OperatorModel::CyclicUnitary(_) => (-2..=2).map(VectorRep::character).collect(),
            OperatorModel::UnilateralShift { truncation } => (0..4.min(*truncation as u64)).map(VectorRep::basis).collect(),
            OperatorModel::FiniteContraction(f) => (0..f.dim())
                .map(|i| {
                    let mut v = vec![Complex64::default(); f.dim()];
                    v[i] = Complex64::new(1.0, 0.0);
                    VectorRep::coordinates(v)
                })
                .collect(),
            OperatorModel::DirectSum(_) => Vec::new(),
        }
    }
    match model {
        OperatorModel::DirectSum(ms) => {
            let mut out = Vec::new();
            for (c, m) in ms.iter().enumerate() {
                for v in local(m) {
                    let mut parts: Vec<VectorRep> = ms.iter().map(|m| m.zero_vector()).collect();
                    parts[c] = v;
                    out.push(VectorRep::Sum(parts));
                }
            }
            out
        }
        other => local(other),
    }
}

/// One shift of a limit-cycle check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleShift {
    pub shift: u64,
    /// `⟨T^{m + n_K} x, y⟩`.
    pub orbit: FourierValue,
    /// `⟨T^m V x, y⟩`.
    pub cycle: FourierValue,
    pub difference: f64,
    /// `tol`-level evaluation error plus the certified rate bound.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycleReport {
    pub index: u64,
    pub shifts: Vec<CycleShift>,
    pub max_bound: f64,
    pub pass: bool,
}

/// Checks `⟨T^{m + n_K} x, y⟩ ≈ ⟨T^m V x, y⟩` for each shift `m`, the orbit
/// settling onto the limit cycle `m ↦ T^m V x`.
pub fn limit_cycle_check(
    model: &OperatorModel,
    estimate: &LimitOperatorEstimate,
    x: &VectorRep,
    y: &VectorRep,
    shifts: &[u64],
    tol: f64,
    exec: Execution,
) -> Result<LimitCycleReport> {
    check_tol(tol)?;
    let Some(prediction) = &estimate.prediction else {
        return Err(LabError::Unsupported("limit-cycle check needs a closed-form limit prediction".into()));
    };
    let laws = limit_laws(model, &estimate.sequence, tol)?
        .ok_or_else(|| LabError::Unsupported("sequence has no closed-form limit for this model".into()))?;
    let idx = estimate.sequence.indices()?;
    let (k, n_k) = (idx.len(), idx[idx.len() - 1]);
    let vx = prediction.apply(x);
    let rows = exec.map(shifts, |&m| -> Result<CycleShift> {
        let n = n_k.checked_add(m).ok_or_else(|| LabError::InvalidSequence(format!("shift {m} overflows")))?;
        let orbit = orbit_pairing(model, n, x, y, tol)?;
        let cycle = orbit_pairing(model, m, &vx, y, tol)?;
        let tm_x = apply_power(model, m as i64, x)?;
        let rate = combined_rate(&laws, k, n_k, &tm_x, y)
            .ok_or_else(|| LabError::Unsupported(format!("no certified rate at shift {m}")))?;
        let bound = orbit.error_bound + cycle.error_bound + scalar_error(&laws, &tm_x, y) + rate + tol;
        let difference = (orbit.value - cycle.value).norm();
        Ok(CycleShift { shift: m, orbit, cycle, difference, bound, pass: difference <= bound })
    });
    let shifts: Vec<CycleShift> = rows.into_iter().collect::<Result<_>>()?;
    let max_bound = shifts.iter().map(|s| s.bound).fold(0.0, f64::max);
    Ok(LimitCycleReport { index: n_k, pass: shifts.iter().all(|s| s.pass), shifts, max_bound })
}

/// Grid `t_k = 2π b^{n_k}` matching a tower sequence.
pub fn tower_grid(base: u64, exponents: &crate::measure::ExponentRule, len: usize) -> Result<Vec<f64>> {
    let s = SequenceSpec::Tower { base, exponents: exponents.clone(), len };
    Ok(s.indices()?.into_iter().map(|n| TAU * n as f64).collect())
}
