//! The limit algebra at frame scale.
//!
//! On a recurrent cyclic component the weak closure of the limit operators
//! acts on the cyclic vector exactly as the bounded functional calculus does,
//! so it is exercised here through finite Fourier polynomials `w(U)` and
//! through least-squares membership in finite orbit frames.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cayley::{resolvent_two_ways, ResolventReport};
use crate::dynamics::{
    classify_component, classify_continuous, Certificate, Classification, ClassifyPolicy, ContinuousPolicy, Label,
    StabilityReason, Tier,
};
use crate::error::{check_tol, LabError, Result};
use crate::exec::Execution;
use crate::measure::FourierValue;
use crate::model::{apply_power, inner_product_with, norm_sq, OperatorModel, VectorRep};
use crate::numeric::cis_turns;

/// Finite Fourier polynomial `w(z) = Σ c_n zⁿ`, acting as `w(U)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalculusElement {
    pub coefficients: BTreeMap<i64, Complex64>,
}

impl CalculusElement {
    pub fn constant(c: Complex64) -> Self {
        Self { coefficients: BTreeMap::from([(0, c)]) }
    }

    pub fn monomial(n: i64) -> Self {
        Self { coefficients: BTreeMap::from([(n, Complex64::new(1.0, 0.0))]) }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut coefficients = BTreeMap::new();
        for (n, c) in terms {
            *coefficients.entry(n).or_insert(Complex64::default()) += c;
        }
        Self { coefficients }
    }

    /// Polynomial product, i.e. composition `w1(U) w2(U)`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::from_terms(
            self.coefficients
                .iter()
                .flat_map(|(n, a)| other.coefficients.iter().map(move |(m, b)| (n + m, a * b))),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.coefficients.iter().chain(&other.coefficients).map(|(&n, &c)| (n, c)))
    }

    /// `w` on the unit circle at `θ` turns.
    pub fn eval(&self, theta: f64) -> Complex64 {
        self.coefficients.iter().map(|(&n, c)| c * cis_turns(n as f64 * theta)).sum()
    }

    /// `max |w|` over a uniform grid, an estimate of `‖w(U)‖` from above
    /// on any unitary.
    pub fn sup_norm(&self, points: usize) -> f64 {
        (0..points).map(|i| self.eval(i as f64 / points as f64).norm()).fold(0.0, f64::max)
    }
}

impl Serialize for CalculusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorRep::Cyclic(self.coefficients.clone()).serialize(s)
    }
}

pub const SUP_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalculusReport {
    pub vector: VectorRep,
    /// Grid estimate of `‖w(U)‖`.
    pub sup_norm: f64,
    pub grid_points: usize,
}

/// `w(U) x` by exact frequency convolution.
pub fn apply_calculus(model: &OperatorModel, w: &CalculusElement, x: &VectorRep) -> Result<CalculusReport> {
    let (OperatorModel::CyclicUnitary(_), VectorRep::Cyclic(c)) = (model, x) else {
        return Err(LabError::Unsupported(format!(
            "functional calculus applies to cyclic unitary models, got {} with a {} vector",
            model.kind(),
            x.kind()
        )));
    };
    let out = CalculusElement { coefficients: c.clone() }.mul(w);
    Ok(CalculusReport {
        vector: VectorRep::Cyclic(out.coefficients),
        sup_norm: w.sup_norm(SUP_GRID),
        grid_points: SUP_GRID,
    })
}

/// Gram pivots below this fraction of the largest diagonal entry are dropped.
pub const GRAM_TRUNCATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    /// `‖y − Σ c_j f_j‖` evaluated on the explicit difference vector.
    pub residual: f64,
    /// Evaluation error of the residual.
    pub error_bound: f64,
    pub frame_size: usize,
    pub rank: usize,
    /// True when some frame vectors were dropped by the Gram truncation; the
    /// residual then measures distance to the retained span only.
    pub truncated: bool,
    /// Largest over smallest retained pivot.
    pub condition: f64,
    #[serde(with = "crate::numeric::complex_vec")]
    pub coefficients: Vec<Complex64>,
}

/// Greedy diagonal pivoting; returns retained indices and the factor rows.
fn pivoted_cholesky(a: &DMatrix<Complex64>, threshold: f64) -> (Vec<usize>, Vec<f64>) {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut piv: Vec<usize> = Vec::new();
    let mut pivots = Vec::new();
    let mut open: Vec<usize> = (0..n).collect();
    while !open.is_empty() {
        // Largest remaining diagonal, smallest index on ties.
        let (pos, &i) = open
            .iter()
            .enumerate()
            .max_by(|(_, &p), (_, &q)| d[p].total_cmp(&d[q]).then(q.cmp(&p)))
            .expect("nonempty");
        if d[i] <= threshold * scale {
            break;
        }
        let col = piv.len();
        let root = d[i].sqrt();
        l[(i, col)] = Complex64::new(root, 0.0);
        open.remove(pos);
        for &r in &open {
            let mut s = a[(r, i)];
            for c in 0..col {
                s -= l[(r, c)] * l[(i, c)].conj();
            }
            l[(r, col)] = s / root;
            d[r] -= l[(r, col)].norm_sqr();
        }
        piv.push(i);
        pivots.push(d[i]);
    }
    (piv, pivots)
}

/// Least-squares distance from `y` to the span of `frame`.
pub fn frame_membership(
    model: &OperatorModel,
    frame: &[VectorRep],
    y: &VectorRep,
    tol: f64,
    exec: Execution,
) -> Result<MembershipReport> {
    check_tol(tol)?;
    if frame.is_empty() {
        return Err(LabError::InvalidSequence("membership needs a nonempty frame".into()));
    }
    let n = frame.len();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let vals = exec.map(&idx, |&(i, j)| inner_product_with(model, &frame[j], &frame[i], tol, Execution::Sequential));
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for (&(i, j), v) in idx.iter().zip(vals) {
        a[(i, j)] = v?.value;
    }
    let (keep, pivots) = pivoted_cholesky(&a, GRAM_TRUNCATION);
    let r = keep.len();
    let sub = DMatrix::from_fn(r, r, |p, q| a[(keep[p], keep[q])]);
    let rhs_vals = exec.map(&keep, |&i| inner_product_with(model, y, &frame[i], tol, Execution::Sequential));
    let mut rhs = DVector::<Complex64>::zeros(r);
    for (p, v) in rhs_vals.into_iter().enumerate() {
        rhs[p] = v?.value;
    }
    let sol = sub
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| LabError::PrecisionUnreachable { best_bound: f64::INFINITY, requested: tol })?;
    let mut coefficients = vec![Complex64::default(); n];
    let mut residual = y.clone();
    for (p, &i) in keep.iter().enumerate() {
        coefficients[i] = sol[p];
        residual = residual.sub(&frame[i].scale(sol[p]))?;
    }
    let rr = norm_sq(model, &residual.pruned(), tol * tol)?;
    let max_pivot = pivots.first().copied().unwrap_or(0.0);
    let min_pivot = pivots.last().copied().unwrap_or(0.0);
    Ok(MembershipReport {
        residual: rr.value.re.max(0.0).sqrt(),
        error_bound: rr.error_bound.sqrt(),
        frame_size: n,
        rank: r,
        truncated: r < n,
        condition: if min_pivot > 0.0 { max_pivot / min_pivot } else { f64::INFINITY },
        coefficients,
    })
}

/// Orbit frame `{Tⁿ x}` ordered `0, 1, −1, 2, −2, …`; non-negative powers
/// only on non-invertible models.
pub fn orbit_frame(model: &OperatorModel, x: &VectorRep, window: usize) -> Result<Vec<VectorRep>> {
    let mut out = vec![x.clone()];
    for n in 1..=window as i64 {
        out.push(apply_power(model, n, x)?);
        if model.is_invertible() {
            out.push(apply_power(model, -n, x)?);
        }
    }
    Ok(out)
}

/// Residual of projecting `y` onto `span{Uⁿ x : |n| ≤ N}`; zero certifies
/// `y ∈ M(x)` at frame scale.
pub fn limit_space_membership(
    model: &OperatorModel,
    x: &VectorRep,
    y: &VectorRep,
    window: usize,
    tol: f64,
    exec: Execution,
) -> Result<MembershipReport> {
    frame_membership(model, &orbit_frame(model, x, window)?, y, tol, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSplit {
    pub index: usize,
    pub kind: &'static str,
    pub label: Label,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub components: Vec<ComponentSplit>,
    pub h_m: Vec<usize>,
    pub h_w: Vec<usize>,
    pub unknown: Vec<usize>,
}

impl SplittingReport {
    pub fn label(&self, index: usize) -> Label {
        self.components[index].label
    }
}

/// Discrete-side labels for every direct summand.
pub fn split(model: &OperatorModel, policy: &ClassifyPolicy) -> Result<SplittingReport> {
    let mut components = Vec::new();
    for (index, c) in model.components().into_iter().enumerate() {
        let Classification { label, certificate } = classify_component(c, policy)?;
        components.push(ComponentSplit { index, kind: c.kind(), label, certificate });
    }
    let pick = |l: Label| components.iter().filter(|c| c.label == l).map(|c| c.index).collect::<Vec<_>>();
    Ok(SplittingReport { h_m: pick(Label::Hm), h_w: pick(Label::Hw), unknown: pick(Label::Unknown), components })
}

fn vector_parts(model: &OperatorModel, x: &VectorRep) -> Result<Vec<VectorRep>> {
    model.check(x)?;
    Ok(match x {
        VectorRep::Sum(p) if matches!(model, OperatorModel::DirectSum(_)) => p.clone(),
        other => vec![other.clone()],
    })
}

fn assemble(model: &OperatorModel, parts: Vec<VectorRep>) -> VectorRep {
    match model {
        OperatorModel::DirectSum(_) => VectorRep::Sum(parts),
        _ => parts.into_iter().next().expect("one part"),
    }
}

/// `(P_m x, (I − P_m) x)` by componentwise copy. Refuses when `x` has mass on
/// a component whose label is unknown.
#[allow(non_snake_case)]
pub fn projection_P_m(
    model: &OperatorModel,
    splitting: &SplittingReport,
    x: &VectorRep,
) -> Result<(VectorRep, VectorRep)> {
    let parts = vector_parts(model, x)?;
    let comps = model.components();
    if comps.len() != splitting.components.len() {
        return Err(LabError::ShapeMismatch("splitting does not match the model".into()));
    }
    let mut xm = Vec::new();
    let mut xw = Vec::new();
    for ((p, c), s) in parts.iter().zip(&comps).zip(&splitting.components) {
        match s.label {
            Label::Hm => {
                xm.push(p.clone());
                xw.push(c.zero_vector());
            }
            Label::Hw => {
                xm.push(c.zero_vector());
                xw.push(p.clone());
            }
            Label::Unknown if p.is_zero() => {
                xm.push(c.zero_vector());
                xw.push(c.zero_vector());
            }
            Label::Unknown => {
                return Err(LabError::Refused(format!(
                    "vector has mass on component {} whose label is unknown",
                    s.index
                )))
            }
        }
    }
    Ok((assemble(model, xm), assemble(model, xw)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlightTerm {
    pub component: usize,
    /// `T_τ` with `T_τ e_0` equal to the component of `x`.
    pub element: CalculusElement,
}

/// `x = Σ_τ T_τ x_τ + x_w` with cyclic vectors `x_τ = e_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlightDecomposition {
    pub terms: Vec<FlightTerm>,
    pub x_w: VectorRep,
}

pub fn flight_decomposition(
    model: &OperatorModel,
    splitting: &SplittingReport,
    x: &VectorRep,
) -> Result<FlightDecomposition> {
    let (xm, xw) = projection_P_m(model, splitting, x)?;
    let parts = vector_parts(model, &xm)?;
    let mut terms = Vec::new();
    for (i, (p, c)) in parts.iter().zip(model.components()).enumerate() {
        if splitting.label(i) != Label::Hm || p.is_zero() {
            continue;
        }
        match (c, p) {
            (OperatorModel::CyclicUnitary(_), VectorRep::Cyclic(coeffs)) => {
                terms.push(FlightTerm { component: i, element: CalculusElement { coefficients: coeffs.clone() } });
            }
            _ => {
                return Err(LabError::Unsupported(format!(
                    "flight decomposition needs cyclic recurrent components, component {i} is {}",
                    c.kind()
                )))
            }
        }
    }
    Ok(FlightDecomposition { terms, x_w: xw })
}

/// `Σ_τ T_τ e_0 + x_w`.
pub fn recompose(model: &OperatorModel, d: &FlightDecomposition) -> Result<VectorRep> {
    let mut parts = vector_parts(model, &d.x_w)?;
    for t in &d.terms {
        let img = apply_calculus(model.components()[t.component], &t.element, &VectorRep::character(0))?.vector;
        parts[t.component] = parts[t.component].add(&img)?;
    }
    Ok(assemble(model, parts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    Decoupled,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Agree,
    /// Both sides labeled, labels differ.
    Decoupled,
    Undetermined,
}

/// Frame-scale evidence that the discrete and continuous limit spaces of a
/// cyclic component coincide. The continuous side is represented by the
/// resolvent `R = (I − iA)^{-1} = ½(I + U)`, a Laplace average of the group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipWitness {
    pub window: usize,
    /// `max_n` residual of `Uⁿ x` in `span{R^j x}`.
    pub discrete_in_continuous: f64,
    /// `max_j` residual of `R^j x` in `span{Uⁿ x}`.
    pub continuous_in_discrete: f64,
    pub error_bound: f64,
    pub truncated: bool,
    pub resolvent: Option<ResolventReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentPair {
    pub index: usize,
    pub kind: &'static str,
    pub discrete: Classification,
    pub continuous: Classification,
    pub status: PairStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MembershipWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementVerdict {
    pub verdict: Verdict,
    pub components: Vec<ComponentPair>,
    pub h_m_discrete: Vec<usize>,
    pub h_m_continuous: Vec<usize>,
    pub h_w_discrete: Vec<usize>,
    pub h_w_continuous: Vec<usize>,
}

/// Imposes a continuous-side stability label on one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousOverride {
    pub component: usize,
    pub reason: StabilityReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntanglementPolicy {
    pub classify: ClassifyPolicy,
    pub continuous: ContinuousPolicy,
    /// Window `N` of the membership witness frames.
    pub frame_window: usize,
    pub membership_tol: f64,
    /// Also evaluate the resolvent both ways at this tolerance.
    pub resolvent_tol: Option<f64>,
    pub continuous_overrides: Vec<ContinuousOverride>,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for EntanglementPolicy {
    fn default() -> Self {
        Self {
            classify: ClassifyPolicy::default(),
            continuous: ContinuousPolicy::default(),
            frame_window: 4,
            membership_tol: 1e-10,
            resolvent_tol: Some(1e-6),
            continuous_overrides: Vec::new(),
            execution: Execution::default(),
        }
    }
}

impl EntanglementPolicy {
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self.classify.execution = exec;
        self.continuous.execution = exec;
        self
    }
}

/// `R^j e_0 = 2^{-j} (1 + z)^j`.
fn resolvent_power(j: usize) -> CalculusElement {
    let half = CalculusElement::from_terms([(0, Complex64::new(0.5, 0.0)), (1, Complex64::new(0.5, 0.0))]);
    (0..j).fold(CalculusElement::constant(Complex64::new(1.0, 0.0)), |acc, _| acc.mul(&half))
}

/// Mutual membership of the discrete and resolvent frames of `e_0`.
pub fn membership_witness(
    component: &OperatorModel,
    window: usize,
    tol: f64,
    resolvent_tol: Option<f64>,
    exec: Execution,
) -> Result<MembershipWitness> {
    let discrete: Vec<VectorRep> = (0..=window as i64).map(VectorRep::character).collect();
    let continuous: Vec<VectorRep> =
        (0..=window).map(|j| VectorRep::Cyclic(resolvent_power(j).coefficients)).collect();
    let mut worst = [0.0f64; 2];
    let mut error_bound: f64 = 0.0;
    let mut truncated = false;
    for (slot, (frame, targets)) in [(&continuous, &discrete), (&discrete, &continuous)].into_iter().enumerate() {
        for y in targets.iter() {
            let r = frame_membership(component, frame, y, tol, exec)?;
            worst[slot] = worst[slot].max(r.residual);
            error_bound = error_bound.max(r.error_bound);
            truncated |= r.truncated;
        }
    }
    let e0 = VectorRep::character(0);
    let resolvent = match resolvent_tol {
        Some(t) => Some(resolvent_two_ways(component, &e0, &e0, t, exec)?),
        None => None,
    };
    Ok(MembershipWitness {
        window,
        discrete_in_continuous: worst[0],
        continuous_in_discrete: worst[1],
        error_bound,
        truncated,
        resolvent,
    })
}

/// Entanglement of the cogenerator and its group: entangled exactly when
/// every component gets the same label on both sides with no unknowns.
pub fn entanglement_check(model: &OperatorModel, policy: &EntanglementPolicy) -> Result<EntanglementVerdict> {
    let exec = policy.execution;
    let mut components = Vec::new();
    for (index, c) in model.components().into_iter().enumerate() {
        let discrete = classify_component(c, &policy.classify)?;
        let continuous = match policy.continuous_overrides.iter().find(|o| o.component == index) {
            Some(o) => Classification {
                label: Label::Hw,
                certificate: Certificate::WeakStabilityByClass {
                    tier: Tier::Certified,
                    reason: o.reason,
                    spectral_radius: None,
                    evidence: None,
                    synthetic: true,
                },
            },
            None => classify_continuous(c, &policy.continuous)?,
        };
        let status = match (discrete.label, continuous.label) {
            (Label::Unknown, _) | (_, Label::Unknown) => PairStatus::Undetermined,
            (a, b) if a == b => PairStatus::Agree,
            _ => PairStatus::Decoupled,
        };
        let witness = match (status, discrete.label, c) {
            (PairStatus::Agree, Label::Hm, OperatorModel::CyclicUnitary(_)) => Some(membership_witness(
                c,
                policy.frame_window,
                policy.membership_tol,
                policy.resolvent_tol,
                exec,
            )?),
            _ => None,
        };
        components.push(ComponentPair { index, kind: c.kind(), discrete, continuous, status, witness });
    }
    let pick = |f: &dyn Fn(&ComponentPair) -> bool| components.iter().filter(|c| f(c)).map(|c| c.index).collect();
    let h_m_discrete: Vec<usize> = pick(&|c| c.discrete.label == Label::Hm);
    let h_m_continuous: Vec<usize> = pick(&|c| c.continuous.label == Label::Hm);
    let verdict = if components.iter().all(|c| c.status == PairStatus::Agree) {
        Verdict::Entangled
    } else if components.iter().any(|c| c.status == PairStatus::Undetermined) {
        Verdict::Undetermined
    } else if h_m_discrete.iter().any(|i| h_m_continuous.contains(i)) {
        // Some recurrent parts agree and others do not.
        Verdict::Undetermined
    } else {
        Verdict::Decoupled
    };
    Ok(EntanglementVerdict {
        verdict,
        h_w_discrete: pick(&|c| c.discrete.label == Label::Hw),
        h_w_continuous: pick(&|c| c.continuous.label == Label::Hw),
        h_m_discrete,
        h_m_continuous,
        components,
    })
}

/// `⟨x, y⟩` with its bound, re-exported for report assembly.
pub fn pairing(model: &OperatorModel, x: &VectorRep, y: &VectorRep, tol: f64) -> Result<FourierValue> {
    inner_product_with(model, x, y, tol, Execution::Sequential)
}
