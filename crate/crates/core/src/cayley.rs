//! Passage between a unitary cogenerator and its one-parameter group.
//!
//! A unitary `U = ∫ e^{2πiθ} dF_θ` is the Cayley transform
//! `U = (iI − A)(iI + A)^{-1}` of a self-adjoint `A = ∫ λ dE_λ`. On the
//! spectrum this reads `e^{2πiθ} = (i − λ)/(i + λ)`, i.e. `λ = tan(πθ)` and
//! `θ = arctan(λ)/π mod 1`. The point `θ = ½` (where `z = −1`) corresponds to
//! `λ = ∞` and must carry no mass.
//!
//! The group `U_t = e^{itA}` never acts on finite frequency vectors; it is
//! observed weakly through `⟨U_t x, y⟩ = ∫ e^{itλ(θ)} dμ_{x,y}(θ)`, which is
//! integrated on the measure's refinement tree with certified bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_tol, LabError, Result};
use crate::exec::Execution;
use crate::measure::refine::{self, integrate, AdaptivePolicy, Integrand};
use crate::measure::{CircleMeasure, FourierValue};
use crate::model::{OperatorModel, VectorRep};
use crate::numeric::{cis_turns, TAU};

/// An angle `anchor + offset` with `anchor ∈ {0, ½}` and `|offset| ≤ ¼`.
///
/// Keeping the offset from `½` separate preserves the relative precision of
/// `λ` near the pole, where `θ` itself has lost almost all significant bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turn {
    pub half: bool,
    pub offset: f64,
}

impl Turn {
    pub fn from_turns(theta: f64) -> Self {
        let t = theta.rem_euclid(1.0);
        if (0.25..=0.75).contains(&t) {
            Turn { half: true, offset: t - 0.5 }
        } else if t > 0.75 {
            Turn { half: false, offset: t - 1.0 }
        } else {
            Turn { half: false, offset: t }
        }
    }

    /// The angle in `[0, 1)`.
    pub fn turns(&self) -> f64 {
        let base = if self.half { 0.5 } else { 0.0 };
        (base + self.offset).rem_euclid(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CayleyDirection {
    #[default]
    CircleToLine,
    LineToCircle,
}

/// `λ(θ) = tan(πθ)` and its inverse `θ(λ) = arctan(λ)/π mod 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CayleyAngleMap {
    pub direction: CayleyDirection,
}

impl CayleyAngleMap {
    pub fn inverse(self) -> Self {
        let direction = match self.direction {
            CayleyDirection::CircleToLine => CayleyDirection::LineToCircle,
            CayleyDirection::LineToCircle => CayleyDirection::CircleToLine,
        };
        Self { direction }
    }

    /// Applies the map in its configured direction.
    pub fn apply(self, x: f64) -> f64 {
        match self.direction {
            CayleyDirection::CircleToLine => lambda_of(x),
            CayleyDirection::LineToCircle => theta_of(x),
        }
    }
}

/// `λ(θ) = tan(πθ)`; `±∞` at `θ = ½`.
pub fn lambda_of(theta: f64) -> f64 {
    lambda_of_turn(Turn::from_turns(theta))
}

pub fn lambda_of_turn(turn: Turn) -> f64 {
    if turn.half {
        if turn.offset == 0.0 {
            return f64::INFINITY;
        }
        -1.0 / (PI * turn.offset).tan()
    } else {
        (PI * turn.offset).tan()
    }
}

pub fn turn_of(lambda: f64) -> Turn {
    if lambda.is_infinite() {
        return Turn { half: true, offset: 0.0 };
    }
    if lambda.abs() <= 1.0 {
        Turn { half: false, offset: lambda.atan() / PI }
    } else {
        Turn { half: true, offset: (-1.0 / lambda).atan() / PI }
    }
}

/// `θ(λ) ∈ [0, 1)`.
pub fn theta_of(lambda: f64) -> f64 {
    turn_of(lambda).turns()
}

/// `z = (i − λ)/(i + λ)`.
pub fn cayley_point(lambda: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (i - lambda) / (i + lambda)
}

/// `(min |λ|, max |λ|)` over the angle interval `[a, b] ⊂ [0, 1]`.
pub fn abs_lambda_range(a: f64, b: f64) -> (f64, f64) {
    let la = lambda_of(a).abs();
    let lb = lambda_of(b.min(1.0)).abs();
    let lo = if a <= 0.0 || b >= 1.0 { 0.0 } else { la.min(lb) };
    if a <= 0.5 && 0.5 <= b {
        (lo, f64::INFINITY)
    } else {
        (lo, la.max(lb))
    }
}

/// Derivative bounds of `(g∘λ)·e^{2πikθ}` from bounds `|g∘λ| ≤ s`,
/// `|(g∘λ)'| ≤ f1`, `|(g∘λ)''| ≤ f2`.
fn with_character(s: f64, f1: f64, f2: f64, k: i64) -> (f64, f64) {
    let c1 = TAU * (k as f64).abs();
    (f1 + s * c1, f2 + 2.0 * f1 * c1 + s * c1 * c1)
}

/// `θ ↦ e^{itλ(θ)} e^{2πikθ}`.
#[derive(Debug, Clone, Copy)]
pub struct GroupIntegrand {
    pub t: f64,
    pub k: i64,
}

impl Integrand for GroupIntegrand {
    fn value(&self, theta: f64) -> Complex64 {
        let l = lambda_of(theta);
        if !l.is_finite() {
            return Complex64::default();
        }
        Complex64::from_polar(1.0, self.t * l) * cis_turns(self.k as f64 * theta)
    }

    fn local_sup(&self, _a: f64, _b: f64) -> f64 {
        1.0
    }

    fn derivative_bounds(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let (_, big) = abs_lambda_range(a, b);
        if !big.is_finite() {
            return None;
        }
        let t = self.t.abs();
        let d1 = PI * (1.0 + big * big);
        let d2 = 2.0 * PI * PI * big * (1.0 + big * big);
        Some(with_character(1.0, t * d1, t * t * d1 * d1 + t * d2, self.k))
    }
}

/// `θ ↦ (1 − iλ(θ))^{-1} e^{2πikθ}`.
///
/// Since `(1 − iλ)^{-1} = (1 + e^{2πiθ})/2`, the integrand is a trigonometric
/// polynomial in `θ` and its derivatives stay bounded across the pole.
#[derive(Debug, Clone, Copy)]
pub struct ResolventIntegrand {
    pub k: i64,
}

impl Integrand for ResolventIntegrand {
    fn value(&self, theta: f64) -> Complex64 {
        let l = lambda_of(theta);
        let r = if l.is_finite() { Complex64::new(1.0, -l).inv() } else { Complex64::default() };
        r * cis_turns(self.k as f64 * theta)
    }

    fn local_sup(&self, _a: f64, _b: f64) -> f64 {
        1.0
    }

    fn derivative_bounds(&self, _a: f64, _b: f64) -> Option<(f64, f64)> {
        let (k0, k1) = ((self.k as f64).abs(), (self.k as f64 + 1.0).abs());
        Some((PI * (k0 + k1), 2.0 * PI * PI * (k0 * k0 + k1 * k1)))
    }
}

/// `θ ↦ iλ(1 − iλ)^{-1} e^{2πikθ} = ½(e^{2πi(k+1)θ} − e^{2πikθ})`.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorIntegrand {
    pub k: i64,
}

impl Integrand for GeneratorIntegrand {
    fn value(&self, theta: f64) -> Complex64 {
        let l = lambda_of(theta);
        let v = if l.is_finite() {
            Complex64::new(0.0, l) / Complex64::new(1.0, -l)
        } else {
            Complex64::new(-1.0, 0.0)
        };
        v * cis_turns(self.k as f64 * theta)
    }

    fn local_sup(&self, _a: f64, _b: f64) -> f64 {
        1.0
    }

    fn derivative_bounds(&self, _a: f64, _b: f64) -> Option<(f64, f64)> {
        ResolventIntegrand { k: self.k }.derivative_bounds(0.0, 1.0)
    }
}

/// `θ ↦ t^{-1}(e^{itλ} − 1)(1 − iλ)^{-1} e^{2πikθ}`.
#[derive(Debug, Clone, Copy)]
pub struct QuotientIntegrand {
    pub t: f64,
    pub k: i64,
}

impl QuotientIntegrand {
    fn q_bound(&self, l: f64) -> f64 {
        l.min(2.0 / self.t.abs())
    }
}

impl Integrand for QuotientIntegrand {
    fn value(&self, theta: f64) -> Complex64 {
        let l = lambda_of(theta);
        if !l.is_finite() {
            return Complex64::default();
        }
        // e^{itλ} − 1 = 2i sin(tλ/2) e^{itλ/2}, without cancellation at small tλ.
        let half = 0.5 * self.t * l;
        let q = Complex64::from_polar(2.0 * half.sin() / self.t, half + FRAC_PI_2);
        q / Complex64::new(1.0, -l) * cis_turns(self.k as f64 * theta)
    }

    fn local_sup(&self, a: f64, b: f64) -> f64 {
        let (small, big) = abs_lambda_range(a, b);
        (2.0 / self.t.abs()).min(big) / (1.0 + small * small).sqrt()
    }

    fn derivative_bounds(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let (_, big) = abs_lambda_range(a, b);
        if !big.is_finite() {
            return None;
        }
        let t = self.t.abs();
        let q = self.q_bound(big);
        let w = 1.0 + big * big;
        let f1 = PI * (w.sqrt() + q);
        let f2 = PI * PI * (t * w.powf(1.5) + 2.0 * w + 2.0 * q * w.sqrt()) + 2.0 * PI * PI * big * (w.sqrt() + q);
        Some(with_character(q, f1, f2, self.k))
    }
}

/// Pushforward of a circle measure to the line under `λ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMeasure {
    pub source: CircleMeasure,
    pub map: CayleyAngleMap,
    /// Mass of the depth-20 refinement cells touching `θ = ½`. Reported, not
    /// enforced: absolutely continuous measures keep a positive value here.
    pub pole_cell_mass: f64,
}

pub const POLE_CHECK_DEPTH: u32 = 20;

/// Rejects measures with an atom at `θ = ½`.
pub fn pushforward_to_line(mu: &CircleMeasure) -> Result<LineMeasure> {
    let atom = mu.atom_mass_at(0.5);
    if atom > 0.0 {
        return Err(LabError::MassAtPole { mass: atom });
    }
    Ok(LineMeasure {
        source: mu.clone(),
        map: CayleyAngleMap::default(),
        pole_cell_mass: refine::mass_near(mu, 0.5, POLE_CHECK_DEPTH),
    })
}

impl LineMeasure {
    /// `ν̂(t) = ∫ e^{itλ} dν(λ)`.
    pub fn characteristic(&self, t: f64, tol: f64, policy: &AdaptivePolicy) -> Result<FourierValue> {
        integrate(&self.source, &GroupIntegrand { t, k: 0 }, tol, policy)
    }

    /// Point masses `(λ, weight)` of atomic parts.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.source
            .simple_parts()
            .into_iter()
            .flat_map(|(w, p)| match p {
                CircleMeasure::Atomic(a) => {
                    a.atoms().iter().map(|at| (lambda_of(at.angle.turns()), w * at.weight)).collect()
                }
                _ => Vec::new(),
            })
            .collect()
    }

    /// Upper bound on `|λ|` over the support, from the refinement tree at
    /// moderate depth. Infinite when the support reaches the pole.
    pub fn support_bound(&self) -> f64 {
        support_lambda_bound(&self.source)
    }

    /// Line quadrature `(λ_i, w_i)` at the given circle depth; nodes at the
    /// pole are dropped and their weight returned separately.
    pub fn quadrature(&self, depth: u32) -> Result<(Vec<(f64, f64)>, f64)> {
        let q = crate::measure::quadrature(&self.source, depth)?;
        let mut dropped = 0.0;
        let mut nodes = Vec::with_capacity(q.nodes.len());
        for (theta, w) in q.nodes {
            let l = lambda_of(theta);
            if l.is_finite() {
                nodes.push((l, w));
            } else {
                dropped += w;
            }
        }
        Ok((nodes, dropped))
    }
}

const SUPPORT_LEVELS: u32 = 10;
const SUPPORT_CELLS: usize = 1 << 16;

fn support_lambda_bound(mu: &CircleMeasure) -> f64 {
    let mut bound: f64 = 0.0;
    for (_, p) in mu.simple_parts() {
        let Some(tree) = refine::Tree::of(p) else {
            if let CircleMeasure::Atomic(a) = p {
                for at in a.atoms() {
                    bound = bound.max(lambda_of(at.angle.turns()).abs());
                }
            }
            continue;
        };
        let mut level = vec![tree.root()];
        let mut next = Vec::new();
        for _ in 0..SUPPORT_LEVELS {
            next.clear();
            for c in &level {
                if c.mass == 0.0 {
                    continue;
                }
                if tree.is_leaf(c) {
                    next.push(*c);
                } else {
                    tree.children(c, &mut next);
                }
            }
            if next.len() > SUPPORT_CELLS {
                break;
            }
            std::mem::swap(&mut level, &mut next);
        }
        for c in &level {
            if c.mass > 0.0 {
                bound = bound.max(abs_lambda_range(c.left, c.right()).1);
            }
        }
    }
    bound
}

fn cyclic_parts<'a>(model: &'a OperatorModel, x: &'a VectorRep) -> Result<(&'a CircleMeasure, &'a BTreeMap<i64, Complex64>)> {
    match (model, x) {
        (OperatorModel::CyclicUnitary(mu), VectorRep::Cyclic(c)) => Ok((mu, c)),
        _ => Err(LabError::Unsupported(format!(
            "the Cayley bridge applies to cyclic unitary models, got {} with a {} vector",
            model.kind(),
            x.kind()
        ))),
    }
}

/// `Σ_{n,m} c_n conj(d_m) ∫ h_{n−m} dμ` with each integral at
/// `tol / (Σ|c| Σ|d|)`.
pub fn weak_pairing<I, F>(
    mu: &CircleMeasure,
    c: &BTreeMap<i64, Complex64>,
    d: &BTreeMap<i64, Complex64>,
    tol: f64,
    policy: &AdaptivePolicy,
    integrand: F,
) -> Result<FourierValue>
where
    I: Integrand,
    F: Fn(i64) -> I,
{
    check_tol(tol)?;
    let scale = c.values().map(|z| z.norm()).sum::<f64>() * d.values().map(|z| z.norm()).sum::<f64>();
    if scale == 0.0 {
        return Ok(FourierValue::exact(Complex64::default()));
    }
    let diffs: BTreeSet<i64> = c.keys().flat_map(|n| d.keys().map(move |m| n - m)).collect();
    let mut table = BTreeMap::new();
    for k in diffs {
        table.insert(k, integrate(mu, &integrand(k), tol / scale, policy)?);
    }
    let mut value = Complex64::default();
    let mut error = 0.0;
    for (n, a) in c {
        for (m, b) in d {
            let f = table[&(n - m)];
            let w = a * b.conj();
            value += w * f.value;
            error += w.norm() * f.error_bound;
        }
    }
    Ok(FourierValue::new(value, error))
}

/// Weak evaluation functional `y ↦ ⟨U_t x, y⟩`.
#[derive(Debug, Clone)]
pub struct GroupFunctional {
    pub line: LineMeasure,
    pub t: f64,
    pub x: BTreeMap<i64, Complex64>,
    pub tol: f64,
    pub policy: AdaptivePolicy,
}

impl GroupFunctional {
    pub fn pair(&self, y: &VectorRep) -> Result<FourierValue> {
        let VectorRep::Cyclic(d) = y else {
            return Err(LabError::ShapeMismatch(format!("cyclic vector expected, got {}", y.kind())));
        };
        let t = self.t;
        weak_pairing(&self.line.source, &self.x, d, self.tol, &self.policy, |k| GroupIntegrand { t, k })
    }
}

/// `U_t x` as a weak functional. `U_t x` has no finite frequency expansion.
pub fn apply_group(
    model: &OperatorModel,
    t: f64,
    x: &VectorRep,
    tol: f64,
    policy: AdaptivePolicy,
) -> Result<GroupFunctional> {
    check_tol(tol)?;
    if !t.is_finite() {
        return Err(LabError::InvalidSequence(format!("group time must be finite, got {t}")));
    }
    let (mu, c) = cyclic_parts(model, x)?;
    let line = pushforward_to_line(mu)?;
    Ok(GroupFunctional { line, t, x: c.clone(), tol, policy })
}

/// Both evaluations of `⟨(I − iA)^{-1} x, y⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    pub spectral: FourierValue,
    pub laplace: FourierValue,
    pub discrepancy: f64,
    /// Laplace integral truncated to `[0, truncation]`.
    pub truncation: f64,
    pub simpson_intervals: usize,
    /// False when the Simpson step came from Richardson estimation because
    /// the spectral support is unbounded.
    pub simpson_certified: bool,
}

const RICHARDSON_MAX_INTERVALS: usize = 1 << 16;

/// `⟨(I − iA)^{-1} x, y⟩` spectrally and as `∫_0^∞ e^{-t} ⟨U_t x, y⟩ dt`.
///
/// The Laplace side spends `tol/4` on truncation at `T = ln(4S/tol)`,
/// `tol/4` on composite Simpson and `tol/4` on the pointwise group values,
/// where `S = Σ|c| Σ|d|` bounds `|⟨U_t x, y⟩|`.
pub fn resolvent_two_ways(
    model: &OperatorModel,
    x: &VectorRep,
    y: &VectorRep,
    tol: f64,
    exec: Execution,
) -> Result<ResolventReport> {
    check_tol(tol)?;
    let (mu, c) = cyclic_parts(model, x)?;
    let (_, d) = cyclic_parts(model, y)?;
    let line = pushforward_to_line(mu)?;
    let policy = AdaptivePolicy::with_execution(exec);
    let spectral = weak_pairing(mu, c, d, tol, &policy, |k| ResolventIntegrand { k })?;

    let s = c.values().map(|z| z.norm()).sum::<f64>() * d.values().map(|z| z.norm()).sum::<f64>();
    if s == 0.0 {
        let zero = FourierValue::exact(Complex64::default());
        return Ok(ResolventReport {
            spectral,
            laplace: zero,
            discrepancy: spectral.value.norm(),
            truncation: 0.0,
            simpson_intervals: 0,
            simpson_certified: true,
        });
    }
    let truncation = (4.0 * s / tol).ln().max(1.0);
    let point_tol = tol / (4.0 * truncation);
    let inner = AdaptivePolicy::with_execution(Execution::Sequential);
    let eval = |ts: &[f64]| -> Result<Vec<FourierValue>> {
        exec.map(ts, |&t| weak_pairing(mu, c, d, point_tol, &inner, |k| GroupIntegrand { t, k }))
            .into_iter()
            .collect()
    };
    let simpson = |n: usize, values: &[FourierValue]| -> Complex64 {
        let h = truncation / n as f64;
        let mut acc = Complex64::default();
        for (i, v) in values.iter().enumerate() {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += v.value * (w * (-(i as f64) * h).exp());
        }
        acc * (h / 3.0)
    };
    let grid = |n: usize| -> Vec<f64> { (0..=n).map(|i| truncation * i as f64 / n as f64).collect() };

    let big = line.support_bound();
    let (value, simpson_error, intervals, certified) = if big.is_finite() {
        // |d⁴/dt⁴ (e^{-t} f)| ≤ (1 + Λ)^4 S.
        let m4 = (1.0 + big).powi(4) * s;
        let h = (45.0 * tol / (truncation * m4)).powf(0.25);
        let mut n = (truncation / h).ceil() as usize;
        n += n % 2;
        let n = n.max(2);
        let values = eval(&grid(n))?;
        let hh = truncation / n as f64;
        let bound = truncation * hh.powi(4) * m4 / 180.0;
        (simpson(n, &values), bound, n, true)
    } else {
        let mut n = 16;
        let mut prev = simpson(n, &eval(&grid(n))?);
        loop {
            let next_n = 2 * n;
            let next = simpson(next_n, &eval(&grid(next_n))?);
            let est = (next - prev).norm() / 15.0;
            n = next_n;
            if est <= tol / 4.0 || n >= RICHARDSON_MAX_INTERVALS {
                break (next, est, n, false);
            }
            prev = next;
        }
    };
    let tail = s * (-truncation).exp();
    let laplace = FourierValue::new(value, tail + simpson_error + point_tol * truncation);
    Ok(ResolventReport {
        discrepancy: (spectral.value - laplace.value).norm(),
        spectral,
        laplace,
        truncation,
        simpson_intervals: intervals,
        simpson_certified: certified,
    })
}

/// Difference quotients of the group on the resolvent range, and their limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub t: Vec<f64>,
    pub quotients: Vec<FourierValue>,
    /// `∫ iλ (1 − iλ)^{-1} dν_{x,y}`.
    pub target: FourierValue,
}

/// `⟨t^{-1}(U_t − I)(I − iA)^{-1} x, y⟩` for each `t`.
pub fn generator_difference_quotient(
    model: &OperatorModel,
    x: &VectorRep,
    y: &VectorRep,
    t_list: &[f64],
    tol: f64,
    exec: Execution,
) -> Result<QuotientReport> {
    check_tol(tol)?;
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) || t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidSequence("t_list must be positive and strictly decreasing".into()));
    }
    let (mu, c) = cyclic_parts(model, x)?;
    let (_, d) = cyclic_parts(model, y)?;
    pushforward_to_line(mu)?;
    let inner = AdaptivePolicy::with_execution(Execution::Sequential);
    let quotients = exec
        .map(t_list, |&t| weak_pairing(mu, c, d, tol, &inner, |k| QuotientIntegrand { t, k }))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let target = weak_pairing(mu, c, d, tol, &AdaptivePolicy::with_execution(exec), |k| GeneratorIntegrand { k })?;
    Ok(QuotientReport { t: t_list.to_vec(), quotients, target })
}
