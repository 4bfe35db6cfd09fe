//! Computable probability measures on the circle `[0, 1)`.
//!
//! Each measure carries a Fourier–Stieltjes oracle
//! `μ̂(ξ) = ∫ e^{2πiξθ} dμ(θ)` whose truncation depth is derived from a
//! certified tail bound, so every returned value comes with an absolute error
//! bound. Atomic, Lebesgue and trigonometric-density measures are evaluated in
//! closed form; self-similar and infinite-convolution measures use their
//! product formulas.

mod angle;
pub mod refine;
mod schema;

pub use angle::Angle;
pub use refine::{integrate, AdaptivePolicy, Integrand, Quadrature};
pub use schema::{ExponentRuleSpec, MeasureSpec};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_tol, LabError, Result};
use crate::exec::Execution;
use crate::numeric::{as_exact_integer, cis_turns, frac_of_ratio, inv_pow, TAU};

/// Default cap on the number of convolution factors.
pub const DEFAULT_J_MAX: usize = 64;

/// A complex number with a certified absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierValue {
    #[serde(with = "crate::numeric::complex_pair")]
    pub value: Complex64,
    pub error_bound: f64,
}

impl FourierValue {
    pub fn exact(value: Complex64) -> Self {
        Self { value, error_bound: 0.0 }
    }

    pub fn new(value: Complex64, error_bound: f64) -> Self {
        Self { value, error_bound }
    }

    pub fn conj(self) -> Self {
        Self { value: self.value.conj(), error_bound: self.error_bound }
    }

    pub fn scale(self, c: Complex64) -> Self {
        Self { value: self.value * c, error_bound: self.error_bound * c.norm() }
    }
}

impl std::ops::Add for FourierValue {
    type Output = FourierValue;

    fn add(self, rhs: Self) -> Self {
        Self { value: self.value + rhs.value, error_bound: self.error_bound + rhs.error_bound }
    }
}

impl std::iter::Sum for FourierValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(FourierValue::exact(Complex64::new(0.0, 0.0)), |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: Angle,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(LabError::InvalidMeasure("atomic measure needs at least one atom".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.weight > 0.0) || !a.weight.is_finite()) {
            return Err(LabError::InvalidMeasure(format!("atom weight {} is not positive", a.weight)));
        }
        check_unit_mass(atoms.iter().map(|a| a.weight), "atom weights")?;
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// Density `ρ(θ) = Σ_{|k|≤K} c_k e^{2πikθ}` with `c_{-k} = conj(c_k)`,
/// stored as `c_0, …, c_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigDensity {
    coeffs: Vec<Complex64>,
}

impl TrigDensity {
    pub const SAMPLE_POINTS: usize = 4096;
    pub const MIN_SAMPLE: f64 = -1e-9;

    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let Some(c0) = coeffs.first() else {
            return Err(LabError::InvalidMeasure("trig density needs c_0".into()));
        };
        if (c0 - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(LabError::InvalidMeasure(format!("trig density needs c_0 = 1, got {c0}")));
        }
        let d = Self { coeffs };
        let min = (0..Self::SAMPLE_POINTS)
            .map(|i| d.density(i as f64 / Self::SAMPLE_POINTS as f64))
            .fold(f64::INFINITY, f64::min);
        if min < Self::MIN_SAMPLE {
            return Err(LabError::InvalidMeasure(format!("trig density takes negative value {min:e}")));
        }
        Ok(d)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn density(&self, theta: f64) -> f64 {
        let mut s = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            s += 2.0 * (c * cis_turns(k as f64 * theta)).re;
        }
        s
    }

    /// `∫_a^b ρ(θ) dθ`.
    pub fn cell_mass(&self, a: f64, b: f64) -> f64 {
        let mut s = (b - a) * self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let kf = k as f64;
            let delta = cis_turns(kf * b) - cis_turns(kf * a);
            s += 2.0 * (c * delta / Complex64::new(0.0, TAU * kf)).re;
        }
        s
    }

    /// Coefficient `c_k` for any integer `k`.
    fn coefficient(&self, k: i64) -> Complex64 {
        let idx = k.unsigned_abs() as usize;
        match self.coeffs.get(idx) {
            Some(c) if k >= 0 => *c,
            Some(c) => c.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

/// Invariant measure of the maps `θ ↦ (θ + d)/b`, `d ∈ D`, with weights `p_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilar {
    base: u64,
    digits: Vec<u64>,
    weights: Vec<f64>,
}

impl SelfSimilar {
    pub fn new(base: u64, digits: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if base < 2 {
            return Err(LabError::InvalidMeasure(format!("self-similar base {base} < 2")));
        }
        if digits.len() < 2 || digits.len() != weights.len() {
            return Err(LabError::InvalidMeasure(
                "self-similar measure needs at least two digits with one weight each".into(),
            ));
        }
        let mut sorted = digits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != digits.len() || digits.iter().any(|&d| d >= base) {
            return Err(LabError::InvalidMeasure(format!("digits {digits:?} must be distinct and < {base}")));
        }
        if weights.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(LabError::InvalidMeasure("digit weights must be positive".into()));
        }
        check_unit_mass(weights.iter().copied(), "digit weights")?;
        Ok(Self { base, digits, weights })
    }

    pub fn uniform(base: u64, digits: Vec<u64>) -> Result<Self> {
        let p = 1.0 / digits.len() as f64;
        let weights = vec![p; digits.len()];
        Self::new(base, digits, weights)
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn digits(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.digits.iter().copied().zip(self.weights.iter().copied())
    }

    /// `m(t) = Σ_d p_d e^{2πitd}`.
    pub fn mask(&self, t: f64) -> Complex64 {
        self.digits().map(|(d, p)| cis_turns(t * d as f64) * p).sum()
    }

    /// `m(n / b^j)` with exact reduction of `n·d mod b^j`.
    fn mask_ratio(&self, n: i64, j: u64) -> Complex64 {
        self.digits()
            .map(|(d, p)| cis_turns(frac_of_ratio(n as i128 * d as i128, self.base, j)) * p)
            .sum()
    }

    /// Mean of the measure, `Σ p_d d / (b − 1)`.
    pub fn mean(&self) -> f64 {
        self.digits().map(|(d, p)| p * d as f64).sum::<f64>() / (self.base - 1) as f64
    }

    fn fourier(&self, xi: f64, tol: f64) -> FourierValue {
        // μ̂(ξ) = Π_{j=1}^{J} m(ξ/b^j) · μ̂(ξ/b^J) and |μ̂(η) − 1| ≤ 2π|η|.
        let b = self.base as f64;
        let mut tail = TAU * xi.abs();
        let mut depth = 0u64;
        while tail > tol {
            tail /= b;
            depth += 1;
        }
        let mut prod = Complex64::new(1.0, 0.0);
        match as_exact_integer(xi) {
            Some(n) => {
                for j in 1..=depth {
                    prod *= self.mask_ratio(n, j);
                }
            }
            None => {
                for j in 1..=depth {
                    prod *= self.mask(xi * inv_pow(self.base, j));
                }
            }
        }
        FourierValue::new(prod, tail)
    }
}

/// Exponent sequence `n_1 < n_2 < …` of an infinite convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ExponentRuleSpec", into = "ExponentRuleSpec")]
pub enum ExponentRule {
    /// `n_j = base^j`, `j ≥ 1`.
    Power { base: u64 },
    /// A finite list; the convolution has exactly these factors.
    Explicit(Vec<u64>),
}

impl ExponentRule {
    /// `n_j` for `j ≥ 1`; `None` past the end of an explicit list or on overflow.
    pub fn exponent(&self, j: usize) -> Option<u64> {
        match self {
            ExponentRule::Power { base } => base.checked_pow(u32::try_from(j).ok()?),
            ExponentRule::Explicit(v) => v.get(j.checked_sub(1)?).copied(),
        }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            ExponentRule::Power { .. } => None,
            ExponentRule::Explicit(v) => Some(v.len()),
        }
    }
}

/// Law of `Σ_j ε_j b^{-n_j}` with independent fair bits `ε_j`:
/// `μ̂(ξ) = Π_j ½(1 + e^{2πiξ b^{-n_j}})`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteConvolution {
    base: u64,
    rule: ExponentRule,
    j_max: usize,
    /// `b^{-n_j}` for `j = 1..=factors`.
    steps: Vec<f64>,
    /// `tails[j] ≥ Σ_{i>j} b^{-n_i}`, for `j = 0..=factors`.
    tails: Vec<f64>,
}

impl InfiniteConvolution {
    pub fn new(base: u64, rule: ExponentRule, j_max: usize) -> Result<Self> {
        if base < 2 {
            return Err(LabError::InvalidMeasure(format!("convolution base {base} < 2")));
        }
        if j_max == 0 {
            return Err(LabError::InvalidMeasure("j_max must be at least 1".into()));
        }
        match &rule {
            ExponentRule::Power { base: e } if *e < 2 => {
                return Err(LabError::InvalidMeasure("power exponent rule needs base ≥ 2".into()));
            }
            ExponentRule::Explicit(v) => {
                if v.is_empty() {
                    return Err(LabError::InvalidMeasure("explicit exponent list is empty".into()));
                }
                if v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(LabError::InvalidMeasure(format!(
                        "exponents {v:?} must be positive and strictly increasing"
                    )));
                }
            }
            _ => {}
        }
        let factors = rule.len().map_or(j_max, |l| l.min(j_max));
        let steps: Vec<f64> = (1..=factors)
            .map(|j| rule.exponent(j).map_or(0.0, |n| inv_pow(base, n)))
            .collect();
        // Beyond the computed factors, strictly increasing integer exponents
        // give Σ_{i>F} b^{-n_i} ≤ b^{-n_{F+1}} · b/(b−1).
        let beyond = match rule.exponent(factors + 1) {
            Some(n) => inv_pow(base, n) * base as f64 / (base - 1) as f64,
            None if rule.len().is_some_and(|l| l <= factors) => 0.0,
            None => 0.0,
        };
        let mut tails = vec![0.0; factors + 1];
        tails[factors] = beyond;
        for j in (0..factors).rev() {
            tails[j] = tails[j + 1] + steps[j];
        }
        Ok(Self { base, rule, j_max, steps, tails })
    }

    /// The Dirichlet-type measure with `n_j = 2^j` in base 2.
    pub fn dirichlet() -> Self {
        Self::new(2, ExponentRule::Power { base: 2 }, DEFAULT_J_MAX).expect("valid parameters")
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn rule(&self) -> &ExponentRule {
        &self.rule
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// Number of factors that can be evaluated.
    pub fn factors(&self) -> usize {
        self.steps.len()
    }

    /// Upper bound on `Σ_{i>j} b^{-n_i}`.
    pub fn tail_sum(&self, j: usize) -> f64 {
        self.tails[j.min(self.factors())]
    }

    /// Bound for the part of the tail that lies beyond the computable factors.
    pub fn uncomputed_tail(&self) -> f64 {
        self.tails[self.factors()]
    }

    pub fn step(&self, j: usize) -> f64 {
        self.steps[j - 1]
    }

    fn factor_phase(&self, xi: f64, j: usize) -> f64 {
        match (as_exact_integer(xi), self.rule.exponent(j)) {
            (Some(n), Some(e)) => frac_of_ratio(n as i128, self.base, e),
            _ => xi * self.steps[j - 1],
        }
    }

    fn fourier(&self, xi: f64, tol: f64) -> Result<FourierValue> {
        // |1 − ½(1 + e^{2πiε})| = |sin πε| ≤ π|ε|, and every factor has modulus ≤ 1.
        let scale = std::f64::consts::PI * xi.abs();
        let depth = (0..=self.factors()).find(|&j| scale * self.tail_sum(j) <= tol);
        let Some(depth) = depth else {
            return Err(LabError::PrecisionUnreachable {
                best_bound: scale * self.tail_sum(self.factors()),
                requested: tol,
            });
        };
        let mut prod = Complex64::new(1.0, 0.0);
        for j in 1..=depth {
            prod *= (Complex64::new(1.0, 0.0) + cis_turns(self.factor_phase(xi, j))) * 0.5;
        }
        Ok(FourierValue::new(prod, scale * self.tail_sum(depth)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    parts: Vec<(CircleMeasure, f64)>,
}

impl Mixture {
    pub fn new(parts: Vec<(CircleMeasure, f64)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(LabError::InvalidMeasure("empty mixture".into()));
        }
        if parts.iter().any(|(_, w)| !(*w > 0.0) || !w.is_finite()) {
            return Err(LabError::InvalidMeasure("mixture weights must be positive".into()));
        }
        check_unit_mass(parts.iter().map(|(_, w)| *w), "mixture weights")?;
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[(CircleMeasure, f64)] {
        &self.parts
    }
}

/// A probability measure on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureSpec", into = "MeasureSpec")]
pub enum CircleMeasure {
    Atomic(AtomicMeasure),
    Lebesgue,
    TrigDensity(TrigDensity),
    SelfSimilar(SelfSimilar),
    InfiniteConvolution(InfiniteConvolution),
    Mixture(Mixture),
}

impl CircleMeasure {
    /// Middle-thirds Cantor measure (`b = 3`, `D = {0, 2}`, uniform weights).
    pub fn cantor() -> Self {
        CircleMeasure::SelfSimilar(SelfSimilar::uniform(3, vec![0, 2]).expect("valid parameters"))
    }

    pub fn dirichlet() -> Self {
        CircleMeasure::InfiniteConvolution(InfiniteConvolution::dirichlet())
    }

    pub fn point_mass(angle: Angle) -> Self {
        CircleMeasure::Atomic(AtomicMeasure { atoms: vec![Atom { angle, weight: 1.0 }] })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CircleMeasure::Atomic(_) => "atomic",
            CircleMeasure::Lebesgue => "lebesgue",
            CircleMeasure::TrigDensity(_) => "trig_density",
            CircleMeasure::SelfSimilar(_) => "self_similar",
            CircleMeasure::InfiniteConvolution(_) => "infinite_convolution",
            CircleMeasure::Mixture(_) => "mixture",
        }
    }

    /// True when the measure is absolutely continuous with respect to Lebesgue
    /// measure, so its Fourier coefficients vanish at infinity.
    pub fn is_absolutely_continuous(&self) -> bool {
        match self {
            CircleMeasure::Lebesgue | CircleMeasure::TrigDensity(_) => true,
            CircleMeasure::Mixture(m) => m.parts.iter().all(|(p, _)| p.is_absolutely_continuous()),
            _ => false,
        }
    }

    /// Certified `μ̂(ξ)` with `error_bound ≤ tol`.
    pub fn fourier(&self, xi: f64, tol: f64) -> Result<FourierValue> {
        check_tol(tol)?;
        if !xi.is_finite() {
            return Err(LabError::InvalidMeasure(format!("non-finite frequency {xi}")));
        }
        // Evaluating negative frequencies as conjugates keeps μ̂ exactly Hermitian.
        if xi < 0.0 {
            return Ok(self.fourier_nonneg(-xi, tol)?.conj());
        }
        self.fourier_nonneg(xi, tol)
    }

    pub fn fourier_at(&self, n: i64, tol: f64) -> Result<FourierValue> {
        self.fourier(n as f64, tol)
    }

    fn fourier_nonneg(&self, xi: f64, tol: f64) -> Result<FourierValue> {
        if xi == 0.0 {
            return Ok(FourierValue::exact(Complex64::new(1.0, 0.0)));
        }
        Ok(match self {
            CircleMeasure::Atomic(a) => {
                FourierValue::exact(a.atoms.iter().map(|at| at.angle.phase(xi) * at.weight).sum())
            }
            CircleMeasure::Lebesgue => FourierValue::exact(unit_interval_transform(xi)),
            CircleMeasure::TrigDensity(d) => match as_exact_integer(xi) {
                Some(n) => FourierValue::exact(d.coefficient(-n)),
                None => {
                    let k_max = d.coeffs.len() as i64 - 1;
                    let v = (-k_max..=k_max)
                        .map(|k| d.coefficient(k) * unit_interval_transform(xi + k as f64))
                        .sum();
                    FourierValue::exact(v)
                }
            },
            CircleMeasure::SelfSimilar(s) => s.fourier(xi, tol),
            CircleMeasure::InfiniteConvolution(c) => c.fourier(xi, tol)?,
            CircleMeasure::Mixture(m) => {
                let mut acc = FourierValue::exact(Complex64::new(0.0, 0.0));
                for (part, w) in &m.parts {
                    acc = acc + part.fourier_nonneg(xi, tol)?.scale(Complex64::new(*w, 0.0));
                }
                acc
            }
        })
    }

    /// Mixture components flattened to `(weight, simple measure)` pairs.
    pub fn simple_parts(&self) -> Vec<(f64, &CircleMeasure)> {
        let mut out = Vec::new();
        self.collect_parts(1.0, &mut out);
        out
    }

    fn collect_parts<'a>(&'a self, w: f64, out: &mut Vec<(f64, &'a CircleMeasure)>) {
        match self {
            CircleMeasure::Mixture(m) => {
                for (p, pw) in &m.parts {
                    p.collect_parts(w * pw, out);
                }
            }
            other => out.push((w, other)),
        }
    }

    /// Total mass carried by atoms at exactly `angle` (exact for atomic parts and
    /// finite convolutions; continuous parts contribute zero).
    pub fn atom_mass_at(&self, angle: f64) -> f64 {
        self.simple_parts()
            .into_iter()
            .map(|(w, p)| match p {
                CircleMeasure::Atomic(a) => {
                    w * a.atoms.iter().filter(|at| at.angle.turns() == angle).map(|at| at.weight).sum::<f64>()
                }
                CircleMeasure::InfiniteConvolution(c) if c.uncomputed_tail() == 0.0 => {
                    w * refine::finite_convolution_atom(c, angle)
                }
                _ => 0.0,
            })
            .sum()
    }
}

/// `∫_0^1 e^{2πiξθ} dθ`.
fn unit_interval_transform(xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if as_exact_integer(xi).is_some() {
        return Complex64::new(0.0, 0.0);
    }
    (cis_turns(xi) - 1.0) / Complex64::new(0.0, TAU * xi)
}

fn check_unit_mass(weights: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let total: f64 = weights.sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(LabError::InvalidMeasure(format!("{what} sum to {total}, expected 1")));
    }
    Ok(())
}

/// Certified Fourier–Stieltjes transform `μ̂(ξ)`.
pub fn fourier_stieltjes(measure: &CircleMeasure, xi: f64, tol: f64) -> Result<FourierValue> {
    measure.fourier(xi, tol)
}

/// Tolerance used for each coefficient inside [`wiener_atom_index`].
pub const WIENER_TOL: f64 = 1e-12;

/// `W_N = (1/N) Σ_{n=1}^{N} |μ̂(n)|²`, which tends to the sum of squared atom
/// masses as `N → ∞`.
pub fn wiener_atom_index(measure: &CircleMeasure, n: usize) -> Result<f64> {
    wiener_atom_index_with(measure, n, Execution::default())
}

pub fn wiener_atom_index_with(measure: &CircleMeasure, n: usize, exec: Execution) -> Result<f64> {
    if n == 0 {
        return Err(LabError::InvalidSequence("Wiener index needs N ≥ 1".into()));
    }
    let terms = exec.map_range(n, |k| measure.fourier_at(k as i64 + 1, WIENER_TOL).map(|v| v.value.norm_sqr()));
    let mut sum = 0.0;
    for t in terms {
        sum += t?;
    }
    Ok(sum / n as f64)
}

/// Quadrature rule at the given refinement depth.
pub fn quadrature(measure: &CircleMeasure, depth: u32) -> Result<Quadrature> {
    refine::quadrature(measure, depth, refine::DEFAULT_NODE_BUDGET)
}
