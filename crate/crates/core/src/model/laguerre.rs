//! Right translation on `L²(0, ∞)` in the Laguerre basis.
//!
//! `ℓ_k(s) = √2 e^{-s} L_k(2s)` is an orthonormal basis of `L²(0, ∞)`, and in it
//! the cogenerator of the right-translation semigroup is the unilateral shift.
//! Matrix elements of `W_t` reduce, after `v = 2u`, to
//! `⟨W_t ℓ_k, ℓ_j⟩ = e^{-t} ∫_0^∞ e^{-v} L_k(v) L_j(v + 2t) dv`,
//! which Gauss–Laguerre quadrature integrates exactly once the rule has at
//! least `(k + j + 1) / 2` nodes.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_tol, LabError, Result};

pub const INITIAL_NODES: usize = 8;
pub const NODE_BUDGET: usize = 512;

/// Laguerre polynomials `L_0(x), …, L_n(x)`.
pub fn laguerre_values(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(1.0 - x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// `ℓ_k(s)`.
pub fn laguerre_function(k: usize, s: f64) -> f64 {
    std::f64::consts::SQRT_2 * (-s).exp() * laguerre_values(k, 2.0 * s)[k]
}

/// Result of applying `W_t` and reading off the first `N` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub t: f64,
    #[serde(with = "crate::numeric::complex_vec")]
    pub coefficients: Vec<Complex64>,
    /// `‖W_t x‖² − Σ_{j<N} |coefficient_j|²`: mass that moved past the window.
    pub tail_mass: f64,
    /// Difference between the last two quadrature refinements.
    pub error_bound: f64,
    pub nodes: usize,
}

/// `(⟨W_t ℓ_k, ℓ_j⟩)_{k,j<n}` using an `m`-node rule.
fn translation_matrix(t: f64, n: usize, m: usize) -> Vec<Vec<f64>> {
    let alpha = FiniteAboveNegOneF64::new(0.0).expect("0 is above -1");
    let rule = GaussLaguerre::new(NonZeroUsize::new(m).expect("positive node count"), alpha);
    let decay = (-t).exp();
    let mut out = vec![vec![0.0; n]; n];
    for (v, w) in rule.iter() {
        let a = laguerre_values(n - 1, *v);
        let b = laguerre_values(n - 1, *v + 2.0 * t);
        for (k, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += w * a[k] * b[j];
            }
        }
    }
    for row in &mut out {
        for cell in row.iter_mut() {
            *cell *= decay;
        }
    }
    out
}

/// Coordinates `⟨W_t x, ℓ_j⟩` for `j < truncation`.
pub fn translate(t: f64, x: &BTreeMap<u64, Complex64>, truncation: usize, tol: f64) -> Result<TranslationReport> {
    check_tol(tol)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(LabError::InvalidSequence(format!("translation time must be finite and ≥ 0, got {t}")));
    }
    if let Some((&k, _)) = x.iter().next_back().filter(|(&k, _)| k as usize >= truncation) {
        return Err(LabError::ShapeMismatch(format!("basis index {k} outside truncation window {truncation}")));
    }
    let norm_sq: f64 = x.values().map(|c| c.norm_sqr()).sum();
    if t == 0.0 {
        let coefficients: Vec<Complex64> =
            (0..truncation as u64).map(|j| x.get(&j).copied().unwrap_or_default()).collect();
        return Ok(TranslationReport { t, coefficients, tail_mass: 0.0, error_bound: 0.0, nodes: 0 });
    }
    let apply = |m: usize| -> Vec<Complex64> {
        let mat = translation_matrix(t, truncation, m);
        (0..truncation)
            .map(|j| x.iter().map(|(&k, c)| c * mat[k as usize][j]).sum())
            .collect()
    };
    let mut nodes = INITIAL_NODES;
    let mut prev = apply(nodes);
    loop {
        let next_nodes = nodes * 2;
        if next_nodes > NODE_BUDGET {
            return Err(LabError::PrecisionUnreachable { best_bound: f64::INFINITY, requested: tol });
        }
        let next = apply(next_nodes);
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        nodes = next_nodes;
        if diff < tol / 2.0 {
            let window: f64 = next.iter().map(|c| c.norm_sqr()).sum();
            return Ok(TranslationReport {
                t,
                coefficients: next,
                tail_mass: norm_sq - window,
                error_bound: diff,
                nodes,
            });
        }
        prev = next;
    }
}
