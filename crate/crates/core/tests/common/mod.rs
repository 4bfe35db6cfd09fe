#![allow(dead_code)]

use std::collections::BTreeMap;

use limitlab::model::{OperatorModel, VectorRep};
use limitlab::{CircleMeasure, Complex64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b))
}

pub fn cyclic_vector(spread: i64) -> impl Strategy<Value = VectorRep> {
    prop::collection::btree_map(-spread..=spread, complex(), 1..5).prop_map(VectorRep::Cyclic)
}

pub fn shift_vector(spread: u64) -> impl Strategy<Value = VectorRep> {
    prop::collection::btree_map(0..spread, complex(), 1..5).prop_map(VectorRep::Shift)
}

pub fn finite_vector(d: usize) -> impl Strategy<Value = VectorRep> {
    prop::collection::vec(complex(), d).prop_map(VectorRep::coordinates)
}

pub fn named_measure() -> impl Strategy<Value = CircleMeasure> {
    prop_oneof![
        Just(CircleMeasure::cantor()),
        Just(CircleMeasure::dirichlet()),
        Just(CircleMeasure::Lebesgue),
        (0i64..12).prop_map(|p| CircleMeasure::point_mass(limitlab::Angle::rational(p, 12).unwrap())),
    ]
}

/// Gaussian-entry matrix rescaled to operator norm `scale`.
pub fn random_contraction(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(d, d, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let s = m.clone().svd(false, false).singular_values[0];
    m * c(scale / s, 0.0)
}

/// Haar-like unitary from the QR factor of a random matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(d, d, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    m.qr().q()
}

pub fn contraction(d: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    (any::<u64>(), 0.05f64..1.0).prop_map(move |(seed, s)| random_contraction(&mut ChaCha8Rng::seed_from_u64(seed), d, s))
}

/// A model together with two conforming vectors.
pub fn model_with_vectors() -> impl Strategy<Value = (OperatorModel, VectorRep, VectorRep)> {
    prop_oneof![
        (named_measure(), cyclic_vector(6), cyclic_vector(6))
            .prop_map(|(m, x, y)| (OperatorModel::CyclicUnitary(m), x, y)),
        (shift_vector(8), shift_vector(8)).prop_map(|(x, y)| (OperatorModel::shift(16).unwrap(), x, y)),
        (contraction(3), finite_vector(3), finite_vector(3))
            .prop_map(|(t, x, y)| (OperatorModel::finite(t).unwrap(), x, y)),
        (named_measure(), cyclic_vector(4), shift_vector(6), cyclic_vector(4), shift_vector(6)).prop_map(
            |(m, a, b, p, q)| {
                let model = OperatorModel::direct_sum(vec![OperatorModel::CyclicUnitary(m), OperatorModel::shift(16).unwrap()])
                    .unwrap();
                (model, VectorRep::Sum(vec![a, b]), VectorRep::Sum(vec![p, q]))
            }
        ),
    ]
}

pub fn sparse<K: Ord>(entries: impl IntoIterator<Item = (K, Complex64)>) -> BTreeMap<K, Complex64> {
    entries.into_iter().collect()
}
