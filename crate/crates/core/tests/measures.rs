use limitlab::measure::{Atom, AtomicMeasure, ExponentRule, InfiniteConvolution, Mixture, SelfSimilar, TrigDensity};
use limitlab::numeric::cis_turns;
use limitlab::{quadrature, wiener_atom_index, Angle, CircleMeasure, Complex64};
use proptest::prelude::*;

/// Cantor coefficients `μ̂(ℓ)`, `ℓ = −4..=4`, from a 40-digit product evaluation.
const CANTOR: [f64; 9] = [
    0.26556944728182265919,
    0.37143735670876563505,
    -0.07654171272866836084,
    0.37143735670876563505,
    1.0,
    0.37143735670876563505,
    -0.07654171272866836084,
    0.37143735670876563505,
    0.26556944728182265919,
];

/// `1 − Re μ̂(2^{n_k})` for the dyadic Dirichlet measure, `n_k = 2^k`.
const DIRICHLET_DEFECT: [f64; 5] = [
    0.52580846398938179419,
    0.038207559077342491753,
    0.00015059294964859026542,
    0.0000000022979463440895463594,
    5.3503232666167892390e-19,
];

/// Direct product `Π_{j ≤ J} m(ξ / b^j)` with no reductions.
fn product_oracle(base: u64, digits: &[(u64, f64)], xi: f64, depth: u32) -> Complex64 {
    (1..=depth)
        .map(|j| {
            let t = xi / (base as f64).powi(j as i32);
            digits.iter().map(|&(d, p)| Complex64::from_polar(p, std::f64::consts::TAU * t * d as f64)).sum::<Complex64>()
        })
        .product()
}

#[test]
fn cantor_coefficients_match_frozen_values() {
    let mu = CircleMeasure::cantor();
    for (i, want) in CANTOR.iter().enumerate() {
        let v = mu.fourier_at(i as i64 - 4, 1e-14).unwrap();
        assert!(v.error_bound <= 1e-14);
        assert!((v.value.re - want).abs() <= 1e-13, "ℓ = {}: {} vs {want}", i as i64 - 4, v.value);
        assert!(v.value.im.abs() <= 1e-13);
    }
}

#[test]
fn cantor_matches_truncated_product() {
    let mu = CircleMeasure::cantor();
    for xi in [0.3, 1.7, 5.0, 12.25, 40.0] {
        let want = product_oracle(3, &[(0, 0.5), (2, 0.5)], xi, 60);
        let got = mu.fourier(xi, 1e-13).unwrap();
        assert!((got.value - want).norm() <= 1e-12, "ξ = {xi}");
    }
}

#[test]
fn dirichlet_defects_match_frozen_values() {
    let mu = CircleMeasure::dirichlet();
    for (k, want) in DIRICHLET_DEFECT.iter().enumerate() {
        let n = 1i64 << (1u32 << (k + 1));
        let v = mu.fourier_at(n, 1e-15).unwrap();
        assert!((1.0 - v.value.re - want).abs() <= 1e-14 + v.error_bound, "k = {}", k + 1);
    }
}

#[test]
fn explicit_rule_agrees_with_power_rule() {
    let a = CircleMeasure::dirichlet();
    let b = CircleMeasure::InfiniteConvolution(
        InfiniteConvolution::new(2, ExponentRule::Explicit((1..=6).map(|j| 1 << j).collect()), 6).unwrap(),
    );
    for n in [1, 3, 4, 17, 255, 256] {
        let (x, y) = (a.fourier_at(n, 1e-14).unwrap(), b.fourier_at(n, 1e-14).unwrap());
        // The explicit measure stops after six factors; its tail beyond 2^64 is negligible at these n.
        assert!((x.value - y.value).norm() <= 1e-12, "n = {n}");
    }
}

#[test]
fn wiener_index_frozen_cantor_values() {
    let want = [(512, 0.007070213778549883), (1024, 0.00458748785802412), (2048, 0.002788629480932903), (4096, 0.0021196576095811118)];
    for (n, w) in want {
        let got = wiener_atom_index(&CircleMeasure::cantor(), n).unwrap();
        assert!((got - w).abs() < 1e-9, "N = {n}: {got}");
    }
}

#[test]
fn quadrature_integrates_trig_density_exactly_in_the_limit() {
    let mu = CircleMeasure::TrigDensity(TrigDensity::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.25, -0.1)]).unwrap());
    let q = quadrature(&mu, 12).unwrap();
    let got = q.integrate(|t| cis_turns(t));
    let want = mu.fourier_at(1, 1e-15).unwrap().value;
    assert!((got - want).norm() <= std::f64::consts::TAU * q.lipschitz_scale);
}

fn self_similar() -> impl Strategy<Value = SelfSimilar> {
    (2u64..6)
        .prop_flat_map(|b| (Just(b), prop::collection::btree_set(0..b, 2..=b as usize)))
        .prop_flat_map(|(b, digits)| {
            let n = digits.len();
            (Just(b), Just(digits.into_iter().collect::<Vec<_>>()), prop::collection::vec(0.1f64..1.0, n))
        })
        .prop_map(|(b, digits, w)| {
            let s: f64 = w.iter().sum();
            let mut weights: Vec<f64> = w.iter().map(|x| x / s).collect();
            let rest: f64 = weights[1..].iter().sum();
            weights[0] = 1.0 - rest;
            SelfSimilar::new(b, digits, weights).unwrap()
        })
}

fn atomic() -> impl Strategy<Value = CircleMeasure> {
    prop::collection::vec((0.0f64..1.0, 0.1f64..1.0), 1..4).prop_map(|atoms| {
        let s: f64 = atoms.iter().map(|a| a.1).sum();
        let mut atoms: Vec<Atom> =
            atoms.iter().map(|&(t, w)| Atom { angle: Angle::from_f64(t).unwrap(), weight: w / s }).collect();
        let rest: f64 = atoms[1..].iter().map(|a| a.weight).sum();
        atoms[0].weight = 1.0 - rest;
        CircleMeasure::Atomic(AtomicMeasure::new(atoms).unwrap())
    })
}

fn any_measure() -> impl Strategy<Value = CircleMeasure> {
    prop_oneof![
        Just(CircleMeasure::Lebesgue),
        Just(CircleMeasure::dirichlet()),
        Just(CircleMeasure::InfiniteConvolution(InfiniteConvolution::new(3, ExponentRule::Power { base: 2 }, 8).unwrap())),
        self_similar().prop_map(CircleMeasure::SelfSimilar),
        atomic(),
        (-0.45f64..0.45, -0.45f64..0.45).prop_map(|(a, b)| CircleMeasure::TrigDensity(
            TrigDensity::new(vec![Complex64::new(1.0, 0.0), Complex64::new(a, b) * 0.7]).unwrap()
        )),
        (self_similar(), atomic(), 0.1f64..0.9).prop_map(|(s, a, w)| CircleMeasure::Mixture(
            Mixture::new(vec![(CircleMeasure::SelfSimilar(s), w), (a, 1.0 - w)]).unwrap()
        )),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn self_similarity_identity(s in self_similar(), n in -100i64..=100) {
        let tol = 1e-12;
        let mu = CircleMeasure::SelfSimilar(s.clone());
        let b = s.base() as f64;
        let lhs = mu.fourier_at(n, tol).unwrap().value;
        let rhs = s.mask(n as f64 / b) * mu.fourier(n as f64 / b, tol).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 2.0 * tol, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn hermitian_symmetry(mu in any_measure(), xi in 0.0f64..500.0) {
        let tol = 1e-10;
        let p = mu.fourier(xi, tol).unwrap().value;
        let m = mu.fourier(-xi, tol).unwrap().value;
        prop_assert!((m - p.conj()).norm() <= 2.0 * tol);
    }

    #[test]
    fn fourier_coefficients_are_positive_definite(
        mu in any_measure(),
        c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..7),
    ) {
        let tol = 1e-10;
        let c: Vec<Complex64> = c.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        let mut q = 0.0;
        for (j, cj) in c.iter().enumerate() {
            for (k, ck) in c.iter().enumerate() {
                q += (cj * ck.conj() * mu.fourier_at(j as i64 - k as i64, tol).unwrap().value).re;
            }
        }
        let l1: f64 = c.iter().map(|z| z.norm()).sum();
        prop_assert!(q >= -l1 * l1 * tol, "quadratic form {q}");
    }

    #[test]
    fn certified_bounds_cover_the_product_oracle(s in self_similar(), xi in 0.0f64..50.0) {
        let digits: Vec<(u64, f64)> = s.digits().collect();
        let want = product_oracle(s.base(), &digits, xi, 80);
        let got = CircleMeasure::SelfSimilar(s).fourier(xi, 1e-11).unwrap();
        prop_assert!((got.value - want).norm() <= got.error_bound + 1e-12);
    }

    #[test]
    fn quadrature_converges_within_lipschitz_bound(mu in any_measure(), n in -6i64..=6, depth in 4u32..10) {
        let q = quadrature(&mu, depth).unwrap();
        let got = q.integrate(|t| cis_turns(n as f64 * t));
        let want = mu.fourier_at(n, 1e-12).unwrap().value;
        let lip = std::f64::consts::TAU * n.unsigned_abs() as f64;
        prop_assert!((got - want).norm() <= lip * q.lipschitz_scale + 1e-9, "depth {depth}: {got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wiener_index_of_lebesgue_plus_atoms(
        slots in prop::collection::btree_set(0u32..10, 1..4),
        jitter in 0.0f64..0.05,
        lebesgue in 0.0f64..0.6,
        raw in prop::collection::vec(0.2f64..1.0, 3),
    ) {
        let slots: Vec<u32> = slots.into_iter().collect();
        let total: f64 = raw[..slots.len()].iter().sum();
        let masses: Vec<f64> = raw[..slots.len()].iter().map(|w| w / total * (1.0 - lebesgue)).collect();
        let atoms: Vec<Atom> = slots
            .iter()
            .zip(&masses)
            .map(|(&s, &w)| Atom { angle: Angle::from_f64(s as f64 / 10.0 + jitter).unwrap(), weight: w / (1.0 - lebesgue) })
            .collect();
        let atomic = CircleMeasure::Atomic(AtomicMeasure::new(atoms).unwrap());
        let mu = if lebesgue > 0.0 {
            CircleMeasure::Mixture(Mixture::new(vec![(CircleMeasure::Lebesgue, lebesgue), (atomic, 1.0 - lebesgue)]).unwrap())
        } else {
            atomic
        };
        let want: f64 = masses.iter().map(|w| w * w).sum();
        let got = wiener_atom_index(&mu, 4096).unwrap();
        prop_assert!((got - want).abs() <= 0.02, "{got} vs {want}");
    }
}
