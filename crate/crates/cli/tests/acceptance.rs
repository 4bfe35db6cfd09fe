//! Acceptance suite. Prints one line per criterion with its measured runtime
//! and exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::fmt::{Debug, Display};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Result};
use limitlab::algebra::{
    apply_calculus, entanglement_check, membership_witness, projection_P_m, split, CalculusElement, EntanglementPolicy,
    Verdict,
};
use limitlab::cayley::{cayley_point, lambda_of_turn, pushforward_to_line, resolvent_two_ways, turn_of};
use limitlab::dynamics::{
    limit_cycle_check, limit_operator_estimate, recurrence_certificate, trajectory, weakly_wandering_search, Certificate,
    ClassifyPolicy, RecurrencePolicy, SequenceSpec, Tier, WanderOutcome,
};
use limitlab::measure::{wiener_atom_index_with, Atom, AtomicMeasure, ExponentRule, InfiniteConvolution, Mixture, SelfSimilar};
use limitlab::model::{apply_adjoint_power, apply_power, inner_product, norm_sq};
use limitlab::numeric::cis_turns;
use limitlab::oracle::{classify_finite, decay_at, sample_limit_operators, unitary_part};
use limitlab::{Angle, CircleMeasure, Complex64, Execution, OperatorModel, VectorRep};
use limitlab_cli::commands::{cmd_example56, cmd_fourier};
use limitlab_cli::{lint, report, ExperimentConfig, Format, Outcome};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXEC: Execution = Execution::Parallel;

/// Deep-truncation evaluation of the Cantor coefficient `μ̂(1)`.
const CANTOR_HAT_1: f64 = 0.371_437_356_708_765_635_05;

/// `ε_k = 2π·2^{n_k}·Σ_{j>k} 2^{-n_j}` for `n_j = 2^j`, `k = 1..=5`, 40 digits.
const DIRICHLET_EPSILON: [f64; 5] =
    [1.6693545982682214, 0.39423308589329903, 0.024544067113198637, 9.587379926517493e-05, 1.4629180792671596e-09];

const PROPERTY_CASES: u32 = 256;

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn le(&mut self, what: impl Display, value: f64, bound: f64) {
        if !(value <= bound) {
            self.failures.push(format!("{what}: {value:.3e} exceeds {bound:.1e}"));
        }
    }

    fn ensure(&mut self, what: impl Display, ok: bool) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Runs `test` on `PROPERTY_CASES` random inputs.
    fn property<S>(&mut self, name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>)
    where
        S: Strategy,
        S::Value: Debug,
    {
        let mut runner = TestRunner::new(Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() });
        match runner.run(&strategy, test) {
            Ok(()) => self.notes.push(name.to_string()),
            Err(TestError::Fail(reason, value)) => self.failures.push(format!("{name}: {reason} for {value:?}")),
            Err(TestError::Abort(reason)) => self.failures.push(format!("{name}: aborted, {reason}")),
        }
    }
}

fn criterion(id: u32, title: &str, limit: Option<f64>, body: impl FnOnce(&mut Check) -> Result<()>) -> bool {
    let start = Instant::now();
    let mut c = Check { failures: Vec::new(), notes: Vec::new() };
    if let Err(e) = body(&mut c) {
        c.failures.push(format!("error: {e:#}"));
    }
    let secs = start.elapsed().as_secs_f64();
    if let Some(l) = limit {
        c.le("runtime (s)", secs, l);
    }
    let limit = limit.map(|l| format!(" < {l} s")).unwrap_or_default();
    let pass = c.failures.is_empty();
    println!("criterion {id}: {} {title} [{secs:.3} s{limit}]", if pass { "PASS" } else { "FAIL" });
    for n in &c.notes {
        println!("    {n}");
    }
    for f in &c.failures {
        println!("    FAILED {f}");
    }
    pass
}

fn cyclic(mu: CircleMeasure) -> OperatorModel {
    OperatorModel::CyclicUnitary(mu)
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn config(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::new(&fixture(name), &std::env::temp_dir(), None, None, None, Format::Json)
}

fn self_similarity(c: &mut Check) -> Result<()> {
    let mu = CircleMeasure::cantor();
    let m1 = mu.fourier(1.0, 1e-12)?.value;
    c.le("|μ̂(1) − oracle|", (m1 - c_real(CANTOR_HAT_1)).norm(), 1e-10);
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let v = mu.fourier(3f64.powi(k), 1e-12)?.value;
        let d = (v - m1).norm();
        c.le(format!("|μ̂(3^{k}) − μ̂(1)|"), d, 2e-12);
        worst = worst.max(d);
    }
    c.note(format!("μ̂(1) = {:.15}, max_k |μ̂(3^k) − μ̂(1)| = {worst:.2e}", m1.re));
    Ok(())
}

fn c_real(x: f64) -> Complex64 {
    cx(x, 0.0)
}

fn dirichlet_recurrence(c: &mut Check) -> Result<()> {
    let m = cyclic(CircleMeasure::dirichlet());
    let cert = recurrence_certificate(&m, &RecurrencePolicy::default(), EXEC)?;
    let Certificate::PoissonRecurrence { tier, indices, epsilons, .. } = cert else {
        return Err(anyhow!("no recurrence certificate: {cert:?}"));
    };
    c.ensure("certificate tier is certified", tier == Tier::Certified);
    let exponents: Vec<u32> = (1..=5).map(|j| 1u32 << j).collect();
    c.ensure("indices are 2^{n_k}", indices == exponents.iter().map(|&n| 1u64 << n).collect::<Vec<_>>());
    let e0 = VectorRep::character(0);
    for (k, &n) in exponents.iter().enumerate() {
        let want = DIRICHLET_EPSILON[k];
        c.le(format!("ε_{} against oracle (relative)", k + 1), (epsilons[k] - want).abs() / want, 1e-12);
        let hat = CircleMeasure::dirichlet().fourier((n as f64).exp2(), 1e-15)?;
        let defect = 1.0 - hat.value.re;
        c.le(format!("1 − Re μ̂(2^{n})"), defect, want + hat.error_bound);
        let diff = apply_power(&m, 1i64 << n, &e0)?.sub(&e0)?;
        let strong = norm_sq(&m, &diff, 1e-15)?;
        c.le(format!("‖U^(2^{n}) e0 − e0‖² vs 2 − 2Re μ̂"), (strong.value.re - 2.0 * defect).abs(), 1e-12);
        c.le(format!("‖U^(2^{n}) e0 − e0‖²"), strong.value.re, 2.0 * want + strong.error_bound);
    }
    c.note(format!("ε_5 = {:.3e}", epsilons[4]));
    Ok(())
}

fn scalar_limit(c: &mut Check) -> Result<()> {
    let mu = CircleMeasure::cantor();
    let m = cyclic(mu.clone());
    let frame: Vec<VectorRep> = (-2..=2).map(VectorRep::character).collect();
    let seq = SequenceSpec::Powers { base: 3, len: 16 };
    let est = limit_operator_estimate(&m, &seq, &frame, 1e-13, EXEC)?;
    let m1 = mu.fourier_at(1, 1e-15)?.value;
    let mut worst = (0.0f64, 0i64, 0i64);
    for (i, row) in est.matrix_elements.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let (r, s) = (i as i64 - 2, j as i64 - 2);
            let want = mu.fourier_at(r - s, 1e-15)?.value * m1;
            let d = (z - want).norm();
            if d > worst.0 {
                worst = (d, r, s);
            }
            c.le(format!("element (r, s) = ({r}, {s})"), d, 1e-8);
        }
    }
    c.note(format!("max element deviation {:.3e} at (r, s) = ({}, {})", worst.0, worst.1, worst.2));
    let e0 = VectorRep::character(0);
    let cycle = limit_cycle_check(&m, &est, &e0, &e0, &[1, 2, 3], 1e-13, EXEC)?;
    c.ensure("limit cycle check passes its own bounds", cycle.pass);
    for s in &cycle.shifts {
        c.le(format!("limit cycle bound at m = {}", s.shift), s.bound, 1e-6);
        c.le(format!("limit cycle difference at m = {}", s.shift), s.difference, 1e-6);
    }
    c.note(format!("limit cycle m ∈ {{1,2,3}}: max bound {:.3e}", cycle.max_bound));
    Ok(())
}

fn resolvent(c: &mut Check) -> Result<()> {
    let e0 = VectorRep::character(0);
    for (angle, want) in [((0, 1), cx(1.0, 0.0)), ((1, 4), cx(0.5, 0.5))] {
        let m = cyclic(CircleMeasure::point_mass(Angle::rational(angle.0, angle.1)?));
        let r = resolvent_two_ways(&m, &e0, &e0, 1e-6, EXEC)?;
        let name = format!("atom {}/{}", angle.0, angle.1);
        c.le(format!("{name}: spectral vs closed form"), (r.spectral.value - want).norm(), 1e-5);
        c.le(format!("{name}: Laplace vs closed form"), (r.laplace.value - want).norm(), 1e-5);
        c.le(format!("{name}: discrepancy"), r.discrepancy, 1e-5);
    }
    let mu = CircleMeasure::cantor();
    let r = resolvent_two_ways(&cyclic(mu.clone()), &e0, &e0, 1e-6, EXEC)?;
    let want = (cx(1.0, 0.0) + mu.fourier_at(1, 1e-15)?.value) * 0.5;
    c.le("Cantor: discrepancy", r.discrepancy, 1e-5);
    c.le("Cantor: spectral vs (1 + μ̂(1))/2", (r.spectral.value - want).norm(), 1e-5);
    c.note(format!("Cantor discrepancy {:.3e}, Simpson intervals {}", r.discrepancy, r.simpson_intervals));
    Ok(())
}

fn example56(c: &mut Check) -> Result<()> {
    let run = cmd_example56(&config("example56")?)?;
    let r = &run.report;
    let e = &r["entanglement"];
    c.ensure(format!("verdict {} is entangled", e["verdict"]), e["verdict"] == "entangled");
    for (key, want) in [("h_m_discrete", 0), ("h_m_continuous", 0), ("h_w_discrete", 1), ("h_w_continuous", 1)] {
        c.ensure(format!("{key} = [{want}], got {}", e[key]), e[key] == serde_json::json!([want]));
    }
    let comps = e["components"].as_array().ok_or_else(|| anyhow!("no components"))?;
    for comp in comps {
        let tier = &comp["discrete"]["certificate"]["tier"];
        c.ensure(format!("component {} discrete tier {tier}", comp["index"]), tier == "certified");
    }
    let cont = &comps[0]["continuous"]["certificate"]["tier"];
    c.ensure(format!("singular component continuous tier {cont} is empirical"), cont == "empirical");
    c.ensure(format!("outcome {:?}", run.outcome), run.outcome == Outcome::Pass);
    c.note(format!("fixture verdict entangled, {} certified assertions hold", r["assertions"].as_array().map_or(0, |a| a.len())));

    let mismatch = cmd_example56(&config("mismatch")?)?;
    let v = &mismatch.report["entanglement"]["verdict"];
    c.ensure(format!("mismatch verdict {v} is not entangled"), *v != "entangled");
    c.note(format!("mismatch verdict {v}"));
    Ok(())
}

fn wiener(c: &mut Check) -> Result<()> {
    let atom = CircleMeasure::point_mass(Angle::from_f64(2f64.sqrt() - 1.0)?);
    let a = wiener_atom_index_with(&atom, 1000, EXEC)?;
    c.le("atomic |index − 1|", (a - 1.0).abs(), 1e-9);
    let l = wiener_atom_index_with(&CircleMeasure::Lebesgue, 1000, EXEC)?;
    c.le("Lebesgue index", l.abs(), 0.0);
    let cantor = CircleMeasure::cantor();
    let series: Vec<f64> =
        [512, 1024, 2048, 4096].iter().map(|&n| wiener_atom_index_with(&cantor, n, EXEC)).collect::<limitlab::Result<_>>()?;
    c.ensure(format!("Cantor index decreasing over N = 512..4096: {series:?}"), series.windows(2).all(|w| w[1] < w[0]));
    c.le("Cantor index at N = 4096", series[3], 0.05);
    c.note(format!("Cantor index {:.4} → {:.4}", series[0], series[3]));
    Ok(())
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).qr().q()
}

fn random_contraction(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(d, d, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let s = m.clone().singular_values().max();
    m * cx(norm / s, 0.0)
}

/// `W (U ⊕ C) W*` and the planted unitary subspace.
fn planted(rng: &mut ChaCha8Rng, d: usize, r: usize, norm: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut block = DMatrix::<Complex64>::zeros(d, d);
    if r > 0 {
        block.view_mut((0, 0), (r, r)).copy_from(&random_unitary(rng, r));
    }
    if r < d {
        block.view_mut((r, r), (d - r, d - r)).copy_from(&random_contraction(rng, d - r, norm));
    }
    let w = random_unitary(rng, d);
    (&w * block * w.adjoint(), w.columns(0, r).into_owned())
}

fn finite_oracle(c: &mut Check) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut worst_decay, mut worst_angle) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let r = rng.gen_range(0..=8);
        let norm = rng.gen_range(0.2..0.95);
        let (t, want) = planted(&mut rng, 8, r, norm);
        let s = classify_finite(&t)?;
        let basis = &s.analysis.unitary_basis;
        c.ensure(format!("instance {i}: unitary dimension {} vs planted {r}", basis.ncols()), basis.ncols() == r);
        if basis.ncols() == r && r > 0 {
            let angle = ((DMatrix::<Complex64>::identity(8, 8) - basis * basis.adjoint()) * &want).singular_values().max();
            c.le(format!("instance {i}: principal angle"), angle, 1e-8);
            worst_angle = worst_angle.max(angle);
        }
        let mut power = DMatrix::<Complex64>::identity(8, 8);
        for _ in 0..500 {
            power = &power * &t;
        }
        let h_w = &s.h_w_basis;
        if h_w.ncols() > 0 {
            // Largest |⟨Tⁿx, y⟩| over unit x, y in H_w.
            let decay = (h_w.adjoint() * &power * h_w).singular_values().max();
            c.le(format!("instance {i}: H_w decay at n = 500"), decay, 1e-6);
            worst_decay = worst_decay.max(decay);
            c.le(format!("instance {i}: decay_at agrees"), (decay_at(&t, h_w, 500) - decay).abs().min(decay_at(&t, h_w, 500)), 1e-6);
        }
        if r > 0 {
            let kept = (basis.adjoint() * &power * basis).singular_values().min();
            c.le(format!("instance {i}: unitary part does not decay"), 1.0 - kept, 1e-8);
        }
    }
    c.note(format!("100 planted 8×8 contractions: max H_w decay {worst_decay:.2e}, max principal angle {worst_angle:.2e}"));
    Ok(())
}

fn named_measure() -> impl Strategy<Value = CircleMeasure> {
    prop_oneof![
        Just(CircleMeasure::cantor()),
        Just(CircleMeasure::dirichlet()),
        Just(CircleMeasure::Lebesgue),
        (0i64..12).prop_map(|p| CircleMeasure::point_mass(Angle::rational(p, 12).unwrap())),
    ]
}

fn atomic() -> impl Strategy<Value = CircleMeasure> {
    prop::collection::vec((0.0f64..0.45, 0.1f64..1.0), 1..4).prop_map(|atoms| {
        let s: f64 = atoms.iter().map(|a| a.1).sum();
        let mut atoms: Vec<Atom> =
            atoms.iter().map(|&(t, w)| Atom { angle: Angle::from_f64(t).unwrap(), weight: w / s }).collect();
        let rest: f64 = atoms[1..].iter().map(|a| a.weight).sum();
        atoms[0].weight = 1.0 - rest;
        CircleMeasure::Atomic(AtomicMeasure::new(atoms).unwrap())
    })
}

fn self_similar() -> impl Strategy<Value = SelfSimilar> {
    (2u64..6)
        .prop_flat_map(|b| (Just(b), prop::collection::btree_set(0..b, 2..=b as usize)))
        .prop_flat_map(|(b, d)| {
            let n = d.len();
            (Just(b), Just(d.into_iter().collect::<Vec<_>>()), prop::collection::vec(0.1f64..1.0, n))
        })
        .prop_map(|(b, digits, w)| {
            let s: f64 = w.iter().sum();
            let mut weights: Vec<f64> = w.iter().map(|x| x / s).collect();
            let rest: f64 = weights[1..].iter().sum();
            weights[0] = 1.0 - rest;
            SelfSimilar::new(b, digits, weights).unwrap()
        })
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| cx(a, b)), 1..n)
}

fn cyclic_vector(spread: i64) -> impl Strategy<Value = VectorRep> {
    prop::collection::btree_map(-spread..=spread, (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| cx(a, b)), 1..5)
        .prop_map(VectorRep::Cyclic)
}

fn shift_vector(spread: u64) -> impl Strategy<Value = VectorRep> {
    prop::collection::btree_map(0..spread, (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| cx(a, b)), 1..5)
        .prop_map(VectorRep::Shift)
}

fn finite_model(scale: f64) -> impl Strategy<Value = OperatorModel> {
    (any::<u64>(), 0.05f64..1.0).prop_map(move |(seed, s)| {
        OperatorModel::finite(random_contraction(&mut ChaCha8Rng::seed_from_u64(seed), 3, s * scale)).unwrap()
    })
}

fn model_with_vectors() -> impl Strategy<Value = (OperatorModel, VectorRep, VectorRep)> {
    let finite = prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| cx(a, b)), 3).prop_map(VectorRep::coordinates);
    prop_oneof![
        (named_measure(), cyclic_vector(6), cyclic_vector(6)).prop_map(|(m, x, y)| (cyclic(m), x, y)),
        (shift_vector(8), shift_vector(8)).prop_map(|(x, y)| (OperatorModel::shift(16).unwrap(), x, y)),
        (finite_model(1.0), finite.clone(), finite).prop_map(|(m, x, y)| (m, x, y)),
    ]
}

fn norm(m: &OperatorModel, x: &VectorRep) -> f64 {
    norm_sq(m, x, 1e-12).unwrap().value.re.max(0.0).sqrt()
}

fn tower_measure() -> impl Strategy<Value = CircleMeasure> {
    prop::collection::vec(1u64..6, 3..9).prop_map(|steps| {
        let exps: Vec<u64> = steps.iter().scan(0, |acc, s| {
            *acc += s;
            Some(*acc)
        }).collect();
        let n = exps.len();
        CircleMeasure::InfiniteConvolution(InfiniteConvolution::new(2, ExponentRule::Explicit(exps), n).unwrap())
    })
}

fn invariants(c: &mut Check) -> Result<()> {
    // Measures.
    c.property("self-similarity Fourier identity", (self_similar(), -100i64..=100), |(s, n)| {
        let tol = 1e-12;
        let mu = CircleMeasure::SelfSimilar(s.clone());
        let lhs = mu.fourier_at(n, tol).unwrap().value;
        let rhs = s.mask(n as f64 / s.base() as f64) * mu.fourier(n as f64 / s.base() as f64, tol).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 2.0 * tol);
        Ok(())
    });
    c.property("Hermitian symmetry", (named_measure(), 0.0f64..500.0), |(mu, xi)| {
        let p = mu.fourier(xi, 1e-10).unwrap().value;
        let m = mu.fourier(-xi, 1e-10).unwrap().value;
        prop_assert!((m - p.conj()).norm() <= 2e-10);
        Ok(())
    });
    c.property("positive-definite coefficients", (named_measure(), coeffs(7)), |(mu, cs)| {
        let tol = 1e-10;
        let mut q = 0.0;
        for (j, a) in cs.iter().enumerate() {
            for (k, b) in cs.iter().enumerate() {
                q += (a * b.conj() * mu.fourier_at(j as i64 - k as i64, tol).unwrap().value).re;
            }
        }
        let l1: f64 = cs.iter().map(|z| z.norm()).sum();
        prop_assert!(q >= -l1 * l1 * tol);
        Ok(())
    });
    c.property("Wiener index of Lebesgue/atomic mixtures", (atomic(), 0.0f64..0.9), |(a, leb)| {
        let CircleMeasure::Atomic(ref atoms) = a else { unreachable!() };
        let want: f64 = atoms.atoms().iter().map(|x| (x.weight * (1.0 - leb)).powi(2)).sum();
        let mu = if leb > 0.0 {
            CircleMeasure::Mixture(Mixture::new(vec![(CircleMeasure::Lebesgue, leb), (a.clone(), 1.0 - leb)]).unwrap())
        } else {
            a.clone()
        };
        prop_assert!((wiener_atom_index_with(&mu, 4096, Execution::Sequential).unwrap() - want).abs() <= 0.02);
        Ok(())
    });

    // Operator models.
    c.property("cyclic unitarity", (named_measure(), cyclic_vector(5), cyclic_vector(5), -40i64..40), |(mu, x, y, n)| {
        let m = cyclic(mu);
        let a = inner_product(&m, &apply_power(&m, n, &x).unwrap(), &apply_power(&m, n, &y).unwrap(), 1e-12).unwrap();
        let b = inner_product(&m, &x, &y, 1e-12).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.error_bound + b.error_bound);
        Ok(())
    });
    c.property("contraction property", model_with_vectors(), |(m, x, _)| {
        prop_assert!(norm(&m, &apply_power(&m, 1, &x).unwrap()) <= norm(&m, &x) + 1e-9);
        Ok(())
    });
    c.property("adjoint consistency", model_with_vectors(), |(m, x, y)| {
        let a = inner_product(&m, &apply_power(&m, 1, &x).unwrap(), &y, 1e-12).unwrap().value;
        let b = inner_product(&m, &x, &apply_adjoint_power(&m, 1, &y).unwrap(), 1e-12).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-10);
        Ok(())
    });
    c.property("direct-sum orthogonality and shift stability", (named_measure(), cyclic_vector(4), shift_vector(8), shift_vector(8), 8u64..200), |(mu, a, s, t, n)| {
        let m = OperatorModel::direct_sum(vec![cyclic(mu), OperatorModel::shift(16).unwrap()]).unwrap();
        let left = VectorRep::Sum(vec![a, VectorRep::Shift(BTreeMap::new())]);
        let right = VectorRep::Sum(vec![VectorRep::Cyclic(BTreeMap::new()), s.clone()]);
        prop_assert_eq!(inner_product(&m, &left, &right, 1e-12).unwrap().value, Complex64::default());
        let w = OperatorModel::shift(16).unwrap();
        prop_assert_eq!(inner_product(&w, &apply_power(&w, n as i64, &s).unwrap(), &t, 1e-12).unwrap().value, Complex64::default());
        Ok(())
    });

    // Cayley bridge.
    c.property("Cayley round trip", (-6.0f64..6.0, any::<bool>()), |(mag, sign)| {
        let lambda = if sign { 10f64.powf(mag) } else { -(10f64.powf(mag)) };
        prop_assert!((lambda_of_turn(turn_of(lambda)) - lambda).abs() <= 1e-12 * lambda.abs().max(1.0));
        Ok(())
    });
    c.property("cogenerator recovery", 0.0f64..1.0, |theta| {
        prop_assume!((theta - 0.5).abs() > 1e-6);
        let (lambda, _) = pushforward_to_line(&CircleMeasure::point_mass(Angle::from_f64(theta).unwrap())).unwrap().atoms()[0];
        prop_assert!((cayley_point(lambda) - cis_turns(theta)).norm() <= 1e-12);
        Ok(())
    });
    c.property("resolvent identity within bounds", (atomic(), cyclic_vector(2)), |(mu, x)| {
        let r = resolvent_two_ways(&cyclic(mu), &x, &x, 1e-4, Execution::Sequential).unwrap();
        prop_assert!(r.discrepancy <= 10.0 * (r.spectral.error_bound + r.laplace.error_bound));
        Ok(())
    });

    // Limit dynamics.
    c.property("recurrence certificates self-verify", prop_oneof![tower_measure(), atomic()], |mu| {
        let m = cyclic(mu.clone());
        if let Certificate::PoissonRecurrence { indices, epsilons, error_bound, .. } =
            recurrence_certificate(&m, &RecurrencePolicy::default(), Execution::Sequential).unwrap()
        {
            let e0 = VectorRep::character(0);
            for (&n, &eps) in indices.iter().zip(&epsilons) {
                let hat = mu.fourier(n as f64, 1e-13).unwrap();
                prop_assert!(1.0 - hat.value.re <= eps + error_bound + hat.error_bound);
                let strong = norm_sq(&m, &apply_power(&m, n as i64, &e0).unwrap().sub(&e0).unwrap(), 1e-13).unwrap();
                prop_assert!(strong.value.re <= 2.0 * (eps + error_bound) + strong.error_bound);
            }
        }
        Ok(())
    });
    c.property("contraction bound along orbits", (model_with_vectors(), 1u64..50), |((m, x, y), step)| {
        let seq = SequenceSpec::Arithmetic { start: 1, step, len: 6 };
        let bound = norm(&m, &x) * norm(&m, &y) + 1e-10;
        for v in trajectory(&m, &x, &y, &seq, 1e-12, Execution::Sequential).unwrap() {
            prop_assert!(v.value.norm() <= bound + v.error_bound);
        }
        Ok(())
    });
    let stable = prop_oneof![
        Just(OperatorModel::shift(16).unwrap()),
        Just(cyclic(CircleMeasure::Lebesgue)),
        finite_model(0.9),
    ];
    c.property("stable components have vanishing limits", stable, |m| {
        let frame = limitlab::dynamics::default_frame(&m);
        let est = limit_operator_estimate(&m, &SequenceSpec::Powers { base: 2, len: 12 }, &frame, 1e-12, Execution::Sequential).unwrap();
        prop_assert!(est.matrix_elements.iter().flatten().all(|z| z.norm() <= 1e-10));
        Ok(())
    });
    c.property("future and past frames coincide", (named_measure(), cyclic_vector(4), 0u64..30), |(mu, x, n)| {
        let m = cyclic(mu);
        prop_assert_eq!(apply_adjoint_power(&m, n, &x).unwrap(), apply_power(&m, -(n as i64), &x).unwrap());
        Ok(())
    });
    c.property("weakly wandering certificates hold", named_measure(), |mu| {
        let m = cyclic(mu);
        let x = VectorRep::character(0);
        if let WanderOutcome::Found { certificate: Certificate::WeaklyWandering { indices, epsilon, .. } } =
            weakly_wandering_search(&m, &x, 3, 0.1, 200, Execution::Sequential).unwrap()
        {
            for (i, &a) in indices.iter().enumerate() {
                for &b in &indices[i + 1..] {
                    let v = inner_product(&m, &apply_power(&m, b as i64 - a as i64, &x).unwrap(), &x, 1e-12).unwrap();
                    prop_assert!(v.value.norm() <= epsilon + v.error_bound);
                }
            }
        }
        Ok(())
    });

    // Limit algebra.
    let element = prop::collection::btree_map(-4i64..=4, (-3i32..=3).prop_map(|k| cx(k as f64, 0.0)), 1..4)
        .prop_map(CalculusElement::from_terms);
    c.property("calculus homomorphism", (element.clone(), element, cyclic_vector(3)), |(a, b, x)| {
        let m = cyclic(CircleMeasure::cantor());
        let ab = apply_calculus(&m, &a.mul(&b), &x).unwrap().vector;
        let then = apply_calculus(&m, &a, &apply_calculus(&m, &b, &x).unwrap().vector).unwrap().vector;
        prop_assert!(norm(&m, &ab.sub(&then).unwrap()) <= 1e-12);
        Ok(())
    });
    let model = OperatorModel::direct_sum(vec![cyclic(CircleMeasure::cantor()), OperatorModel::shift(16).unwrap()])?;
    let splitting = split(&model, &ClassifyPolicy::default())?;
    c.property("P_m is an orthogonal projection", (cyclic_vector(3), shift_vector(6), cyclic_vector(3), shift_vector(6)), |(a, s, b, t)| {
        let (x, y) = (VectorRep::Sum(vec![a, s]), VectorRep::Sum(vec![b, t]));
        let (px, _) = projection_P_m(&model, &splitting, &x).unwrap();
        let (py, _) = projection_P_m(&model, &splitting, &y).unwrap();
        prop_assert_eq!(&projection_P_m(&model, &splitting, &px).unwrap().0, &px);
        let lhs = inner_product(&model, &px, &y, 1e-12).unwrap().value;
        let rhs = inner_product(&model, &x, &py, 1e-12).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 1e-11);
        let unit = apply_calculus(model.components()[0], &CalculusElement::constant(cx(1.0, 0.0)), &px_part(&px)).unwrap().vector;
        prop_assert_eq!(unit, px_part(&px));
        Ok(())
    });

    let dirichlet = cyclic(CircleMeasure::dirichlet());
    let mut complete = 0;
    for window in 1..=8 {
        let w = membership_witness(&dirichlet, window, 1e-10, None, EXEC)?;
        if !w.truncated {
            complete += 1;
            c.le(format!("membership residual at N = {window}"), w.discrete_in_continuous.max(w.continuous_in_discrete), 1e-8);
        }
    }
    c.note(format!("frame membership: {complete} of 8 windows N ≤ 8 untruncated, residuals ≤ 1e-8"));

    let refined = [
        EntanglementPolicy { resolvent_tol: None, ..EntanglementPolicy::default() },
        EntanglementPolicy {
            resolvent_tol: None,
            frame_window: 6,
            classify: ClassifyPolicy { powers_len: 20, tol: 1e-12, ..ClassifyPolicy::default() },
            ..EntanglementPolicy::default()
        },
    ];
    for name in ["example56", "lebesgue_shift", "mismatch", "cantor_shift"] {
        let cfg = config(name)?;
        let verdicts: Vec<Verdict> = refined
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.continuous_overrides = cfg.file.policy.continuous_overrides.clone();
                entanglement_check(&cfg.file.model, &p).map(|v| v.verdict)
            })
            .collect::<limitlab::Result<_>>()?;
        let flips = verdicts.windows(2).any(|w| {
            matches!((w[0], w[1]), (Verdict::Entangled, Verdict::Decoupled) | (Verdict::Decoupled, Verdict::Entangled))
        });
        c.ensure(format!("{name}: verdict monotone under refinement {verdicts:?}"), !flips);
    }

    // Finite oracle.
    let unitary = (any::<u64>(), 1usize..5).prop_map(|(seed, d)| random_unitary(&mut ChaCha8Rng::seed_from_u64(seed), d));
    c.property("sampled limits are contractions commuting with U", (unitary, 1u64..400, 0.05f64..1.0), |(u, budget, radius)| {
        for s in sample_limit_operators(&u, budget, radius, Execution::Sequential).unwrap() {
            prop_assert!(s.matrix.clone().singular_values().max() <= 1.0 + 1e-8);
            prop_assert!((&s.matrix * &u - &u * &s.matrix).camax() <= 1e-6);
        }
        Ok(())
    });
    let instance = (any::<u64>(), 2usize..=8, 0.2f64..0.95)
        .prop_flat_map(|(seed, d, s)| (0..=d).prop_map(move |r| (planted(&mut ChaCha8Rng::seed_from_u64(seed), d, r, s).0, r)));
    c.property("unitary part idempotent and flight decays", instance, |(t, r)| {
        let a = unitary_part(&t).unwrap();
        prop_assert_eq!(a.unitary_dim(), r);
        if r > 0 {
            let again = unitary_part(&(a.unitary_basis.adjoint() * &t * &a.unitary_basis)).unwrap();
            prop_assert_eq!(again.unitary_dim(), r);
        }
        let s = classify_finite(&t).unwrap();
        for n in [500, 640, 1000] {
            prop_assert!(decay_at(&t, &s.h_w_basis, n) <= 1e-6);
        }
        Ok(())
    });

    // Harness.
    for (name, f) in [("example56", cmd_example56 as fn(&ExperimentConfig) -> Result<limitlab_cli::Run>), ("cantor", cmd_fourier)] {
        let cfg = config(name)?;
        let a = report::to_json_string(&f(&cfg)?.report);
        let b = report::to_json_string(&f(&cfg.clone().with_execution(Execution::Sequential))?.report);
        c.ensure(format!("{name}: byte-identical reports"), a == b);
        let parsed: serde_json::Value = serde_json::from_str(&a)?;
        let loose = lint::check_value(&parsed);
        c.ensure(format!("{name}: every float carries a bound or tier, unbound {loose:?}"), loose.is_empty());
    }
    c.note(format!("{} randomized properties × {PROPERTY_CASES} cases", c.notes.len() - 1));
    Ok(())
}

fn px_part(x: &VectorRep) -> VectorRep {
    match x {
        VectorRep::Sum(p) => p[0].clone(),
        other => other.clone(),
    }
}

fn main() {
    let results = [
        criterion(1, "self-similarity constancy", Some(1.0), self_similarity),
        criterion(2, "Dirichlet recurrence certificate", Some(1.0), dirichlet_recurrence),
        criterion(3, "limit operator scalar form", Some(5.0), scalar_limit),
        criterion(4, "resolvent identity", Some(10.0), resolvent),
        criterion(5, "splitting and entanglement of the example fixture", Some(20.0), example56),
        criterion(6, "Wiener index", Some(5.0), wiener),
        criterion(7, "finite oracle cross-validation", Some(10.0), finite_oracle),
        criterion(8, "invariant suites", None, invariants),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed} of {} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
