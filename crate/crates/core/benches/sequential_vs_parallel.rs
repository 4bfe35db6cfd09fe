use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use limitlab::algebra::limit_space_membership;
use limitlab::cayley::pushforward_to_line;
use limitlab::dynamics::{
    default_frame, limit_operator_estimate, recurrence_certificate, weakly_wandering_search, RecurrencePolicy, SequenceSpec,
};
use limitlab::measure::{wiener_atom_index_with, AdaptivePolicy};
use limitlab::model::{OperatorModel, VectorRep};
use limitlab::oracle::sample_limit_operators;
use limitlab::{CircleMeasure, Complex64, Execution};
use nalgebra::DMatrix;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn wiener_index(c: &mut Criterion) {
    let mut group = c.benchmark_group("wiener_index");
    let mu = CircleMeasure::cantor();
    for n in [1024usize, 4096] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| wiener_atom_index_with(black_box(&mu), n, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn recurrence_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("recurrence_scan");
    let m = OperatorModel::CyclicUnitary(CircleMeasure::cantor());
    let policy = RecurrencePolicy { n_max: 4096, ..RecurrencePolicy::default() };
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| recurrence_certificate(black_box(&m), &policy, exec).unwrap()));
    }
    group.finish();
}

fn wandering_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("weakly_wandering");
    let m = OperatorModel::CyclicUnitary(CircleMeasure::cantor());
    let x = VectorRep::character(0);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| weakly_wandering_search(&m, &x, 4, 0.1, 2187, exec).unwrap()));
    }
    group.finish();
}

fn line_characteristic(c: &mut Criterion) {
    let mut group = c.benchmark_group("line_characteristic");
    group.sample_size(20);
    let line = pushforward_to_line(&CircleMeasure::cantor()).unwrap();
    let t = std::f64::consts::TAU * 9.0;
    for (name, exec) in MODES {
        let policy = AdaptivePolicy::with_execution(exec);
        group.bench_function(name, |b| b.iter(|| line.characteristic(black_box(t), 1e-8, &policy).unwrap()));
    }
    group.finish();
}

fn limit_estimate(c: &mut Criterion) {
    let mut group = c.benchmark_group("limit_operator_estimate");
    let m = OperatorModel::CyclicUnitary(CircleMeasure::cantor());
    let frame = default_frame(&m);
    let seq = SequenceSpec::Powers { base: 3, len: 16 };
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| limit_operator_estimate(&m, &seq, &frame, 1e-12, exec).unwrap()));
    }
    group.finish();
}

fn membership(c: &mut Criterion) {
    let mut group = c.benchmark_group("limit_space_membership");
    let m = OperatorModel::CyclicUnitary(CircleMeasure::dirichlet());
    let (x, y) = (VectorRep::character(0), VectorRep::character(5));
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| limit_space_membership(&m, &x, &y, 6, 1e-12, exec).unwrap()));
    }
    group.finish();
}

fn torus_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_limit_operators");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let phases = [2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0, 5f64.sqrt() - 2.0];
    let u = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        3,
        phases.iter().map(|p| Complex64::from_polar(1.0, std::f64::consts::TAU * p)),
    ));
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| sample_limit_operators(&u, 5000, 0.5, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(
    benches,
    wiener_index,
    recurrence_scan,
    wandering_table,
    line_characteristic,
    limit_estimate,
    membership,
    torus_sampling
);
criterion_main!(benches);
