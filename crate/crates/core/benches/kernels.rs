use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gmtlab_core::brakke::{brakke_residual, shrinking_sphere_track, FlowTrack, SpaceTimeTestFunction};
use gmtlab_core::cutoff::RadialCutoff;
use gmtlab_core::geometry::{GeometryContext, Vector};
use gmtlab_core::huisken::{verify_huisken_monotonicity, SpaceTimePoint};
use gmtlab_core::monotonicity::{ConvexWeight, MonotonicityVerifier};
use gmtlab_core::varifold::{shapes, DiscreteVarifold, TestField};

struct Inputs {
    sphere: DiscreteVarifold,
    field: TestField,
    track: FlowTrack,
}

fn inputs() -> Inputs {
    let ctx = GeometryContext::new(3, 2).unwrap();
    let north = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
    let sphere = shapes::sphere(ctx, 1.0, 0.02, &north).unwrap().translated(&-north);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let field = TestField::random(3, 2, None, &mut rng).unwrap();
    let track = shrinking_sphere_track(ctx, true, (-1.0, -0.05), 41, 0.05).unwrap();
    Inputs { sphere, field, track }
}

/// Runs a kernel body on the pool under test.
type Exec<'a> = &'a dyn Fn(&(dyn Fn() + Sync));

fn kernels(c: &mut Criterion, label: &str, inp: &Inputs, run: Exec<'_>) {
    let mut g = c.benchmark_group("kernels");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("first_variation", label), |b| {
        b.iter(|| run(&|| { black_box(inp.sphere.first_variation(&inp.field).unwrap()); }))
    });
    let verifier = MonotonicityVerifier::default();
    let radii: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let f = ConvexWeight::abs_linear(vec![1.0, 0.0, 0.0]).unwrap();
    g.bench_function(BenchmarkId::new("monotonicity", label), |b| {
        b.iter(|| run(&|| { black_box(verifier.verify(&inp.sphere, &f, &radii).unwrap()); }))
    });
    let one = ConvexWeight::constant(1.0).unwrap();
    let base = SpaceTimePoint::origin(3);
    let times: Vec<f64> = (1..=20).map(|k| -0.05 * k as f64).collect();
    g.bench_function(BenchmarkId::new("huisken", label), |b| {
        b.iter(|| run(&|| { black_box(verify_huisken_monotonicity(&inp.track, &one, &base, 5.0, &times, 10.0).unwrap()); }))
    });
    let phi = SpaceTimeTestFunction::cutoff(RadialCutoff::new(Vector::from_column_slice(&[0.6, 0.0, 0.0]), 0.5, 2.5).unwrap());
    g.bench_function(BenchmarkId::new("brakke_residual", label), |b| {
        b.iter(|| run(&|| { black_box(brakke_residual(&inp.track, &phi, -1.0, -0.05).unwrap()); }))
    });
    g.finish();
}

#[cfg(feature = "parallel")]
fn compare(c: &mut Criterion) {
    let inp = inputs();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    kernels(c, "1-thread", &inp, &|body| single.install(body));
    kernels(c, &format!("{}-threads", rayon::current_num_threads()), &inp, &|body| body());
}

#[cfg(not(feature = "parallel"))]
fn compare(c: &mut Criterion) {
    let inp = inputs();
    kernels(c, "sequential", &inp, &|body| body());
}

criterion_group!(benches, compare);
criterion_main!(benches);
