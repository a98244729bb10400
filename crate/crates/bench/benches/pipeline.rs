use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lpp_bench::planar_chain;
use lpp_core::lie::{lgvi_step, BodyInertia, ControlInput, DiscreteState, LgviOptions};
use lpp_core::moment::{relax, to_conic, RelaxOptions};
use lpp_core::pipeline::{solve_pop, PipelineOptions};
use lpp_core::planning::build_ik_pop;
use lpp_core::sdp::{solve, SolverOptions};
use nalgebra::{Matrix3, Vector3};

fn ik(c: &mut Criterion) {
    let mut g = c.benchmark_group("ik");
    g.sample_size(10);
    for n in [2, 3, 4] {
        let pop = build_ik_pop(&planar_chain(n)).unwrap();
        g.bench_with_input(BenchmarkId::new("relax", n), &pop, |b, pop| {
            b.iter(|| to_conic(&relax(pop, &RelaxOptions::default()).unwrap().sdp).unwrap())
        });
        let conic = to_conic(&relax(&pop, &RelaxOptions::default()).unwrap().sdp).unwrap().conic;
        g.bench_with_input(BenchmarkId::new("sdp", n), &conic, |b, p| {
            b.iter(|| solve(p, &SolverOptions::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pipeline", n), &pop, |b, pop| {
            b.iter(|| solve_pop(pop, &PipelineOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn lgvi(c: &mut Criterion) {
    let body = BodyInertia::new(0.5, Matrix3::from_diagonal(&Vector3::new(0.3, 0.2, 0.3)), Vector3::zeros()).unwrap();
    let opts = LgviOptions::default();
    let h = 0.01;
    let x0 = DiscreteState::from_twist(
        Matrix3::identity(),
        Vector3::zeros(),
        &Vector3::new(0.4, 1.0, 0.3),
        Vector3::zeros(),
        &body,
        h,
        &opts,
    )
    .unwrap();
    let u = ControlInput::default();
    c.bench_function("lgvi_step", |b| b.iter(|| lgvi_step(&x0, &u, &body, h, &opts).unwrap()));
}

criterion_group!(benches, ik, lgvi);
criterion_main!(benches);
