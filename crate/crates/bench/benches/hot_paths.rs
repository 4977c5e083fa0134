//! Benchmarks for the evaluation paths that dominate training time: chart
//! geometry with second derivatives, nested-jet network evaluation, and the
//! weak and strong loss gradients.

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use shellfield::autodiff::Activation;
use shellfield::geometry::{geom_point, Chart, Side};
use shellfield::kinematics::RotationBasis;
use shellfield::network::{forward_constrained, Mlp, TrialKind};
use shellfield::sampling::{build_point_set, Sampler, SamplingPlan};
use shellfield::training::pipeline::field_jets;
use shellfield::training::{build_cache, FieldNet, LoadSpec, LossEnv, LossKind, Material};

fn paraboloid_setup(
    n: usize,
    strong: bool,
) -> (FieldNet, Vec<f64>, shellfield::training::ProblemCache) {
    let chart = Chart::hyperbolic_paraboloid();
    let plan = SamplingPlan {
        n_collocation: n,
        n_boundary_neumann: 16,
        n_boundary_dirichlet: 0,
        sampler: Sampler::Sobol,
        neumann_sides: vec![Side::X1, Side::Y0, Side::Y1],
        dirichlet_sides: vec![],
    };
    let points = build_point_set(&chart, &plan, 0).unwrap();
    let cache = build_cache(&chart, &points, &LoadSpec::Vertical { fz: -0.1 }, strong).unwrap();
    let net = FieldNet {
        widths: vec![2, 50, 50, 50, 5],
        activation: Activation::Gelu,
        trial: TrialKind::OneSidedClamp,
        basis: RotationBasis::VFrame,
    };
    let params = Mlp::init(net.widths.clone(), net.activation, 1).params;
    (net, params, cache)
}

fn bench_geometry(c: &mut Criterion) {
    let chart = Chart::hyperbolic_paraboloid();
    c.bench_function("geom_point strong paraboloid", |b| {
        b.iter(|| geom_point(&chart, black_box([0.21, -0.37]), true).unwrap())
    });
    let hemi = Chart::hemisphere();
    c.bench_function("geom_point strong hemisphere", |b| {
        b.iter(|| geom_point(&hemi, black_box([0.4, 0.3]), true).unwrap())
    });
}

fn bench_jets(c: &mut Criterion) {
    let (net, params, _) = paraboloid_setup(16, false);
    c.bench_function("field jets first order", |b| {
        b.iter(|| field_jets::<f64>(&net, &params, black_box([0.1, 0.2])))
    });
    c.bench_function("field jets second order", |b| {
        b.iter(|| {
            let j: [shellfield::autodiff::J2<f64>; 5] = forward_constrained(
                &net.widths,
                net.activation,
                &params,
                black_box([0.1, 0.2]),
                net.trial,
            );
            j
        })
    });
}

fn bench_loss_grad(c: &mut Criterion) {
    let material = Material { youngs_modulus: 1.0, poisson_ratio: 0.3, thickness: 0.1 };
    for (kind, strong, label) in [
        (LossKind::Weak, false, "weak loss grad 256 pts"),
        (LossKind::Strong, true, "strong loss grad 64 pts"),
    ] {
        let n = if strong { 64 } else { 256 };
        let (net, params, cache) = paraboloid_setup(n, strong);
        let env = LossEnv { net: &net, cache: &cache, material, lambda_bc: 1.0, kind };
        let mut grad = vec![0.0; params.len()];
        c.bench_function(label, |b| {
            b.iter_batched(
                || params.clone(),
                |p| env.value_grad(black_box(&p), &mut grad).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_geometry, bench_jets, bench_loss_grad
}
criterion_main!(benches);
