use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mirrorforge::beam::{solve_linear, solve_nonlinear, BeamGeometry, BeamModel, LoadCase, NewtonSettings, SofteningLaw};
use mirrorforge::cgan::{Activation, Mlp};
use mirrorforge::distributions::{kl_divergence, Kde, DEFAULT_BANDWIDTH};
use mirrorforge::field::{decompose, FieldSpec};
use mirrorforge::rng::rng_from;
use mirrorforge::sfem::{solve_galerkin, GridPoint, PceBasis, SfemConfig, SfemModel};
use nalgebra::DMatrix;

fn beam(c: &mut Criterion) {
    let g = BeamGeometry::REFERENCE;
    let model = BeamModel::uniform(g, 2e9).unwrap();
    let load = LoadCase::linear(10.0).unwrap();
    c.bench_function("linear cantilever solve", |b| b.iter(|| solve_linear(black_box(&model), &load).unwrap()));
    let law = SofteningLaw::default_for(2e9).unwrap();
    let steps = LoadCase::new(400.0, 40).unwrap();
    c.bench_function("softening cantilever path", |b| {
        b.iter(|| solve_nonlinear(&model, black_box(&law), &steps, &NewtonSettings::default()).unwrap())
    });
}

fn stochastic(c: &mut Criterion) {
    let g = BeamGeometry::REFERENCE;
    let spec = FieldSpec::new(2e9, 0.4e9, 3.0, g.length, 2).unwrap();
    c.bench_function("KL decomposition", |b| b.iter(|| decompose(black_box(&spec), 20).unwrap()));
    let field = decompose(&spec, 20).unwrap();
    let basis = PceBasis::new(2, 5).unwrap();
    let load = LoadCase::linear(1.0).unwrap();
    c.bench_function("Galerkin solve p=5", |b| {
        b.iter(|| solve_galerkin(&g, black_box(&field), &basis, &load).unwrap())
    });
    let point = GridPoint {
        mean: 2e9,
        std_dev: 0.4e9,
        correlation_length: 3.0,
    };
    let model = SfemModel::build(point, &SfemConfig::default()).unwrap();
    c.bench_function("SFE sampling 4000", |b| b.iter(|| model.sample(black_box(200.0), 4000, 1)));
}

fn metrics(c: &mut Criterion) {
    let a = SfemModel::build(
        GridPoint {
            mean: 2e9,
            std_dev: 0.4e9,
            correlation_length: 3.0,
        },
        &SfemConfig::default(),
    )
    .unwrap()
    .sample(1.0, 2000, 3);
    let scale = 1.0 / a.iter().cloned().fold(0.0, f64::max);
    let p: Vec<f64> = a.iter().map(|v| v * scale).collect();
    let q: Vec<f64> = a.iter().rev().map(|v| v * scale * 1.05).collect();
    c.bench_function("KDE fit 2000", |b| b.iter(|| Kde::fit_with(black_box(&p), &Default::default()).unwrap()));
    let kp = Kde::fit_with(&p, &Default::default()).unwrap();
    let kq = Kde::fit_with(&q, &Default::default()).unwrap();
    assert_eq!(kp.bandwidth(), DEFAULT_BANDWIDTH);
    c.bench_function("KL divergence", |b| b.iter(|| kl_divergence(black_box(&kp), &kq).unwrap()));
}

fn network(c: &mut Criterion) {
    let mut rng = rng_from(1);
    let net = Mlp::init(11, 200, 1, Activation::Tanh, &mut rng);
    let x = DMatrix::from_fn(128, 11, |i, j| ((i * 7 + j * 3) % 13) as f64 / 13.0 - 0.5);
    c.bench_function("MLP forward 128x200", |b| b.iter(|| net.forward(black_box(&x)).unwrap()));
    let fwd = net.forward(&x).unwrap();
    let r = DMatrix::from_element(128, 1, 1.0);
    c.bench_function("MLP backward 128x200", |b| b.iter(|| net.backward(&x, black_box(&fwd), &r)));
}

criterion_group!(benches, beam, stochastic, metrics, network);
criterion_main!(benches);
