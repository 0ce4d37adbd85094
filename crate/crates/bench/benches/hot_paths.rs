use criterion::{criterion_group, criterion_main, Criterion};
use landscape_lab::{
    certify_full_rank_measure, default_rank_tol, feedforward, global_descent, grid_scan_2d,
    random_weights, Activation, CounterRng, Dataset, DescentConfig, Loss, Matrix, NetSpec,
    SyntheticSurface,
};
use std::hint::black_box;

fn random_matrix(rows: usize, cols: usize, stream: u64) -> Matrix {
    let mut rng = CounterRng::new(7, stream);
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
        .collect();
    Matrix::from_rows(&data).unwrap()
}

fn bench_matmul(c: &mut Criterion) {
    let a = random_matrix(48, 48, 0);
    let b = random_matrix(48, 48, 1);
    c.bench_function("matmul_48x48", |bench| {
        bench.iter(|| black_box(&a).matmul(black_box(&b)).unwrap())
    });
}

fn bench_singular_values(c: &mut Criterion) {
    let m = random_matrix(24, 16, 2);
    c.bench_function("singular_values_24x16", |bench| {
        bench.iter(|| black_box(&m).singular_values())
    });
}

fn bench_feedforward(c: &mut Criterion) {
    let spec = NetSpec::new(
        vec![3, 16, 16, 2],
        Activation::builtin("exp").unwrap(),
        Loss::quadratic(),
    )
    .unwrap();
    let w = random_weights(&spec, 11, 0.2).unwrap();
    let x = random_matrix(3, 10, 3);
    c.bench_function("feedforward_3x16x16x2_n10", |bench| {
        bench.iter(|| feedforward(black_box(&spec), black_box(&w), black_box(&x)).unwrap())
    });
}

fn bench_rank_certify(c: &mut Criterion) {
    let spec = NetSpec::new(
        vec![2, 8, 8, 1],
        Activation::builtin("exp").unwrap(),
        Loss::quadratic(),
    )
    .unwrap();
    let n = 6;
    let mut rng = CounterRng::new(7, 4);
    let row0: Vec<f64> = (0..n).map(|j| -2.0 + 4.0 * (j as f64 + 0.5) / n as f64).collect();
    let row1: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
    let x = Matrix::from_rows(&[row0, row1]).unwrap();
    let y = Matrix::zeros(1, n);
    let data = Dataset::new(x, y).unwrap();
    let rel_tol = default_rank_tol(spec.last_hidden_dim(), n);
    c.bench_function("rank_certify_2x8x8_50_trials", |bench| {
        bench.iter(|| {
            certify_full_rank_measure(black_box(&spec), black_box(&data), 50, 0, rel_tol, 0.25)
                .unwrap()
        })
    });
}

fn bench_global_descent(c: &mut Criterion) {
    let spec = NetSpec::new(
        vec![1, 3, 1],
        Activation::builtin("exp").unwrap(),
        Loss::quadratic(),
    )
    .unwrap();
    let data = Dataset::new(
        Matrix::from_rows(&[vec![0.5, -0.5, 1.5]]).unwrap(),
        Matrix::from_rows(&[vec![0.2, -0.1, 0.4]]).unwrap(),
    )
    .unwrap();
    let w0 = random_weights(&spec, 17, 0.3).unwrap();
    let config = DescentConfig::default();
    c.bench_function("global_descent_1x3x1", |bench| {
        bench.iter(|| {
            global_descent(
                black_box(&spec),
                black_box(&data),
                black_box(&w0),
                1e-2,
                &config,
            )
            .unwrap()
        })
    });
}

fn bench_grid_scan(c: &mut Criterion) {
    let surface = SyntheticSurface::from_name("uv").unwrap();
    let (ubox, vbox) = surface.default_box();
    c.bench_function("grid_scan_uv_101", |bench| {
        bench.iter(|| {
            grid_scan_2d(
                |u, v| surface.eval(u, v),
                black_box(ubox),
                black_box(vbox),
                101,
                1e-9,
                1e-9,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_matmul,
    bench_singular_values,
    bench_feedforward,
    bench_rank_certify,
    bench_global_descent,
    bench_grid_scan
);
criterion_main!(benches);
