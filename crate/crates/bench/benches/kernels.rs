use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use stabsym_core::{gf2_multiply, Orientation, TiledBitMatrix};

fn pseudo_random(rows: usize, cols: usize, salt: usize) -> TiledBitMatrix {
    TiledBitMatrix::from_fn(rows, cols, |r, c| (r.wrapping_mul(0x9E37) ^ c.wrapping_mul(0x85EB) ^ salt) % 3 == 0)
}

fn transpose(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_transpose");
    for n in [512, 2048, 4096] {
        let mut m = pseudo_random(n, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                m.local_transpose();
                black_box(m.orientation() == Orientation::RowMajorTiles)
            })
        });
    }
    group.finish();
}

fn row_and_column_ops(c: &mut Criterion) {
    let n = 2048;
    let mut m = pseudo_random(n, n, 2);
    c.bench_function("column_op_xor/2048", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 7) % n;
            m.column_op_xor(i, (i + 1) % n).unwrap();
        })
    });
    m.set_orientation(Orientation::RowMajorTiles);
    c.bench_function("row_op_xor/2048", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 7) % n;
            m.row_op_xor(i, (i + 1) % n).unwrap();
        })
    });
}

fn multiply(c: &mut Criterion) {
    let mut group = c.benchmark_group("gf2_multiply");
    group.sample_size(10);
    for n in [512, 1024, 2048] {
        let a = pseudo_random(n, n, 3);
        let b = pseudo_random(n, n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| gf2_multiply(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transpose, row_and_column_ops, multiply);
criterion_main!(benches);
