//! Bond-dimension and distance scaling of the tensor-network contraction.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ysc::mps::{build_network, contract, decode_mps, Direction, MpsOptions};
use ysc::{build_code, channel_from_bias, Bias};

fn contraction_chi_scaling(c: &mut Criterion) {
    let code = build_code(11).unwrap();
    let ch = *channel_from_bias(0.3, Bias::new(100.0).unwrap())
        .unwrap()
        .channel();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let error = ch.sample_error(code.n(), &mut rng);
    let syndrome = code.syndrome(&error).unwrap();
    let rep = code.pure_error(&syndrome).unwrap();
    let net = build_network(&code, &ch, &rep).unwrap();

    let mut group = c.benchmark_group("contract_d11");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    for chi in [4usize, 8, 16, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(chi), &chi, |b, &chi| {
            b.iter(|| contract(&net, chi, Direction::ColumnWise).unwrap())
        });
    }
    group.finish();
}

fn decode_distance_scaling(c: &mut Criterion) {
    let ch = *channel_from_bias(0.3, Bias::new(100.0).unwrap())
        .unwrap()
        .channel();
    let mut group = c.benchmark_group("decode_chi16");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    for d in [5usize, 7, 9, 11] {
        let code = build_code(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let error = ch.sample_error(code.n(), &mut rng);
        let syndrome = code.syndrome(&error).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| decode_mps(&code, &ch, &syndrome, MpsOptions::new(16)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, contraction_chi_scaling, decode_distance_scaling);
criterion_main!(benches);
