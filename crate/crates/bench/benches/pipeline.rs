use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dualpuf::adversary::{collect_naked_crps, train_linear_attack, TrainParams};
use dualpuf::lfsr::{find_primitive, make_lfsr, LfsrSpec};
use dualpuf::postproc::{randomness_adjust, AdjustParams};
use dualpuf::protocol::{HonestTag, RegistrationParams};
use dualpuf::{build_device, run_authentication, run_registration, Channel, DeviceConfig, Mode};

fn lfsr(c: &mut Criterion) {
    let spec = LfsrSpec::new((1 << 16) | 0b10_1101).unwrap();
    c.bench_function("lfsr/step_x1000", |b| {
        b.iter(|| {
            let mut s = make_lfsr(spec, 1).unwrap();
            for _ in 0..1000 {
                s.advance();
            }
            black_box(s.bits())
        })
    });
    c.bench_function("lfsr/find_primitive_12", |b| {
        b.iter(|| find_primitive(black_box(12)).unwrap())
    });
}

fn device(c: &mut Criterion) {
    let d = build_device(DeviceConfig::new(64, 16, 1).unwrap().with_sigma(0.2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    c.bench_function("device/respond_k64_n16_t5", |b| {
        b.iter(|| d.respond(black_box(0x1234), Mode::Original, &mut rng).unwrap())
    });
    c.bench_function("device/adjust_n64", |b| {
        b.iter_batched(
            || dualpuf::apuf::sample_instance(64, 3, 0.0, 0.05).with_bias(4.0),
            |mut lane| randomness_adjust(&mut lane, &AdjustParams::with_seed(3)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn protocol(c: &mut Criterion) {
    let mut d = build_device(DeviceConfig::new(64, 16, 2).unwrap()).unwrap();
    let reg = run_registration(
        &mut d,
        &RegistrationParams::default(),
        &mut ChaCha8Rng::seed_from_u64(2),
    )
    .unwrap();
    c.bench_function("server/predict_k64_n16", |b| {
        b.iter(|| reg.predict_response(black_box(0x4321), Mode::Swapped).unwrap())
    });
    let mut gen = reg.session_generator().unwrap();
    let mut tag = HonestTag::new(&mut d, ChaCha8Rng::seed_from_u64(3));
    let mut channel = Channel::new();
    c.bench_function("protocol/session_k64_n16", |b| {
        b.iter(|| run_authentication(&reg, &mut tag, &mut channel, gen.next_session()).unwrap())
    });
}

fn attack(c: &mut Criterion) {
    let lane = dualpuf::apuf::sample_instance(32, 4, 0.0, 0.05);
    let crps = collect_naked_crps(&lane, 5000, 1, 4).unwrap();
    let params = TrainParams {
        epochs: 10,
        ..Default::default()
    };
    let mut group = c.benchmark_group("attack");
    group.sample_size(10);
    group.bench_function("train_n32_5k_10epochs", |b| {
        b.iter(|| train_linear_attack(&crps, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, lfsr, device, protocol, attack);
criterion_main!(benches);
