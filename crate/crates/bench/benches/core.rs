use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use chanperturb_core::attack::apply_attack;
use chanperturb_core::campaign::realize;
use chanperturb_core::control::wmmse_precoders;
use chanperturb_core::netmodel::build_graph;
use chanperturb_core::statfit::{channel_eigenvalues, fit_family, EigenSample};
use chanperturb_core::{AttackConfig, AttackKind, ControllerSpec, FamilyId, PathLossBase, SimConfig, SvdMode};

fn sim(n: usize) -> SimConfig {
    SimConfig { n_pairs: n, pathloss_log_base: PathLossBase::Ten, ..SimConfig::default() }
}

fn bench_wmmse(c: &mut Criterion) {
    let cfg = sim(20);
    let (topo, h) = realize(&cfg, 0).unwrap();
    let g = build_graph(&h, &topo, &cfg).unwrap();
    let spec = ControllerSpec::default();
    c.bench_function("wmmse_n20", |b| b.iter(|| wmmse_precoders(black_box(&g), &spec, 1.0).unwrap()));
}

fn bench_svd(c: &mut Criterion) {
    let (_, h) = realize(&sim(40), 0).unwrap();
    c.bench_function("svd_n40", |b| b.iter(|| channel_eigenvalues(black_box(&h), SvdMode::Unfold)));
}

fn bench_fit(c: &mut Criterion) {
    let cfg = sim(40);
    let tensors: Vec<_> = (0..25).map(|r| realize(&cfg, r).unwrap().1).collect();
    let sample = EigenSample::pooled(&tensors, SvdMode::Unfold).unwrap();
    let mut group = c.benchmark_group("fit_n1000");
    group.sample_size(10);
    for f in [FamilyId::JohnsonSU, FamilyId::Gamma, FamilyId::LogNormal] {
        group.bench_function(f.id(), |b| b.iter(|| fit_family(black_box(sample.values()), f).unwrap()));
    }
    group.finish();
}

fn bench_attacks(c: &mut Criterion) {
    let (_, h) = realize(&sim(40), 0).unwrap();
    let mut group = c.benchmark_group("attack_n40");
    for kind in AttackKind::ALL {
        let cfg = AttackConfig::new(kind).with_level(0.5);
        group.bench_function(kind.name(), |b| b.iter(|| apply_attack(black_box(&h), &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_wmmse, bench_svd, bench_fit, bench_attacks);
criterion_main!(benches);
