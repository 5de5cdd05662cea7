use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvcrit_core::synthesis::{gen_critical, gen_seven_point_set, FamilySpec};
use mvcrit_core::{check_scene, fundamental_form, triple_compatible, Family, ToleranceProfile};

fn points_for(family: Family) -> usize {
    match family {
        Family::SevenPoints => 7,
        Family::CollinearCamerasOffCurve => 24,
        _ => 12,
    }
}

fn forms(c: &mut Criterion) {
    let scene = gen_critical(&FamilySpec::new(Family::EllipticQuartic, 12, 0)).unwrap().scene;
    let cams = &scene.cameras;
    let tol = ToleranceProfile::default();
    c.bench_function("fundamental_form", |b| b.iter(|| fundamental_form(black_box(&cams[0]), black_box(&cams[1]))));
    let f = [
        fundamental_form(&cams[0], &cams[1]).unwrap(),
        fundamental_form(&cams[0], &cams[2]).unwrap(),
        fundamental_form(&cams[1], &cams[2]).unwrap(),
    ];
    c.bench_function("triple_compatible", |b| b.iter(|| triple_compatible(black_box(&f[0]), &f[1], &f[2], &tol)));
}

fn check(c: &mut Criterion) {
    let tol = ToleranceProfile::default();
    let mut group = c.benchmark_group("check_scene");
    group.sample_size(20);
    for family in Family::ALL {
        let scene = gen_critical(&FamilySpec::new(family, points_for(family), 0)).unwrap().scene;
        group.bench_with_input(BenchmarkId::from_parameter(family.slug()), &scene, |b, s| b.iter(|| check_scene(s, &tol)));
    }
    group.finish();
}

fn generate(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    group.sample_size(20);
    group.bench_function("seven_point_set", |b| b.iter(|| gen_seven_point_set(black_box(3))));
    group.bench_function("elliptic_quartic", |b| {
        b.iter(|| gen_critical(&FamilySpec::new(Family::EllipticQuartic, 12, black_box(3))))
    });
    group.finish();
}

criterion_group!(benches, forms, check, generate);
criterion_main!(benches);
