use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use radiosynth_bench::phantom_with_background;
use radiosynth_core::roi::mask_from_labels;
use radiosynth_core::synth::{
    background_fill, conditioning_circle, render_blob, synthesize, tumor_roi, FillConfig, SynthConfig, TargetProfile,
    TargetSpec, DEFAULT_MASK_SCALE,
};
use radiosynth_core::{extract_features, DiscretizationConfig, RoiSpec};

fn extraction(c: &mut Criterion) {
    let (p, _) = phantom_with_background(1);
    let rois = [RoiSpec::roi1(), RoiSpec::roi2()];
    let disc = DiscretizationConfig::default();
    c.bench_function("extract_features/128x128", |b| {
        b.iter(|| extract_features(black_box(&p.image), black_box(&p.labels), &rois, &disc).unwrap())
    });
}

fn fill(c: &mut Criterion) {
    let (p, _) = phantom_with_background(2);
    let mask = mask_from_labels(&p.labels, &tumor_roi());
    let cfg = FillConfig::default();
    c.bench_function("background_fill/tumor", |b| {
        b.iter(|| background_fill(black_box(&p.image), &mask, &cfg).unwrap())
    });
}

fn rendering(c: &mut Criterion) {
    let (p, bg) = phantom_with_background(3);
    c.bench_function("render_blob", |b| {
        b.iter(|| render_blob(black_box(&p.params), bg.geometry(), &bg, 0).unwrap())
    });
}

fn synthesis(c: &mut Criterion) {
    let (p, bg) = phantom_with_background(4);
    let cfg = SynthConfig {
        budget: 200,
        ..SynthConfig::default()
    };
    let fv = extract_features(&p.image, &p.labels, &cfg.rois, &cfg.discretization).unwrap();
    let (center, d) = conditioning_circle(&p.labels, &tumor_roi(), DEFAULT_MASK_SCALE).unwrap();
    let target = TargetSpec::from_features(&fv, TargetProfile::Core, d);
    let mut group = c.benchmark_group("synthesize");
    group.sample_size(10);
    group.bench_function("budget_200", |b| b.iter(|| synthesize(&bg, center, black_box(&target), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, extraction, fill, rendering, synthesis);
criterion_main!(benches);
