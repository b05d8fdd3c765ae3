use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hazekit::image::{luminance, resize};
use hazekit::learned::{slice, BilateralGridModel, ModelConfig};
use hazekit::transmission::prior::dark_channel;
use hazekit::wgif::{wgif_filter, WgifParams};
use hazekit::T_FLOOR;
use hazekit_bench::hazy_scene;

fn bench_wgif(c: &mut Criterion) {
    let mut group = c.benchmark_group("wgif_filter");
    group.sample_size(10);
    for size in [128, 256] {
        let img = hazy_scene(size);
        let guide = luminance(&img).unwrap();
        let plane = img.channel(0);
        group.bench_with_input(BenchmarkId::from_parameter(size), &size, |b, _| {
            b.iter(|| wgif_filter(black_box(&plane), &guide, &WgifParams::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_dark_channel(c: &mut Criterion) {
    let img = hazy_scene(256);
    c.bench_function("dark_channel/256/r7", |b| b.iter(|| dark_channel(black_box(&img), 7)));
}

fn bench_predict_grid(c: &mut Criterion) {
    let model = BilateralGridModel::init(ModelConfig::default(), 1).unwrap();
    let lowres = resize(&hazy_scene(256), 256, 256).unwrap();
    let mut group = c.benchmark_group("predict_grid");
    group.sample_size(10);
    group.bench_function("256", |b| b.iter(|| model.predict_grid(black_box(&lowres)).unwrap()));
    group.finish();
}

fn bench_slice(c: &mut Criterion) {
    let model = BilateralGridModel::init(ModelConfig::default(), 1).unwrap();
    let img = hazy_scene(512);
    let grid = model.predict_grid(&resize(&img, 256, 256).unwrap()).unwrap();
    let guide = luminance(&img).unwrap();
    c.bench_function("slice/512", |b| b.iter(|| slice(black_box(&grid), &guide, T_FLOOR).unwrap()));
}

criterion_group!(benches, bench_wgif, bench_dark_channel, bench_predict_grid, bench_slice);
criterion_main!(benches);
