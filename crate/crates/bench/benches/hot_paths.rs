use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fieldex::field::{field_argmin, FieldWorkspace};
use fieldex::{
    cluster_frontiers, detect_frontiers, merge, sense, total_field, wavefront_distance, Point,
};
use fieldex_bench::{snapshot, D_S};

fn hot_paths(c: &mut Criterion) {
    let s = snapshot();
    let [a, b] = &s.maps;
    let m = merge(a, b).unwrap();
    let clustering = cluster_frontiers(&detect_frontiers(&m));
    let params = s.config.field_params(m.resolution());
    let noise = vec![0.0; 3];
    let rays = s.config.rays.unwrap();

    c.bench_function("merge_220x400", |bch| {
        bch.iter(|| merge(black_box(a), black_box(b)).unwrap())
    });
    c.bench_function("frontiers_and_clusters", |bch| {
        bch.iter(|| cluster_frontiers(&detect_frontiers(black_box(&m))))
    });
    let source = m.cell_at(Point::new(1.0, 5.5)).unwrap();
    c.bench_function("wavefront_from_corridor", |bch| {
        bch.iter(|| wavefront_distance(black_box(&m), source).unwrap())
    });
    c.bench_function("total_field_3_robots", |bch| {
        bch.iter(|| total_field(0, black_box(&m), &clustering, &s.poses, 3, &params, &noise))
    });
    let mut ws = FieldWorkspace::new(m.len());
    c.bench_function("field_argmin_3_robots", |bch| {
        bch.iter(|| {
            field_argmin(
                &mut ws,
                0,
                black_box(&m),
                &clustering,
                &s.poses,
                3,
                &params,
                &noise,
                None,
            )
        })
    });
    c.bench_function("sense_full_scan", |bch| {
        bch.iter(|| {
            let mut fresh = s.truth.blank_like();
            sense(Point::new(8.0, 5.5), &s.truth, &mut fresh, D_S, rays)
        })
    });
}

criterion_group!(benches, hot_paths);
criterion_main!(benches);
