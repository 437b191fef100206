use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scaffold_core::geometry::Pose;
use scaffold_core::grasp::{evaluate_grasp, GripperModel};
use scaffold_core::meshing::{difference_mesh, sample_surface};
use scaffold_core::metrics::{hausdorff, mass_properties};
use scaffold_core::scaffold::{insert_scaffold_pov, shrink_wrap, Primitive};
use scaffold_core::synthetic::{cylinder_cloud, cylinder_mesh, stacked_circles};
use scaffold_core::Vec3;

fn meshing(c: &mut Criterion) {
    let s = stacked_circles(&[0.04, 0.05, 0.045, 0.04, 0.035, 0.04], 12, 0.03, 0.5).unwrap();
    let mut g = c.benchmark_group("difference_mesh");
    for samples in [8, 16, 32] {
        g.bench_with_input(BenchmarkId::from_parameter(samples), &samples, |b, &n| {
            b.iter(|| difference_mesh(black_box(&s), n).unwrap())
        });
    }
    g.finish();
}

fn mass(c: &mut Criterion) {
    let mut g = c.benchmark_group("mass_properties");
    for segments in [64, 512, 4096] {
        let m = cylinder_mesh(0.04, 0.12, segments);
        g.bench_with_input(BenchmarkId::from_parameter(m.triangles.len()), &m, |b, m| {
            b.iter(|| mass_properties(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn hausdorff_distance(c: &mut Criterion) {
    let a = cylinder_mesh(0.04, 0.12, 512);
    let b = cylinder_mesh(0.041, 0.12, 64);
    let mut g = c.benchmark_group("hausdorff");
    g.sample_size(20);
    for n in [5_000, 50_000] {
        let pa = sample_surface(&a, n, 1).unwrap().points;
        let pb = sample_surface(&b, n, 2).unwrap().points;
        g.bench_with_input(BenchmarkId::from_parameter(n), &(pa, pb), |bch, (pa, pb)| {
            bch.iter(|| hausdorff(black_box(pa), black_box(pb)).unwrap())
        });
    }
    g.finish();
}

fn grasp(c: &mut Criterion) {
    let can = difference_mesh(&stacked_circles(&[0.025, 0.025], 16, 0.1, 0.5).unwrap(), 16).unwrap();
    let pose = Pose::from_axis_angle(Vec3::new(0.0, 0.0, 0.13), Vec3::x(), std::f64::consts::PI);
    let gripper = GripperModel::pr2();
    let mut g = c.benchmark_group("evaluate_grasp");
    for directions in [256, 1024] {
        g.bench_with_input(BenchmarkId::from_parameter(directions), &directions, |b, &d| {
            b.iter(|| evaluate_grasp(&gripper, black_box(&pose), &can, 8, d).unwrap())
        });
    }
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let cloud = cylinder_cloud(0.04, 0.12, 96, 40);
    let view = Vec3::new(0.0, 0.0, -1.0);
    c.bench_function("insert_pov_and_shrink_wrap", |b| {
        b.iter(|| {
            let s = insert_scaffold_pov(black_box(&cloud), view, Primitive::Cylinder, 6, 12, 0.5).unwrap();
            let all: Vec<usize> = (0..s.len()).collect();
            shrink_wrap(&s, &cloud, &all).unwrap()
        })
    });
}

criterion_group!(benches, meshing, mass, hausdorff_distance, grasp, fitting);
criterion_main!(benches);
