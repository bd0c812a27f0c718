mod common;

use common::{random_ray, random_soup, uv_sphere};
use lhsynth::body_model::{forward, gen_toy_model, Vec3};
use lhsynth::lidar::{
    brute_force_closest_hit, effective_window, max_plane_residual, raycast, raycast_brute_force, Bvh, LaserGrid,
};
use lhsynth::rng;
use lhsynth::scene::{assemble_scene, Placement};

#[test]
fn sphere_window_matches_angular_extent() {
    let grid = LaserGrid::default();
    let sphere = uv_sphere(Vec3::new(10.0, 0.0, 0.0), 1.0, 720, 360);
    let w = effective_window(&grid, &sphere).unwrap();
    let analytic = 2.0 * (0.1f64).asin() / grid.azimuth_step();
    assert!((84..=86).contains(&w.width()), "width {} analytic {analytic}", w.width());
    assert!((w.width() as f64 - analytic).abs() <= 1.0 + 1e-9);
}

#[test]
fn window_wraps_behind_the_sensor() {
    let grid = LaserGrid::default();
    let sphere = uv_sphere(Vec3::new(-10.0, 0.0, 0.0), 1.0, 180, 90);
    let w = effective_window(&grid, &sphere).unwrap();
    assert!(w.wraps());
    assert!((84..=86).contains(&w.width()));
    let hits = raycast(&grid, &sphere, &w);
    assert!(!hits.is_empty());
    assert!(hits.points.iter().all(|p| p.x < -8.9));
}

#[test]
fn bvh_matches_brute_force_on_random_soups() {
    for scene in 0..20u64 {
        let mut s = rng::seeded(scene);
        let tris = random_soup(&mut s, 50 + 45 * scene as usize / 2);
        let bvh = Bvh::build(&tris);
        for _ in 0..10_000 {
            let ray = random_ray(&mut s);
            let a = bvh.closest_hit(&ray);
            let b = brute_force_closest_hit(&tris, &ray);
            match (a, b) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert_eq!(a.face, b.face);
                    assert!((a.t - b.t).abs() <= 1e-9);
                }
                other => panic!("scene {scene}: {other:?}"),
            }
        }
    }
}

#[test]
fn body_hits_scale_with_distance() {
    let grid = LaserGrid::default();
    let body = forward(&gen_toy_model(0), &[0.0; 10], &[0.0; 72]).unwrap();
    let count = |r: f64| {
        let scene = assemble_scene(&body, None, Placement::polar(r, 0.3));
        let w = effective_window(&grid, &scene).unwrap();
        raycast(&grid, &scene, &w).len()
    };
    let (near, far) = (count(4.0), count(20.0));
    assert!(far > 0);
    assert!(near >= 4 * far, "near {near} far {far}");
}

#[test]
fn full_cast_agrees_with_brute_force_and_lies_on_faces() {
    let grid = LaserGrid::default();
    let body = forward(&gen_toy_model(1), &[0.5; 10], &[0.1; 72]).unwrap();
    let scene = assemble_scene(&body, None, Placement::polar(6.0, -2.0));
    let w = effective_window(&grid, &scene).unwrap();
    let fast = raycast(&grid, &scene, &w);
    let slow = raycast_brute_force(&grid, &scene, &w);
    assert_eq!(fast.hit_face, slow.hit_face);
    assert_eq!(fast.ray_cell, slow.ray_cell);
    assert!(max_plane_residual(&scene, &fast) < 1e-6);
    let labels_ok = fast.labels.iter().zip(&fast.hit_face).all(|(l, f)| *l == scene.face_label[*f as usize]);
    assert!(labels_ok);
}
