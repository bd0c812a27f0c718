mod common;

use std::path::Path;

use common::toy_context;
use lhsynth::body_model::{forward, gen_toy_model, NUM_JOINTS};
use lhsynth::io::dataset::{Dataset, Manifest};
use lhsynth::io::predictions::Predictions;
use lhsynth::io::record::SampleMeta;
use lhsynth::lidar::{effective_window, raycast, LaserGrid, LaserGridConfig};
use lhsynth::masking::{apply_mask, MaskPlan};
use lhsynth::pipeline::{
    augment_dataset, evaluate, forced_sample, jitter_sweep, load_dataset_samples, synth_with, AugmentConfig,
    EvalOptions, GenConfig, SampleOutcome,
};
use lhsynth::rng::{stream, Stage};
use lhsynth::scene::{assemble_scene, make_ground, Placement, SceneConfig};

fn config(count: u64, workers: usize) -> GenConfig {
    GenConfig {
        count,
        seed: 7,
        workers,
        shard_size: 64,
        ..GenConfig::default()
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn worker_count_does_not_change_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_with(&toy_context(config(100, 1)), a.path()).unwrap();
    synth_with(&toy_context(config(100, 8)), b.path()).unwrap();
    let (x, y) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(x.len(), 3);
    assert_eq!(x, y);
}

#[test]
fn generated_sample_equals_manual_chaining() {
    let ctx = toy_context(config(20, 1));
    for index in 0..20 {
        let SampleOutcome::Generated { sample, .. } = ctx.generate(index).unwrap() else {
            panic!("sample {index} discarded");
        };
        let (pose_id, body) = ctx.pose_for(index);
        let accepted = (0..=ctx.cfg.max_redraws)
            .find_map(|a| {
                ctx.attempt(index, a, &body)
                    .unwrap()
                    .filter(|t| t.kept.len() >= ctx.cfg.min_points)
                    .map(|t| (a, t))
            })
            .unwrap();
        let (attempt, t) = accepted;
        let ground = make_ground(&body, &ctx.cfg.scene, &mut stream(7, index, Stage::Scene, attempt)).unwrap();
        let (beta, theta) = ctx.poses.get(pose_id as usize);
        let forced = forced_sample(
            &ctx.model,
            &ctx.grid,
            &beta,
            &theta,
            Some(&ground),
            t.scene.placement,
            &t.plan.masked_patches,
            ctx.cfg.r_keep,
            sample.meta,
        )
        .unwrap();
        assert_eq!(forced, sample, "sample {index}");
    }
}

#[test]
fn forced_sample_matches_module_calls() {
    let model = gen_toy_model(0);
    let grid = LaserGrid::new(LaserGridConfig::default()).unwrap();
    let beta = [0.3; 10];
    let mut theta = [0.0; 72];
    theta[2] = 0.8;
    theta[50] = -0.4;
    let body = forward(&model, &beta, &theta).unwrap();
    let ground = make_ground(&body, &SceneConfig::default(), &mut lhsynth::rng::seeded(3)).unwrap();
    let placement = Placement::polar(8.0, 2.5);
    let scene = assemble_scene(&body, Some(&ground), placement);
    let window = effective_window(&grid, &scene).unwrap();
    let cloud = raycast(&grid, &scene, &window);
    let masked = vec![0, 3, 5];
    let plan = MaskPlan::with_masked(window, 0.6, masked.clone()).unwrap();
    let kept = apply_mask(&cloud, &plan);
    let s = forced_sample(&model, &grid, &beta, &theta, Some(&ground), placement, &masked, 0.6, SampleMeta::default())
        .unwrap();
    assert_eq!(s.labels, kept.labels);
    assert_eq!(s.num_points(), kept.len());
    for (p, q) in s.points.iter().zip(&kept.points) {
        assert_eq!(*p, [q.x as f32, q.y as f32, q.z as f32]);
    }
    assert_eq!(s.meta.mask_patch_count, 3);
}

#[test]
fn unmasked_groundless_body_has_only_body_labels() {
    let model = gen_toy_model(0);
    let grid = LaserGrid::new(LaserGridConfig::default()).unwrap();
    let s = forced_sample(
        &model,
        &grid,
        &[0.0; 10],
        &[0.0; 72],
        None,
        Placement::polar(5.0, 0.7),
        &[],
        1.0,
        SampleMeta::default(),
    )
    .unwrap();
    assert!(s.num_points() > 100);
    assert!(s.labels.iter().all(|l| (*l as usize) < NUM_JOINTS));
}

#[test]
fn survival_at_ten_metres() {
    let mut cfg = config(1000, 0);
    cfg.scene.r_range = [10.0, 10.0];
    let ctx = toy_context(cfg);
    let mut survival = 0.0;
    for index in 0..1000 {
        let (_, body) = ctx.pose_for(index);
        let t = ctx.attempt(index, 0, &body).unwrap().unwrap();
        survival += t.kept.len() as f64 / t.cloud.len() as f64;
    }
    let mean = survival / 1000.0;
    assert!((mean - 0.6).abs() <= 0.04, "{mean}");
}

#[test]
fn identity_augment_copies_records() {
    let src = tempfile::tempdir().unwrap();
    let dst = tempfile::tempdir().unwrap();
    let (m, _) = synth_with(&toy_context(config(100, 0)), src.path()).unwrap();
    let out = augment_dataset(src.path(), dst.path(), &AugmentConfig::default()).unwrap();
    for f in &m.files {
        assert_eq!(std::fs::read(src.path().join(&f.file)).unwrap(), std::fs::read(dst.path().join(&f.file)).unwrap());
    }
    let strip = |m: &Manifest| Manifest { provenance: vec![], ..m.clone() };
    assert_eq!(strip(&out), strip(&m));
    assert_eq!(out.provenance.len(), 2);
    assert_eq!(out.provenance[1]["step"], "augment");

    let jittered = tempfile::tempdir().unwrap();
    let mut cfg = AugmentConfig::default();
    cfg.jitter.sigma = 0.02;
    cfg.clusters.n_clusters = 2;
    cfg.clusters.points_per_cluster = 5;
    augment_dataset(src.path(), jittered.path(), &cfg).unwrap();
    let a = Dataset::open(src.path()).unwrap().samples().unwrap();
    let b = Dataset::open(jittered.path()).unwrap().samples().unwrap();
    for ((_, x), (_, y)) in a.iter().zip(&b) {
        assert_eq!(y.num_points(), x.num_points() + 10);
        assert_eq!(&y.labels[..x.num_points()], &x.labels[..]);
        assert_eq!(y.joints, x.joints);
    }
}

#[test]
fn ground_truth_predictions_are_perfect() {
    let dir = tempfile::tempdir().unwrap();
    synth_with(&toy_context(config(50, 0)), dir.path()).unwrap();
    let samples = load_dataset_samples(dir.path()).unwrap();
    let mut preds = Predictions::new(NUM_JOINTS);
    for (id, s) in &samples {
        preds.insert(*id, s.joints.clone()).unwrap();
    }
    let r = evaluate(&samples, &preds, &EvalOptions::default()).unwrap();
    assert_eq!(r.metrics.mpjpe_mm, 0.0);
    assert_eq!((r.metrics.pck3, r.metrics.pck5), (1.0, 1.0));
    assert!(r.missing_ids.is_empty());
}

#[test]
fn jitter_sweep_error_grows_with_clip() {
    let dir = tempfile::tempdir().unwrap();
    synth_with(&toy_context(config(300, 0)), dir.path()).unwrap();
    let samples = load_dataset_samples(dir.path()).unwrap();
    let clips = lhsynth::augment::default_clip_sweep();
    let rows = jitter_sweep(&samples, 0.05, &clips, 1, &EvalOptions::default()).unwrap();
    assert_eq!(rows.len(), clips.len());
    for w in rows.windows(2) {
        assert!(w[1].mpjpe_mm >= w[0].mpjpe_mm, "{:?}", rows.iter().map(|r| r.mpjpe_mm).collect::<Vec<_>>());
    }
}
