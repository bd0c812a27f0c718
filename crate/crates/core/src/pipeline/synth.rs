use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::to_f32;
use crate::body_model::{forward, BodyModel, PosedBody};
use crate::error::{Error, ErrorKind, Result};
use crate::io::dataset::{sha256_hex, DatasetWriter, Manifest, MAX_SHARD_RECORDS};
use crate::io::posedb::{load_pose_db, PoseDb};
use crate::io::record::{SampleMeta, SyntheticSample};
use crate::lidar::{effective_window, raycast, HitCloud, LaserGrid, LaserGridConfig};
use crate::masking::{apply_mask, plan_mask, raycast_unmasked, MaskPlan};
use crate::rng::{sample_seed, stream, Stage};
use crate::scene::{assemble_scene, place_scene, Ground, Placement, SceneConfig, SceneMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub body_model: PathBuf,
    /// Rows of shape (10) + pose (72); `.csv` or raw f32.
    pub pose_db: PathBuf,
    pub count: u64,
    pub seed: u64,
    pub scene: SceneConfig,
    pub grid: LaserGridConfig,
    pub r_keep: f64,
    /// Samples with fewer surviving points are redrawn.
    pub min_points: usize,
    /// Placement/mask redraws before a sample is discarded.
    pub max_redraws: u32,
    /// Generation aborts when more than this fraction is discarded.
    pub max_discard_rate: f64,
    pub shard_size: usize,
    /// Thread count; 0 uses all cores. Never affects output bytes.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            body_model: PathBuf::new(),
            pose_db: PathBuf::new(),
            count: 0,
            seed: 0,
            scene: SceneConfig::default(),
            grid: LaserGridConfig::default(),
            r_keep: 0.6,
            min_points: 24,
            max_redraws: 8,
            max_discard_rate: 0.5,
            shard_size: MAX_SHARD_RECORDS,
            workers: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Input("count must be at least 1".into()));
        }
        if !(self.r_keep > 0.0 && self.r_keep <= 1.0) {
            return Err(Error::Input(format!("r_keep {} must lie in (0, 1]", self.r_keep)));
        }
        if !(0.0..=1.0).contains(&self.max_discard_rate) {
            return Err(Error::Input("max_discard_rate must lie in [0, 1]".into()));
        }
        if !(1..=MAX_SHARD_RECORDS).contains(&self.shard_size) {
            return Err(Error::Input(format!("shard_size must lie in 1..={MAX_SHARD_RECORDS}")));
        }
        self.scene.validate()
    }
}

/// First 16 bytes of SHA-256 over the canonical config JSON (without input
/// paths) followed by the body model and pose database digests.
pub fn config_hash(cfg: &GenConfig, body_digest: &str, pose_digest: &str) -> Result<[u8; 16]> {
    let mut value = serde_json::to_value(cfg)?;
    if let Some(map) = value.as_object_mut() {
        map.remove("body_model");
        map.remove("pose_db");
    }
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&value)?);
    h.update(body_digest.as_bytes());
    h.update(pose_digest.as_bytes());
    Ok(h.finalize()[..16].try_into().unwrap())
}

/// Immutable state shared by all workers.
pub struct SynthContext {
    pub cfg: GenConfig,
    pub model: BodyModel,
    pub poses: PoseDb,
    pub grid: LaserGrid,
    pub hash: [u8; 16],
    body_digest: String,
    pose_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    Generated {
        sample: SyntheticSample,
        attempts: u32,
        rays_cast: usize,
    },
    Discarded {
        rays_cast: usize,
    },
}

impl SynthContext {
    pub fn load(cfg: &GenConfig) -> Result<Self> {
        let body_bytes = std::fs::read(&cfg.body_model).map_err(|e| Error::io(&cfg.body_model, e))?;
        let model = BodyModel::from_bytes(&body_bytes)?;
        let pose_bytes = std::fs::read(&cfg.pose_db).map_err(|e| Error::io(&cfg.pose_db, e))?;
        let poses = load_pose_db(&cfg.pose_db)?;
        Self::new(cfg.clone(), model, poses, sha256_hex(&body_bytes), sha256_hex(&pose_bytes))
    }

    /// Context from in-memory inputs. The digests stand in for the file
    /// contents in the config hash.
    pub fn new(cfg: GenConfig, model: BodyModel, poses: PoseDb, body_digest: String, pose_digest: String) -> Result<Self> {
        cfg.validate()?;
        let grid = LaserGrid::new(cfg.grid.clone())?;
        let hash = config_hash(&cfg, &body_digest, &pose_digest)?;
        Ok(Self {
            cfg,
            model,
            poses,
            grid,
            hash,
            body_digest,
            pose_digest,
        })
    }

    /// Config as recorded in the manifest.
    pub fn manifest_config(&self) -> Result<serde_json::Value> {
        let mut value = serde_json::to_value(&self.cfg)?;
        if let Some(map) = value.as_object_mut() {
            map.insert("body_model_sha256".into(), self.body_digest.clone().into());
            map.insert("pose_db_sha256".into(), self.pose_digest.clone().into());
        }
        Ok(value)
    }

    pub fn pose_for(&self, index: u64) -> (u32, PosedBody) {
        let mut rng = stream(self.cfg.seed, index, Stage::Pose, 0);
        let pose_id = rng.random_range(0..self.poses.len());
        let (beta, theta) = self.poses.get(pose_id);
        let body = forward(&self.model, &beta, &theta).expect("pose rows have validated dimensions");
        (pose_id as u32, body)
    }

    /// Scene and mask plan of one placement/mask draw. `None` when the scene
    /// falls outside the grid.
    fn draw(&self, index: u64, attempt: u32, body: &PosedBody) -> Result<Option<(SceneMesh, MaskPlan)>> {
        let seed = self.cfg.seed;
        let scene = place_scene(body, &self.cfg.scene, &mut stream(seed, index, Stage::Scene, attempt))?;
        let window = match effective_window(&self.grid, &scene) {
            Ok(w) if !w.is_empty() => w,
            Ok(_) => return Ok(None),
            Err(e) if e.kind() == ErrorKind::Degenerate => {
                log::debug!("sample {index} attempt {attempt}: {e}");
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        let plan = plan_mask(&window, self.cfg.r_keep, &mut stream(seed, index, Stage::Mask, attempt))?;
        Ok(Some((scene, plan)))
    }

    /// One placement/mask draw for sample `index` with the full pre-mask
    /// cast. `None` when the scene falls outside the grid.
    pub fn attempt(&self, index: u64, attempt: u32, body: &PosedBody) -> Result<Option<Attempt>> {
        let Some((scene, plan)) = self.draw(index, attempt, body)? else {
            return Ok(None);
        };
        let cloud = raycast(&self.grid, &scene, &plan.window);
        let kept = apply_mask(&cloud, &plan);
        Ok(Some(Attempt {
            scene,
            cloud,
            plan,
            kept,
        }))
    }

    /// Generates sample `index`; redraws placement and mask on sparse returns.
    /// Rays in masked patches are never cast.
    pub fn generate(&self, index: u64) -> Result<SampleOutcome> {
        let (pose_id, body) = self.pose_for(index);
        let mut rays_cast = 0;
        for attempt in 0..=self.cfg.max_redraws {
            let Some((scene, plan)) = self.draw(index, attempt, &body)? else { continue };
            let kept = raycast_unmasked(&self.grid, &scene, &plan);
            rays_cast += kept.rays_cast;
            if kept.len() >= self.cfg.min_points {
                let meta = SampleMeta {
                    seed: sample_seed(self.cfg.seed, index),
                    r: scene.placement.r as f32,
                    azimuth: scene.placement.azimuth as f32,
                    pose_id,
                    mask_patch_count: plan.masked_patches.len() as u32,
                    config_hash: self.hash,
                };
                return Ok(SampleOutcome::Generated {
                    sample: build_sample(&body, &scene, &kept, meta),
                    attempts: attempt + 1,
                    rays_cast,
                });
            }
        }
        log::debug!("sample {index} discarded after {} attempts", self.cfg.max_redraws + 1);
        Ok(SampleOutcome::Discarded { rays_cast })
    }
}

/// Intermediate products of one generation attempt.
#[derive(Debug, Clone)]
pub struct Attempt {
    pub scene: SceneMesh,
    /// Returns before masking.
    pub cloud: HitCloud,
    pub plan: MaskPlan,
    pub kept: HitCloud,
}

/// Sample record from a posed body, its scene and the surviving returns.
fn build_sample(body: &PosedBody, scene: &SceneMesh, kept: &HitCloud, meta: SampleMeta) -> SyntheticSample {
    let k = body.joints.len();
    let t = crate::body_model::Vec3::from(scene.placement.translation);
    let mut visibility = vec![0u8; k];
    for &l in &kept.labels {
        if (l as usize) < k {
            visibility[l as usize] = 1;
        }
    }
    SyntheticSample {
        points: kept.points.iter().map(to_f32).collect(),
        labels: kept.labels.clone(),
        joints: body.joints.iter().map(|j| to_f32(&(j + t))).collect(),
        visibility,
        meta,
    }
}

/// Sample for fully specified inputs, bypassing all random draws.
#[allow(clippy::too_many_arguments)]
pub fn forced_sample(
    model: &BodyModel,
    grid: &LaserGrid,
    beta: &[f64],
    theta: &[f64],
    ground: Option<&Ground>,
    placement: Placement,
    masked_patches: &[u32],
    r_keep: f64,
    meta: SampleMeta,
) -> Result<SyntheticSample> {
    let body = forward(model, beta, theta)?;
    let scene = assemble_scene(&body, ground, placement);
    let window = effective_window(grid, &scene)?;
    let cloud = raycast(grid, &scene, &window);
    let plan = MaskPlan::with_masked(window, r_keep, masked_patches.to_vec())?;
    let kept = apply_mask(&cloud, &plan);
    let meta = SampleMeta {
        mask_patch_count: plan.masked_patches.len() as u32,
        ..meta
    };
    Ok(build_sample(&body, &scene, &kept, meta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthReport {
    pub requested: u64,
    pub generated: u64,
    pub discarded: u64,
    pub redraws: u64,
    pub rays_cast: u64,
    /// Mean points per generated sample.
    pub mean_points: f64,
    pub elapsed_s: f64,
}

impl SynthReport {
    pub fn samples_per_second(&self) -> f64 {
        self.generated as f64 / self.elapsed_s.max(1e-9)
    }
}

/// Loads inputs named by `cfg` and writes the dataset to `out`.
pub fn synth(cfg: &GenConfig, out: &Path) -> Result<(Manifest, SynthReport)> {
    let ctx = SynthContext::load(cfg)?;
    synth_with(&ctx, out)
}

pub fn synth_with(ctx: &SynthContext, out: &Path) -> Result<(Manifest, SynthReport)> {
    let cfg = &ctx.cfg;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut writer = DatasetWriter::create(out, ctx.hash, cfg.shard_size)?;
    let max_discards = (cfg.max_discard_rate * cfg.count as f64).floor() as u64;
    let mut report = SynthReport {
        requested: cfg.count,
        generated: 0,
        discarded: 0,
        redraws: 0,
        rays_cast: 0,
        mean_points: 0.0,
        elapsed_s: 0.0,
    };
    let mut points = 0u64;
    let chunk = cfg.shard_size as u64;
    let mut begin = 0u64;
    while begin < cfg.count {
        let end = (begin + chunk).min(cfg.count);
        let outcomes: Vec<Result<SampleOutcome>> =
            pool.install(|| (begin..end).into_par_iter().map(|k| ctx.generate(k)).collect());
        for (k, outcome) in (begin..end).zip(outcomes) {
            match outcome.inspect_err(|e| log::error!("sample {k}: {e}"))? {
                SampleOutcome::Generated {
                    sample,
                    attempts,
                    rays_cast,
                } => {
                    writer.push(k, &sample)?;
                    report.generated += 1;
                    report.redraws += (attempts - 1) as u64;
                    report.rays_cast += rays_cast as u64;
                    points += sample.num_points() as u64;
                }
                SampleOutcome::Discarded { rays_cast } => {
                    report.discarded += 1;
                    report.rays_cast += rays_cast as u64;
                }
            }
        }
        if report.discarded > max_discards {
            return Err(Error::GenerationAborted(format!(
                "{} of {} samples discarded (limit {max_discards}); samples need at least {} points after \
                 masking; check r_range, r_keep and min_points",
                report.discarded, cfg.count, cfg.min_points
            )));
        }
        begin = end;
    }
    report.elapsed_s = start.elapsed().as_secs_f64();
    report.mean_points = points as f64 / report.generated.max(1) as f64;
    let provenance = vec![serde_json::json!({
        "step": "synth",
        "generated": report.generated,
        "discarded": report.discarded,
    })];
    let manifest = writer.finish(cfg.seed, ctx.manifest_config()?, provenance)?;
    log::info!(
        "generated {} samples ({} discarded, {} redraws) in {:.2}s: {:.1} samples/s, {:.3e} rays/s",
        report.generated,
        report.discarded,
        report.redraws,
        report.elapsed_s,
        report.samples_per_second(),
        report.rays_cast as f64 / report.elapsed_s.max(1e-9)
    );
    Ok((manifest, report))
}
