use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use lhsynth::augment::{default_clip_sweep, default_cluster_sweep, ClusterConfig, JitterConfig};
use lhsynth::body_model::{gen_toy_model, save_body_model, toy_pose_rows};
use lhsynth::heatmap::DecodeMode;
use lhsynth::io::posedb::{save_pose_db, PoseDb};
use lhsynth::io::predictions::{read_predictions, write_predictions};
use lhsynth::io::{read_heatmap_dump, write_heatmap_dump};
use lhsynth::lidar::LaserGridConfig;
use lhsynth::metrics::{AlignMode, SkeletonSpec};
use lhsynth::pipeline::{
    augment_dataset, baseline_predictions, cluster_sweep, decode_dump, encode_dataset, evaluate, inspect,
    jitter_sweep, load_dataset_samples, sweep_csv, synth, AugmentConfig, EvalOptions, GenConfig,
    HeatmapEncodeConfig,
};
use lhsynth::scene::SceneConfig;
use lhsynth::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "lhsynth", version, about = "Synthetic LiDAR human scans and pose evaluation")]
struct Cli {
    /// Log verbosity: -v info, -vv debug. RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Write a perturbed copy of a dataset.
    Augment(AugmentArgs),
    /// Evaluate predictions (or the nearest-joint baseline) against a dataset.
    Eval(EvalArgs),
    /// Encode ground-truth joints to heatmaps, or decode a heatmap dump.
    #[command(subcommand)]
    Heatmap(HeatmapCommand),
    /// Verify a dataset, print statistics and optionally export PLY files.
    Inspect(InspectArgs),
    /// Write the procedural body model and a pose database.
    ToyModel(ToyArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    body_model: Option<PathBuf>,
    #[arg(long)]
    pose_db: Option<PathBuf>,
    #[arg(long)]
    count: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    /// JSON config; keys present in the file override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.6)]
    r_keep: f64,
    #[arg(long, default_value_t = 24)]
    min_points: usize,
    #[arg(long, default_value_t = 8)]
    max_redraws: u32,
    #[arg(long, default_value_t = 4.0)]
    r_min: f64,
    #[arg(long, default_value_t = 20.0)]
    r_max: f64,
    #[arg(long)]
    no_ground: bool,
    /// Maximum ground tilt, radians.
    #[arg(long, default_value_t = 0.175)]
    ground_max_tilt: f64,
    #[arg(long, default_value_t = 2650)]
    n_azimuth: usize,
    #[arg(long, default_value_t = 64)]
    n_elevation: usize,
    #[arg(long, default_value_t = -25.0, allow_negative_numbers = true)]
    elevation_min_deg: f64,
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    elevation_max_deg: f64,
    #[arg(long, default_value_t = 4096)]
    shard_size: usize,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the source dataset's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Jitter standard deviation, metres.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Jitter clamp, metres.
    #[arg(long, default_value_t = f64::INFINITY)]
    clip: f64,
    #[arg(long, default_value_t = 0)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    points_per_cluster: usize,
    #[arg(long, default_value_t = 0.1)]
    cluster_sigma: f64,
    #[arg(long, default_value_t = 0.3)]
    placement_margin: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    predictions: Option<PathBuf>,
    /// Evaluate the built-in nearest-joint predictor.
    #[arg(long)]
    baseline: bool,
    /// Report path (JSON).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    save_predictions: Option<PathBuf>,
    /// Procrustes without scale.
    #[arg(long)]
    rigid: bool,
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0usize, 12])]
    torso_pair: Vec<usize>,
    #[arg(long, default_value_t = 600)]
    worst_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jitter_sweep_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    jitter_sigma: f64,
    #[arg(long, value_delimiter = ',')]
    clips: Option<Vec<f64>>,
    #[arg(long)]
    cluster_sweep_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    sweep_clusters: usize,
    #[arg(long, value_delimiter = ',')]
    cluster_sizes: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum HeatmapCommand {
    /// Encode ground-truth joints of a dataset into a heatmap dump.
    Encode {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, num_args = 3, default_values_t = [128usize, 128, 128])]
        bins: Vec<usize>,
        /// Target width in bins; 0 for one-hot.
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Fixed range for all samples: xmin xmax ymin ymax zmin zmax.
        #[arg(long, num_args = 6, allow_negative_numbers = true)]
        range: Option<Vec<f64>>,
    },
    /// Decode a heatmap dump into a predictions file.
    Decode {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Argmax)]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Argmax,
    SoftArgmax,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    data: PathBuf,
    /// Write the statistics as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ply_dir: Option<PathBuf>,
    /// Sample ids to export; all when omitted.
    #[arg(long, value_delimiter = ',')]
    ids: Vec<u64>,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    poses: usize,
    #[arg(long, value_enum, default_value_t = PoseFormat::Bin)]
    pose_format: PoseFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoseFormat {
    Bin,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Input | ErrorKind::Io => 2,
        ErrorKind::Format => 3,
        ErrorKind::Degenerate => 4,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => run_synth(a),
        Command::Augment(a) => run_augment(a),
        Command::Eval(a) => run_eval(a),
        Command::Heatmap(c) => run_heatmap(c),
        Command::Inspect(a) => run_inspect(a),
        Command::ToyModel(a) => run_toy(a),
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies the JSON file at `path` on top of `value`.
fn with_config_file<T: serde::Serialize + serde::de::DeserializeOwned>(value: T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(value) };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: Value = serde_json::from_str(&text)?;
    let mut merged = serde_json::to_value(value)?;
    merge(&mut merged, file);
    Ok(serde_json::from_value(merged)?)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let flags = GenConfig {
        body_model: a.body_model.unwrap_or_default(),
        pose_db: a.pose_db.unwrap_or_default(),
        count: a.count.unwrap_or(0),
        seed: a.seed,
        scene: SceneConfig {
            r_range: [a.r_min, a.r_max],
            ground_max_tilt: a.ground_max_tilt,
            ground_enabled: !a.no_ground,
            ..Default::default()
        },
        grid: LaserGridConfig {
            n_azimuth: a.n_azimuth,
            n_elevation: a.n_elevation,
            elevation_min_deg: a.elevation_min_deg,
            elevation_max_deg: a.elevation_max_deg,
            ..Default::default()
        },
        r_keep: a.r_keep,
        min_points: a.min_points,
        max_redraws: a.max_redraws,
        shard_size: a.shard_size,
        ..Default::default()
    };
    let mut cfg = with_config_file(flags, a.config.as_deref())?;
    cfg.workers = a.workers;
    if cfg.body_model.as_os_str().is_empty() || cfg.pose_db.as_os_str().is_empty() {
        return Err(Error::Input("--body-model and --pose-db are required".into()));
    }
    let (manifest, report) = synth(&cfg, &a.out)?;
    log::info!(
        "wrote {} samples to {} (config hash {}, {:.1} points per sample)",
        manifest.count,
        a.out.display(),
        manifest.config_hash,
        report.mean_points
    );
    Ok(())
}

fn run_augment(a: AugmentArgs) -> Result<()> {
    let flags = AugmentConfig {
        jitter: JitterConfig {
            sigma: a.sigma,
            clip: a.clip,
        },
        clusters: ClusterConfig {
            n_clusters: a.clusters,
            points_per_cluster: a.points_per_cluster,
            cluster_sigma: a.cluster_sigma,
            placement_margin: a.placement_margin,
        },
        seed: a.seed,
    };
    let cfg = with_config_file(flags, a.config.as_deref())?;
    let m = augment_dataset(&a.data, &a.out, &cfg)?;
    log::info!("wrote {} augmented samples to {}", m.count, a.out.display());
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let names = SkeletonSpec::default().joint_names;
    let flags = EvalOptions {
        skeleton: SkeletonSpec {
            joint_names: names,
            torso_pair: (a.torso_pair[0], a.torso_pair[1]),
        },
        align: if a.rigid { AlignMode::Rigid } else { AlignMode::Similarity },
        worst_n: a.worst_n,
    };
    let opts = with_config_file(flags, a.config.as_deref())?;
    let samples = load_dataset_samples(&a.data)?;
    let preds = match &a.predictions {
        Some(p) => read_predictions(p)?,
        None => baseline_predictions(&samples)?,
    };
    if let Some(p) = &a.save_predictions {
        write_predictions(&preds, p)?;
    }
    let report = evaluate(&samples, &preds, &opts)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_file(&a.out, json)?;
    log::info!(
        "{} instances: MPJPE {:.2} mm, PCK-3 {:.4}, PCK-5 {:.4}",
        report.metrics.n_instances,
        report.metrics.mpjpe_mm,
        report.metrics.pck3,
        report.metrics.pck5
    );
    if let Some(path) = &a.jitter_sweep_csv {
        let clips = a.clips.clone().unwrap_or_else(default_clip_sweep);
        let rows = jitter_sweep(&samples, a.jitter_sigma, &clips, a.seed, &opts)?;
        write_file(path, sweep_csv("clip_m", &rows))?;
    }
    if let Some(path) = &a.cluster_sweep_csv {
        let sizes = a.cluster_sizes.clone().unwrap_or_else(default_cluster_sweep);
        let base = ClusterConfig {
            n_clusters: a.sweep_clusters,
            ..Default::default()
        };
        let rows = cluster_sweep(&samples, &base, &sizes, a.seed, &opts)?;
        write_file(path, sweep_csv("points_per_cluster", &rows))?;
    }
    Ok(())
}

fn run_heatmap(c: HeatmapCommand) -> Result<()> {
    match c {
        HeatmapCommand::Encode {
            data,
            out,
            bins,
            sigma,
            range,
        } => {
            let cfg = HeatmapEncodeConfig {
                bins: [bins[0], bins[1], bins[2]],
                sigma,
                range: range.map(|r| [[r[0], r[1]], [r[2], r[3]], [r[4], r[5]]]),
            };
            let dump = encode_dataset(&data, &cfg)?;
            write_heatmap_dump(&dump, &out)?;
            log::info!("encoded {} samples", dump.entries.len());
        }
        HeatmapCommand::Decode { dump, out, mode } => {
            let dump = read_heatmap_dump(&dump)?;
            let mode = match mode {
                Mode::Argmax => DecodeMode::Argmax,
                Mode::SoftArgmax => DecodeMode::SoftArgmax,
            };
            write_predictions(&decode_dump(&dump, mode)?, &out)?;
        }
    }
    Ok(())
}

fn run_inspect(a: InspectArgs) -> Result<()> {
    let report = inspect(&a.data, a.ply_dir.as_deref(), &a.ids)?;
    println!("samples        {}", report.count);
    println!("shards         {}", report.shards);
    println!("config hash    {}", report.config_hash);
    println!("master seed    {}", report.master_seed);
    println!(
        "points/sample  min {} mean {:.1} max {}",
        report.points_min, report.points_mean, report.points_max
    );
    println!("mean range     {:.2} m", report.mean_range_m);
    println!("masked patches {:.1} mean", report.mean_masked_patches);
    if let Some(out) = &a.out {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        write_file(out, json)?;
    }
    Ok(())
}

fn run_toy(a: ToyArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.display().to_string(),
        source: e,
    })?;
    save_body_model(&gen_toy_model(a.seed), a.out.join("body.lbm"))?;
    let db = PoseDb::from_rows(toy_pose_rows(a.seed, a.poses))?;
    let name = match a.pose_format {
        PoseFormat::Bin => "poses.bin",
        PoseFormat::Csv => "poses.csv",
    };
    save_pose_db(&db, a.out.join(name))?;
    log::info!("wrote body.lbm and {name} to {}", a.out.display());
    Ok(())
}
