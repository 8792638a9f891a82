use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use ambient_filter::clustering::{
    depth_cluster, euclidean_cluster, filter_small_clusters, fixed_euclidean_cluster,
    ClusterLabeling, DepthClusterParams,
};
use ambient_filter::eval::{cluster_box_iou, rmse, rpe};
use ambient_filter::ground::{classify_ground, GroundMask};
use ambient_filter::io::{
    list_scans, read_boxes, read_poses, read_scan, write_boxes, write_kitti_bin,
    write_labeled_cloud, write_pcd_labeled, write_rpe_csv, LabeledPoint,
};
use ambient_filter::pipeline::{process_frame, process_frame_with, process_sequence, FrameOptions};
use ambient_filter::skeleton::extract_skeleton;
use ambient_filter::synthetic::{generate_scene, SceneKind, SyntheticSceneSpec};
use ambient_filter::{PipelineConfig, PointCloud, RangeImage};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Ambient-aware LiDAR point-cloud filtering.
#[derive(Parser)]
#[command(name = "ambient-filter", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set euclidean.gamma=1.5`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for normal sampling and scene generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Project a scan onto the range image and report occupancy.
    Project {
        scan: PathBuf,
        /// Write the depth grid as CSV, one ring per line.
        #[arg(long)]
        depth_csv: Option<PathBuf>,
    },
    /// Cluster one scan with a single clusterer.
    Cluster {
        scan: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Euclidean)]
        method: Method,
        /// Depth-clustering threshold, degrees. Defaults to the first-pass value.
        #[arg(long)]
        beta0: Option<f64>,
        /// Joining distance of the fixed clusterer, meters.
        #[arg(long, default_value_t = 0.75)]
        eps: f64,
        /// Drop clusters smaller than this.
        #[arg(long, default_value_t = 1)]
        min_size: usize,
        /// Labeled PCD: ground 1, clusters id + 1.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the ambient skeleton of a scan.
    Skeleton {
        scan: PathBuf,
        /// Skeleton points as PCD, labeled with their Euclidean cluster id + 1.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degeneration report per scan, one JSON object per line.
    Degen {
        #[arg(required = true)]
        scans: Vec<PathBuf>,
    },
    /// Full pipeline over a scan file or a directory of scans.
    Filter {
        input: PathBuf,
        /// Receives one labeled PCD per frame and reports.jsonl.
        #[arg(long)]
        out_dir: PathBuf,
        /// Clean every frame with this threshold instead of the mapped one.
        #[arg(long)]
        beta0: Option<f64>,
    },
    /// Best point-set IoU of each ground-truth box against the clusters.
    EvalIou {
        scan: PathBuf,
        /// JSON list of boxes: center, dimensions, yaw, class.
        #[arg(long)]
        boxes: PathBuf,
        #[arg(long, value_enum, default_value_t = Clusterer::Euclidean)]
        clusterer: Clusterer,
        #[arg(long, default_value_t = 0.75)]
        eps: f64,
    },
    /// Relative pose error between two KITTI pose files.
    EvalRpe {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 1)]
        delta: usize,
        /// Per-frame errors as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also report the rotational RMSE.
        #[arg(long)]
        rotation: bool,
    },
    /// Ray-cast a synthetic scene.
    GenScene {
        #[arg(long, value_enum)]
        kind: Kind,
        /// `.bin` (KITTI) or `.pcd` (labeled with object id + 1, ground 1).
        #[arg(long)]
        out: PathBuf,
        /// Range noise σ, meters.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Scene parameter, e.g. `num_boxes=5`. Repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Ground-truth boxes as JSON.
        #[arg(long)]
        boxes_out: Option<PathBuf>,
    },
    /// Time process_frame and report per-stage p50/p95.
    Bench {
        /// Scan to time; a synthetic scene when omitted.
        scan: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Kind::Room)]
        kind: Kind,
        #[arg(short = 'n', long, default_value_t = 50)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Depth,
    Euclidean,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Clusterer {
    /// Adaptive Euclidean.
    Euclidean,
    /// Fixed-distance Euclidean with --eps.
    Fixed,
    /// Depth clustering at the first-pass threshold.
    Depth,
    /// The pipeline's cleaned output.
    Final,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Corridor,
    Room,
    WallPair,
    Clutter,
}

impl From<Kind> for SceneKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Corridor => SceneKind::Corridor,
            Kind::Room => SceneKind::Room,
            Kind::WallPair => SceneKind::WallPair,
            Kind::Clutter => SceneKind::Clutter,
        }
    }
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for o in &g.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = g.seed {
        cfg.normals.seed = seed;
    }
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// Projection and ground mask of one scan.
fn prepare(path: &Path, cfg: &PipelineConfig) -> Result<(RangeImage, GroundMask)> {
    let cloud = read_scan(path)?;
    let img = RangeImage::project(&cloud, &cfg.sensor.build()?)
        .with_context(|| format!("projecting {}", path.display()))?;
    let ground = classify_ground(&img, &cfg.ground);
    Ok((img, ground))
}

/// Ground as 1 and clusters as id + 1, other returns dropped.
fn labeled_points(
    img: &RangeImage,
    ground: &GroundMask,
    labels: &ClusterLabeling,
) -> Vec<LabeledPoint> {
    let g = ground.as_slice();
    img.depths()
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .filter_map(|(i, _)| {
            let label = if g[i] {
                1
            } else if labels.labels()[i] > 0 {
                labels.labels()[i] + 1
            } else {
                return None;
            };
            Some(LabeledPoint {
                xyz: img.points()[i],
                label,
            })
        })
        .collect()
}

fn cluster_summary(l: &ClusterLabeling) -> Value {
    let largest = l.cluster_sizes().values().copied().max().unwrap_or(0);
    json!({
        "method": format!("{:?}", l.method()),
        "clusters": l.num_clusters(),
        "labeled_points": l.labeled_count(),
        "largest_cluster": largest,
    })
}

fn cmd_project(cfg: &PipelineConfig, scan: &Path, depth_csv: Option<&Path>) -> Result<()> {
    let (img, ground) = prepare(scan, cfg)?;
    if let Some(p) = depth_csv {
        let mut w = BufWriter::new(File::create(p).with_context(|| p.display().to_string())?);
        for row in img.depths().chunks(img.cols()) {
            let line: Vec<String> = row.iter().map(|d| d.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
    }
    print_json(&json!({
        "rows": img.rows(),
        "cols": img.cols(),
        "valid_pixels": img.valid_count(),
        "occupancy": img.occupancy(),
        "ground_pixels": ground.count(),
        "stats": img.stats(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_cluster(
    cfg: &PipelineConfig,
    scan: &Path,
    method: Method,
    beta0: Option<f64>,
    eps: f64,
    min_size: usize,
    out: Option<&Path>,
) -> Result<()> {
    let (img, ground) = prepare(scan, cfg)?;
    let labels = match method {
        Method::Depth => depth_cluster(
            &img,
            &ground,
            &DepthClusterParams::new(beta0.unwrap_or(cfg.initial_beta0()))?,
        )?,
        Method::Euclidean => euclidean_cluster(&img, &ground, &cfg.euclidean)?,
        Method::Fixed => fixed_euclidean_cluster(&img, &ground, eps, cfg.euclidean.window)?,
    };
    let labels = filter_small_clusters(&labels, min_size);
    if let Some(p) = out {
        write_pcd_labeled(p, &labeled_points(&img, &ground, &labels))?;
    }
    let mut summary = cluster_summary(&labels);
    summary["ground_points"] = json!(ground.count());
    print_json(&summary)
}

fn cmd_skeleton(cfg: &PipelineConfig, scan: &Path, out: Option<&Path>) -> Result<()> {
    let (img, ground) = prepare(scan, cfg)?;
    let depth = depth_cluster(
        &img,
        &ground,
        &DepthClusterParams::new(cfg.initial_beta0())?,
    )?;
    let euclid = euclidean_cluster(&img, &ground, &cfg.euclidean)?;
    let skel = extract_skeleton(
        &euclid,
        &depth,
        cfg.skeleton.min_euclidean_size,
        cfg.skeleton.min_depth_size,
    )?;
    if let Some(p) = out {
        let pts: Vec<LabeledPoint> = skel
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| LabeledPoint {
                xyz: img.points()[i],
                label: euclid.labels()[i] + 1,
            })
            .collect();
        write_pcd_labeled(p, &pts)?;
    }
    print_json(&json!({
        "skeleton_points": skel.count(),
        "non_ground_points": img.valid_count() - ground.count(),
        "euclidean": cluster_summary(&euclid),
        "depth": cluster_summary(&depth),
    }))
}

fn cmd_degen(cfg: &PipelineConfig, scans: &[PathBuf]) -> Result<()> {
    let frames = scans.iter().map(|p| read_scan(p));
    let mut failed = 0;
    for (path, r) in scans.iter().zip(process_sequence(frames, cfg)) {
        match r {
            Ok(f) => println!("{}", json!({ "file": path, "report": f.report })),
            Err(e) => {
                failed += 1;
                println!("{}", json!({ "file": path, "error": e.to_string() }));
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} scans failed", scans.len());
    }
    Ok(())
}

fn cmd_filter(
    cfg: &PipelineConfig,
    input: &Path,
    out_dir: &Path,
    beta0: Option<f64>,
) -> Result<()> {
    let files: Vec<PathBuf> = if input.is_dir() {
        list_scans(input)?.into_iter().map(|s| s.path).collect()
    } else {
        vec![input.to_path_buf()]
    };
    if files.is_empty() {
        bail!("no .bin or .pcd scans in {}", input.display());
    }
    std::fs::create_dir_all(out_dir).with_context(|| out_dir.display().to_string())?;
    let report_path = out_dir.join("reports.jsonl");
    let mut reports = BufWriter::new(
        File::create(&report_path).with_context(|| report_path.display().to_string())?,
    );

    let results: Box<dyn Iterator<Item = ambient_filter::Result<_>>> = match beta0 {
        None => Box::new(process_sequence(files.iter().map(|p| read_scan(p)), cfg)),
        Some(b) => Box::new(files.iter().enumerate().map(move |(i, p)| {
            let opts = FrameOptions {
                frame_id: i as u64,
                forced_beta0: Some(b),
            };
            read_scan(p).and_then(|c| process_frame_with(&c, cfg, opts))
        })),
    };
    let (mut ok, mut failed, mut mu_sum) = (0usize, 0usize, 0.0);
    for (path, r) in files.iter().zip(results) {
        let line = match r {
            Ok(f) => {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("frame");
                let out = out_dir.join(format!("{stem}.pcd"));
                let written = write_labeled_cloud(&f, &out)?;
                ok += 1;
                mu_sum += f.report.mu;
                log::info!(
                    "{}: μ {:.3}, β₀ {:.2}°, kept {}",
                    path.display(),
                    f.report.mu,
                    f.report.beta0_dynamic,
                    written.clustered
                );
                json!({
                    "file": path,
                    "output": out,
                    "report": f.report,
                    "points": written,
                    "timings_ms": f.timings,
                })
            }
            Err(e) => {
                failed += 1;
                log::warn!("{}: {e}", path.display());
                json!({ "file": path, "error": e.to_string() })
            }
        };
        writeln!(reports, "{line}")?;
    }
    reports.flush()?;
    print_json(&json!({
        "frames": ok,
        "failed": failed,
        "mean_mu": if ok > 0 { Some(mu_sum / ok as f64) } else { None },
        "reports": report_path,
    }))?;
    if failed > 0 {
        bail!("{failed} of {} frames failed", files.len());
    }
    Ok(())
}

fn cmd_eval_iou(
    cfg: &PipelineConfig,
    scan: &Path,
    boxes: &Path,
    clusterer: Clusterer,
    eps: f64,
) -> Result<()> {
    let boxes = read_boxes(boxes)?;
    let cloud = read_scan(scan)?;
    let (img, labels) = match clusterer {
        Clusterer::Final => {
            let r = process_frame(&cloud, cfg)?;
            (r.image, r.final_labels)
        }
        other => {
            let img = RangeImage::project(&cloud, &cfg.sensor.build()?)?;
            let ground = classify_ground(&img, &cfg.ground);
            let l = match other {
                Clusterer::Euclidean => euclidean_cluster(&img, &ground, &cfg.euclidean)?,
                Clusterer::Fixed => {
                    fixed_euclidean_cluster(&img, &ground, eps, cfg.euclidean.window)?
                }
                _ => depth_cluster(
                    &img,
                    &ground,
                    &DepthClusterParams::new(cfg.initial_beta0())?,
                )?,
            };
            (img, l)
        }
    };
    print_json(&cluster_box_iou(&img, &labels, &boxes)?)
}

fn cmd_eval_rpe(
    est: &Path,
    gt: &Path,
    delta: usize,
    csv: Option<&Path>,
    rotation: bool,
) -> Result<()> {
    let entries = rpe(&read_poses(est)?, &read_poses(gt)?, delta)?;
    if let Some(p) = csv {
        write_rpe_csv(p, &entries)?;
    }
    let trans: Vec<f64> = entries.iter().map(|e| e.translation).collect();
    let mut out = json!({
        "pairs": entries.len(),
        "delta": delta,
        "rmse_translation_m": rmse(&trans)?,
        "max_translation_m": trans.iter().copied().fold(0.0, f64::max),
    });
    if rotation {
        let rot: Vec<f64> = entries.iter().map(|e| e.rotation_deg).collect();
        out["rmse_rotation_deg"] = json!(rmse(&rot)?);
    }
    print_json(&out)
}

fn scene_spec(
    cfg: &PipelineConfig,
    kind: Kind,
    seed: u64,
    noise: f64,
    params: &[String],
) -> Result<SyntheticSceneSpec> {
    let spec = SyntheticSceneSpec::new(kind.into(), cfg.sensor.build()?)
        .with_seed(seed)
        .with_noise(noise);
    if params.is_empty() {
        return Ok(spec);
    }
    let mut v = serde_json::to_value(&spec)?;
    for p in params {
        let (k, raw) = p
            .split_once('=')
            .with_context(|| format!("scene parameter {p:?} is not key=value"))?;
        let k = k.trim();
        if k == "sensor" || v.get(k).is_none() {
            bail!("unknown scene parameter {k:?}");
        }
        v[k] =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    }
    serde_json::from_value(v).context("scene parameters")
}

fn cmd_gen_scene(
    cfg: &PipelineConfig,
    seed: u64,
    kind: Kind,
    out: &Path,
    noise: f64,
    params: &[String],
    boxes_out: Option<&Path>,
) -> Result<()> {
    let scene = generate_scene(&scene_spec(cfg, kind, seed, noise, params)?)?;
    let is_pcd = out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pcd"));
    if is_pcd {
        let pts: Vec<LabeledPoint> = scene
            .cloud
            .points
            .iter()
            .zip(&scene.object_ids)
            .map(|(p, id)| LabeledPoint {
                xyz: p.xyz(),
                label: id + 1,
            })
            .collect();
        write_pcd_labeled(out, &pts)?;
    } else {
        write_kitti_bin(out, &scene.cloud)?;
    }
    if let Some(p) = boxes_out {
        write_boxes(p, &scene.boxes)?;
    }
    print_json(&json!({
        "points": scene.cloud.len(),
        "walls": scene.walls.len(),
        "boxes": scene.boxes.len(),
        "ground_plane": scene.ground_plane,
        "seed": seed,
    }))
}

fn percentile(sorted: &[Duration], q: f64) -> f64 {
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i].as_secs_f64() * 1e3
}

fn cmd_bench(
    cfg: &PipelineConfig,
    seed: u64,
    scan: Option<&Path>,
    kind: Kind,
    n: usize,
    warmup: usize,
    as_json: bool,
) -> Result<()> {
    if n == 0 {
        bail!("need at least one iteration");
    }
    let cloud: PointCloud = match scan {
        Some(p) => read_scan(p)?,
        None => generate_scene(&scene_spec(cfg, kind, seed, 0.01, &[])?)?.cloud,
    };
    for _ in 0..warmup {
        process_frame(&cloud, cfg)?;
    }
    let runs = (0..n)
        .map(|_| process_frame(&cloud, cfg).map(|r| r.timings))
        .collect::<ambient_filter::Result<Vec<_>>>()?;
    let stages: Vec<(&str, f64, f64)> = runs[0]
        .named()
        .iter()
        .enumerate()
        .map(|(k, (name, _))| {
            let mut d: Vec<Duration> = runs.iter().map(|t| t.named()[k].1).collect();
            d.sort();
            (*name, percentile(&d, 0.5), percentile(&d, 0.95))
        })
        .collect();
    if as_json {
        let v: serde_json::Map<String, Value> = stages
            .iter()
            .map(|(s, p50, p95)| (s.to_string(), json!({ "p50_ms": p50, "p95_ms": p95 })))
            .collect();
        return print_json(&json!({ "points": cloud.len(), "iterations": n, "stages": v }));
    }
    println!("{} points, {n} iterations", cloud.len());
    println!("{:<14} {:>9} {:>9}", "stage", "p50 ms", "p95 ms");
    for (s, p50, p95) in stages {
        println!("{s:<14} {p50:>9.3} {p95:>9.3}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let seed = cli.global.seed.unwrap_or(0);
    match cli.command {
        Command::Project { scan, depth_csv } => cmd_project(&cfg, &scan, depth_csv.as_deref()),
        Command::Cluster {
            scan,
            method,
            beta0,
            eps,
            min_size,
            out,
        } => cmd_cluster(&cfg, &scan, method, beta0, eps, min_size, out.as_deref()),
        Command::Skeleton { scan, out } => cmd_skeleton(&cfg, &scan, out.as_deref()),
        Command::Degen { scans } => cmd_degen(&cfg, &scans),
        Command::Filter {
            input,
            out_dir,
            beta0,
        } => cmd_filter(&cfg, &input, &out_dir, beta0),
        Command::EvalIou {
            scan,
            boxes,
            clusterer,
            eps,
        } => cmd_eval_iou(&cfg, &scan, &boxes, clusterer, eps),
        Command::EvalRpe {
            est,
            gt,
            delta,
            csv,
            rotation,
        } => cmd_eval_rpe(&est, &gt, delta, csv.as_deref(), rotation),
        Command::GenScene {
            kind,
            out,
            noise,
            params,
            boxes_out,
        } => cmd_gen_scene(&cfg, seed, kind, &out, noise, &params, boxes_out.as_deref()),
        Command::Bench {
            scan,
            kind,
            iterations,
            warmup,
            json,
        } => cmd_bench(&cfg, seed, scan.as_deref(), kind, iterations, warmup, json),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
