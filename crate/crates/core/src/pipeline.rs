//! Per-frame flow: project → ground → depth clustering (lenient) → adaptive
//! Euclidean clustering → skeleton → normal field → degeneration degree →
//! depth clustering with the mapped β₀ → small-cluster removal.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::cloud::PointCloud;
use crate::clustering::{
    depth_cluster, euclidean_cluster, filter_small_clusters, ClusterLabeling, DepthClusterParams,
};
use crate::config::PipelineConfig;
use crate::degeneration::{analyze, extract_normal_field, DegenerationReport};
use crate::error::Result;
use crate::ground::{classify_ground, GroundMask};
use crate::range_image::RangeImage;
use crate::skeleton::{extract_skeleton, SkeletonMask};

fn ms<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

/// Wall-clock time per stage; serialized in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    #[serde(serialize_with = "ms")]
    pub project: Duration,
    #[serde(serialize_with = "ms")]
    pub ground: Duration,
    #[serde(serialize_with = "ms")]
    pub depth_first: Duration,
    #[serde(serialize_with = "ms")]
    pub euclidean: Duration,
    #[serde(serialize_with = "ms")]
    pub skeleton: Duration,
    #[serde(serialize_with = "ms")]
    pub normals: Duration,
    #[serde(serialize_with = "ms")]
    pub degeneration: Duration,
    #[serde(serialize_with = "ms")]
    pub depth_final: Duration,
    #[serde(serialize_with = "ms")]
    pub total: Duration,
}

impl StageTimings {
    /// Both clustering passes of the skeleton stage.
    pub fn clustering(&self) -> Duration {
        self.depth_first + self.euclidean
    }

    /// Normal extraction plus the degree reduction.
    pub fn degeneration_stage(&self) -> Duration {
        self.normals + self.degeneration
    }

    pub fn named(&self) -> [(&'static str, Duration); 9] {
        [
            ("project", self.project),
            ("ground", self.ground),
            ("depth_first", self.depth_first),
            ("euclidean", self.euclidean),
            ("skeleton", self.skeleton),
            ("normals", self.normals),
            ("degeneration", self.degeneration),
            ("depth_final", self.depth_final),
            ("total", self.total),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_id: u64,
    pub image: RangeImage,
    pub ground: GroundMask,
    /// Depth clustering at the initial β₀.
    pub first_pass: ClusterLabeling,
    pub euclidean: ClusterLabeling,
    pub skeleton: SkeletonMask,
    pub report: DegenerationReport,
    /// Depth clustering at the dynamic β₀ after small-cluster removal.
    pub final_labels: ClusterLabeling,
    /// Surviving non-ground points, row-major pixel order.
    pub cleaned_cloud: PointCloud,
    /// Input indices of `cleaned_cloud`.
    pub cleaned_indices: Vec<usize>,
    /// Ground points, passed through untouched.
    pub ground_cloud: PointCloud,
    pub ground_indices: Vec<usize>,
    pub timings: StageTimings,
}

impl FrameResult {
    /// Valid non-ground returns dropped by the cleaning pass.
    pub fn removed_count(&self) -> usize {
        self.image.valid_count() - self.ground.count() - self.cleaned_indices.len()
    }
}

/// Per-frame knobs that are not part of the config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameOptions {
    pub frame_id: u64,
    /// Skip the degeneration mapping and clean with this β₀.
    pub forced_beta0: Option<f64>,
}

pub fn process_frame(cloud: &PointCloud, config: &PipelineConfig) -> Result<FrameResult> {
    process_frame_with(cloud, config, FrameOptions::default())
}

pub fn process_frame_with(
    cloud: &PointCloud,
    config: &PipelineConfig,
    opts: FrameOptions,
) -> Result<FrameResult> {
    let sensor = config.sensor.build()?;
    let start = Instant::now();
    let mut t = StageTimings::default();
    let mut lap = Instant::now();
    let mut tick = |slot: &mut Duration| {
        let now = Instant::now();
        *slot = now - lap;
        lap = now;
    };

    let image = RangeImage::project(cloud, &sensor)?;
    tick(&mut t.project);

    let ground = classify_ground(&image, &config.ground);
    tick(&mut t.ground);

    let first_pass = depth_cluster(
        &image,
        &ground,
        &DepthClusterParams::new(config.initial_beta0())?,
    )?;
    tick(&mut t.depth_first);

    let euclidean = euclidean_cluster(&image, &ground, &config.euclidean)?;
    tick(&mut t.euclidean);

    let skeleton = extract_skeleton(
        &euclidean,
        &first_pass,
        config.skeleton.min_euclidean_size,
        config.skeleton.min_depth_size,
    )?;
    tick(&mut t.skeleton);

    let features = extract_normal_field(&image, &skeleton, &config.normals)?;
    tick(&mut t.normals);

    let mut report = analyze(&features, &config.degeneration, opts.frame_id)?;
    if let Some(beta0) = opts.forced_beta0 {
        report.beta0_dynamic = beta0;
    }
    tick(&mut t.degeneration);

    let second = depth_cluster(
        &image,
        &ground,
        &DepthClusterParams::new(report.beta0_dynamic)?,
    )?;
    let final_labels = filter_small_clusters(&second, config.skeleton.min_depth_size);
    tick(&mut t.depth_final);

    let mut cleaned_indices = Vec::new();
    let mut ground_indices = Vec::new();
    for (idx, &pi) in image.point_indices().iter().enumerate() {
        if image.depths()[idx] <= 0.0 {
            continue;
        }
        if ground.as_slice()[idx] {
            ground_indices.push(pi as usize);
        } else if final_labels.labels()[idx] > 0 {
            cleaned_indices.push(pi as usize);
        }
    }
    let pick = |ix: &[usize]| ix.iter().map(|&i| cloud.points[i]).collect::<PointCloud>();
    let cleaned_cloud = pick(&cleaned_indices);
    let ground_cloud = pick(&ground_indices);
    t.total = start.elapsed();

    Ok(FrameResult {
        frame_id: opts.frame_id,
        image,
        ground,
        first_pass,
        euclidean,
        skeleton,
        report,
        final_labels,
        cleaned_cloud,
        cleaned_indices,
        ground_cloud,
        ground_indices,
        timings: t,
    })
}

/// Ordered per-frame results over a stream of frames. Frames that failed
/// to load, or failed to process, come back as inline errors.
pub struct SequenceResults<'a, I> {
    frames: I,
    config: &'a PipelineConfig,
    workers: usize,
    next_id: u64,
    ready: VecDeque<Result<FrameResult>>,
}

/// Processes frames independently, `config.pipeline.workers` at a time, and
/// yields results in input order.
pub fn process_sequence<I>(frames: I, config: &PipelineConfig) -> SequenceResults<'_, I::IntoIter>
where
    I: IntoIterator<Item = Result<PointCloud>>,
{
    SequenceResults {
        frames: frames.into_iter(),
        config,
        workers: config.pipeline.workers.max(1),
        next_id: 0,
        ready: VecDeque::new(),
    }
}

impl<I> Iterator for SequenceResults<'_, I>
where
    I: Iterator<Item = Result<PointCloud>>,
{
    type Item = Result<FrameResult>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.ready.is_empty() {
            let batch: Vec<(u64, Result<PointCloud>)> = self
                .frames
                .by_ref()
                .take(self.workers)
                .map(|f| {
                    let id = self.next_id;
                    self.next_id += 1;
                    (id, f)
                })
                .collect();
            if batch.is_empty() {
                return None;
            }
            let config = self.config;
            let run = |(id, frame): (u64, Result<PointCloud>)| {
                frame.and_then(|cloud| {
                    process_frame_with(
                        &cloud,
                        config,
                        FrameOptions {
                            frame_id: id,
                            forced_beta0: None,
                        },
                    )
                })
            };
            if self.workers == 1 {
                self.ready.extend(batch.into_iter().map(run));
            } else {
                let results: Vec<_> = std::thread::scope(|s| {
                    let handles: Vec<_> = batch
                        .into_iter()
                        .map(|item| s.spawn(move || run(item)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("frame worker panicked"))
                        .collect()
                });
                self.ready.extend(results);
            }
        }
        self.ready.pop_front()
    }
}
