mod common;

use ambient_filter::degeneration::{
    analyze, degeneration_degree, extract_normal_field, pca_normal, DegenerationParams,
    NormalFeature, NormalFieldParams,
};
use ambient_filter::pipeline::{process_frame, process_frame_with, FrameOptions};
use ambient_filter::skeleton::SkeletonMask;
use ambient_filter::synthetic::{generate_scene, SceneKind, SyntheticSceneSpec};
use ambient_filter::{PipelineConfig, PixelCoord, RangeImage, SensorModel};
use common::{line_angle, oracle_normal};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn pca_normal_matches_truth_and_eigen_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_truth, mut worst_oracle) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (pts, normal) = common::noisy_plane(&mut rng);
        let est = pca_normal(&pts, 5).unwrap();
        assert!((Vector3::from(est).norm() - 1.0).abs() < 1e-9);
        let centroid: Vector3<f64> = pts.iter().map(|p| Vector3::from(*p)).sum::<Vector3<f64>>() / 25.0;
        assert!(Vector3::from(est).dot(&-centroid) >= 0.0, "normal must face the sensor");
        worst_truth = worst_truth.max(line_angle(est, normal).to_degrees());
        worst_oracle = worst_oracle.max(line_angle(est, oracle_normal(&pts)));
    }
    assert!(worst_truth < 2.0, "worst deviation from truth {worst_truth}°");
    assert!(worst_oracle < 1e-6, "worst deviation from oracle {worst_oracle} rad");
}

#[test]
fn uniform_normals_are_not_degenerate() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let features: Vec<NormalFeature> = (0..1000)
        .map(|_| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            NormalFeature {
                unit_normal: [t.cos(), t.sin(), 0.0],
                weight: 1.0,
                source_pixel: PixelCoord { row: 0, col: 0 },
                neighbor_count: 25,
                depth: 10.0,
            }
        })
        .collect();
    let d = degeneration_degree(&features, 10).unwrap();
    assert!((d.k - 1.0).abs() < 0.1, "k = {}", d.k);
    assert!(d.mu < 0.1, "mu = {}", d.mu);
}

/// Uniform-depth shell covering `rows × cols` of a 32-ring sensor.
fn shell(cols: usize, depth: f64) -> (RangeImage, SkeletonMask) {
    let sensor = SensorModel::uniform(32, 10.0, -20.0, cols, 120.0).unwrap();
    let n = sensor.num_rings() * cols;
    let img = RangeImage::from_depths(&sensor, &vec![depth; n]).unwrap();
    let skel = SkeletonMask::from_mask(32, cols, vec![true; n]).unwrap();
    (img, skel)
}

#[test]
fn sampling_follows_the_fraction() {
    let (img, skel) = shell(313, 15.0);
    assert_eq!(skel.count(), 10016);
    for seed in 0..5 {
        let params = NormalFieldParams { seed, ..Default::default() };
        let n = extract_normal_field(&img, &skel, &params).unwrap().len();
        assert!((850..=1150).contains(&n), "seed {seed}: {n} samples");
    }
}

#[test]
fn full_sampling_of_a_flat_patch() {
    // a 5×5 patch of a wall at x = 10 seen straight on
    let sensor = SensorModel::uniform(5, 0.8, -0.8, 900, 120.0).unwrap();
    let mut depths = vec![0.0; 5 * 900];
    for r in 0..5 {
        for c in [0usize, 1, 2, 898, 899] {
            let u = sensor.beam_direction(r, c);
            depths[r * 900 + c] = 10.0 / u[0];
        }
    }
    let img = RangeImage::from_depths(&sensor, &depths).unwrap();
    let skel = SkeletonMask::from_mask(5, 900, depths.iter().map(|d| *d > 0.0).collect()).unwrap();
    let params = NormalFieldParams { sample_fraction: 1.0, ..Default::default() };
    let f = extract_normal_field(&img, &skel, &params).unwrap();
    assert_eq!(f.len(), 25);
    for x in &f {
        assert!(line_angle(x.unit_normal, [-1.0, 0.0, 0.0]) < 1e-6);
        assert!(x.unit_normal[0] < 0.0);
    }
}

#[test]
fn isolated_skeleton_pixels_give_no_features() {
    let (img, _) = shell(64, 10.0);
    let mask: Vec<bool> = (0..img.len()).map(|i| (i / 64) % 3 == 0 && (i % 64) % 3 == 0).collect();
    let skel = SkeletonMask::from_mask(32, 64, mask).unwrap();
    let params = NormalFieldParams { sample_fraction: 1.0, ..Default::default() };
    assert!(extract_normal_field(&img, &skel, &params).unwrap().is_empty());
    let report = analyze(&[], &DegenerationParams::default(), 3).unwrap();
    assert!(report.fallback);
    assert_eq!(report.beta0_dynamic, 10.0);
}

fn scene_report(kind: SceneKind, seed: u64) -> ambient_filter::degeneration::DegenerationReport {
    let spec = SyntheticSceneSpec::new(kind, SensorModel::hdl64()).with_seed(seed);
    let scene = generate_scene(&spec).unwrap();
    process_frame(&scene.cloud, &PipelineConfig::default()).unwrap().report
}

#[test]
fn corridor_is_degenerate() {
    let r = scene_report(SceneKind::Corridor, 0);
    assert!(r.mu >= 0.8, "mu {}", r.mu);
    assert!(r.beta0_dynamic - 10.0 <= 5.0, "beta0 {}", r.beta0_dynamic);
    // the long walls run along x, so their normals, and the major axis, lie along y
    let dir = r.principal_direction.unwrap();
    assert!(dir[1].abs() > 0.99, "{dir:?}");
}

#[test]
fn cluttered_room_is_not() {
    let r = scene_report(SceneKind::Room, 0);
    assert!(r.mu <= 0.3, "mu {}", r.mu);
    assert!(60.0 - r.beta0_dynamic <= 10.0, "beta0 {}", r.beta0_dynamic);
    assert!(!r.fallback);
}

#[test]
fn reports_are_deterministic() {
    let a = scene_report(SceneKind::Clutter, 4);
    let b = scene_report(SceneKind::Clutter, 4);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn rotating_the_cloud_leaves_the_degree_unchanged() {
    // with every skeleton pixel sampled, a rotation by whole columns maps the
    // normal field onto itself rotated
    let cfg = {
        let mut c = common::scan_config();
        c.normals.sample_fraction = 1.0;
        c
    };
    let sensor = cfg.sensor.build().unwrap();
    let spec = SyntheticSceneSpec::new(SceneKind::Room, sensor.clone()).with_seed(9);
    let cloud = generate_scene(&spec).unwrap().cloud;
    let base = process_frame(&cloud, &cfg).unwrap().report;
    for shift in [1usize, 37, 225, 450] {
        let mut rotated = cloud.clone();
        rotated.rotate_z((shift as f64 * sensor.horizontal_resolution()).to_radians());
        let r = process_frame_with(&rotated, &cfg, FrameOptions::default()).unwrap().report;
        assert_eq!(r.num_features, base.num_features);
        assert!((r.mu - base.mu).abs() < 1e-6, "shift {shift}: {} vs {}", r.mu, base.mu);
        assert!((r.k - base.k).abs() < 1e-6 * base.k);
    }
}
