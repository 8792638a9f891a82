//! Shared fixtures and brute-force reference implementations.
#![allow(dead_code)]

use ambient_filter::clustering::{adaptive_threshold, beta};
use ambient_filter::ground::{classify_ground, GroundMask, GroundParams};
use ambient_filter::synthetic::{generate_scene, SceneKind, SyntheticScene, SyntheticSceneSpec};
use ambient_filter::{PipelineConfig, RangeImage, SensorModel};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

/// 16 rings × 900 columns.
pub fn scan_sensor() -> SensorModel {
    SensorModel::vlp16().with_num_cols(900).unwrap()
}

pub fn scan_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.apply_override("sensor.preset=vlp16").unwrap();
    cfg.apply_override("sensor.num_cols=900").unwrap();
    cfg
}

pub const KINDS: [SceneKind; 3] = [SceneKind::Corridor, SceneKind::Room, SceneKind::Clutter];

/// Seeded scene cycling corridor / room / clutter with a seed-dependent
/// range noise of 0, 1 or 3 cm.
pub fn random_scene(sensor: &SensorModel, seed: u64) -> SyntheticScene {
    let kind = KINDS[(seed % 3) as usize];
    let sigma = [0.0, 0.01, 0.03][((seed / 3) % 3) as usize];
    let spec = SyntheticSceneSpec::new(kind, sensor.clone())
        .with_seed(seed)
        .with_noise(sigma);
    generate_scene(&spec).unwrap()
}

pub fn random_scan(seed: u64) -> (RangeImage, GroundMask) {
    let sensor = scan_sensor();
    let scene = random_scene(&sensor, seed);
    let img = RangeImage::project(&scene.cloud, &sensor).unwrap();
    let ground = classify_ground(&img, &GroundParams::default());
    (img, ground)
}

pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Relabels a labeling by order of first appearance; 0 stays 0.
pub fn canonical(labels: &[u32]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            if l == 0 {
                0
            } else {
                let next = map.len() as u32 + 1;
                *map.entry(l).or_insert(next)
            }
        })
        .collect()
}

fn components(eligible: &[bool], uf: &mut UnionFind) -> Vec<u32> {
    let roots: Vec<u32> = (0..eligible.len())
        .map(|i| if eligible[i] { uf.find(i) as u32 + 1 } else { 0 })
        .collect();
    canonical(&roots)
}

fn eligible(img: &RangeImage, ground: &GroundMask) -> Vec<bool> {
    img.depths()
        .iter()
        .zip(ground.as_slice())
        .map(|(d, g)| *d > 0.0 && !g)
        .collect()
}

/// Angle between two nominal beams in degrees, via the dot product.
pub fn beam_alpha_deg(img: &RangeImage, a: usize, b: usize) -> f64 {
    let cols = img.cols();
    let u = img.sensor().beam_direction(a / cols, a % cols);
    let v = img.sensor().beam_direction(b / cols, b % cols);
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    dot.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Every unordered pixel pair within `w` rows and `w` circular columns.
fn window_pairs(rows: usize, cols: usize, w: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let a = r * cols + c;
            for rb in r.saturating_sub(w)..=(r + w).min(rows - 1) {
                for dc in 0..=2 * w {
                    let cb = (c + cols + dc - w) % cols;
                    let b = rb * cols + cb;
                    if b > a {
                        out.push((a, b));
                    }
                }
            }
        }
    }
    out
}

fn four_pairs(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let a = r * cols + c;
            out.push((a, r * cols + (c + 1) % cols));
            if r + 1 < rows {
                out.push((a, (r + 1) * cols + c));
            }
        }
    }
    out
}

/// Depth clustering by union-find over all 4-adjacent pairs, using `beta`.
pub fn brute_depth(img: &RangeImage, ground: &GroundMask, beta0: f64) -> Vec<u32> {
    let el = eligible(img, ground);
    let d = img.depths();
    let mut uf = UnionFind::new(el.len());
    for (a, b) in four_pairs(img.rows(), img.cols()) {
        if a == b || !el[a] || !el[b] {
            continue;
        }
        if beta(d[a], d[b], beam_alpha_deg(img, a, b)).unwrap() > beta0 {
            uf.union(a, b);
        }
    }
    components(&el, &mut uf)
}

/// Adaptive Euclidean clustering by union-find over all window pairs.
pub fn brute_euclid(img: &RangeImage, ground: &GroundMask, gamma: f64, window: usize) -> Vec<u32> {
    let el = eligible(img, ground);
    let d = img.depths();
    let p = img.points();
    let mut uf = UnionFind::new(el.len());
    for (a, b) in window_pairs(img.rows(), img.cols(), window) {
        if !el[a] || !el[b] {
            continue;
        }
        let d0 = adaptive_threshold(d[a].min(d[b]), beam_alpha_deg(img, a, b), gamma).unwrap();
        if dist(p[a], p[b]) < d0 {
            uf.union(a, b);
        }
    }
    components(&el, &mut uf)
}

/// Fixed-distance variant of [`brute_euclid`].
pub fn brute_fixed(img: &RangeImage, ground: &GroundMask, eps: f64, window: usize) -> Vec<u32> {
    let el = eligible(img, ground);
    let p = img.points();
    let mut uf = UnionFind::new(el.len());
    for (a, b) in window_pairs(img.rows(), img.cols(), window) {
        if el[a] && el[b] && dist(p[a], p[b]) < eps {
            uf.union(a, b);
        }
    }
    components(&el, &mut uf)
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// True when every cluster of `fine` lies inside one cluster of `coarse`
/// and `fine` labels nothing that `coarse` leaves unlabeled.
pub fn refines(fine: &[u32], coarse: &[u32]) -> bool {
    let mut owner = std::collections::HashMap::new();
    fine.iter().zip(coarse).all(|(&f, &c)| {
        if f == 0 {
            return true;
        }
        c != 0 && *owner.entry(f).or_insert(c) == c
    })
}

/// Angle between two lines through the origin, radians.
pub fn line_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (a, b) = (Vector3::from(a), Vector3::from(b));
    a.cross(&b).norm().atan2(a.dot(&b).abs())
}

/// Smallest-eigenvalue eigenvector of the full covariance, by nalgebra.
pub fn oracle_normal(points: &[[f64; 3]]) -> [f64; 3] {
    let n = points.len() as f64;
    let c: Vector3<f64> = points.iter().map(|p| Vector3::from(*p)).sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(*p) - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let i = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(i);
    [v[0], v[1], v[2]]
}

/// 25 points on a random 1 m plane patch within 30 m, with 1 cm normal noise.
/// Returns the points and the true unit normal.
pub fn noisy_plane(rng: &mut impl rand::Rng) -> (Vec<[f64; 3]>, [f64; 3]) {
    use rand_distr::{Distribution, Normal, UnitSphere};
    let noise = Normal::new(0.0, 0.01).unwrap();
    let normal: [f64; 3] = UnitSphere.sample(rng);
    let n = Vector3::from(normal);
    let u = n.cross(&Vector3::new(0.3, -0.5, 0.8)).normalize();
    let v = n.cross(&u);
    let center = Vector3::new(
        rng.random_range(-30.0..30.0),
        rng.random_range(-30.0..30.0),
        rng.random_range(-3.0..3.0),
    );
    let pts = (0..25)
        .map(|_| {
            let p = center
                + u * rng.random_range(-0.5..0.5)
                + v * rng.random_range(-0.5..0.5)
                + n * noise.sample(rng);
            [p.x, p.y, p.z]
        })
        .collect();
    (pts, normal)
}

/// Clutter with a near row of boxes standing 0.2 to 0.6 m apart (5 to 12 m
/// out) and a few car-sized boxes far out (70 to 110 m), 1 cm range noise.
pub fn near_far_scene(sensor: &SensorModel, seed: u64) -> SyntheticScene {
    use ambient_filter::synthetic::BoxPlacement;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut boxes = Vec::new();
    let r = rng.random_range(5.0..12.0);
    let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (radial, tangent) = ([az.cos(), az.sin()], [-az.sin(), az.cos()]);
    let mut along = 0.0;
    for _ in 0..4 {
        let size = [rng.random_range(0.5..1.5), rng.random_range(0.5..2.0), rng.random_range(0.8..2.0)];
        along += 0.5 * size[1];
        boxes.push(BoxPlacement {
            x: r * radial[0] + along * tangent[0],
            y: r * radial[1] + along * tangent[1],
            size,
            yaw: az,
        });
        along += 0.5 * size[1] + rng.random_range(0.2..0.6);
    }
    for _ in 0..4 {
        let r = rng.random_range(70.0..110.0);
        let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        boxes.push(BoxPlacement {
            x: r * az.cos(),
            y: r * az.sin(),
            size: [rng.random_range(3.5..4.5), rng.random_range(1.6..2.0), rng.random_range(1.4..1.8)],
            yaw: rng.random_range(0.0..std::f64::consts::PI),
        });
    }
    let mut spec = SyntheticSceneSpec::new(SceneKind::Clutter, sensor.clone())
        .with_seed(seed)
        .with_noise(0.01);
    spec.num_boxes = 0;
    spec.boxes = boxes;
    generate_scene(&spec).unwrap()
}

/// Ground-truth boxes grown by `margin` on every face, so that returns
/// displaced by range noise still count as members.
pub fn grown_boxes(scene: &SyntheticScene, margin: f64) -> Vec<ambient_filter::eval::LabeledBox> {
    scene
        .boxes
        .iter()
        .map(|b| {
            let mut g = b.clone();
            g.dimensions.iter_mut().for_each(|d| *d += 2.0 * margin);
            g
        })
        .collect()
}
