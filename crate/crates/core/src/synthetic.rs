//! Analytic scenes ray-cast through a [`SensorModel`].
//!
//! Every beam is cast along its nominal direction, so a noise-free scene
//! projects back onto exactly the pixel that produced it. Each return carries
//! the id of the surface it hit: [`GROUND_ID`] for the ground plane, then
//! walls, then boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::eval::LabeledBox;
use crate::sensor::SensorModel;

pub const GROUND_ID: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// Two long parallel walls along x.
    Corridor,
    /// Rectangular room with boxes inside.
    Room,
    /// A near wall in front of a wider, taller far wall, both facing the sensor.
    WallPair,
    /// Boxes scattered on open ground.
    Clutter,
}

impl std::str::FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corridor" => Ok(Self::Corridor),
            "room" => Ok(Self::Room),
            "wall-pair" => Ok(Self::WallPair),
            "clutter" => Ok(Self::Clutter),
            other => Err(Error::InvalidInput(format!("unknown scene kind {other:?}"))),
        }
    }
}

/// An explicitly placed box: center of the footprint, size, yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxPlacement {
    pub x: f64,
    pub y: f64,
    pub size: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub kind: SceneKind,
    pub sensor: SensorModel,
    /// Sensor height above the ground plane, meters.
    pub sensor_height: f64,
    /// Corridor/room extent along x; wall width for the wall pair.
    pub length: f64,
    /// Corridor/room extent along y.
    pub width: f64,
    pub wall_height: f64,
    /// Wall-pair depths, meters.
    pub near_depth: f64,
    pub far_depth: f64,
    /// Randomly placed boxes (room and clutter).
    pub num_boxes: usize,
    pub box_size_min: f64,
    pub box_size_max: f64,
    /// Clutter placement radius.
    pub clutter_radius: f64,
    /// Boxes placed as given, in addition to random ones.
    #[serde(default)]
    pub boxes: Vec<BoxPlacement>,
    pub include_ground: bool,
    /// Standard deviation of Gaussian range noise, meters.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSceneSpec {
    pub fn new(kind: SceneKind, sensor: SensorModel) -> Self {
        let mut s = Self {
            kind,
            sensor,
            sensor_height: 1.73,
            length: 200.0,
            width: 6.0,
            wall_height: 4.0,
            near_depth: 5.0,
            far_depth: 20.0,
            num_boxes: 0,
            box_size_min: 0.5,
            box_size_max: 2.5,
            clutter_radius: 30.0,
            boxes: Vec::new(),
            include_ground: true,
            noise_sigma: 0.0,
            seed: 0,
        };
        match kind {
            SceneKind::Corridor => {}
            SceneKind::Room => {
                s.length = 24.0;
                s.width = 24.0;
                s.wall_height = 8.0;
                s.num_boxes = 16;
            }
            SceneKind::WallPair => {
                s.length = 6.0;
                s.wall_height = 3.0;
            }
            SceneKind::Clutter => s.num_boxes = 25,
        }
        s
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("sensor_height", self.sensor_height),
            ("length", self.length),
            ("width", self.width),
            ("wall_height", self.wall_height),
            ("near_depth", self.near_depth),
            ("far_depth", self.far_depth),
            ("box_size_min", self.box_size_min),
            ("box_size_max", self.box_size_max),
            ("clutter_radius", self.clutter_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScene(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidScene(format!(
                "noise_sigma must be ≥ 0, got {}",
                self.noise_sigma
            )));
        }
        if self.box_size_min > self.box_size_max {
            return Err(Error::InvalidScene("box_size_min > box_size_max".into()));
        }
        if self.kind == SceneKind::WallPair && self.near_depth >= self.far_depth {
            return Err(Error::InvalidScene("near wall must be in front of far wall".into()));
        }
        Ok(())
    }
}

/// Vertical rectangle spanning segment `a → b` in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub z_min: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub cloud: PointCloud,
    /// Surface id per point: [`GROUND_ID`], then `1..=walls.len()`, then boxes.
    pub object_ids: Vec<u32>,
    pub walls: Vec<Wall>,
    pub boxes: Vec<LabeledBox>,
    /// Ground plane `[a, b, c, d]` with `ax + by + cz + d = 0`.
    pub ground_plane: [f64; 4],
}

impl SyntheticScene {
    pub fn box_id(&self, box_index: usize) -> u32 {
        (self.walls.len() + box_index + 1) as u32
    }
}

enum Surface {
    Wall(Wall),
    Box(LabeledBox),
}

pub fn generate_scene(spec: &SyntheticSceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ground_z = -spec.sensor_height;
    let top = ground_z + spec.wall_height;

    let mut walls = Vec::new();
    match spec.kind {
        SceneKind::Corridor | SceneKind::Room => {
            let (hx, hy) = (0.5 * spec.length, 0.5 * spec.width);
            walls.push(Wall { a: [-hx, hy], b: [hx, hy], z_min: ground_z, z_max: top });
            walls.push(Wall { a: [-hx, -hy], b: [hx, -hy], z_min: ground_z, z_max: top });
            if spec.kind == SceneKind::Room {
                walls.push(Wall { a: [hx, -hy], b: [hx, hy], z_min: ground_z, z_max: top });
                walls.push(Wall { a: [-hx, -hy], b: [-hx, hy], z_min: ground_z, z_max: top });
            }
        }
        SceneKind::WallPair => {
            let hw = 0.5 * spec.length;
            let far_hw = hw * spec.far_depth / spec.near_depth;
            walls.push(Wall {
                a: [spec.near_depth, -hw],
                b: [spec.near_depth, hw],
                z_min: ground_z,
                z_max: top,
            });
            walls.push(Wall {
                a: [spec.far_depth, -far_hw],
                b: [spec.far_depth, far_hw],
                z_min: ground_z,
                z_max: ground_z + spec.wall_height * spec.far_depth / spec.near_depth,
            });
        }
        SceneKind::Clutter => {}
    }

    let mut boxes: Vec<LabeledBox> = Vec::new();
    for b in &spec.boxes {
        boxes.push(LabeledBox::new(
            [b.x, b.y, ground_z + 0.5 * b.size[2]],
            b.size,
            b.yaw,
            "box",
        )?);
    }
    place_random_boxes(spec, &mut rng, &mut boxes, ground_z)?;
    for b in &boxes {
        if b.contains([0.0, 0.0, 0.0]) {
            return Err(Error::InvalidScene("sensor is inside a box".into()));
        }
    }
    if spec.kind == SceneKind::Room
        && (0.5 * spec.length <= spec.sensor.min_range() || 0.5 * spec.width <= spec.sensor.min_range())
    {
        return Err(Error::InvalidScene("sensor is inside a wall".into()));
    }

    let surfaces: Vec<Surface> = walls
        .iter()
        .copied()
        .map(Surface::Wall)
        .chain(boxes.iter().cloned().map(Surface::Box))
        .collect();

    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("sigma validated"))
    } else {
        None
    };
    let sensor = &spec.sensor;
    let mut points = Vec::new();
    let mut ids = Vec::new();
    for r in 0..sensor.num_rings() {
        for c in 0..sensor.num_cols() {
            let u = sensor.beam_direction(r, c);
            let mut best: Option<(f64, u32)> = None;
            if spec.include_ground && u[2] < 0.0 {
                best = Some((ground_z / u[2], GROUND_ID));
            }
            for (i, s) in surfaces.iter().enumerate() {
                let hit = match s {
                    Surface::Wall(w) => ray_wall(u, w),
                    Surface::Box(b) => ray_box(u, b),
                };
                if let Some(t) = hit {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, (i + 1) as u32));
                    }
                }
            }
            let Some((t, id)) = best else { continue };
            let t = match &noise {
                Some(n) => t + n.sample(&mut rng),
                None => t,
            };
            if t < sensor.min_range() || t > sensor.max_range() {
                continue;
            }
            points.push(Point::new(t * u[0], t * u[1], t * u[2], 0.5));
            ids.push(id);
        }
    }

    Ok(SyntheticScene {
        cloud: PointCloud::new(points),
        object_ids: ids,
        walls,
        boxes,
        ground_plane: [0.0, 0.0, 1.0, spec.sensor_height],
    })
}

fn place_random_boxes(
    spec: &SyntheticSceneSpec,
    rng: &mut ChaCha8Rng,
    boxes: &mut Vec<LabeledBox>,
    ground_z: f64,
) -> Result<()> {
    if spec.num_boxes == 0 {
        return Ok(());
    }
    let (xr, yr) = match spec.kind {
        SceneKind::Room => (0.5 * spec.length - 1.0, 0.5 * spec.width - 1.0),
        _ => (spec.clutter_radius, spec.clutter_radius),
    };
    if !(xr > 0.0 && yr > 0.0) {
        return Err(Error::InvalidScene("no floor area left for boxes".into()));
    }
    let radius = |b: &LabeledBox| 0.5 * b.dimensions[0].hypot(b.dimensions[1]);
    let mut placed = 0;
    let mut attempts = 0;
    while placed < spec.num_boxes {
        attempts += 1;
        if attempts > 1000 * spec.num_boxes {
            return Err(Error::InvalidScene(format!(
                "could not place {} non-overlapping boxes",
                spec.num_boxes
            )));
        }
        let size = [
            rng.random_range(spec.box_size_min..=spec.box_size_max),
            rng.random_range(spec.box_size_min..=spec.box_size_max),
            rng.random_range(spec.box_size_min..=spec.box_size_max),
        ];
        let x = rng.random_range(-xr..=xr);
        let y = rng.random_range(-yr..=yr);
        let yaw = rng.random_range(0.0..std::f64::consts::PI);
        let cand = LabeledBox::new([x, y, ground_z + 0.5 * size[2]], size, yaw, "box")?;
        let rc = radius(&cand);
        if x.hypot(y) < rc + 2.0 {
            continue;
        }
        if spec.kind == SceneKind::Room && (x.abs() + rc > 0.5 * spec.length || y.abs() + rc > 0.5 * spec.width) {
            continue;
        }
        let clear = boxes.iter().all(|b| {
            (b.center[0] - x).hypot(b.center[1] - y) > radius(b) + rc + 0.5
        });
        if clear {
            boxes.push(cand);
            placed += 1;
        }
    }
    Ok(())
}

/// Range to a wall along unit direction `u` from the origin.
fn ray_wall(u: [f64; 3], w: &Wall) -> Option<f64> {
    let e = [w.b[0] - w.a[0], w.b[1] - w.a[1]];
    // t·u_xy = a + s·e
    let det = u[0] * (-e[1]) - u[1] * (-e[0]);
    if det.abs() < 1e-15 {
        return None;
    }
    let t = (w.a[0] * (-e[1]) - w.a[1] * (-e[0])) / det;
    let s = (u[0] * w.a[1] - u[1] * w.a[0]) / det;
    if t <= 0.0 || !(0.0..=1.0).contains(&s) {
        return None;
    }
    let z = t * u[2];
    (z >= w.z_min && z <= w.z_max).then_some(t)
}

/// Entry range into an oriented box along `u` from the origin.
fn ray_box(u: [f64; 3], b: &LabeledBox) -> Option<f64> {
    let o = b.to_local([0.0, 0.0, 0.0]);
    let (s, c) = b.yaw.sin_cos();
    let d = [c * u[0] + s * u[1], -s * u[0] + c * u[1], u[2]];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        let h = 0.5 * b.dimensions[k];
        if d[k].abs() < 1e-15 {
            if o[k].abs() > h {
                return None;
            }
            continue;
        }
        let a = (-h - o[k]) / d[k];
        let bb = (h - o[k]) / d[k];
        t0 = t0.max(a.min(bb));
        t1 = t1.min(a.max(bb));
    }
    (t0 <= t1 && t0 > 0.0).then_some(t0)
}
