//! Generated benchmark scenes and the sample kitchen environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::{
    generate_synthetic_trace, ContextFrame, HandDwell, ScriptSegment, Target, TraceScript,
};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::profile::{
    AnchoringSurface, KeyObject, Orientation, SpatialProfile, CELL_SIZE, SCHEMA_VERSION,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneParams {
    pub min_cells: usize,
    pub max_cells: usize,
    pub min_surfaces: usize,
    pub max_surfaces: usize,
    pub frames: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            min_cells: 200,
            max_cells: 3000,
            min_surfaces: 1,
            max_surfaces: 4,
            frames: 90,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_surfaces >= 1
            && self.min_surfaces <= self.max_surfaces
            && self.min_cells <= self.max_cells
            && self.min_cells >= 9 * self.max_surfaces
            && self.frames >= 1;
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "inconsistent scene parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// One key object with a synthetic context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub key_object: KeyObject,
    pub frames: Vec<ContextFrame>,
    pub preferred: Option<Vec3>,
}

impl Scene {
    pub fn cell_count(&self) -> usize {
        self.key_object.cell_count()
    }
}

/// Splits `total` into `parts` integers of comparable size, each at least `min`.
fn partition(rng: &mut ChaCha8Rng, total: usize, parts: usize, min: usize) -> Vec<usize> {
    let shares: Vec<f64> = (0..parts).map(|_| rng.random_range(0.6..1.4)).collect();
    let sum: f64 = shares.iter().sum();
    let spare = total - min * parts;
    let mut out: Vec<usize> = shares
        .iter()
        .map(|s| min + (spare as f64 * s / sum).floor() as usize)
        .collect();
    let used: usize = out.iter().sum();
    out[parts - 1] += total - used;
    out
}

fn rotate_about_y(v: Vec3, radians: f64) -> Vec3 {
    let (s, c) = radians.sin_cos();
    Vec3::new(c * v.x + s * v.z, v.y, -s * v.x + c * v.z)
}

/// Vertical panels of a common height hinged edge to edge and bent toward
/// the viewer, with a 90-frame fixation context in front of it.
pub fn generate_scene(params: &SceneParams, seed: u64) -> Result<Scene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(params.min_surfaces..=params.max_surfaces);
    let target = rng.random_range(params.min_cells..=params.max_cells);
    // Panels share a height and stay roughly square, like appliance faces.
    let aspect = rng.random_range(0.5f64..2.0);
    let height = ((target as f64 / (k as f64 * aspect)).sqrt().round() as usize).max(3);
    let mut total_width = (target / height).max(3 * k);
    while total_width * height < params.min_cells {
        total_width += 1;
    }
    while total_width * height > params.max_cells && total_width > 3 * k {
        total_width -= 1;
    }
    let widths = partition(&mut rng, total_width, k, 3);

    let mut surfaces = Vec::with_capacity(k);
    let mut top_left = Vec3::new(0.0, height as f64 * CELL_SIZE, 0.0);
    let mut right = Vec3::X;
    for (i, w) in widths.iter().enumerate() {
        if i > 0 {
            right = rotate_about_y(right, rng.random_range(15.0f64..60.0).to_radians());
        }
        let s = AnchoringSurface::from_axes(
            format!("panel_{i}"),
            "object",
            top_left,
            right,
            Vec3::Y,
            *w as f64 * CELL_SIZE,
            height as f64 * CELL_SIZE,
            Orientation::Vertical,
        )?;
        top_left = top_left + right * (*w as f64 * CELL_SIZE);
        surfaces.push(s);
    }
    let key_object = KeyObject {
        id: "object".into(),
        display_name: "Generated object".into(),
        surfaces,
    };

    let corners: Vec<Vec3> = key_object
        .surfaces
        .iter()
        .flat_map(|s| s.corners())
        .collect();
    let centroid = corners.iter().fold(Vec3::ZERO, |a, c| a + *c) * (1.0 / corners.len() as f64);
    let eye = centroid
        + Vec3::new(
            rng.random_range(-0.2..0.2),
            rng.random_range(0.2..0.4),
            rng.random_range(-0.9..-0.5),
        );

    let pick = |rng: &mut ChaCha8Rng| Target::Surface {
        surface_id: format!("panel_{}", rng.random_range(0..k)),
        u: rng.random_range(0.1..0.9),
        v: rng.random_range(0.1..0.9),
    };
    let gaze: Vec<Target> = (0..3).map(|_| pick(&mut rng)).collect();
    let right_hand = Some(HandDwell {
        target: pick(&mut rng),
        standoff: 0.1,
        spread: 0.05,
    });
    let left_hand = rng.random_bool(0.5).then(|| HandDwell {
        target: pick(&mut rng),
        standoff: 0.1,
        spread: 0.05,
    });
    let script = TraceScript {
        schema_version: SCHEMA_VERSION,
        rate_hz: 90.0,
        start_time: 0.0,
        segments: vec![ScriptSegment {
            step: None,
            frames: params.frames,
            eye,
            gaze,
            dwell_frames: params.frames.div_ceil(3),
            gaze_noise_deg: 1.0,
            left_hand,
            right_hand,
            hand_noise: 0.005,
            reoptimize_at: Vec::new(),
        }],
    };
    let spatial = SpatialProfile::new("generated", vec![key_object.clone()])?;
    let trace = generate_synthetic_trace(&script, &spatial, rng.random())?;

    let preferred = rng.random_bool(0.5).then(|| {
        let s = &key_object.surfaces[rng.random_range(0..k)];
        let cell = crate::geometry::Cell::new(
            rng.random_range(0..s.grid_width()),
            rng.random_range(0..s.grid_height()),
        );
        s.cell_position(cell)
    });
    Ok(Scene {
        key_object,
        frames: trace.frames,
        preferred,
    })
}

fn vertical(
    id: &str,
    owner: &str,
    top_left: Vec3,
    width: f64,
    height: f64,
) -> Result<AnchoringSurface> {
    AnchoringSurface::from_axes(
        id,
        owner,
        top_left,
        Vec3::X,
        Vec3::Y,
        width,
        height,
        Orientation::Vertical,
    )
}

/// Horizontal surfaces run `r` along +x and `c` toward -z.
fn horizontal(
    id: &str,
    owner: &str,
    top_left: Vec3,
    width: f64,
    depth: f64,
) -> Result<AnchoringSurface> {
    AnchoringSurface::from_axes(
        id,
        owner,
        top_left,
        Vec3::X,
        Vec3::Z,
        width,
        depth,
        Orientation::Horizontal,
    )
}

/// Kitchen used by the bundled fixtures: the user stands near z = -0.5
/// facing +z, the back wall is at z = 0.6 and the counter top at y = 0.9.
pub fn sample_kitchen() -> Result<SpatialProfile> {
    let microwave = KeyObject {
        id: "microwave".into(),
        display_name: "Microwave".into(),
        surfaces: vec![
            vertical(
                "microwave_door",
                "microwave",
                Vec3::new(0.2, 1.2, 0.2),
                0.36,
                0.3,
            )?,
            vertical(
                "microwave_panel",
                "microwave",
                Vec3::new(0.56, 1.2, 0.2),
                0.12,
                0.3,
            )?,
        ],
    };
    let fridge = KeyObject {
        id: "fridge".into(),
        display_name: "Fridge".into(),
        surfaces: vec![
            vertical(
                "fridge_upper_door",
                "fridge",
                Vec3::new(2.0, 1.8, 0.0),
                0.69,
                0.6,
            )?,
            vertical(
                "fridge_lower_door",
                "fridge",
                Vec3::new(2.0, 1.2, 0.0),
                0.69,
                0.9,
            )?,
        ],
    };
    let sink = KeyObject {
        id: "sink".into(),
        display_name: "Sink".into(),
        surfaces: vec![
            vertical(
                "sink_backsplash",
                "sink",
                Vec3::new(1.0, 1.5, 0.6),
                0.6,
                0.6,
            )?,
            horizontal(
                "sink_rim_left",
                "sink",
                Vec3::new(0.88, 0.9, 0.6),
                0.12,
                0.6,
            )?,
            horizontal(
                "sink_rim_right",
                "sink",
                Vec3::new(1.6, 0.9, 0.6),
                0.12,
                0.6,
            )?,
            horizontal(
                "sink_rim_front",
                "sink",
                Vec3::new(1.0, 0.9, 0.15),
                0.6,
                0.15,
            )?,
        ],
    };
    let countertop = KeyObject {
        id: "countertop".into(),
        display_name: "Countertop".into(),
        surfaces: vec![horizontal(
            "countertop_left",
            "countertop",
            Vec3::new(0.0, 0.9, 0.6),
            0.87,
            0.6,
        )?],
    };
    SpatialProfile::new("kitchen", vec![microwave, fridge, sink, countertop])
}
