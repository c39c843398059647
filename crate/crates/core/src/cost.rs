//! Occlusion modeling and the four-term placement cost.
//!
//! `total = λv·visibility + λr·readability + λha·hand_angle + λp·preference`
//!
//! * visibility: squared importance mass hidden by the label, over the
//!   importance norm times the hidden cell count;
//! * readability: distance of the label from the gaze ray over `d_max`,
//!   multiplied by the off-axis angle once it leaves the ±60° binocular field;
//! * hand angle: frame-weighted angle between each hand's forward direction
//!   and the direction from the hand to the label, over 360°;
//! * preference: distance to the user's pinned position over `d_max`.

use serde::{Deserialize, Serialize};

use crate::context::{frame_weights_of, ContextFrame, FrameWindow};
use crate::error::{Error, Result};
use crate::geometry::{angle_between, label_rotation, GridMask, UnitRotation, Vec3};
use crate::importance::{key_object_maps, ImportanceMap};
use crate::optimizer::{Evaluator, SearchSpace};
use crate::profile::{max_solution_distance, AnchoringSurface, KeyObject, Placement, CELL_SIZE};

/// Beyond this angle from the gaze, readability is scaled by the angle.
pub const BINOCULAR_HALF_ANGLE: f64 = 60.0;
/// Eye-to-plane distance below which a surface is treated as seen edge-on.
const COPLANAR_EPS: f64 = 1e-9;
/// Label hits closer to the eye than this are ignored.
const NEAR_EPS: f64 = 1e-12;
/// Slack on the far end of the eye-cell segment so cells lying on the label
/// itself count as covered.
const FAR_EPS: f64 = 1e-9;
const EDGE_EPS: f64 = 1e-12;

/// World extents of the rendered instruction panel, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub width: f64,
    pub height: f64,
}

impl Default for LabelSpec {
    fn default() -> Self {
        LabelSpec {
            width: 0.30,
            height: 0.12,
        }
    }
}

impl LabelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite()
            && self.width > 0.0
            && self.height.is_finite()
            && self.height > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "label extents must be positive, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub visibility: f64,
    pub readability: f64,
    pub hand_angle: f64,
    pub preference: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            visibility: 0.24,
            readability: 0.24,
            hand_angle: 0.24,
            preference: 0.28,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.visibility,
            self.readability,
            self.hand_angle,
            self.preference,
        ];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "cost weights must be >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// The four unweighted cost terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostComponents {
    pub c_v: f64,
    pub c_r: f64,
    pub c_ha: f64,
    pub c_p: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c_v: f64,
    pub c_r: f64,
    pub c_ha: f64,
    pub c_p: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn components(&self) -> CostComponents {
        CostComponents {
            c_v: self.c_v,
            c_r: self.c_r,
            c_ha: self.c_ha,
            c_p: self.c_p,
        }
    }
}

pub fn total_cost(c: CostComponents, w: &CostWeights) -> Result<CostBreakdown> {
    for (name, value) in [
        ("c_v", c.c_v),
        ("c_r", c.c_r),
        ("c_ha", c.c_ha),
        ("c_p", c.c_p),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidCostComponent { name, value });
        }
    }
    let total =
        w.visibility * c.c_v + w.readability * c.c_r + w.hand_angle * c.c_ha + w.preference * c.c_p;
    Ok(CostBreakdown {
        c_v: c.c_v,
        c_r: c.c_r,
        c_ha: c.c_ha,
        c_p: c.c_p,
        total,
    })
}

/// The label as a rectangle in world space.
#[derive(Clone, Copy, Debug)]
pub struct LabelQuad {
    pub center: Vec3,
    pub rotation: UnitRotation,
    pub half_width: f64,
    pub half_height: f64,
}

impl LabelQuad {
    pub fn new(
        surface: &AnchoringSurface,
        placement: &Placement,
        label: &LabelSpec,
        eye: Vec3,
    ) -> Result<Self> {
        let center = surface.cell_position(placement.cell());
        let rotation = label_rotation(surface, center, eye)?;
        Ok(LabelQuad {
            center,
            rotation,
            half_width: label.width / 2.0,
            half_height: label.height / 2.0,
        })
    }

    pub fn axes(&self) -> (Vec3, Vec3, Vec3) {
        (
            self.rotation.rotate(Vec3::X),
            self.rotation.rotate(Vec3::Y),
            self.rotation.rotate(Vec3::Z),
        )
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let (ax, ay, _) = self.axes();
        let (x, y) = (ax * self.half_width, ay * self.half_height);
        [
            self.center - x + y,
            self.center + x + y,
            self.center + x - y,
            self.center - x - y,
        ]
    }

    /// Whether the segment from `eye` to `target` passes through the label
    /// before (or at) reaching `target`.
    pub fn blocks(&self, eye: Vec3, target: Vec3) -> bool {
        let (ax, ay, n) = self.axes();
        self.blocks_with(eye, target, ax, ay, n)
    }

    fn blocks_with(&self, eye: Vec3, target: Vec3, ax: Vec3, ay: Vec3, n: Vec3) -> bool {
        let d = target - eye;
        let denom = d.dot(n);
        if denom == 0.0 {
            return false;
        }
        let s = (self.center - eye).dot(n) / denom;
        if !(s > NEAR_EPS && s <= 1.0 + FAR_EPS) {
            return false;
        }
        let local = eye + d * s - self.center;
        local.dot(ax).abs() <= self.half_width + EDGE_EPS
            && local.dot(ay).abs() <= self.half_height + EDGE_EPS
    }
}

/// Cell index range whose centers can fall in `[lo, hi]` along one axis.
fn center_range(lo: f64, hi: f64, cells: usize) -> Option<(usize, usize)> {
    let first = (lo / CELL_SIZE - 0.5).floor() - 1.0;
    let last = (hi / CELL_SIZE - 0.5).ceil() + 1.0;
    if last < 0.0 || first > (cells - 1) as f64 {
        return None;
    }
    Some((first.max(0.0) as usize, (last as usize).min(cells - 1)))
}

/// Candidate cells on `surface` that the label can hide: the bounding box of
/// the label's central projection from the eye, or the whole grid when the
/// projection is unbounded.
fn candidate_window(
    quad: &LabelQuad,
    eye: Vec3,
    surface: &AnchoringSurface,
) -> Option<((usize, usize), (usize, usize))> {
    let full = Some((
        (0, surface.grid_width() - 1),
        (0, surface.grid_height() - 1),
    ));
    let n = surface.normal();
    let eye_offset = surface.plane_distance(eye);
    let mut us = [0.0; 4];
    let mut vs = [0.0; 4];
    for (k, corner) in quad.corners().iter().enumerate() {
        let d = *corner - eye;
        let denom = d.dot(n);
        if denom == 0.0 {
            return full;
        }
        let t = -eye_offset / denom;
        if !(t > 0.0) {
            return full;
        }
        let p = eye + d * t - surface.top_left();
        us[k] = p.dot(surface.right_axis());
        vs[k] = -p.dot(surface.up_axis());
    }
    let (umin, umax) = us
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| {
            (a.min(*u), b.max(*u))
        });
    let (vmin, vmax) = vs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let rs = center_range(umin, umax, surface.grid_width())?;
    let cs = center_range(vmin, vmax, surface.grid_height())?;
    Some((rs, cs))
}

/// Occlusion mask of a single surface for a given label rectangle.
pub fn surface_occlusion(quad: &LabelQuad, eye: Vec3, surface: &AnchoringSurface) -> GridMask {
    let mut mask = GridMask::new(surface.grid_width(), surface.grid_height());
    if surface.plane_distance(eye).abs() < COPLANAR_EPS {
        return mask;
    }
    let Some(((r0, r1), (c0, c1))) = candidate_window(quad, eye, surface) else {
        return mask;
    };
    let (ax, ay, n) = quad.axes();
    for c in c0..=c1 {
        for r in r0..=r1 {
            let center = surface.cell_center(crate::geometry::Cell::new(r, c));
            if quad.blocks_with(eye, center, ax, ay, n) {
                mask.set(r, c, true);
            }
        }
    }
    mask
}

/// Per-surface occlusion masks (in `surfaces` order) for a label placed at
/// `a` and oriented toward `eye`.
pub fn occlusion_map(
    a: &Placement,
    label: &LabelSpec,
    eye: Vec3,
    surfaces: &[AnchoringSurface],
) -> Result<Vec<GridMask>> {
    let home = a.resolve(surfaces)?;
    let quad = LabelQuad::new(home, a, label, eye)?;
    Ok(surfaces
        .iter()
        .map(|s| surface_occlusion(&quad, eye, s))
        .collect())
}

/// Visibility cost over the concatenation of a key object's surfaces.
pub fn visibility_cost(occlusion: &[GridMask], maps: &[ImportanceMap]) -> Result<f64> {
    if occlusion.len() != maps.len() {
        return Err(Error::LengthMismatch {
            what: "importance maps",
            expected: occlusion.len(),
            got: maps.len(),
        });
    }
    let mut hidden = 0.0;
    let mut count = 0.0;
    let mut sq = 0.0;
    for (mask, map) in occlusion.iter().zip(maps) {
        if mask.width() != map.width
            || mask.height() != map.height
            || map.values.len() != mask.len()
        {
            return Err(Error::DimensionMismatch {
                surface: map.surface_id.clone(),
                detail: format!(
                    "mask {}x{}, map {}x{}",
                    mask.width(),
                    mask.height(),
                    map.width,
                    map.height
                ),
            });
        }
        for c in 0..mask.height() {
            for r in 0..mask.width() {
                let v = map.get(r, c);
                sq += v * v;
                if mask.get(r, c) {
                    hidden += v;
                    count += 1.0;
                }
            }
        }
    }
    let norm = sq.sqrt();
    if count == 0.0 || norm == 0.0 {
        return Ok(0.0);
    }
    Ok(hidden * hidden / (norm * count))
}

/// Distance from the label to the gaze ray over `d_max`, scaled by the
/// off-gaze angle in degrees when outside binocular vision.
pub fn readability_cost(p_a: Vec3, eye: Vec3, gaze: Vec3, d_max: f64) -> Result<f64> {
    let to_label = p_a - eye;
    if to_label.normalized().is_none() {
        return Err(Error::CoincidentPoints);
    }
    let gaze = gaze.normalized().ok_or(Error::InvalidDirection)?;
    let theta = angle_between(to_label, gaze)?;
    let k = if theta < BINOCULAR_HALF_ANGLE {
        1.0
    } else {
        theta
    };
    let perpendicular = (gaze * to_label.dot(gaze) - to_label).norm();
    Ok(k * perpendicular / d_max)
}

/// Angle in degrees between a hand's forward direction and the direction
/// from the palm to `p_a`. Untracked hands, and a label at the palm, give 0.
pub fn hand_angle(hand: &crate::context::HandSample, p_a: Vec3) -> f64 {
    if !hand.tracked {
        return 0.0;
    }
    angle_between(hand.forward, p_a - hand.palm).unwrap_or(0.0)
}

pub fn hand_angle_cost(frames: &[ContextFrame], weights: &[f64], p_a: Vec3) -> Result<f64> {
    if weights.len() != frames.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: frames.len(),
            got: weights.len(),
        });
    }
    Ok(frames
        .iter()
        .zip(weights)
        .map(|(f, w)| w * (hand_angle(&f.left, p_a) + hand_angle(&f.right, p_a)) / 360.0)
        .sum())
}

pub fn preference_cost(p_a: Vec3, preferred: Option<Vec3>, d_max: f64) -> f64 {
    match preferred {
        Some(p) => p_a.distance(p) / d_max,
        None => 0.0,
    }
}

/// Everything needed to score placements of one step on one key object.
#[derive(Clone, Debug)]
pub struct CostModel {
    space: SearchSpace,
    maps: Vec<ImportanceMap>,
    frames: Vec<ContextFrame>,
    frame_weights: Vec<f64>,
    eye: Vec3,
    gaze: Vec3,
    d_max: f64,
    label: LabelSpec,
    weights: CostWeights,
    preferred: Option<Vec3>,
}

impl CostModel {
    /// Builds the model from a frame window. The most recent frame supplies
    /// the eye position and gaze used for readability and occlusion.
    pub fn new(
        key_object: &KeyObject,
        window: &FrameWindow,
        weights: CostWeights,
        label: LabelSpec,
        preferred: Option<Vec3>,
    ) -> Result<Self> {
        let latest = window.latest().ok_or(Error::EmptyWindow)?;
        weights.validate()?;
        label.validate()?;
        let space = SearchSpace::new(key_object)?;
        let frames = window.frames().to_vec();
        let frame_weights = frame_weights_of(&frames)?;
        let maps = key_object_maps(&frames, &frame_weights, key_object)?;
        // Maps in search-space surface order.
        let maps = space
            .surfaces()
            .iter()
            .map(|s| {
                maps.iter()
                    .find(|m| m.surface_id == s.id())
                    .cloned()
                    .expect("one map per surface")
            })
            .collect();
        Ok(CostModel {
            eye: latest.eye,
            gaze: latest.gaze,
            d_max: max_solution_distance(key_object),
            space,
            maps,
            frames,
            frame_weights,
            label,
            weights,
            preferred,
        })
    }

    pub fn importance_maps(&self) -> &[ImportanceMap] {
        &self.maps
    }

    pub fn frame_weights(&self) -> &[f64] {
        &self.frame_weights
    }

    pub fn eye(&self) -> Vec3 {
        self.eye
    }

    pub fn gaze(&self) -> Vec3 {
        self.gaze
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn label(&self) -> &LabelSpec {
        &self.label
    }

    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }

    pub fn preferred(&self) -> Option<Vec3> {
        self.preferred
    }

    pub fn occlusion(&self, a: &Placement) -> Result<Vec<GridMask>> {
        occlusion_map(a, &self.label, self.eye, self.space.surfaces())
    }

    pub fn components(&self, a: &Placement) -> Result<CostComponents> {
        let surface = a.resolve(self.space.surfaces())?;
        let p_a = surface.cell_position(a.cell());
        let occlusion = self.occlusion(a)?;
        Ok(CostComponents {
            c_v: visibility_cost(&occlusion, &self.maps)?,
            c_r: readability_cost(p_a, self.eye, self.gaze, self.d_max)?,
            c_ha: hand_angle_cost(&self.frames, &self.frame_weights, p_a)?,
            c_p: preference_cost(p_a, self.preferred, self.d_max),
        })
    }

    pub fn cost(&self, a: &Placement) -> Result<CostBreakdown> {
        total_cost(self.components(a)?, &self.weights)
    }
}

impl Evaluator for CostModel {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, index: usize) -> Result<CostBreakdown> {
        self.cost(&self.space.placement(index))
    }

    fn pose(&self, index: usize) -> Result<(Vec3, UnitRotation)> {
        let cell = self.space.cell(index);
        let surface = self.space.surface_of(index);
        let p = surface.cell_position(cell);
        Ok((p, label_rotation(surface, p, self.eye)?))
    }
}
