//! Spatial profile (key objects and their anchoring surfaces) and document
//! profile (ordered instruction steps), with JSON persistence.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cell, UnitRotation, Vec3};

/// Edge length of one grid cell, in meters.
pub const CELL_SIZE: f64 = 0.03;
pub const SCHEMA_VERSION: u32 = 1;
/// Lower bound for `d_max` so distance-normalized costs stay finite.
pub const MIN_SOLUTION_DISTANCE: f64 = 1e-6;

const UNIT_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Number of whole cells along an extent. The small slack keeps extents such
/// as 0.09 m from rounding down to two cells.
pub fn cells_along(extent: f64) -> usize {
    ((extent / CELL_SIZE + 1e-9).floor() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceDoc", into = "SurfaceDoc")]
pub struct AnchoringSurface {
    id: String,
    key_object_id: String,
    top_left: Vec3,
    right_axis: Vec3,
    up_axis: Vec3,
    normal: Vec3,
    width: f64,
    height: f64,
    orientation: Orientation,
    rotation: UnitRotation,
    grid_width: usize,
    grid_height: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceDoc {
    id: String,
    key_object_id: String,
    top_left: Vec3,
    right_axis: Vec3,
    up_axis: Vec3,
    normal: Vec3,
    width: f64,
    height: f64,
    orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<UnitRotation>,
}

impl From<AnchoringSurface> for SurfaceDoc {
    fn from(s: AnchoringSurface) -> Self {
        SurfaceDoc {
            id: s.id,
            key_object_id: s.key_object_id,
            top_left: s.top_left,
            right_axis: s.right_axis,
            up_axis: s.up_axis,
            normal: s.normal,
            width: s.width,
            height: s.height,
            orientation: s.orientation,
            rotation: Some(s.rotation),
        }
    }
}

impl TryFrom<SurfaceDoc> for AnchoringSurface {
    type Error = Error;

    fn try_from(d: SurfaceDoc) -> Result<Self> {
        validate_surface(&d, &format!("surface `{}`", d.id))
    }
}

fn check_unit(v: Vec3, path: String) -> Result<()> {
    if !v.is_finite() || (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::schema(
            path,
            format!("expected a unit vector, norm is {}", v.norm()),
        ));
    }
    Ok(())
}

fn validate_surface(d: &SurfaceDoc, at: &str) -> Result<AnchoringSurface> {
    if d.id.trim().is_empty() {
        return Err(Error::schema(format!("{at}.id"), "must not be empty"));
    }
    if !d.top_left.is_finite() {
        return Err(Error::schema(format!("{at}.top_left"), "must be finite"));
    }
    check_unit(d.right_axis, format!("{at}.right_axis"))?;
    check_unit(d.up_axis, format!("{at}.up_axis"))?;
    check_unit(d.normal, format!("{at}.normal"))?;
    let dot = d.right_axis.dot(d.up_axis);
    if dot.abs() > ORTHO_TOL {
        return Err(Error::schema(
            format!("{at}.up_axis"),
            format!("not orthogonal to right_axis (dot = {dot})"),
        ));
    }
    let expected = d.right_axis.cross(d.up_axis);
    if (expected - d.normal).norm() > ORTHO_TOL {
        return Err(Error::schema(
            format!("{at}.normal"),
            "must equal right_axis x up_axis",
        ));
    }
    for (name, v) in [("width", d.width), ("height", d.height)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::schema(
                format!("{at}.{name}"),
                format!("must be positive, got {v}"),
            ));
        }
    }
    let frame = UnitRotation::from_frame(d.right_axis, d.up_axis, d.normal);
    let rotation = match d.rotation {
        None => frame,
        Some(q) => {
            if (q.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::schema(
                    format!("{at}.rotation"),
                    format!("norm is {}", q.norm()),
                ));
            }
            let consistent = (q.rotate(Vec3::X) - d.right_axis).norm() <= ORTHO_TOL
                && (q.rotate(Vec3::Y) - d.up_axis).norm() <= ORTHO_TOL;
            if !consistent {
                return Err(Error::schema(
                    format!("{at}.rotation"),
                    "does not map the local X/Y axes onto right_axis/up_axis",
                ));
            }
            q
        }
    };
    Ok(AnchoringSurface {
        id: d.id.clone(),
        key_object_id: d.key_object_id.clone(),
        top_left: d.top_left,
        right_axis: d.right_axis,
        up_axis: d.up_axis,
        normal: d.normal,
        width: d.width,
        height: d.height,
        orientation: d.orientation,
        rotation,
        grid_width: cells_along(d.width),
        grid_height: cells_along(d.height),
    })
}

impl AnchoringSurface {
    /// Builds a surface from its top-left corner and in-plane axes. The
    /// normal and rotation are derived.
    #[allow(clippy::too_many_arguments)]
    pub fn from_axes(
        id: impl Into<String>,
        key_object_id: impl Into<String>,
        top_left: Vec3,
        right_axis: Vec3,
        up_axis: Vec3,
        width: f64,
        height: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        let doc = SurfaceDoc {
            id: id.into(),
            key_object_id: key_object_id.into(),
            top_left,
            right_axis,
            up_axis,
            normal: right_axis.cross(up_axis),
            width,
            height,
            orientation,
            rotation: None,
        };
        let at = format!("surface `{}`", doc.id);
        validate_surface(&doc, &at)
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    #[cfg(test)]
    pub(crate) fn set_orientation(&mut self, orientation: Orientation) {
        self.orientation = orientation;
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn key_object_id(&self) -> &str {
        &self.key_object_id
    }

    pub fn top_left(&self) -> Vec3 {
        self.top_left
    }

    pub fn right_axis(&self) -> Vec3 {
        self.right_axis
    }

    pub fn up_axis(&self) -> Vec3 {
        self.up_axis
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn rotation(&self) -> UnitRotation {
        self.rotation
    }

    /// Cells along the width (`W`).
    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    /// Cells along the height (`H`).
    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    pub fn cell_count(&self) -> usize {
        self.grid_width * self.grid_height
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.r < self.grid_width && cell.c < self.grid_height
    }

    /// World position of lattice point `(r, c)`:
    /// `top_left + 0.03·right·r − 0.03·up·c`. Accepts out-of-range and
    /// negative indices, which the neighbor search uses for attempts that
    /// leave the surface.
    pub fn lattice_point(&self, r: f64, c: f64) -> Vec3 {
        self.top_left + self.right_axis * (CELL_SIZE * r) - self.up_axis * (CELL_SIZE * c)
    }

    pub fn cell_position(&self, cell: Cell) -> Vec3 {
        self.lattice_point(cell.r as f64, cell.c as f64)
    }

    /// Center of the cell rectangle, used for occlusion tests.
    pub fn cell_center(&self, cell: Cell) -> Vec3 {
        self.lattice_point(cell.r as f64 + 0.5, cell.c as f64 + 0.5)
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let right = self.right_axis * self.width;
        let down = self.up_axis * -self.height;
        [
            self.top_left,
            self.top_left + right,
            self.top_left + right + down,
            self.top_left + down,
        ]
    }

    /// Signed distance from `p` to the surface plane along the normal.
    pub fn plane_distance(&self, p: Vec3) -> f64 {
        (p - self.top_left).dot(self.normal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyObject {
    pub id: String,
    pub display_name: String,
    pub surfaces: Vec<AnchoringSurface>,
}

impl KeyObject {
    pub fn surface(&self, id: &str) -> Option<&AnchoringSurface> {
        self.surfaces.iter().find(|s| s.id == id)
    }

    pub fn cell_count(&self) -> usize {
        self.surfaces.iter().map(AnchoringSurface::cell_count).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpatialProfileDoc", into = "SpatialProfileDoc")]
pub struct SpatialProfile {
    pub environment_name: String,
    key_objects: Vec<KeyObject>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpatialProfileDoc {
    schema_version: u32,
    cell_size: f64,
    environment_name: String,
    key_objects: Vec<KeyObjectDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyObjectDoc {
    id: String,
    display_name: String,
    surfaces: Vec<SurfaceDoc>,
}

impl From<SpatialProfile> for SpatialProfileDoc {
    fn from(p: SpatialProfile) -> Self {
        SpatialProfileDoc {
            schema_version: SCHEMA_VERSION,
            cell_size: CELL_SIZE,
            environment_name: p.environment_name,
            key_objects: p
                .key_objects
                .into_iter()
                .map(|k| KeyObjectDoc {
                    id: k.id,
                    display_name: k.display_name,
                    surfaces: k.surfaces.into_iter().map(SurfaceDoc::from).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<SpatialProfileDoc> for SpatialProfile {
    type Error = Error;

    fn try_from(d: SpatialProfileDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    d.schema_version
                ),
            ));
        }
        if (d.cell_size - CELL_SIZE).abs() > 1e-12 {
            return Err(Error::schema(
                "cell_size",
                format!("must be {CELL_SIZE}, got {}", d.cell_size),
            ));
        }
        let mut objects = Vec::with_capacity(d.key_objects.len());
        let mut object_ids = HashSet::new();
        let mut surface_ids = HashSet::new();
        for (i, k) in d.key_objects.iter().enumerate() {
            let at = format!("key_objects[{i}]");
            if k.id.trim().is_empty() {
                return Err(Error::schema(format!("{at}.id"), "must not be empty"));
            }
            if !object_ids.insert(k.id.clone()) {
                return Err(Error::schema(
                    format!("{at}.id"),
                    format!("duplicate key object id `{}`", k.id),
                ));
            }
            if k.surfaces.is_empty() {
                return Err(Error::schema(
                    format!("{at}.surfaces"),
                    "must contain at least one surface",
                ));
            }
            let mut surfaces = Vec::with_capacity(k.surfaces.len());
            for (j, s) in k.surfaces.iter().enumerate() {
                let sat = format!("{at}.surfaces[{j}]");
                if s.key_object_id != k.id {
                    return Err(Error::schema(
                        format!("{sat}.key_object_id"),
                        format!(
                            "`{}` does not match enclosing key object `{}`",
                            s.key_object_id, k.id
                        ),
                    ));
                }
                if !surface_ids.insert(s.id.clone()) {
                    return Err(Error::schema(
                        format!("{sat}.id"),
                        format!("duplicate surface id `{}`", s.id),
                    ));
                }
                surfaces.push(validate_surface(s, &sat)?);
            }
            objects.push(KeyObject {
                id: k.id.clone(),
                display_name: k.display_name.clone(),
                surfaces,
            });
        }
        Ok(SpatialProfile {
            environment_name: d.environment_name,
            key_objects: objects,
        })
    }
}

impl SpatialProfile {
    /// Assembles and validates a profile from already-built objects.
    pub fn new(environment_name: impl Into<String>, key_objects: Vec<KeyObject>) -> Result<Self> {
        let p = SpatialProfile {
            environment_name: environment_name.into(),
            key_objects,
        };
        // Re-run the document checks (ids, ownership, axes).
        SpatialProfile::try_from(SpatialProfileDoc::from(p))
    }

    pub fn key_objects(&self) -> &[KeyObject] {
        &self.key_objects
    }

    pub fn key_object(&self, id: &str) -> Result<&KeyObject> {
        self.key_objects
            .iter()
            .find(|k| k.id == id)
            .ok_or_else(|| Error::UnknownKeyObject(id.to_string()))
    }

    pub fn surface(&self, id: &str) -> Result<&AnchoringSurface> {
        self.key_objects
            .iter()
            .flat_map(|k| k.surfaces.iter())
            .find(|s| s.id == id)
            .ok_or_else(|| Error::UnknownSurface(id.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json_with_path(text)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn from_json_with_path<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // Validation errors already carry the field path in the message.
        let message = message
            .split(" at line ")
            .next()
            .unwrap_or(&message)
            .to_string();
        Error::schema(
            if path == "." {
                "<root>".to_string()
            } else {
                path
            },
            message,
        )
    })
}

pub(crate) fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("profile types always serialize");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstructionStep {
    pub index: usize,
    pub text: String,
    #[serde(default)]
    pub key_object_id: Option<String>,
    #[serde(default)]
    pub confidence: f64,
    #[serde(default)]
    pub preferred_position: Option<Vec3>,
}

impl InstructionStep {
    pub fn new(index: usize, text: impl Into<String>) -> Self {
        InstructionStep {
            index,
            text: text.into(),
            key_object_id: None,
            confidence: 0.0,
            preferred_position: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DocumentProfileDoc", into = "DocumentProfileDoc")]
pub struct DocumentProfile {
    pub title: String,
    pub(crate) steps: Vec<InstructionStep>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentProfileDoc {
    schema_version: u32,
    title: String,
    steps: Vec<InstructionStep>,
}

impl From<DocumentProfile> for DocumentProfileDoc {
    fn from(d: DocumentProfile) -> Self {
        DocumentProfileDoc {
            schema_version: SCHEMA_VERSION,
            title: d.title,
            steps: d.steps,
        }
    }
}

impl TryFrom<DocumentProfileDoc> for DocumentProfile {
    type Error = Error;

    fn try_from(d: DocumentProfileDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    d.schema_version
                ),
            ));
        }
        let doc = DocumentProfile {
            title: d.title,
            steps: d.steps,
        };
        doc.validate()?;
        Ok(doc)
    }
}

impl DocumentProfile {
    pub fn new(title: impl Into<String>, steps: Vec<InstructionStep>) -> Result<Self> {
        let doc = DocumentProfile {
            title: title.into(),
            steps,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn empty(title: impl Into<String>) -> Self {
        DocumentProfile {
            title: title.into(),
            steps: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            let at = format!("steps[{i}]");
            if s.index != i {
                return Err(Error::schema(
                    format!("{at}.index"),
                    format!("expected {i}, got {}", s.index),
                ));
            }
            if s.text.trim().is_empty() {
                return Err(Error::schema(format!("{at}.text"), "must not be empty"));
            }
            if !(0.0..=1.0).contains(&s.confidence) {
                return Err(Error::schema(
                    format!("{at}.confidence"),
                    format!("{} not in [0, 1]", s.confidence),
                ));
            }
            if let Some(p) = s.preferred_position {
                if !p.is_finite() {
                    return Err(Error::schema(
                        format!("{at}.preferred_position"),
                        "must be finite",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks that every tagged step names a key object of `spatial`.
    pub fn validate_against(&self, spatial: &SpatialProfile) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            if let Some(id) = &s.key_object_id {
                if spatial.key_object(id).is_err() {
                    return Err(Error::schema(
                        format!("steps[{i}].key_object_id"),
                        format!(
                            "`{id}` is not a key object of `{}`",
                            spatial.environment_name
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> &[InstructionStep] {
        &self.steps
    }

    pub fn step(&self, index: usize) -> Result<&InstructionStep> {
        self.steps.get(index).ok_or(Error::StepOutOfRange {
            index,
            len: self.steps.len(),
        })
    }

    pub fn step_mut(&mut self, index: usize) -> Result<&mut InstructionStep> {
        let len = self.steps.len();
        self.steps
            .get_mut(index)
            .ok_or(Error::StepOutOfRange { index, len })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn untagged(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.key_object_id.is_none())
            .map(|s| s.index)
            .collect()
    }

    pub(crate) fn reindex(&mut self) {
        for (i, s) in self.steps.iter_mut().enumerate() {
            s.index = i;
        }
    }

    pub fn key_objects_used(&self) -> BTreeSet<&str> {
        self.steps
            .iter()
            .filter_map(|s| s.key_object_id.as_deref())
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json_with_path(text)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// A candidate label position: cell `(r, c)` on surface `surface_id`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub surface_id: String,
    pub r: usize,
    pub c: usize,
}

impl Placement {
    pub fn new(surface_id: impl Into<String>, r: usize, c: usize) -> Self {
        Placement {
            surface_id: surface_id.into(),
            r,
            c,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell::new(self.r, self.c)
    }

    /// Resolves the surface and checks the indices against its grid.
    pub fn resolve<'a>(&self, surfaces: &'a [AnchoringSurface]) -> Result<&'a AnchoringSurface> {
        let s = surfaces
            .iter()
            .find(|s| s.id() == self.surface_id)
            .ok_or_else(|| Error::UnknownSurface(self.surface_id.clone()))?;
        if !s.contains(self.cell()) {
            return Err(Error::PlacementOutOfBounds {
                surface: s.id().to_string(),
                r: self.r,
                c: self.c,
                width: s.grid_width(),
                height: s.grid_height(),
            });
        }
        Ok(s)
    }
}

/// World position of a placement.
pub fn placement_world_position(a: &Placement, profile: &SpatialProfile) -> Result<Vec3> {
    let surface = profile.surface(&a.surface_id)?;
    if !surface.contains(a.cell()) {
        return Err(Error::PlacementOutOfBounds {
            surface: surface.id().to_string(),
            r: a.r,
            c: a.c,
            width: surface.grid_width(),
            height: surface.grid_height(),
        });
    }
    Ok(surface.cell_position(a.cell()))
}

/// Largest distance between any two corners of the object's surfaces,
/// clamped below by [`MIN_SOLUTION_DISTANCE`].
pub fn max_solution_distance(key_object: &KeyObject) -> f64 {
    let corners: Vec<Vec3> = key_object
        .surfaces
        .iter()
        .flat_map(|s| s.corners())
        .collect();
    let mut best = 0.0f64;
    for (i, a) in corners.iter().enumerate() {
        for b in &corners[i + 1..] {
            best = best.max(a.distance(*b));
        }
    }
    best.max(MIN_SOLUTION_DISTANCE)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Vertical surface in a z = const plane, right = +x, up = +y.
    pub(crate) fn flat_surface(
        id: &str,
        top_left: Vec3,
        width: f64,
        height: f64,
    ) -> AnchoringSurface {
        AnchoringSurface::from_axes(
            id,
            "obj",
            top_left,
            Vec3::X,
            Vec3::Y,
            width,
            height,
            Orientation::Vertical,
        )
        .unwrap()
    }

    fn object(surfaces: Vec<AnchoringSurface>) -> KeyObject {
        KeyObject {
            id: "obj".into(),
            display_name: "Object".into(),
            surfaces,
        }
    }

    #[test]
    fn grid_dims() {
        assert_eq!(cells_along(1.0), 33);
        assert_eq!(cells_along(0.09), 3);
        assert_eq!(cells_along(0.3), 10);
        assert_eq!(cells_along(0.001), 1);
        let s = flat_surface("s", Vec3::ZERO, 1.0, 0.5);
        assert_eq!((s.grid_width(), s.grid_height()), (33, 16));
        assert!(s.grid_width() as f64 * CELL_SIZE <= s.width() + CELL_SIZE);
    }

    #[test]
    fn world_position_formula() {
        let s = flat_surface("s", Vec3::ZERO, 1.0, 1.0);
        let profile = SpatialProfile::new("env", vec![object(vec![s])]).unwrap();
        let p = placement_world_position(&Placement::new("s", 0, 0), &profile).unwrap();
        assert_eq!(p, Vec3::ZERO);
        let p = placement_world_position(&Placement::new("s", 2, 1), &profile).unwrap();
        assert!((p - Vec3::new(0.06, -0.03, 0.0)).norm() < 1e-15);
        assert!(matches!(
            placement_world_position(&Placement::new("s", 33, 0), &profile),
            Err(Error::PlacementOutOfBounds { .. })
        ));
        assert!(matches!(
            placement_world_position(&Placement::new("nope", 0, 0), &profile),
            Err(Error::UnknownSurface(_))
        ));
    }

    #[test]
    fn last_cell_stays_within_one_cell_of_width() {
        let s = flat_surface("s", Vec3::ZERO, 0.5, 0.2);
        let p = s.cell_position(Cell::new(s.grid_width() - 1, 0));
        assert!(p.x <= s.width() + CELL_SIZE);
    }

    #[test]
    fn d_max_examples() {
        let unit = object(vec![flat_surface("a", Vec3::ZERO, 1.0, 1.0)]);
        assert!((max_solution_distance(&unit) - 2f64.sqrt()).abs() < 1e-12);
        let tiny = object(vec![flat_surface("a", Vec3::ZERO, 1e-9, 1e-9)]);
        assert_eq!(max_solution_distance(&tiny), MIN_SOLUTION_DISTANCE);
        let two = object(vec![
            flat_surface("a", Vec3::ZERO, 1.0, 1.0),
            flat_surface("b", Vec3::new(1.0, 0.0, 0.0), 1.0, 1.0),
        ]);
        assert!((max_solution_distance(&two) - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_orthogonal_axes_with_path() {
        let text = r#"{
          "schema_version": 1, "cell_size": 0.03, "environment_name": "t",
          "key_objects": [{"id": "o", "display_name": "O", "surfaces": [{
            "id": "s", "key_object_id": "o", "top_left": [0,0,0],
            "right_axis": [1,0,0], "up_axis": [0.6,0.8,0], "normal": [0,0,1],
            "width": 1, "height": 1, "orientation": "vertical"}]}]}"#;
        let err = SpatialProfile::from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("key_objects[0].surfaces[0].up_axis"), "{msg}");
    }

    #[test]
    fn rejects_wrong_cell_size_and_version() {
        let text = r#"{"schema_version": 1, "cell_size": 0.05, "environment_name": "t", "key_objects": []}"#;
        assert!(SpatialProfile::from_json(text)
            .unwrap_err()
            .to_string()
            .contains("cell_size"));
        let text = r#"{"schema_version": 2, "cell_size": 0.03, "environment_name": "t", "key_objects": []}"#;
        assert!(SpatialProfile::from_json(text)
            .unwrap_err()
            .to_string()
            .contains("schema_version"));
    }

    #[test]
    fn type_errors_carry_path() {
        let text = r#"{"schema_version": 1, "cell_size": 0.03, "environment_name": "t",
          "key_objects": [{"id": "o", "display_name": "O", "surfaces": [{"id": 3}]}]}"#;
        let msg = SpatialProfile::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("key_objects[0].surfaces[0]"), "{msg}");
    }

    #[test]
    fn minimal_round_trip() {
        let s = flat_surface("s", Vec3::new(0.1, 1.2, 0.5), 0.4, 0.3);
        let profile = SpatialProfile::new("env", vec![object(vec![s])]).unwrap();
        let text = profile.to_json();
        let back = SpatialProfile::from_json(&text).unwrap();
        assert_eq!(back, profile);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn document_checks() {
        let doc = DocumentProfile::new(
            "t",
            vec![InstructionStep::new(0, "a"), InstructionStep::new(2, "b")],
        );
        assert!(doc.unwrap_err().to_string().contains("steps[1].index"));
        let doc = DocumentProfile::new("t", vec![InstructionStep::new(0, "  ")]);
        assert!(doc.unwrap_err().to_string().contains("steps[0].text"));
        let mut step = InstructionStep::new(0, "x");
        step.key_object_id = Some("ghost".into());
        let doc = DocumentProfile::new("t", vec![step]).unwrap();
        let spatial = SpatialProfile::new(
            "env",
            vec![object(vec![flat_surface("s", Vec3::ZERO, 1.0, 1.0)])],
        )
        .unwrap();
        assert!(doc.validate_against(&spatial).is_err());
        let text = doc.to_json();
        assert_eq!(DocumentProfile::from_json(&text).unwrap().to_json(), text);
    }
}
