//! Importance maps: where on a surface the user's hands are working, seen
//! from the eye, softened by distance and blended over a frame window.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::context::{ContextFrame, HandSample};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, flood_fill, ray_cast_surface, Cell, GridMask, Ray, Vec3};
use crate::profile::{AnchoringSurface, KeyObject};

/// Per-surface grid of interaction importance in `[0, 1]`, stored with `r`
/// varying fastest (`values[c * width + r]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMap {
    pub surface_id: String,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ImportanceMap {
    pub fn zeros(surface: &AnchoringSurface) -> Self {
        ImportanceMap {
            surface_id: surface.id().to_string(),
            width: surface.grid_width(),
            height: surface.grid_height(),
            values: vec![0.0; surface.cell_count()],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[c * self.width + r]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Binary (P5) portable graymap, one byte per cell, rows along `c`.
    pub fn to_pgm(&self, comment: &str) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() + 64);
        out.extend_from_slice(b"P5\n");
        for line in comment.lines() {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend(
            self.values
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        out
    }
}

/// Cells covered by one hand as seen from `eye`: every joint is cast onto
/// the surface and the convex hull of the hits is filled. Joints that miss
/// the surface are dropped.
pub fn frame_footprint(hand: &HandSample, eye: Vec3, surface: &AnchoringSurface) -> GridMask {
    let mut mask = GridMask::new(surface.grid_width(), surface.grid_height());
    if !hand.tracked {
        return mask;
    }
    let mut hits: Vec<Cell> = Vec::with_capacity(hand.joints.len());
    for joint in &hand.joints {
        let Ok(ray) = Ray::through(eye, *joint) else {
            continue;
        };
        if let Some(cell) = ray_cast_surface(&ray, surface) {
            mask.set(cell.r, cell.c, true);
            hits.push(cell);
        }
    }
    let hull = convex_hull(&hits);
    flood_fill(&mask, &hull)
}

/// `1 - e / max(e)` where `e` is the Euclidean distance (in cells) to the
/// nearest occupied cell. Empty masks give zeros, full masks give ones.
pub fn soften(mask: &GridMask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let n = mask.len();
    if !mask.any() {
        return vec![0.0; n];
    }
    // The nearest occupied cell to any free cell is always on the border of
    // the occupied set, so only border cells need to be scanned.
    let border: Vec<(i64, i64)> = mask
        .occupied()
        .filter(|p| {
            let (r, c) = (p.r, p.c);
            (r > 0 && !mask.get(r - 1, c))
                || (r + 1 < w && !mask.get(r + 1, c))
                || (c > 0 && !mask.get(r, c - 1))
                || (c + 1 < h && !mask.get(r, c + 1))
        })
        .map(|p| (p.r as i64, p.c as i64))
        .collect();
    let mut dist = vec![0.0f64; n];
    for c in 0..h {
        for r in 0..w {
            if mask.get(r, c) {
                continue;
            }
            let best = border
                .iter()
                .map(|&(br, bc)| {
                    let (dr, dc) = (br - r as i64, bc - c as i64);
                    dr * dr + dc * dc
                })
                .min()
                .expect("a non-empty, non-full mask has border cells");
            dist[c * w + r] = (best as f64).sqrt();
        }
    }
    let max = dist.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![1.0; n];
    }
    dist.into_iter().map(|e| 1.0 - e / max).collect()
}

/// Weighted blend of both hands' softened footprints over the frames,
/// min-max normalized. No tracked hand anywhere gives the zero map.
pub fn overall_map(
    frames: &[ContextFrame],
    weights: &[f64],
    surface: &AnchoringSurface,
) -> Result<ImportanceMap> {
    if weights.len() != frames.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: frames.len(),
            got: weights.len(),
        });
    }
    let mut map = ImportanceMap::zeros(surface);
    if !frames.iter().any(|f| f.left.tracked || f.right.tracked) {
        return Ok(map);
    }
    let mut softened: HashMap<GridMask, Vec<f64>> = HashMap::new();
    let mut acc = vec![0.0f64; map.values.len()];
    for (frame, &w) in frames.iter().zip(weights) {
        for hand in frame.hands() {
            if !hand.tracked {
                continue;
            }
            let fp = frame_footprint(hand, frame.eye, surface);
            let soft = softened.entry(fp).or_insert_with_key(soften);
            for (a, s) in acc.iter_mut().zip(soft.iter()) {
                *a += w * s;
            }
        }
    }
    map.values = crate::context::min_max_normalize(&acc);
    Ok(map)
}

/// One map per surface of `key_object`, in the object's surface order.
pub fn key_object_maps(
    frames: &[ContextFrame],
    weights: &[f64],
    key_object: &KeyObject,
) -> Result<Vec<ImportanceMap>> {
    key_object
        .surfaces
        .iter()
        .map(|s| overall_map(frames, weights, s))
        .collect()
}
