//! User context: gaze and hand samples, the rolling frame window, per-frame
//! weights, JSONL trace persistence, and a scripted trace generator that
//! stands in for headset telemetry.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, Vec3};
use crate::profile::{SpatialProfile, SCHEMA_VERSION};

/// Joints reported per tracked hand.
pub const HAND_JOINTS: usize = 15;
/// About one second of frames at the headset's 90 Hz.
pub const DEFAULT_WINDOW: usize = 90;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandSample {
    pub tracked: bool,
    #[serde(default)]
    pub joints: Vec<Vec3>,
    pub palm: Vec3,
    pub forward: Vec3,
}

impl HandSample {
    pub fn untracked() -> Self {
        HandSample {
            tracked: false,
            joints: Vec::new(),
            palm: Vec3::ZERO,
            forward: Vec3::Z,
        }
    }

    pub fn tracked(joints: Vec<Vec3>, palm: Vec3, forward: Vec3) -> Self {
        HandSample {
            tracked: true,
            joints,
            palm,
            forward,
        }
    }

    fn validate(&self, at: &str) -> Result<()> {
        if self.tracked && self.joints.len() != HAND_JOINTS {
            return Err(Error::schema(
                format!("{at}.joints"),
                format!(
                    "tracked hand needs {HAND_JOINTS} joints, got {}",
                    self.joints.len()
                ),
            ));
        }
        if !self.tracked && !self.joints.is_empty() {
            return Err(Error::schema(
                format!("{at}.joints"),
                "untracked hand must not carry joints",
            ));
        }
        if self.tracked && self.forward.normalized().is_none() {
            return Err(Error::schema(
                format!("{at}.forward"),
                "zero-length direction",
            ));
        }
        Ok(())
    }
}

/// Marker carried by a frame to request an extra re-optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMarker {
    Reoptimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextFrame {
    /// Seconds.
    pub t: f64,
    /// Midpoint between the eyes.
    pub eye: Vec3,
    /// Averaged forward gaze direction.
    pub gaze: Vec3,
    /// Angular gaze speeds in degrees per second.
    pub v_left: f64,
    pub v_right: f64,
    pub left: HandSample,
    pub right: HandSample,
    /// Instruction step active when the frame was recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<FrameMarker>,
}

impl ContextFrame {
    pub fn validate(&self) -> Result<()> {
        self.validate_at("frame")
    }

    fn validate_at(&self, at: &str) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::schema(format!("{at}.t"), "timestamp must be finite"));
        }
        for (name, v) in [("v_left", self.v_left), ("v_right", self.v_right)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::schema(
                    format!("{at}.{name}"),
                    format!("speed must be >= 0, got {v}"),
                ));
            }
        }
        if !self.eye.is_finite() {
            return Err(Error::schema(format!("{at}.eye"), "must be finite"));
        }
        if self.gaze.normalized().is_none() {
            return Err(Error::schema(format!("{at}.gaze"), "zero-length direction"));
        }
        self.left.validate(&format!("{at}.left"))?;
        self.right.validate(&format!("{at}.right"))
    }

    pub fn hands(&self) -> [&HandSample; 2] {
        [&self.left, &self.right]
    }
}

/// The most recent `capacity` frames, strictly increasing in time.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameWindow {
    frames: Vec<ContextFrame>,
    capacity: usize,
}

impl Default for FrameWindow {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW)
    }
}

impl FrameWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        FrameWindow {
            frames: Vec::with_capacity(capacity),
            capacity,
        }
    }

    /// Window over the last `capacity` frames of `frames`.
    pub fn from_frames(frames: &[ContextFrame], capacity: usize) -> Result<Self> {
        let mut w = Self::new(capacity);
        let start = frames.len().saturating_sub(capacity);
        for f in &frames[start..] {
            w.push(f.clone())?;
        }
        Ok(w)
    }

    /// Appends a frame, evicting the oldest one when full.
    pub fn push(&mut self, frame: ContextFrame) -> Result<Option<ContextFrame>> {
        frame.validate()?;
        if let Some(last) = self.frames.last() {
            if !(frame.t > last.t) {
                return Err(Error::OutOfOrderFrame {
                    previous: last.t,
                    got: frame.t,
                });
            }
        }
        let evicted = if self.frames.len() == self.capacity {
            Some(self.frames.remove(0))
        } else {
            None
        };
        self.frames.push(frame);
        Ok(evicted)
    }

    pub fn frames(&self) -> &[ContextFrame] {
        &self.frames
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn latest(&self) -> Option<&ContextFrame> {
        self.frames.last()
    }
}

/// Min-max normalization to [0, 1]. A constant input maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / span).collect()
}

/// Frame weights from gaze speeds and timestamps: slow gaze and recent
/// frames weigh more. Sums to 1.
pub fn frame_weights_from(v_left: &[f64], v_right: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    for (what, got) in [("v_left", v_left.len()), ("v_right", v_right.len())] {
        if got != n {
            return Err(Error::LengthMismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    let speed: Vec<f64> = v_left
        .iter()
        .zip(v_right)
        .map(|(l, r)| (l.abs() + r.abs()) / 2.0)
        .collect();
    let span = t[n - 1] - t[0];
    let time: Vec<f64> = if span > 0.0 {
        t.iter().map(|ti| (ti - t[0]) / span).collect()
    } else {
        vec![0.0; n]
    };
    let speed = min_max_normalize(&speed);
    let time = min_max_normalize(&time);
    let raw: Vec<f64> = speed
        .iter()
        .zip(&time)
        .map(|(s, t)| (1.0 - s) * t)
        .collect();
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) {
        return Ok(vec![1.0 / n as f64; n]);
    }
    Ok(raw.into_iter().map(|w| w / sum).collect())
}

pub fn frame_weights(window: &FrameWindow) -> Result<Vec<f64>> {
    frame_weights_of(window.frames())
}

pub fn frame_weights_of(frames: &[ContextFrame]) -> Result<Vec<f64>> {
    let v_left: Vec<f64> = frames.iter().map(|f| f.v_left).collect();
    let v_right: Vec<f64> = frames.iter().map(|f| f.v_right).collect();
    let t: Vec<f64> = frames.iter().map(|f| f.t).collect();
    frame_weights_from(&v_left, &v_right, &t)
}

/// A recorded or generated sequence of frames. Persisted as JSON lines, one
/// frame per line; the serde form is used on the wire.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub frames: Vec<ContextFrame>,
}

impl Trace {
    pub fn new(frames: Vec<ContextFrame>) -> Result<Self> {
        let trace = Trace { frames };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.frames.iter().enumerate() {
            f.validate_at(&format!("frames[{i}]"))?;
            if i > 0 && !(f.t > self.frames[i - 1].t) {
                return Err(Error::OutOfOrderFrame {
                    previous: self.frames[i - 1].t,
                    got: f.t,
                });
            }
        }
        Ok(())
    }

    /// One compact JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            out.push_str(&serde_json::to_string(f).expect("frames always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn read_jsonl(reader: impl BufRead, origin: &str) -> Result<Self> {
        let mut frames: Vec<ContextFrame> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let frame: ContextFrame =
                serde_json::from_str(&line).map_err(|e| Error::TraceLine {
                    path: origin.to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            frame.validate().map_err(|e| Error::TraceLine {
                path: origin.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if let Some(prev) = frames.last() {
                if !(frame.t > prev.t) {
                    return Err(Error::TraceLine {
                        path: origin.to_string(),
                        line: i + 1,
                        message: Error::OutOfOrderFrame {
                            previous: prev.t,
                            got: frame.t,
                        }
                        .to_string(),
                    });
                }
            }
            frames.push(frame);
        }
        Ok(Trace { frames })
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes(), "<memory>")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Where something is looked at or reached for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    /// A point on a named surface, given as fractions of its width and height
    /// measured from the top-left corner.
    Surface {
        surface_id: String,
        u: f64,
        v: f64,
    },
    Point {
        point: Vec3,
    },
}

impl Target {
    fn resolve(&self, spatial: &SpatialProfile) -> Result<Vec3> {
        match self {
            Target::Point { point } => Ok(*point),
            Target::Surface { surface_id, u, v } => {
                let s = spatial.surface(surface_id)?;
                Ok(
                    s.top_left() + s.right_axis() * (u * s.width())
                        - s.up_axis() * (v * s.height()),
                )
            }
        }
    }
}

fn default_standoff() -> f64 {
    0.12
}

fn default_spread() -> f64 {
    0.05
}

/// A hand hovering in front of a surface point, between it and the eye.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandDwell {
    pub target: Target,
    /// Distance from the surface toward the eye, meters.
    #[serde(default = "default_standoff")]
    pub standoff: f64,
    /// Radius of the joint fan around the palm, meters.
    #[serde(default = "default_spread")]
    pub spread: f64,
}

fn default_dwell() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptSegment {
    #[serde(default)]
    pub step: Option<usize>,
    pub frames: usize,
    pub eye: Vec3,
    /// Gaze targets visited in turn, `dwell_frames` frames each.
    pub gaze: Vec<Target>,
    #[serde(default = "default_dwell")]
    pub dwell_frames: usize,
    #[serde(default)]
    pub gaze_noise_deg: f64,
    #[serde(default)]
    pub left_hand: Option<HandDwell>,
    #[serde(default)]
    pub right_hand: Option<HandDwell>,
    #[serde(default)]
    pub hand_noise: f64,
    /// Frame offsets within the segment that carry a re-optimize marker.
    #[serde(default)]
    pub reoptimize_at: Vec<usize>,
}

fn default_rate() -> f64 {
    90.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceScript {
    pub schema_version: u32,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default)]
    pub start_time: f64,
    pub segments: Vec<ScriptSegment>,
}

impl TraceScript {
    pub fn from_json(text: &str) -> Result<Self> {
        crate::profile::from_json_with_path(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self, spatial: &SpatialProfile) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("unsupported version {}", self.schema_version),
            ));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::schema("rate_hz", "must be positive"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let at = format!("segments[{i}]");
            if seg.gaze.is_empty() {
                return Err(Error::schema(
                    format!("{at}.gaze"),
                    "needs at least one target",
                ));
            }
            if seg.dwell_frames == 0 {
                return Err(Error::schema(
                    format!("{at}.dwell_frames"),
                    "must be positive",
                ));
            }
            let targets = seg
                .gaze
                .iter()
                .chain(seg.left_hand.iter().map(|h| &h.target))
                .chain(seg.right_hand.iter().map(|h| &h.target));
            for t in targets {
                t.resolve(spatial)?;
            }
        }
        Ok(())
    }
}

/// Orthonormal pair perpendicular to `d`.
fn perpendicular_basis(d: Vec3) -> (Vec3, Vec3) {
    let helper = if d.y.abs() < 0.9 { Vec3::Y } else { Vec3::X };
    let e1 = d.cross(helper).normalized().unwrap_or(Vec3::X);
    let e2 = e1.cross(d).normalized().unwrap_or(Vec3::Y);
    (e1, e2)
}

fn jitter(rng: &mut ChaCha8Rng, amplitude: f64) -> Vec3 {
    let mut draw = || rng.random_range(-1.0..=1.0) * amplitude;
    Vec3::new(draw(), draw(), draw())
}

fn synth_hand(
    rng: &mut ChaCha8Rng,
    dwell: Option<&HandDwell>,
    eye: Vec3,
    noise: f64,
    spatial: &SpatialProfile,
) -> Result<HandSample> {
    let Some(dwell) = dwell else {
        return Ok(HandSample::untracked());
    };
    let anchor = dwell.target.resolve(spatial)?;
    let toward_eye = (eye - anchor).normalized().ok_or(Error::CoincidentPoints)?;
    let palm = anchor + toward_eye * dwell.standoff + jitter(rng, noise);
    let (e1, e2) = perpendicular_basis(-toward_eye);
    // Five fingers of three joints fanned around the palm.
    let mut joints = Vec::with_capacity(HAND_JOINTS);
    for finger in 0..5 {
        let phi = (-60.0 + 30.0 * finger as f64).to_radians();
        let dir = e1 * phi.cos() + e2 * phi.sin();
        for joint in 0..3 {
            let radius = dwell.spread * (0.4 + 0.3 * joint as f64);
            joints.push(palm + dir * radius + jitter(rng, noise));
        }
    }
    let forward = (anchor - palm).normalized().unwrap_or(-toward_eye);
    Ok(HandSample::tracked(joints, palm, forward))
}

/// Expands a script into frames. Deterministic for a given seed. Gaze speeds
/// are the angle between consecutive gaze directions over the frame period.
pub fn generate_synthetic_trace(
    script: &TraceScript,
    spatial: &SpatialProfile,
    seed: u64,
) -> Result<Trace> {
    script.check(spatial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / script.rate_hz;
    let mut frames: Vec<ContextFrame> = Vec::new();
    let mut prev_gaze: Option<Vec3> = None;
    let mut k: u64 = 0;
    for seg in &script.segments {
        for j in 0..seg.frames {
            let target = seg.gaze[(j / seg.dwell_frames) % seg.gaze.len()].resolve(spatial)?;
            let mut gaze = (target - seg.eye)
                .normalized()
                .ok_or(Error::CoincidentPoints)?;
            if seg.gaze_noise_deg > 0.0 {
                let n = jitter(&mut rng, seg.gaze_noise_deg.to_radians().tan());
                gaze = (gaze + n).normalized().unwrap_or(gaze);
            }
            let speed = match prev_gaze {
                Some(p) => angle_between(p, gaze)? / dt,
                None => 0.0,
            };
            prev_gaze = Some(gaze);
            let left = synth_hand(
                &mut rng,
                seg.left_hand.as_ref(),
                seg.eye,
                seg.hand_noise,
                spatial,
            )?;
            let right = synth_hand(
                &mut rng,
                seg.right_hand.as_ref(),
                seg.eye,
                seg.hand_noise,
                spatial,
            )?;
            frames.push(ContextFrame {
                t: script.start_time + k as f64 * dt,
                eye: seg.eye,
                gaze,
                v_left: speed,
                v_right: speed,
                left,
                right,
                step: seg.step,
                marker: seg
                    .reoptimize_at
                    .contains(&j)
                    .then_some(FrameMarker::Reoptimize),
            });
            k += 1;
        }
    }
    Trace::new(frames)
}
