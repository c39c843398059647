//! End-to-end commands: optimize one step, replay a document against a
//! trace, benchmark annealing against the oracle, and tag a document.
//! Every output carries a digest of the configuration that produced it.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{ContextFrame, FrameMarker, FrameWindow, Trace, DEFAULT_WINDOW};
use crate::cost::{CostBreakdown, CostModel, CostWeights, LabelQuad, LabelSpec};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::importance::ImportanceMap;
use crate::optimizer::{
    anneal, anneal_with, CostTable, Evaluator, OptimizerConfig, PlacementResult, WorldPose,
};
use crate::profile::{DocumentProfile, Placement, SpatialProfile};
use crate::scenes::{generate_scene, SceneParams};
use crate::tagging::{segment_document, tag_document, KeyObjectVocabulary, RuleClassifier};

/// Everything that shapes an optimization besides the input documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunParams {
    pub weights: CostWeights,
    pub label: LabelSpec,
    pub optimizer: OptimizerConfig,
    /// Frames per context window.
    pub window: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            weights: CostWeights::default(),
            label: LabelSpec::default(),
            optimizer: OptimizerConfig::default(),
            window: DEFAULT_WINDOW,
        }
    }
}

impl RunParams {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.label.validate()?;
        self.optimizer.validate()?;
        if self.window == 0 {
            return Err(Error::InvalidConfig(
                "window must hold at least one frame".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spatial_profile: PathBuf,
    pub document_profile: PathBuf,
    pub trace: PathBuf,
    #[serde(default)]
    pub params: RunParams,
    pub output_dir: PathBuf,
}

/// Parsed and cross-checked inputs of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub spatial: SpatialProfile,
    pub document: DocumentProfile,
    pub trace: Trace,
}

impl Inputs {
    pub fn new(spatial: SpatialProfile, document: DocumentProfile, trace: Trace) -> Result<Self> {
        document.validate_against(&spatial)?;
        trace.validate()?;
        Ok(Inputs {
            spatial,
            document,
            trace,
        })
    }
}

impl RunConfig {
    /// Checks that every referenced file exists, then parses and validates
    /// all of them. Nothing is computed before this succeeds.
    pub fn load_inputs(&self) -> Result<Inputs> {
        for path in [&self.spatial_profile, &self.document_profile, &self.trace] {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        self.params.validate()?;
        Inputs::new(
            SpatialProfile::load(&self.spatial_profile)?,
            DocumentProfile::load(&self.document_profile)?,
            Trace::load(&self.trace)?,
        )
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the compact JSON form of `value`. Object keys serialize in a
/// fixed order, so equal values give equal digests.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable config");
    sha256_hex(v.to_string().as_bytes())
}

/// Digest identifying a command run over `inputs` with `params`.
pub fn config_digest(command: &str, params: &RunParams, inputs: &Inputs) -> String {
    digest_of(&serde_json::json!({
        "command": command,
        "params": params,
        "spatial_profile": sha256_hex(inputs.spatial.to_json().as_bytes()),
        "document_profile": sha256_hex(inputs.document.to_json().as_bytes()),
        "trace": sha256_hex(inputs.trace.to_jsonl().as_bytes()),
    }))
}

/// Generator for pass `pass` of step `step`: the run seed with a stream
/// selected by step and pass, so results do not depend on execution order.
pub fn step_rng(seed: u64, step: usize, pass: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step as u64) << 20) | pass as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// The step became active.
    Step,
    /// A scripted re-optimize marker.
    Reoptimize,
}

impl Trigger {
    fn as_str(self) -> &'static str {
        match self {
            Trigger::Step => "step",
            Trigger::Reoptimize => "reoptimize",
        }
    }
}

/// Outcome of optimizing one step against one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub config_digest: String,
    pub step: usize,
    pub trigger: Trigger,
    pub pass: usize,
    pub key_object_id: String,
    /// Timestamp of the newest frame in the window.
    pub frame_t: f64,
    pub eye: Vec3,
    pub gaze: Vec3,
    pub best: Placement,
    pub world_pose: WorldPose,
    pub breakdown: CostBreakdown,
    pub evaluations: usize,
    pub evaluations_to_best: usize,
    pub label_corners: [Vec3; 4],
    pub importance: Vec<ImportanceMap>,
    pub iteration_trace: Vec<crate::optimizer::TraceEntry>,
}

struct StepJob<'a> {
    step: usize,
    trigger: Trigger,
    pass: usize,
    frames: &'a [ContextFrame],
}

fn run_step(
    inputs: &Inputs,
    params: &RunParams,
    digest: &str,
    job: StepJob,
) -> Result<StepOutcome> {
    let step = inputs.document.step(job.step)?;
    let key = step
        .key_object_id
        .as_deref()
        .ok_or(Error::UntaggedStep { index: job.step })?;
    let key_object = inputs.spatial.key_object(key)?;
    let window = FrameWindow::from_frames(job.frames, params.window)?;
    let model = CostModel::new(
        key_object,
        &window,
        params.weights,
        params.label,
        step.preferred_position,
    )?;
    let rng = step_rng(params.optimizer.rng_seed, job.step, job.pass);
    let result = anneal_with(&model, &params.optimizer, rng)?;
    let home = result.best.resolve(&key_object.surfaces)?;
    let quad = LabelQuad::new(home, &result.best, &params.label, model.eye())?;
    let latest = window.latest().ok_or(Error::EmptyWindow)?;
    Ok(StepOutcome {
        config_digest: digest.to_string(),
        step: job.step,
        trigger: job.trigger,
        pass: job.pass,
        key_object_id: key.to_string(),
        frame_t: latest.t,
        eye: model.eye(),
        gaze: model.gaze(),
        best: result.best,
        world_pose: result.world_pose,
        breakdown: result.breakdown,
        evaluations: result.evaluations,
        evaluations_to_best: result.evaluations_to_best,
        label_corners: quad.corners(),
        importance: model.importance_maps().to_vec(),
        iteration_trace: result.iteration_trace,
    })
}

/// Optimizes `step` against the last `params.window` frames of the trace.
pub fn optimize_step(inputs: &Inputs, params: &RunParams, step: usize) -> Result<StepOutcome> {
    params.validate()?;
    let s = inputs.document.step(step)?;
    if s.key_object_id.is_none() {
        return Err(Error::UntaggedStep { index: step });
    }
    let digest = config_digest(&format!("optimize:{step}"), params, inputs);
    run_step(
        inputs,
        params,
        &digest,
        StepJob {
            step,
            trigger: Trigger::Step,
            pass: 0,
            frames: &inputs.trace.frames,
        },
    )
}

/// Cost of an arbitrary placement for `step` under the same window as
/// [`optimize_step`].
pub fn evaluate_placement(
    inputs: &Inputs,
    params: &RunParams,
    step: usize,
    a: &Placement,
) -> Result<CostBreakdown> {
    params.validate()?;
    let s = inputs.document.step(step)?;
    let key = s
        .key_object_id
        .as_deref()
        .ok_or(Error::UntaggedStep { index: step })?;
    let window = FrameWindow::from_frames(&inputs.trace.frames, params.window)?;
    let model = CostModel::new(
        inputs.spatial.key_object(key)?,
        &window,
        params.weights,
        params.label,
        s.preferred_position,
    )?;
    model.cost(a)
}

/// Exhaustive search for `step` under the same window as [`optimize_step`].
pub fn oracle_step(
    inputs: &Inputs,
    params: &RunParams,
    step: usize,
    bound: usize,
) -> Result<PlacementResult> {
    params.validate()?;
    let s = inputs.document.step(step)?;
    let key = s
        .key_object_id
        .as_deref()
        .ok_or(Error::UntaggedStep { index: step })?;
    let window = FrameWindow::from_frames(&inputs.trace.frames, params.window)?;
    let model = CostModel::new(
        inputs.spatial.key_object(key)?,
        &window,
        params.weights,
        params.label,
        s.preferred_position,
    )?;
    crate::optimizer::exhaustive(&model, bound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub config_digest: String,
    pub rows: Vec<StepOutcome>,
    /// Seconds per row, same order as `rows`. Kept apart from the rows so
    /// that everything else is reproducible byte for byte.
    pub wall_time_s: Vec<f64>,
}

/// Optimizes every step against its own segment of the trace: once when the
/// step starts being shown (its segment's last `window` frames) and once more
/// per re-optimize marker (the frames up to the marker).
pub fn replay(inputs: &Inputs, params: &RunParams) -> Result<ReplayReport> {
    params.validate()?;
    let untagged = inputs.document.untagged();
    if !untagged.is_empty() {
        return Err(Error::UntaggedSteps(untagged));
    }
    let mut jobs = Vec::new();
    for step in 0..inputs.document.len() {
        let key = inputs.document.steps()[step]
            .key_object_id
            .as_deref()
            .unwrap_or_default();
        crate::optimizer::SearchSpace::new(inputs.spatial.key_object(key)?)?;
        let segment: Vec<ContextFrame> = inputs
            .trace
            .frames
            .iter()
            .filter(|f| f.step == Some(step))
            .cloned()
            .collect();
        if segment.is_empty() {
            return Err(Error::schema(
                "trace",
                format!("no frames recorded for step {step}"),
            ));
        }
        jobs.push((step, segment));
    }
    let digest = config_digest("replay", params, inputs);
    let mut rows = Vec::new();
    let mut wall_time_s = Vec::new();
    for (step, segment) in &jobs {
        let markers = segment
            .iter()
            .enumerate()
            .filter(|(_, f)| f.marker == Some(FrameMarker::Reoptimize));
        let passes = std::iter::once((Trigger::Step, segment.len()))
            .chain(markers.map(|(i, _)| (Trigger::Reoptimize, i + 1)));
        for (pass, (trigger, end)) in passes.enumerate() {
            let started = Instant::now();
            let job = StepJob {
                step: *step,
                trigger,
                pass,
                frames: &segment[..end],
            };
            rows.push(run_step(inputs, params, &digest, job)?);
            wall_time_s.push(started.elapsed().as_secs_f64());
        }
    }
    Ok(ReplayReport {
        config_digest: digest,
        rows,
        wall_time_s,
    })
}

fn csv_bytes(
    digest: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<Vec<u8>> {
    let mut out = format!("# config_digest={digest}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
    }
    Ok(out)
}

impl ReplayReport {
    pub fn summary_csv(&self) -> Result<Vec<u8>> {
        let header = [
            "step",
            "trigger",
            "frame_t",
            "key_object_id",
            "surface_id",
            "r",
            "c",
            "c_v",
            "c_r",
            "c_ha",
            "c_p",
            "total",
            "evaluations",
            "evaluations_to_best",
        ];
        let rows = self.rows.iter().map(|o| {
            let b = &o.breakdown;
            vec![
                o.step.to_string(),
                o.trigger.as_str().to_string(),
                o.frame_t.to_string(),
                o.key_object_id.clone(),
                o.best.surface_id.clone(),
                o.best.r.to_string(),
                o.best.c.to_string(),
                b.c_v.to_string(),
                b.c_r.to_string(),
                b.c_ha.to_string(),
                b.c_p.to_string(),
                b.total.to_string(),
                o.evaluations.to_string(),
                o.evaluations_to_best.to_string(),
            ]
        });
        csv_bytes(&self.config_digest, &header, rows)
    }

    pub fn timing_csv(&self) -> Result<Vec<u8>> {
        let rows = self.rows.iter().zip(&self.wall_time_s).map(|(o, t)| {
            vec![
                o.step.to_string(),
                o.trigger.as_str().to_string(),
                t.to_string(),
            ]
        });
        csv_bytes(
            &self.config_digest,
            &["step", "trigger", "wall_time_s"],
            rows,
        )
    }
}

/// Top-down view: world x to the right, world z downward, y dropped.
/// `svg_x = (x - min_x)·scale + margin`, `svg_y = (z - min_z)·scale + margin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopDown {
    pub min_x: f64,
    pub min_z: f64,
    pub scale: f64,
    pub margin: f64,
}

impl TopDown {
    pub fn fit(points: impl IntoIterator<Item = Vec3>) -> Self {
        let (mut min_x, mut min_z) = (f64::INFINITY, f64::INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_z = min_z.min(p.z);
        }
        if !min_x.is_finite() {
            min_x = 0.0;
            min_z = 0.0;
        }
        TopDown {
            min_x,
            min_z,
            scale: 400.0,
            margin: 20.0,
        }
    }

    pub fn project(&self, p: Vec3) -> (f64, f64) {
        (
            (p.x - self.min_x) * self.scale + self.margin,
            (p.z - self.min_z) * self.scale + self.margin,
        )
    }

    /// World `(x, z)` of an SVG point.
    pub fn unproject(&self, sx: f64, sy: f64) -> (f64, f64) {
        (
            (sx - self.margin) / self.scale + self.min_x,
            (sy - self.margin) / self.scale + self.min_z,
        )
    }
}

fn points_attr(proj: &TopDown, pts: &[Vec3]) -> String {
    pts.iter()
        .map(|p| {
            let (x, y) = proj.project(*p);
            format!("{x},{y}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// SVG scene of a step outcome: every surface outline, the importance of the
/// target object's cells, the label footprint and the gaze ray.
pub fn render_scene(spatial: &SpatialProfile, outcome: &StepOutcome) -> String {
    let gaze_end = outcome.eye + outcome.gaze.normalized().unwrap_or(Vec3::Z) * 1.0;
    let all = spatial
        .key_objects()
        .iter()
        .flat_map(|k| k.surfaces.iter().flat_map(|s| s.corners()))
        .chain(outcome.label_corners)
        .chain([outcome.eye, gaze_end]);
    let proj = TopDown::fit(all.clone());
    let (mut max_x, mut max_y) = (0.0f64, 0.0f64);
    for p in all {
        let (x, y) = proj.project(p);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    let (w, h) = (max_x + proj.margin, max_y + proj.margin);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        "<!-- config_digest={}\n     top-down projection onto world XZ (y up, dropped): svg_x = (x - {}) * {} + {}, svg_y = (z - {}) * {} + {} -->",
        outcome.config_digest, proj.min_x, proj.scale, proj.margin, proj.min_z, proj.scale, proj.margin
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    for k in spatial.key_objects() {
        let target = k.id == outcome.key_object_id;
        for surf in &k.surfaces {
            let stroke = if target { "#1f4e99" } else { "#999999" };
            let _ = writeln!(
                s,
                r#"  <polygon data-surface="{}" points="{}" fill="none" stroke="{stroke}" stroke-width="1"/>"#,
                surf.id(),
                points_attr(&proj, &surf.corners())
            );
        }
    }
    if let Some(k) = spatial
        .key_objects()
        .iter()
        .find(|k| k.id == outcome.key_object_id)
    {
        for map in &outcome.importance {
            let Some(surf) = k.surface(&map.surface_id) else {
                continue;
            };
            for c in 0..map.height {
                for r in 0..map.width {
                    let v = map.get(r, c);
                    if v <= 0.0 {
                        continue;
                    }
                    let (rf, cf) = (r as f64, c as f64);
                    let cell = [
                        surf.lattice_point(rf, cf),
                        surf.lattice_point(rf + 1.0, cf),
                        surf.lattice_point(rf + 1.0, cf + 1.0),
                        surf.lattice_point(rf, cf + 1.0),
                    ];
                    let _ = writeln!(
                        s,
                        r##"  <polygon class="importance" points="{}" fill="#d62728" fill-opacity="{v}" stroke="none"/>"##,
                        points_attr(&proj, &cell)
                    );
                }
            }
        }
    }
    let _ = writeln!(
        s,
        r##"  <polygon class="label" points="{}" fill="#2ca02c" fill-opacity="0.4" stroke="#2ca02c"/>"##,
        points_attr(&proj, &outcome.label_corners)
    );
    let (ex, ey) = proj.project(outcome.eye);
    let (gx, gy) = proj.project(gaze_end);
    let _ = writeln!(
        s,
        r##"  <line class="gaze" x1="{ex}" y1="{ey}" x2="{gx}" y2="{gy}" stroke="#000000"/>"##
    );
    let _ = writeln!(
        s,
        r##"  <circle class="eye" cx="{ex}" cy="{ey}" r="4" fill="#000000"/>"##
    );
    s.push_str("</svg>\n");
    s
}

/// Writes through a sibling temporary file so readers never see a partial
/// artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Result document without the bulky trace and maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config_digest: String,
    pub step: usize,
    pub trigger: Trigger,
    pub pass: usize,
    pub key_object_id: String,
    pub frame_t: f64,
    pub best: Placement,
    pub world_pose: WorldPose,
    pub breakdown: CostBreakdown,
    pub evaluations: usize,
    pub evaluations_to_best: usize,
}

impl From<&StepOutcome> for ResultDocument {
    fn from(o: &StepOutcome) -> Self {
        ResultDocument {
            config_digest: o.config_digest.clone(),
            step: o.step,
            trigger: o.trigger,
            pass: o.pass,
            key_object_id: o.key_object_id.clone(),
            frame_t: o.frame_t,
            best: o.best.clone(),
            world_pose: o.world_pose.clone(),
            breakdown: o.breakdown,
            evaluations: o.evaluations,
            evaluations_to_best: o.evaluations_to_best,
        }
    }
}

/// Writes `step_NN_{trace.csv,result.json,scene.svg}` and one importance
/// graymap per surface. Returns the written paths.
pub fn write_step_artifacts(
    dir: &Path,
    spatial: &SpatialProfile,
    outcome: &StepOutcome,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let stem = format!("step_{:02}", outcome.step);
    let mut written = Vec::new();

    let mut trace = Vec::new();
    crate::optimizer::write_trace_csv(
        &outcome.iteration_trace,
        &mut trace,
        Some(&outcome.config_digest),
    )?;
    let path = dir.join(format!("{stem}_trace.csv"));
    write_atomic(&path, &trace)?;
    written.push(path);

    let mut json = serde_json::to_string_pretty(&ResultDocument::from(outcome))?;
    json.push('\n');
    let path = dir.join(format!("{stem}_result.json"));
    write_atomic(&path, json.as_bytes())?;
    written.push(path);

    let path = dir.join(format!("{stem}_scene.svg"));
    write_atomic(&path, render_scene(spatial, outcome).as_bytes())?;
    written.push(path);

    for map in &outcome.importance {
        let comment = format!(
            "config_digest={}\nsurface={}",
            outcome.config_digest, map.surface_id
        );
        let path = dir.join(format!("{stem}_importance_{}.pgm", map.surface_id));
        write_atomic(&path, &map.to_pgm(&comment))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `summary.csv`, `replay_timing.csv` and `replay_results.json`.
pub fn write_replay_artifacts(dir: &Path, report: &ReplayReport) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let summary = dir.join("summary.csv");
    write_atomic(&summary, &report.summary_csv()?)?;
    let timing = dir.join("replay_timing.csv");
    write_atomic(&timing, &report.timing_csv()?)?;
    let docs: Vec<ResultDocument> = report.rows.iter().map(ResultDocument::from).collect();
    let mut json = serde_json::to_string_pretty(&serde_json::json!({
        "config_digest": report.config_digest,
        "results": docs,
    }))?;
    json.push('\n');
    let results = dir.join("replay_results.json");
    write_atomic(&results, json.as_bytes())?;
    Ok(vec![summary, timing, results])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub scenes: usize,
    pub scene_seed: u64,
    /// Annealing runs per scene, seeded `first_seed..first_seed + runs`.
    pub runs: usize,
    pub first_seed: u64,
    pub scene: SceneParams,
    pub weights: CostWeights,
    pub label: LabelSpec,
    pub optimizer: OptimizerConfig,
    pub oracle_bound: usize,
    /// Worker threads; 0 picks the machine's parallelism.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenes: 20,
            scene_seed: 0,
            runs: 100,
            first_seed: 0,
            scene: SceneParams::default(),
            weights: CostWeights::default(),
            label: LabelSpec::default(),
            optimizer: OptimizerConfig::default(),
            oracle_bound: crate::optimizer::DEFAULT_ORACLE_BOUND,
            threads: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub scene: usize,
    pub seed: u64,
    pub cells: usize,
    pub surfaces: usize,
    pub oracle_cost: f64,
    pub oracle_evaluations: usize,
    pub runs: usize,
    pub hits: usize,
    pub within_5pct: usize,
    pub max_relative_gap: f64,
    pub median_evaluations: f64,
    pub median_evaluations_to_best: f64,
}

impl SceneReport {
    pub fn hit_rate(&self) -> f64 {
        self.hits as f64 / self.runs as f64
    }

    pub fn within_rate(&self) -> f64 {
        self.within_5pct as f64 / self.runs as f64
    }

    /// Median evaluations-to-best over the oracle's evaluation count.
    pub fn evaluation_ratio(&self) -> f64 {
        self.median_evaluations_to_best / self.oracle_evaluations as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config_digest: String,
    pub scenes: Vec<SceneReport>,
}

impl BenchReport {
    pub fn min_hit_rate(&self) -> f64 {
        self.scenes
            .iter()
            .map(SceneReport::hit_rate)
            .fold(1.0, f64::min)
    }

    pub fn min_within_rate(&self) -> f64 {
        self.scenes
            .iter()
            .map(SceneReport::within_rate)
            .fold(1.0, f64::min)
    }

    /// Largest evaluation ratio among scenes of at least `cells` cells.
    pub fn max_evaluation_ratio(&self, cells: usize) -> Option<f64> {
        self.scenes
            .iter()
            .filter(|s| s.cells >= cells)
            .map(SceneReport::evaluation_ratio)
            .reduce(f64::max)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let header = [
            "scene",
            "seed",
            "cells",
            "surfaces",
            "oracle_cost",
            "oracle_evaluations",
            "runs",
            "hit_rate",
            "within_5pct_rate",
            "max_relative_gap",
            "median_evaluations",
            "median_evaluations_to_best",
            "evaluation_ratio",
        ];
        let rows = self.scenes.iter().map(|s| {
            vec![
                s.scene.to_string(),
                s.seed.to_string(),
                s.cells.to_string(),
                s.surfaces.to_string(),
                s.oracle_cost.to_string(),
                s.oracle_evaluations.to_string(),
                s.runs.to_string(),
                s.hit_rate().to_string(),
                s.within_rate().to_string(),
                s.max_relative_gap.to_string(),
                s.median_evaluations.to_string(),
                s.median_evaluations_to_best.to_string(),
                s.evaluation_ratio().to_string(),
            ]
        });
        csv_bytes(&self.config_digest, &header, rows)
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Relative amount by which `cost` exceeds `optimum`; zero optima compare
/// absolutely.
pub fn relative_gap(cost: f64, optimum: f64) -> f64 {
    if optimum > 0.0 {
        (cost - optimum) / optimum
    } else {
        cost - optimum
    }
}

fn bench_scene(cfg: &BenchConfig, scene: usize) -> Result<SceneReport> {
    let seed = cfg.scene_seed.wrapping_add(scene as u64);
    let generated = generate_scene(&cfg.scene, seed)?;
    let window = FrameWindow::from_frames(&generated.frames, generated.frames.len().max(1))?;
    let model = CostModel::new(
        &generated.key_object,
        &window,
        cfg.weights,
        cfg.label,
        generated.preferred,
    )?;
    let cells = model.space().len();
    if cells > cfg.oracle_bound {
        return Err(Error::SearchSpaceTooLarge {
            cells,
            bound: cfg.oracle_bound,
        });
    }
    // Tabulating every cell is exactly the oracle's work.
    let table = CostTable::from_evaluator(&model)?;
    let oracle = crate::optimizer::exhaustive(&table, cfg.oracle_bound)?;
    let best = oracle.breakdown.total;
    let (mut hits, mut within, mut gap) = (0, 0, 0.0f64);
    let mut evals = Vec::with_capacity(cfg.runs);
    let mut to_best = Vec::with_capacity(cfg.runs);
    for k in 0..cfg.runs {
        let opt = OptimizerConfig {
            rng_seed: cfg.first_seed.wrapping_add(k as u64),
            ..cfg.optimizer
        };
        let r = anneal(&table, &opt)?;
        let g = relative_gap(r.breakdown.total, best);
        hits += usize::from(r.breakdown.total <= best);
        within += usize::from(g <= 0.05);
        gap = gap.max(g);
        evals.push(r.evaluations as f64);
        to_best.push(r.evaluations_to_best as f64);
    }
    Ok(SceneReport {
        scene,
        seed,
        cells,
        surfaces: generated.key_object.surfaces.len(),
        oracle_cost: best,
        oracle_evaluations: oracle.evaluations,
        runs: cfg.runs,
        hits,
        within_5pct: within,
        max_relative_gap: gap,
        median_evaluations: if evals.is_empty() {
            0.0
        } else {
            median(&mut evals)
        },
        median_evaluations_to_best: if to_best.is_empty() {
            0.0
        } else {
            median(&mut to_best)
        },
    })
}

/// Oracle versus annealing on generated scenes. Scenes run on worker
/// threads and are reported in scene order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.optimizer.validate()?;
    cfg.weights.validate()?;
    cfg.label.validate()?;
    cfg.scene.validate()?;
    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(cfg.scenes.max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<SceneReport>>> = (0..cfg.scenes).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= cfg.scenes {
                    break;
                }
                let r = bench_scene(cfg, i);
                slots.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    let scenes = results
        .into_iter()
        .map(|r| r.expect("every scene ran"))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        config_digest: digest_of(&serde_json::json!({ "command": "bench", "config": cfg })),
        scenes,
    })
}

pub fn write_bench_artifacts(dir: &Path, report: &BenchReport) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let csv = dir.join("bench.csv");
    write_atomic(&csv, &report.to_csv()?)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    let path = dir.join("bench.json");
    write_atomic(&path, json.as_bytes())?;
    Ok(vec![csv, path])
}

/// Segments `text` and tags each step with the rule classifier, limited to
/// `available` (every vocabulary object when `None`).
pub fn tag_text(
    title: &str,
    text: &str,
    vocabulary: &KeyObjectVocabulary,
    available: Option<&BTreeSet<String>>,
) -> DocumentProfile {
    let mut doc = segment_document(text);
    doc.title = title.to_string();
    let all = vocabulary.ids();
    let available = available.unwrap_or(&all);
    tag_document(
        &mut doc,
        &RuleClassifier {
            vocabulary: vocabulary.clone(),
        },
        available,
    );
    doc
}
