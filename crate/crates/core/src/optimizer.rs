//! Simulated annealing over a key object's cells, and the exhaustive oracle.
//!
//! Cells are indexed in `(surface_id, r, c)` lexicographic order, so index
//! order doubles as the tie-break order everywhere.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::FrameWindow;
use crate::cost::{CostBreakdown, CostModel, CostWeights, LabelSpec};
use crate::error::{Error, Result};
use crate::geometry::{Cell, UnitRotation, Vec3};
use crate::profile::{AnchoringSurface, KeyObject, Placement, CELL_SIZE};

pub const DEFAULT_ORACLE_BOUND: usize = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// All eight offsets around the cell.
    #[default]
    EightNeighbor,
    /// Only the four diagonal offsets.
    DiagonalOnly,
}

impl Neighborhood {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        const EIGHT: [(i64, i64); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        const DIAG: [(i64, i64); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
        match self {
            Neighborhood::EightNeighbor => &EIGHT,
            Neighborhood::DiagonalOnly => &DIAG,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub t1: f64,
    pub i_max: usize,
    pub rng_seed: u64,
    pub neighborhood: Neighborhood,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            t1: 100.0,
            i_max: 200,
            rng_seed: 0,
            neighborhood: Neighborhood::EightNeighbor,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t1 must be > 0, got {}",
                self.t1
            )));
        }
        if self.i_max < 1 {
            return Err(Error::InvalidConfig("i_max must be >= 1".into()));
        }
        Ok(())
    }

    pub fn temperature(&self, i: usize) -> f64 {
        self.t1 / (i as f64 + 1.0)
    }
}

/// The cells of one key object, flattened.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    surfaces: Vec<AnchoringSurface>,
    offsets: Vec<usize>,
}

impl SearchSpace {
    pub fn new(key_object: &KeyObject) -> Result<Self> {
        if key_object.surfaces.is_empty() {
            return Err(Error::EmptyKeyObject(key_object.id.clone()));
        }
        Ok(Self::from_surfaces(key_object.surfaces.clone()))
    }

    /// # Panics
    /// On an empty surface list.
    pub fn from_surfaces(mut surfaces: Vec<AnchoringSurface>) -> Self {
        assert!(!surfaces.is_empty(), "search space needs a surface");
        surfaces.sort_by(|a, b| a.id().cmp(b.id()));
        let mut offsets = Vec::with_capacity(surfaces.len() + 1);
        offsets.push(0);
        for s in &surfaces {
            offsets.push(offsets.last().unwrap() + s.cell_count());
        }
        SearchSpace { surfaces, offsets }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Surfaces sorted by id.
    pub fn surfaces(&self) -> &[AnchoringSurface] {
        &self.surfaces
    }

    pub fn locate(&self, index: usize) -> (usize, Cell) {
        let si = self.offsets.partition_point(|&o| o <= index) - 1;
        let local = index - self.offsets[si];
        let h = self.surfaces[si].grid_height();
        (si, Cell::new(local / h, local % h))
    }

    pub fn index_of(&self, surface: usize, cell: Cell) -> usize {
        self.offsets[surface] + cell.r * self.surfaces[surface].grid_height() + cell.c
    }

    pub fn index(&self, a: &Placement) -> Result<usize> {
        let si = self
            .surfaces
            .iter()
            .position(|s| s.id() == a.surface_id)
            .ok_or_else(|| Error::UnknownSurface(a.surface_id.clone()))?;
        a.resolve(&self.surfaces)?;
        Ok(self.index_of(si, a.cell()))
    }

    pub fn cell(&self, index: usize) -> Cell {
        self.locate(index).1
    }

    pub fn surface_of(&self, index: usize) -> &AnchoringSurface {
        &self.surfaces[self.locate(index).0]
    }

    pub fn placement(&self, index: usize) -> Placement {
        let (si, cell) = self.locate(index);
        Placement::new(self.surfaces[si].id(), cell.r, cell.c)
    }

    /// Cell on surface `si` whose lattice point is closest to `p`.
    /// Distance separates into the plane offset plus one term per grid axis,
    /// so rounding each axis independently is exact; halves round down to
    /// keep the lexicographic tie-break.
    pub fn nearest_cell(&self, si: usize, p: Vec3) -> (Cell, f64) {
        let s = &self.surfaces[si];
        let d = p - s.top_left();
        let pick = |x: f64, n: usize| -> usize {
            let k = (x - 0.5).ceil();
            k.clamp(0.0, (n - 1) as f64) as usize
        };
        let r = pick(d.dot(s.right_axis()) / CELL_SIZE, s.grid_width());
        let c = pick(-d.dot(s.up_axis()) / CELL_SIZE, s.grid_height());
        let cell = Cell::new(r, c);
        (cell, s.cell_position(cell).distance(p))
    }

    /// Neighbor candidates of `index` as search-space indices, deduplicated
    /// and sorted.
    pub fn candidates(&self, index: usize, neighborhood: Neighborhood) -> Vec<usize> {
        let (si, cell) = self.locate(index);
        let s = &self.surfaces[si];
        let (w, h) = (s.grid_width() as i64, s.grid_height() as i64);
        let mut out = Vec::with_capacity(8);
        for &(dr, dc) in neighborhood.offsets() {
            let (r, c) = (cell.r as i64 + dr, cell.c as i64 + dc);
            let inside = (0..w).contains(&r) && (0..h).contains(&c);
            let target = if inside {
                self.index_of(si, Cell::new(r as usize, c as usize))
            } else if self.surfaces.len() == 1 {
                self.index_of(
                    si,
                    Cell::new(r.clamp(0, w - 1) as usize, c.clamp(0, h - 1) as usize),
                )
            } else {
                let attempt = s.lattice_point(r as f64, c as f64);
                let mut best: Option<(usize, f64)> = None;
                for other in (0..self.surfaces.len()).filter(|&o| o != si) {
                    let (cell, d) = self.nearest_cell(other, attempt);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((self.index_of(other, cell), d));
                    }
                }
                best.expect("multi-surface object").0
            };
            out.push(target);
        }
        out.sort_unstable();
        out.dedup();
        // A clamped offset can land back on the cell itself; that is only a
        // move when nothing else is reachable.
        if out.len() > 1 {
            out.retain(|&i| i != index);
        }
        out
    }
}

/// Scores cells of a search space.
pub trait Evaluator {
    fn space(&self) -> &SearchSpace;
    fn evaluate(&self, index: usize) -> Result<CostBreakdown>;
    /// World position and label rotation for a cell.
    fn pose(&self, index: usize) -> Result<(Vec3, UnitRotation)>;
}

/// Precomputed costs for every cell.
#[derive(Clone, Debug)]
pub struct CostTable {
    space: SearchSpace,
    costs: Vec<CostBreakdown>,
    poses: Vec<(Vec3, UnitRotation)>,
}

impl CostTable {
    pub fn from_evaluator(e: &dyn Evaluator) -> Result<Self> {
        let n = e.space().len();
        let costs = (0..n).map(|i| e.evaluate(i)).collect::<Result<Vec<_>>>()?;
        let poses = (0..n).map(|i| e.pose(i)).collect::<Result<Vec<_>>>()?;
        Ok(CostTable {
            space: e.space().clone(),
            costs,
            poses,
        })
    }

    /// A table from bare totals; poses use cell positions and surface rotations.
    pub fn from_totals(space: SearchSpace, totals: &[f64]) -> Result<Self> {
        if totals.len() != space.len() {
            return Err(Error::LengthMismatch {
                what: "cost table",
                expected: space.len(),
                got: totals.len(),
            });
        }
        let costs = totals
            .iter()
            .map(|&total| CostBreakdown {
                total,
                ..Default::default()
            })
            .collect();
        let poses = (0..space.len())
            .map(|i| {
                let s = space.surface_of(i);
                (s.cell_position(space.cell(i)), s.rotation())
            })
            .collect();
        Ok(CostTable {
            space,
            costs,
            poses,
        })
    }

    pub fn costs(&self) -> &[CostBreakdown] {
        &self.costs
    }
}

impl Evaluator for CostTable {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, index: usize) -> Result<CostBreakdown> {
        Ok(self.costs[index])
    }

    fn pose(&self, index: usize) -> Result<(Vec3, UnitRotation)> {
        Ok(self.poses[index])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldPose {
    pub position: Vec3,
    pub rotation: UnitRotation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub placement: Placement,
    pub breakdown: CostBreakdown,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub best: Placement,
    pub world_pose: WorldPose,
    pub breakdown: CostBreakdown,
    /// Distinct cells whose cost was computed.
    pub evaluations: usize,
    /// Distinct cells evaluated up to and including the first evaluation of
    /// the best cell.
    pub evaluations_to_best: usize,
    pub iteration_trace: Vec<TraceEntry>,
}

impl PlacementResult {
    pub fn write_trace_csv(&self, out: impl Write, digest: Option<&str>) -> Result<()> {
        write_trace_csv(&self.iteration_trace, out, digest)
    }
}

/// Writes `iteration,surface_id,r,c,c_v,c_r,c_ha,c_p,total,accepted`, with an
/// optional leading `# config_digest=` line.
pub fn write_trace_csv(
    trace: &[TraceEntry],
    mut out: impl Write,
    digest: Option<&str>,
) -> Result<()> {
    if let Some(d) = digest {
        writeln!(out, "# config_digest={d}").map_err(|e| Error::io("<trace csv>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "surface_id",
        "r",
        "c",
        "c_v",
        "c_r",
        "c_ha",
        "c_p",
        "total",
        "accepted",
    ])?;
    for e in trace {
        let b = &e.breakdown;
        w.write_record([
            e.iteration.to_string(),
            e.placement.surface_id.clone(),
            e.placement.r.to_string(),
            e.placement.c.to_string(),
            b.c_v.to_string(),
            b.c_r.to_string(),
            b.c_ha.to_string(),
            b.c_p.to_string(),
            b.total.to_string(),
            e.accepted.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

/// Memoizing wrapper that counts distinct evaluations.
struct Tally<'a> {
    evaluator: &'a dyn Evaluator,
    seen: HashMap<usize, (CostBreakdown, usize)>,
}

impl<'a> Tally<'a> {
    fn new(evaluator: &'a dyn Evaluator) -> Self {
        Tally {
            evaluator,
            seen: HashMap::new(),
        }
    }

    fn cost(&mut self, index: usize) -> Result<CostBreakdown> {
        if let Some((b, _)) = self.seen.get(&index) {
            return Ok(*b);
        }
        let b = self.evaluator.evaluate(index)?;
        let ordinal = self.seen.len() + 1;
        self.seen.insert(index, (b, ordinal));
        Ok(b)
    }

    fn ordinal(&self, index: usize) -> usize {
        self.seen[&index].1
    }
}

fn neighbor_index(index: usize, tally: &mut Tally, neighborhood: Neighborhood) -> Result<usize> {
    let space = tally.evaluator.space();
    let mut best: Option<(f64, usize)> = None;
    for cand in space.candidates(index, neighborhood) {
        let total = tally.cost(cand)?.total;
        // Candidates arrive in index order, so strict < keeps the first tie.
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, cand));
        }
    }
    Ok(best.expect("every cell has at least one candidate").1)
}

/// Lowest-cost neighbor of `a`. Offsets leaving the surface jump to the
/// closest cell of another surface of the same object, or clamp when the
/// object has only one surface.
pub fn neighbor_move(
    a: &Placement,
    evaluator: &dyn Evaluator,
    neighborhood: Neighborhood,
) -> Result<Placement> {
    let space = evaluator.space();
    let index = space.index(a)?;
    let mut tally = Tally::new(evaluator);
    Ok(space.placement(neighbor_index(index, &mut tally, neighborhood)?))
}

fn finish(
    evaluator: &dyn Evaluator,
    tally: &Tally,
    best: usize,
    trace: Vec<TraceEntry>,
) -> Result<PlacementResult> {
    let space = evaluator.space();
    let (position, rotation) = evaluator.pose(best)?;
    Ok(PlacementResult {
        best: space.placement(best),
        world_pose: WorldPose { position, rotation },
        breakdown: tally.seen[&best].0,
        evaluations: tally.seen.len(),
        evaluations_to_best: tally.ordinal(best),
        iteration_trace: trace,
    })
}

/// Runs the annealing chain with a generator seeded from `config.rng_seed`.
pub fn anneal(evaluator: &dyn Evaluator, config: &OptimizerConfig) -> Result<PlacementResult> {
    anneal_with(
        evaluator,
        config,
        ChaCha8Rng::seed_from_u64(config.rng_seed),
    )
}

/// Runs the annealing chain with a caller-supplied generator.
pub fn anneal_with(
    evaluator: &dyn Evaluator,
    config: &OptimizerConfig,
    mut rng: ChaCha8Rng,
) -> Result<PlacementResult> {
    config.validate()?;
    let space = evaluator.space();
    let n = space.len();
    let mut tally = Tally::new(evaluator);

    let mut current = rng.random_range(0..n);
    let mut current_cost = tally.cost(current)?;
    let (mut best, mut best_total) = (current, current_cost.total);
    let mut trace = Vec::with_capacity(config.i_max + 1);
    trace.push(TraceEntry {
        iteration: 0,
        placement: space.placement(current),
        breakdown: current_cost,
        accepted: true,
    });

    for i in 1..=config.i_max {
        let t = config.temperature(i);
        let mut proposal = neighbor_index(current, &mut tally, config.neighborhood)?;
        let mut cost = tally.cost(proposal)?;
        if cost.total > current_cost.total {
            proposal = rng.random_range(0..n);
            cost = tally.cost(proposal)?;
        }
        let p = ((current_cost.total - cost.total) / t).exp().min(1.0);
        let accepted = p >= 1.0 || rng.random::<f64>() < p;
        trace.push(TraceEntry {
            iteration: i,
            placement: space.placement(proposal),
            breakdown: cost,
            accepted,
        });
        if cost.total < best_total {
            best = proposal;
            best_total = cost.total;
        }
        if accepted {
            current = proposal;
            current_cost = cost;
        }
    }
    finish(evaluator, &tally, best, trace)
}

/// Evaluates every cell and returns the first minimum in index order.
pub fn exhaustive(evaluator: &dyn Evaluator, bound: usize) -> Result<PlacementResult> {
    let space = evaluator.space();
    let n = space.len();
    if n > bound {
        return Err(Error::SearchSpaceTooLarge { cells: n, bound });
    }
    let mut tally = Tally::new(evaluator);
    let mut best = 0;
    let mut best_total = f64::INFINITY;
    for i in 0..n {
        let total = tally.cost(i)?.total;
        if total < best_total {
            best = i;
            best_total = total;
        }
    }
    let entry = TraceEntry {
        iteration: 0,
        placement: space.placement(best),
        breakdown: tally.seen[&best].0,
        accepted: true,
    };
    finish(evaluator, &tally, best, vec![entry])
}

pub fn optimize(
    key_object: &KeyObject,
    window: &FrameWindow,
    weights: CostWeights,
    label: LabelSpec,
    config: &OptimizerConfig,
    preferred: Option<Vec3>,
) -> Result<PlacementResult> {
    config.validate()?;
    let model = CostModel::new(key_object, window, weights, label, preferred)?;
    anneal(&model, config)
}

pub fn exhaustive_oracle(
    key_object: &KeyObject,
    window: &FrameWindow,
    weights: CostWeights,
    label: LabelSpec,
    preferred: Option<Vec3>,
    bound: usize,
) -> Result<PlacementResult> {
    let model = CostModel::new(key_object, window, weights, label, preferred)?;
    exhaustive(&model, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::tests::flat_surface;

    fn bowl(w: f64, h: f64, center: (f64, f64)) -> CostTable {
        let space = SearchSpace::from_surfaces(vec![flat_surface("s", Vec3::ZERO, w, h)]);
        let totals: Vec<f64> = (0..space.len())
            .map(|i| {
                let c = space.cell(i);
                (c.r as f64 - center.0).powi(2) + (c.c as f64 - center.1).powi(2)
            })
            .collect();
        CostTable::from_totals(space, &totals).unwrap()
    }

    #[test]
    fn indexing_is_lexicographic() {
        let a = flat_surface("b", Vec3::ZERO, 0.09, 0.06);
        let b = flat_surface("a", Vec3::new(1.0, 0.0, 0.0), 0.06, 0.06);
        let space = SearchSpace::from_surfaces(vec![a, b]);
        assert_eq!(space.len(), 10);
        let placements: Vec<Placement> = (0..space.len()).map(|i| space.placement(i)).collect();
        let mut sorted = placements.clone();
        sorted.sort();
        assert_eq!(placements, sorted);
        for (i, p) in placements.iter().enumerate() {
            assert_eq!(space.index(p).unwrap(), i);
        }
    }

    #[test]
    fn downhill_neighbor_in_a_bowl() {
        let t = bowl(0.3, 0.3, (2.0, 2.0));
        let next =
            neighbor_move(&Placement::new("s", 5, 5), &t, Neighborhood::EightNeighbor).unwrap();
        assert_eq!(next, Placement::new("s", 4, 4));
        let next =
            neighbor_move(&Placement::new("s", 5, 2), &t, Neighborhood::EightNeighbor).unwrap();
        assert_eq!(next, Placement::new("s", 4, 2));
        let next =
            neighbor_move(&Placement::new("s", 5, 2), &t, Neighborhood::DiagonalOnly).unwrap();
        assert_eq!(next, Placement::new("s", 4, 1));
    }

    #[test]
    fn single_cell_stays_put() {
        let t = bowl(0.03, 0.03, (0.0, 0.0));
        let a = Placement::new("s", 0, 0);
        assert_eq!(
            neighbor_move(&a, &t, Neighborhood::EightNeighbor).unwrap(),
            a
        );
        let r = anneal(&t, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.best, a);
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.evaluations_to_best, 1);
    }

    #[test]
    fn edge_jumps_to_adjacent_surface() {
        // A is 0.09 wide starting at x=0; B starts where A's lattice ends.
        let a = flat_surface("a", Vec3::ZERO, 0.09, 0.09);
        let b = flat_surface("b", Vec3::new(0.09, 0.0, 0.0), 0.09, 0.09);
        let space = SearchSpace::from_surfaces(vec![a, b]);
        let from = space.index(&Placement::new("a", 2, 1)).unwrap();
        let cands = space.candidates(from, Neighborhood::EightNeighbor);
        let placements: Vec<Placement> = cands.iter().map(|&i| space.placement(i)).collect();
        // Attempts at r=3 land at x=0.09, which is B's r=0 column.
        assert!(placements.contains(&Placement::new("b", 0, 0)));
        assert!(placements.contains(&Placement::new("b", 0, 1)));
        assert!(placements.contains(&Placement::new("b", 0, 2)));
    }

    #[test]
    fn nearest_cell_matches_brute_force() {
        let a = flat_surface("a", Vec3::ZERO, 0.3, 0.21);
        let b = AnchoringSurface::from_axes(
            "b",
            "obj",
            Vec3::new(0.31, 0.02, -0.05),
            Vec3::Z * -1.0,
            Vec3::Y,
            0.15,
            0.3,
            crate::profile::Orientation::Vertical,
        )
        .unwrap();
        let space = SearchSpace::from_surfaces(vec![a, b]);
        for k in 0..200 {
            let p = Vec3::new(
                0.2 + 0.003 * k as f64,
                0.05 - 0.002 * k as f64,
                -0.1 + 0.001 * k as f64,
            );
            for si in 0..2 {
                let (cell, d) = space.nearest_cell(si, p);
                let s = &space.surfaces()[si];
                let mut best = (Cell::new(0, 0), f64::INFINITY);
                for r in 0..s.grid_width() {
                    for c in 0..s.grid_height() {
                        let dd = s.cell_position(Cell::new(r, c)).distance(p);
                        if dd < best.1 - 1e-12 {
                            best = (Cell::new(r, c), dd);
                        }
                    }
                }
                assert!((d - best.1).abs() < 1e-12, "{k} {si}");
                assert_eq!(cell, best.0);
            }
        }
    }

    #[test]
    fn oracle_tie_break_and_unique_minimum() {
        let space = SearchSpace::from_surfaces(vec![flat_surface("s", Vec3::ZERO, 0.09, 0.09)]);
        let flat = CostTable::from_totals(space.clone(), &[0.5; 9]).unwrap();
        let r = exhaustive(&flat, DEFAULT_ORACLE_BOUND).unwrap();
        assert_eq!(r.best, Placement::new("s", 0, 0));
        assert_eq!(r.evaluations, 9);
        let mut totals = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.05, 0.2];
        totals.swap(7, 5);
        let t = CostTable::from_totals(space, &totals).unwrap();
        let r = exhaustive(&t, DEFAULT_ORACLE_BOUND).unwrap();
        assert_eq!(r.best, Placement::new("s", 1, 2));
        assert!(matches!(
            exhaustive(&t, 8),
            Err(Error::SearchSpaceTooLarge { cells: 9, bound: 8 })
        ));
    }

    #[test]
    fn annealing_invariants() {
        let t = bowl(0.3, 0.3, (7.0, 3.0));
        for seed in 0..20 {
            let cfg = OptimizerConfig {
                rng_seed: seed,
                ..Default::default()
            };
            let r = anneal(&t, &cfg).unwrap();
            let min = r
                .iteration_trace
                .iter()
                .map(|e| e.breakdown.total)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(r.breakdown.total, min);
            assert_eq!(r.best, Placement::new("s", 7, 3));
            assert_eq!(r.iteration_trace.len(), 201);
            assert_eq!(anneal(&t, &cfg).unwrap(), r);
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig {
            t1: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(OptimizerConfig {
            i_max: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(OptimizerConfig::default().temperature(1), 50.0);
    }

    #[test]
    fn trace_csv_header() {
        let t = bowl(0.06, 0.06, (0.0, 0.0));
        let r = anneal(
            &t,
            &OptimizerConfig {
                i_max: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf, Some("abc")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# config_digest=abc"));
        assert_eq!(
            lines.next(),
            Some("iteration,surface_id,r,c,c_v,c_r,c_ha,c_p,total,accepted")
        );
        assert_eq!(lines.count(), 3);
    }
}
