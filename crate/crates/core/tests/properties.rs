//! Property checks for the invariants of each module.

mod common;

use std::collections::BTreeSet;

use anchorlabel_core::context::{
    frame_weights_from, generate_synthetic_trace, ContextFrame, FrameWindow, HandDwell, HandSample,
    ScriptSegment, Target, TraceScript,
};
use anchorlabel_core::cost::{total_cost, visibility_cost, CostComponents, CostWeights, LabelSpec};
use anchorlabel_core::geometry::{
    angle_between, convex_hull, flood_fill, orient, Cell, GridMask, Vec3,
};
use anchorlabel_core::importance::{overall_map, soften, ImportanceMap};
use anchorlabel_core::optimizer::{
    anneal, exhaustive, exhaustive_oracle, optimize, CostTable, Evaluator, Neighborhood,
    OptimizerConfig, SearchSpace,
};
use anchorlabel_core::profile::{
    AnchoringSurface, KeyObject, Orientation, SpatialProfile, SCHEMA_VERSION,
};
use anchorlabel_core::tagging::{
    classify_rule_based, segment_document, DocumentEditor, RuleClassifier,
};
use common::*;
use proptest::prelude::*;

fn surface(id: &str, top_left: Vec3, width: f64, height: f64) -> AnchoringSurface {
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

fn vec3() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn cells(max: usize) -> impl Strategy<Value = Vec<Cell>> {
    prop::collection::vec((0..max, 0..max).prop_map(|(r, c)| Cell::new(r, c)), 1..30)
}

fn mask(max_w: usize, max_h: usize) -> impl Strategy<Value = GridMask> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.15), w * h).prop_map(move |bits| {
            let mut m = GridMask::new(w, h);
            for (i, b) in bits.into_iter().enumerate() {
                m.set(i % w, i / w, b);
            }
            m
        })
    })
}

fn map_of(values: Vec<f64>, width: usize, height: usize) -> ImportanceMap {
    ImportanceMap {
        surface_id: "s".into(),
        width,
        height,
        values,
    }
}

proptest! {
    #[test]
    fn hull_is_convex_and_contains_every_point(points in cells(25)) {
        let hull = convex_hull(&points);
        let h: Vec<(i64, i64)> = hull.iter().map(|p| (p.r as i64, p.c as i64)).collect();
        if h.len() >= 3 {
            for i in 0..h.len() {
                let (a, b, c) = (h[i], h[(i + 1) % h.len()], h[(i + 2) % h.len()]);
                prop_assert!(orient(a, b, c) > 0);
                for p in &points {
                    prop_assert!(orient(a, b, (p.r as i64, p.c as i64)) >= 0);
                }
            }
        }
        for p in &hull {
            prop_assert!(points.contains(p));
        }
    }

    #[test]
    fn fill_is_idempotent_and_keeps_the_mask(points in cells(20), base in mask(20, 20)) {
        let hull = convex_hull(&points);
        let once = flood_fill(&base, &hull);
        prop_assert_eq!(&flood_fill(&once, &hull), &once);
        for cell in base.occupied() {
            prop_assert!(once.get(cell.r, cell.c));
        }
    }

    #[test]
    fn angle_is_symmetric_and_scale_free(a in vec3(), b in vec3(), k in 0.01..100.0f64) {
        prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
        let ab = angle_between(a, b).unwrap();
        prop_assert!((ab - angle_between(b, a).unwrap()).abs() < 1e-12);
        prop_assert!((ab - angle_between(a * k, b).unwrap()).abs() < 1e-9);
        prop_assert!((0.0..=180.0).contains(&ab));
    }

    #[test]
    fn visibility_ignores_cell_order(
        (w, h, occ, imap, pr, pc) in (1..8usize, 1..8usize).prop_flat_map(|(w, h)| (
            Just(w), Just(h),
            prop::collection::vec(any::<bool>(), w * h),
            prop::collection::vec(0.0..1.0f64, w * h),
            Just((0..w).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..h).collect::<Vec<_>>()).prop_shuffle(),
        ))
    ) {
        let build = |perm: bool| {
            let mut m = GridMask::new(w, h);
            let mut vals = vec![0.0; w * h];
            for c in 0..h {
                for r in 0..w {
                    let (rr, cc) = if perm { (pr[r], pc[c]) } else { (r, c) };
                    m.set(rr, cc, occ[c * w + r]);
                    vals[cc * w + rr] = imap[c * w + r];
                }
            }
            (m, map_of(vals, w, h))
        };
        let (m0, i0) = build(false);
        let (m1, i1) = build(true);
        let a = visibility_cost(&[m0], &[i0]).unwrap();
        let b = visibility_cost(&[m1], &[i1]).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn visibility_scales_with_importance(
        (w, h, occ, imap) in (1..8usize, 1..8usize).prop_flat_map(|(w, h)| (
            Just(w), Just(h),
            prop::collection::vec(any::<bool>(), w * h),
            prop::collection::vec(0.0..1.0f64, w * h),
        )),
        k in 0.01..50.0f64,
    ) {
        let mut m = GridMask::new(w, h);
        for (i, b) in occ.iter().enumerate() {
            m.set(i % w, i / w, *b);
        }
        let base = visibility_cost(std::slice::from_ref(&m), &[map_of(imap.clone(), w, h)]).unwrap();
        let scaled = visibility_cost(&[m], &[map_of(imap.iter().map(|x| x * k).collect(), w, h)]).unwrap();
        prop_assert!((scaled - k * base).abs() <= 1e-9 * (k * base).abs().max(1e-300));
    }

    #[test]
    fn total_is_monotone_in_each_component(
        c in prop::array::uniform4(0.0..10.0f64),
        w in prop::array::uniform4(0.0..1.0f64),
        which in 0..4usize,
        bump in 0.0..10.0f64,
    ) {
        let weights = CostWeights { visibility: w[0], readability: w[1], hand_angle: w[2], preference: w[3] };
        let comp = |c: [f64; 4]| CostComponents { c_v: c[0], c_r: c[1], c_ha: c[2], c_p: c[3] };
        let mut raised = c;
        raised[which] += bump;
        let a = total_cost(comp(c), &weights).unwrap();
        let b = total_cost(comp(raised), &weights).unwrap();
        prop_assert!(b.total >= a.total);
        prop_assert_eq!(a.total, w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3]);
    }

    #[test]
    fn frame_weights_form_a_distribution(
        speeds in prop::collection::vec((0.0..500.0f64, 0.0..500.0f64, 1e-4..0.1f64), 1..100),
    ) {
        let mut t = 0.0;
        let times: Vec<f64> = speeds.iter().map(|s| { t += s.2; t }).collect();
        let vl: Vec<f64> = speeds.iter().map(|s| s.0).collect();
        let vr: Vec<f64> = speeds.iter().map(|s| s.1).collect();
        let w = frame_weights_from(&vl, &vr, &times).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn soften_is_bounded_and_transposes(m in mask(12, 12)) {
        let s = soften(&m);
        prop_assert!(s.iter().all(|x| (0.0..=1.0).contains(x)));
        if m.any() && m.count() < m.len() {
            for p in m.occupied() {
                prop_assert_eq!(s[p.c * m.width() + p.r], 1.0);
            }
        }
        let t = soften(&m.transposed());
        for c in 0..m.height() {
            for r in 0..m.width() {
                prop_assert!((s[c * m.width() + r] - t[r * m.height() + c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn overall_map_is_normalized(
        hands in prop::collection::vec(prop::option::of((0.0..0.6f64, 0.0..0.45f64, 0.0..0.1f64)), 1..12),
    ) {
        let s = surface("s", Vec3::new(0.0, 0.45, 0.0), 0.6, 0.45);
        let eye = Vec3::new(0.3, 0.2, -0.6);
        let frames: Vec<ContextFrame> = hands
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let right = match h {
                    Some((x, y, spread)) => {
                        let joints = (0..15)
                            .map(|j| {
                                let a = j as f64 / 15.0 * std::f64::consts::TAU;
                                Vec3::new(x + spread * a.cos(), y + spread * a.sin(), -0.1)
                            })
                            .collect();
                        HandSample::tracked(joints, Vec3::new(*x, *y, -0.15), Vec3::Z)
                    }
                    None => HandSample::untracked(),
                };
                ContextFrame {
                    t: i as f64 / 90.0,
                    eye,
                    gaze: Vec3::Z,
                    v_left: i as f64,
                    v_right: 0.0,
                    left: HandSample::untracked(),
                    right,
                    step: None,
                    marker: None,
                }
            })
            .collect();
        let weights = vec![1.0 / frames.len() as f64; frames.len()];
        let map = overall_map(&frames, &weights, &s).unwrap();
        prop_assert!(map.values.iter().all(|x| (0.0..=1.0).contains(x)));
        let constant = map.values.iter().all(|x| *x == map.values[0]);
        if !constant {
            prop_assert_eq!(map.max(), 1.0);
        }
        if hands.iter().all(|h| h.is_none()) {
            prop_assert!(map.values.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn classifier_stays_inside_the_available_set(
        words in prop::collection::vec(prop::sample::select(vec![
            "microwave", "fridge", "sink", "counter", "top", "coffee", "maker", "the", "oven", "toaster", "cupboard", "egg",
        ]), 0..20),
        keep in prop::collection::btree_set(prop::sample::select(vec![
            "blender", "cabinet", "coffee_maker", "countertop", "fridge", "microwave", "oven", "sink", "toaster",
        ]), 0..9),
    ) {
        let vocab = vocabulary();
        let available: BTreeSet<String> = keep.iter().map(|s| s.to_string()).collect();
        if let Some(p) = classify_rule_based(&words.join(" "), &vocab, &available) {
            prop_assert!(available.contains(&p.key_object_id));
            prop_assert!(p.confidence > 0.0 && p.confidence <= 1.0);
        }
    }

    #[test]
    fn segmentation_is_idempotent(paras in prop::collection::vec("[a-z ]{0,20}( [a-z]{1,8}){0,4}", 0..8)) {
        let text = paras.join("\n\n");
        let once = segment_document(&text);
        let again = segment_document(&once.steps().iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join("\n\n"));
        prop_assert_eq!(once, again);
    }

    #[test]
    fn editing_keeps_the_words(
        paras in prop::collection::vec("[a-z]{1,6}( [a-z]{1,6}){1,5}", 2..6),
        pick in any::<prop::sample::Index>(),
        at in any::<prop::sample::Index>(),
    ) {
        let words = |d: &anchorlabel_core::profile::DocumentProfile| -> Vec<String> {
            d.steps().iter().flat_map(|s| s.text.split_whitespace().map(String::from).collect::<Vec<_>>()).collect()
        };
        let doc = segment_document(&paras.join("\n\n"));
        let classifier = RuleClassifier { vocabulary: vocabulary() };
        let mut editor = DocumentEditor::with_classifier(doc.clone(), &classifier, all_objects());
        let i = pick.index(doc.len());
        let text = &doc.steps()[i].text;
        // Split at a space so no word is cut in two.
        let spaces: Vec<usize> = text.char_indices().filter(|(_, c)| *c == ' ').map(|(k, _)| k).collect();
        let cut = spaces[at.index(spaces.len())];
        editor.split_step(i, cut).unwrap();
        prop_assert_eq!(editor.doc.len(), doc.len() + 1);
        prop_assert_eq!(words(&editor.doc), words(&doc));
        editor.merge_steps(i, i + 1).unwrap();
        prop_assert_eq!(editor.doc.len(), doc.len());
        prop_assert_eq!(words(&editor.doc), words(&doc));
        for (k, s) in editor.doc.steps().iter().enumerate() {
            prop_assert_eq!(s.index, k);
        }
    }
}

fn landscape() -> impl Strategy<Value = (Vec<(usize, usize)>, Vec<f64>, u64, bool)> {
    prop::collection::vec((1..9usize, 1..9usize), 1..4).prop_flat_map(|dims| {
        let n: usize = dims.iter().map(|(w, h)| w * h).sum();
        (
            Just(dims),
            prop::collection::vec(0.0..10.0f64, n),
            any::<u64>(),
            any::<bool>(),
        )
    })
}

fn table(dims: &[(usize, usize)], totals: &[f64]) -> CostTable {
    let surfaces = dims
        .iter()
        .enumerate()
        .map(|(i, (w, h))| {
            surface(
                &format!("s{i}"),
                Vec3::new(i as f64 * 0.5, 0.5, 0.0),
                *w as f64 * 0.03,
                *h as f64 * 0.03,
            )
        })
        .collect();
    CostTable::from_totals(SearchSpace::from_surfaces(surfaces), totals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn annealing_invariants((dims, totals, seed, diagonal) in landscape()) {
        let t = table(&dims, &totals);
        let cfg = OptimizerConfig {
            rng_seed: seed,
            neighborhood: if diagonal { Neighborhood::DiagonalOnly } else { Neighborhood::EightNeighbor },
            ..Default::default()
        };
        let r = anneal(&t, &cfg).unwrap();
        let trace_min = r.iteration_trace.iter().map(|e| e.breakdown.total).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.breakdown.total, trace_min);
        prop_assert_eq!(r.iteration_trace.len(), cfg.i_max + 1);
        let space = t.space();
        let mut current = f64::INFINITY;
        for e in &r.iteration_trace {
            let s = space.surfaces().iter().find(|s| s.id() == e.placement.surface_id).unwrap();
            prop_assert!(e.placement.r < s.grid_width() && e.placement.c < s.grid_height());
            if e.breakdown.total < current {
                prop_assert!(e.accepted);
            }
            if e.accepted {
                current = e.breakdown.total;
            }
        }
        prop_assert!(r.evaluations <= space.len());
        prop_assert!(r.evaluations_to_best <= r.evaluations);
        let oracle = exhaustive(&t, 100_000).unwrap();
        prop_assert!(r.breakdown.total >= oracle.breakdown.total);
        prop_assert_eq!(anneal(&t, &cfg).unwrap(), r);
    }
}

/// 10x10 surface with the user fixating it and one hand resting on it.
#[test]
fn fixation_scene_reaches_the_oracle() {
    let s = surface("face", Vec3::new(0.0, 1.3, 0.3), 0.3, 0.3);
    let object = KeyObject {
        id: "obj".into(),
        display_name: "Object".into(),
        surfaces: vec![s],
    };
    let spatial = SpatialProfile::new("bench", vec![object.clone()]).unwrap();
    let script = TraceScript {
        schema_version: SCHEMA_VERSION,
        rate_hz: 90.0,
        start_time: 0.0,
        segments: vec![ScriptSegment {
            step: None,
            frames: 90,
            eye: Vec3::new(0.2, 1.5, -0.3),
            gaze: vec![Target::Surface {
                surface_id: "face".into(),
                u: 0.4,
                v: 0.5,
            }],
            dwell_frames: 90,
            gaze_noise_deg: 0.0,
            left_hand: None,
            right_hand: Some(HandDwell {
                target: Target::Surface {
                    surface_id: "face".into(),
                    u: 0.7,
                    v: 0.6,
                },
                standoff: 0.1,
                spread: 0.04,
            }),
            hand_noise: 0.0,
            reoptimize_at: Vec::new(),
        }],
    };
    let trace = generate_synthetic_trace(&script, &spatial, 1).unwrap();
    let window = FrameWindow::from_frames(&trace.frames, 90).unwrap();
    let (w, l) = (CostWeights::default(), LabelSpec::default());
    let oracle = exhaustive_oracle(&object, &window, w, l, None, 100_000).unwrap();
    assert_eq!(oracle.evaluations, 100);
    let hits = (0..100)
        .filter(|seed| {
            let cfg = OptimizerConfig {
                rng_seed: *seed,
                ..Default::default()
            };
            optimize(&object, &window, w, l, &cfg, None)
                .unwrap()
                .breakdown
                .total
                == oracle.breakdown.total
        })
        .count();
    assert!(hits >= 95, "{hits} of 100 seeds reached the optimum");
}
