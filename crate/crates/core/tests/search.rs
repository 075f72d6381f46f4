use std::collections::{HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use proptest::prelude::*;

use zoomeye::geometry::{build_tree, BBox, InputMode, NodeId, SourceImage};
use zoomeye::oracle::{
    ConfidenceModel, Confidences, PromptKind, ScriptedBackend, TableModel,
};
use zoomeye::search::{
    generate_cues, parse_cues, rank_score, search_type1, search_type2, stopping_check, weight,
    zoom_eye, CueExemplars, CueType, Scorer, SearchConfig, TraceAction, VisualCue,
};

fn b(x: u32, y: u32, w: u32, h: u32) -> BBox {
    BBox { x, y, w, h }
}

/// Pseudo-random confidences keyed on region and kind, quantised to
/// twentieths so that ties happen.
#[derive(Clone)]
struct HashedModel(u64);

impl ConfidenceModel for HashedModel {
    fn confidence(&self, region: BBox, kind: PromptKind) -> f64 {
        let mut h = DefaultHasher::new();
        (self.0, region, kind as u8).hash(&mut h);
        (h.finish() % 21) as f64 / 20.0
    }
}

#[test]
fn parse_cue_examples() {
    let p = parse_cues("So I need the information about the following objects: black board");
    assert_eq!(p.cues, vec![VisualCue::new("black board")]);
    assert!(!p.degraded);

    let p = parse_cues("I need the following objects: white car and yellow car.");
    let phrases: Vec<_> = p.cues.iter().map(|c| c.phrase.as_str()).collect();
    assert_eq!(phrases, ["white car", "yellow car"]);

    let p = parse_cues("...following objects: all cars.");
    assert_eq!(p.cues[0].cue_type, CueType::Type2);

    let p = parse_cues("I am not sure what is needed");
    assert!(p.degraded);
    assert_eq!(p.cues.len(), 1);
}

#[test]
fn generate_cues_replays_exemplars() {
    let src = SourceImage::virtual_image(100, 100).unwrap();
    let ex = CueExemplars::hr_bench();
    let backend = ScriptedBackend::new(TableModel::default()).with_exemplar_answers(&ex);
    let p = generate_cues(&backend, &src, "How many cars in the image?", &ex).unwrap();
    assert_eq!(p.cues.len(), 1);
    assert_eq!(p.cues[0].phrase, "all cars");
    assert_eq!(p.cues[0].cue_type, CueType::Type2);

    let backend = ScriptedBackend::new(TableModel::default()).with_cue_completion("no idea");
    let p = generate_cues(&backend, &src, "What is on the shelf?", &ex).unwrap();
    assert!(p.degraded);
    assert_eq!(p.cues[0].cue_type, CueType::Type1);

    let backend = ScriptedBackend::new(TableModel::default()).with_cue_completion("   ");
    let p = generate_cues(&backend, &src, "What is on the shelf?", &ex).unwrap();
    assert!(p.degraded);
    assert_eq!(p.cues, vec![VisualCue { phrase: "What is on the shelf?".into(), cue_type: CueType::Type1 }]);

    assert!(generate_cues(&backend, &src, "  ", &ex).is_err());
}

#[test]
fn rank_and_stop_examples() {
    let tree = build_tree(1344, 1344, 336, 1.5).unwrap();
    let src = SourceImage::virtual_image(1344, 1344).unwrap();
    let leaf = tree.leaves().next().unwrap().id;
    let backend = ScriptedBackend::new(TableModel::new(Confidences::new(0.9, 0.1, 0.8)));
    let mut scorer = Scorer::new(&tree, &src, &backend, InputMode::Local);
    let cue = VisualCue::new("dog");

    // deepest level uses c_e alone
    let r = rank_score(&mut scorer, leaf, &cue, 0.2).unwrap();
    assert_eq!(r.score, 0.9);
    // depth 1 of 2 with b = 0.2: W = 0.4
    let r = rank_score(&mut scorer, NodeId(1), &cue, 0.2).unwrap();
    assert!((r.score - (0.4 * 0.9 + 0.6 * 0.1)).abs() < 1e-12);

    assert_eq!(stopping_check(&mut scorer, leaf, "q", 0.8).unwrap(), (true, 0.8));
    assert_eq!(stopping_check(&mut scorer, leaf, "q", 0.81).unwrap(), (false, 0.8));
}

#[test]
fn type2_never_evaluates_depth_two() {
    let tree = build_tree(1344, 1344, 336, 1.5).unwrap();
    let src = SourceImage::virtual_image(1344, 1344).unwrap();
    let backend = ScriptedBackend::new(TableModel::new(Confidences::uniform(0.9)));
    let mut scorer = Scorer::new(&tree, &src, &backend, InputMode::Local);
    let out = search_type2(&mut scorer, &VisualCue::new("all cars"), &SearchConfig::local()).unwrap();
    assert_eq!(out.results, (0..5).map(NodeId).collect::<Vec<_>>());
    assert!(out.trace.events.iter().all(|e| e.depth < 2));
    for leaf in tree.leaves() {
        assert_eq!(scorer.cached(leaf.id, PromptKind::Existing, "all cars"), None);
    }
    assert_eq!(scorer.queries(), 5);
}

#[test]
fn type2_threshold_is_inclusive() {
    let tree = build_tree(300, 300, 336, 1.5).unwrap();
    let src = SourceImage::virtual_image(300, 300).unwrap();
    for (c, expect) in [(0.8, 1), (0.79, 0)] {
        let backend = ScriptedBackend::new(TableModel::new(Confidences::uniform(c)));
        let mut scorer = Scorer::new(&tree, &src, &backend, InputMode::Local);
        let out = search_type2(&mut scorer, &VisualCue::new("all cars"), &SearchConfig::local())
            .unwrap();
        assert_eq!(out.results.len(), expect);
    }
}

#[test]
fn single_cue_searches_with_the_question() {
    let src = SourceImage::virtual_image(1344, 1344).unwrap();
    let target = b(700, 700, 300, 300);
    let model = TableModel::new(Confidences::new(0.1, 0.1, 0.1))
        .set(target, Confidences::uniform(0.9));
    let backend = ScriptedBackend::new(model)
        .with_cue_completion("So I need the information about the following objects: red bag.")
        .with_answer("red");
    let q = "What color is the bag?";
    let out = zoom_eye(&src, q, &SearchConfig::local(), &backend, &CueExemplars::v_star()).unwrap();
    assert_eq!(out.searches.len(), 1);
    assert_eq!(out.searches[0].trace.q_s.as_deref(), Some(q));
    assert_eq!(out.answer, "red");
    assert!(!out.fallback_used);
}

#[test]
fn two_cues_use_decomposed_questions() {
    let src = SourceImage::virtual_image(1344, 1344).unwrap();
    let backend = ScriptedBackend::new(TableModel::new(Confidences::uniform(0.9)))
        .with_cue_completion("...following objects: white car and yellow car.");
    let out = zoom_eye(
        &src,
        "Is the yellow car left of the white car?",
        &SearchConfig::local(),
        &backend,
        &CueExemplars::v_star(),
    )
    .unwrap();
    let qs: Vec<_> = out.searches.iter().map(|s| s.trace.q_s.clone().unwrap()).collect();
    assert_eq!(
        qs,
        [
            "What is the appearance of the white car?",
            "What is the appearance of the yellow car?"
        ]
    );
    // uniform 0.9 stops at the root for both cues
    assert_eq!(out.result_nodes, vec![NodeId(0), NodeId(0)]);
    assert_eq!(out.union, src.full_bbox());
}

#[test]
fn collective_cue_takes_the_breadth_first_path() {
    let src = SourceImage::virtual_image(1344, 1344).unwrap();
    let ex = CueExemplars::hr_bench();
    let backend = ScriptedBackend::new(TableModel::new(Confidences::uniform(0.9)))
        .with_exemplar_answers(&ex);
    let out = zoom_eye(&src, "How many cars in the image?", &SearchConfig::local(), &backend, &ex)
        .unwrap();
    let s = &out.searches[0];
    assert_eq!(s.trace.cue.cue_type, CueType::Type2);
    assert_eq!(s.trace.q_s, None);
    assert!(s.trace.events.iter().any(|e| e.action == TraceAction::Type2Include));
    assert!(s.trace.events.iter().all(|e| e.c_a.is_none()));
}

#[test]
fn empty_results_fall_back_to_the_root() {
    let src = SourceImage::virtual_image(1344, 1344).unwrap();
    let ex = CueExemplars::hr_bench();
    let backend = ScriptedBackend::new(TableModel::new(Confidences::uniform(0.1)))
        .with_exemplar_answers(&ex)
        .with_answers("zoomed", "full");
    let out = zoom_eye(&src, "How many cars in the image?", &SearchConfig::local(), &backend, &ex)
        .unwrap();
    assert!(out.searches[0].results.is_empty());
    assert!(out.fallback_used);
    assert_eq!(out.result_nodes, vec![NodeId(0)]);
    assert_eq!(out.answer, "full");
}

#[test]
fn empty_question_rejected() {
    let src = SourceImage::virtual_image(10, 10).unwrap();
    let backend = ScriptedBackend::new(TableModel::default());
    assert!(zoom_eye(&src, " ", &SearchConfig::local(), &backend, &CueExemplars::v_star()).is_err());
}

fn arb_search() -> impl Strategy<Value = (u32, u32, u64, SearchConfig)> {
    (
        336u32..2000,
        336u32..2000,
        any::<u64>(),
        prop::sample::select(vec![0.6, 0.7, 0.8, 0.9, 1.0]),
        prop::sample::select(vec![0.0, 0.2, 0.4]),
        1u32..4,
        0.0f64..1.0,
        1u32..4,
    )
        .prop_map(|(w, h, seed, tau, tau_min, delta, bias, mult)| {
            let cfg = SearchConfig {
                tau,
                tau_min,
                delta,
                bias_b: bias,
                c_multiplier: mult,
                ..SearchConfig::local()
            };
            (w, h, seed, cfg)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn type1_invariants((w, h, seed, cfg) in arb_search()) {
        let tree = build_tree(w, h, cfg.min_node_size, cfg.aspect_threshold).unwrap();
        let src = SourceImage::virtual_image(w, h).unwrap();
        let backend = ScriptedBackend::new(HashedModel(seed));
        let mut scorer = Scorer::new(&tree, &src, &backend, InputMode::Local);
        let cue = VisualCue::new("thing");
        let out = search_type1(&mut scorer, &cue, "q?", &cfg).unwrap();
        let ev = &out.trace.events;

        // each node popped at most once, pops bounded by the tree size
        let popped = out.trace.visited();
        prop_assert!(popped.len() <= tree.len());
        prop_assert_eq!(popped.iter().collect::<HashSet<_>>().len(), popped.len());

        // steps strictly increase, pops never decrease
        for pair in ev.windows(2) {
            prop_assert!(pair[1].step > pair[0].step);
            prop_assert!(pair[1].pops >= pair[0].pops);
        }

        // every pop after the first takes a best-ranked frontier node
        let mut frontier: HashMap<NodeId, f64> = HashMap::new();
        for e in ev {
            match e.action {
                TraceAction::AppendChild => {
                    frontier.insert(e.node, e.rank.unwrap());
                }
                TraceAction::Pop if e.node != tree.root().id => {
                    let r = frontier.remove(&e.node).expect("popped node was appended");
                    prop_assert!(frontier.values().all(|o| *o <= r));
                }
                _ => {}
            }
        }

        let last = out.trace.terminal().unwrap();
        if out.fallback {
            prop_assert_eq!(last.action, TraceAction::Fallback);
        } else {
            prop_assert!(matches!(last.action, TraceAction::StopCurrent | TraceAction::StopBest));
            prop_assert!(last.c_a.unwrap() >= last.tau);
            prop_assert!(last.tau >= cfg.tau_min);
        }

        // reruns serialise identically
        let mut again = Scorer::new(&tree, &src, &backend, InputMode::Local);
        let out2 = search_type1(&mut again, &cue, "q?", &cfg).unwrap();
        prop_assert_eq!(
            serde_json::to_string(&out.trace).unwrap(),
            serde_json::to_string(&out2.trace).unwrap()
        );
    }

    #[test]
    fn weight_rises_with_depth(big_d in 1u32..8, bias in 0.0f64..=1.0) {
        let mut prev = weight(0, big_d, bias).unwrap();
        prop_assert!((prev - bias).abs() < 1e-12);
        for d in 1..=big_d {
            let w = weight(d, big_d, bias).unwrap();
            prop_assert!(w >= prev);
            prop_assert!((0.0..=1.0).contains(&w));
            prev = w;
        }
        prop_assert_eq!(prev, 1.0);
    }

    #[test]
    fn type2_results_clear_the_threshold(w in 100u32..2000, h in 100u32..2000, seed in any::<u64>()) {
        let tree = build_tree(w, h, 336, 1.5).unwrap();
        let src = SourceImage::virtual_image(w, h).unwrap();
        let backend = ScriptedBackend::new(HashedModel(seed));
        let mut scorer = Scorer::new(&tree, &src, &backend, InputMode::Local);
        let cfg = SearchConfig::local();
        let out = search_type2(&mut scorer, &VisualCue::new("all things"), &cfg).unwrap();
        for id in &out.results {
            prop_assert!(tree.node(*id).depth < cfg.max_type2_depth);
            let c_e = scorer.cached(*id, PromptKind::Existing, "all things").unwrap();
            prop_assert!(c_e >= cfg.tau2);
        }
        let expected = tree
            .nodes()
            .iter()
            .filter(|n| n.depth < cfg.max_type2_depth)
            .filter(|n| HashedModel(seed).confidence(n.bbox, PromptKind::Existing) >= cfg.tau2)
            .count();
        prop_assert_eq!(out.results.len(), expected);
    }
}
