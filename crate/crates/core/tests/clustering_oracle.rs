mod common;

use aqs::backends::mock::{MockEmbedder, ScriptedEmbedder};
use aqs::backends::Answer;
use aqs::clustering::{cluster_with_trace, merge_step, ClusterConfig, GroupSet};
use proptest::prelude::*;

fn answers(labels: &[String]) -> Vec<Answer> {
    labels.iter().enumerate().map(|(i, l)| Answer::new(l.as_str()).from_query(i)).collect()
}

#[test]
fn matches_greedy_oracle_on_random_instances() {
    let mut r = common::rng(21);
    let mut checked = 0;
    while checked < 200 {
        let inst = common::ClusterInstance::random(&mut r);
        let oracle = common::greedy_oracle(&inst.vectors, inst.patience);
        if !oracle.distinct {
            continue;
        }
        let run = cluster_with_trace(
            &answers(&inst.labels),
            &ClusterConfig::new(inst.patience).unwrap(),
            &inst.embedder(),
        )
        .unwrap();
        assert_eq!(run.kept.indices(), oracle.kept.as_slice());
        assert_eq!(run.merges, oracle.merges);
        checked += 1;
    }
}

#[test]
fn worked_example_four_angles() {
    // Oracle replay: pairs (0°,5°) and (90°,95°) merge first; at sizes {2,2}
    // the guard 2 > 0.5*4 fails, so the two pairs merge.
    let vectors: Vec<Vec<f64>> = [0.0, 5.0, 90.0, 95.0]
        .iter()
        .map(|&d| ScriptedEmbedder::unit_at(2, d))
        .collect();
    let oracle = common::greedy_oracle(&vectors, 0.5);
    assert_eq!(oracle.kept, vec![0, 1, 2, 3]);
    assert_eq!(oracle.merges, 3);

    let labels: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
    let mut e = ScriptedEmbedder::new(2);
    for (l, v) in labels.iter().zip(&vectors) {
        e.insert(l, v.clone());
    }
    let run = cluster_with_trace(&answers(&labels), &ClusterConfig::new(0.5).unwrap(), &e).unwrap();
    assert_eq!(run.kept.indices(), &[0, 1, 2, 3]);
    assert_eq!(run.merges, 3);
}

#[test]
fn merge_step_three_angles() {
    let labels: Vec<String> = (0..3).map(|i| format!("a{i}")).collect();
    let e = ScriptedEmbedder::new(2)
        .with("a0", ScriptedEmbedder::unit_at(2, 0.0))
        .with("a1", ScriptedEmbedder::unit_at(2, 5.0))
        .with("a2", ScriptedEmbedder::unit_at(2, 90.0));
    let next = merge_step::<f64, _>(&GroupSet::singletons(&answers(&labels)), &e).unwrap();
    assert_eq!(next.groups()[0].indices(), &[0, 1]);
}

#[test]
fn duplicate_answers_stay_distinct_members() {
    let texts: Vec<String> = ["pipe leak", "pipe leak", "gantry vehicle"].iter().map(|s| s.to_string()).collect();
    let run = cluster_with_trace(&answers(&texts), &aqs::ClusterConfig::default(), &MockEmbedder::default()).unwrap();
    assert_eq!(run.kept.size(), 2);
    assert_eq!(run.kept.concat_text(), "pipe leak. pipe leak");
}

proptest! {
    #[test]
    fn merges_conserve_membership(seed in 0u64..100_000) {
        let mut r = common::rng(seed);
        let inst = common::ClusterInstance::random(&mut r);
        let e = inst.embedder();
        let mut gs = GroupSet::singletons(&answers(&inst.labels));
        let k = gs.len();
        while gs.len() > 1 {
            let next = merge_step::<f64, _>(&gs, &e).unwrap();
            prop_assert_eq!(next.len(), gs.len() - 1);
            prop_assert_eq!(next.total(), k);
            let mut idx: Vec<usize> = next.groups().iter().flat_map(|g| g.indices().to_vec()).collect();
            idx.sort();
            prop_assert_eq!(idx, (0..k).collect::<Vec<_>>());
            for g in next.groups() {
                prop_assert_eq!(g.size(), g.members().len());
                prop_assert!(g.size() >= 1);
            }
            gs = next;
        }
    }

    #[test]
    fn guard_is_sound(seed in 0u64..100_000) {
        let mut r = common::rng(seed);
        let inst = common::ClusterInstance::random(&mut r);
        let q = inst.patience;
        let run = cluster_with_trace(&answers(&inst.labels), &ClusterConfig::new(q).unwrap(), &inst.embedder()).unwrap();
        let total = run.total as f64;
        prop_assert!(run.kept.size() as f64 > q * total);
        prop_assert!(run.merges < inst.labels.len().max(1));
        match run.max_size_before_last_merge {
            Some(m) => prop_assert!(m as f64 <= q * total),
            None => prop_assert_eq!(run.merges, 0),
        }
    }
}
