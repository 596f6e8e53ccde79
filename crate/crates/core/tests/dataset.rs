use std::collections::HashSet;

use semtrans_core::dataset::{
    baseline_retrieve, build_queries, generate_fixture_corpus, group_rollup, split_dev_test, ClusterRegistry,
    FixtureSpec, ImageIndex, QuerySet, RegistryCounts, Split, SOURCES_PER_TARGET,
};
use semtrans_core::metrics::{FeatureSet, QueryOutcome};

fn synthetic_index(reg: &ClusterRegistry, per_label: usize) -> ImageIndex {
    let mut idx = ImageIndex::default();
    for l in reg.labels() {
        let ids = (0..per_label).map(|k| format!("val/{l}/{k}.png")).collect();
        idx.validation.insert(l.to_string(), ids);
    }
    idx
}

#[test]
fn shipped_protocol_counts() {
    let reg = ClusterRegistry::shipped().unwrap();
    assert_eq!(reg.counts(), RegistryCounts::BENCHMARK);
    let idx = synthetic_index(&reg, 10);
    let qs = build_queries(&reg, &idx, 0).unwrap();
    assert_eq!(qs.len(), 2184);
    qs.validate(&reg).unwrap();
    for target in reg.labels() {
        assert_eq!(qs.queries().filter(|q| q.target_label == target).count(), SOURCES_PER_TARGET);
    }
    let split = split_dev_test(&qs, 1).unwrap();
    let dev: HashSet<&str> = split.in_split(Split::Dev).map(|q| q.id.as_str()).collect();
    let test: HashSet<&str> = split.in_split(Split::Test).map(|q| q.id.as_str()).collect();
    assert_eq!((dev.len(), test.len()), (1092, 1092));
    assert!(dev.is_disjoint(&test));
    assert_eq!(split, split_dev_test(&qs, 1).unwrap());
    assert_ne!(split, split_dev_test(&qs, 2).unwrap());
}

#[test]
fn queries_are_a_pure_function_of_the_seed() {
    let reg = ClusterRegistry::shipped().unwrap();
    let idx = synthetic_index(&reg, 3);
    assert_eq!(build_queries(&reg, &idx, 4).unwrap(), build_queries(&reg, &idx, 4).unwrap());
    assert_ne!(build_queries(&reg, &idx, 4).unwrap(), build_queries(&reg, &idx, 5).unwrap());
}

#[test]
fn zebra_sources_are_all_sorrel() {
    let reg = ClusterRegistry::shipped().unwrap();
    let qs = build_queries(&reg, &synthetic_index(&reg, 12), 0).unwrap();
    let zebra: Vec<_> = qs.queries().filter(|q| q.target_label == "zebra").collect();
    assert!(zebra.iter().all(|q| q.source_label == "sorrel" && q.cluster_id == "equine"));
    assert_eq!(zebra.iter().map(|q| &q.image_id).collect::<HashSet<_>>().len(), 8);
}

#[test]
fn query_file_round_trips() {
    let reg = ClusterRegistry::shipped().unwrap();
    let qs = split_dev_test(&build_queries(&reg, &synthetic_index(&reg, 2), 3).unwrap(), 3).unwrap();
    let text = qs.to_jsonl();
    assert_eq!(text.lines().count(), 2184);
    assert_eq!(QuerySet::from_jsonl(&text).unwrap().records, qs.records);
}

#[test]
fn retrieve_and_rollup_on_fixture_corpus() {
    let reg = ClusterRegistry::from_json(
        r#"[
            {"group": "animal", "cluster": "equine", "labels": ["sorrel", "zebra"]},
            {"group": "animal", "cluster": "feline", "labels": ["lynx", "puma", "tiger"]},
            {"group": "food", "cluster": "squash", "labels": ["zucchini", "acorn squash", "spaghetti squash"]}
        ]"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let spec = FixtureSpec { val_per_label: 3, train_per_label: 2, size: 12, seed: 1 };
    let idx = generate_fixture_corpus(dir.path(), &reg, spec).unwrap();
    let qs = build_queries(&reg, &idx, 0).unwrap();
    assert_eq!(qs.len(), 8 * 8);
    let mut outcomes = Vec::new();
    for q in qs.queries() {
        let id = baseline_retrieve(q, &idx, 7).unwrap();
        assert!(idx.validation_images(&q.target_label).contains(&id));
        assert_eq!(id, baseline_retrieve(q, &idx, 7).unwrap());
        outcomes.push(QueryOutcome {
            query_id: q.id.clone(),
            target_label: q.target_label.clone(),
            features: vec![id.len() as f64, 1.0],
            correct: true,
            lpips_x100: 0.0,
        });
    }
    let real_rows: Vec<Vec<f64>> = reg.labels().map(|l| vec![l.len() as f64, 0.0]).collect();
    let real = FeatureSet::from_rows(&real_rows, Some(reg.labels().map(String::from).collect())).unwrap();
    let rows = group_rollup(&reg, &outcomes, &real, 0.0).unwrap();
    assert_eq!(rows.iter().map(|r| r.query_count).sum::<usize>(), outcomes.len());
    assert!(rows.iter().all(|r| r.failure_rate == 0.0));
}
