mod common;

use std::collections::BTreeSet;

use common::oracle::{self, edge};
use modeltables::relatedness::{
    build_table_graphs, per_query_positive_counts, CitationFilter, CitationIndex, GraphLabel, ModelIndex, ModelRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_worlds_match_double_loop() {
    for seed in 0..60u64 {
        let world = common::random_world(&mut ChaCha8Rng::seed_from_u64(seed));
        for f in CitationFilter::all_eight() {
            let (g, _) = build_table_graphs(&world.corpus, &world.model_index(), &world.citation_index(), &f).unwrap();
            let want = oracle::pairwise_graphs(&world.corpus, &world.papers, &world.models, &f);
            for (i, label) in GraphLabel::ALL.iter().enumerate() {
                assert_eq!(oracle::edge_set(g.get(*label)), want[i], "seed {seed}, {f}, {label}");
            }
        }
    }
}

#[test]
fn base_model_siblings_and_parent_all_connect() {
    let mut a = ModelRecord::new("org/a");
    a.base_models.insert("org/b".into());
    let mut c = ModelRecord::new("org/c");
    c.base_models.insert("org/b".into());
    let models = ModelIndex::new([a, ModelRecord::new("org/b"), c]);
    let corpus: Vec<_> = ["org/a", "org/b", "org/c"]
        .iter()
        .enumerate()
        .map(|(i, m)| common::record(i, [m.to_string()]))
        .collect();
    let papers = CitationIndex::new(Vec::new()).unwrap();
    let (g, _) = build_table_graphs(&corpus, &models, &papers, &CitationFilter::default()).unwrap();
    let ids: Vec<&str> = corpus.iter().map(|r| r.table_id.as_str()).collect();
    let want: BTreeSet<_> = [edge(ids[0], ids[1]), edge(ids[1], ids[2]), edge(ids[0], ids[2])].into();
    assert_eq!(oracle::edge_set(&g.model), want);
    assert_eq!(g.paper.edge_count(), 0);
    assert_eq!(g.dataset.edge_count(), 0);
}

#[test]
fn tables_of_one_model_are_related() {
    let models = ModelIndex::new([ModelRecord::new("org/a")]);
    let corpus = vec![common::record(0, ["org/a".to_string()]), common::record(1, ["org/a".to_string()])];
    let (g, _) = build_table_graphs(&corpus, &models, &CitationIndex::new(Vec::new()).unwrap(), &CitationFilter::default()).unwrap();
    assert_eq!(g.model.edge_count(), 1);
    assert_eq!(g.all.edge_count(), 1);
}

#[test]
fn positive_counts_match_degree_recount() {
    let world = common::random_world(&mut ChaCha8Rng::seed_from_u64(99));
    let (g, _) = build_table_graphs(&world.corpus, &world.model_index(), &world.citation_index(), &CitationFilter::default()).unwrap();
    let edges = oracle::edge_set(&g.all);
    for (id, n) in per_query_positive_counts(&g.all) {
        let recount = edges.iter().filter(|(a, b)| a == id.as_str() || b == id.as_str()).count();
        assert_eq!(n, recount);
    }
}
