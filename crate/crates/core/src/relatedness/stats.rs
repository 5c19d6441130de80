use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{GraphLabel, RelatednessGraph, TableGraphs};
use crate::table::TableId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub graph: GraphLabel,
    pub filter: String,
    pub n_tables: usize,
    pub edges: usize,
    /// Ordered pairs, i.e. twice the undirected edge count.
    pub nonzero_entries: usize,
    /// Percentage of ordered off-diagonal pairs that are related.
    pub density_percent: f64,
}

/// `2|E| / (n(n-1))` as a percentage; 0 for fewer than two tables.
pub fn graph_density(g: &RelatednessGraph) -> DensityRow {
    let n = g.n_tables();
    let edges = g.edge_count();
    let density_percent = if n < 2 {
        0.0
    } else {
        100.0 * (2 * edges) as f64 / (n as f64 * (n - 1) as f64)
    };
    DensityRow {
        graph: g.label,
        filter: g.filter.descriptor(),
        n_tables: n,
        edges,
        nonzero_entries: 2 * edges,
        density_percent,
    }
}

pub fn density_table(graphs: &TableGraphs) -> Vec<DensityRow> {
    GraphLabel::ALL.iter().map(|&l| graph_density(graphs.get(l))).collect()
}

/// Related-table count per table.
pub fn per_query_positive_counts(g: &RelatednessGraph) -> BTreeMap<TableId, usize> {
    g.nodes().map(|id| (id.clone(), g.degree(id))).collect()
}

/// Number of tables per related-table count.
pub fn positive_count_histogram(counts: &BTreeMap<TableId, usize>) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for &c in counts.values() {
        *hist.entry(c).or_default() += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relatedness::CitationFilter;

    fn graph(n: usize, edges: &[(usize, usize)]) -> RelatednessGraph {
        let id = |i: usize| TableId::new(format!("t{i}"));
        RelatednessGraph::new(
            GraphLabel::All,
            CitationFilter::default(),
            (0..n).map(id),
            edges.iter().map(|&(a, b)| (id(a), id(b))),
        )
        .unwrap()
    }

    #[test]
    fn density_examples() {
        let d = graph_density(&graph(3, &[(0, 1)]));
        assert_eq!(d.nonzero_entries, 2);
        assert!((d.density_percent - 100.0 / 3.0).abs() < 1e-12);
        let k4: Vec<_> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        assert_eq!(graph_density(&graph(4, &k4)).density_percent, 100.0);
        assert_eq!(graph_density(&graph(1, &[])).density_percent, 0.0);
    }

    #[test]
    fn star_degrees() {
        let g = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let counts = per_query_positive_counts(&g);
        assert_eq!(counts[&TableId::new("t0")], 5);
        assert_eq!(counts[&TableId::new("t3")], 1);
        assert_eq!(positive_count_histogram(&counts), BTreeMap::from([(1, 5), (5, 1)]));
        let empty = per_query_positive_counts(&graph(3, &[]));
        assert!(empty.values().all(|&c| c == 0));
    }
}
