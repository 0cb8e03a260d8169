//! Context graph construction: dependency trees and diagram parse graphs
//! become node lists plus symmetrically normalized adjacency matrices.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::corpus::{DependencyTree, DiagramGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Textual,
    VisualContext,
    QuestionDiagram,
}

/// A context graph: K nodes with display tokens, a K×K normalized adjacency
/// (row-major, symmetric, self-loops), and edge relation labels kept as
/// diagnostics. `source_indices` maps each node back to its dependency-tree
/// node or diagram entity.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextGraph {
    pub node_tokens: Vec<String>,
    pub adjacency: Vec<f64>,
    pub kind: GraphKind,
    pub relations: Vec<(usize, usize, String)>,
    pub source_indices: Vec<usize>,
    /// Positions (into `node_tokens`) of the surviving anchor nodes.
    pub anchors: Vec<usize>,
}

impl ContextGraph {
    pub fn node_count(&self) -> usize {
        self.node_tokens.len()
    }

    pub fn adjacency_at(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.node_count() + j]
    }
}

/// Tree nodes whose token exactly matches a question or candidate token.
pub fn anchor_nodes<S: AsRef<str>>(
    tree: &DependencyTree,
    question: &[S],
    candidate: &[S],
) -> BTreeSet<usize> {
    let mut wanted: BTreeSet<&str> = question.iter().map(AsRef::as_ref).collect();
    wanted.extend(candidate.iter().map(AsRef::as_ref));
    tree.nodes
        .iter()
        .filter(|(_, token)| wanted.contains(token.as_str()))
        .map(|(idx, _)| *idx)
        .collect()
}

/// D^{-1/2} (raw + I) D^{-1/2} where D is the degree matrix of raw + I.
/// `raw` is a 0/1 symmetric matrix with zero diagonal.
pub fn normalize_adjacency(raw: &[f64], k: usize) -> Vec<f64> {
    assert_eq!(raw.len(), k * k, "adjacency must be {k}x{k}");
    let mut deg = vec![0.0; k];
    for i in 0..k {
        deg[i] = 1.0 + (0..k).map(|j| raw[i * k + j]).sum::<f64>();
    }
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let a_hat = raw[i * k + j] + if i == j { 1.0 } else { 0.0 };
            out[i * k + j] = a_hat / (deg[i] * deg[j]).sqrt();
        }
    }
    out
}

/// Builds the textual context graph from a dependency tree and anchor set.
///
/// Two expansion rounds over edge units u = {v1, v2}: the first keeps units
/// touching an anchor, the second keeps units touching any node kept so far.
/// Surviving endpoints (in token order) and kept units form the graph. With
/// no surviving nodes the graph degenerates to the paragraph's first token.
/// Above `cap` nodes, retention is by ascending BFS distance from the anchor
/// set, ties by ascending token position.
pub fn build_textual_graph(
    tree: &DependencyTree,
    anchors: &BTreeSet<usize>,
    cap: usize,
    relation_nodes: bool,
) -> ContextGraph {
    assert!(cap >= 1, "node cap must be positive");
    let units: Vec<(usize, usize, &str)> =
        tree.edges.iter().map(|(h, d, r)| (*h, *d, r.as_str())).collect();

    let mut kept = vec![false; units.len()];
    let mut frontier: BTreeSet<usize> = anchors.clone();
    for _depth in 0..2 {
        for (ui, (a, b, _)) in units.iter().enumerate() {
            if !kept[ui] && (frontier.contains(a) || frontier.contains(b)) {
                kept[ui] = true;
            }
        }
        frontier = units
            .iter()
            .zip(&kept)
            .filter(|(_, k)| **k)
            .flat_map(|((a, b, _), _)| [*a, *b])
            .collect();
    }

    let surviving: BTreeSet<usize> = frontier;
    if surviving.is_empty() {
        // no anchors, or anchors touching no edge: single-node fallback
        let token = tree.nodes.first().map(|(_, t)| t.clone()).unwrap_or_default();
        return ContextGraph {
            node_tokens: vec![token],
            adjacency: vec![1.0],
            kind: GraphKind::Textual,
            relations: vec![],
            source_indices: tree.nodes.first().map(|(i, _)| *i).into_iter().collect(),
            anchors: vec![],
        };
    }

    // expanded node space: tree nodes, plus one synthetic node per kept unit
    // when relation labels participate as nodes
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    enum NodeRef {
        Word(usize),
        Relation(usize),
    }
    let mut nodes: Vec<NodeRef> = surviving.iter().map(|&i| NodeRef::Word(i)).collect();
    let mut edges: Vec<(NodeRef, NodeRef, String)> = Vec::new();
    for (ui, (a, b, rel)) in units.iter().enumerate() {
        if !kept[ui] {
            continue;
        }
        if relation_nodes {
            nodes.push(NodeRef::Relation(ui));
            edges.push((NodeRef::Word(*a), NodeRef::Relation(ui), rel.to_string()));
            edges.push((NodeRef::Relation(ui), NodeRef::Word(*b), rel.to_string()));
        } else {
            edges.push((NodeRef::Word(*a), NodeRef::Word(*b), rel.to_string()));
        }
    }

    // BFS distance from the surviving anchors, for cap-based retention
    let index_of: BTreeMap<NodeRef, usize> =
        nodes.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
    let mut adj_list = vec![Vec::new(); nodes.len()];
    for (a, b, _) in &edges {
        let (ia, ib) = (index_of[a], index_of[b]);
        adj_list[ia].push(ib);
        adj_list[ib].push(ia);
    }
    let mut dist = vec![usize::MAX; nodes.len()];
    let mut queue = VecDeque::new();
    for (i, n) in nodes.iter().enumerate() {
        if matches!(n, NodeRef::Word(w) if anchors.contains(w)) {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adj_list[i] {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }

    let mut order: Vec<usize> = (0..nodes.len()).collect();
    // ties by token position; synthetic relation nodes sort after all words
    let position = |n: &NodeRef| match n {
        NodeRef::Word(w) => *w,
        NodeRef::Relation(ui) => tree.nodes.len() + ui,
    };
    order.sort_by_key(|&i| (dist[i], position(&nodes[i])));
    let retained: BTreeSet<usize> = order.into_iter().take(cap).collect();

    let mut final_nodes: Vec<usize> = retained.iter().copied().collect();
    final_nodes.sort_by_key(|&i| position(&nodes[i]));
    let renumber: BTreeMap<usize, usize> =
        final_nodes.iter().enumerate().map(|(new, &old)| (old, new)).collect();

    let k = final_nodes.len();
    let mut raw = vec![0.0; k * k];
    let mut relations = Vec::new();
    for (a, b, rel) in &edges {
        let (ia, ib) = (index_of[a], index_of[b]);
        let (Some(&na), Some(&nb)) = (renumber.get(&ia), renumber.get(&ib)) else {
            continue;
        };
        if raw[na * k + nb] == 0.0 {
            raw[na * k + nb] = 1.0;
            raw[nb * k + na] = 1.0;
            relations.push((na, nb, rel.clone()));
        }
    }

    let token_of = |n: &NodeRef| match n {
        NodeRef::Word(w) => tree.nodes[*w].1.clone(),
        NodeRef::Relation(ui) => units[*ui].2.to_string(),
    };
    let anchors_out: Vec<usize> = final_nodes
        .iter()
        .enumerate()
        .filter(|(_, &old)| matches!(&nodes[old], NodeRef::Word(w) if anchors.contains(w)))
        .map(|(new, _)| new)
        .collect();

    ContextGraph {
        node_tokens: final_nodes.iter().map(|&i| token_of(&nodes[i])).collect(),
        adjacency: normalize_adjacency(&raw, k),
        kind: GraphKind::Textual,
        relations,
        source_indices: final_nodes.iter().map(|&i| position(&nodes[i])).collect(),
        anchors: anchors_out,
    }
}

/// Diagram parse graph → context graph: one node per entity, edges from
/// relations. Truncation above `cap` keeps the lowest entity indices.
pub fn build_diagram_graph(dg: &DiagramGraph, kind: GraphKind, cap: usize) -> ContextGraph {
    assert!(cap >= 1, "node cap must be positive");
    let k = dg.entities.len().min(cap);
    let mut raw = vec![0.0; k * k];
    let mut relations = Vec::new();
    for &(a, b) in &dg.relations {
        if a == b || a >= k || b >= k {
            continue;
        }
        if raw[a * k + b] == 0.0 {
            raw[a * k + b] = 1.0;
            raw[b * k + a] = 1.0;
            relations.push((a, b, "related".to_string()));
        }
    }
    ContextGraph {
        node_tokens: dg.entities[..k].iter().map(|e| e.name_tokens.join(" ")).collect(),
        adjacency: normalize_adjacency(&raw, k),
        kind,
        relations,
        source_indices: (0..k).collect(),
        anchors: vec![],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountNoun {
    Objects,
    Stages,
}

/// Entity count phrased as tokens, e.g. "there are 5 objects"; appended to
/// question text for diagram questions.
pub fn count_sentence(dg: &DiagramGraph, noun: CountNoun) -> Vec<String> {
    let noun = match noun {
        CountNoun::Objects => "objects",
        CountNoun::Stages => "stages",
    };
    vec!["there".into(), "are".into(), dg.entity_count.to_string(), noun.into()]
}

/// The four fields of the on-disk graph dump.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphDump {
    pub node_tokens: Vec<String>,
    pub adjacency_dense: Vec<Vec<f64>>,
    pub kind: GraphKind,
    pub relations: Vec<(usize, usize, String)>,
}

impl From<&ContextGraph> for GraphDump {
    fn from(g: &ContextGraph) -> Self {
        let k = g.node_count();
        GraphDump {
            node_tokens: g.node_tokens.clone(),
            adjacency_dense: (0..k).map(|i| g.adjacency[i * k..(i + 1) * k].to_vec()).collect(),
            kind: g.kind,
            relations: g.relations.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Entity;

    fn chain(tokens: &[&str]) -> DependencyTree {
        DependencyTree {
            nodes: tokens.iter().enumerate().map(|(i, t)| (i, t.to_string())).collect(),
            edges: (1..tokens.len()).map(|i| (i - 1, i, "dep".into())).collect(),
        }
    }

    fn anchor_set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    #[test]
    fn anchors_match_exact_tokens() {
        let tree = chain(&["currents", "flow", "core"]);
        let anchors = anchor_nodes(&tree, &["inner", "core"], &[] as &[&str]);
        assert_eq!(anchors, anchor_set(&[2]));
        let none = anchor_nodes(&tree, &["magma"], &["crust"]);
        assert!(none.is_empty());
    }

    #[test]
    fn full_anchor_coverage_keeps_whole_tree() {
        let tree = chain(&["a", "b", "c", "d"]);
        let g = build_textual_graph(&tree, &anchor_set(&[0, 1, 2, 3]), 75, false);
        assert_eq!(g.node_tokens, ["a", "b", "c", "d"]);
        assert_eq!(g.relations.len(), 3);
    }

    #[test]
    fn depth_two_expansion_on_a_chain() {
        // a-b-c-d-e-f with anchor {a}: round 1 keeps {a,b}, round 2 adds {b,c}
        let tree = chain(&["a", "b", "c", "d", "e", "f"]);
        let g = build_textual_graph(&tree, &anchor_set(&[0]), 75, false);
        assert_eq!(g.node_tokens, ["a", "b", "c"]);
        assert_eq!(g.anchors, [0]);
    }

    #[test]
    fn empty_anchor_set_falls_back_to_first_token() {
        let tree = chain(&["water", "erodes", "soil"]);
        let g = build_textual_graph(&tree, &BTreeSet::new(), 75, false);
        assert_eq!(g.node_tokens, ["water"]);
        assert_eq!(g.adjacency, vec![1.0]);
    }

    #[test]
    fn isolated_anchor_also_falls_back() {
        // one-token sentences: no units at all
        let tree = DependencyTree { nodes: vec![(0, "alone".into())], edges: vec![] };
        let g = build_textual_graph(&tree, &anchor_set(&[0]), 75, false);
        assert_eq!(g.node_tokens, ["alone"]);
    }

    #[test]
    fn cap_keeps_nodes_closest_to_anchors() {
        // star around index 3 plus chain tail; anchor at 3
        let tree = DependencyTree {
            nodes: (0..7).map(|i| (i, format!("t{i}"))).collect(),
            edges: vec![
                (3, 0, "dep".into()),
                (3, 1, "dep".into()),
                (3, 2, "dep".into()),
                (3, 4, "dep".into()),
                (4, 5, "dep".into()),
                (5, 6, "dep".into()),
            ],
        };
        let g = build_textual_graph(&tree, &anchor_set(&[3]), 4, false);
        // dist0: {3}; dist1: {0,1,2,4}; cap 4 keeps 3 plus lowest-position dist-1 nodes
        assert_eq!(g.node_tokens, ["t0", "t1", "t2", "t3"]);
        assert!(g.node_count() <= 4);
    }

    #[test]
    fn monotone_under_anchor_growth() {
        let tree = chain(&["a", "b", "c", "d", "e", "f", "g"]);
        let small = build_textual_graph(&tree, &anchor_set(&[0]), usize::MAX >> 1, false);
        let large = build_textual_graph(&tree, &anchor_set(&[0, 4]), usize::MAX >> 1, false);
        for t in &small.node_tokens {
            assert!(large.node_tokens.contains(t), "node {t} disappeared");
        }
    }

    #[test]
    fn relation_nodes_interpose_between_words() {
        let tree = chain(&["a", "b"]);
        let g = build_textual_graph(&tree, &anchor_set(&[0]), 75, true);
        assert_eq!(g.node_tokens, ["a", "b", "dep"]);
        // direct a-b edge is replaced by a-dep and dep-b
        assert_eq!(g.adjacency_at(0, 1), 0.0);
        assert!(g.adjacency_at(0, 2) > 0.0);
        assert!(g.adjacency_at(2, 1) > 0.0);
    }

    #[test]
    fn single_entity_diagram_is_a_self_loop() {
        let dg = DiagramGraph {
            id: "d".into(),
            entities: vec![Entity { index: 0, name_tokens: vec!["cell".into()] }],
            relations: vec![],
            entity_count: 1,
        };
        let g = build_diagram_graph(&dg, GraphKind::QuestionDiagram, 25);
        assert_eq!(g.adjacency, vec![1.0]);
    }

    #[test]
    fn two_related_entities_normalize_to_half() {
        let dg = DiagramGraph {
            id: "d".into(),
            entities: vec![
                Entity { index: 0, name_tokens: vec!["inner".into(), "core".into()] },
                Entity { index: 1, name_tokens: vec!["mantle".into()] },
            ],
            relations: vec![(0, 1)],
            entity_count: 2,
        };
        let g = build_diagram_graph(&dg, GraphKind::VisualContext, 35);
        assert_eq!(g.node_tokens, ["inner core", "mantle"]);
        for v in &g.adjacency {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn diagram_truncation_keeps_lowest_indices() {
        let dg = DiagramGraph {
            id: "d".into(),
            entities: (0..5)
                .map(|i| Entity { index: i, name_tokens: vec![format!("e{i}")] })
                .collect(),
            relations: vec![(0, 4), (1, 2)],
            entity_count: 5,
        };
        let g = build_diagram_graph(&dg, GraphKind::VisualContext, 3);
        assert_eq!(g.node_tokens, ["e0", "e1", "e2"]);
        // edge to the truncated entity 4 is dropped
        assert_eq!(g.relations, vec![(1, 2, "related".to_string())]);
    }

    #[test]
    fn count_sentences_match_entity_counts() {
        let dg = |n: usize| DiagramGraph {
            id: "d".into(),
            entities: (0..n).map(|i| Entity { index: i, name_tokens: vec![format!("e{i}")] }).collect(),
            relations: vec![],
            entity_count: n,
        };
        assert_eq!(count_sentence(&dg(5), CountNoun::Objects), ["there", "are", "5", "objects"]);
        assert_eq!(count_sentence(&dg(6), CountNoun::Stages), ["there", "are", "6", "stages"]);
        assert_eq!(count_sentence(&dg(0), CountNoun::Objects), ["there", "are", "0", "objects"]);
    }

    #[test]
    fn normalization_identity_cases() {
        assert_eq!(normalize_adjacency(&[0.0], 1), vec![1.0]);
        let two = normalize_adjacency(&[0.0, 1.0, 1.0, 0.0], 2);
        for v in two {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }
}
