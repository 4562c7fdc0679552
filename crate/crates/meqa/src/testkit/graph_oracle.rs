//! Reference implementation of k-hop traversal by explicit path
//! enumeration, plus a seeded random graph generator. The fast traversal
//! in `graph` deduplicates frontiers; this one walks every path and
//! collects endpoints, which must come to the same set.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, EntityRef, GraphError, RelationRef, WikiGraph};

/// Directed random graph: up to `max_nodes` entities, three relation
/// kinds, edge density tuned so multi-hop paths actually exist.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> WikiGraph {
    let n = rng.gen_range(2..=max_nodes.max(2));
    let mut g = WikiGraph::new();
    for i in 0..n {
        g.add_entity(EntityRef::new(format!("E{i}"), format!("node {i}")))
            .expect("fresh entity");
    }
    for p in 1..=3 {
        g.add_relation(RelationRef::new(format!("P{p}"), format!("relation {p}")))
            .expect("fresh relation");
    }
    // Expected out-degree ~2 per relation, capped for small n.
    let edges_per_relation = (2 * n).min(n * (n - 1));
    for p in 1..=3 {
        for _ in 0..edges_per_relation {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            g.add_edge(Edge::new(format!("E{a}"), format!("E{b}"), format!("P{p}")))
                .expect("endpoints exist");
        }
    }
    g
}

fn relation_for_hop<'a>(relations: &[&'a str], hop: usize) -> &'a str {
    relations.get(hop).copied().unwrap_or(relations[relations.len() - 1])
}

/// Every node reachable from `start` over a path of exactly `hops` edges,
/// where edge `i` must carry the relation for hop `i` (a single relation
/// repeats; a shorter list repeats its last element).
pub fn khop_by_path_enumeration(
    graph: &WikiGraph,
    start: &str,
    relations: &[&str],
    hops: usize,
) -> Result<BTreeSet<String>, GraphError> {
    if graph.entity(start).is_none() {
        return Err(GraphError::MissingEntity(start.to_string()));
    }
    if hops == 0 {
        return Ok(BTreeSet::from([start.to_string()]));
    }
    if relations.is_empty() {
        return Ok(BTreeSet::new());
    }
    let mut endpoints = BTreeSet::new();
    let mut stack: Vec<(String, usize)> = vec![(start.to_string(), 0)];
    while let Some((node, hop)) = stack.pop() {
        if hop == hops {
            endpoints.insert(node);
            continue;
        }
        let wanted = relation_for_hop(relations, hop);
        for e in graph.edges() {
            if e.source == node && e.relation == wanted {
                stack.push((e.target.clone(), hop + 1));
            }
        }
    }
    Ok(endpoints)
}
