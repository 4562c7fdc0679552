//! Wiki graph model: entities, typed edges, owner-scoped properties, and
//! hop traversal.
//!
//! The graph is an in-memory store with a flat-file dump/load format (see
//! [`io`]). Entity and relation identifiers are opaque strings, by
//! convention `Q`-prefixed for entities and `P`-prefixed for relations.

mod io;

pub use io::{load_graph, save_graph};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A node of the graph: an opaque knowledge-base id plus a display label.
///
/// The label may be empty only for references that have not been resolved
/// yet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    pub label: String,
}

impl EntityRef {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self { id: id.into(), label: label.into() }
    }
}

/// A relation (edge type): opaque property id plus a relation name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationRef {
    pub id: String,
    pub label: String,
}

impl RelationRef {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self { id: id.into(), label: label.into() }
    }
}

/// A directed typed edge `(source, target, relation)`. All three fields are
/// ids; the triple is unique within a graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub relation: String,
}

impl Edge {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        relation: impl Into<String>,
    ) -> Self {
        Self { source: source.into(), target: target.into(), relation: relation.into() }
    }
}

/// Who a property value hangs off: a node or a specific edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyOwner {
    Entity(String),
    Edge(Edge),
}

/// Declared semantic kind of a stored property value. Values are kept as
/// strings and coerced at table-build time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Text,
    Integer,
    Decimal,
    Date,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Integer => "integer",
            ValueKind::Decimal => "decimal",
            ValueKind::Date => "date",
        }
    }
}

impl std::str::FromStr for ValueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "string" => Ok(ValueKind::Text),
            "integer" | "int" => Ok(ValueKind::Integer),
            "decimal" | "float" | "number" | "numeric" => Ok(ValueKind::Decimal),
            "date" | "year" => Ok(ValueKind::Date),
            other => Err(format!("unknown value kind: {other}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("entity id must be non-empty")]
    EmptyId,
    #[error("entity {id} already present with label {existing:?}, refusing {offered:?}")]
    LabelConflict { id: String, existing: String, offered: String },
    #[error("unknown entity {0}")]
    MissingEntity(String),
    #[error("property owner does not exist: {0:?}")]
    MissingOwner(PropertyOwner),
    #[error("graph record parse failure at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The eight question types, grouped into three categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryType {
    Intercomparison,
    Superlative,
    Aggregation,
    DistributionCompliance,
    CorrelationAnalysis,
    VarianceAnalysis,
    DescriptiveRelationship,
    HypotheticalScenarios,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryCategory {
    Comparison,
    Statistics,
    Relationship,
}

impl QueryType {
    pub const ALL: [QueryType; 8] = [
        QueryType::Intercomparison,
        QueryType::Superlative,
        QueryType::Aggregation,
        QueryType::DistributionCompliance,
        QueryType::CorrelationAnalysis,
        QueryType::VarianceAnalysis,
        QueryType::DescriptiveRelationship,
        QueryType::HypotheticalScenarios,
    ];

    /// Category is a pure function of the type.
    pub fn category(self) -> QueryCategory {
        match self {
            QueryType::Intercomparison | QueryType::Superlative => QueryCategory::Comparison,
            QueryType::Aggregation
            | QueryType::DistributionCompliance
            | QueryType::CorrelationAnalysis
            | QueryType::VarianceAnalysis => QueryCategory::Statistics,
            QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
                QueryCategory::Relationship
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QueryType::Intercomparison => "Intercomparison",
            QueryType::Superlative => "Superlative",
            QueryType::Aggregation => "Aggregation",
            QueryType::DistributionCompliance => "DistributionCompliance",
            QueryType::CorrelationAnalysis => "CorrelationAnalysis",
            QueryType::VarianceAnalysis => "VarianceAnalysis",
            QueryType::DescriptiveRelationship => "DescriptiveRelationship",
            QueryType::HypotheticalScenarios => "HypotheticalScenarios",
        }
    }
}

impl QueryCategory {
    pub const ALL: [QueryCategory; 3] =
        [QueryCategory::Comparison, QueryCategory::Statistics, QueryCategory::Relationship];

    pub fn name(self) -> &'static str {
        match self {
            QueryCategory::Comparison => "Comparison",
            QueryCategory::Statistics => "Statistics",
            QueryCategory::Relationship => "Relationship",
        }
    }
}

impl std::str::FromStr for QueryType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        let compact = compact.to_ascii_lowercase();
        QueryType::ALL
            .iter()
            .copied()
            .find(|t| t.name().to_ascii_lowercase() == compact)
            .ok_or_else(|| format!("unknown query type: {s}"))
    }
}

/// A typed multi-entity question: free text plus the structured pieces the
/// semantic analysis fills in (entity and property sets may be empty before
/// analysis, never after).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiEntityQuestion {
    pub text: String,
    pub qtype: Option<QueryType>,
    pub entities: Vec<EntityRef>,
    pub properties: Vec<String>,
    pub topic: Option<String>,
}

impl MultiEntityQuestion {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into(), qtype: None, entities: Vec::new(), properties: Vec::new(), topic: None }
    }

    pub fn with_topic(text: impl Into<String>, topic: impl Into<String>) -> Self {
        let mut q = Self::new(text);
        q.topic = Some(topic.into());
        q
    }

    /// The string the table-schema prompt is anchored on: the topic when one
    /// is known, otherwise the question itself. Keeps per-topic prompts
    /// stable, which in turn keeps the capable-model input small.
    pub fn schema_subject(&self) -> &str {
        self.topic.as_deref().unwrap_or(&self.text)
    }
}

/// In-memory `(V, E, P)` store. Entities and edges are sets; properties map
/// an owner (entity or edge) to named string values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WikiGraph {
    entities: BTreeMap<String, EntityRef>,
    relations: BTreeMap<String, RelationRef>,
    edges: BTreeSet<Edge>,
    properties: BTreeMap<PropertyOwner, BTreeMap<String, String>>,
}

impl WikiGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entity. Idempotent when the same id re-arrives with the
    /// same label (or an empty one); a conflicting label is an error.
    pub fn add_entity(&mut self, e: EntityRef) -> Result<(), GraphError> {
        if e.id.is_empty() {
            return Err(GraphError::EmptyId);
        }
        match self.entities.get_mut(&e.id) {
            None => {
                self.entities.insert(e.id.clone(), e);
            }
            Some(existing) => {
                if existing.label.is_empty() {
                    existing.label = e.label;
                } else if !e.label.is_empty() && existing.label != e.label {
                    return Err(GraphError::LabelConflict {
                        id: e.id,
                        existing: existing.label.clone(),
                        offered: e.label,
                    });
                }
            }
        }
        Ok(())
    }

    /// Registers (or re-labels) a relation. Safe to call repeatedly.
    pub fn add_relation(&mut self, r: RelationRef) -> Result<(), GraphError> {
        if r.id.is_empty() {
            return Err(GraphError::EmptyId);
        }
        match self.relations.get_mut(&r.id) {
            None => {
                self.relations.insert(r.id.clone(), r);
            }
            Some(existing) => {
                if existing.label.is_empty() {
                    existing.label = r.label;
                } else if !r.label.is_empty() && existing.label != r.label {
                    return Err(GraphError::LabelConflict {
                        id: r.id,
                        existing: existing.label.clone(),
                        offered: r.label,
                    });
                }
            }
        }
        Ok(())
    }

    /// Inserts an edge; duplicates collapse. Both endpoints must already be
    /// entities. An unseen relation id is registered with an empty label.
    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        if !self.entities.contains_key(&edge.source) {
            return Err(GraphError::MissingEntity(edge.source));
        }
        if !self.entities.contains_key(&edge.target) {
            return Err(GraphError::MissingEntity(edge.target));
        }
        if !self.relations.contains_key(&edge.relation) {
            self.relations
                .insert(edge.relation.clone(), RelationRef::new(edge.relation.clone(), ""));
        }
        self.edges.insert(edge);
        Ok(())
    }

    /// Attaches a named value to an entity or an edge; the owner must exist.
    pub fn set_property(
        &mut self,
        owner: PropertyOwner,
        name: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<(), GraphError> {
        let ok = match &owner {
            PropertyOwner::Entity(id) => self.entities.contains_key(id),
            PropertyOwner::Edge(e) => self.edges.contains(e),
        };
        if !ok {
            return Err(GraphError::MissingOwner(owner));
        }
        self.properties.entry(owner).or_default().insert(name.into(), value.into());
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&EntityRef> {
        self.entities.get(id)
    }

    pub fn relation(&self, id: &str) -> Option<&RelationRef> {
        self.relations.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRef> {
        self.entities.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationRef> {
        self.relations.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, source: &str, target: &str, relation: &str) -> bool {
        self.edges.contains(&Edge::new(source, target, relation))
    }

    /// True when any edge connects the two entities, in either direction.
    pub fn connected(&self, a: &str, b: &str) -> bool {
        self.edges.iter().any(|e| {
            (e.source == a && e.target == b) || (e.source == b && e.target == a)
        })
    }

    /// Forward neighbors of `a` irrespective of relation, used by the
    /// shared-connection rule for hypothetical questions.
    pub fn out_neighbors(&self, a: &str) -> BTreeSet<&str> {
        self.edges.iter().filter(|e| e.source == a).map(|e| e.target.as_str()).collect()
    }

    pub fn properties_of(&self, owner: &PropertyOwner) -> Option<&BTreeMap<String, String>> {
        self.properties.get(owner)
    }

    pub fn entity_property(&self, id: &str, name: &str) -> Option<&str> {
        self.properties
            .get(&PropertyOwner::Entity(id.to_string()))
            .and_then(|m| m.get(name))
            .map(String::as_str)
    }

    pub fn property_owners(&self) -> impl Iterator<Item = (&PropertyOwner, &BTreeMap<String, String>)> {
        self.properties.iter()
    }

    /// Entities reachable from `start` by exactly `hops` edges whose relation
    /// matches the per-hop relation in `relations`.
    ///
    /// `relations` supplies one relation id per hop; a single relation is
    /// reused for every hop when the list has length one. Zero hops returns
    /// `{start}`. An unknown relation id simply yields an empty set.
    pub fn neighbors(
        &self,
        start: &str,
        relations: &[&str],
        hops: usize,
    ) -> Result<BTreeSet<String>, GraphError> {
        if !self.entities.contains_key(start) {
            return Err(GraphError::MissingEntity(start.to_string()));
        }
        let mut frontier: BTreeSet<String> = BTreeSet::from([start.to_string()]);
        for hop in 0..hops {
            let relation = match relations.len() {
                0 => return Ok(BTreeSet::new()),
                1 => relations[0],
                _ => relations.get(hop).copied().unwrap_or(relations[relations.len() - 1]),
            };
            let mut next = BTreeSet::new();
            for e in &self.edges {
                if e.relation == relation && frontier.contains(&e.source) {
                    next.insert(e.target.clone());
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        Ok(frontier)
    }

    /// Full-scan structural check: every edge endpoint resolves to an entity
    /// and every property owner exists.
    pub fn validate(&self) -> Result<(), GraphError> {
        for e in &self.edges {
            if !self.entities.contains_key(&e.source) {
                return Err(GraphError::MissingEntity(e.source.clone()));
            }
            if !self.entities.contains_key(&e.target) {
                return Err(GraphError::MissingEntity(e.target.clone()));
            }
        }
        for owner in self.properties.keys() {
            let ok = match owner {
                PropertyOwner::Entity(id) => self.entities.contains_key(id),
                PropertyOwner::Edge(e) => self.edges.contains(e),
            };
            if !ok {
                return Err(GraphError::MissingOwner(owner.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_graph() -> WikiGraph {
        let mut g = WikiGraph::new();
        g.add_entity(EntityRef::new("Q1", "hub")).unwrap();
        for i in 2..=4 {
            g.add_entity(EntityRef::new(format!("Q{i}"), format!("leaf {i}"))).unwrap();
            g.add_edge(Edge::new("Q1", format!("Q{i}"), "P1")).unwrap();
        }
        g
    }

    #[test]
    fn add_entity_inserts_once() {
        let mut g = WikiGraph::new();
        g.add_entity(EntityRef::new("Q1", "A")).unwrap();
        assert_eq!(g.entity_count(), 1);
        g.add_entity(EntityRef::new("Q1", "A")).unwrap();
        assert_eq!(g.entity_count(), 1);
    }

    #[test]
    fn add_entity_conflicting_label_errors() {
        let mut g = WikiGraph::new();
        g.add_entity(EntityRef::new("Q1", "A")).unwrap();
        let err = g.add_entity(EntityRef::new("Q1", "B")).unwrap_err();
        assert!(matches!(err, GraphError::LabelConflict { .. }));
    }

    #[test]
    fn add_entity_empty_id_errors() {
        let mut g = WikiGraph::new();
        assert!(matches!(g.add_entity(EntityRef::new("", "x")), Err(GraphError::EmptyId)));
    }

    #[test]
    fn add_edge_requires_endpoints() {
        let mut g = WikiGraph::new();
        g.add_entity(EntityRef::new("Q1", "A")).unwrap();
        g.add_entity(EntityRef::new("Q2", "B")).unwrap();
        g.add_edge(Edge::new("Q1", "Q2", "P39")).unwrap();
        assert_eq!(g.edge_count(), 1);
        // set semantics
        g.add_edge(Edge::new("Q1", "Q2", "P39")).unwrap();
        assert_eq!(g.edge_count(), 1);
        let err = g.add_edge(Edge::new("Q1", "Q9", "P1")).unwrap_err();
        assert!(matches!(err, GraphError::MissingEntity(id) if id == "Q9"));
    }

    #[test]
    fn zero_hops_is_identity() {
        let g = star_graph();
        let got = g.neighbors("Q1", &["P1"], 0).unwrap();
        assert_eq!(got, BTreeSet::from(["Q1".to_string()]));
    }

    #[test]
    fn single_hop_star_reaches_all_leaves() {
        let g = star_graph();
        let got = g.neighbors("Q1", &["P1"], 1).unwrap();
        assert_eq!(
            got,
            BTreeSet::from(["Q2".to_string(), "Q3".to_string(), "Q4".to_string()])
        );
    }

    #[test]
    fn two_hop_chain_with_distinct_relations() {
        let mut g = WikiGraph::new();
        for (id, label) in [("Q1", "a"), ("Q2", "b"), ("Q3", "c")] {
            g.add_entity(EntityRef::new(id, label)).unwrap();
        }
        g.add_edge(Edge::new("Q1", "Q2", "P1")).unwrap();
        g.add_edge(Edge::new("Q2", "Q3", "P2")).unwrap();
        let got = g.neighbors("Q1", &["P1", "P2"], 2).unwrap();
        assert_eq!(got, BTreeSet::from(["Q3".to_string()]));
    }

    #[test]
    fn unknown_relation_yields_empty_set() {
        let g = star_graph();
        assert!(g.neighbors("Q1", &["P999"], 1).unwrap().is_empty());
    }

    #[test]
    fn category_mapping_is_total_and_matches_template_grouping() {
        use QueryCategory::*;
        let expected = [
            Comparison, Comparison, Statistics, Statistics, Statistics, Statistics,
            Relationship, Relationship,
        ];
        for (t, want) in QueryType::ALL.iter().zip(expected) {
            assert_eq!(t.category(), want, "{t:?}");
        }
    }

    #[test]
    fn edge_property_owner_must_exist() {
        let mut g = star_graph();
        let edge = Edge::new("Q1", "Q2", "P1");
        g.set_property(PropertyOwner::Edge(edge.clone()), "since", "1901").unwrap();
        assert_eq!(
            g.properties_of(&PropertyOwner::Edge(edge)).unwrap().get("since").unwrap(),
            "1901"
        );
        let absent = Edge::new("Q2", "Q1", "P1");
        assert!(g.set_property(PropertyOwner::Edge(absent), "since", "1901").is_err());
    }

    #[test]
    fn validate_passes_after_any_add_sequence() {
        let mut g = star_graph();
        g.set_property(PropertyOwner::Entity("Q2".into()), "population", "12").unwrap();
        g.validate().unwrap();
    }
}
