//! Flat-file graph dump/load: one JSON record per line with an explicit
//! record-kind tag. Records are emitted in a stable order (entities,
//! relations, edges, properties; each sorted) so dumps diff cleanly.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, EntityRef, GraphError, PropertyOwner, RelationRef, WikiGraph};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Entity { id: String, label: String },
    Relation { id: String, label: String },
    Edge { source: String, target: String, relation: String },
    Property { owner: PropertyOwner, name: String, value: String },
}

pub fn save_graph(graph: &WikiGraph, path: &Path) -> Result<(), GraphError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in graph.entities() {
        write_record(&mut out, &Record::Entity { id: e.id.clone(), label: e.label.clone() })?;
    }
    for r in graph.relations() {
        write_record(&mut out, &Record::Relation { id: r.id.clone(), label: r.label.clone() })?;
    }
    for e in graph.edges() {
        write_record(
            &mut out,
            &Record::Edge {
                source: e.source.clone(),
                target: e.target.clone(),
                relation: e.relation.clone(),
            },
        )?;
    }
    for (owner, values) in graph.property_owners() {
        for (name, value) in values {
            write_record(
                &mut out,
                &Record::Property { owner: owner.clone(), name: name.clone(), value: value.clone() },
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_record(out: &mut impl Write, record: &Record) -> Result<(), GraphError> {
    let line = serde_json::to_string(record).expect("graph records always serialize");
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<WikiGraph, GraphError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut graph = WikiGraph::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| GraphError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        match record {
            Record::Entity { id, label } => graph.add_entity(EntityRef::new(id, label))?,
            Record::Relation { id, label } => graph.add_relation(RelationRef::new(id, label))?,
            Record::Edge { source, target, relation } => {
                graph.add_edge(Edge::new(source, target, relation))?
            }
            Record::Property { owner, name, value } => graph.set_property(owner, name, value)?,
        }
    }
    graph.validate()?;
    Ok(graph)
}
