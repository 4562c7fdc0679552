//! Property-table generation: a schema drafted from the question, one
//! critique pass over it, per-entity field extraction from page intros,
//! and value normalization so equal-meaning cells compare equal.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EntityRef, MultiEntityQuestion};
use crate::llm::{bindings, cleanup, render_prompt, template_ids, LlmError, LlmGateway, TaskClass};
use crate::pool::ordered_map;
use crate::retrieval::RetrievalResult;
use crate::sql::{SqlTable, Value};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("schema reply not usable: {message}; reply was: {reply}")]
    SchemaParse { message: String, reply: String },
    #[error("cannot build a table from zero retrieved entities")]
    EmptyRetrieval,
    #[error("question has not been analyzed; run retrieval first")]
    NotAnalyzed,
    #[error("invalid table: {0}")]
    Invalid(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("table file: {0}")]
    Io(#[from] std::io::Error),
    #[error("table file: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Text,
    Integer,
    Decimal,
    Date,
}

impl ColumnKind {
    pub fn word(self) -> &'static str {
        match self {
            ColumnKind::Text => "text",
            ColumnKind::Integer => "integer",
            ColumnKind::Decimal => "decimal",
            ColumnKind::Date => "date",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Integer | ColumnKind::Decimal)
    }

    /// Schema replies name kinds loosely; anything unrecognized is text.
    fn lenient(word: &str) -> ColumnKind {
        match word.trim().to_ascii_lowercase().as_str() {
            "integer" | "int" | "count" => ColumnKind::Integer,
            "decimal" | "float" | "real" | "number" | "numeric" => ColumnKind::Decimal,
            "date" | "year" | "datetime" => ColumnKind::Date,
            _ => ColumnKind::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub table_name: String,
    pub columns: Vec<ColumnSpec>,
}

/// Wire shape the schema prompts ask for and the critique prompt echoes.
#[derive(Serialize, Deserialize)]
struct SchemaWire {
    #[serde(default)]
    table: String,
    columns: Vec<ColumnWire>,
}

#[derive(Serialize, Deserialize)]
struct ColumnWire {
    name: String,
    #[serde(default)]
    kind: String,
    #[serde(default)]
    description: String,
}

impl TableSchema {
    /// Mechanical cleanup applied to every model-produced schema: a
    /// leading text "name" column, unique case-folded names, and no two
    /// columns sharing a non-empty description (the redundancy guard).
    /// Idempotent, so the critique pass can re-apply it freely.
    pub fn sanitize(mut self) -> TableSchema {
        if self.table_name.trim().is_empty() {
            self.table_name = "facts".to_string();
        } else {
            self.table_name = self.table_name.trim().to_string();
        }
        for c in &mut self.columns {
            c.name = c.name.trim().to_string();
            c.description = c.description.trim().to_string();
        }
        self.columns.retain(|c| !c.name.is_empty());
        match self.columns.iter().position(|c| c.name.eq_ignore_ascii_case("name")) {
            Some(at) => {
                let c = self.columns.remove(at);
                self.columns.insert(0, c);
            }
            None => self.columns.insert(
                0,
                ColumnSpec {
                    name: "name".to_string(),
                    kind: ColumnKind::Text,
                    description: "entity name".to_string(),
                },
            ),
        }
        self.columns[0].kind = ColumnKind::Text;
        let mut names = HashSet::new();
        let mut descriptions = HashSet::new();
        let mut kept = Vec::with_capacity(self.columns.len());
        for (i, c) in self.columns.into_iter().enumerate() {
            if !names.insert(c.name.to_lowercase()) {
                continue;
            }
            if i > 0 && !c.description.is_empty() && !descriptions.insert(c.description.to_lowercase())
            {
                continue;
            }
            kept.push(c);
        }
        self.columns = kept;
        self
    }

    /// The schema must describe at least one property beyond the name.
    pub fn validate(&self) -> Result<(), TableError> {
        if self.columns.len() < 2 {
            return Err(TableError::Invalid(
                "schema needs at least one column besides name".to_string(),
            ));
        }
        Ok(())
    }

    fn from_reply(reply: &str) -> Result<TableSchema, TableError> {
        let payload = cleanup::json_payload(reply).ok_or_else(|| TableError::SchemaParse {
            message: "no JSON object found".to_string(),
            reply: reply.to_string(),
        })?;
        let wire: SchemaWire =
            serde_json::from_str(&payload).map_err(|e| TableError::SchemaParse {
                message: e.to_string(),
                reply: reply.to_string(),
            })?;
        let schema = TableSchema {
            table_name: wire.table,
            columns: wire
                .columns
                .into_iter()
                .map(|c| ColumnSpec {
                    name: c.name,
                    kind: ColumnKind::lenient(&c.kind),
                    description: c.description,
                })
                .collect(),
        }
        .sanitize();
        schema.validate().map_err(|e| TableError::SchemaParse {
            message: e.to_string(),
            reply: reply.to_string(),
        })?;
        Ok(schema)
    }

    fn to_wire_json(&self) -> String {
        let wire = SchemaWire {
            table: self.table_name.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| ColumnWire {
                    name: c.name.clone(),
                    kind: c.kind.word().to_string(),
                    description: c.description.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&wire).expect("schema serializes")
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Property columns rendered for the extraction prompt, one per line.
    fn fields_block(&self) -> String {
        self.columns[1..]
            .iter()
            .map(|c| format!("- {} ({}): {}", c.name, c.kind.word(), c.description))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// One table row: the entity it describes plus one value per column.
/// `Value::Missing` is the per-cell incompleteness flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub entity_id: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyTable {
    pub schema: TableSchema,
    pub rows: Vec<TableRow>,
}

impl PropertyTable {
    pub fn validate(&self) -> Result<(), TableError> {
        self.schema.validate()?;
        let width = self.schema.columns.len();
        let mut ids = HashSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            if row.values.len() != width {
                return Err(TableError::Invalid(format!(
                    "row {i} has {} cells, schema has {width} columns",
                    row.values.len()
                )));
            }
            if !ids.insert(row.entity_id.clone()) {
                return Err(TableError::Invalid(format!(
                    "duplicate entity id {}",
                    row.entity_id
                )));
            }
        }
        Ok(())
    }

    /// (filled, missing) cell counts over the whole grid.
    pub fn completeness(&self) -> (usize, usize) {
        let mut filled = 0;
        let mut missing = 0;
        for row in &self.rows {
            for v in &row.values {
                if v.is_missing() {
                    missing += 1;
                } else {
                    filled += 1;
                }
            }
        }
        (filled, missing)
    }

    pub fn missing_fraction(&self) -> f64 {
        let (filled, missing) = self.completeness();
        let total = filled + missing;
        if total == 0 {
            0.0
        } else {
            missing as f64 / total as f64
        }
    }

    pub fn to_sql_table(&self) -> Result<SqlTable, TableError> {
        SqlTable::new(
            self.schema.table_name.clone(),
            self.schema.column_names(),
            self.rows.iter().map(|r| r.values.clone()).collect(),
        )
        .map_err(|e| TableError::Invalid(e.to_string()))
    }

    /// CSV with a header row, plus a JSON sidecar (same stem, .json)
    /// carrying column kinds, descriptions and per-cell completeness.
    pub fn write_files(&self, csv_path: &Path) -> Result<(), TableError> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(self.schema.column_names())?;
        for row in &self.rows {
            w.write_record(row.values.iter().map(csv_cell))?;
        }
        w.flush()?;
        let sidecar = serde_json::json!({
            "table": self.schema.table_name,
            "columns": self.schema.columns,
            "entity_ids": self.rows.iter().map(|r| r.entity_id.clone()).collect::<Vec<_>>(),
            "completeness": self
                .rows
                .iter()
                .map(|r| r.values.iter().map(|v| !v.is_missing()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        });
        std::fs::write(
            csv_path.with_extension("json"),
            serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
        )?;
        Ok(())
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Missing => String::new(),
        other => other.to_string(),
    }
}

/// Sidecar shape written by [`PropertyTable::write_files`].
#[derive(serde::Deserialize)]
struct Sidecar {
    table: String,
    columns: Vec<ColumnSpec>,
    entity_ids: Vec<String>,
    completeness: Vec<Vec<bool>>,
}

/// Reads a table written by [`PropertyTable::write_files`] back from its
/// CSV plus sidecar. Cells parse by declared column kind; the sidecar's
/// completeness grid restores Missing cells exactly, so a round trip
/// reproduces the original table.
pub fn read_files(csv_path: &Path) -> Result<PropertyTable, TableError> {
    let sidecar_path = csv_path.with_extension("json");
    let raw = std::fs::read_to_string(&sidecar_path)?;
    let sidecar: Sidecar = serde_json::from_str(&raw).map_err(|e| {
        TableError::Invalid(format!("sidecar {}: {e}", sidecar_path.display()))
    })?;
    let schema = TableSchema { table_name: sidecar.table, columns: sidecar.columns };

    let mut reader = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != schema.column_names() {
        return Err(TableError::Invalid(format!(
            "csv header {header:?} does not match sidecar columns"
        )));
    }
    let mut rows = Vec::new();
    for (at, record) in reader.records().enumerate() {
        let record = record?;
        let entity_id = sidecar.entity_ids.get(at).cloned().ok_or_else(|| {
            TableError::Invalid(format!("row {at} has no entity id in the sidecar"))
        })?;
        let filled = sidecar.completeness.get(at).ok_or_else(|| {
            TableError::Invalid(format!("row {at} has no completeness entry in the sidecar"))
        })?;
        if record.len() != schema.columns.len() || filled.len() != schema.columns.len() {
            return Err(TableError::Invalid(format!("row {at} width mismatch")));
        }
        let mut values = Vec::with_capacity(schema.columns.len());
        for (c, cell) in record.iter().enumerate() {
            if !filled[c] {
                values.push(Value::Missing);
                continue;
            }
            let value = match schema.columns[c].kind {
                ColumnKind::Integer => cell
                    .parse::<i64>()
                    .map(Value::Integer)
                    .map_err(|e| TableError::Invalid(format!("row {at} col {c}: {e}")))?,
                ColumnKind::Decimal => cell
                    .parse::<f64>()
                    .map(Value::Decimal)
                    .map_err(|e| TableError::Invalid(format!("row {at} col {c}: {e}")))?,
                ColumnKind::Text | ColumnKind::Date => Value::Text(cell.to_string()),
            };
            values.push(value);
        }
        rows.push(TableRow { entity_id, values });
    }
    if rows.len() != sidecar.entity_ids.len() {
        return Err(TableError::Invalid(format!(
            "csv has {} rows, sidecar lists {} entities",
            rows.len(),
            sidecar.entity_ids.len()
        )));
    }
    let table = PropertyTable { schema, rows };
    table.validate()?;
    Ok(table)
}

pub fn generate_schema(
    gateway: &LlmGateway,
    q: &MultiEntityQuestion,
) -> Result<TableSchema, TableError> {
    if q.qtype.is_none() {
        return Err(TableError::NotAnalyzed);
    }
    let subject = q.schema_subject();
    let prompt = render_prompt(template_ids::SCHEMA, &bindings(&[("subject", subject)]))?;
    let reply = gateway.complete_task(TaskClass::SchemaGeneration, &prompt)?;
    TableSchema::from_reply(&reply.text)
}

/// One review pass over a generated schema. An unusable critique reply
/// keeps the original schema; only gateway failures are fatal.
pub fn critique_schema(
    gateway: &LlmGateway,
    q: &MultiEntityQuestion,
    schema: &TableSchema,
) -> Result<TableSchema, TableError> {
    let subject = q.schema_subject();
    let prompt = render_prompt(
        template_ids::SCHEMA_CRITIQUE,
        &bindings(&[("subject", subject), ("schema", &schema.to_wire_json())]),
    )?;
    let reply = gateway.complete_task(TaskClass::SchemaGeneration, &prompt)?;
    match TableSchema::from_reply(&reply.text) {
        Ok(revised) => Ok(revised),
        Err(e) => {
            log::warn!("schema critique reply unusable, keeping original: {e}");
            Ok(schema.clone().sanitize())
        }
    }
}

fn json_to_raw(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => {
            let t = s.trim();
            if t.is_empty() {
                None
            } else {
                Some(t.to_string())
            }
        }
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        serde_json::Value::Array(items) => {
            let parts: Vec<String> = items.iter().filter_map(json_to_raw).collect();
            if parts.is_empty() {
                None
            } else {
                Some(parts.join("; "))
            }
        }
        other => Some(other.to_string()),
    }
}

/// Raw per-column strings for one entity: index 0 is always the label,
/// the rest come out of the extraction reply (None = not stated).
fn extract_fields(
    gateway: &LlmGateway,
    entity: &EntityRef,
    intro: &str,
    schema: &TableSchema,
) -> Result<Vec<Option<String>>, LlmError> {
    let mut raw = vec![None; schema.columns.len()];
    raw[0] = Some(entity.label.clone());
    if intro.trim().is_empty() {
        return Ok(raw);
    }
    let prompt = render_prompt(
        template_ids::EXTRACT,
        &bindings(&[
            ("entity", &entity.label),
            ("passage", intro),
            ("fields", &schema.fields_block()),
        ]),
    )?;
    let reply = gateway.complete_task(TaskClass::InformationExtraction, &prompt)?;
    let payload = cleanup::json_payload(&reply.text)
        .ok_or_else(|| LlmError::Backend(format!("no JSON in extraction reply: {}", reply.text)))?;
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&payload)
        .map_err(|e| LlmError::Backend(format!("extraction reply: {e}")))?;
    for (i, col) in schema.columns.iter().enumerate().skip(1) {
        let value = map
            .get(&col.name)
            .or_else(|| map.iter().find(|(k, _)| k.eq_ignore_ascii_case(&col.name)).map(|(_, v)| v));
        raw[i] = value.and_then(json_to_raw);
    }
    Ok(raw)
}

/// Permissive number reading for model-extracted text: thousands
/// separators dropped, currency signs and unit words ignored. The string
/// must contain exactly one number, otherwise it does not coerce.
pub fn parse_number_lenient(s: &str) -> Option<f64> {
    static SEPARATOR: OnceLock<Regex> = OnceLock::new();
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    let separator = SEPARATOR.get_or_init(|| Regex::new(r"(\d),(\d{3})\b").expect("static regex"));
    let number = NUMBER
        .get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?").expect("static regex"));
    let mut t = s.trim().trim_start_matches(['$', '€', '£']).trim().to_string();
    loop {
        let next = separator.replace_all(&t, "$1$2").into_owned();
        if next == t {
            break;
        }
        t = next;
    }
    let mut matches = number.find_iter(&t);
    let hit = matches.next()?;
    if matches.next().is_some() {
        return None;
    }
    hit.as_str().parse().ok()
}

fn looks_like_date(s: &str) -> bool {
    // A date needs a year: some run of three or more digits.
    let mut run = 0;
    for ch in s.chars() {
        if ch.is_ascii_digit() {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

/// Coerces one raw extracted string to its column kind; failures flag the
/// cell missing rather than keeping a value of the wrong kind.
pub fn coerce_cell(raw: &str, kind: ColumnKind) -> Value {
    let t = raw.trim();
    if t.is_empty() {
        return Value::Missing;
    }
    match kind {
        ColumnKind::Text => Value::Text(t.to_string()),
        ColumnKind::Date => {
            if looks_like_date(t) {
                Value::Text(t.to_string())
            } else {
                Value::Missing
            }
        }
        ColumnKind::Integer => match parse_number_lenient(t) {
            Some(f) if f.fract() == 0.0 && (i64::MIN as f64..=i64::MAX as f64).contains(&f) => {
                Value::Integer(f as i64)
            }
            _ => Value::Missing,
        },
        ColumnKind::Decimal => match parse_number_lenient(t) {
            Some(f) => Value::Decimal(f),
            None => Value::Missing,
        },
    }
}

/// One extraction round for one entity. Any failure degrades to a row
/// holding only the name: an omission the downstream stages tolerate.
pub fn extract_row(
    gateway: &LlmGateway,
    entity: &EntityRef,
    intro: &str,
    schema: &TableSchema,
) -> Vec<Value> {
    let raw = match extract_fields(gateway, entity, intro, schema) {
        Ok(raw) => raw,
        Err(e) => {
            log::warn!("extraction failed for {}: {e}", entity.id);
            let mut raw = vec![None; schema.columns.len()];
            raw[0] = Some(entity.label.clone());
            raw
        }
    };
    raw.iter()
        .zip(&schema.columns)
        .map(|(cell, col)| match cell {
            Some(s) => coerce_cell(s, col.kind),
            None => Value::Missing,
        })
        .collect()
}

/// Alias dictionary used by normalization: case-insensitive whole-cell
/// lookup from alias to canonical form. Canonical forms are resolved to
/// fixed points at load so substitution is idempotent.
pub struct SynonymDict {
    map: HashMap<String, String>,
}

impl SynonymDict {
    pub fn from_text(text: &str) -> SynonymDict {
        let mut map = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((alias, canonical)) = line.split_once("=>") else { continue };
            let alias = alias.trim();
            let canonical = canonical.trim();
            if alias.is_empty() || canonical.is_empty() {
                continue;
            }
            map.insert(alias.to_lowercase(), canonical.to_string());
        }
        // Chase alias chains (a=>b, b=>c) to their end so one pass of
        // normalization reaches the final form.
        let keys: Vec<String> = map.keys().cloned().collect();
        for key in keys {
            let mut canonical = map[&key].clone();
            for _ in 0..8 {
                match map.get(&canonical.to_lowercase()) {
                    Some(next) if *next != canonical => canonical = next.clone(),
                    _ => break,
                }
            }
            map.insert(key, canonical);
        }
        SynonymDict { map }
    }

    pub fn default_dict() -> &'static SynonymDict {
        static DICT: OnceLock<SynonymDict> = OnceLock::new();
        DICT.get_or_init(|| SynonymDict::from_text(include_str!("synonyms.txt")))
    }

    pub fn canonical(&self, cell: &str) -> Option<&str> {
        self.map.get(&cell.trim().to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Canonicalizes cell values in place: text cells fold aliases to one
/// form, numeric columns absorb stray text that still reads as a number.
/// Never changes row count or which cells are missing.
pub fn normalize_values(table: PropertyTable, dict: &SynonymDict) -> PropertyTable {
    let kinds: Vec<ColumnKind> = table.schema.columns.iter().map(|c| c.kind).collect();
    let rows = table
        .rows
        .into_iter()
        .map(|row| {
            let values = row
                .values
                .into_iter()
                .zip(&kinds)
                .map(|(v, kind)| normalize_cell(v, *kind, dict))
                .collect();
            TableRow { entity_id: row.entity_id, values }
        })
        .collect();
    PropertyTable { schema: table.schema, rows }
}

fn normalize_cell(v: Value, kind: ColumnKind, dict: &SynonymDict) -> Value {
    match (v, kind) {
        (Value::Text(s), ColumnKind::Text | ColumnKind::Date) => {
            let trimmed = s.trim();
            match dict.canonical(trimmed) {
                Some(canonical) => Value::Text(canonical.to_string()),
                None => Value::Text(trimmed.to_string()),
            }
        }
        (Value::Text(s), ColumnKind::Integer) => match parse_number_lenient(&s) {
            Some(f) if f.fract() == 0.0 => Value::Integer(f as i64),
            _ => Value::Text(s),
        },
        (Value::Text(s), ColumnKind::Decimal) => match parse_number_lenient(&s) {
            Some(f) => Value::Decimal(f),
            None => Value::Text(s),
        },
        (other, _) => other,
    }
}

/// The whole table stage: schema, critique, pooled extraction, kind
/// demotion, normalization. One row per retrieved entity, in retrieval
/// order.
pub fn build_table(
    gateway: &LlmGateway,
    q: &MultiEntityQuestion,
    r: &RetrievalResult,
    workers: usize,
) -> Result<PropertyTable, TableError> {
    build_table_with(gateway, q, r, workers, SynonymDict::default_dict())
}

pub fn build_table_with(
    gateway: &LlmGateway,
    q: &MultiEntityQuestion,
    r: &RetrievalResult,
    workers: usize,
    dict: &SynonymDict,
) -> Result<PropertyTable, TableError> {
    if r.entities.is_empty() {
        return Err(TableError::EmptyRetrieval);
    }
    let schema = critique_schema(gateway, q, &generate_schema(gateway, q)?)?;

    let mut seen = HashSet::new();
    let items: Vec<(EntityRef, String)> = r
        .entities
        .iter()
        .filter(|e| seen.insert(e.id.clone()))
        .map(|e| (e.clone(), r.intros.get(&e.id).cloned().unwrap_or_default()))
        .collect();
    let raw_rows: Vec<Vec<Option<String>>> = ordered_map(items.clone(), workers, |(e, intro)| {
        extract_fields(gateway, e, intro, &schema).unwrap_or_else(|err| {
            log::warn!("extraction failed for {}: {err}", e.id);
            let mut raw = vec![None; schema.columns.len()];
            raw[0] = Some(e.label.clone());
            raw
        })
    });

    // The schema's declared kind loses to the evidence when most observed
    // values refuse to coerce; the column then keeps its raw text.
    let mut schema = schema;
    for (j, col) in schema.columns.iter_mut().enumerate().skip(1) {
        if col.kind == ColumnKind::Text {
            continue;
        }
        let mut observed = 0usize;
        let mut failures = 0usize;
        for row in &raw_rows {
            if let Some(raw) = &row[j] {
                observed += 1;
                if coerce_cell(raw, col.kind).is_missing() {
                    failures += 1;
                }
            }
        }
        if observed > 0 && failures * 2 > observed {
            log::warn!(
                "column {} demoted to text: {failures} of {observed} values are not {}",
                col.name,
                col.kind.word()
            );
            col.kind = ColumnKind::Text;
        }
    }

    let rows = items
        .iter()
        .zip(raw_rows)
        .map(|((e, _), raw)| TableRow {
            entity_id: e.id.clone(),
            values: raw
                .iter()
                .zip(&schema.columns)
                .map(|(cell, col)| match cell {
                    Some(s) => coerce_cell(s, col.kind),
                    None => Value::Missing,
                })
                .collect(),
        })
        .collect();

    let table = normalize_values(PropertyTable { schema, rows }, dict);
    table.validate()?;
    let (filled, missing) = table.completeness();
    log::info!(
        "built table {}: {} rows, {missing} of {} cells missing",
        table.schema.table_name,
        table.rows.len(),
        filled + missing
    );
    Ok(table)
}
