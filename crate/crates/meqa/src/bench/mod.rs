//! Benchmark harness: synthesizes questions from templates over gold
//! topic tables, computes gold answers by direct oracle (deterministic
//! SQL or graph lookups, never a model), refines question wording, splits
//! train/test, and scores system outputs into accuracy reports.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EntityRef, MultiEntityQuestion, QueryCategory, QueryType, WikiGraph};
use crate::llm::{bindings, render_prompt, template_ids, LlmGateway, TaskClass};
use crate::pool::ordered_map;
use crate::retrieval::{
    execute_sparql, fetch_page_intro, QueryStatus, RetrievalError, RetrievalResult, SparqlQuery,
    WikiClient,
};
use crate::sql::{
    compute_method_finding, execute, normalize_for_match, parse_sql, Answer, AnswerPayload,
    MethodSelection, SqlError, StatMethod, Value,
};
use crate::table::{build_table, ColumnKind, PropertyTable, SynonymDict, TableError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("template: {0}")]
    Template(String),
    #[error("train fraction must be inside (0, 1), got {0}")]
    BadFraction(f64),
    #[error("benchmark size must be at least 1")]
    BadCount,
    #[error("duplicate item id {0}")]
    DuplicateItem(String),
    #[error("nothing to evaluate: the run is empty")]
    EmptyRun,
    #[error("gold answer generation bug: {0}")]
    GenerationBug(String),
    #[error("fixture drift for topic {topic}: expected {expected} entities, retrieved {actual}")]
    FixtureDrift { topic: String, expected: usize, actual: usize },
    #[error("benchmark file line {line}: {message}")]
    ItemLine { line: usize, message: String },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error("benchmark file: {0}")]
    Io(#[from] std::io::Error),
    #[error("benchmark serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// One benchmark topic: how to retrieve its entity set and which gold
/// properties its table must carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicConfig {
    pub name: String,
    /// Exact SPARQL retrieving the topic's entities; alternative to ids.
    #[serde(default)]
    pub root_query: Option<String>,
    /// Explicit entity ids; alternative to a root query.
    #[serde(default)]
    pub entity_ids: Vec<String>,
    pub properties: Vec<String>,
    #[serde(default)]
    pub expected_entities: Option<usize>,
    /// Singular noun for one entity of the topic ("president").
    #[serde(default)]
    pub entity_noun: String,
    /// Plural noun phrase for the whole set ("presidents of the US").
    #[serde(default)]
    pub entity_noun_plural: String,
}

impl TopicConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.properties.is_empty() {
            return Err(BenchError::Template(format!(
                "topic {} declares no gold properties",
                self.name
            )));
        }
        if self.root_query.is_none() && self.entity_ids.is_empty() {
            return Err(BenchError::Template(format!(
                "topic {} has neither a root query nor an entity list",
                self.name
            )));
        }
        Ok(())
    }

    fn noun(&self) -> &str {
        if self.entity_noun.is_empty() {
            &self.name
        } else {
            &self.entity_noun
        }
    }

    fn noun_plural(&self) -> &str {
        if self.entity_noun_plural.is_empty() {
            &self.name
        } else {
            &self.entity_noun_plural
        }
    }
}

/// Gold answer shape a template commits to; fixed per question type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Scalar,
    EntityList,
    Boolean,
    MethodSelection,
}

impl AnswerKind {
    pub fn for_qtype(qtype: QueryType) -> AnswerKind {
        match qtype {
            QueryType::Intercomparison | QueryType::Superlative => AnswerKind::EntityList,
            QueryType::Aggregation => AnswerKind::Scalar,
            QueryType::DistributionCompliance
            | QueryType::CorrelationAnalysis
            | QueryType::VarianceAnalysis => AnswerKind::MethodSelection,
            QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
                AnswerKind::Boolean
            }
        }
    }

    pub fn matches(self, answer: &Answer) -> bool {
        matches!(
            (self, &answer.payload),
            (AnswerKind::Scalar, AnswerPayload::Scalar { .. })
                | (AnswerKind::EntityList, AnswerPayload::EntityList { .. })
                | (AnswerKind::Boolean, AnswerPayload::Boolean { .. })
                | (AnswerKind::MethodSelection, AnswerPayload::Method { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub qtype: QueryType,
    pub pattern: String,
    pub answer_kind: AnswerKind,
}

fn required_slots(qtype: QueryType) -> &'static [&'static str] {
    match qtype {
        QueryType::Intercomparison => &["[property]", "[entity A]", "[entity B]"],
        QueryType::Superlative => &["[entity]", "[extreme]", "[property]"],
        QueryType::Aggregation => &["[entities]", "[property]", "[value]"],
        QueryType::DistributionCompliance => &["[property]", "[entities]"],
        QueryType::CorrelationAnalysis | QueryType::VarianceAnalysis => {
            &["[property A]", "[property B]", "[entities]"]
        }
        QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
            &["[entity A]", "[entity B]"]
        }
    }
}

impl QuestionTemplate {
    pub fn validate(&self) -> Result<(), BenchError> {
        for slot in required_slots(self.qtype) {
            if !self.pattern.contains(slot) {
                return Err(BenchError::Template(format!(
                    "{} template is missing the {slot} slot: {}",
                    self.qtype.name(),
                    self.pattern
                )));
            }
        }
        if self.answer_kind != AnswerKind::for_qtype(self.qtype) {
            return Err(BenchError::Template(format!(
                "{} template declares answer kind {:?}, type requires {:?}",
                self.qtype.name(),
                self.answer_kind,
                AnswerKind::for_qtype(self.qtype)
            )));
        }
        Ok(())
    }
}

/// The eight stock templates, one per question type. Relationship and
/// complex-statistics patterns are phrased closed-ended so a yes/no (or a
/// method choice) is a complete answer.
pub fn default_templates() -> Vec<QuestionTemplate> {
    let patterns: [(QueryType, &str); 8] = [
        (
            QueryType::Intercomparison,
            "Which has the higher [property], [entity A] or [entity B]?",
        ),
        (QueryType::Superlative, "Which [entity] has the [extreme] [property]?"),
        (QueryType::Aggregation, "How many [entities] have a [property] of [value]?"),
        (
            QueryType::DistributionCompliance,
            "Does the [property] of [entities] follow a normal distribution?",
        ),
        (
            QueryType::CorrelationAnalysis,
            "Is there a linear relationship between [property A] and [property B] across [entities]?",
        ),
        (
            QueryType::VarianceAnalysis,
            "Are the variances in [property A] and [property B] across [entities] significantly different?",
        ),
        (QueryType::DescriptiveRelationship, "Is [entity A] directly related to [entity B]?"),
        (
            QueryType::HypotheticalScenarios,
            "If [entity A] collaborates with [entity B], would they share a direct connection to a common third entity?",
        ),
    ];
    patterns
        .into_iter()
        .map(|(qtype, pattern)| QuestionTemplate {
            qtype,
            pattern: pattern.to_string(),
            answer_kind: AnswerKind::for_qtype(qtype),
        })
        .collect()
}

/// Slot bindings recorded at generation time. Scoring and gold answers
/// work from these by exact lookup; no language processing involved.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldMeta {
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default)]
    pub entity_ids: Vec<String>,
    #[serde(default)]
    pub properties: Vec<String>,
    #[serde(default)]
    pub value: Option<String>,
    #[serde(default)]
    pub extreme: Option<String>,
    /// HypotheticalScenarios answers follow a stand-in rule (shared
    /// connection in the graph), not any real-world causality.
    #[serde(default)]
    pub synthetic_semantics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchItem {
    pub id: String,
    pub question: String,
    pub qtype: QueryType,
    pub topic: String,
    pub gold_meta: GoldMeta,
    pub gold: Answer,
    pub split: Split,
}

/// A question instantiated from a template, gold answer still pending.
#[derive(Debug, Clone, PartialEq)]
pub struct Instantiated {
    pub question: String,
    pub meta: GoldMeta,
}

fn display_cell(v: &Value) -> String {
    v.to_string()
}

fn row_name(table: &PropertyTable, row: usize) -> String {
    match &table.rows[row].values[0] {
        Value::Text(s) => s.clone(),
        _ => table.rows[row].entity_id.clone(),
    }
}

fn filled_rows(table: &PropertyTable, col: usize) -> Vec<usize> {
    (0..table.rows.len()).filter(|&r| !table.rows[r].values[col].is_missing()).collect()
}

/// Columns eligible for a numeric slot: declared numeric, with at least
/// `min_filled` usable values.
fn numeric_columns(table: &PropertyTable, min_filled: usize) -> Vec<usize> {
    (1..table.schema.columns.len())
        .filter(|&c| {
            table.schema.columns[c].kind.is_numeric() && filled_rows(table, c).len() >= min_filled
        })
        .collect()
}

fn fill(pattern: &str, substitutions: &[(&str, &str)]) -> Result<String, BenchError> {
    let mut text = pattern.to_string();
    for (slot, value) in substitutions {
        text = text.replace(slot, value);
    }
    if let Some(at) = text.find('[') {
        return Err(BenchError::Template(format!(
            "unfilled slot at byte {at} after substitution: {text}"
        )));
    }
    Ok(text)
}

/// Draws slot fillers from the gold table. `None` is the skip signal: the
/// table has no eligible data for this template (an all-missing column,
/// fewer rows than the template needs), which is not an error.
pub fn instantiate_template(
    tpl: &QuestionTemplate,
    table: &PropertyTable,
    topic: &TopicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Instantiated>, BenchError> {
    tpl.validate()?;
    // Statistics over a column need enough points for the downstream
    // tests (normality wants n >= 8); comparisons just need two rows.
    let out = match tpl.qtype {
        QueryType::Intercomparison => {
            let columns = numeric_columns(table, 2);
            let Some(&col) = columns.as_slice().choose(rng) else { return Ok(None) };
            let rows = filled_rows(table, col);
            let picks = rand::seq::index::sample(rng, rows.len(), 2);
            let (a, b) = (rows[picks.index(0)], rows[picks.index(1)]);
            let (name_a, name_b) = (row_name(table, a), row_name(table, b));
            let question = fill(
                &tpl.pattern,
                &[
                    ("[property]", table.schema.columns[col].name.as_str()),
                    ("[entity A]", name_a.as_str()),
                    ("[entity B]", name_b.as_str()),
                ],
            )?;
            Some(Instantiated {
                question,
                meta: GoldMeta {
                    entities: vec![name_a, name_b],
                    entity_ids: vec![
                        table.rows[a].entity_id.clone(),
                        table.rows[b].entity_id.clone(),
                    ],
                    properties: vec![table.schema.columns[col].name.clone()],
                    ..GoldMeta::default()
                },
            })
        }
        QueryType::Superlative => {
            let columns = numeric_columns(table, 2);
            let Some(&col) = columns.as_slice().choose(rng) else { return Ok(None) };
            let extreme = if rng.gen_bool(0.5) { "highest" } else { "lowest" };
            let question = fill(
                &tpl.pattern,
                &[
                    ("[entity]", topic.noun()),
                    ("[extreme]", extreme),
                    ("[property]", table.schema.columns[col].name.as_str()),
                ],
            )?;
            Some(Instantiated {
                question,
                meta: GoldMeta {
                    properties: vec![table.schema.columns[col].name.clone()],
                    extreme: Some(extreme.to_string()),
                    ..GoldMeta::default()
                },
            })
        }
        QueryType::Aggregation => {
            let columns: Vec<usize> = (1..table.schema.columns.len())
                .filter(|&c| !filled_rows(table, c).is_empty())
                .collect();
            let Some(&col) = columns.as_slice().choose(rng) else { return Ok(None) };
            let rows = filled_rows(table, col);
            let &row = rows.as_slice().choose(rng).expect("non-empty by filter");
            let value = display_cell(&table.rows[row].values[col]);
            let question = fill(
                &tpl.pattern,
                &[
                    ("[entities]", topic.noun_plural()),
                    ("[property]", table.schema.columns[col].name.as_str()),
                    ("[value]", value.as_str()),
                ],
            )?;
            Some(Instantiated {
                question,
                meta: GoldMeta {
                    properties: vec![table.schema.columns[col].name.clone()],
                    value: Some(value),
                    ..GoldMeta::default()
                },
            })
        }
        QueryType::DistributionCompliance => {
            let columns = numeric_columns(table, 8);
            let Some(&col) = columns.as_slice().choose(rng) else { return Ok(None) };
            let question = fill(
                &tpl.pattern,
                &[
                    ("[property]", table.schema.columns[col].name.as_str()),
                    ("[entities]", topic.noun_plural()),
                ],
            )?;
            Some(Instantiated {
                question,
                meta: GoldMeta {
                    properties: vec![table.schema.columns[col].name.clone()],
                    ..GoldMeta::default()
                },
            })
        }
        QueryType::CorrelationAnalysis | QueryType::VarianceAnalysis => {
            // Both columns must overlap on enough rows to compute the
            // auxiliary finding, not just exist independently.
            let candidates = numeric_columns(table, 8);
            let mut pairs = Vec::new();
            for (i, &a) in candidates.iter().enumerate() {
                for &b in &candidates[i + 1..] {
                    let overlap = (0..table.rows.len())
                        .filter(|&r| {
                            !table.rows[r].values[a].is_missing()
                                && !table.rows[r].values[b].is_missing()
                        })
                        .count();
                    if overlap >= 8 {
                        pairs.push((a, b));
                    }
                }
            }
            let Some(&(a, b)) = pairs.as_slice().choose(rng) else { return Ok(None) };
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            let question = fill(
                &tpl.pattern,
                &[
                    ("[property A]", table.schema.columns[a].name.as_str()),
                    ("[property B]", table.schema.columns[b].name.as_str()),
                    ("[entities]", topic.noun_plural()),
                ],
            )?;
            Some(Instantiated {
                question,
                meta: GoldMeta {
                    properties: vec![
                        table.schema.columns[a].name.clone(),
                        table.schema.columns[b].name.clone(),
                    ],
                    ..GoldMeta::default()
                },
            })
        }
        QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
            if table.rows.len() < 2 {
                return Ok(None);
            }
            let picks = rand::seq::index::sample(rng, table.rows.len(), 2);
            let (a, b) = (picks.index(0), picks.index(1));
            let (name_a, name_b) = (row_name(table, a), row_name(table, b));
            let question = fill(
                &tpl.pattern,
                &[("[entity A]", name_a.as_str()), ("[entity B]", name_b.as_str())],
            )?;
            Some(Instantiated {
                question,
                meta: GoldMeta {
                    entities: vec![name_a, name_b],
                    entity_ids: vec![
                        table.rows[a].entity_id.clone(),
                        table.rows[b].entity_id.clone(),
                    ],
                    synthetic_semantics: tpl.qtype == QueryType::HypotheticalScenarios,
                    ..GoldMeta::default()
                },
            })
        }
    };
    Ok(out)
}

fn sql_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn sql_string(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn sql_literal(value: &str, kind: ColumnKind) -> String {
    if kind.is_numeric() {
        value.to_string()
    } else {
        sql_string(value)
    }
}

fn column_kind(table: &PropertyTable, name: &str) -> Result<ColumnKind, BenchError> {
    table
        .schema
        .columns
        .iter()
        .find(|c| c.name.eq_ignore_ascii_case(name))
        .map(|c| c.kind)
        .ok_or_else(|| BenchError::GenerationBug(format!("bound column {name} is not in the table")))
}

fn run_gold_sql(table: &PropertyTable, sql: &str) -> Result<crate::sql::ResultSet, BenchError> {
    let program = parse_sql(sql)?;
    Ok(execute(&program, &table.to_sql_table()?)?)
}

/// True when any directed edge joins the two entities, whichever way.
fn directly_related(graph: &WikiGraph, a: &str, b: &str) -> bool {
    graph
        .edges()
        .any(|e| (e.source == a && e.target == b) || (e.source == b && e.target == a))
}

/// Entities adjacent to both, either direction, excluding the pair.
fn shares_a_neighbor(graph: &WikiGraph, a: &str, b: &str) -> bool {
    let around = |center: &str| -> HashSet<String> {
        graph
            .edges()
            .filter_map(|e| {
                if e.source == center {
                    Some(e.target.clone())
                } else if e.target == center {
                    Some(e.source.clone())
                } else {
                    None
                }
            })
            .collect()
    };
    around(a).intersection(&around(b)).any(|n| n != a && n != b)
}

/// Computes the gold answer from recorded bindings: deterministic SQL on
/// the gold table for comparison and aggregation families, graph lookups
/// for relationship families, the fixed type-to-method map for the
/// statistics families. No model is consulted.
pub fn compute_gold_answer(
    qtype: QueryType,
    meta: &GoldMeta,
    table: &PropertyTable,
    graph: &WikiGraph,
) -> Result<Answer, BenchError> {
    let table_name = sql_ident(&table.schema.table_name);
    match qtype {
        QueryType::Intercomparison | QueryType::Superlative => {
            let prop = meta
                .properties
                .first()
                .ok_or_else(|| BenchError::GenerationBug("no bound property".into()))?;
            let agg = match meta.extreme.as_deref() {
                Some("lowest") => "MIN",
                _ => "MAX",
            };
            let kind = column_kind(table, prop)?;
            let scope = if qtype == QueryType::Intercomparison {
                let names: Vec<String> = meta.entities.iter().map(|e| sql_string(e)).collect();
                format!(" WHERE \"name\" IN ({})", names.join(", "))
            } else {
                String::new()
            };
            let extreme_sql =
                format!("SELECT {agg}({p}) FROM {table_name}{scope}", p = sql_ident(prop));
            let extreme = run_gold_sql(table, &extreme_sql)?
                .rows
                .first()
                .and_then(|r| r.first())
                .cloned()
                .unwrap_or(Value::Missing);
            if extreme.is_missing() {
                return Err(BenchError::GenerationBug(format!(
                    "no usable values for {prop} under: {extreme_sql}"
                )));
            }
            let joiner = if scope.is_empty() { " WHERE " } else { " AND " };
            let pick_sql = format!(
                "SELECT \"name\" FROM {table_name}{scope}{joiner}{p} = {v}",
                p = sql_ident(prop),
                v = sql_literal(&display_cell(&extreme), kind),
            );
            let picked = run_gold_sql(table, &pick_sql)?;
            let entities: Vec<String> =
                picked.rows.iter().map(|r| display_cell(&r[0])).collect();
            if entities.is_empty() {
                return Err(BenchError::GenerationBug(format!(
                    "extreme value vanished between queries: {pick_sql}"
                )));
            }
            let mut answer = Answer::of(AnswerPayload::EntityList { entities });
            answer.sql = Some(format!("{extreme_sql}\n{pick_sql}"));
            Ok(answer)
        }
        QueryType::Aggregation => {
            let prop = meta
                .properties
                .first()
                .ok_or_else(|| BenchError::GenerationBug("no bound property".into()))?;
            let value = meta
                .value
                .as_ref()
                .ok_or_else(|| BenchError::GenerationBug("no bound value".into()))?;
            let sql = format!(
                "SELECT COUNT(*) FROM {table_name} WHERE {p} = {v}",
                p = sql_ident(prop),
                v = sql_literal(value, column_kind(table, prop)?),
            );
            let result = run_gold_sql(table, &sql)?;
            let count = result
                .rows
                .first()
                .and_then(|r| r.first())
                .cloned()
                .ok_or_else(|| BenchError::GenerationBug(format!("empty COUNT result: {sql}")))?;
            let mut answer = Answer::of(AnswerPayload::Scalar { value: count });
            answer.sql = Some(sql);
            Ok(answer)
        }
        QueryType::DistributionCompliance
        | QueryType::CorrelationAnalysis
        | QueryType::VarianceAnalysis => {
            let method = StatMethod::for_question_type(qtype)
                .expect("statistics types always map to a method");
            let selection =
                MethodSelection { method, columns: meta.properties.clone() };
            let finding = compute_method_finding(&table.to_sql_table()?, &selection)
                .unwrap_or_else(|e| format!("method selected but not computable: {e}"));
            Ok(Answer::of(AnswerPayload::Method { selection, finding }))
        }
        QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
            let [a, b] = meta.entity_ids.as_slice() else {
                return Err(BenchError::GenerationBug(format!(
                    "relationship item needs two bound entity ids, has {}",
                    meta.entity_ids.len()
                )));
            };
            let value = if qtype == QueryType::DescriptiveRelationship {
                directly_related(graph, a, b)
            } else {
                shares_a_neighbor(graph, a, b)
            };
            let mut answer = Answer::of(AnswerPayload::Boolean { value });
            if qtype == QueryType::HypotheticalScenarios {
                answer
                    .notes
                    .push("synthetic semantics: gold is shared-connection existence".to_string());
            }
            Ok(answer)
        }
    }
}

/// Optional wording pass. Best-effort by contract: any model failure, an
/// empty reply, or a rewrite that loses a bound entity or property name
/// leaves the question unchanged.
pub fn refine_question(gateway: &LlmGateway, text: &str, meta: &GoldMeta) -> String {
    let prompt = match render_prompt(template_ids::REFINE_QUESTION, &bindings(&[("question", text)]))
    {
        Ok(p) => p,
        Err(e) => {
            log::debug!("refine prompt failed: {e}");
            return text.to_string();
        }
    };
    let reply = match gateway.complete_task(TaskClass::QuestionRefinement, &prompt) {
        Ok(r) => r,
        Err(e) => {
            log::debug!("refinement unavailable, keeping question: {e}");
            return text.to_string();
        }
    };
    let refined = reply.text.trim().trim_matches('"').trim();
    if refined.is_empty() {
        return text.to_string();
    }
    let lowered = refined.to_lowercase();
    let kept_all = meta
        .entities
        .iter()
        .chain(meta.properties.iter())
        .all(|needle| lowered.contains(&needle.to_lowercase()));
    if !kept_all {
        log::debug!("refinement dropped a bound name, keeping original: {refined}");
        return text.to_string();
    }
    refined.to_string()
}

/// Labels every item train or test: seeded shuffle inside each question
/// type, then a largest-remainder allocation so each stratum's train
/// count differs from fraction * stratum size by less than one.
pub fn split_dataset(
    mut items: Vec<BenchItem>,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<BenchItem>, BenchError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(BenchError::BadFraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = items.len();
    let total_train = (train_fraction * total as f64).round() as usize;

    let mut strata: Vec<Vec<usize>> = Vec::new();
    for qtype in QueryType::ALL {
        let mut indexes: Vec<usize> =
            (0..items.len()).filter(|&i| items[i].qtype == qtype).collect();
        indexes.shuffle(&mut rng);
        if !indexes.is_empty() {
            strata.push(indexes);
        }
    }

    let mut floors = Vec::with_capacity(strata.len());
    let mut remainders = Vec::with_capacity(strata.len());
    for s in &strata {
        let share = train_fraction * s.len() as f64;
        floors.push(share.floor() as usize);
        remainders.push(share - share.floor());
    }
    let mut extra = total_train.saturating_sub(floors.iter().sum::<usize>());
    let mut order: Vec<usize> = (0..strata.len()).collect();
    order.sort_by(|&a, &b| {
        remainders[b].partial_cmp(&remainders[a]).expect("remainders are finite").then(a.cmp(&b))
    });
    for at in order {
        if extra == 0 {
            break;
        }
        if floors[at] < strata[at].len() {
            floors[at] += 1;
            extra -= 1;
        }
    }

    for (stratum, take) in strata.iter().zip(&floors) {
        for (rank, &item_at) in stratum.iter().enumerate() {
            items[item_at].split = if rank < *take { Split::Train } else { Split::Test };
        }
    }
    Ok(items)
}

fn normalized_label(dict: &SynonymDict, s: &str) -> String {
    let canonical = dict.canonical(s).unwrap_or_else(|| s.trim());
    normalize_for_match(canonical)
}

fn scalar_number(v: &Value) -> Option<f64> {
    match v {
        Value::Text(s) => crate::table::parse_number_lenient(s),
        other => other.as_number(),
    }
}

/// One prediction against one gold answer. Kind mismatch scores as
/// incorrect rather than erroring, so broken systems still get a report.
pub fn score(prediction: &Answer, gold: &Answer, dict: &SynonymDict) -> bool {
    match (&prediction.payload, &gold.payload) {
        (AnswerPayload::Scalar { value: p }, AnswerPayload::Scalar { value: g }) => match (p, g) {
            (Value::Missing, Value::Missing) => true,
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Text(a), Value::Text(b)) => match (scalar_number(p), scalar_number(g)) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
                _ => normalize_for_match(a) == normalize_for_match(b),
            },
            _ => match (scalar_number(p), scalar_number(g)) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-9,
                _ => false,
            },
        },
        (
            AnswerPayload::EntityList { entities: p },
            AnswerPayload::EntityList { entities: g },
        ) => {
            // Gold holds the full tied set; naming any member is correct.
            let gold_set: HashSet<String> =
                g.iter().map(|e| normalized_label(dict, e)).collect();
            !p.is_empty() && p.iter().any(|e| gold_set.contains(&normalized_label(dict, e)))
        }
        (AnswerPayload::Boolean { value: p }, AnswerPayload::Boolean { value: g }) => p == g,
        (
            AnswerPayload::Method { selection: p, .. },
            AnswerPayload::Method { selection: g, .. },
        ) => {
            let norm = |sel: &MethodSelection| -> HashSet<String> {
                sel.columns.iter().map(|c| normalized_label(dict, c)).collect()
            };
            p.method == g.method && norm(p) == norm(g)
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyLine {
    pub name: String,
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

fn accuracy(correct: usize, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        correct as f64 / count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_type: Vec<AccuracyLine>,
    pub per_category: Vec<AccuracyLine>,
    pub total: usize,
    pub correct: usize,
    pub overall: f64,
}

impl EvalReport {
    /// Aligned plain-text table: the three category columns plus overall
    /// on top, the eight per-type lines below. Three decimals throughout.
    pub fn text_table(&self) -> String {
        let headers: Vec<&str> =
            self.per_category.iter().map(|c| c.name.as_str()).chain(["Overall"]).collect();
        let values: Vec<f64> =
            self.per_category.iter().map(|c| c.accuracy).chain([self.overall]).collect();
        let header_row = headers.join("  ");
        let value_row = headers
            .iter()
            .zip(values)
            .map(|(h, v)| format!("{v:>w$.3}", w = h.len()))
            .collect::<Vec<_>>()
            .join("  ");
        let mut out = format!("{header_row}\n{value_row}\n");
        out.push('\n');
        for line in &self.per_type {
            out.push_str(&format!(
                "{:<24} {:>6.3} ({}/{})\n",
                line.name, line.accuracy, line.correct, line.count
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scores a full run and aggregates accuracy per type, per category, and
/// overall. Duplicate item ids and empty runs are refused: both mean the
/// run harness itself misbehaved.
pub fn evaluate(run: &[(BenchItem, Answer)], dict: &SynonymDict) -> Result<EvalReport, BenchError> {
    if run.is_empty() {
        return Err(BenchError::EmptyRun);
    }
    let mut seen = HashSet::new();
    for (item, _) in run {
        if !seen.insert(item.id.clone()) {
            return Err(BenchError::DuplicateItem(item.id.clone()));
        }
    }
    let mut type_counts: BTreeMap<QueryType, (usize, usize)> = BTreeMap::new();
    for (item, answer) in run {
        let entry = type_counts.entry(item.qtype).or_default();
        entry.0 += 1;
        if score(answer, &item.gold, dict) {
            entry.1 += 1;
        }
    }
    let per_type: Vec<AccuracyLine> = QueryType::ALL
        .iter()
        .map(|qtype| {
            let (count, correct) = type_counts.get(qtype).copied().unwrap_or((0, 0));
            AccuracyLine {
                name: qtype.name().to_string(),
                count,
                correct,
                accuracy: accuracy(correct, count),
            }
        })
        .collect();
    let per_category: Vec<AccuracyLine> = QueryCategory::ALL
        .iter()
        .map(|category| {
            let (mut count, mut correct) = (0, 0);
            for qtype in QueryType::ALL {
                if qtype.category() == *category {
                    let (c, k) = type_counts.get(&qtype).copied().unwrap_or((0, 0));
                    count += c;
                    correct += k;
                }
            }
            AccuracyLine {
                name: category.name().to_string(),
                count,
                correct,
                accuracy: accuracy(correct, count),
            }
        })
        .collect();
    let total: usize = per_type.iter().map(|l| l.count).sum();
    let correct: usize = per_type.iter().map(|l| l.correct).sum();
    Ok(EvalReport { per_type, per_category, total, correct, overall: accuracy(correct, total) })
}

/// Everything generation needs to know about one topic.
pub struct TopicWorld {
    pub config: TopicConfig,
    pub table: PropertyTable,
    pub graph: WikiGraph,
}

/// Generates `count` items cycling topic-major through every (topic,
/// template) pair, so small counts still cover all eight types. Skip
/// signals fall through to the next pair. Deterministic under the seed.
pub fn generate_bench(
    worlds: &[TopicWorld],
    templates: &[QuestionTemplate],
    count: usize,
    seed: u64,
    train_fraction: f64,
    refine: Option<&LlmGateway>,
) -> Result<Vec<BenchItem>, BenchError> {
    if count == 0 {
        return Err(BenchError::BadCount);
    }
    if worlds.is_empty() || templates.is_empty() {
        return Err(BenchError::Template("need at least one topic and one template".into()));
    }
    for w in worlds {
        w.config.validate()?;
    }
    for t in templates {
        t.validate()?;
    }
    let combos: Vec<(usize, usize)> = (0..worlds.len())
        .flat_map(|w| (0..templates.len()).map(move |t| (w, t)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(count);
    let mut seen_questions = HashSet::new();
    for slot in 0..count {
        let mut produced = None;
        for step in 0..combos.len() {
            let (w, t) = combos[(slot + step) % combos.len()];
            let world = &worlds[w];
            let tpl = &templates[t];
            // A couple of redraws avoids verbatim repeats when the same
            // pair comes up again; exhausted variety is accepted as-is.
            let mut attempt = None;
            for _ in 0..10 {
                match instantiate_template(tpl, &world.table, &world.config, &mut rng)? {
                    Some(inst) if seen_questions.contains(&inst.question) => {
                        attempt = Some(inst);
                        continue;
                    }
                    Some(inst) => {
                        attempt = Some(inst);
                        break;
                    }
                    None => break,
                }
            }
            if let Some(inst) = attempt {
                produced = Some((w, t, inst));
                break;
            }
        }
        let Some((w, t, inst)) = produced else {
            return Err(BenchError::Template(
                "no topic/template pair has eligible data left".into(),
            ));
        };
        let world = &worlds[w];
        let id = format!("q{:05}", slot + 1);
        let question = match refine {
            Some(gateway) => refine_question(gateway, &inst.question, &inst.meta),
            None => inst.question.clone(),
        };
        let qtype = templates[t].qtype;
        let gold = compute_gold_answer(qtype, &inst.meta, &world.table, &world.graph)?
            .with_id(&id);
        seen_questions.insert(inst.question.clone());
        items.push(BenchItem {
            id,
            question,
            qtype,
            topic: world.config.name.clone(),
            gold_meta: inst.meta,
            gold,
            split: Split::Test,
        });
    }
    split_dataset(items, train_fraction, seed)
}

/// Per-type item counts, in declaration order of the types.
pub fn type_counts(items: &[BenchItem]) -> Vec<(&'static str, usize)> {
    QueryType::ALL
        .iter()
        .map(|qtype| (qtype.name(), items.iter().filter(|i| i.qtype == *qtype).count()))
        .collect()
}

/// Fetches a topic's entity set (root query or explicit id list), reads
/// every intro page, and builds the gold table through the same schema,
/// extraction and normalization stages the live pipeline uses.
pub fn build_gold_table(
    client: &WikiClient,
    gateway: &LlmGateway,
    cfg: &TopicConfig,
    workers: usize,
) -> Result<PropertyTable, BenchError> {
    cfg.validate()?;
    let mut entities: Vec<EntityRef> = Vec::new();
    let mut provenance = Vec::new();
    if let Some(root) = &cfg.root_query {
        let query = SparqlQuery {
            text: root.clone(),
            status: QueryStatus::Exact,
            referenced_ids: Vec::new(),
        };
        entities = execute_sparql(client, &query)?;
        provenance.push(query);
    } else {
        for chunk in cfg.entity_ids.chunks(500) {
            let values = chunk.iter().map(|id| format!("wd:{id}")).collect::<Vec<_>>().join(" ");
            let query = SparqlQuery {
                text: format!(
                    "SELECT ?entity ?entityLabel WHERE {{ VALUES ?entity {{ {values} }} \
                     ?entity rdfs:label ?entityLabel . }}"
                ),
                status: QueryStatus::Exact,
                referenced_ids: Vec::new(),
            };
            entities.extend(execute_sparql(client, &query)?);
            provenance.push(query);
        }
    }
    if let Some(expected) = cfg.expected_entities {
        if entities.len() != expected {
            return Err(BenchError::FixtureDrift {
                topic: cfg.name.clone(),
                expected,
                actual: entities.len(),
            });
        }
    }
    let fetched = ordered_map(entities.clone(), workers, |e| {
        fetch_page_intro(client, e).map(|intro| (e.id.clone(), intro))
    });
    let mut intros = BTreeMap::new();
    let mut missing_pages = Vec::new();
    for r in fetched {
        let (id, intro) = r?;
        match intro {
            Some(text) => {
                intros.insert(id, text);
            }
            None => missing_pages.push(id),
        }
    }
    let retrieval = RetrievalResult { entities, intros, missing_pages, provenance };
    let mut q = MultiEntityQuestion::with_topic(
        format!("Collect the reference property table for {}.", cfg.name),
        &cfg.name,
    );
    q.qtype = Some(QueryType::Aggregation);
    q.properties = cfg.properties.clone();
    Ok(build_table(gateway, &q, &retrieval, workers)?)
}

/// Line-delimited JSON, one item per line, stable field order.
pub fn write_bench_file(path: &Path, items: &[BenchItem]) -> Result<(), BenchError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_bench_file(path: &Path) -> Result<Vec<BenchItem>, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let mut items = Vec::new();
    for (at, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: BenchItem = serde_json::from_str(line)
            .map_err(|e| BenchError::ItemLine { line: at + 1, message: e.to_string() })?;
        items.push(item);
    }
    Ok(items)
}

/// File-name slug for per-topic artifacts (gold table CSVs, graphs):
/// lowercased, with every non-alphanumeric run collapsed to one underscore.
pub fn topic_slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

pub fn write_topics(path: &Path, topics: &[TopicConfig]) -> Result<(), BenchError> {
    let mut out = String::new();
    for t in topics {
        out.push_str(&serde_json::to_string(t)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_topics(path: &Path) -> Result<Vec<TopicConfig>, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let mut topics = Vec::new();
    for (at, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let topic: TopicConfig = serde_json::from_str(line)
            .map_err(|e| BenchError::ItemLine { line: at + 1, message: e.to_string() })?;
        topic.validate()?;
        topics.push(topic);
    }
    Ok(topics)
}

pub fn write_templates(path: &Path, templates: &[QuestionTemplate]) -> Result<(), BenchError> {
    let mut out = String::new();
    for t in templates {
        out.push_str(&serde_json::to_string(t)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_templates(path: &Path) -> Result<Vec<QuestionTemplate>, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let mut templates = Vec::new();
    for (at, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tpl: QuestionTemplate = serde_json::from_str(line)
            .map_err(|e| BenchError::ItemLine { line: at + 1, message: e.to_string() })?;
        tpl.validate()?;
        templates.push(tpl);
    }
    Ok(templates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, EntityRef};
    use crate::llm::{LlmBackend, LlmError, LlmRequest, LlmResponse, ModelConfig, ModelTier};
    use crate::table::{ColumnSpec, TableRow, TableSchema};
    use std::sync::Mutex;

    struct Scripted {
        replies: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: &[&str]) -> Self {
            Self { replies: Mutex::new(replies.iter().rev().map(|s| s.to_string()).collect()) }
        }
    }

    impl LlmBackend for Scripted {
        fn complete(
            &self,
            _request: &LlmRequest,
            _model: &ModelTier,
        ) -> Result<LlmResponse, LlmError> {
            let text = self
                .replies
                .lock()
                .unwrap()
                .pop()
                .ok_or_else(|| LlmError::Backend("script exhausted".into()))?;
            Ok(LlmResponse { text, input_tokens: 1, output_tokens: 1, backend_id: "test".into() })
        }

        fn id(&self) -> &'static str {
            "scripted"
        }
    }

    struct Failing;

    impl LlmBackend for Failing {
        fn complete(
            &self,
            _request: &LlmRequest,
            _model: &ModelTier,
        ) -> Result<LlmResponse, LlmError> {
            Err(LlmError::Backend("backend down".into()))
        }

        fn id(&self) -> &'static str {
            "failing"
        }
    }

    fn gateway(replies: &[&str]) -> LlmGateway {
        LlmGateway::new(Box::new(Scripted::new(replies)), ModelConfig::default())
    }

    fn failing_gateway() -> LlmGateway {
        LlmGateway::new(Box::new(Failing), ModelConfig::default())
    }

    fn text(s: &str) -> Value {
        Value::Text(s.into())
    }

    fn int(v: i64) -> Value {
        Value::Integer(v)
    }

    fn dec(v: f64) -> Value {
        Value::Decimal(v)
    }

    fn column(name: &str, kind: ColumnKind) -> ColumnSpec {
        ColumnSpec { name: name.into(), kind, description: String::new() }
    }

    fn table_of(
        name: &str,
        columns: Vec<ColumnSpec>,
        rows: Vec<(&str, Vec<Value>)>,
    ) -> PropertyTable {
        let rows = rows
            .into_iter()
            .map(|(id, values)| TableRow { entity_id: id.into(), values })
            .collect();
        let table =
            PropertyTable { schema: TableSchema { table_name: name.into(), columns }, rows };
        table.validate().expect("toy table is sound");
        table
    }

    fn presidents() -> PropertyTable {
        table_of(
            "presidents",
            vec![
                column("name", ColumnKind::Text),
                column("term years", ColumnKind::Integer),
                column("age at entry", ColumnKind::Decimal),
                column("party", ColumnKind::Text),
            ],
            vec![
                ("P1", vec![text("Washington"), int(8), dec(57.0), text("none")]),
                ("P2", vec![text("Adams"), int(4), dec(61.5), text("Federalist")]),
                ("P3", vec![text("Jefferson"), int(8), dec(57.9), text("Dem-Rep")]),
                ("P4", vec![text("Madison"), int(8), dec(57.3), text("Dem-Rep")]),
                ("P5", vec![text("Monroe"), int(8), dec(58.1), text("Dem-Rep")]),
                ("P6", vec![text("Quincy Adams"), int(4), dec(57.6), text("Dem-Rep")]),
                ("P7", vec![text("Jackson"), int(8), dec(61.9), text("Democrat")]),
                ("P8", vec![text("Van Buren"), int(4), dec(54.2), text("Democrat")]),
                ("P9", vec![text("Harrison"), Value::Missing, dec(68.1), text("Whig")]),
                ("P10", vec![text("O'Neill"), int(2), dec(50.0), text("Whig")]),
            ],
        )
    }

    fn toy_graph() -> WikiGraph {
        let mut g = WikiGraph::new();
        for id in ["P1", "P2", "P3", "P4", "P7", "P8", "E1"] {
            g.add_entity(EntityRef::new(id, id)).unwrap();
        }
        g.add_edge(Edge::new("P1", "P2", "R1")).unwrap();
        g.add_edge(Edge::new("P3", "E1", "R1")).unwrap();
        g.add_edge(Edge::new("P4", "E1", "R1")).unwrap();
        g
    }

    fn topic() -> TopicConfig {
        TopicConfig {
            name: "US presidents".into(),
            root_query: None,
            entity_ids: (1..=10).map(|i| format!("P{i}")).collect(),
            properties: vec!["term years".into(), "age at entry".into()],
            expected_entities: Some(10),
            entity_noun: "president".into(),
            entity_noun_plural: "presidents of the US".into(),
        }
    }

    fn meta(
        entities: &[(&str, &str)],
        properties: &[&str],
        value: Option<&str>,
        extreme: Option<&str>,
    ) -> GoldMeta {
        GoldMeta {
            entities: entities.iter().map(|(_, name)| name.to_string()).collect(),
            entity_ids: entities.iter().map(|(id, _)| id.to_string()).collect(),
            properties: properties.iter().map(|p| p.to_string()).collect(),
            value: value.map(str::to_string),
            extreme: extreme.map(str::to_string),
            synthetic_semantics: false,
        }
    }

    fn gold_entities(answer: &Answer) -> Vec<String> {
        match &answer.payload {
            AnswerPayload::EntityList { entities } => {
                let mut sorted = entities.clone();
                sorted.sort();
                sorted
            }
            other => panic!("expected an entity list, got {other:?}"),
        }
    }

    #[test]
    fn default_templates_cover_every_type_and_validate() {
        let templates = default_templates();
        assert_eq!(templates.len(), 8);
        for (tpl, qtype) in templates.iter().zip(QueryType::ALL) {
            assert_eq!(tpl.qtype, qtype);
            tpl.validate().unwrap();
        }
    }

    #[test]
    fn template_missing_slot_is_rejected() {
        let tpl = QuestionTemplate {
            qtype: QueryType::Intercomparison,
            pattern: "Which has the higher [property], [entity A] or someone?".into(),
            answer_kind: AnswerKind::EntityList,
        };
        let err = tpl.validate().unwrap_err();
        assert!(err.to_string().contains("[entity B]"), "{err}");
    }

    #[test]
    fn template_wrong_answer_kind_is_rejected() {
        let tpl = QuestionTemplate {
            qtype: QueryType::Aggregation,
            pattern: "How many [entities] have a [property] of [value]?".into(),
            answer_kind: AnswerKind::EntityList,
        };
        assert!(tpl.validate().is_err());
    }

    #[test]
    fn aggregation_gold_matches_brute_force() {
        let table = presidents();
        let graph = toy_graph();
        let brute =
            table.rows.iter().filter(|r| r.values[1] == Value::Integer(8)).count();
        assert_eq!(brute, 5);
        let m = meta(&[], &["term years"], Some("8"), None);
        let gold = compute_gold_answer(QueryType::Aggregation, &m, &table, &graph).unwrap();
        match &gold.payload {
            AnswerPayload::Scalar { value: Value::Integer(n) } => {
                assert_eq!(*n as usize, brute)
            }
            other => panic!("expected an integer scalar, got {other:?}"),
        }
        assert!(gold.sql.as_deref().unwrap().contains("COUNT(*)"));
    }

    #[test]
    fn aggregation_gold_quotes_text_values() {
        let table = presidents();
        let m = meta(&[], &["party"], Some("Whig"), None);
        let gold =
            compute_gold_answer(QueryType::Aggregation, &m, &table, &toy_graph()).unwrap();
        assert_eq!(gold.payload, AnswerPayload::Scalar { value: Value::Integer(2) });
        assert!(gold.sql.as_deref().unwrap().contains("'Whig'"));
    }

    #[test]
    fn intercomparison_gold_keeps_ties() {
        let table = presidents();
        let graph = toy_graph();
        let m = meta(
            &[("P3", "Jefferson"), ("P4", "Madison")],
            &["term years"],
            None,
            None,
        );
        let gold = compute_gold_answer(QueryType::Intercomparison, &m, &table, &graph).unwrap();
        assert_eq!(gold_entities(&gold), vec!["Jefferson", "Madison"]);
    }

    #[test]
    fn intercomparison_gold_handles_quotes_in_names() {
        let table = presidents();
        let m = meta(&[("P10", "O'Neill"), ("P2", "Adams")], &["term years"], None, None);
        let gold =
            compute_gold_answer(QueryType::Intercomparison, &m, &table, &toy_graph()).unwrap();
        assert_eq!(gold_entities(&gold), vec!["Adams"]);
    }

    #[test]
    fn superlative_gold_lowest_and_highest() {
        let table = presidents();
        let graph = toy_graph();
        let lowest = compute_gold_answer(
            QueryType::Superlative,
            &meta(&[], &["term years"], None, Some("lowest")),
            &table,
            &graph,
        )
        .unwrap();
        assert_eq!(gold_entities(&lowest), vec!["O'Neill"]);
        let highest = compute_gold_answer(
            QueryType::Superlative,
            &meta(&[], &["term years"], None, Some("highest")),
            &table,
            &graph,
        )
        .unwrap();
        let winners = gold_entities(&highest);
        assert_eq!(winners.len(), 5);
        assert!(winners.contains(&"Washington".to_string()));
    }

    #[test]
    fn superlative_gold_skips_missing_cells() {
        // Harrison has the top age but a missing term; the age question
        // still finds him, the term question never counts his row.
        let table = presidents();
        let gold = compute_gold_answer(
            QueryType::Superlative,
            &meta(&[], &["age at entry"], None, Some("highest")),
            &table,
            &toy_graph(),
        )
        .unwrap();
        assert_eq!(gold_entities(&gold), vec!["Harrison"]);
    }

    #[test]
    fn statistics_gold_selects_the_fixed_method() {
        let table = presidents();
        let graph = toy_graph();
        let cases = [
            (QueryType::DistributionCompliance, StatMethod::NormalityCheck, vec!["age at entry"]),
            (
                QueryType::CorrelationAnalysis,
                StatMethod::PearsonCorrelation,
                vec!["term years", "age at entry"],
            ),
            (
                QueryType::VarianceAnalysis,
                StatMethod::VarianceFTest,
                vec!["term years", "age at entry"],
            ),
        ];
        for (qtype, method, columns) in cases {
            let m = meta(&[], &columns, None, None);
            let gold = compute_gold_answer(qtype, &m, &table, &graph).unwrap();
            match &gold.payload {
                AnswerPayload::Method { selection, finding } => {
                    assert_eq!(selection.method, method);
                    assert_eq!(selection.columns, m.properties);
                    assert!(!finding.is_empty());
                }
                other => panic!("expected a method selection, got {other:?}"),
            }
        }
    }

    #[test]
    fn relationship_gold_reads_edges_both_ways() {
        let table = presidents();
        let graph = toy_graph();
        let related = compute_gold_answer(
            QueryType::DescriptiveRelationship,
            &meta(&[("P1", "Washington"), ("P2", "Adams")], &[], None, None),
            &table,
            &graph,
        )
        .unwrap();
        assert_eq!(related.payload, AnswerPayload::Boolean { value: true });
        let reversed = compute_gold_answer(
            QueryType::DescriptiveRelationship,
            &meta(&[("P2", "Adams"), ("P1", "Washington")], &[], None, None),
            &table,
            &graph,
        )
        .unwrap();
        assert_eq!(reversed.payload, AnswerPayload::Boolean { value: true });
        let unrelated = compute_gold_answer(
            QueryType::DescriptiveRelationship,
            &meta(&[("P7", "Jackson"), ("P8", "Van Buren")], &[], None, None),
            &table,
            &graph,
        )
        .unwrap();
        assert_eq!(unrelated.payload, AnswerPayload::Boolean { value: false });
    }

    #[test]
    fn hypothetical_gold_is_shared_neighbor_existence() {
        let table = presidents();
        let graph = toy_graph();
        let shared = compute_gold_answer(
            QueryType::HypotheticalScenarios,
            &meta(&[("P3", "Jefferson"), ("P4", "Madison")], &[], None, None),
            &table,
            &graph,
        )
        .unwrap();
        assert_eq!(shared.payload, AnswerPayload::Boolean { value: true });
        assert!(shared.notes.iter().any(|n| n.contains("synthetic semantics")));
        let none = compute_gold_answer(
            QueryType::HypotheticalScenarios,
            &meta(&[("P1", "Washington"), ("P7", "Jackson")], &[], None, None),
            &table,
            &graph,
        )
        .unwrap();
        assert_eq!(none.payload, AnswerPayload::Boolean { value: false });
    }

    #[test]
    fn instantiation_skips_ineligible_templates() {
        let tiny = table_of(
            "clubs",
            vec![column("name", ColumnKind::Text), column("city", ColumnKind::Text)],
            vec![
                ("C1", vec![text("Alpha"), text("Boston")]),
                ("C2", vec![text("Beta"), text("Austin")]),
            ],
        );
        let cfg = TopicConfig {
            name: "clubs".into(),
            root_query: None,
            entity_ids: vec!["C1".into(), "C2".into()],
            properties: vec!["city".into()],
            expected_entities: None,
            entity_noun: "club".into(),
            entity_noun_plural: "clubs".into(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for tpl in default_templates() {
            let out = instantiate_template(&tpl, &tiny, &cfg, &mut rng).unwrap();
            match tpl.qtype {
                QueryType::Aggregation
                | QueryType::DescriptiveRelationship
                | QueryType::HypotheticalScenarios => {
                    assert!(out.is_some(), "{:?} should fit a text-only table", tpl.qtype)
                }
                _ => assert!(out.is_none(), "{:?} needs numeric data", tpl.qtype),
            }
        }
    }

    #[test]
    fn instantiation_fills_every_slot_from_the_table() {
        let table = presidents();
        let cfg = topic();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tpl in default_templates() {
            let inst = instantiate_template(&tpl, &table, &cfg, &mut rng)
                .unwrap()
                .unwrap_or_else(|| panic!("{:?} should instantiate", tpl.qtype));
            assert!(!inst.question.contains('['), "unfilled slot: {}", inst.question);
            match tpl.qtype {
                QueryType::Intercomparison => {
                    assert_eq!(inst.meta.entities.len(), 2);
                    assert_eq!(inst.meta.entity_ids.len(), 2);
                    assert_eq!(inst.meta.properties.len(), 1);
                }
                QueryType::Superlative => {
                    assert!(inst.meta.extreme.is_some());
                    assert_eq!(inst.meta.properties.len(), 1);
                }
                QueryType::Aggregation => {
                    assert!(inst.meta.value.is_some());
                    assert_eq!(inst.meta.properties.len(), 1);
                }
                QueryType::DistributionCompliance => {
                    assert_eq!(inst.meta.properties.len(), 1);
                }
                QueryType::CorrelationAnalysis | QueryType::VarianceAnalysis => {
                    assert_eq!(inst.meta.properties.len(), 2);
                }
                QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
                    assert_eq!(inst.meta.entities.len(), 2);
                    assert_eq!(
                        inst.meta.synthetic_semantics,
                        tpl.qtype == QueryType::HypotheticalScenarios
                    );
                }
            }
        }
    }

    #[test]
    fn refinement_keeps_original_when_backend_fails() {
        let m = meta(&[("P1", "Texas"), ("P2", "Ohio")], &["population"], None, None);
        let q = "Which has the higher population, Texas or Ohio?";
        assert_eq!(refine_question(&failing_gateway(), q, &m), q);
    }

    #[test]
    fn refinement_rejects_rewrites_that_drop_names() {
        let m = meta(&[("P1", "Texas"), ("P2", "Ohio")], &["population"], None, None);
        let q = "Which has the higher population, Texas or Ohio?";
        let g = gateway(&["Which state is bigger?"]);
        assert_eq!(refine_question(&g, q, &m), q);
    }

    #[test]
    fn refinement_accepts_rewrites_that_keep_names() {
        let m = meta(&[("P1", "Texas"), ("P2", "Ohio")], &["population"], None, None);
        let q = "Which has the higher population, Texas or Ohio?";
        let g = gateway(&["Between Texas and Ohio, which one has the larger population?"]);
        assert_eq!(
            refine_question(&g, q, &m),
            "Between Texas and Ohio, which one has the larger population?"
        );
    }

    #[test]
    fn refinement_treats_empty_reply_as_no_change() {
        let m = meta(&[], &[], None, None);
        assert_eq!(refine_question(&gateway(&["  \"\"  "]), "Keep me.", &m), "Keep me.");
    }

    fn dummy_item(i: usize, qtype: QueryType) -> BenchItem {
        BenchItem {
            id: format!("q{i:05}"),
            question: format!("dummy {i}"),
            qtype,
            topic: "toy".into(),
            gold_meta: GoldMeta::default(),
            gold: Answer::of(AnswerPayload::Boolean { value: true }),
            split: Split::Test,
        }
    }

    #[test]
    fn split_hits_exact_counts_on_the_big_benchmark_size() {
        let items: Vec<BenchItem> = (0..4780)
            .map(|i| dummy_item(i + 1, QueryType::ALL[i % QueryType::ALL.len()]))
            .collect();
        let fraction = 3406.0 / 4780.0;
        let split = split_dataset(items, fraction, 99).unwrap();
        let train = split.iter().filter(|i| i.split == Split::Train).count();
        assert_eq!(train, 3406);
        assert_eq!(split.len() - train, 1374);
        for qtype in QueryType::ALL {
            let stratum: Vec<&BenchItem> =
                split.iter().filter(|i| i.qtype == qtype).collect();
            let got = stratum.iter().filter(|i| i.split == Split::Train).count() as f64;
            let want = fraction * stratum.len() as f64;
            assert!((got - want).abs() < 1.0, "{qtype:?}: {got} vs {want}");
        }
    }

    #[test]
    fn split_is_deterministic_under_the_seed() {
        let items: Vec<BenchItem> =
            (0..200).map(|i| dummy_item(i + 1, QueryType::ALL[i % 8])).collect();
        let a = split_dataset(items.clone(), 0.7, 5).unwrap();
        let b = split_dataset(items.clone(), 0.7, 5).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(items, 0.7, 6).unwrap();
        assert_ne!(a, c, "a different seed should land on a different assignment");
    }

    #[test]
    fn split_of_one_item_per_type_is_even_at_half() {
        let items: Vec<BenchItem> =
            QueryType::ALL.iter().enumerate().map(|(i, q)| dummy_item(i + 1, *q)).collect();
        let split = split_dataset(items, 0.5, 3).unwrap();
        assert_eq!(split.iter().filter(|i| i.split == Split::Train).count(), 4);
        assert_eq!(split.iter().filter(|i| i.split == Split::Test).count(), 4);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        for bad in [0.0, 1.0, -0.2, 1.7] {
            let items = vec![dummy_item(1, QueryType::Aggregation)];
            assert!(matches!(
                split_dataset(items, bad, 1),
                Err(BenchError::BadFraction(_))
            ));
        }
    }

    fn scalar(v: Value) -> Answer {
        Answer::of(AnswerPayload::Scalar { value: v })
    }

    fn entity_list(names: &[&str]) -> Answer {
        Answer::of(AnswerPayload::EntityList {
            entities: names.iter().map(|s| s.to_string()).collect(),
        })
    }

    #[test]
    fn scoring_scalars_compares_numbers_leniently() {
        let dict = SynonymDict::default_dict();
        assert!(score(&scalar(int(4)), &scalar(int(4)), dict));
        assert!(!score(&scalar(int(4)), &scalar(int(5)), dict));
        assert!(score(&scalar(dec(1.0 + 5e-10)), &scalar(dec(1.0)), dict));
        assert!(!score(&scalar(dec(1.1)), &scalar(dec(1.0)), dict));
        assert!(score(&scalar(text("1,115")), &scalar(int(1115)), dict));
        assert!(score(&scalar(text("Whig")), &scalar(text("whig")), dict));
        assert!(score(&scalar(Value::Missing), &scalar(Value::Missing), dict));
        assert!(!score(&scalar(Value::Missing), &scalar(int(0)), dict));
    }

    #[test]
    fn scoring_entity_lists_accepts_any_tied_member_and_synonyms() {
        let dict = SynonymDict::default_dict();
        let gold = entity_list(&["United States", "Japan"]);
        assert!(score(&entity_list(&["the United States"]), &gold, dict));
        assert!(score(&entity_list(&["USA"]), &gold, dict));
        assert!(score(&entity_list(&["japan"]), &gold, dict));
        assert!(!score(&entity_list(&["France"]), &gold, dict));
        assert!(!score(&entity_list(&[]), &gold, dict));
        // Tie set in gold: either member alone is a correct answer.
        let tied = entity_list(&["Jefferson", "Madison"]);
        assert!(score(&entity_list(&["Madison"]), &tied, dict));
        // The reverse does not hold: gold names one winner, a two-guess
        // answer only counts if one of them is that winner.
        let narrow = entity_list(&["Jefferson"]);
        assert!(score(&entity_list(&["Jefferson", "Madison"]), &narrow, dict));
        assert!(!score(&entity_list(&["Madison", "Monroe"]), &narrow, dict));
    }

    #[test]
    fn scoring_methods_needs_method_and_column_set() {
        let dict = SynonymDict::default_dict();
        let gold = Answer::of(AnswerPayload::Method {
            selection: MethodSelection {
                method: StatMethod::PearsonCorrelation,
                columns: vec!["term years".into(), "age at entry".into()],
            },
            finding: "r = 0.2".into(),
        });
        let same_diff_case = Answer::of(AnswerPayload::Method {
            selection: MethodSelection {
                method: StatMethod::PearsonCorrelation,
                columns: vec!["Age At Entry".into(), "Term Years".into()],
            },
            finding: String::new(),
        });
        assert!(score(&same_diff_case, &gold, dict));
        let wrong_method = Answer::of(AnswerPayload::Method {
            selection: MethodSelection {
                method: StatMethod::VarianceFTest,
                columns: vec!["term years".into(), "age at entry".into()],
            },
            finding: String::new(),
        });
        assert!(!score(&wrong_method, &gold, dict));
        let wrong_columns = Answer::of(AnswerPayload::Method {
            selection: MethodSelection {
                method: StatMethod::PearsonCorrelation,
                columns: vec!["term years".into()],
            },
            finding: String::new(),
        });
        assert!(!score(&wrong_columns, &gold, dict));
    }

    #[test]
    fn scoring_kind_mismatch_is_incorrect_not_an_error() {
        let dict = SynonymDict::default_dict();
        assert!(!score(&scalar(int(1)), &entity_list(&["Adams"]), dict));
        assert!(!score(
            &Answer::of(AnswerPayload::Boolean { value: true }),
            &scalar(int(1)),
            dict
        ));
    }

    fn run_of(specs: &[(QueryType, usize, usize)]) -> Vec<(BenchItem, Answer)> {
        let mut run = Vec::new();
        let mut n = 0;
        for &(qtype, count, correct) in specs {
            for k in 0..count {
                n += 1;
                let item = dummy_item(n, qtype);
                let payload = AnswerPayload::Boolean { value: k < correct };
                run.push((item, Answer::of(payload)));
            }
        }
        run
    }

    #[test]
    fn evaluation_weights_overall_by_item_count() {
        let dict = SynonymDict::default_dict();
        let run = run_of(&[
            (QueryType::Intercomparison, 10, 9),
            (QueryType::Aggregation, 10, 3),
        ]);
        let report = evaluate(&run, dict).unwrap();
        assert_eq!(report.total, 20);
        assert_eq!(report.correct, 12);
        assert_eq!(report.overall, 12.0 / 20.0);
        let by_name = |name: &str| {
            report
                .per_type
                .iter()
                .find(|l| l.name == name)
                .unwrap_or_else(|| panic!("missing line {name}"))
                .clone()
        };
        assert_eq!(by_name("Intercomparison").accuracy, 0.9);
        assert_eq!(by_name("Aggregation").accuracy, 0.3);
        assert_eq!(by_name("Superlative").count, 0);
        assert_eq!(by_name("Superlative").accuracy, 0.0);
        let comparison =
            report.per_category.iter().find(|l| l.name == "Comparison").unwrap();
        assert_eq!(comparison.accuracy, 0.9);
        let statistics =
            report.per_category.iter().find(|l| l.name == "Statistics").unwrap();
        assert_eq!(statistics.accuracy, 0.3);
    }

    #[test]
    fn evaluation_rejects_duplicates_and_empty_runs() {
        let dict = SynonymDict::default_dict();
        assert!(matches!(evaluate(&[], dict), Err(BenchError::EmptyRun)));
        let item = dummy_item(1, QueryType::Aggregation);
        let run = vec![
            (item.clone(), Answer::of(AnswerPayload::Boolean { value: true })),
            (item, Answer::of(AnswerPayload::Boolean { value: true })),
        ];
        assert!(matches!(evaluate(&run, dict), Err(BenchError::DuplicateItem(_))));
    }

    #[test]
    fn report_table_lines_up_under_the_headers() {
        let dict = SynonymDict::default_dict();
        let run = run_of(&[
            (QueryType::Intercomparison, 10, 9),
            (QueryType::Aggregation, 10, 3),
        ]);
        let report = evaluate(&run, dict).unwrap();
        let table = report.text_table();
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some("Comparison  Statistics  Relationship  Overall"));
        let expected = format!("{:>10.3}  {:>10.3}  {:>12.3}  {:>7.3}", 0.9, 0.3, 0.0, 0.6);
        assert_eq!(lines.next(), Some(expected.as_str()));
        assert_eq!(lines.next(), Some(""));
        let per_type: Vec<&str> = lines.collect();
        assert_eq!(per_type.len(), 8);
        assert!(per_type[0].starts_with("Intercomparison"));
        assert!(per_type[0].contains("0.900 (9/10)"));
        assert!(per_type[2].contains("0.300 (3/10)"));
    }

    #[test]
    fn bench_files_round_trip_and_report_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.jsonl");
        let items = vec![
            BenchItem {
                id: "q00001".into(),
                question: "Which has the higher term years, Jefferson or Madison?".into(),
                qtype: QueryType::Intercomparison,
                topic: "US presidents".into(),
                gold_meta: meta(
                    &[("P3", "Jefferson"), ("P4", "Madison")],
                    &["term years"],
                    None,
                    None,
                ),
                gold: entity_list(&["Jefferson", "Madison"]).with_id("q00001"),
                split: Split::Train,
            },
            dummy_item(2, QueryType::HypotheticalScenarios),
        ];
        write_bench_file(&path, &items).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        let order: Vec<usize> = ["\"id\"", "\"question\"", "\"qtype\"", "\"topic\"", "\"gold_meta\"", "\"gold\"", "\"split\""]
            .iter()
            .map(|k| first.find(k).unwrap_or_else(|| panic!("{k} missing")))
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]), "field order drifted: {first}");
        let back = read_bench_file(&path).unwrap();
        assert_eq!(back, items);

        let mangled = path.with_file_name("mangled.jsonl");
        let mut lines: Vec<&str> = text.lines().collect();
        lines.insert(1, "{not json");
        std::fs::write(&mangled, lines.join("\n")).unwrap();
        match read_bench_file(&mangled) {
            Err(BenchError::ItemLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a line-tagged parse error, got {other:?}"),
        }
    }

    #[test]
    fn topic_and_template_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let topics_path = dir.path().join("topics.jsonl");
        let templates_path = dir.path().join("templates.jsonl");
        let topics = vec![topic()];
        write_topics(&topics_path, &topics).unwrap();
        assert_eq!(read_topics(&topics_path).unwrap(), topics);
        let templates = default_templates();
        write_templates(&templates_path, &templates).unwrap();
        assert_eq!(read_templates(&templates_path).unwrap(), templates);

        let bad = dir.path().join("bad-topics.jsonl");
        std::fs::write(&bad, "{\"name\":\"empty\",\"properties\":[]}\n").unwrap();
        assert!(read_topics(&bad).is_err());
    }

    #[test]
    fn topic_slugs_are_filesystem_safe() {
        assert_eq!(topic_slug("Presidents of the United States"), "presidents_of_the_united_states");
        assert_eq!(topic_slug("Cities of the World"), "cities_of_the_world");
        assert_eq!(topic_slug("  ACM -- fellows!"), "acm_fellows");
        assert_eq!(topic_slug("___"), "");
    }

    fn toy_world() -> TopicWorld {
        TopicWorld { config: topic(), table: presidents(), graph: toy_graph() }
    }

    #[test]
    fn generation_covers_all_types_and_is_deterministic() {
        let worlds = vec![toy_world()];
        let templates = default_templates();
        let a = generate_bench(&worlds, &templates, 8, 7, 0.5, None).unwrap();
        assert_eq!(a.len(), 8);
        for (name, count) in type_counts(&a) {
            assert_eq!(count, 1, "{name} should appear exactly once at count 8");
        }
        assert_eq!(a.iter().filter(|i| i.split == Split::Train).count(), 4);
        let ids: Vec<&str> = a.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids[0], "q00001");
        assert_eq!(ids[7], "q00008");
        let b = generate_bench(&worlds, &templates, 8, 7, 0.5, None).unwrap();
        assert_eq!(a, b);
        let c = generate_bench(&worlds, &templates, 16, 7, 0.5, None).unwrap();
        for (name, count) in type_counts(&c) {
            assert_eq!(count, 2, "{name} at count 16");
        }
    }

    #[test]
    fn generation_golds_are_self_consistent() {
        let worlds = vec![toy_world()];
        let items = generate_bench(&worlds, &default_templates(), 24, 21, 0.5, None).unwrap();
        for item in &items {
            let again = compute_gold_answer(
                item.qtype,
                &item.gold_meta,
                &worlds[0].table,
                &worlds[0].graph,
            )
            .unwrap()
            .with_id(&item.id);
            assert_eq!(again, item.gold, "gold drifted for {}", item.id);
            assert!(AnswerKind::for_qtype(item.qtype).matches(&item.gold));
        }
    }

    #[test]
    fn generation_with_failing_refiner_matches_unrefined_output() {
        let worlds = vec![toy_world()];
        let templates = default_templates();
        let plain = generate_bench(&worlds, &templates, 8, 13, 0.5, None).unwrap();
        let refused = failing_gateway();
        let refined = generate_bench(&worlds, &templates, 8, 13, 0.5, Some(&refused)).unwrap();
        assert_eq!(plain, refined);
    }

    #[test]
    fn generation_rejects_empty_requests() {
        let worlds = vec![toy_world()];
        let templates = default_templates();
        assert!(matches!(
            generate_bench(&worlds, &templates, 0, 1, 0.5, None),
            Err(BenchError::BadCount)
        ));
        assert!(generate_bench(&[], &templates, 1, 1, 0.5, None).is_err());
        assert!(generate_bench(&worlds, &[], 1, 1, 0.5, None).is_err());
    }
}
