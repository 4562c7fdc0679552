//! From question plus property table to an answer: model-generated SQL
//! with one repair round trip, or, for distribution questions, selection of
//! a statistical method over table columns followed by its computation.
//!
//! Payload kind per question type: Aggregation gives a Scalar,
//! Intercomparison and Superlative give an EntityList, the two relationship
//! types give a Boolean read off the SQL result, and the three statistics
//! subtypes give a MethodSelection. A relationship result is truthy when a
//! single-cell result is nonzero (or a yes/true text), otherwise when any
//! row came back.

use serde::{Deserialize, Serialize};

use super::ast::print_sql;
use super::engine::{execute, ResultSet, SqlTable};
use super::parser::parse_sql;
use super::{Query, SqlError, Value};
use crate::graph::QueryType;
use crate::llm::{bindings, cleanup, render_prompt, template_ids, LlmGateway, TaskClass};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatMethod {
    PearsonCorrelation,
    VarianceFTest,
    NormalityCheck,
}

impl StatMethod {
    pub fn name(self) -> &'static str {
        match self {
            StatMethod::PearsonCorrelation => "pearson correlation",
            StatMethod::VarianceFTest => "variance F-test",
            StatMethod::NormalityCheck => "normality check",
        }
    }

    /// How many table columns the method consumes.
    pub fn arity(self) -> usize {
        match self {
            StatMethod::PearsonCorrelation | StatMethod::VarianceFTest => 2,
            StatMethod::NormalityCheck => 1,
        }
    }

    /// The method a question type calls for; None for types answered by
    /// SQL instead.
    pub fn for_question_type(qtype: QueryType) -> Option<StatMethod> {
        match qtype {
            QueryType::CorrelationAnalysis => Some(StatMethod::PearsonCorrelation),
            QueryType::VarianceAnalysis => Some(StatMethod::VarianceFTest),
            QueryType::DistributionCompliance => Some(StatMethod::NormalityCheck),
            _ => None,
        }
    }
}

/// A selected statistical method and the table columns it runs over, in
/// question mention order. Scoring treats the columns as a set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSelection {
    pub method: StatMethod,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnswerPayload {
    Scalar { value: Value },
    EntityList { entities: Vec<String> },
    Boolean { value: bool },
    Method { selection: MethodSelection, finding: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    #[serde(default)]
    pub question_id: Option<String>,
    pub payload: AnswerPayload,
    /// Canonical form of the executed statement, when SQL was involved.
    #[serde(default)]
    pub sql: Option<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Answer {
    pub fn of(payload: AnswerPayload) -> Answer {
        Answer { question_id: None, payload, sql: None, notes: Vec::new() }
    }

    pub fn with_id(mut self, id: &str) -> Answer {
        self.question_id = Some(id.to_string());
        self
    }

    pub fn kind_word(&self) -> &'static str {
        match self.payload {
            AnswerPayload::Scalar { .. } => "scalar",
            AnswerPayload::EntityList { .. } => "entity list",
            AnswerPayload::Boolean { .. } => "boolean",
            AnswerPayload::Method { .. } => "method selection",
        }
    }
}

fn column_kind_word(table: &SqlTable, col: usize) -> &'static str {
    for row in &table.rows {
        match &row[col] {
            Value::Integer(_) => return "integer",
            Value::Decimal(_) => return "decimal",
            Value::Text(_) => return "text",
            Value::Missing => continue,
        }
    }
    "text"
}

fn describe_columns(table: &SqlTable) -> String {
    table
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| format!("\"{c}\" ({})", column_kind_word(table, i)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn describe_samples(table: &SqlTable) -> String {
    if table.rows.is_empty() {
        return "(no rows)".to_string();
    }
    table
        .rows
        .iter()
        .take(3)
        .map(|row| {
            row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" | ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_and_run(raw_sql: &str, table: &SqlTable) -> Result<(Query, ResultSet), SqlError> {
    let query = parse_sql(raw_sql)?;
    let result = execute(&query, table)?;
    Ok((query, result))
}

/// Asks the model for one SELECT statement and runs it. A statement that
/// fails to parse or execute gets one repair round trip carrying the error
/// text; a second failure reports both replies.
pub fn generate_and_run_sql(
    gateway: &LlmGateway,
    question: &str,
    table: &SqlTable,
) -> Result<(Query, ResultSet), SqlError> {
    let columns = describe_columns(table);
    let samples = describe_samples(table);
    let prompt = render_prompt(
        template_ids::SQL,
        &bindings(&[
            ("question", question),
            ("table", &table.name),
            ("columns", &columns),
            ("samples", &samples),
        ]),
    )?;
    let reply = gateway.complete_task(TaskClass::SqlGeneration, &prompt)?;
    let first_reply = cleanup::query_payload(&reply.text, &["SELECT"])
        .ok_or_else(|| SqlError::NoQueryInReply(reply.text.clone()))?;

    let first_error = match parse_and_run(&first_reply, table) {
        Ok(ok) => return Ok(ok),
        Err(e) => e,
    };
    let repair_prompt = render_prompt(
        template_ids::SQL_REPAIR,
        &bindings(&[
            ("sql", &first_reply),
            ("error", &first_error.to_string()),
            ("question", question),
            ("table", &table.name),
            ("columns", &columns),
        ]),
    )?;
    let reply = gateway.complete_task(TaskClass::SqlGeneration, &repair_prompt)?;
    let second_reply = cleanup::query_payload(&reply.text, &["SELECT"])
        .ok_or_else(|| SqlError::NoQueryInReply(reply.text.clone()))?;
    parse_and_run(&second_reply, table).map_err(|second_error| SqlError::Generation {
        first_reply,
        first_error: first_error.to_string(),
        second_reply,
        second_error: second_error.to_string(),
    })
}

/// Lowercased, alphanumeric-only with single spaces: the matching space
/// for "does the question mention this column".
pub fn normalize_for_match(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut last_space = true;
    for c in s.chars() {
        if c.is_alphanumeric() {
            for lc in c.to_lowercase() {
                out.push(lc);
            }
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Picks the method from the question type, then the columns it runs over:
/// columns whose names appear in the question, in mention order. When the
/// text match does not pin down exactly the needed number of columns, the
/// model is asked to name them.
pub fn select_stat_method(
    gateway: &LlmGateway,
    question: &str,
    qtype: QueryType,
    table: &SqlTable,
) -> Result<MethodSelection, SqlError> {
    let method = StatMethod::for_question_type(qtype).ok_or_else(|| {
        SqlError::Semantic(format!("{} is not answered by a statistical method", qtype.name()))
    })?;
    let normalized_question = format!(" {} ", normalize_for_match(question));
    let mut mentioned: Vec<(usize, &String)> = Vec::new();
    for name in &table.columns {
        let needle = format!(" {} ", normalize_for_match(name));
        if needle.trim().is_empty() {
            continue;
        }
        if let Some(pos) = normalized_question.find(&needle) {
            mentioned.push((pos, name));
        }
    }
    mentioned.sort_by_key(|(pos, _)| *pos);
    if mentioned.len() == method.arity() {
        return Ok(MethodSelection {
            method,
            columns: mentioned.into_iter().map(|(_, n)| n.clone()).collect(),
        });
    }

    // Ambiguous or insufficient text match: have the model name the columns.
    let columns_desc = table.columns.join(", ");
    let prompt = render_prompt(
        template_ids::STAT_COLUMNS,
        &bindings(&[("question", question), ("columns", &columns_desc)]),
    )?;
    let reply = gateway.complete_task(TaskClass::SemanticAnalysis, &prompt)?;
    let payload = cleanup::json_payload(&reply.text)
        .ok_or_else(|| SqlError::Semantic(format!("no column list in reply: {}", reply.text)))?;
    let names: Vec<String> = serde_json::from_str(&payload)
        .map_err(|e| SqlError::Semantic(format!("bad column list: {e}")))?;
    let mut columns = Vec::new();
    for n in names {
        let hit = table
            .columns
            .iter()
            .find(|c| c.eq_ignore_ascii_case(&n))
            .ok_or_else(|| SqlError::UnknownColumn {
                name: n.clone(),
                available: table.columns.clone(),
            })?;
        if !columns.contains(hit) {
            columns.push(hit.clone());
        }
    }
    if columns.len() != method.arity() {
        return Err(SqlError::Semantic(format!(
            "{} needs {} columns, resolved {:?}",
            method.name(),
            method.arity(),
            columns
        )));
    }
    Ok(MethodSelection { method, columns })
}

fn column_index(table: &SqlTable, name: &str) -> Result<usize, SqlError> {
    table
        .columns
        .iter()
        .position(|c| c.eq_ignore_ascii_case(name))
        .ok_or_else(|| SqlError::UnknownColumn {
            name: name.to_string(),
            available: table.columns.clone(),
        })
}

/// Runs the selected method over the table and words the outcome. Rows
/// with non-numeric or missing cells drop out (pairwise for correlation).
pub fn compute_method_finding(
    table: &SqlTable,
    selection: &MethodSelection,
) -> Result<String, SqlError> {
    let idx: Vec<usize> = selection
        .columns
        .iter()
        .map(|n| column_index(table, n))
        .collect::<Result<_, _>>()?;
    let numeric = |col: usize| -> Vec<f64> {
        table.rows.iter().filter_map(|r| r[col].as_number()).collect()
    };
    let finding = match selection.method {
        StatMethod::PearsonCorrelation => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for row in &table.rows {
                if let (Some(x), Some(y)) = (row[idx[0]].as_number(), row[idx[1]].as_number()) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            let r = stats::pearson(&xs, &ys)
                .map_err(|e| SqlError::Eval(format!("pearson correlation: {e}")))?;
            format!(
                "pearson correlation of {} and {} over {} pairs: r = {:.4}",
                selection.columns[0],
                selection.columns[1],
                xs.len(),
                r
            )
        }
        StatMethod::VarianceFTest => {
            let a = numeric(idx[0]);
            let b = numeric(idx[1]);
            let t = stats::variance_ratio_test(&a, &b)
                .map_err(|e| SqlError::Eval(format!("variance F-test: {e}")))?;
            format!(
                "variance F-test of {} and {}: F = {:.4} vs critical {:.4}, {}",
                selection.columns[0],
                selection.columns[1],
                t.f_statistic,
                t.critical_value,
                if t.significant { "significantly different" } else { "not significantly different" }
            )
        }
        StatMethod::NormalityCheck => {
            let xs = numeric(idx[0]);
            let t = stats::normality_check(&xs)
                .map_err(|e| SqlError::Eval(format!("normality check: {e}")))?;
            format!(
                "normality of {} over {} values: JB = {:.4} vs critical {:.4}, {}",
                selection.columns[0],
                xs.len(),
                t.statistic,
                t.critical_value,
                if t.normal { "consistent with normal" } else { "not normal" }
            )
        }
    };
    Ok(finding)
}

/// Reads a yes/no off a relationship query's result.
fn truthiness(result: &ResultSet) -> bool {
    if result.rows.len() == 1 && result.rows[0].len() == 1 {
        return match &result.rows[0][0] {
            Value::Integer(n) => *n != 0,
            Value::Decimal(d) => *d != 0.0,
            Value::Text(t) => {
                let t = t.trim();
                t.eq_ignore_ascii_case("yes") || t.eq_ignore_ascii_case("true")
            }
            Value::Missing => false,
        };
    }
    !result.rows.is_empty()
}

/// Answers a question over the property table. Comparison, aggregation and
/// relationship types run generated SQL (relationship results are coerced
/// to yes/no); the three distribution types select a statistical method.
pub fn answer(
    gateway: &LlmGateway,
    question: &str,
    qtype: QueryType,
    table: &SqlTable,
) -> Result<Answer, SqlError> {
    if StatMethod::for_question_type(qtype).is_some() {
        let selection = select_stat_method(gateway, question, qtype, table)?;
        let mut notes = Vec::new();
        let finding = match compute_method_finding(table, &selection) {
            Ok(f) => f,
            Err(e) => {
                let msg = e.to_string();
                notes.push(msg.clone());
                format!("method selected but not computable: {msg}")
            }
        };
        let mut a = Answer::of(AnswerPayload::Method { selection, finding });
        a.notes = notes;
        return Ok(a);
    }
    let (query, result) = generate_and_run_sql(gateway, question, table)?;
    let sql = print_sql(&query);
    let payload = match qtype {
        QueryType::Aggregation => {
            let value = result
                .rows
                .first()
                .and_then(|r| r.first())
                .cloned()
                .unwrap_or(Value::Missing);
            AnswerPayload::Scalar { value }
        }
        QueryType::Intercomparison | QueryType::Superlative => {
            let entities =
                result.rows.iter().filter_map(|r| r.first()).map(|v| v.to_string()).collect();
            AnswerPayload::EntityList { entities }
        }
        QueryType::DescriptiveRelationship | QueryType::HypotheticalScenarios => {
            AnswerPayload::Boolean { value: truthiness(&result) }
        }
        _ => unreachable!("statistics types handled above"),
    };
    let mut a = Answer::of(payload);
    a.sql = Some(sql);
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmBackend, LlmError, LlmRequest, LlmResponse, ModelConfig, ModelTier};
    use std::sync::Mutex;

    /// Replies in order, recording the prompts it saw.
    struct Scripted {
        replies: Mutex<Vec<String>>,
        prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: &[&str]) -> Self {
            Self {
                replies: Mutex::new(replies.iter().rev().map(|s| s.to_string()).collect()),
                prompts: Mutex::new(Vec::new()),
            }
        }
    }

    impl LlmBackend for Scripted {
        fn complete(
            &self,
            request: &LlmRequest,
            _model: &ModelTier,
        ) -> Result<LlmResponse, LlmError> {
            self.prompts.lock().unwrap().push(request.prompt.clone());
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

    fn gateway(replies: &[&str]) -> LlmGateway {
        LlmGateway::new(Box::new(Scripted::new(replies)), ModelConfig::default())
    }

    fn t(v: &str) -> Value {
        Value::Text(v.into())
    }
    fn d(v: f64) -> Value {
        Value::Decimal(v)
    }

    fn table() -> SqlTable {
        SqlTable::new(
            "cities",
            vec!["name".into(), "population".into(), "elevation".into()],
            vec![
                vec![t("Ames"), d(66.0), d(287.0)],
                vec![t("Bend"), d(99.0), d(1100.0)],
                vec![t("Cody"), d(10.0), d(1533.0)],
                vec![t("Dale"), d(99.0), Value::Missing],
            ],
        )
        .unwrap()
    }

    #[test]
    fn sql_generation_handles_noisy_replies() {
        let gw = gateway(&["Here you go:\n```sql\nSELECT COUNT(*) FROM cities;\n```"]);
        let (q, rs) = generate_and_run_sql(&gw, "How many cities are there?", &table()).unwrap();
        assert_eq!(print_sql(&q), "SELECT COUNT(*) FROM cities");
        assert_eq!(rs.rows, vec![vec![Value::Integer(4)]]);
    }

    #[test]
    fn one_repair_round_trip_fixes_a_bad_statement() {
        let gw = gateway(&[
            "SELECT name FROM cities WHERE",
            "SELECT name FROM cities WHERE population > 50",
        ]);
        let (_, rs) = generate_and_run_sql(&gw, "Which cities are big?", &table()).unwrap();
        assert_eq!(rs.rows.len(), 3);
    }

    #[test]
    fn second_failure_reports_both_replies() {
        let gw = gateway(&["SELECT nope FROM cities", "SELECT still_nope FROM cities"]);
        match generate_and_run_sql(&gw, "q", &table()) {
            Err(SqlError::Generation { first_reply, second_reply, .. }) => {
                assert_eq!(first_reply, "SELECT nope FROM cities");
                assert_eq!(second_reply, "SELECT still_nope FROM cities");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reply_without_sql_is_reported() {
        let gw = gateway(&["I cannot answer that."]);
        assert!(matches!(
            generate_and_run_sql(&gw, "q", &table()),
            Err(SqlError::NoQueryInReply(_))
        ));
    }

    #[test]
    fn stat_columns_resolve_textually_in_mention_order() {
        let gw = gateway(&[]);
        let sel = select_stat_method(
            &gw,
            "Is there a correlation between the elevation and the population of these cities?",
            QueryType::CorrelationAnalysis,
            &table(),
        )
        .unwrap();
        assert_eq!(sel.method, StatMethod::PearsonCorrelation);
        assert_eq!(sel.columns, vec!["elevation".to_string(), "population".to_string()]);
    }

    #[test]
    fn stat_columns_fall_back_to_the_model() {
        let gw = gateway(&["[\"population\"]"]);
        let sel = select_stat_method(
            &gw,
            "Do the inhabitant counts follow a normal distribution?",
            QueryType::DistributionCompliance,
            &table(),
        )
        .unwrap();
        assert_eq!(sel.method, StatMethod::NormalityCheck);
        assert_eq!(sel.columns, vec!["population".to_string()]);
    }

    #[test]
    fn normalization_strips_punctuation_and_case() {
        assert_eq!(normalize_for_match("The Birth-Date, please!"), "the birth date please");
        assert_eq!(normalize_for_match("  a  b  "), "a b");
    }

    #[test]
    fn aggregation_answer_is_a_scalar() {
        let gw = gateway(&["SELECT AVG(population) FROM cities"]);
        let a = answer(&gw, "What is the average population?", QueryType::Aggregation, &table())
            .unwrap();
        match a.payload {
            AnswerPayload::Scalar { value } => {
                assert_eq!(value, Value::Decimal((66.0 + 99.0 + 10.0 + 99.0) / 4.0));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(a.sql.as_deref(), Some("SELECT AVG(population) FROM cities"));
    }

    #[test]
    fn superlative_answer_lists_ties() {
        let gw = gateway(&[
            "SELECT name FROM cities WHERE population = 99.0",
        ]);
        let a = answer(&gw, "Which city has the most people?", QueryType::Superlative, &table())
            .unwrap();
        match a.payload {
            AnswerPayload::EntityList { entities } => {
                assert_eq!(entities, vec!["Bend".to_string(), "Dale".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relationship_answer_is_boolean_from_count() {
        let gw = gateway(&["SELECT COUNT(*) FROM cities WHERE name = 'Ames' AND elevation > 200"]);
        let a = answer(
            &gw,
            "Is Ames above 200 meters?",
            QueryType::DescriptiveRelationship,
            &table(),
        )
        .unwrap();
        assert_eq!(a.payload, AnswerPayload::Boolean { value: true });

        let gw = gateway(&["SELECT COUNT(*) FROM cities WHERE name = 'Ames' AND elevation > 2000"]);
        let a = answer(
            &gw,
            "Is Ames above 2000 meters?",
            QueryType::DescriptiveRelationship,
            &table(),
        )
        .unwrap();
        assert_eq!(a.payload, AnswerPayload::Boolean { value: false });
    }

    #[test]
    fn relationship_rows_coerce_to_boolean() {
        let gw = gateway(&["SELECT name FROM cities WHERE elevation > 1000"]);
        let a = answer(&gw, "q", QueryType::HypotheticalScenarios, &table()).unwrap();
        assert_eq!(a.payload, AnswerPayload::Boolean { value: true });
    }

    #[test]
    fn method_answer_carries_computed_finding() {
        let gw = gateway(&[]);
        let a = answer(
            &gw,
            "Is the variance of population different from the variance of elevation?",
            QueryType::VarianceAnalysis,
            &table(),
        )
        .unwrap();
        match &a.payload {
            AnswerPayload::Method { selection, finding } => {
                assert_eq!(selection.method, StatMethod::VarianceFTest);
                assert!(finding.starts_with("variance F-test of population and elevation"));
                assert!(finding.contains("F = "));
            }
            other => panic!("{other:?}"),
        }
    }
}
