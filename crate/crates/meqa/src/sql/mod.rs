//! Deterministic SQL subset over a single in-memory table.
//!
//! Evaluation contract (the engine and the brute-force test oracle are
//! written against this text independently):
//!
//! * Values are text, 64-bit integers, 64-bit decimals, or Missing. Dates
//!   live as ISO-8601 text, which orders chronologically.
//! * Predicates use three-valued logic. Any comparison or LIKE over a
//!   Missing operand is Unknown; `IS NULL` / `IS NOT NULL` are the only
//!   predicates that see Missing directly. WHERE and HAVING keep rows whose
//!   predicate is True. `x IN (...)` is True on a match, else Unknown if
//!   any list element compared Unknown, else False. Evaluation is total:
//!   AND/OR never short-circuit, so a type error surfaces no matter what
//!   the other operand evaluated to.
//! * Comparisons: integer/decimal pairs compare numerically (integers
//!   promote). Text pairs compare bytewise. Text against a number first
//!   parses the text (trimmed) as a number; unparsable text is a type
//!   error, not Unknown. Equality between values follows the same rules.
//! * LIKE is case-insensitive; `%` matches any run, `_` one character; the
//!   pattern is otherwise literal. Non-text values are a type error.
//! * Aggregates skip Missing inputs. COUNT(*) counts rows, COUNT(col)
//!   non-Missing values, COUNT(DISTINCT col) distinct non-Missing values.
//!   SUM/AVG need numeric inputs; SUM keeps integers exact (overflow is an
//!   error) and yields a decimal when any input is decimal; AVG is always
//!   decimal. MIN/MAX use the comparison order and keep the winning value.
//!   Over zero retained values SUM/AVG/MIN/MAX yield Missing, COUNT 0.
//! * GROUP BY groups by structural equality of the key (Missing keys form
//!   one group); groups emerge in first-appearance order. Aggregates with
//!   no GROUP BY form a single group even over zero rows. Select items
//!   under aggregation must be group-by columns or aggregates.
//! * DISTINCT dedups projected rows by structural equality, keeping first
//!   occurrences.
//! * ORDER BY sorts stably; Missing sorts after every value both ASC and
//!   DESC. Without GROUP BY a key may be any table column (evaluated
//!   before projection), falling back to an output alias; with DISTINCT or
//!   GROUP BY keys must resolve to output columns (alias, column name, or
//!   the aggregate's printed form). When a key column holds text alongside
//!   numeric values, every text key must parse as a number up front,
//!   otherwise the query is a type error; this keeps the error independent
//!   of which comparisons a sort happens to perform.
//! * LIMIT truncates after sorting.
//! * Column resolution is case-insensitive; an unknown column error lists
//!   the available names.

pub mod answer;
pub mod ast;
pub mod engine;
mod parser;

pub use answer::{
    compute_method_finding, normalize_for_match, Answer, AnswerPayload, MethodSelection,
    StatMethod,
};
pub use ast::{print_expr, print_sql, AggArg, AggFunc, CompareOp, Expr, OrderKey, Query, SelectItem};
pub use engine::{execute, ResultSet, SqlTable};
pub use parser::parse_sql;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One cell. Missing is a first-class sentinel, not an empty string: the
/// extraction stage records fields a page does not state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Text(String),
    Integer(i64),
    Decimal(f64),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Numeric view used by the statistics path; text does not coerce here.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Integer(v) => Some(*v as f64),
            Value::Decimal(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Text(s) => f.write_str(s),
            Value::Integer(v) => write!(f, "{v}"),
            // {:?} prints the shortest representation that parses back to
            // the same f64, with a decimal point kept.
            Value::Decimal(v) => write!(f, "{v:?}"),
            Value::Missing => f.write_str("NULL"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SqlError {
    #[error("lex error at byte {pos}: {message}")]
    Lex { pos: usize, message: String },
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("unsupported construct: {what}")]
    Unsupported { what: String },
    #[error("query names table {queried}, data table is {actual}")]
    WrongTable { queried: String, actual: String },
    #[error("unknown column {name}; available: {}", available.join(", "))]
    UnknownColumn { name: String, available: Vec<String> },
    #[error("type error: {0}")]
    Type(String),
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("model reply held no SQL: {0}")]
    NoQueryInReply(String),
    #[error(
        "sql generation failed after one repair; first reply {first_reply:?} ({first_error}), \
         second reply {second_reply:?} ({second_error})"
    )]
    Generation {
        first_reply: String,
        first_error: String,
        second_reply: String,
        second_error: String,
    },
    #[error("model call failed: {0}")]
    Llm(#[from] crate::llm::LlmError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_display_forms() {
        assert_eq!(Value::Text("a b".into()).to_string(), "a b");
        assert_eq!(Value::Integer(-7).to_string(), "-7");
        assert_eq!(Value::Decimal(2.5).to_string(), "2.5");
        assert_eq!(Value::Decimal(3.0).to_string(), "3.0");
        assert_eq!(Value::Missing.to_string(), "NULL");
    }

    #[test]
    fn value_serde_is_tagged() {
        let v = serde_json::to_string(&Value::Integer(4)).unwrap();
        assert_eq!(v, "{\"kind\":\"integer\",\"value\":4}");
        let back: Value = serde_json::from_str(&v).unwrap();
        assert_eq!(back, Value::Integer(4));
        assert_eq!(serde_json::to_string(&Value::Missing).unwrap(), "{\"kind\":\"missing\"}");
    }
}
