//! End-to-end question answering: retrieval, property-table construction,
//! and the answering stage, glued in pipeline order. Each stage error keeps
//! its stage tag so operators see where a run died.

use thiserror::Error;

use crate::graph::MultiEntityQuestion;
use crate::llm::LlmGateway;
use crate::retrieval::{RetrievalError, RetrievalResult, Retriever, WikiClient};
use crate::sql::answer::answer;
use crate::sql::{Answer, SqlError};
use crate::table::{build_table_with, PropertyTable, SynonymDict, TableError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("table: {0}")]
    Table(#[from] TableError),
    #[error("answer: {0}")]
    Answer(#[from] SqlError),
    #[error("question type missing after analysis")]
    Unclassified,
}

impl PipelineError {
    /// Stage tag for operator-facing failure reports.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Retrieval(_) => "retrieval",
            PipelineError::Table(_) => "table",
            PipelineError::Answer(_) => "answer",
            PipelineError::Unclassified => "analysis",
        }
    }
}

/// Everything one run produced, kept together so callers can emit the
/// intermediate artifacts (table, provenance) alongside the answer.
pub struct PipelineRun {
    pub question: MultiEntityQuestion,
    pub retrieval: RetrievalResult,
    pub table: PropertyTable,
    pub answer: Answer,
}

/// Runs one question through every stage. The question comes in by value
/// because retrieval fills its analyzed fields; the run returns it enriched.
pub fn run_question(
    client: &WikiClient,
    gateway: &LlmGateway,
    question: MultiEntityQuestion,
    workers: usize,
    dict: &SynonymDict,
) -> Result<PipelineRun, PipelineError> {
    let mut q = question;
    let retriever = Retriever { client, gateway, workers };
    let retrieval = retriever.retrieve(&mut q)?;
    let table = build_table_with(gateway, &q, &retrieval, workers, dict)?;
    let qtype = q.qtype.ok_or(PipelineError::Unclassified)?;
    let answer = answer(gateway, &q.text, qtype, &table.to_sql_table()?)?;
    Ok(PipelineRun { question: q, retrieval, table, answer })
}
