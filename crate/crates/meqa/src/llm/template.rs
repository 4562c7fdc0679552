//! Named prompt templates. Placeholders use single-brace `{name}` syntax, so
//! template bodies must not contain literal braces; JSON reply shapes are
//! described in words instead of by example.

use std::collections::BTreeMap;

use super::LlmError;

/// Shared suffix for every machine-parsed template. The closing sentence is
/// what keeps replies free of the chatter that breaks downstream parsers;
/// `{format}` names the expected payload (JSON, SQL, SPARQL, ...).
pub const OUTPUT_CONTROL_SUFFIX: &str = "Review your output to ensure it meets all the above \
criteria. Your goal is to produce a clear, accurate, and well-structured output. Just output \
the {format}, no other word or symbol.";

/// Stable template identifiers. Call sites use these constants, never raw
/// strings, so a typo fails at compile time.
pub mod template_ids {
    pub const SEMANTIC_ANALYSIS: &str = "semantic_analysis";
    pub const SPARQL_DRAFT: &str = "sparql_draft";
    pub const SPARQL_REPAIR: &str = "sparql_repair";
    pub const DISAMBIGUATE: &str = "disambiguate";
    pub const SCHEMA: &str = "schema";
    pub const SCHEMA_CRITIQUE: &str = "schema_critique";
    pub const EXTRACT: &str = "extract";
    pub const SQL: &str = "sql";
    pub const SQL_REPAIR: &str = "sql_repair";
    pub const STAT_COLUMNS: &str = "stat_columns";
    pub const REFINE_QUESTION: &str = "refine_question";

    pub const ALL: [&str; 11] = [
        SEMANTIC_ANALYSIS,
        SPARQL_DRAFT,
        SPARQL_REPAIR,
        DISAMBIGUATE,
        SCHEMA,
        SCHEMA_CRITIQUE,
        EXTRACT,
        SQL,
        SQL_REPAIR,
        STAT_COLUMNS,
        REFINE_QUESTION,
    ];
}

struct Template {
    id: &'static str,
    body: &'static str,
    /// Payload word substituted into the output-control suffix; None for
    /// free-text replies, which carry no suffix.
    format: Option<&'static str>,
}

const TEMPLATES: &[Template] = &[
    Template {
        id: template_ids::SEMANTIC_ANALYSIS,
        body: "You analyze one question asked over a wiki-style knowledge base.\n\
Question: {question}\n\
Identify the entity mentions the question is anchored on, the relation mentions needed to \
collect the relevant entity set, the question type, and how many relation hops the retrieval \
needs. The question type is one of Intercomparison, Superlative, Aggregation, \
DistributionCompliance, CorrelationAnalysis, VarianceAnalysis, DescriptiveRelationship or \
HypotheticalScenarios.\n\
Respond with a JSON object holding the keys entities, relations, qtype and hops, where \
entities and relations are lists of strings, qtype is the question type and hops is an \
integer.",
        format: Some("JSON"),
    },
    Template {
        id: template_ids::SPARQL_DRAFT,
        body: "Draft a SPARQL query that retrieves the entity set needed to answer the \
question below.\n\
Question: {question}\n\
Entity mentions: {entities}\n\
Relation mentions: {relations}\n\
Select the variables ?entity and ?entityLabel. The real knowledge-base ids are not known \
yet, so write the placeholder ids ENT_1, ENT_2 and so on for entities and PROP_1, PROP_2 \
and so on for relations, in mention order.",
        format: Some("SPARQL"),
    },
    Template {
        id: template_ids::SPARQL_REPAIR,
        body: "The SPARQL query below was rejected.\n\
Query: {query}\n\
Problem: {error}\n\
Rewrite the query so it is accepted, keeping the same retrieval intent.",
        format: Some("SPARQL"),
    },
    Template {
        id: template_ids::DISAMBIGUATE,
        body: "Question: {question}\n\
The mention \"{mention}\" matched more than one knowledge-base candidate:\n\
{candidates}\n\
Pick the candidate id the question is actually about.",
        format: Some("id"),
    },
    Template {
        id: template_ids::SCHEMA,
        body: "Create a table schema that comprehensively captures information about \
{subject}. Ensure the schema is detailed and structured, avoiding over-simplification, \
missing elements, and redundancy. This schema should be structured so each row represents \
a unique instance, with each column capturing a distinct aspect of property details. \
Ensure there is no overlap in content between columns to avoid repetition.\n\
Respond with a JSON object holding the keys table and columns, where table is the table \
name, columns is a list of objects with the keys name, kind and description, and kind is \
one of text, integer, decimal or date. The first column identifies the instance.",
        format: Some("JSON"),
    },
    Template {
        id: template_ids::SCHEMA_CRITIQUE,
        body: "Critically review the table schema below, which captures information about \
{subject}. Correct over-simplification by making overly generic columns specific, correct \
missing elements by adding essential columns, and correct redundancy by removing columns \
that overlap or repeat content.\n\
Schema: {schema}\n\
Respond with the full revised schema as a JSON object holding the keys table and columns, \
where columns is a list of objects with the keys name, kind and description.",
        format: Some("JSON"),
    },
    Template {
        id: template_ids::EXTRACT,
        body: "Extract the requested fields about {entity} from the passage below.\n\
Passage: {passage}\n\
Fields: {fields}\n\
Respond with a JSON object mapping every requested field name to the value stated in the \
passage, or to null when the passage does not state it. Copy values as written, without \
reformatting.",
        format: Some("JSON"),
    },
    Template {
        id: template_ids::SQL,
        body: "Write one SQL SELECT statement that answers the question from the table \
described below.\n\
Question: {question}\n\
Table name: {table}\n\
Columns: {columns}\n\
Sample rows: {samples}\n\
Use only plain SELECT features: WHERE, GROUP BY, HAVING, ORDER BY, LIMIT, DISTINCT and \
the aggregates COUNT, SUM, AVG, MIN and MAX. No joins, no subqueries. Put column names \
that contain spaces in double quotes.",
        format: Some("SQL"),
    },
    Template {
        id: template_ids::SQL_REPAIR,
        body: "The SQL statement below was rejected.\n\
Statement: {sql}\n\
Problem: {error}\n\
Question: {question}\n\
Table name: {table}\n\
Columns: {columns}\n\
Rewrite it as one valid SELECT statement using only plain SELECT features: WHERE, GROUP \
BY, HAVING, ORDER BY, LIMIT, DISTINCT and the aggregates COUNT, SUM, AVG, MIN and MAX.",
        format: Some("SQL"),
    },
    Template {
        id: template_ids::STAT_COLUMNS,
        body: "Question: {question}\n\
Table columns: {columns}\n\
Name the table columns whose values the question asks to analyze, in the order the \
question mentions them.\n\
Respond with a JSON list of column names.",
        format: Some("JSON"),
    },
    Template {
        id: template_ids::REFINE_QUESTION,
        body: "Rewrite the question below to improve its clarity, its relevance to the \
named subject matter, and its neutrality. Keep every entity name and every property name \
exactly as written.\n\
Question: {question}",
        format: Some("question"),
    },
];

fn lookup(id: &str) -> Result<&'static Template, LlmError> {
    TEMPLATES
        .iter()
        .find(|t| t.id == id)
        .ok_or_else(|| LlmError::UnknownTemplate(id.to_string()))
}

/// Full template text (body plus output-control suffix where one applies).
pub fn template_text(id: &str) -> Result<String, LlmError> {
    let t = lookup(id)?;
    Ok(match t.format {
        Some(format) => {
            let suffix = OUTPUT_CONTROL_SUFFIX.replace("{format}", format);
            format!("{}\n{}", t.body, suffix)
        }
        None => t.body.to_string(),
    })
}

/// Renders template `id` with `bindings`. Every placeholder must be bound;
/// an unbound one is reported by name. Unused bindings are fine.
pub fn render_prompt(id: &str, bindings: &BTreeMap<String, String>) -> Result<String, LlmError> {
    let text = template_text(id)?;
    substitute(id, &text, bindings)
}

pub(crate) fn substitute(
    id: &str,
    text: &str,
    bindings: &BTreeMap<String, String>,
) -> Result<String, LlmError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.char_indices().peekable();
    while let Some((start, ch)) = chars.next() {
        if ch != '{' {
            out.push(ch);
            continue;
        }
        let mut end = None;
        for (i, c) in chars.by_ref() {
            if c == '}' {
                end = Some(i);
                break;
            }
        }
        let end = end.ok_or_else(|| LlmError::Template {
            template: id.to_string(),
            placeholder: text[start..].chars().take(20).collect(),
        })?;
        let name = &text[start + 1..end];
        match bindings.get(name) {
            Some(value) => out.push_str(value),
            None => {
                return Err(LlmError::Template {
                    template: id.to_string(),
                    placeholder: name.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Convenience for call sites: builds the binding map from pairs.
pub fn bindings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}
