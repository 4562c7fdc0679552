//! Composite SPARQL retrieval: semantic parse of the question, a rough
//! model-drafted query over placeholder ids, resolution of every mention to
//! a real (entityID, propertyID), exact-query synthesis, hop decomposition,
//! paged endpoint execution, and page-intro fetching. Every stage failure
//! carries the stage name so callers can report where the pipeline died.

pub mod wiki;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EntityRef, MultiEntityQuestion, QueryType};
use crate::llm::{bindings, cleanup, render_prompt, template_ids, LlmGateway, TaskClass};
use crate::pool::ordered_map;
use crate::sparql::parse_sparql;
pub use wiki::{strip_markup, url_encode, Candidate, IdKind, WikiClient, WikiError};

/// One page of endpoint results; topics reach several thousand entities.
const PAGE_SIZE: u64 = 5000;
/// Seed ids injected per VALUES block when chaining hops.
const SEEDS_PER_QUERY: usize = 500;

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct RetrievalError {
    pub stage: &'static str,
    pub message: String,
}

fn stage_err(stage: &'static str, message: impl ToString) -> RetrievalError {
    RetrievalError { stage, message: message.to_string() }
}

/// What the semantic-analysis model read out of the question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticParse {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub qtype: QueryType,
    pub hops: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryStatus {
    /// Drafted text; ids may be placeholders or hallucinated.
    Rough,
    /// Every referenced id carries a resolution; no placeholders left.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencedId {
    pub mention: String,
    pub id: String,
    pub kind: IdKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparqlQuery {
    pub text: String,
    pub status: QueryStatus,
    pub referenced_ids: Vec<ReferencedId>,
}

/// A mention resolved against the knowledge base: ranked candidates plus
/// the index of the chosen one (always in range, so the choice cannot name
/// an id that was never a candidate).
#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub mention: String,
    pub kind: IdKind,
    pub candidates: Vec<Candidate>,
    pub chosen: usize,
}

impl Resolution {
    pub fn chosen_id(&self) -> &str {
        &self.candidates[self.chosen].id
    }

    /// A copy pointing at the next-ranked candidate, when one exists.
    fn next_ranked(&self) -> Option<Resolution> {
        if self.chosen + 1 < self.candidates.len() {
            let mut r = self.clone();
            r.chosen += 1;
            Some(r)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub entities: Vec<EntityRef>,
    /// entity id → introductory paragraph; keys always appear in entities.
    pub intros: BTreeMap<String, String>,
    /// Entities whose page is missing; they stay in `entities`.
    pub missing_pages: Vec<String>,
    /// Executed queries, in execution order.
    pub provenance: Vec<SparqlQuery>,
}

#[derive(Deserialize)]
struct ParseReply {
    #[serde(default)]
    entities: Vec<String>,
    #[serde(default)]
    relations: Vec<String>,
    qtype: String,
    #[serde(default)]
    hops: Option<f64>,
}

/// Has the model read entity mentions, relation mentions, the question
/// type and the hop count out of the question; the type is written back.
pub fn analyze_question(
    gateway: &LlmGateway,
    q: &mut MultiEntityQuestion,
) -> Result<SemanticParse, RetrievalError> {
    const STAGE: &str = "analyze_question";
    if q.text.trim().is_empty() {
        return Err(stage_err(STAGE, "empty question"));
    }
    let prompt = render_prompt(template_ids::SEMANTIC_ANALYSIS, &bindings(&[("question", &q.text)]))
        .map_err(|e| stage_err(STAGE, e))?;
    let reply = gateway
        .complete_task(TaskClass::SemanticAnalysis, &prompt)
        .map_err(|e| stage_err(STAGE, e))?;
    let payload = cleanup::json_payload(&reply.text)
        .ok_or_else(|| stage_err(STAGE, format!("no JSON in reply: {}", reply.text)))?;
    let parsed: ParseReply = serde_json::from_str(&payload)
        .map_err(|e| stage_err(STAGE, format!("{e}; reply was: {}", reply.text)))?;
    if parsed.entities.iter().all(|e| e.trim().is_empty()) {
        return Err(stage_err(STAGE, format!("no entity mentions in reply: {}", reply.text)));
    }
    let qtype: QueryType = parsed
        .qtype
        .parse()
        .map_err(|e: String| stage_err(STAGE, format!("{e}; reply was: {}", reply.text)))?;
    let hops = parsed.hops.map(|h| h.max(0.0) as usize).unwrap_or(1);
    q.qtype = Some(qtype);
    q.properties = parsed.relations.clone();
    Ok(SemanticParse { entities: parsed.entities, relations: parsed.relations, qtype, hops })
}

/// Drafts a rough query over placeholder ids and validates it against the
/// subset grammar, once around the repair loop if needed.
pub fn draft_sparql(
    gateway: &LlmGateway,
    question: &str,
    parse: &SemanticParse,
) -> Result<SparqlQuery, RetrievalError> {
    const STAGE: &str = "draft_sparql";
    if parse.entities.is_empty() {
        return Err(stage_err(STAGE, "semantic parse has no entity mentions"));
    }
    let entities = parse.entities.join("; ");
    let relations =
        if parse.relations.is_empty() { "(none)".to_string() } else { parse.relations.join("; ") };
    let prompt = render_prompt(
        template_ids::SPARQL_DRAFT,
        &bindings(&[
            ("question", question),
            ("entities", &entities),
            ("relations", &relations),
        ]),
    )
    .map_err(|e| stage_err(STAGE, e))?;
    let reply = gateway
        .complete_task(TaskClass::SemanticAnalysis, &prompt)
        .map_err(|e| stage_err(STAGE, e))?;
    let draft = cleanup::query_payload(&reply.text, &["SELECT"])
        .ok_or_else(|| stage_err(STAGE, format!("no SPARQL in reply: {}", reply.text)))?;

    let first_error = match parse_sparql(&draft) {
        Ok(_) => {
            return Ok(SparqlQuery {
                text: draft,
                status: QueryStatus::Rough,
                referenced_ids: Vec::new(),
            })
        }
        Err(e) => e,
    };
    let repair = render_prompt(
        template_ids::SPARQL_REPAIR,
        &bindings(&[("query", &draft), ("error", &first_error.to_string())]),
    )
    .map_err(|e| stage_err(STAGE, e))?;
    let reply =
        gateway.complete_task(TaskClass::SemanticAnalysis, &repair).map_err(|e| stage_err(STAGE, e))?;
    let repaired = cleanup::query_payload(&reply.text, &["SELECT"])
        .ok_or_else(|| stage_err(STAGE, format!("no SPARQL in repair reply: {}", reply.text)))?;
    parse_sparql(&repaired).map_err(|e| {
        stage_err(STAGE, format!("draft invalid after repair: {e}; first error: {first_error}"))
    })?;
    Ok(SparqlQuery { text: repaired, status: QueryStatus::Rough, referenced_ids: Vec::new() })
}

/// Resolves one mention to a knowledge-base id. The top search candidate
/// wins; with two or more candidates a Capable-tier call may override
/// using the question context (an unusable override falls back to the top
/// candidate rather than failing).
pub fn resolve_ids(
    client: &WikiClient,
    gateway: &LlmGateway,
    question: &str,
    mention: &str,
    kind: IdKind,
) -> Result<Resolution, RetrievalError> {
    const STAGE: &str = "resolve_ids";
    if mention.trim().is_empty() {
        return Err(stage_err(STAGE, "empty mention"));
    }
    let candidates = client.search(mention, kind).map_err(|e| stage_err(STAGE, e))?;
    if candidates.is_empty() {
        return Err(stage_err(STAGE, format!("no candidates for mention {mention:?}")));
    }
    if candidates.len() == 1 {
        return Ok(Resolution { mention: mention.to_string(), kind, candidates, chosen: 0 });
    }
    let listing = candidates
        .iter()
        .map(|c| format!("{}: {} ({})", c.id, c.label, c.description))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = render_prompt(
        template_ids::DISAMBIGUATE,
        &bindings(&[("question", question), ("mention", mention), ("candidates", &listing)]),
    )
    .map_err(|e| stage_err(STAGE, e))?;
    let reply = gateway
        .complete_task(TaskClass::SemanticAnalysis, &prompt)
        .map_err(|e| stage_err(STAGE, e))?;
    let text = reply.text.trim();
    // First candidate whose id appears in the reply wins; ties break on
    // candidate rank. No readable id means the top candidate stands.
    let chosen = candidates
        .iter()
        .position(|c| {
            text.split(|ch: char| !ch.is_ascii_alphanumeric()).any(|tok| tok == c.id)
        })
        .unwrap_or(0);
    Ok(Resolution { mention: mention.to_string(), kind, candidates, chosen })
}

fn placeholder_target<'a>(
    local: &str,
    resolutions: &'a [Resolution],
) -> Option<&'a Resolution> {
    let (kind, number) = if let Some(n) = local.strip_prefix("ENT_") {
        (IdKind::Entity, n)
    } else if let Some(n) = local.strip_prefix("PROP_") {
        (IdKind::Property, n)
    } else {
        return None;
    };
    let index: usize = number.parse().ok()?;
    resolutions.iter().filter(|r| r.kind == kind).nth(index.checked_sub(1)?)
}

/// Replaces every placeholder id in the rough query with its resolved id
/// and re-validates. Placeholders are numbered in mention order, so ENT_2
/// takes the second entity resolution.
pub fn refine_sparql(
    rough: &SparqlQuery,
    resolutions: &[Resolution],
) -> Result<SparqlQuery, RetrievalError> {
    const STAGE: &str = "refine_sparql";
    let ast = parse_sparql(&rough.text).map_err(|e| stage_err(STAGE, e))?;
    let mut text = rough.text.clone();
    let mut orphans = Vec::new();
    for local in ast.placeholders() {
        match placeholder_target(&local, resolutions) {
            Some(r) => {
                let pattern = regex::Regex::new(&format!(r"\b{local}\b")).expect("literal token");
                text = pattern.replace_all(&text, r.chosen_id()).into_owned();
            }
            None => orphans.push(local),
        }
    }
    if !orphans.is_empty() {
        return Err(stage_err(STAGE, format!("unresolved placeholders: {}", orphans.join(", "))));
    }
    let refined = parse_sparql(&text).map_err(|e| stage_err(STAGE, e))?;
    debug_assert!(refined.placeholders().is_empty());
    Ok(SparqlQuery {
        text,
        status: QueryStatus::Exact,
        referenced_ids: resolutions
            .iter()
            .map(|r| ReferencedId {
                mention: r.mention.clone(),
                id: r.chosen_id().to_string(),
                kind: r.kind,
            })
            .collect(),
    })
}

/// One retrieval step: the anchored root query, or a follow step that
/// walks one relation out of the previous step's entity set.
#[derive(Debug, Clone, PartialEq)]
pub enum HopStep {
    Root(SparqlQuery),
    Follow { property_id: String, mention: String },
}

/// Splits a k-hop retrieval into sequential steps. The exact query covers
/// hop one; each later hop follows the next relation resolution, reusing
/// the last one when the question named fewer relations than hops (the
/// same rule hop traversal applies).
pub fn decompose_multihop(
    parse: &SemanticParse,
    exact: &SparqlQuery,
    properties: &[Resolution],
) -> Vec<HopStep> {
    let mut steps = vec![HopStep::Root(exact.clone())];
    if parse.hops <= 1 || properties.is_empty() {
        return steps;
    }
    for hop in 1..parse.hops {
        let r = properties.get(hop).unwrap_or_else(|| properties.last().expect("non-empty"));
        steps.push(HopStep::Follow {
            property_id: r.chosen_id().to_string(),
            mention: r.mention.clone(),
        });
    }
    steps
}

fn entity_id_from_uri(value: &str) -> String {
    value.rsplit(['/', ':']).next().unwrap_or(value).to_string()
}

fn rows_to_entities(rows: &[BTreeMap<String, String>], select: &[String]) -> Vec<EntityRef> {
    let entity_var = if select.iter().any(|v| v == "entity") {
        "entity".to_string()
    } else {
        select.first().cloned().unwrap_or_else(|| "entity".to_string())
    };
    let label_var = format!("{entity_var}Label");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        let Some(raw) = row.get(&entity_var) else { continue };
        let id = entity_id_from_uri(raw);
        if !seen.insert(id.clone()) {
            continue;
        }
        let label = row.get(&label_var).cloned().unwrap_or_else(|| id.clone());
        out.push(EntityRef::new(id, label));
    }
    out
}

/// Runs an exact query against the endpoint, paging with LIMIT/OFFSET
/// when the query does not cap itself. Bindings become EntityRefs via the
/// ?entity / ?entityLabel convention (falling back to the first selected
/// variable).
pub fn execute_sparql(
    client: &WikiClient,
    query: &SparqlQuery,
) -> Result<Vec<EntityRef>, RetrievalError> {
    const STAGE: &str = "execute_sparql";
    if query.status != QueryStatus::Exact {
        return Err(stage_err(STAGE, "query is still rough; refine it first"));
    }
    let ast = parse_sparql(&query.text).map_err(|e| stage_err(STAGE, e))?;
    let mut rows = Vec::new();
    if ast.limit.is_some() {
        rows = client.sparql_rows(&query.text).map_err(|e| stage_err(STAGE, e))?;
    } else {
        let mut offset = 0u64;
        loop {
            let paged = format!("{} LIMIT {PAGE_SIZE} OFFSET {offset}", query.text.trim_end());
            let page = client.sparql_rows(&paged).map_err(|e| stage_err(STAGE, e))?;
            let page_len = page.len() as u64;
            rows.extend(page);
            if page_len < PAGE_SIZE {
                break;
            }
            offset += PAGE_SIZE;
        }
    }
    Ok(rows_to_entities(&rows, &ast.select))
}

/// Walks one relation out of a seed entity set, in chunks, preserving seed
/// order and deduplicating.
pub fn follow_hop(
    client: &WikiClient,
    seeds: &[EntityRef],
    property_id: &str,
) -> Result<(Vec<EntityRef>, Vec<SparqlQuery>), RetrievalError> {
    let mut out: Vec<EntityRef> = Vec::new();
    let mut seen = HashSet::new();
    let mut executed = Vec::new();
    for chunk in seeds.chunks(SEEDS_PER_QUERY) {
        let values =
            chunk.iter().map(|e| format!("wd:{}", e.id)).collect::<Vec<_>>().join(" ");
        let text = format!(
            "SELECT DISTINCT ?entity ?entityLabel WHERE {{ VALUES ?seed {{ {values} }} \
             ?seed wdt:{property_id} ?entity . ?entity rdfs:label ?entityLabel . }}"
        );
        let query = SparqlQuery {
            text,
            status: QueryStatus::Exact,
            referenced_ids: vec![ReferencedId {
                mention: String::new(),
                id: property_id.to_string(),
                kind: IdKind::Property,
            }],
        };
        for e in execute_sparql(client, &query)? {
            if seen.insert(e.id.clone()) {
                out.push(e);
            }
        }
        executed.push(query);
    }
    Ok((out, executed))
}

fn run_steps(
    client: &WikiClient,
    steps: &[HopStep],
    provenance: &mut Vec<SparqlQuery>,
) -> Result<Vec<EntityRef>, RetrievalError> {
    let mut current = Vec::new();
    for step in steps {
        match step {
            HopStep::Root(q) => {
                current = execute_sparql(client, q)?;
                provenance.push(q.clone());
            }
            HopStep::Follow { property_id, .. } => {
                let (next, executed) = follow_hop(client, &current, property_id)?;
                provenance.extend(executed);
                current = next;
            }
        }
    }
    Ok(current)
}

/// Fetches the introductory paragraph for one entity, keyed by its label.
pub fn fetch_page_intro(
    client: &WikiClient,
    entity: &EntityRef,
) -> Result<Option<String>, RetrievalError> {
    client.page_intro(&entity.label).map_err(|e| stage_err("fetch_page_intro", e))
}

pub struct Retriever<'a> {
    pub client: &'a WikiClient,
    pub gateway: &'a LlmGateway,
    pub workers: usize,
}

impl<'a> Retriever<'a> {
    pub fn new(client: &'a WikiClient, gateway: &'a LlmGateway) -> Self {
        Self { client, gateway, workers: 8 }
    }

    /// The whole retrieval stage: analyze, draft, resolve, refine,
    /// decompose, execute, fetch intros. When the chosen property yields
    /// zero entities, the next-ranked property candidate gets one retry
    /// (relation mentions are the usual mis-parse).
    pub fn retrieve(
        &self,
        q: &mut MultiEntityQuestion,
    ) -> Result<RetrievalResult, RetrievalError> {
        let parse = analyze_question(self.gateway, q)?;
        let rough = draft_sparql(self.gateway, &q.text, &parse)?;

        let mut resolutions = Vec::new();
        for mention in &parse.entities {
            resolutions.push(resolve_ids(self.client, self.gateway, &q.text, mention, IdKind::Entity)?);
        }
        for mention in &parse.relations {
            resolutions
                .push(resolve_ids(self.client, self.gateway, &q.text, mention, IdKind::Property)?);
        }

        let mut provenance = Vec::new();
        let exact = refine_sparql(&rough, &resolutions)?;
        let properties: Vec<Resolution> =
            resolutions.iter().filter(|r| r.kind == IdKind::Property).cloned().collect();
        let steps = decompose_multihop(&parse, &exact, &properties);
        let mut entities = run_steps(self.client, &steps, &mut provenance)?;

        if entities.is_empty() {
            if let Some(retry) = self.retry_with_next_property(&rough, &resolutions, &parse)? {
                let (retry_entities, mut retry_provenance) = retry;
                provenance.append(&mut retry_provenance);
                entities = retry_entities;
            }
        }

        q.entities = entities.clone();
        let fetched = ordered_map(entities.clone(), self.workers, |e| {
            fetch_page_intro(self.client, e).map(|intro| (e.id.clone(), intro))
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
        Ok(RetrievalResult { entities, intros, missing_pages, provenance })
    }

    /// Swaps the first property resolution that has a next-ranked
    /// candidate and reruns the chain once.
    fn retry_with_next_property(
        &self,
        rough: &SparqlQuery,
        resolutions: &[Resolution],
        parse: &SemanticParse,
    ) -> Result<Option<(Vec<EntityRef>, Vec<SparqlQuery>)>, RetrievalError> {
        let Some(at) = resolutions
            .iter()
            .position(|r| r.kind == IdKind::Property && r.next_ranked().is_some())
        else {
            return Ok(None);
        };
        let mut retried: Vec<Resolution> = resolutions.to_vec();
        retried[at] = retried[at].next_ranked().expect("checked above");
        let exact = refine_sparql(rough, &retried)?;
        let properties: Vec<Resolution> =
            retried.iter().filter(|r| r.kind == IdKind::Property).cloned().collect();
        let steps = decompose_multihop(parse, &exact, &properties);
        let mut provenance = Vec::new();
        let entities = run_steps(self.client, &steps, &mut provenance)?;
        Ok(Some((entities, provenance)))
    }
}
