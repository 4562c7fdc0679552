//! In-process stand-in for the three wiki endpoints (SPARQL, entity
//! search, page extracts). Requests are routed by URL and body shape, not
//! by host, so the client's default endpoints work unchanged. SPARQL is
//! parsed with the same grammar the pipeline validates drafts against and
//! evaluated over the fixture world's edge indexes; responses mimic the
//! live services' JSON closely enough for the real client code to parse.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde_json::json;

use crate::sparql::{parse_sparql, Pattern, SparqlAst, Term};
use crate::transport::{HttpTransport, TransportError};

use super::world::FixtureWorld;

pub struct FixtureTransport {
    world: Arc<FixtureWorld>,
}

impl FixtureTransport {
    pub fn new(world: Arc<FixtureWorld>) -> Self {
        Self { world }
    }
}

impl HttpTransport for FixtureTransport {
    fn fetch(&self, url: &str, body: &str) -> Result<String, TransportError> {
        if let Some(encoded) = body.strip_prefix("query=") {
            let encoded = encoded.split("&format=").next().unwrap_or(encoded);
            return self.serve_sparql(&percent_decode(encoded));
        }
        if url.contains("action=wbsearchentities") {
            return self.serve_search(url);
        }
        if url.contains("prop=extracts") {
            return self.serve_page(url);
        }
        Err(TransportError::FixtureMiss { url: url.to_string() })
    }
}

/// Value bound to a variable while evaluating: an entity id or a label.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Bound {
    Id(String),
    Text(String),
}

type Solution = BTreeMap<String, Bound>;

impl FixtureTransport {
    fn serve_sparql(&self, query: &str) -> Result<String, TransportError> {
        let miss = |detail: &str| TransportError::FixtureMiss {
            url: format!("sparql ({detail}): {query}"),
        };
        let ast = parse_sparql(query).map_err(|e| miss(&e.to_string()))?;
        let rows = self.evaluate(&ast).ok_or_else(|| miss("unsupported shape"))?;

        let bindings: Vec<serde_json::Value> = rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (var, bound) in row {
                    let cell = match bound {
                        Bound::Id(id) => json!({
                            "type": "uri",
                            "value": format!("http://www.wikidata.org/entity/{id}"),
                        }),
                        Bound::Text(text) => json!({ "type": "literal", "value": text }),
                    };
                    obj.insert(var.clone(), cell);
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        Ok(json!({
            "head": { "vars": ast.select },
            "results": { "bindings": bindings },
        })
        .to_string())
    }

    /// Evaluates the pattern list left to right, like the live endpoint
    /// would join triples. None means the query uses a shape the fixture
    /// does not model (for example a triple with both endpoints unbound
    /// joined before anything binds them).
    fn evaluate(&self, ast: &SparqlAst) -> Option<Vec<Solution>> {
        let mut solutions: Vec<Solution> = vec![Solution::new()];
        for pattern in &ast.patterns {
            match pattern {
                Pattern::Filter(_) => continue,
                Pattern::Values { var, terms } => {
                    let ids: Vec<String> =
                        terms.iter().map(term_as_id).collect::<Option<Vec<_>>>()?;
                    let mut next = Vec::new();
                    for sol in &solutions {
                        match sol.get(var) {
                            Some(Bound::Id(have)) => {
                                if ids.iter().any(|id| id == have) {
                                    next.push(sol.clone());
                                }
                            }
                            Some(Bound::Text(_)) => {}
                            None => {
                                for id in &ids {
                                    let mut s = sol.clone();
                                    s.insert(var.clone(), Bound::Id(id.clone()));
                                    next.push(s);
                                }
                            }
                        }
                    }
                    solutions = next;
                }
                Pattern::Triple { subject, predicate, object } => {
                    solutions = self.join_triple(solutions, subject, predicate, object)?;
                }
            }
        }

        let mut rows: Vec<Solution> = solutions
            .into_iter()
            .map(|sol| {
                ast.select
                    .iter()
                    .filter_map(|var| sol.get(var).map(|b| (var.clone(), b.clone())))
                    .collect()
            })
            .collect();
        if ast.distinct {
            let mut seen = HashSet::new();
            rows.retain(|row| seen.insert(format!("{row:?}")));
        }
        let offset = ast.offset.unwrap_or(0) as usize;
        let rows = if offset >= rows.len() { Vec::new() } else { rows.split_off(offset) };
        let mut rows = rows;
        if let Some(limit) = ast.limit {
            rows.truncate(limit as usize);
        }
        Some(rows)
    }

    fn join_triple(
        &self,
        solutions: Vec<Solution>,
        subject: &Term,
        predicate: &Term,
        object: &Term,
    ) -> Option<Vec<Solution>> {
        let Term::Prefixed { prefix, local } = predicate else { return None };
        let mut next = Vec::new();
        if prefix == "rdfs" && local == "label" {
            for sol in &solutions {
                let Some(subject_id) = resolve_id(subject, sol) else { continue };
                let Some(label) = self.world.label(&subject_id) else { continue };
                match object {
                    Term::Var(v) => match sol.get(v) {
                        None => {
                            let mut s = sol.clone();
                            s.insert(v.clone(), Bound::Text(label.to_string()));
                            next.push(s);
                        }
                        Some(Bound::Text(have)) if have == label => next.push(sol.clone()),
                        Some(_) => {}
                    },
                    Term::Literal { value, .. } => {
                        if value == label {
                            next.push(sol.clone());
                        }
                    }
                    _ => return None,
                }
            }
            return Some(next);
        }
        if prefix != "wdt" {
            return None;
        }
        let pid = local.as_str();
        for sol in &solutions {
            let subject_id = resolve_id(subject, sol);
            let object_id = resolve_id(object, sol);
            match (subject_id, object_id) {
                (Some(s), Some(o)) => {
                    if self.world.edge_targets(&s, pid).iter().any(|t| *t == o) {
                        next.push(sol.clone());
                    }
                }
                (Some(s), None) => {
                    let Term::Var(v) = object else { return None };
                    for target in self.world.edge_targets(&s, pid) {
                        let mut sol = sol.clone();
                        sol.insert(v.clone(), Bound::Id(target.clone()));
                        next.push(sol);
                    }
                }
                (None, Some(o)) => {
                    let Term::Var(v) = subject else { return None };
                    for source in self.world.edge_sources(pid, &o) {
                        let mut sol = sol.clone();
                        sol.insert(v.clone(), Bound::Id(source.clone()));
                        next.push(sol);
                    }
                }
                (None, None) => return None,
            }
        }
        Some(next)
    }

    fn serve_search(&self, url: &str) -> Result<String, TransportError> {
        let kind = query_param(url, "type").unwrap_or_default();
        let term = query_param(url, "search").unwrap_or_default();
        let hits: Vec<serde_json::Value> = self
            .world
            .search(&kind, &term)
            .iter()
            .map(|h| {
                json!({ "id": h.id, "label": h.label, "description": h.description })
            })
            .collect();
        Ok(json!({ "search": hits }).to_string())
    }

    fn serve_page(&self, url: &str) -> Result<String, TransportError> {
        let title = query_param(url, "titles").unwrap_or_default();
        let body = match self.world.page(&title) {
            Some(extract) => json!({
                "query": { "pages": { "1": {
                    "pageid": 1,
                    "title": title,
                    "extract": extract,
                } } }
            }),
            None => json!({
                "query": { "pages": { "-1": { "title": title, "missing": "" } } }
            }),
        };
        Ok(body.to_string())
    }
}

/// Entity id a term denotes under a solution, if it denotes one.
fn resolve_id(term: &Term, sol: &Solution) -> Option<String> {
    match term {
        Term::Var(v) => match sol.get(v) {
            Some(Bound::Id(id)) => Some(id.clone()),
            _ => None,
        },
        _ => term_as_id(term),
    }
}

fn term_as_id(term: &Term) -> Option<String> {
    match term {
        Term::Prefixed { prefix, local } if prefix == "wd" => Some(local.clone()),
        Term::Iri(iri) => {
            iri.rsplit(['/', ':']).next().map(str::to_string)
        }
        _ => None,
    }
}

/// Value of one query-string parameter, percent-decoded.
fn query_param(url: &str, key: &str) -> Option<String> {
    let query = url.split_once('?').map(|(_, q)| q).unwrap_or(url);
    for pair in query.split('&') {
        let (k, v) = pair.split_once('=')?;
        if k == key {
            return Some(percent_decode(v));
        }
    }
    None
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if let (Some(hi), Some(lo)) = (
                bytes.get(i + 1).and_then(|b| (*b as char).to_digit(16)),
                bytes.get(i + 2).and_then(|b| (*b as char).to_digit(16)),
            ) {
                out.push((hi * 16 + lo) as u8);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8(out).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned())
}

#[cfg(test)]
mod tests {
    use super::super::world::{member_id, member_label, topic_spec, TopicKey};
    use super::*;
    use crate::retrieval::{IdKind, WikiClient};

    fn client() -> WikiClient {
        let world = Arc::new(FixtureWorld::build());
        WikiClient::new(Box::new(FixtureTransport::new(world)))
    }

    #[test]
    fn membership_query_pages_through_all_cities() {
        let c = client();
        let spec = topic_spec(TopicKey::Cities);
        let q = format!(
            "SELECT ?entity ?entityLabel WHERE {{ ?entity wdt:{} wd:{} . \
             ?entity rdfs:label ?entityLabel . }}",
            spec.membership_pid, spec.root_id
        );
        let first = c.sparql_rows(&format!("{q} LIMIT 5000 OFFSET 0")).unwrap();
        assert_eq!(first.len(), 5000);
        let second = c.sparql_rows(&format!("{q} LIMIT 5000 OFFSET 5000")).unwrap();
        assert_eq!(second.len(), 2040);
        assert!(first[0]["entity"].ends_with("/Q20000"));
        assert_eq!(first[0]["entityLabel"], member_label(TopicKey::Cities, 0));
    }

    #[test]
    fn values_query_returns_the_pair_in_order() {
        let c = client();
        let a = member_id(TopicKey::Presidents, 3);
        let b = member_id(TopicKey::Presidents, 40);
        let q = format!(
            "SELECT ?entity ?entityLabel WHERE {{ VALUES ?entity {{ wd:{a} wd:{b} }} \
             ?entity rdfs:label ?entityLabel . }}"
        );
        let rows = c.sparql_rows(&q).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0]["entity"].ends_with(&format!("/{a}")));
        assert_eq!(rows[1]["entityLabel"], member_label(TopicKey::Presidents, 40));
    }

    #[test]
    fn hop_query_follows_vice_president_edges() {
        let c = client();
        let seed = member_id(TopicKey::Presidents, 0);
        let q = format!(
            "SELECT ?entity ?entityLabel WHERE {{ VALUES ?seed {{ wd:{seed} }} \
             ?seed wdt:P211 ?entity . ?entity rdfs:label ?entityLabel . }}"
        );
        let rows = c.sparql_rows(&q).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["entityLabel"], member_label(TopicKey::Presidents, 7));
    }

    #[test]
    fn distinct_collapses_duplicate_values() {
        let c = client();
        let id = member_id(TopicKey::Elements, 5);
        let q = format!(
            "SELECT DISTINCT ?entity WHERE {{ VALUES ?entity {{ wd:{id} wd:{id} wd:{id} }} }}"
        );
        assert_eq!(c.sparql_rows(&q).unwrap().len(), 1);
    }

    #[test]
    fn reversed_hop_finds_sources_for_a_target() {
        let c = client();
        // Which editions were hosted by city 0? Editions 0 and 18 share it.
        let host = member_id(TopicKey::Cities, 0);
        let q = format!("SELECT ?entity WHERE {{ ?entity wdt:P214 wd:{host} . }}");
        let rows = c.sparql_rows(&q).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn search_hits_come_back_in_registry_order() {
        let c = client();
        let hits = c.search("Presidents of the United States", IdKind::Entity).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].id, "Q901");
        assert_eq!(hits[1].id, "Q103");
        assert!(c.search("no such thing at all", IdKind::Entity).unwrap().is_empty());
        let props = c.search("presidents membership", IdKind::Property).unwrap();
        assert_eq!(props[0].id, "P103");
    }

    #[test]
    fn page_intros_come_back_stripped() {
        let c = client();
        let title = member_label(TopicKey::Cities, 0);
        let text = c.page_intro(&title).unwrap().unwrap();
        assert!(text.starts_with(&format!("{title} is a city")));
        assert!(text.contains("Its population is "));
        assert!(!text.contains("'''"), "markup must be stripped: {text}");
        assert!(!text.contains("{{"));
        assert_eq!(c.page_intro("Unwritten Page").unwrap(), None);
    }

    #[test]
    fn unrouted_requests_miss_loudly() {
        let world = Arc::new(FixtureWorld::build());
        let t = FixtureTransport::new(world);
        let err = t.fetch("https://example.org/other", "").unwrap_err();
        assert!(matches!(err, TransportError::FixtureMiss { .. }));
    }

    #[test]
    fn percent_decoding_inverts_the_client_encoder() {
        for s in ["Edmund Ashcombe", "a&b=c", "Ørsted", "plain"] {
            assert_eq!(percent_decode(&crate::retrieval::url_encode(s)), s);
        }
    }
}
