//! Thin clients for the three web interfaces the pipeline talks to: the
//! SPARQL endpoint, the knowledge-base search API, and the encyclopedia
//! page API. Everything goes through one HttpTransport, so a cached or
//! fixture transport makes the whole layer offline and deterministic.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

use crate::transport::{HttpTransport, TransportError};

#[derive(Debug, Error)]
pub enum WikiError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("unexpected response shape from {url}: {message}")]
    Format { url: String, message: String },
}

/// What a mention resolves against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IdKind {
    Entity,
    Property,
}

impl IdKind {
    pub fn api_word(self) -> &'static str {
        match self {
            IdKind::Entity => "item",
            IdKind::Property => "property",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Candidate {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub description: String,
}

/// Percent-encodes a query-string value (RFC 3986 unreserved set kept).
pub fn url_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

pub struct WikiClient {
    transport: Box<dyn HttpTransport>,
    pub sparql_endpoint: String,
    pub search_endpoint: String,
    pub page_endpoint: String,
}

impl WikiClient {
    pub fn new(transport: Box<dyn HttpTransport>) -> Self {
        Self {
            transport,
            sparql_endpoint: "https://query.wikidata.org/sparql".to_string(),
            search_endpoint: "https://www.wikidata.org/w/api.php".to_string(),
            page_endpoint: "https://en.wikipedia.org/w/api.php".to_string(),
        }
    }

    fn get_json(&self, url: &str) -> Result<serde_json::Value, WikiError> {
        let body = self.transport.fetch(url, "")?;
        serde_json::from_str(&body)
            .map_err(|e| WikiError::Format { url: url.to_string(), message: e.to_string() })
    }

    /// Runs one SPARQL query (form POST) and returns the bindings as
    /// var → value rows, in response order.
    pub fn sparql_rows(&self, query: &str) -> Result<Vec<BTreeMap<String, String>>, WikiError> {
        let body = format!("query={}&format=json", url_encode(query));
        let text = self.transport.fetch(&self.sparql_endpoint, &body)?;
        let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            WikiError::Format { url: self.sparql_endpoint.clone(), message: e.to_string() }
        })?;
        let bindings = json
            .get("results")
            .and_then(|r| r.get("bindings"))
            .and_then(|b| b.as_array())
            .ok_or_else(|| WikiError::Format {
                url: self.sparql_endpoint.clone(),
                message: "missing results.bindings".to_string(),
            })?;
        let mut rows = Vec::with_capacity(bindings.len());
        for b in bindings {
            let obj = b.as_object().ok_or_else(|| WikiError::Format {
                url: self.sparql_endpoint.clone(),
                message: "binding is not an object".to_string(),
            })?;
            let mut row = BTreeMap::new();
            for (var, cell) in obj {
                if let Some(v) = cell.get("value").and_then(|v| v.as_str()) {
                    row.insert(var.clone(), v.to_string());
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Searches the knowledge base for id candidates matching a mention.
    pub fn search(&self, term: &str, kind: IdKind) -> Result<Vec<Candidate>, WikiError> {
        let url = format!(
            "{}?action=wbsearchentities&format=json&language=en&uselang=en&type={}&limit=10&search={}",
            self.search_endpoint,
            kind.api_word(),
            url_encode(term)
        );
        let json = self.get_json(&url)?;
        let hits = json.get("search").and_then(|s| s.as_array()).ok_or_else(|| {
            WikiError::Format { url: url.clone(), message: "missing search list".to_string() }
        })?;
        let mut out = Vec::with_capacity(hits.len());
        for h in hits {
            let c: Candidate = serde_json::from_value(h.clone())
                .map_err(|e| WikiError::Format { url: url.clone(), message: e.to_string() })?;
            out.push(c);
        }
        Ok(out)
    }

    /// Fetches the introductory extract of the page titled `title`;
    /// Ok(None) when no such page exists. Markup is stripped.
    pub fn page_intro(&self, title: &str) -> Result<Option<String>, WikiError> {
        let url = format!(
            "{}?action=query&format=json&prop=extracts&exintro=1&explaintext=1&redirects=1&titles={}",
            self.page_endpoint,
            url_encode(title)
        );
        let json = self.get_json(&url)?;
        let pages = json
            .get("query")
            .and_then(|q| q.get("pages"))
            .and_then(|p| p.as_object())
            .ok_or_else(|| WikiError::Format {
                url: url.clone(),
                message: "missing query.pages".to_string(),
            })?;
        for (_, page) in pages {
            if page.get("missing").is_some() {
                return Ok(None);
            }
            if let Some(extract) = page.get("extract").and_then(|e| e.as_str()) {
                return Ok(Some(strip_markup(extract)));
            }
        }
        Ok(None)
    }
}

/// Strips wiki markup a page intro may still carry: nested {{templates}},
/// [[link|label]] forms, <ref> citations and other tags, quote runs and
/// numeric citation brackets. Whitespace collapses to single spaces with
/// paragraph breaks kept.
pub fn strip_markup(text: &str) -> String {
    // Nested templates need a depth counter, not a regex.
    let mut no_templates = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"{{") {
            depth += 1;
            i += 2;
        } else if depth > 0 && bytes[i..].starts_with(b"}}") {
            depth -= 1;
            i += 2;
        } else if depth == 0 {
            // Safe: we only split at ASCII braces, so char boundaries hold.
            let ch_len = {
                let mut l = 1;
                while i + l < bytes.len() && (bytes[i + l] & 0xC0) == 0x80 {
                    l += 1;
                }
                l
            };
            no_templates.push_str(std::str::from_utf8(&bytes[i..i + ch_len]).unwrap_or(""));
            i += ch_len;
        } else {
            i += 1;
        }
    }

    static REFS: OnceLock<regex::Regex> = OnceLock::new();
    static LINKS: OnceLock<regex::Regex> = OnceLock::new();
    static TAGS: OnceLock<regex::Regex> = OnceLock::new();
    static CITES: OnceLock<regex::Regex> = OnceLock::new();
    let refs =
        REFS.get_or_init(|| regex::Regex::new(r"(?s)<ref[^>/]*/>|<ref[^>]*>.*?</ref>").unwrap());
    let s = refs.replace_all(&no_templates, "");
    let links = LINKS
        .get_or_init(|| regex::Regex::new(r"\[\[(?:[^\[\]|]*\|)?([^\[\]|]*)\]\]").unwrap());
    let s = links.replace_all(&s, "$1");
    let tags = TAGS.get_or_init(|| regex::Regex::new(r"</?[a-zA-Z][^>]*>").unwrap());
    let s = tags.replace_all(&s, "");
    let cites = CITES.get_or_init(|| regex::Regex::new(r"\[\d+\]").unwrap());
    let s = cites.replace_all(&s, "");
    let s = s.replace("'''", "").replace("''", "");

    // Collapse whitespace but keep paragraph breaks.
    let mut out = String::with_capacity(s.len());
    for (i, para) in s.split("\n\n").filter(|p| !p.trim().is_empty()).enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&para.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::TransportError;
    use std::sync::Mutex;

    struct Canned {
        replies: Mutex<Vec<(String, String)>>,
    }

    impl HttpTransport for Canned {
        fn fetch(&self, url: &str, _body: &str) -> Result<String, TransportError> {
            let mut replies = self.replies.lock().unwrap();
            for i in 0..replies.len() {
                if url.contains(&replies[i].0) {
                    return Ok(replies.remove(i).1);
                }
            }
            Err(TransportError::Network(format!("no canned reply for {url}")))
        }
    }

    fn client(replies: &[(&str, &str)]) -> WikiClient {
        WikiClient::new(Box::new(Canned {
            replies: Mutex::new(
                replies.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            ),
        }))
    }

    #[test]
    fn url_encoding_covers_the_usual_suspects() {
        assert_eq!(url_encode("position held"), "position%20held");
        assert_eq!(url_encode("a&b=c"), "a%26b%3Dc");
        assert_eq!(url_encode("Ørsted"), "%C3%98rsted");
        assert_eq!(url_encode("safe-_.~"), "safe-_.~");
    }

    #[test]
    fn sparql_rows_parse_standard_bindings() {
        let c = client(&[(
            "sparql",
            r#"{"head":{"vars":["entity","entityLabel"]},"results":{"bindings":[
                {"entity":{"type":"uri","value":"http://www.wikidata.org/entity/Q42"},
                 "entityLabel":{"type":"literal","value":"Douglas Adams"}}]}}"#,
        )]);
        let rows = c.sparql_rows("SELECT ?entity ?entityLabel WHERE { }").unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["entity"], "http://www.wikidata.org/entity/Q42");
        assert_eq!(rows[0]["entityLabel"], "Douglas Adams");
    }

    #[test]
    fn search_parses_candidates() {
        let c = client(&[(
            "wbsearchentities",
            r#"{"search":[{"id":"P39","label":"position held","description":"subject holds the office"},
                          {"id":"P31","label":"instance of"}]}"#,
        )]);
        let hits = c.search("position held", IdKind::Property).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].id, "P39");
        assert_eq!(hits[1].description, "");
    }

    #[test]
    fn page_intro_handles_missing_pages() {
        let c = client(&[
            ("titles=Nowhere", r#"{"query":{"pages":{"-1":{"missing":""}}}}"#),
            (
                "titles=Somewhere",
                r#"{"query":{"pages":{"77":{"extract":"Somewhere is a place."}}}}"#,
            ),
        ]);
        assert_eq!(c.page_intro("Nowhere").unwrap(), None);
        assert_eq!(c.page_intro("Somewhere").unwrap().as_deref(), Some("Somewhere is a place."));
    }

    #[test]
    fn markup_stripping_flattens_templates_links_and_refs() {
        let raw = "'''Ada Lovelace'''{{efn|Born {{birth date|1815|12|10}}.}} was an \
                   [[England|English]] [[mathematician]].<ref name=\"a\">Cite</ref> She \
                   worked on the [[Analytical Engine]].[2]\n\n<b>Legacy</b> lives on.";
        assert_eq!(
            strip_markup(raw),
            "Ada Lovelace was an English mathematician. She worked on the Analytical \
             Engine.\n\nLegacy lives on."
        );
    }
}
