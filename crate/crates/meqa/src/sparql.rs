//! Grammar checker for the SPARQL subset the pipeline emits: a single
//! SELECT over triple patterns, FILTER (opaque, parens balanced), VALUES,
//! DISTINCT, LIMIT and OFFSET. Full SPARQL is out of scope; anything else
//! is a grammar error, which is exactly what the draft-repair loop needs.
//!
//! Knowledge-base ids appear as prefixed names (wd:Q42, wdt:P31,
//! rdfs:label). A draft may use the placeholder locals ENT_n and PROP_n
//! before ids are resolved; `placeholders()` lists them so refinement can
//! substitute real ids and prove none are left.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("sparql grammar error at byte {pos}: {message}")]
pub struct SparqlError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// ?name, without the question mark.
    Var(String),
    /// prefix:Local, e.g. wd:Q42 or rdfs:label.
    Prefixed { prefix: String, local: String },
    /// <http://full/iri>
    Iri(String),
    /// "text" with optional @lang.
    Literal { value: String, lang: Option<String> },
    Number(f64),
}

impl Term {
    /// ENT_n / PROP_n placeholder local name, if this term is one.
    pub fn placeholder(&self) -> Option<&str> {
        match self {
            Term::Prefixed { local, .. } if is_placeholder(local) => Some(local),
            _ => None,
        }
    }
}

fn is_placeholder(local: &str) -> bool {
    let digits = local.strip_prefix("ENT_").or_else(|| local.strip_prefix("PROP_"));
    matches!(digits, Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Triple { subject: Term, predicate: Term, object: Term },
    /// Raw expression text between the FILTER parentheses; only balance is
    /// checked, the pipeline never evaluates filters locally.
    Filter(String),
    Values { var: String, terms: Vec<Term> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparqlAst {
    pub distinct: bool,
    /// Selected variable names, without the question mark.
    pub select: Vec<String>,
    pub patterns: Vec<Pattern>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl SparqlAst {
    /// Placeholder locals in first-appearance order, deduplicated.
    pub fn placeholders(&self) -> Vec<String> {
        let mut seen = Vec::new();
        let mut push = |t: &Term| {
            if let Some(p) = t.placeholder() {
                if !seen.iter().any(|s| s == p) {
                    seen.push(p.to_string());
                }
            }
        };
        for p in &self.patterns {
            match p {
                Pattern::Triple { subject, predicate, object } => {
                    push(subject);
                    push(predicate);
                    push(object);
                }
                Pattern::Values { terms, .. } => terms.iter().for_each(&mut push),
                Pattern::Filter(_) => {}
            }
        }
        seen
    }

    pub fn triples(&self) -> impl Iterator<Item = (&Term, &Term, &Term)> {
        self.patterns.iter().filter_map(|p| match p {
            Pattern::Triple { subject, predicate, object } => Some((subject, predicate, object)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Prefixed(String, String),
    Iri(String),
    Str(String, Option<String>),
    Num(f64),
    Sym(char),
    /// Operator run such as != or ||; only valid inside FILTER bodies.
    Op(String),
}

const OPERATOR_CHARS: &[char] = &['=', '!', '<', '>', '&', '|', '+', '-', '*', '/'];

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, pos: usize, message: impl Into<String>) -> Result<T, SparqlError> {
        Err(SparqlError { pos, message: message.into() })
    }

    /// '<' opens an IRI only when a '>' follows with no whitespace between;
    /// otherwise it is the less-than operator inside a FILTER.
    fn iri_starts_at(&self, pos: usize) -> bool {
        if self.src.get(pos) != Some(&b'<') {
            return false;
        }
        for q in pos + 1..self.src.len() {
            match self.src[q] {
                b'>' => return true,
                b if (b as char).is_ascii_whitespace() => return false,
                _ => {}
            }
        }
        false
    }

    fn lex(mut self) -> Result<Vec<(usize, Tok)>, SparqlError> {
        let mut out = Vec::new();
        while self.at < self.src.len() {
            let c = self.src[self.at] as char;
            if c.is_ascii_whitespace() {
                self.at += 1;
                continue;
            }
            // Comments run to end of line.
            if c == '#' {
                while self.at < self.src.len() && self.src[self.at] != b'\n' {
                    self.at += 1;
                }
                continue;
            }
            let start = self.at;
            match c {
                '{' | '}' | '(' | ')' | '.' | ';' => {
                    self.at += 1;
                    out.push((start, Tok::Sym(c)));
                }
                '?' | '$' => {
                    self.at += 1;
                    let name = self.word();
                    if name.is_empty() {
                        return self.err(start, "variable needs a name");
                    }
                    out.push((start, Tok::Var(name)));
                }
                '<' if self.iri_starts_at(self.at) => {
                    self.at += 1;
                    let mut iri = String::new();
                    loop {
                        if self.at >= self.src.len() {
                            return self.err(start, "unterminated <iri>");
                        }
                        let b = self.src[self.at] as char;
                        self.at += 1;
                        if b == '>' {
                            break;
                        }
                        iri.push(b);
                    }
                    out.push((start, Tok::Iri(iri)));
                }
                '"' | '\'' => {
                    let quote = c;
                    self.at += 1;
                    let mut s = String::new();
                    loop {
                        if self.at >= self.src.len() {
                            return self.err(start, "unterminated string");
                        }
                        let b = self.src[self.at] as char;
                        self.at += 1;
                        if b == '\\' {
                            if self.at >= self.src.len() {
                                return self.err(start, "unterminated escape");
                            }
                            s.push(self.src[self.at] as char);
                            self.at += 1;
                        } else if b == quote {
                            break;
                        } else {
                            s.push(b);
                        }
                    }
                    let lang = if self.at < self.src.len() && self.src[self.at] == b'@' {
                        self.at += 1;
                        let tag = self.word_with(&['-']);
                        if tag.is_empty() {
                            return self.err(start, "empty language tag");
                        }
                        Some(tag)
                    } else {
                        None
                    };
                    out.push((start, Tok::Str(s, lang)));
                }
                _ if c.is_ascii_digit()
                    || ((c == '-' || c == '+')
                        && self.src.get(self.at + 1).is_some_and(|b| b.is_ascii_digit())) =>
                {
                    let mut text = String::from(c);
                    self.at += 1;
                    while self.at < self.src.len() {
                        let b = self.src[self.at] as char;
                        if b.is_ascii_digit() || b == '.' || b == 'e' || b == 'E' {
                            text.push(b);
                            self.at += 1;
                        } else {
                            break;
                        }
                    }
                    // A lone '.' after digits is the triple terminator.
                    if text.ends_with('.') {
                        text.pop();
                        self.at -= 1;
                    }
                    match text.parse::<f64>() {
                        Ok(n) => out.push((start, Tok::Num(n))),
                        Err(_) => return self.err(start, format!("bad number {text:?}")),
                    }
                }
                _ if c.is_ascii_alphabetic() || c == '_' => {
                    let word = self.word();
                    if self.at < self.src.len() && self.src[self.at] == b':' {
                        self.at += 1;
                        let local = self.word();
                        out.push((start, Tok::Prefixed(word, local)));
                    } else {
                        out.push((start, Tok::Word(word)));
                    }
                }
                _ if OPERATOR_CHARS.contains(&c) => {
                    let mut op = String::new();
                    while self.at < self.src.len() {
                        let b = self.src[self.at] as char;
                        if !OPERATOR_CHARS.contains(&b) || self.iri_starts_at(self.at) {
                            break;
                        }
                        op.push(b);
                        self.at += 1;
                    }
                    out.push((start, Tok::Op(op)));
                }
                other => return self.err(start, format!("unexpected character {other:?}")),
            }
        }
        Ok(out)
    }

    fn word(&mut self) -> String {
        self.word_with(&[])
    }

    fn word_with(&mut self, extra: &[char]) -> String {
        let mut w = String::new();
        while self.at < self.src.len() {
            let b = self.src[self.at] as char;
            if b.is_ascii_alphanumeric() || b == '_' || extra.contains(&b) {
                w.push(b);
                self.at += 1;
            } else {
                break;
            }
        }
        w
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SparqlError> {
        Err(SparqlError { pos: self.pos(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if let Some(Tok::Word(w)) = self.peek() {
            if w.eq_ignore_ascii_case(word) {
                self.at += 1;
                return true;
            }
        }
        false
    }

    fn eat_sym(&mut self, sym: char) -> bool {
        if let Some(Tok::Sym(c)) = self.peek() {
            if *c == sym {
                self.at += 1;
                return true;
            }
        }
        false
    }

    fn expect_sym(&mut self, sym: char) -> Result<(), SparqlError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.err(format!("expected {sym:?}"))
        }
    }

    fn term(&mut self) -> Result<Term, SparqlError> {
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Some(Tok::Prefixed(p, l)) => {
                self.bump();
                if l.is_empty() {
                    return self.err(format!("prefixed name {p}: needs a local part"));
                }
                Ok(Term::Prefixed { prefix: p, local: l })
            }
            Some(Tok::Iri(i)) => {
                self.bump();
                Ok(Term::Iri(i))
            }
            Some(Tok::Str(s, lang)) => {
                self.bump();
                Ok(Term::Literal { value: s, lang })
            }
            Some(Tok::Num(n)) => {
                self.bump();
                Ok(Term::Number(n))
            }
            Some(Tok::Word(w)) => self.err(format!(
                "bare word {w:?} is not a term (unsupported construct, or missing prefix)"
            )),
            Some(Tok::Op(o)) => self.err(format!("operator {o:?} outside FILTER")),
            _ => self.err("expected a term"),
        }
    }

    fn filter_body(&mut self) -> Result<String, SparqlError> {
        self.expect_sym('(')?;
        let mut depth = 1usize;
        let mut parts: Vec<String> = Vec::new();
        loop {
            match self.bump() {
                None => return self.err("unbalanced FILTER parentheses"),
                Some(Tok::Sym('(')) => {
                    depth += 1;
                    parts.push("(".into());
                }
                Some(Tok::Sym(')')) => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                    parts.push(")".into());
                }
                Some(Tok::Sym(c)) => parts.push(c.to_string()),
                Some(Tok::Word(w)) => parts.push(w),
                Some(Tok::Var(v)) => parts.push(format!("?{v}")),
                Some(Tok::Prefixed(p, l)) => parts.push(format!("{p}:{l}")),
                Some(Tok::Iri(i)) => parts.push(format!("<{i}>")),
                Some(Tok::Str(s, _)) => parts.push(format!("{s:?}")),
                Some(Tok::Num(n)) => parts.push(format!("{n}")),
                Some(Tok::Op(o)) => parts.push(o),
            }
        }
        Ok(parts.join(" "))
    }

    fn group(&mut self) -> Result<Vec<Pattern>, SparqlError> {
        self.expect_sym('{')?;
        let mut patterns = Vec::new();
        loop {
            if self.eat_sym('}') {
                break;
            }
            if self.peek().is_none() {
                return self.err("unterminated group, expected }");
            }
            if self.eat_word("FILTER") {
                let body = self.filter_body()?;
                patterns.push(Pattern::Filter(body));
                self.eat_sym('.');
                continue;
            }
            if self.eat_word("VALUES") {
                let var = match self.bump() {
                    Some(Tok::Var(v)) => v,
                    _ => return self.err("VALUES needs a variable"),
                };
                self.expect_sym('{')?;
                let mut terms = Vec::new();
                while !self.eat_sym('}') {
                    if self.peek().is_none() {
                        return self.err("unterminated VALUES block");
                    }
                    terms.push(self.term()?);
                }
                patterns.push(Pattern::Values { var, terms });
                self.eat_sym('.');
                continue;
            }
            if let Some(Tok::Word(w)) = self.peek() {
                let w = w.clone();
                for unsupported in
                    ["OPTIONAL", "SERVICE", "UNION", "MINUS", "GRAPH", "BIND", "SELECT"]
                {
                    if w.eq_ignore_ascii_case(unsupported) {
                        return self.err(format!("unsupported construct: {unsupported}"));
                    }
                }
            }
            let subject = self.term()?;
            let predicate = self.term()?;
            let object = self.term()?;
            patterns.push(Pattern::Triple { subject, predicate, object });
            // Predicate-object lists (';') stay out of the subset: one
            // triple per statement keeps substitution trivially auditable.
            if let Some(Tok::Sym(';')) = self.peek() {
                return self.err("';' lists are not in the subset; write full triples");
            }
            if !self.eat_sym('.') {
                // The final triple may omit the dot.
                if let Some(Tok::Sym('}')) = self.peek() {
                    continue;
                }
                return self.err("expected '.' after triple");
            }
        }
        Ok(patterns)
    }

    fn number(&mut self, what: &str) -> Result<u64, SparqlError> {
        match self.bump() {
            Some(Tok::Num(n)) if n >= 0.0 && n.fract() == 0.0 => Ok(n as u64),
            _ => self.err(format!("{what} needs a non-negative integer")),
        }
    }

    fn query(&mut self) -> Result<SparqlAst, SparqlError> {
        if !self.eat_word("SELECT") {
            if let Some(Tok::Word(w)) = self.peek() {
                if w.eq_ignore_ascii_case("PREFIX") {
                    return self.err("PREFIX declarations are not in the subset; use the \
                                     well-known prefixes directly");
                }
            }
            return self.err("expected SELECT");
        }
        let distinct = self.eat_word("DISTINCT");
        let mut select = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Var(_)) => {
                    if let Some(Tok::Var(v)) = self.bump() {
                        select.push(v);
                    }
                }
                _ => break,
            }
        }
        if select.is_empty() {
            return self.err("SELECT needs at least one variable");
        }
        if !self.eat_word("WHERE") {
            return self.err("expected WHERE");
        }
        let patterns = self.group()?;
        let mut limit = None;
        let mut offset = None;
        loop {
            if self.eat_word("LIMIT") {
                if limit.is_some() {
                    return self.err("LIMIT given twice");
                }
                limit = Some(self.number("LIMIT")?);
            } else if self.eat_word("OFFSET") {
                if offset.is_some() {
                    return self.err("OFFSET given twice");
                }
                offset = Some(self.number("OFFSET")?);
            } else {
                break;
            }
        }
        if self.at < self.toks.len() {
            return self.err("trailing input after query");
        }
        Ok(SparqlAst { distinct, select, patterns, limit, offset })
    }
}

/// Parses and validates one query against the subset grammar.
pub fn parse_sparql(text: &str) -> Result<SparqlAst, SparqlError> {
    let toks = Lexer { src: text.as_bytes(), at: 0 }.lex()?;
    Parser { toks, at: 0, end: text.len() }.query()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_a_draft_shaped_query() {
        let ast = parse_sparql(
            "SELECT ?entity ?entityLabel WHERE { \
               ?entity wdt:PROP_1 wd:ENT_1 . \
               ?entity rdfs:label ?entityLabel . \
             }",
        )
        .unwrap();
        assert_eq!(ast.select, vec!["entity", "entityLabel"]);
        assert_eq!(ast.patterns.len(), 2);
        assert_eq!(ast.placeholders(), vec!["PROP_1", "ENT_1"]);
    }

    #[test]
    fn resolved_query_has_no_placeholders() {
        let ast = parse_sparql(
            "SELECT DISTINCT ?entity ?entityLabel WHERE { \
               ?entity wdt:P166 wd:Q18748 . \
               ?entity rdfs:label ?entityLabel . \
             } LIMIT 5000 OFFSET 10000",
        )
        .unwrap();
        assert!(ast.distinct);
        assert!(ast.placeholders().is_empty());
        assert_eq!(ast.limit, Some(5000));
        assert_eq!(ast.offset, Some(10000));
    }

    #[test]
    fn values_block_and_filter_parse() {
        let ast = parse_sparql(
            "SELECT ?entity ?entityLabel WHERE { \
               VALUES ?seed { wd:Q1 wd:Q2 } \
               ?seed wdt:P36 ?entity . \
               FILTER ( ?entity != wd:Q1 ) \
               ?entity rdfs:label ?entityLabel \
             }",
        )
        .unwrap();
        match &ast.patterns[0] {
            Pattern::Values { var, terms } => {
                assert_eq!(var, "seed");
                assert_eq!(terms.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(&ast.patterns[2], Pattern::Filter(f) if f.contains("!=")));
    }

    #[test]
    fn literals_carry_language_tags() {
        let ast = parse_sparql(
            "SELECT ?e WHERE { ?e rdfs:label \"Douglas Adams\"@en . }",
        )
        .unwrap();
        match &ast.patterns[0] {
            Pattern::Triple { object: Term::Literal { value, lang }, .. } => {
                assert_eq!(value, "Douglas Adams");
                assert_eq!(lang.as_deref(), Some("en"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_unsupported_queries_are_rejected() {
        assert!(parse_sparql("SELECT WHERE {").is_err());
        assert!(parse_sparql("SELECT ?e WHERE { ?e wdt:P1 }").is_err());
        assert!(parse_sparql("ASK { ?e wdt:P1 wd:Q1 }").is_err());
        let e = parse_sparql("SELECT ?e WHERE { OPTIONAL { ?e wdt:P1 wd:Q1 } }").unwrap_err();
        assert!(e.message.contains("OPTIONAL"));
        let e = parse_sparql("PREFIX wd: <http://x> SELECT ?e WHERE { ?e wdt:P1 wd:Q1 }")
            .unwrap_err();
        assert!(e.message.contains("PREFIX"));
        let e =
            parse_sparql("SELECT ?e WHERE { ?e wdt:P1 wd:Q1 ; wdt:P2 wd:Q2 . }").unwrap_err();
        assert!(e.message.contains("full triples"));
    }

    #[test]
    fn placeholder_detection_is_exact() {
        assert!(is_placeholder("ENT_1"));
        assert!(is_placeholder("PROP_23"));
        assert!(!is_placeholder("ENT_"));
        assert!(!is_placeholder("ENTITY_1"));
        assert!(!is_placeholder("PROP_1x"));
        assert!(!is_placeholder("Q42"));
    }

    #[test]
    fn numbers_before_triple_dot_lex_cleanly() {
        let ast = parse_sparql("SELECT ?e WHERE { ?e wdt:P1 5 . } LIMIT 10").unwrap();
        match &ast.patterns[0] {
            Pattern::Triple { object: Term::Number(n), .. } => assert_eq!(*n, 5.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(ast.limit, Some(10));
    }
}
