//! Hand-rolled lexer and recursive-descent parser for the SELECT subset.
//! Errors carry the byte offset they were detected at. Constructs outside
//! the subset (joins, subqueries, arithmetic) are rejected by name so a
//! repair prompt can say what to remove.

use super::ast::{AggArg, AggFunc, CompareOp, Expr, OrderKey, Query, SelectItem};
use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Str(String),
    Int(i64),
    Float(f64),
    Symbol(&'static str),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(input: &str) -> Result<Vec<Token>, SqlError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let pos = i;
        match c {
            '\'' => {
                let mut value = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        Some(b'\'') if bytes.get(i + 1) == Some(&b'\'') => {
                            value.push('\'');
                            i += 2;
                        }
                        Some(b'\'') => {
                            i += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = input[i..].chars().next().expect("in bounds");
                            value.push(ch);
                            i += ch.len_utf8();
                        }
                        None => {
                            return Err(SqlError::Lex {
                                pos,
                                message: "unterminated string literal".into(),
                            })
                        }
                    }
                }
                tokens.push(Token { tok: Tok::Str(value), pos });
            }
            '"' => {
                let mut value = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        Some(b'"') if bytes.get(i + 1) == Some(&b'"') => {
                            value.push('"');
                            i += 2;
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = input[i..].chars().next().expect("in bounds");
                            value.push(ch);
                            i += ch.len_utf8();
                        }
                        None => {
                            return Err(SqlError::Lex {
                                pos,
                                message: "unterminated quoted identifier".into(),
                            })
                        }
                    }
                }
                if value.is_empty() {
                    return Err(SqlError::Lex { pos, message: "empty quoted identifier".into() });
                }
                tokens.push(Token { tok: Tok::Quoted(value), pos });
            }
            '0'..='9' => {
                let start = i;
                let mut is_float = false;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) {
                    is_float = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &input[start..i];
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|e| SqlError::Lex {
                        pos,
                        message: format!("bad number {text}: {e}"),
                    })?)
                } else {
                    match text.parse::<i64>() {
                        Ok(v) => Tok::Int(v),
                        // Magnitude overflowed i64: fall back to a float.
                        Err(_) => Tok::Float(text.parse().map_err(|e| SqlError::Lex {
                            pos,
                            message: format!("bad number {text}: {e}"),
                        })?),
                    }
                };
                tokens.push(Token { tok, pos });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token { tok: Tok::Ident(input[start..i].to_string()), pos });
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { tok: Tok::Symbol("<="), pos });
                    i += 2;
                } else if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push(Token { tok: Tok::Symbol("<>"), pos });
                    i += 2;
                } else {
                    tokens.push(Token { tok: Tok::Symbol("<"), pos });
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { tok: Tok::Symbol(">="), pos });
                    i += 2;
                } else {
                    tokens.push(Token { tok: Tok::Symbol(">"), pos });
                    i += 1;
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { tok: Tok::Symbol("!="), pos });
                    i += 2;
                } else {
                    return Err(SqlError::Lex { pos, message: "lone '!'".into() });
                }
            }
            '=' => {
                tokens.push(Token { tok: Tok::Symbol("="), pos });
                i += 1;
            }
            '(' | ')' | ',' | '*' | ';' | '-' | '+' | '.' => {
                let sym = match c {
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    '*' => "*",
                    ';' => ";",
                    '-' => "-",
                    '+' => "+",
                    _ => ".",
                };
                tokens.push(Token { tok: Tok::Symbol(sym), pos });
                i += 1;
            }
            other => {
                return Err(SqlError::Lex {
                    pos,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    tokens.push(Token { tok: Tok::End, pos: input.len() });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

/// Constructs recognized for the sake of a clear rejection.
const UNSUPPORTED: &[&str] = &[
    "JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS", "UNION", "INTERSECT", "EXCEPT", "CASE",
    "BETWEEN", "EXISTS", "OFFSET", "WITH",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> usize {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> SqlError {
        SqlError::Parse { pos: self.pos(), message: message.into() }
    }

    /// Is the current token the given keyword (case-insensitive)?
    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}")))
        }
    }

    fn at_symbol(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Symbol(s) if *s == sym)
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.at_symbol(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<(), SqlError> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected {sym:?}")))
        }
    }

    fn reject_unsupported(&self) -> Result<(), SqlError> {
        if let Tok::Ident(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED.contains(&upper.as_str()) {
                return Err(SqlError::Unsupported { what: upper });
            }
        }
        Ok(())
    }

    /// Identifier (bare or quoted). Keywords are not identifiers here.
    fn ident(&mut self, what: &str) -> Result<String, SqlError> {
        self.reject_unsupported()?;
        match self.peek().clone() {
            Tok::Ident(w) => {
                if super::ast::KEYWORDS.contains(&w.to_ascii_uppercase().as_str()) {
                    return Err(self.error(format!("expected {what}, found keyword {w}")));
                }
                self.bump();
                Ok(w)
            }
            Tok::Quoted(w) => {
                self.bump();
                Ok(w)
            }
            other => Err(self.error(format!("expected {what}, found {other:?}"))),
        }
    }

    fn agg_func(word: &str) -> Option<AggFunc> {
        match word.to_ascii_uppercase().as_str() {
            "COUNT" => Some(AggFunc::Count),
            "SUM" => Some(AggFunc::Sum),
            "AVG" => Some(AggFunc::Avg),
            "MIN" => Some(AggFunc::Min),
            "MAX" => Some(AggFunc::Max),
            _ => None,
        }
    }

    /// Aggregate call, column, or literal. No arithmetic, no nesting.
    fn primary(&mut self) -> Result<Expr, SqlError> {
        self.reject_unsupported()?;
        match self.peek().clone() {
            Tok::Ident(w) if Self::agg_func(&w).is_some() && self.tokens[self.at + 1].tok == Tok::Symbol("(") => {
                let func = Self::agg_func(&w).expect("checked");
                self.bump();
                self.expect_symbol("(")?;
                let distinct = self.eat_keyword("DISTINCT");
                let arg = if self.eat_symbol("*") {
                    if func != AggFunc::Count {
                        return Err(self.error(format!("{}(*) is not a thing", func.name())));
                    }
                    if distinct {
                        return Err(self.error("COUNT(DISTINCT *) is not a thing"));
                    }
                    AggArg::Star
                } else {
                    AggArg::Column(self.ident("a column name")?)
                };
                self.expect_symbol(")")?;
                Ok(Expr::Aggregate { func, distinct, arg })
            }
            Tok::Ident(w) if w.eq_ignore_ascii_case("NULL") => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::Ident(w) if w.eq_ignore_ascii_case("SELECT") => {
                Err(SqlError::Unsupported { what: "SUBQUERY".into() })
            }
            Tok::Ident(_) | Tok::Quoted(_) => Ok(Expr::Column(self.ident("a column name")?)),
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::StringLit(s))
            }
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::IntLit(v))
            }
            Tok::Float(v) => {
                self.bump();
                Ok(Expr::FloatLit(v))
            }
            Tok::Symbol("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(v) => Ok(Expr::IntLit(-v)),
                    Tok::Float(v) => Ok(Expr::FloatLit(-v)),
                    _ => Err(self.error("expected a number after '-'")),
                }
            }
            Tok::Symbol("+") => {
                self.bump();
                match self.bump() {
                    Tok::Int(v) => Ok(Expr::IntLit(v)),
                    Tok::Float(v) => Ok(Expr::FloatLit(v)),
                    _ => Err(self.error("expected a number after '+'")),
                }
            }
            other => Err(self.error(format!("expected a value, found {other:?}"))),
        }
    }

    /// predicate := primary (compare primary | [NOT] LIKE str | [NOT] IN (...)
    ///              | IS [NOT] NULL)?
    fn predicate(&mut self) -> Result<Expr, SqlError> {
        let left = self.primary()?;
        if let Tok::Symbol(sym) = self.peek() {
            let op = match *sym {
                "=" => Some(CompareOp::Eq),
                "!=" | "<>" => Some(CompareOp::NotEq),
                "<" => Some(CompareOp::Lt),
                "<=" => Some(CompareOp::LtEq),
                ">" => Some(CompareOp::Gt),
                ">=" => Some(CompareOp::GtEq),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let right = self.primary()?;
                return Ok(Expr::Compare { op, left: Box::new(left), right: Box::new(right) });
            }
        }
        let negated = self.eat_keyword("NOT");
        if self.eat_keyword("LIKE") {
            let pattern = match self.bump() {
                Tok::Str(s) => s,
                _ => return Err(self.error("LIKE needs a string pattern")),
            };
            return Ok(Expr::Like { expr: Box::new(left), pattern, negated });
        }
        if self.eat_keyword("IN") {
            self.expect_symbol("(")?;
            if self.at_keyword("SELECT") {
                return Err(SqlError::Unsupported { what: "SUBQUERY".into() });
            }
            let mut list = vec![self.primary()?];
            while self.eat_symbol(",") {
                list.push(self.primary()?);
            }
            self.expect_symbol(")")?;
            return Ok(Expr::InList { expr: Box::new(left), list, negated });
        }
        if negated {
            return Err(self.error("expected LIKE or IN after NOT"));
        }
        if self.eat_keyword("IS") {
            let negated = self.eat_keyword("NOT");
            self.expect_keyword("NULL")?;
            return Ok(Expr::IsNull { expr: Box::new(left), negated });
        }
        // A bare primary is not a predicate in this subset.
        self.reject_unsupported()?;
        Err(self.error("expected a comparison, LIKE, IN or IS NULL"))
    }

    fn not_expr(&mut self) -> Result<Expr, SqlError> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        if self.eat_symbol("(") {
            let inner = self.or_expr()?;
            self.expect_symbol(")")?;
            return Ok(inner);
        }
        self.predicate()
    }

    fn and_expr(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.not_expr()?;
        while self.eat_keyword("AND") {
            let right = self.not_expr()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn or_expr(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.and_expr()?;
        while self.eat_keyword("OR") {
            let right = self.and_expr()?;
            left = Expr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        if self.eat_symbol("*") {
            return Ok(SelectItem { expr: Expr::Star, alias: None });
        }
        let expr = self.primary()?;
        let alias = if self.eat_keyword("AS") { Some(self.ident("an alias")?) } else { None };
        Ok(SelectItem { expr, alias })
    }

    fn order_key(&mut self) -> Result<OrderKey, SqlError> {
        let expr = self.primary()?;
        let desc = if self.eat_keyword("DESC") {
            true
        } else {
            self.eat_keyword("ASC");
            false
        };
        Ok(OrderKey { expr, desc })
    }

    fn query(&mut self) -> Result<Query, SqlError> {
        self.expect_keyword("SELECT")?;
        let distinct = self.eat_keyword("DISTINCT");
        let mut items = vec![self.select_item()?];
        while self.eat_symbol(",") {
            items.push(self.select_item()?);
        }
        self.expect_keyword("FROM")?;
        let from = self.ident("a table name")?;
        if self.at_symbol(",") {
            return Err(SqlError::Unsupported { what: "MULTIPLE TABLES".into() });
        }
        self.reject_unsupported()?;

        let where_clause =
            if self.eat_keyword("WHERE") { Some(self.or_expr()?) } else { None };
        self.reject_unsupported()?;

        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by.push(self.ident("a column name")?);
            while self.eat_symbol(",") {
                group_by.push(self.ident("a column name")?);
            }
        }
        let having = if self.eat_keyword("HAVING") { Some(self.or_expr()?) } else { None };
        if having.is_some() && group_by.is_empty() {
            return Err(self.error("HAVING without GROUP BY"));
        }

        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            order_by.push(self.order_key()?);
            while self.eat_symbol(",") {
                order_by.push(self.order_key()?);
            }
        }

        let limit = if self.eat_keyword("LIMIT") {
            match self.bump() {
                Tok::Int(v) if v >= 0 => Some(v as u64),
                _ => return Err(self.error("LIMIT needs a non-negative integer")),
            }
        } else {
            None
        };

        self.eat_symbol(";");
        self.reject_unsupported()?;
        if self.peek() != &Tok::End {
            return Err(self.error(format!("unexpected trailing input: {:?}", self.peek())));
        }

        // Star discipline: SELECT * stands alone.
        let star_count = items.iter().filter(|it| it.expr == Expr::Star).count();
        if star_count > 0 && items.len() > 1 {
            return Err(SqlError::Parse {
                pos: 0,
                message: "* cannot be combined with other select items".into(),
            });
        }
        Ok(Query { distinct, items, from, where_clause, group_by, having, order_by, limit })
    }
}

pub fn parse_sql(input: &str) -> Result<Query, SqlError> {
    let tokens = lex(input)?;
    let mut parser = Parser { tokens, at: 0 };
    parser.query()
}

#[cfg(test)]
mod tests {
    use super::super::ast::print_sql;
    use super::*;

    fn round_trip(sql: &str) -> String {
        print_sql(&parse_sql(sql).unwrap())
    }

    #[test]
    fn minimal_query() {
        assert_eq!(round_trip("select * from people"), "SELECT * FROM people");
    }

    #[test]
    fn full_featured_query_round_trips() {
        let sql = "SELECT name, COUNT(*) AS n FROM people WHERE (age >= 30 AND city != 'Oslo') \
                   OR name LIKE 'A%' GROUP BY name HAVING COUNT(*) > 1 \
                   ORDER BY n DESC, name LIMIT 10";
        let printed = round_trip(sql);
        assert_eq!(
            printed,
            "SELECT name, COUNT(*) AS n FROM people WHERE age >= 30 AND city != 'Oslo' \
             OR name LIKE 'A%' GROUP BY name HAVING COUNT(*) > 1 ORDER BY n DESC, name LIMIT 10"
        );
        // Printing reached a fixed point.
        assert_eq!(round_trip(&printed), printed);
    }

    #[test]
    fn print_then_parse_reproduces_ast() {
        let sql = "SELECT DISTINCT \"birth place\" FROM t WHERE x IN (1, 2.5, 'a') \
                   AND NOT y IS NULL ORDER BY \"birth place\"";
        let q1 = parse_sql(sql).unwrap();
        let q2 = parse_sql(&print_sql(&q1)).unwrap();
        assert_eq!(q1, q2);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let q = parse_sql("Select Name From T Where Age Is Not Null Order By Name Asc").unwrap();
        assert!(q.where_clause.is_some());
        assert_eq!(q.order_by.len(), 1);
        assert!(!q.order_by[0].desc);
    }

    #[test]
    fn quoted_identifiers_allow_spaces_and_escapes() {
        let q = parse_sql("SELECT \"life span\", \"say \"\"hi\"\"\" FROM \"the table\"").unwrap();
        assert_eq!(q.from, "the table");
        assert_eq!(q.items.len(), 2);
        match &q.items[1].expr {
            Expr::Column(name) => assert_eq!(name, "say \"hi\""),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn string_escapes_round_trip() {
        let q = parse_sql("SELECT name FROM t WHERE name = 'O''Neill'").unwrap();
        match &q.where_clause {
            Some(Expr::Compare { right, .. }) => {
                assert_eq!(**right, Expr::StringLit("O'Neill".into()));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            round_trip("SELECT name FROM t WHERE name = 'O''Neill'"),
            "SELECT name FROM t WHERE name = 'O''Neill'"
        );
    }

    #[test]
    fn negative_numbers_and_floats() {
        let q = parse_sql("SELECT a FROM t WHERE a > -3 AND b < 2.5e2").unwrap();
        let printed = print_sql(&q);
        assert_eq!(printed, "SELECT a FROM t WHERE a > -3 AND b < 250.0");
    }

    #[test]
    fn unsupported_constructs_are_named() {
        for (sql, what) in [
            ("SELECT a FROM t JOIN u ON x = y", "JOIN"),
            ("SELECT a FROM t WHERE x IN (SELECT b FROM u)", "SUBQUERY"),
            ("SELECT a FROM t UNION SELECT b FROM u", "UNION"),
            ("SELECT a FROM t, u", "MULTIPLE TABLES"),
            ("SELECT a FROM t WHERE x BETWEEN 1 AND 2", "BETWEEN"),
            ("SELECT a FROM t LIMIT 5 OFFSET 2", "OFFSET"),
        ] {
            match parse_sql(sql) {
                Err(SqlError::Unsupported { what: w }) => assert_eq!(w, what, "for {sql}"),
                other => panic!("expected unsupported for {sql}, got {other:?}"),
            }
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_sql("SELECT FROM t") {
            Err(SqlError::Parse { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        match parse_sql("SELECT a FROM t WHERE") {
            Err(SqlError::Parse { pos, .. }) => assert_eq!(pos, 21),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn count_variants() {
        let q = parse_sql("SELECT COUNT(*), COUNT(x), COUNT(DISTINCT x) FROM t").unwrap();
        assert_eq!(q.items.len(), 3);
        assert!(parse_sql("SELECT SUM(*) FROM t").is_err());
        assert!(parse_sql("SELECT COUNT(DISTINCT *) FROM t").is_err());
    }

    #[test]
    fn having_requires_group_by() {
        assert!(parse_sql("SELECT a FROM t HAVING COUNT(*) > 1").is_err());
    }

    #[test]
    fn star_must_stand_alone() {
        assert!(parse_sql("SELECT *, a FROM t").is_err());
    }

    #[test]
    fn trailing_semicolon_is_tolerated() {
        assert_eq!(round_trip("SELECT a FROM t;"), "SELECT a FROM t");
    }

    #[test]
    fn bare_column_is_not_a_predicate() {
        assert!(parse_sql("SELECT a FROM t WHERE b").is_err());
    }
}
