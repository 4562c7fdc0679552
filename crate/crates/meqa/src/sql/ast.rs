//! Query AST and canonical printer for the SELECT subset the engine runs:
//! single table, WHERE with three-valued logic, GROUP BY / HAVING, ORDER
//! BY, DISTINCT, LIMIT, and the aggregates COUNT, SUM, AVG, MIN, MAX.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    /// Printed as `!=`; `<>` parses to the same operator.
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::NotEq => "!=",
            CompareOp::Lt => "<",
            CompareOp::LtEq => "<=",
            CompareOp::Gt => ">",
            CompareOp::GtEq => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }
}

/// Argument of an aggregate call. `Star` is only valid for COUNT.
#[derive(Debug, Clone, PartialEq)]
pub enum AggArg {
    Star,
    Column(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Bare `*` in a select list.
    Star,
    Column(String),
    StringLit(String),
    IntLit(i64),
    FloatLit(f64),
    Null,
    Aggregate { func: AggFunc, distinct: bool, arg: AggArg },
    Compare { op: CompareOp, left: Box<Expr>, right: Box<Expr> },
    Like { expr: Box<Expr>, pattern: String, negated: bool },
    InList { expr: Box<Expr>, list: Vec<Expr>, negated: bool },
    IsNull { expr: Box<Expr>, negated: bool },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: String,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<String>,
    pub having: Option<Expr>,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<u64>,
}

/// Reserved words the printer must quote when they appear as identifiers.
pub(crate) const KEYWORDS: &[&str] = &[
    "SELECT", "DISTINCT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "LIMIT", "ASC",
    "DESC", "AND", "OR", "NOT", "IN", "LIKE", "IS", "NULL", "AS", "COUNT", "SUM", "AVG", "MIN",
    "MAX", "JOIN", "UNION", "ON",
];

fn is_bare_ident(name: &str) -> bool {
    let mut chars = name.chars();
    let ok_first = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    ok_first
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name.to_ascii_uppercase().as_str())
}

/// Identifiers print bare when they can; anything else (spaces, symbols,
/// keyword collisions) is double-quoted with `""` escaping.
pub fn print_ident(name: &str) -> String {
    if is_bare_ident(name) {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

/// Single-quoted SQL string with `''` escaping.
pub fn print_string(value: &str) -> String {
    format!("'{}'", value.replace('\'', "''"))
}

// Precedence levels for parenthesization: OR < AND < NOT < predicates.
fn level(expr: &Expr) -> u8 {
    match expr {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(..) => 3,
        Expr::Compare { .. } | Expr::Like { .. } | Expr::InList { .. } | Expr::IsNull { .. } => 4,
        _ => 5,
    }
}

fn print_child(out: &mut String, child: &Expr, min_level: u8) {
    if level(child) < min_level {
        out.push('(');
        print_expr_into(out, child);
        out.push(')');
    } else {
        print_expr_into(out, child);
    }
}

fn print_expr_into(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Star => out.push('*'),
        Expr::Column(name) => out.push_str(&print_ident(name)),
        Expr::StringLit(s) => out.push_str(&print_string(s)),
        Expr::IntLit(v) => {
            let _ = write!(out, "{v}");
        }
        // {:?} keeps a trailing ".0" and round-trips through parsing.
        Expr::FloatLit(v) => {
            let _ = write!(out, "{v:?}");
        }
        Expr::Null => out.push_str("NULL"),
        Expr::Aggregate { func, distinct, arg } => {
            out.push_str(func.name());
            out.push('(');
            if *distinct {
                out.push_str("DISTINCT ");
            }
            match arg {
                AggArg::Star => out.push('*'),
                AggArg::Column(name) => out.push_str(&print_ident(name)),
            }
            out.push(')');
        }
        Expr::Compare { op, left, right } => {
            print_child(out, left, 5);
            let _ = write!(out, " {} ", op.symbol());
            print_child(out, right, 5);
        }
        Expr::Like { expr, pattern, negated } => {
            print_child(out, expr, 5);
            out.push_str(if *negated { " NOT LIKE " } else { " LIKE " });
            out.push_str(&print_string(pattern));
        }
        Expr::InList { expr, list, negated } => {
            print_child(out, expr, 5);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            for (i, item) in list.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr_into(out, item);
            }
            out.push(')');
        }
        Expr::IsNull { expr, negated } => {
            print_child(out, expr, 5);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::And(left, right) => {
            print_child(out, left, 2);
            out.push_str(" AND ");
            // Right operand at equal level keeps its parentheses so the
            // printed string reparses to the identical tree.
            print_child(out, right, 3);
        }
        Expr::Or(left, right) => {
            print_child(out, left, 1);
            out.push_str(" OR ");
            print_child(out, right, 2);
        }
        Expr::Not(inner) => {
            out.push_str("NOT ");
            print_child(out, inner, 3);
        }
    }
}

pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    print_expr_into(&mut out, expr);
    out
}

/// Canonical single-line rendering. `parse_sql(print_sql(q))` reproduces
/// `q` exactly, and printing is idempotent across parse round trips.
pub fn print_sql(query: &Query) -> String {
    let mut out = String::from("SELECT ");
    if query.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in query.items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_expr_into(&mut out, &item.expr);
        if let Some(alias) = &item.alias {
            out.push_str(" AS ");
            out.push_str(&print_ident(alias));
        }
    }
    out.push_str(" FROM ");
    out.push_str(&print_ident(&query.from));
    if let Some(w) = &query.where_clause {
        out.push_str(" WHERE ");
        print_expr_into(&mut out, w);
    }
    if !query.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        for (i, col) in query.group_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&print_ident(col));
        }
    }
    if let Some(h) = &query.having {
        out.push_str(" HAVING ");
        print_expr_into(&mut out, h);
    }
    if !query.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, key) in query.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            print_expr_into(&mut out, &key.expr);
            if key.desc {
                out.push_str(" DESC");
            }
        }
    }
    if let Some(n) = query.limit {
        let _ = write!(out, " LIMIT {n}");
    }
    out
}

/// The expression names an output column: the alias when present, else the
/// printed expression. Plain column refs keep their written name unquoted.
pub fn output_name(item: &SelectItem) -> String {
    if let Some(alias) = &item.alias {
        return alias.clone();
    }
    match &item.expr {
        Expr::Column(name) => name.clone(),
        other => print_expr(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_quote_only_when_needed() {
        assert_eq!(print_ident("height_cm"), "height_cm");
        assert_eq!(print_ident("birth date"), "\"birth date\"");
        assert_eq!(print_ident("select"), "\"select\"");
        assert_eq!(print_ident("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(print_ident("2nd"), "\"2nd\"");
    }

    #[test]
    fn strings_escape_quotes() {
        assert_eq!(print_string("O'Neill"), "'O''Neill'");
    }

    #[test]
    fn floats_keep_their_decimal_point() {
        assert_eq!(print_expr(&Expr::FloatLit(1000.0)), "1000.0");
        assert_eq!(print_expr(&Expr::FloatLit(0.5)), "0.5");
        assert_eq!(print_expr(&Expr::IntLit(-3)), "-3");
    }

    #[test]
    fn nested_boolean_printing_parenthesizes_right_assoc() {
        let a = Expr::Column("a".into());
        let lit = |e: &Expr| Expr::IsNull { expr: Box::new(e.clone()), negated: false };
        let left_assoc = Expr::Or(
            Box::new(Expr::Or(Box::new(lit(&a)), Box::new(lit(&a)))),
            Box::new(lit(&a)),
        );
        assert_eq!(print_expr(&left_assoc), "a IS NULL OR a IS NULL OR a IS NULL");
        let right_assoc = Expr::Or(
            Box::new(lit(&a)),
            Box::new(Expr::Or(Box::new(lit(&a)), Box::new(lit(&a)))),
        );
        assert_eq!(print_expr(&right_assoc), "a IS NULL OR (a IS NULL OR a IS NULL)");
    }

    #[test]
    fn and_inside_or_needs_no_parens_but_or_inside_and_does() {
        let p = |name: &str| {
            Expr::IsNull { expr: Box::new(Expr::Column(name.into())), negated: false }
        };
        let and_in_or =
            Expr::Or(Box::new(Expr::And(Box::new(p("a")), Box::new(p("b")))), Box::new(p("c")));
        assert_eq!(print_expr(&and_in_or), "a IS NULL AND b IS NULL OR c IS NULL");
        let or_in_and =
            Expr::And(Box::new(Expr::Or(Box::new(p("a")), Box::new(p("b")))), Box::new(p("c")));
        assert_eq!(print_expr(&or_in_and), "(a IS NULL OR b IS NULL) AND c IS NULL");
    }
}
