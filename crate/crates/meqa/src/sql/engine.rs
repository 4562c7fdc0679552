//! Query engine for the SELECT subset. Implements the evaluation contract
//! documented on the `sql` module; `testkit::naive_execute` implements the
//! same contract the brute-force way and randomized tests hold the two
//! equal.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::ast::{output_name, print_expr, AggArg, AggFunc, CompareOp, Expr, Query, SelectItem};
use super::{SqlError, Value};

/// Single in-memory table: rectangular rows under named columns. Column
/// names must be unique case-insensitively (resolution ignores case).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl SqlTable {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Self, SqlError> {
        let name = name.into();
        if columns.is_empty() {
            return Err(SqlError::Semantic("a table needs at least one column".into()));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.to_lowercase()) {
                return Err(SqlError::Semantic(format!("duplicate column name {c}")));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(SqlError::Semantic(format!(
                    "row {i} has {} cells, table has {} columns",
                    row.len(),
                    columns.len()
                )));
            }
        }
        Ok(Self { name, columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultSet {
    /// Plain-text rendering with aligned columns, used by the CLI.
    pub fn to_text_table(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|v| v.to_string()).collect())
            .collect();
        for row in &rendered {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let pad = |s: &str, w: usize| {
            let mut t = s.to_string();
            for _ in s.chars().count()..w {
                t.push(' ');
            }
            t
        };
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(&pad(c, widths[i]));
        }
        out.push('\n');
        for (i, w) in widths.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(&"-".repeat(*w));
        }
        out.push('\n');
        for row in &rendered {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(&pad(cell, widths[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Hashable identity of a value for grouping and DISTINCT. Decimal identity
/// is by bit pattern, which coincides with equality for the finite values
/// the table layer admits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Text(String),
    Int(i64),
    Dec(u64),
    Missing,
}

fn key_of(v: &Value) -> Key {
    match v {
        Value::Text(s) => Key::Text(s.clone()),
        Value::Integer(i) => Key::Int(*i),
        // Negative zero folds into zero so bit identity matches equality.
        Value::Decimal(d) => Key::Dec(if *d == 0.0 { 0.0f64.to_bits() } else { d.to_bits() }),
        Value::Missing => Key::Missing,
    }
}

fn row_key(row: &[Value]) -> Vec<Key> {
    row.iter().map(key_of).collect()
}

fn parse_text_number(s: &str) -> Result<f64, SqlError> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(SqlError::Type(format!("cannot compare text {s:?} with a number"))),
    }
}

/// Contract ordering; None iff either side is Missing.
pub(crate) fn value_cmp(a: &Value, b: &Value) -> Result<Option<Ordering>, SqlError> {
    use Value::*;
    Ok(Some(match (a, b) {
        (Missing, _) | (_, Missing) => return Ok(None),
        (Integer(x), Integer(y)) => x.cmp(y),
        (Text(x), Text(y)) => x.as_bytes().cmp(y.as_bytes()),
        (x, y) => {
            let fx = match x {
                Integer(v) => *v as f64,
                Decimal(v) => *v,
                Text(s) => parse_text_number(s)?,
                Missing => unreachable!(),
            };
            let fy = match y {
                Integer(v) => *v as f64,
                Decimal(v) => *v,
                Text(s) => parse_text_number(s)?,
                Missing => unreachable!(),
            };
            fx.total_cmp(&fy)
        }
    }))
}

/// Iterative `%`/`_` matcher with greedy backtracking, case-insensitive.
fn like_match(text: &str, pattern: &str) -> bool {
    let t: Vec<char> = text.to_lowercase().chars().collect();
    let p: Vec<char> = pattern.to_lowercase().chars().collect();
    let (mut ti, mut pi) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '_' || p[pi] == t[ti]) {
            ti += 1;
            pi += 1;
        } else if pi < p.len() && p[pi] == '%' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '%' {
        pi += 1;
    }
    pi == p.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn of(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

struct Binder {
    by_lower: HashMap<String, usize>,
    columns: Vec<String>,
}

impl Binder {
    fn new(columns: &[String]) -> Self {
        let by_lower =
            columns.iter().enumerate().map(|(i, c)| (c.to_lowercase(), i)).collect();
        Self { by_lower, columns: columns.to_vec() }
    }

    fn resolve(&self, name: &str) -> Result<usize, SqlError> {
        self.by_lower.get(&name.to_lowercase()).copied().ok_or_else(|| {
            SqlError::UnknownColumn { name: name.to_string(), available: self.columns.clone() }
        })
    }
}

enum Ctx<'a> {
    Row(&'a [Value]),
    Group { key_cols: &'a [usize], rows: &'a [usize], table: &'a SqlTable },
}

struct Eval<'a> {
    table: &'a SqlTable,
    binder: Binder,
}

impl<'a> Eval<'a> {
    fn new(table: &'a SqlTable) -> Self {
        Self { table, binder: Binder::new(&table.columns) }
    }

    fn value(&self, expr: &Expr, ctx: &Ctx) -> Result<Value, SqlError> {
        match expr {
            Expr::Column(name) => {
                let idx = self.binder.resolve(name)?;
                match ctx {
                    Ctx::Row(row) => Ok(row[idx].clone()),
                    Ctx::Group { key_cols, rows, table } => {
                        if !key_cols.contains(&idx) {
                            return Err(SqlError::Semantic(format!(
                                "column {name} is not grouped and not aggregated"
                            )));
                        }
                        Ok(table.rows[rows[0]][idx].clone())
                    }
                }
            }
            Expr::StringLit(s) => Ok(Value::Text(s.clone())),
            Expr::IntLit(v) => Ok(Value::Integer(*v)),
            Expr::FloatLit(v) => Ok(Value::Decimal(*v)),
            Expr::Null => Ok(Value::Missing),
            Expr::Aggregate { func, distinct, arg } => match ctx {
                Ctx::Row(_) => Err(SqlError::Semantic(
                    "aggregate used outside an aggregated query".into(),
                )),
                Ctx::Group { rows, .. } => self.aggregate(*func, *distinct, arg, rows),
            },
            other => Err(SqlError::Semantic(format!("not a value expression: {other:?}"))),
        }
    }

    fn aggregate(
        &self,
        func: AggFunc,
        distinct: bool,
        arg: &AggArg,
        rows: &[usize],
    ) -> Result<Value, SqlError> {
        let col = match arg {
            AggArg::Star => {
                debug_assert_eq!(func, AggFunc::Count, "parser enforces COUNT(*)");
                return Ok(Value::Integer(rows.len() as i64));
            }
            AggArg::Column(name) => self.binder.resolve(name)?,
        };
        let mut seen: HashSet<Key> = HashSet::new();
        let mut count: i64 = 0;
        let mut int_sum: Option<i64> = Some(0);
        let mut float_sum = 0.0;
        let mut any_decimal = false;
        let mut non_numeric: Option<&Value> = None;
        let mut best: Option<&Value> = None;
        for &r in rows {
            let v = &self.table.rows[r][col];
            if v.is_missing() {
                continue;
            }
            if distinct && !seen.insert(key_of(v)) {
                continue;
            }
            count += 1;
            match v {
                Value::Integer(x) => {
                    int_sum = int_sum.and_then(|s| s.checked_add(*x));
                    float_sum += *x as f64;
                }
                Value::Decimal(x) => {
                    any_decimal = true;
                    float_sum += x;
                }
                _ => non_numeric = Some(v),
            }
            if matches!(func, AggFunc::Min | AggFunc::Max) {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let ord = value_cmp(v, b)?.expect("missing filtered out");
                        let wins = match func {
                            AggFunc::Min => ord == Ordering::Less,
                            _ => ord == Ordering::Greater,
                        };
                        if wins {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
        }
        match func {
            AggFunc::Count => Ok(Value::Integer(count)),
            AggFunc::Sum | AggFunc::Avg => {
                if let Some(v) = non_numeric {
                    return Err(SqlError::Type(format!(
                        "{} needs numeric input, found {v}",
                        func.name()
                    )));
                }
                if count == 0 {
                    return Ok(Value::Missing);
                }
                if func == AggFunc::Avg {
                    Ok(Value::Decimal(float_sum / count as f64))
                } else if any_decimal {
                    Ok(Value::Decimal(float_sum))
                } else {
                    match int_sum {
                        Some(s) => Ok(Value::Integer(s)),
                        None => Err(SqlError::Eval("integer sum overflowed".into())),
                    }
                }
            }
            AggFunc::Min | AggFunc::Max => Ok(best.cloned().unwrap_or(Value::Missing)),
        }
    }

    fn truth(&self, expr: &Expr, ctx: &Ctx) -> Result<Truth, SqlError> {
        match expr {
            // Both sides always evaluate; errors must not depend on the
            // other operand (contract: no short-circuit).
            Expr::And(l, r) => Ok(self.truth(l, ctx)?.and(self.truth(r, ctx)?)),
            Expr::Or(l, r) => Ok(self.truth(l, ctx)?.or(self.truth(r, ctx)?)),
            Expr::Not(e) => Ok(self.truth(e, ctx)?.not()),
            Expr::Compare { op, left, right } => {
                let a = self.value(left, ctx)?;
                let b = self.value(right, ctx)?;
                match value_cmp(&a, &b)? {
                    None => Ok(Truth::Unknown),
                    Some(ord) => Ok(Truth::of(match op {
                        CompareOp::Eq => ord == Ordering::Equal,
                        CompareOp::NotEq => ord != Ordering::Equal,
                        CompareOp::Lt => ord == Ordering::Less,
                        CompareOp::LtEq => ord != Ordering::Greater,
                        CompareOp::Gt => ord == Ordering::Greater,
                        CompareOp::GtEq => ord != Ordering::Less,
                    })),
                }
            }
            Expr::Like { expr, pattern, negated } => match self.value(expr, ctx)? {
                Value::Missing => Ok(Truth::Unknown),
                Value::Text(s) => Ok(Truth::of(like_match(&s, pattern) != *negated)),
                other => Err(SqlError::Type(format!("LIKE needs text, got {other}"))),
            },
            Expr::InList { expr, list, negated } => {
                let needle = self.value(expr, ctx)?;
                if needle.is_missing() {
                    return Ok(Truth::Unknown);
                }
                let mut result = Truth::False;
                for item in list {
                    let candidate = self.value(item, ctx)?;
                    match value_cmp(&needle, &candidate)? {
                        Some(Ordering::Equal) => return Ok(Truth::of(!*negated)),
                        None => result = Truth::Unknown,
                        _ => {}
                    }
                }
                if *negated {
                    Ok(result.not())
                } else {
                    Ok(result)
                }
            }
            Expr::IsNull { expr, negated } => {
                let v = self.value(expr, ctx)?;
                Ok(Truth::of(v.is_missing() != *negated))
            }
            other => Err(SqlError::Semantic(format!("not a predicate: {other:?}"))),
        }
    }
}

fn contains_aggregate(expr: &Expr) -> bool {
    match expr {
        Expr::Aggregate { .. } => true,
        Expr::And(l, r) | Expr::Or(l, r) => contains_aggregate(l) || contains_aggregate(r),
        Expr::Not(e) => contains_aggregate(e),
        Expr::Compare { left, right, .. } => contains_aggregate(left) || contains_aggregate(right),
        Expr::Like { expr, .. } | Expr::IsNull { expr, .. } => contains_aggregate(expr),
        Expr::InList { expr, list, .. } => {
            contains_aggregate(expr) || list.iter().any(contains_aggregate)
        }
        _ => false,
    }
}

/// Stable missing-last multi-key sort. Enforces the up-front mixed-type
/// validation from the contract so no comparison can fail mid-sort.
fn sort_by_keys(rows: &mut Vec<(Vec<Value>, Vec<Value>)>, descs: &[bool]) -> Result<(), SqlError> {
    for k in 0..descs.len() {
        let mut any_number = false;
        let mut texts = Vec::new();
        for (keys, _) in rows.iter() {
            match &keys[k] {
                Value::Integer(_) | Value::Decimal(_) => any_number = true,
                Value::Text(s) => texts.push(s.clone()),
                Value::Missing => {}
            }
        }
        if any_number {
            for s in &texts {
                parse_text_number(s)?;
            }
        }
    }
    rows.sort_by(|(a, _), (b, _)| {
        for (k, desc) in descs.iter().enumerate() {
            let (x, y) = (&a[k], &b[k]);
            let ord = match (x.is_missing(), y.is_missing()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                (false, false) => {
                    let o = value_cmp(x, y)
                        .expect("validated above")
                        .expect("neither missing");
                    if *desc {
                        o.reverse()
                    } else {
                        o
                    }
                }
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    });
    Ok(())
}

fn expand_star(query: &Query, table: &SqlTable) -> Vec<SelectItem> {
    if query.items.len() == 1 && query.items[0].expr == Expr::Star {
        table
            .columns
            .iter()
            .map(|c| SelectItem { expr: Expr::Column(c.clone()), alias: None })
            .collect()
    } else {
        query.items.clone()
    }
}

/// Resolves an ORDER BY key against the projected output: column keys match
/// aliases or output names case-insensitively; aggregate keys match an item
/// with the same printed form.
fn resolve_output_key(
    items: &[SelectItem],
    out_columns: &[String],
    key: &Expr,
) -> Result<usize, SqlError> {
    match key {
        Expr::Column(name) => out_columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                SqlError::Semantic(format!("ORDER BY key {name} does not name an output column"))
            }),
        agg @ Expr::Aggregate { .. } => {
            let printed = print_expr(agg);
            items
                .iter()
                .position(|it| print_expr(&it.expr) == printed)
                .ok_or_else(|| {
                    SqlError::Semantic(format!(
                        "ORDER BY key {printed} does not name an output column"
                    ))
                })
        }
        other => Err(SqlError::Semantic(format!(
            "ORDER BY key must be a column or aggregate: {other:?}"
        ))),
    }
}

pub fn execute(query: &Query, table: &SqlTable) -> Result<ResultSet, SqlError> {
    if !query.from.eq_ignore_ascii_case(&table.name) {
        return Err(SqlError::WrongTable { queried: query.from.clone(), actual: table.name.clone() });
    }
    let eval = Eval::new(table);
    let items = expand_star(query, table);
    let out_columns: Vec<String> = items.iter().map(output_name).collect();

    let mut kept: Vec<usize> = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        match &query.where_clause {
            None => kept.push(i),
            Some(pred) => {
                if eval.truth(pred, &Ctx::Row(row))? == Truth::True {
                    kept.push(i);
                }
            }
        }
    }

    let aggregated = !query.group_by.is_empty()
        || query.having.is_some()
        || items.iter().any(|it| contains_aggregate(&it.expr));

    let mut out_rows: Vec<Vec<Value>>;
    if aggregated {
        let key_cols: Vec<usize> = query
            .group_by
            .iter()
            .map(|name| eval.binder.resolve(name))
            .collect::<Result<_, _>>()?;
        for item in &items {
            match &item.expr {
                Expr::Aggregate { .. } => {}
                Expr::Column(name) => {
                    let idx = eval.binder.resolve(name)?;
                    if !key_cols.contains(&idx) {
                        return Err(SqlError::Semantic(format!(
                            "column {name} is not grouped and not aggregated"
                        )));
                    }
                }
                other => {
                    return Err(SqlError::Semantic(format!(
                        "select item must be a grouped column or aggregate: {other:?}"
                    )))
                }
            }
        }

        // First-appearance grouping over hashable keys.
        let mut order: Vec<Vec<usize>> = Vec::new();
        if key_cols.is_empty() {
            order.push(kept.clone());
        } else {
            let mut index: HashMap<Vec<Key>, usize> = HashMap::new();
            for &r in &kept {
                let key: Vec<Key> =
                    key_cols.iter().map(|&c| key_of(&table.rows[r][c])).collect();
                match index.entry(key) {
                    Entry::Occupied(slot) => order[*slot.get()].push(r),
                    Entry::Vacant(slot) => {
                        slot.insert(order.len());
                        order.push(vec![r]);
                    }
                }
            }
        }

        out_rows = Vec::with_capacity(order.len());
        for members in &order {
            let ctx = Ctx::Group { key_cols: &key_cols, rows: members, table };
            if let Some(h) = &query.having {
                if eval.truth(h, &ctx)? != Truth::True {
                    continue;
                }
            }
            let mut row = Vec::with_capacity(items.len());
            for item in &items {
                row.push(eval.value(&item.expr, &ctx)?);
            }
            out_rows.push(row);
        }

        if !query.order_by.is_empty() {
            let positions: Vec<usize> = query
                .order_by
                .iter()
                .map(|k| resolve_output_key(&items, &out_columns, &k.expr))
                .collect::<Result<_, _>>()?;
            let descs: Vec<bool> = query.order_by.iter().map(|k| k.desc).collect();
            let mut decorated: Vec<(Vec<Value>, Vec<Value>)> = out_rows
                .into_iter()
                .map(|r| (positions.iter().map(|&i| r[i].clone()).collect(), r))
                .collect();
            sort_by_keys(&mut decorated, &descs)?;
            out_rows = decorated.into_iter().map(|(_, r)| r).collect();
        }
    } else {
        // Row-wise projection, keeping source alignment for sorting.
        let mut projected: Vec<(usize, Vec<Value>)> = Vec::with_capacity(kept.len());
        for &r in &kept {
            let ctx = Ctx::Row(&table.rows[r]);
            let mut row = Vec::with_capacity(items.len());
            for item in &items {
                row.push(eval.value(&item.expr, &ctx)?);
            }
            projected.push((r, row));
        }
        if query.distinct {
            let mut seen: HashSet<Vec<Key>> = HashSet::new();
            projected.retain(|(_, row)| seen.insert(row_key(row)));
        }
        if !query.order_by.is_empty() {
            let descs: Vec<bool> = query.order_by.iter().map(|k| k.desc).collect();
            let mut decorated: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
            for (r, row) in &projected {
                let mut keys = Vec::with_capacity(query.order_by.len());
                for k in &query.order_by {
                    let v = if query.distinct {
                        let i = resolve_output_key(&items, &out_columns, &k.expr)?;
                        row[i].clone()
                    } else {
                        match &k.expr {
                            Expr::Column(name) => match eval.binder.resolve(name) {
                                Ok(c) => table.rows[*r][c].clone(),
                                Err(e) => {
                                    match resolve_output_key(&items, &out_columns, &k.expr) {
                                        Ok(i) => row[i].clone(),
                                        Err(_) => return Err(e),
                                    }
                                }
                            },
                            other => {
                                return Err(SqlError::Semantic(format!(
                                    "ORDER BY key must be a column here: {other:?}"
                                )))
                            }
                        }
                    };
                    keys.push(v);
                }
                decorated.push((keys, row.clone()));
            }
            sort_by_keys(&mut decorated, &descs)?;
            out_rows = decorated.into_iter().map(|(_, r)| r).collect();
        } else {
            out_rows = projected.into_iter().map(|(_, r)| r).collect();
        }
    }

    if let Some(limit) = query.limit {
        out_rows.truncate(limit as usize);
    }
    Ok(ResultSet { columns: out_columns, rows: out_rows })
}

#[cfg(test)]
mod tests {
    use super::super::parse_sql;
    use super::*;

    fn t(v: &str) -> Value {
        Value::Text(v.into())
    }
    fn i(v: i64) -> Value {
        Value::Integer(v)
    }
    fn d(v: f64) -> Value {
        Value::Decimal(v)
    }

    fn people() -> SqlTable {
        SqlTable::new(
            "people",
            vec!["name".into(), "city".into(), "age".into(), "height".into()],
            vec![
                vec![t("Ada"), t("London"), i(36), d(1.65)],
                vec![t("Boris"), t("Oslo"), i(44), d(1.82)],
                vec![t("Chen"), t("Oslo"), i(29), Value::Missing],
                vec![t("Dora"), t("London"), Value::Missing, d(1.70)],
                vec![t("Ed"), t("Paris"), i(44), d(1.82)],
            ],
        )
        .unwrap()
    }

    fn run(sql: &str) -> ResultSet {
        execute(&parse_sql(sql).unwrap(), &people()).unwrap()
    }

    fn run_err(sql: &str) -> SqlError {
        execute(&parse_sql(sql).unwrap(), &people()).unwrap_err()
    }

    #[test]
    fn select_star_keeps_table_order() {
        let rs = run("SELECT * FROM people");
        assert_eq!(rs.columns, vec!["name", "city", "age", "height"]);
        assert_eq!(rs.rows.len(), 5);
        assert_eq!(rs.rows[0][0], t("Ada"));
    }

    #[test]
    fn where_three_valued_logic_drops_unknown() {
        // Chen has no height: the comparison is Unknown, the row drops.
        let rs = run("SELECT name FROM people WHERE height > 1.6");
        let names: Vec<String> = rs.rows.iter().map(|r| r[0].to_string()).collect();
        assert_eq!(names, vec!["Ada", "Boris", "Dora", "Ed"]);
        // And its negation does not bring the row back.
        let rs = run("SELECT name FROM people WHERE NOT height > 1.6");
        assert!(rs.rows.is_empty());
    }

    #[test]
    fn is_null_sees_missing() {
        let rs = run("SELECT name FROM people WHERE age IS NULL");
        assert_eq!(rs.rows, vec![vec![t("Dora")]]);
        let rs = run("SELECT name FROM people WHERE height IS NOT NULL AND city = 'Oslo'");
        assert_eq!(rs.rows, vec![vec![t("Boris")]]);
    }

    #[test]
    fn count_star_vs_count_column() {
        let rs = run("SELECT COUNT(*), COUNT(age), COUNT(DISTINCT age) FROM people");
        assert_eq!(rs.rows, vec![vec![i(5), i(4), i(3)]]);
    }

    #[test]
    fn aggregates_skip_missing_and_empty_yields_missing() {
        let rs = run("SELECT AVG(age), MIN(height), MAX(height) FROM people");
        assert_eq!(rs.rows[0][0], d((36 + 44 + 29 + 44) as f64 / 4.0));
        assert_eq!(rs.rows[0][1], d(1.65));
        assert_eq!(rs.rows[0][2], d(1.82));
        let rs = run("SELECT SUM(age), AVG(age), COUNT(*) FROM people WHERE city = 'Nowhere'");
        assert_eq!(rs.rows, vec![vec![Value::Missing, Value::Missing, i(0)]]);
    }

    #[test]
    fn group_by_first_appearance_order_and_having() {
        let rs = run("SELECT city, COUNT(*) AS n FROM people GROUP BY city");
        assert_eq!(
            rs.rows,
            vec![
                vec![t("London"), i(2)],
                vec![t("Oslo"), i(2)],
                vec![t("Paris"), i(1)]
            ]
        );
        let rs = run("SELECT city FROM people GROUP BY city HAVING COUNT(*) > 1");
        assert_eq!(rs.rows, vec![vec![t("London")], vec![t("Oslo")]]);
    }

    #[test]
    fn missing_groups_together() {
        let rs = run("SELECT age, COUNT(*) FROM people GROUP BY age ORDER BY COUNT(*) DESC, age");
        // 44 appears twice; 29, 36 and the missing group once each.
        assert_eq!(rs.rows[0], vec![i(44), i(2)]);
        assert_eq!(rs.rows.last().unwrap(), &vec![Value::Missing, i(1)]);
    }

    #[test]
    fn order_by_missing_sorts_last_in_both_directions() {
        let asc = run("SELECT name FROM people ORDER BY age");
        let names: Vec<String> = asc.rows.iter().map(|r| r[0].to_string()).collect();
        assert_eq!(names, vec!["Chen", "Ada", "Boris", "Ed", "Dora"]);
        let desc = run("SELECT name FROM people ORDER BY age DESC");
        let names: Vec<String> = desc.rows.iter().map(|r| r[0].to_string()).collect();
        assert_eq!(names, vec!["Boris", "Ed", "Ada", "Chen", "Dora"]);
    }

    #[test]
    fn order_by_is_stable_for_ties() {
        let rs = run("SELECT name FROM people ORDER BY height DESC");
        let names: Vec<String> = rs.rows.iter().map(|r| r[0].to_string()).collect();
        // Boris and Ed tie at 1.82 and keep table order; Chen is missing.
        assert_eq!(names, vec!["Boris", "Ed", "Dora", "Ada", "Chen"]);
    }

    #[test]
    fn distinct_dedupes_and_keeps_first() {
        let rs = run("SELECT DISTINCT city FROM people");
        assert_eq!(rs.rows, vec![vec![t("London")], vec![t("Oslo")], vec![t("Paris")]]);
    }

    #[test]
    fn like_is_case_insensitive_with_wildcards() {
        let rs = run("SELECT name FROM people WHERE city LIKE 'o%'");
        assert_eq!(rs.rows.len(), 2);
        let rs = run("SELECT name FROM people WHERE name LIKE '_d_'");
        assert_eq!(rs.rows, vec![vec![t("Ada")]]);
        let rs = run("SELECT name FROM people WHERE name NOT LIKE '%a%'");
        let names: Vec<String> = rs.rows.iter().map(|r| r[0].to_string()).collect();
        assert_eq!(names, vec!["Boris", "Chen", "Ed"]);
    }

    #[test]
    fn in_list_with_missing_needle_is_unknown() {
        let rs = run("SELECT name FROM people WHERE age IN (44, 29)");
        assert_eq!(rs.rows.len(), 3);
        // Dora's age is missing: IN and NOT IN both drop her.
        let rs = run("SELECT name FROM people WHERE age NOT IN (44, 29)");
        assert_eq!(rs.rows, vec![vec![t("Ada")]]);
    }

    #[test]
    fn text_number_comparison_coerces_or_errors() {
        let table = SqlTable::new(
            "t",
            vec!["label".into(), "raw".into()],
            vec![
                vec![t("a"), t(" 12 ")],
                vec![t("b"), t("5")],
            ],
        )
        .unwrap();
        let q = parse_sql("SELECT label FROM t WHERE raw > 6").unwrap();
        let rs = execute(&q, &table).unwrap();
        assert_eq!(rs.rows, vec![vec![t("a")]]);
        let bad = SqlTable::new(
            "t",
            vec!["label".into(), "raw".into()],
            vec![vec![t("a"), t("twelve")]],
        )
        .unwrap();
        assert!(matches!(execute(&q, &bad), Err(SqlError::Type(_))));
    }

    #[test]
    fn integer_sum_stays_exact_and_overflow_errors() {
        let table = SqlTable::new(
            "t",
            vec!["x".into()],
            vec![vec![i(i64::MAX)], vec![i(1)]],
        )
        .unwrap();
        let q = parse_sql("SELECT SUM(x) FROM t").unwrap();
        assert!(matches!(execute(&q, &table), Err(SqlError::Eval(_))));
        let rs = run("SELECT SUM(age) FROM people");
        assert_eq!(rs.rows, vec![vec![i(153)]]);
    }

    #[test]
    fn unknown_column_lists_available() {
        match run_err("SELECT nope FROM people") {
            SqlError::UnknownColumn { name, available } => {
                assert_eq!(name, "nope");
                assert_eq!(available.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_table_name_is_an_error() {
        assert!(matches!(run_err("SELECT name FROM persons"), SqlError::WrongTable { .. }));
    }

    #[test]
    fn ungrouped_column_next_to_aggregate_is_rejected() {
        assert!(matches!(run_err("SELECT name, COUNT(*) FROM people"), SqlError::Semantic(_)));
    }

    #[test]
    fn order_by_alias_and_unselected_column() {
        let rs = run("SELECT name AS who FROM people ORDER BY who DESC LIMIT 2");
        assert_eq!(rs.rows, vec![vec![t("Ed")], vec![t("Dora")]]);
        let rs = run("SELECT name FROM people ORDER BY height, name LIMIT 1");
        assert_eq!(rs.rows, vec![vec![t("Ada")]]);
    }

    #[test]
    fn distinct_order_by_must_use_output_columns() {
        assert!(matches!(
            run_err("SELECT DISTINCT city FROM people ORDER BY age"),
            SqlError::Semantic(_)
        ));
    }

    #[test]
    fn limit_truncates_after_sort() {
        let rs = run("SELECT name FROM people ORDER BY age DESC LIMIT 1");
        assert_eq!(rs.rows, vec![vec![t("Boris")]]);
        let rs = run("SELECT name FROM people LIMIT 0");
        assert!(rs.rows.is_empty());
    }

    #[test]
    fn case_insensitive_column_and_table_resolution() {
        let rs = run("SELECT NAME FROM People WHERE CITY = 'Oslo' ORDER BY Age");
        assert_eq!(rs.rows.len(), 2);
        assert_eq!(rs.columns, vec!["NAME"]);
    }

    #[test]
    fn text_table_rendering_aligns() {
        let rs = run("SELECT city, COUNT(*) AS n FROM people GROUP BY city");
        let text = rs.to_text_table();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "city    n");
        assert_eq!(lines[1], "------  -");
        assert_eq!(lines[2], "London  2");
    }

    #[test]
    fn like_matcher_edge_cases() {
        assert!(like_match("", ""));
        assert!(like_match("", "%"));
        assert!(!like_match("", "_"));
        assert!(like_match("abc", "%"));
        assert!(like_match("abc", "a%c"));
        assert!(like_match("abc", "%%c"));
        assert!(like_match("a%c", "a%c"));
        assert!(!like_match("ab", "a_c"));
        assert!(like_match("AbC", "aBc"));
        assert!(like_match("mississippi", "%iss%ppi"));
        assert!(!like_match("mississippi", "%issi%xpi"));
    }

    #[test]
    fn table_constructor_validates() {
        assert!(SqlTable::new("t", vec![], vec![]).is_err());
        assert!(SqlTable::new("t", vec!["a".into(), "A".into()], vec![]).is_err());
        assert!(SqlTable::new("t", vec!["a".into()], vec![vec![]]).is_err());
    }
}
