//! Brute-force reference evaluator for the SQL subset. Written the obvious
//! way, nested loops and linear scans, against the semantics contract in
//! `sql`, with no code shared with the engine beyond the AST and value
//! types. Slow is fine; agreeing with the engine is the point.

use std::cmp::Ordering;

use crate::sql::ast::{AggArg, AggFunc, CompareOp, Expr, Query, SelectItem};
use crate::sql::engine::{ResultSet, SqlTable};
use crate::sql::{ast, SqlError, Value};

// Three-valued logic as Option<bool>; None is Unknown.
type Truth = Option<bool>;

fn col_index(table: &SqlTable, name: &str) -> Result<usize, SqlError> {
    for (i, c) in table.columns.iter().enumerate() {
        if c.eq_ignore_ascii_case(name) {
            return Ok(i);
        }
    }
    Err(SqlError::UnknownColumn { name: name.to_string(), available: table.columns.clone() })
}

fn text_as_number(s: &str) -> Result<f64, SqlError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| SqlError::Type(format!("cannot compare text {s:?} with a number")))
}

/// Ordering per the contract; None when either side is Missing.
fn compare(a: &Value, b: &Value) -> Result<Option<Ordering>, SqlError> {
    let ord = match (a, b) {
        (Value::Missing, _) | (_, Value::Missing) => return Ok(None),
        (Value::Integer(x), Value::Integer(y)) => x.cmp(y),
        (Value::Integer(x), Value::Decimal(y)) => (*x as f64).total_cmp(y),
        (Value::Decimal(x), Value::Integer(y)) => x.total_cmp(&(*y as f64)),
        (Value::Decimal(x), Value::Decimal(y)) => x.total_cmp(y),
        (Value::Text(x), Value::Text(y)) => x.as_bytes().cmp(y.as_bytes()),
        (Value::Text(x), Value::Integer(y)) => text_as_number(x)?.total_cmp(&(*y as f64)),
        (Value::Text(x), Value::Decimal(y)) => text_as_number(x)?.total_cmp(y),
        (Value::Integer(x), Value::Text(y)) => (*x as f64).total_cmp(&text_as_number(y)?),
        (Value::Decimal(x), Value::Text(y)) => x.total_cmp(&text_as_number(y)?),
    };
    Ok(Some(ord))
}

fn like_match(text: &[char], pat: &[char]) -> bool {
    match pat.split_first() {
        None => text.is_empty(),
        Some(('%', rest)) => (0..=text.len()).any(|k| like_match(&text[k..], rest)),
        Some(('_', rest)) => !text.is_empty() && like_match(&text[1..], rest),
        Some((c, rest)) => text.first() == Some(c) && like_match(&text[1..], rest),
    }
}

/// What a value expression is evaluated against: one row, or one group.
enum Scope<'a> {
    Row(&'a [Value]),
    Group { group_cols: &'a [usize], rows: &'a [usize] },
}

struct Oracle<'a> {
    table: &'a SqlTable,
}

impl<'a> Oracle<'a> {
    fn value_of(&self, expr: &Expr, scope: &Scope) -> Result<Value, SqlError> {
        match expr {
            Expr::Column(name) => {
                let idx = col_index(self.table, name)?;
                match scope {
                    Scope::Row(row) => Ok(row[idx].clone()),
                    Scope::Group { group_cols, rows } => {
                        if !group_cols.contains(&idx) {
                            return Err(SqlError::Semantic(format!(
                                "column {name} is not grouped and not aggregated"
                            )));
                        }
                        let first = rows.first().expect("groups are never empty");
                        Ok(self.table.rows[*first][idx].clone())
                    }
                }
            }
            Expr::StringLit(s) => Ok(Value::Text(s.clone())),
            Expr::IntLit(v) => Ok(Value::Integer(*v)),
            Expr::FloatLit(v) => Ok(Value::Decimal(*v)),
            Expr::Null => Ok(Value::Missing),
            Expr::Aggregate { func, distinct, arg } => match scope {
                Scope::Row(_) => Err(SqlError::Semantic(
                    "aggregate used outside an aggregated query".into(),
                )),
                Scope::Group { rows, .. } => self.aggregate(*func, *distinct, arg, rows),
            },
            Expr::Star => Err(SqlError::Semantic("* is not a value".into())),
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
        if func == AggFunc::Count && matches!(arg, AggArg::Star) {
            return Ok(Value::Integer(rows.len() as i64));
        }
        let col = match arg {
            AggArg::Star => return Err(SqlError::Semantic("only COUNT accepts *".into())),
            AggArg::Column(name) => col_index(self.table, name)?,
        };
        let mut values: Vec<Value> = rows
            .iter()
            .map(|r| self.table.rows[*r][col].clone())
            .filter(|v| !v.is_missing())
            .collect();
        if distinct {
            let mut seen: Vec<Value> = Vec::new();
            values.retain(|v| {
                if seen.contains(v) {
                    false
                } else {
                    seen.push(v.clone());
                    true
                }
            });
        }
        match func {
            AggFunc::Count => Ok(Value::Integer(values.len() as i64)),
            AggFunc::Sum | AggFunc::Avg => {
                if values.is_empty() {
                    return Ok(Value::Missing);
                }
                let mut any_decimal = false;
                let mut int_sum: i64 = 0;
                let mut f_sum = 0.0;
                for v in &values {
                    match v {
                        Value::Integer(x) => {
                            int_sum = int_sum.checked_add(*x).ok_or_else(|| {
                                SqlError::Eval("integer sum overflowed".into())
                            })?;
                            f_sum += *x as f64;
                        }
                        Value::Decimal(x) => {
                            any_decimal = true;
                            f_sum += x;
                        }
                        Value::Text(_) => {
                            return Err(SqlError::Type(format!(
                                "{} needs numeric input",
                                func.name()
                            )))
                        }
                        Value::Missing => unreachable!("filtered"),
                    }
                }
                if func == AggFunc::Avg {
                    Ok(Value::Decimal(f_sum / values.len() as f64))
                } else if any_decimal {
                    Ok(Value::Decimal(f_sum))
                } else {
                    Ok(Value::Integer(int_sum))
                }
            }
            AggFunc::Min | AggFunc::Max => {
                let mut best: Option<Value> = None;
                for v in values {
                    best = match best {
                        None => Some(v),
                        Some(b) => {
                            let ord = compare(&v, &b)?.expect("no missing here");
                            let take = if func == AggFunc::Min {
                                ord == Ordering::Less
                            } else {
                                ord == Ordering::Greater
                            };
                            Some(if take { v } else { b })
                        }
                    };
                }
                Ok(best.unwrap_or(Value::Missing))
            }
        }
    }

    fn truth_of(&self, expr: &Expr, scope: &Scope) -> Result<Truth, SqlError> {
        match expr {
            Expr::And(l, r) => {
                let (a, b) = (self.truth_of(l, scope)?, self.truth_of(r, scope)?);
                Ok(match (a, b) {
                    (Some(false), _) | (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                })
            }
            Expr::Or(l, r) => {
                let (a, b) = (self.truth_of(l, scope)?, self.truth_of(r, scope)?);
                Ok(match (a, b) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                })
            }
            Expr::Not(inner) => Ok(self.truth_of(inner, scope)?.map(|b| !b)),
            Expr::Compare { op, left, right } => {
                let a = self.value_of(left, scope)?;
                let b = self.value_of(right, scope)?;
                let Some(ord) = compare(&a, &b)? else { return Ok(None) };
                Ok(Some(match op {
                    CompareOp::Eq => ord == Ordering::Equal,
                    CompareOp::NotEq => ord != Ordering::Equal,
                    CompareOp::Lt => ord == Ordering::Less,
                    CompareOp::LtEq => ord != Ordering::Greater,
                    CompareOp::Gt => ord == Ordering::Greater,
                    CompareOp::GtEq => ord != Ordering::Less,
                }))
            }
            Expr::Like { expr, pattern, negated } => {
                match self.value_of(expr, scope)? {
                    Value::Missing => Ok(None),
                    Value::Text(s) => {
                        let text: Vec<char> = s.to_lowercase().chars().collect();
                        let pat: Vec<char> = pattern.to_lowercase().chars().collect();
                        let hit = like_match(&text, &pat);
                        Ok(Some(hit != *negated))
                    }
                    other => {
                        Err(SqlError::Type(format!("LIKE needs text, got {other}")))
                    }
                }
            }
            Expr::InList { expr, list, negated } => {
                let needle = self.value_of(expr, scope)?;
                if needle.is_missing() {
                    return Ok(None);
                }
                let mut saw_unknown = false;
                for item in list {
                    let candidate = self.value_of(item, scope)?;
                    match compare(&needle, &candidate)? {
                        Some(Ordering::Equal) => {
                            return Ok(Some(!*negated));
                        }
                        None => saw_unknown = true,
                        _ => {}
                    }
                }
                if saw_unknown {
                    Ok(None)
                } else {
                    Ok(Some(*negated))
                }
            }
            Expr::IsNull { expr, negated } => {
                let v = self.value_of(expr, scope)?;
                Ok(Some(v.is_missing() != *negated))
            }
            other => Err(SqlError::Semantic(format!("not a predicate: {other:?}"))),
        }
    }
}

/// Stable sort of output-aligned items by order keys, Missing always last.
/// Mixed text/numeric key columns are validated up front per the contract.
fn sort_rows<T>(items: &mut [(Vec<Value>, T)], descs: &[bool]) -> Result<(), SqlError> {
    for k in 0..descs.len() {
        let mut any_number = false;
        let mut texts: Vec<&str> = Vec::new();
        for (keys, _) in items.iter() {
            match &keys[k] {
                Value::Integer(_) | Value::Decimal(_) => any_number = true,
                Value::Text(s) => texts.push(s),
                Value::Missing => {}
            }
        }
        if any_number {
            for s in texts {
                text_as_number(s)?;
            }
        }
    }
    // Insertion sort: stable and simple; comparator errors surface as a
    // poisoned flag checked afterwards.
    let mut error: Option<SqlError> = None;
    let mut cmp = |a: &Vec<Value>, b: &Vec<Value>| -> Ordering {
        for (k, desc) in descs.iter().enumerate() {
            let (x, y) = (&a[k], &b[k]);
            let ord = match (x.is_missing(), y.is_missing()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                (false, false) => match compare(x, y) {
                    Ok(Some(o)) => {
                        if *desc {
                            o.reverse()
                        } else {
                            o
                        }
                    }
                    Ok(None) => unreachable!("missing handled above"),
                    Err(e) => {
                        if error.is_none() {
                            error = Some(e);
                        }
                        Ordering::Equal
                    }
                },
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    };
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && cmp(&items[j - 1].0, &items[j].0) == Ordering::Greater {
            items.swap(j - 1, j);
            j -= 1;
        }
    }
    match error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn expanded_items(query: &Query, table: &SqlTable) -> Vec<SelectItem> {
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

fn has_aggregate(expr: &Expr) -> bool {
    match expr {
        Expr::Aggregate { .. } => true,
        Expr::And(l, r) | Expr::Or(l, r) => has_aggregate(l) || has_aggregate(r),
        Expr::Not(e) => has_aggregate(e),
        Expr::Compare { left, right, .. } => has_aggregate(left) || has_aggregate(right),
        Expr::Like { expr, .. } | Expr::IsNull { expr, .. } => has_aggregate(expr),
        Expr::InList { expr, list, .. } => {
            has_aggregate(expr) || list.iter().any(has_aggregate)
        }
        _ => false,
    }
}

pub fn naive_execute(query: &Query, table: &SqlTable) -> Result<ResultSet, SqlError> {
    if !query.from.eq_ignore_ascii_case(&table.name) {
        return Err(SqlError::WrongTable {
            queried: query.from.clone(),
            actual: table.name.clone(),
        });
    }
    let oracle = Oracle { table };
    let items = expanded_items(query, table);

    // Filter.
    let mut kept: Vec<usize> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let keep = match &query.where_clause {
            None => true,
            Some(pred) => oracle.truth_of(pred, &Scope::Row(row))? == Some(true),
        };
        if keep {
            kept.push(i);
        }
    }

    let grouped = !query.group_by.is_empty()
        || items.iter().any(|it| has_aggregate(&it.expr))
        || query.having.is_some();

    let columns: Vec<String> = items.iter().map(ast::output_name).collect();
    let mut out_rows: Vec<Vec<Value>> = Vec::new();

    if grouped {
        let mut group_cols = Vec::new();
        for name in &query.group_by {
            group_cols.push(col_index(table, name)?);
        }
        // Select items must be group-by columns or aggregates.
        for item in &items {
            match &item.expr {
                Expr::Aggregate { .. } => {}
                Expr::Column(name) => {
                    let idx = col_index(table, name)?;
                    if !group_cols.contains(&idx) {
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
        // First-appearance grouping by structural key equality.
        let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
        if group_cols.is_empty() {
            groups.push((Vec::new(), kept.clone()));
        } else {
            for &r in &kept {
                let key: Vec<Value> =
                    group_cols.iter().map(|&c| table.rows[r][c].clone()).collect();
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, members)) => members.push(r),
                    None => groups.push((key, vec![r])),
                }
            }
        }
        for (_, members) in &groups {
            // The zero-row group (aggregate query over no rows) still
            // answers COUNT(*) = 0; value lookups against it cannot happen
            // because no group columns exist.
            let scope = Scope::Group { group_cols: &group_cols, rows: members };
            if let Some(h) = &query.having {
                if oracle.truth_of(h, &scope)? != Some(true) {
                    continue;
                }
            }
            let mut row = Vec::new();
            for item in &items {
                if members.is_empty() {
                    // Only the no-GROUP-BY empty group reaches here; items
                    // are all aggregates then (no group columns exist).
                    match &item.expr {
                        Expr::Aggregate { func, distinct, arg } => {
                            row.push(oracle.aggregate(*func, *distinct, arg, members)?)
                        }
                        _ => {
                            return Err(SqlError::Semantic(
                                "column select over an empty aggregate-only query".into(),
                            ))
                        }
                    }
                } else {
                    row.push(oracle.value_of(&item.expr, &scope)?);
                }
            }
            out_rows.push(row);
        }
        // Under grouping, order keys name output columns.
        if !query.order_by.is_empty() {
            let mut key_idx = Vec::new();
            let mut descs = Vec::new();
            for k in &query.order_by {
                key_idx.push(output_column_index(&items, &columns, &k.expr)?);
                descs.push(k.desc);
            }
            let mut decorated: Vec<(Vec<Value>, Vec<Value>)> = out_rows
                .into_iter()
                .map(|r| (key_idx.iter().map(|&i| r[i].clone()).collect(), r))
                .collect();
            sort_rows(&mut decorated, &descs)?;
            out_rows = decorated.into_iter().map(|(_, r)| r).collect();
        }
    } else {
        for &r in &kept {
            let scope = Scope::Row(&table.rows[r]);
            let mut row = Vec::new();
            for item in &items {
                row.push(oracle.value_of(&item.expr, &scope)?);
            }
            out_rows.push(row);
        }
        if query.distinct {
            let mut seen: Vec<Vec<Value>> = Vec::new();
            out_rows.retain(|r| {
                if seen.contains(r) {
                    false
                } else {
                    seen.push(r.clone());
                    true
                }
            });
        }
        if !query.order_by.is_empty() {
            let mut descs = Vec::new();
            // Key source: output column under DISTINCT, else table column
            // first with output-alias fallback.
            enum KeySrc {
                Out(usize),
                Table(usize),
            }
            let mut sources = Vec::new();
            for k in &query.order_by {
                let src = if query.distinct {
                    KeySrc::Out(output_column_index(&items, &columns, &k.expr)?)
                } else {
                    match &k.expr {
                        Expr::Column(name) => {
                            match col_index(table, name) {
                                Ok(idx) => KeySrc::Table(idx),
                                Err(e) => {
                                    match output_column_index(&items, &columns, &k.expr) {
                                        Ok(i) => KeySrc::Out(i),
                                        Err(_) => return Err(e),
                                    }
                                }
                            }
                        }
                        other => {
                            return Err(SqlError::Semantic(format!(
                                "ORDER BY key must be a column here: {other:?}"
                            )))
                        }
                    }
                };
                sources.push(src);
                descs.push(k.desc);
            }
            if query.distinct {
                let mut decorated: Vec<(Vec<Value>, Vec<Value>)> = out_rows
                    .into_iter()
                    .map(|r| {
                        let keys = sources
                            .iter()
                            .map(|s| match s {
                                KeySrc::Out(i) => r[*i].clone(),
                                KeySrc::Table(_) => unreachable!("distinct uses output keys"),
                            })
                            .collect();
                        (keys, r)
                    })
                    .collect();
                sort_rows(&mut decorated, &descs)?;
                out_rows = decorated.into_iter().map(|(_, r)| r).collect();
            } else {
                // Re-derive keys from the source rows, which are still
                // aligned with out_rows (no dedup happened).
                let mut decorated: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
                for (pos, &r) in kept.iter().enumerate() {
                    let keys = sources
                        .iter()
                        .map(|s| match s {
                            KeySrc::Out(i) => out_rows[pos][*i].clone(),
                            KeySrc::Table(c) => table.rows[r][*c].clone(),
                        })
                        .collect();
                    decorated.push((keys, out_rows[pos].clone()));
                }
                sort_rows(&mut decorated, &descs)?;
                out_rows = decorated.into_iter().map(|(_, r)| r).collect();
            }
        }
    }

    if let Some(limit) = query.limit {
        out_rows.truncate(limit as usize);
    }
    Ok(ResultSet { columns, rows: out_rows })
}

/// Resolves an order key against the output columns: alias/name match for
/// column refs, printed-form match for aggregates.
fn output_column_index(
    items: &[SelectItem],
    columns: &[String],
    key: &Expr,
) -> Result<usize, SqlError> {
    let wanted = match key {
        Expr::Column(name) => name.clone(),
        agg @ Expr::Aggregate { .. } => {
            // An aggregate key matches the item with the same printed form,
            // aliased or not.
            let printed = ast::print_expr(agg);
            for (i, item) in items.iter().enumerate() {
                if ast::print_expr(&item.expr) == printed {
                    return Ok(i);
                }
            }
            printed
        }
        other => {
            return Err(SqlError::Semantic(format!(
                "ORDER BY key must be a column or aggregate: {other:?}"
            )))
        }
    };
    for (i, c) in columns.iter().enumerate() {
        if c.eq_ignore_ascii_case(&wanted) {
            return Ok(i);
        }
    }
    Err(SqlError::Semantic(format!(
        "ORDER BY key {wanted} does not name an output column"
    )))
}
