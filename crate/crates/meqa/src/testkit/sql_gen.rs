//! Seeded generators for random tables and queries covering the whole SQL
//! subset: aggregates, grouping, HAVING, nested boolean filters, LIKE, IN,
//! IS NULL, DISTINCT, multi-key ORDER BY, LIMIT, quoted identifiers.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::sql::ast::{AggArg, AggFunc, CompareOp, Expr, OrderKey, Query, SelectItem};
use crate::sql::engine::SqlTable;
use crate::sql::Value;

const TEXT_POOL: &[&str] = &[
    "alder", "birch", "cedar", "dogwood", "elm", "fir", "gum", "hazel", "O'Neill", "",
    "two words", "MiXeD", "100% sure",
];

#[derive(Clone, Copy, PartialEq)]
enum ColKind {
    Text,
    Int,
    Dec,
    Date,
}

/// Column names include spaced and keyword-colliding ones on purpose, so
/// the printer's quoting paths get exercised.
const COL_NAMES: &[(&str, ColKind)] = &[
    ("label", ColKind::Text),
    ("region", ColKind::Text),
    ("status note", ColKind::Text),
    ("group", ColKind::Text),
    ("count", ColKind::Int),
    ("rank", ColKind::Int),
    ("seat total", ColKind::Int),
    ("area", ColKind::Dec),
    ("growth rate", ColKind::Dec),
    ("founded", ColKind::Date),
    ("last seen", ColKind::Date),
];

fn random_cell(rng: &mut ChaCha8Rng, kind: ColKind) -> Value {
    if rng.gen_bool(0.12) {
        return Value::Missing;
    }
    match kind {
        ColKind::Text => Value::Text(TEXT_POOL.choose(rng).expect("non-empty").to_string()),
        ColKind::Int => Value::Integer(rng.gen_range(-20..60)),
        // Half steps: collision-friendly and exactly representable.
        ColKind::Dec => Value::Decimal(rng.gen_range(-40..120) as f64 / 2.0),
        ColKind::Date => Value::Text(format!(
            "{:04}-{:02}-{:02}",
            rng.gen_range(1950..2030),
            rng.gen_range(1..13),
            rng.gen_range(1..29)
        )),
    }
}

pub struct GeneratedTable {
    pub table: SqlTable,
    kinds: Vec<ColKind>,
}

pub fn random_table(rng: &mut ChaCha8Rng) -> GeneratedTable {
    let n_cols = rng.gen_range(2..=5);
    let mut picks: Vec<usize> = (0..COL_NAMES.len()).collect();
    picks.shuffle(rng);
    picks.truncate(n_cols);
    let columns: Vec<String> = picks.iter().map(|&i| COL_NAMES[i].0.to_string()).collect();
    let kinds: Vec<ColKind> = picks.iter().map(|&i| COL_NAMES[i].1).collect();
    let n_rows = rng.gen_range(0..=40);
    let rows: Vec<Vec<Value>> = (0..n_rows)
        .map(|_| kinds.iter().map(|&k| random_cell(rng, k)).collect())
        .collect();
    let name = ["items", "records", "the data"][rng.gen_range(0..3)].to_string();
    GeneratedTable { table: SqlTable::new(name, columns, rows).expect("generated table"), kinds }
}

impl GeneratedTable {
    fn numeric_cols(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&i| matches!(self.kinds[i], ColKind::Int | ColKind::Dec))
            .collect()
    }

    fn text_cols(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&i| matches!(self.kinds[i], ColKind::Text | ColKind::Date))
            .collect()
    }

    /// A literal that is type-compatible with the column: usually an actual
    /// value from it, sometimes a fresh one of the same kind.
    fn literal_for(&self, rng: &mut ChaCha8Rng, col: usize) -> Expr {
        let from_data = rng.gen_bool(0.7);
        if from_data {
            let candidates: Vec<&Value> = self
                .table
                .rows
                .iter()
                .map(|r| &r[col])
                .filter(|v| !v.is_missing())
                .collect();
            if let Some(v) = candidates.choose(rng) {
                return match v {
                    Value::Text(s) => Expr::StringLit(s.clone()),
                    Value::Integer(i) => Expr::IntLit(*i),
                    Value::Decimal(d) => Expr::FloatLit(*d),
                    Value::Missing => unreachable!("filtered"),
                };
            }
        }
        match random_cell(rng, self.kinds[col]) {
            Value::Text(s) => Expr::StringLit(s),
            Value::Integer(i) => Expr::IntLit(i),
            Value::Decimal(d) => Expr::FloatLit(d),
            Value::Missing => Expr::IntLit(0),
        }
    }

    fn predicate(&self, rng: &mut ChaCha8Rng, depth: usize) -> Expr {
        if depth > 0 && rng.gen_bool(0.4) {
            let left = Box::new(self.predicate(rng, depth - 1));
            let right = Box::new(self.predicate(rng, depth - 1));
            return match rng.gen_range(0..3) {
                0 => Expr::And(left, right),
                1 => Expr::Or(left, right),
                _ => Expr::Not(left),
            };
        }
        let col = rng.gen_range(0..self.kinds.len());
        let column = Expr::Column(self.table.columns[col].clone());
        match rng.gen_range(0..4) {
            0 => {
                let ops = [
                    CompareOp::Eq,
                    CompareOp::NotEq,
                    CompareOp::Lt,
                    CompareOp::LtEq,
                    CompareOp::Gt,
                    CompareOp::GtEq,
                ];
                Expr::Compare {
                    op: ops[rng.gen_range(0..ops.len())],
                    left: Box::new(column),
                    right: Box::new(self.literal_for(rng, col)),
                }
            }
            1 => {
                if matches!(self.kinds[col], ColKind::Text | ColKind::Date) {
                    let base = match self.literal_for(rng, col) {
                        Expr::StringLit(s) => s,
                        _ => "alder".to_string(),
                    };
                    let pattern = match rng.gen_range(0..4) {
                        0 => format!("{}%", base.chars().take(2).collect::<String>()),
                        1 => format!("%{}", base.chars().rev().take(2).collect::<String>()),
                        2 => format!("%{}%", base.chars().take(1).collect::<String>()),
                        _ => base.chars().map(|c| if c.is_alphabetic() { c } else { '_' }).collect(),
                    };
                    Expr::Like { expr: Box::new(column), pattern, negated: rng.gen_bool(0.3) }
                } else {
                    Expr::IsNull { expr: Box::new(column), negated: rng.gen_bool(0.5) }
                }
            }
            2 => {
                let n = rng.gen_range(1..=4);
                let list = (0..n).map(|_| self.literal_for(rng, col)).collect();
                Expr::InList { expr: Box::new(column), list, negated: rng.gen_bool(0.3) }
            }
            _ => Expr::IsNull { expr: Box::new(column), negated: rng.gen_bool(0.5) },
        }
    }

    fn aggregate(&self, rng: &mut ChaCha8Rng) -> Expr {
        let numeric = self.numeric_cols();
        let funcs: &[AggFunc] = if numeric.is_empty() {
            &[AggFunc::Count, AggFunc::Min, AggFunc::Max]
        } else {
            &[AggFunc::Count, AggFunc::Sum, AggFunc::Avg, AggFunc::Min, AggFunc::Max]
        };
        let func = *funcs.choose(rng).expect("non-empty");
        match func {
            AggFunc::Count => {
                if rng.gen_bool(0.4) {
                    Expr::Aggregate { func, distinct: false, arg: AggArg::Star }
                } else {
                    let col = rng.gen_range(0..self.kinds.len());
                    Expr::Aggregate {
                        func,
                        distinct: rng.gen_bool(0.3),
                        arg: AggArg::Column(self.table.columns[col].clone()),
                    }
                }
            }
            AggFunc::Sum | AggFunc::Avg => {
                let col = *numeric.choose(rng).expect("checked");
                Expr::Aggregate {
                    func,
                    distinct: false,
                    arg: AggArg::Column(self.table.columns[col].clone()),
                }
            }
            AggFunc::Min | AggFunc::Max => {
                let col = rng.gen_range(0..self.kinds.len());
                Expr::Aggregate {
                    func,
                    distinct: false,
                    arg: AggArg::Column(self.table.columns[col].clone()),
                }
            }
        }
    }
}

pub fn random_query(rng: &mut ChaCha8Rng, gen: &GeneratedTable) -> Query {
    let table = &gen.table;
    let where_clause =
        if rng.gen_bool(0.7) { Some(gen.predicate(rng, 2)) } else { None };

    if rng.gen_bool(0.45) {
        // Aggregated query.
        let group_cols: Vec<String> = {
            let mut picks: Vec<usize> = gen
                .text_cols()
                .into_iter()
                .chain(gen.numeric_cols())
                .collect();
            picks.shuffle(rng);
            picks.truncate(rng.gen_range(0..=2.min(picks.len())));
            picks.into_iter().map(|i| table.columns[i].clone()).collect()
        };
        let mut items: Vec<SelectItem> = group_cols
            .iter()
            .map(|c| SelectItem { expr: Expr::Column(c.clone()), alias: None })
            .collect();
        let n_aggs = rng.gen_range(1..=2);
        for k in 0..n_aggs {
            let alias = if rng.gen_bool(0.5) { Some(format!("agg_{k}")) } else { None };
            items.push(SelectItem { expr: gen.aggregate(rng), alias });
        }
        let having = if !group_cols.is_empty() && rng.gen_bool(0.4) {
            let ops = [CompareOp::Gt, CompareOp::GtEq, CompareOp::Lt, CompareOp::Eq];
            Some(Expr::Compare {
                op: ops[rng.gen_range(0..ops.len())],
                left: Box::new(Expr::Aggregate {
                    func: AggFunc::Count,
                    distinct: false,
                    arg: AggArg::Star,
                }),
                right: Box::new(Expr::IntLit(rng.gen_range(0..4))),
            })
        } else {
            None
        };
        let order_by = if rng.gen_bool(0.6) {
            let mut keys = Vec::new();
            // Order by output columns: aliases and group columns.
            let mut names: Vec<Expr> = Vec::new();
            for it in &items {
                match (&it.alias, &it.expr) {
                    (Some(a), _) => names.push(Expr::Column(a.clone())),
                    (None, Expr::Column(c)) => names.push(Expr::Column(c.clone())),
                    (None, agg @ Expr::Aggregate { .. }) => names.push(agg.clone()),
                    _ => {}
                }
            }
            names.shuffle(rng);
            names.truncate(rng.gen_range(1..=2.min(names.len()).max(1)));
            for expr in names {
                keys.push(OrderKey { expr, desc: rng.gen_bool(0.5) });
            }
            keys
        } else {
            Vec::new()
        };
        Query {
            distinct: false,
            items,
            from: table.name.clone(),
            where_clause,
            group_by: group_cols,
            having,
            order_by,
            limit: if rng.gen_bool(0.3) { Some(rng.gen_range(0..15)) } else { None },
        }
    } else {
        // Plain projection query.
        let star = rng.gen_bool(0.2);
        let items: Vec<SelectItem> = if star {
            vec![SelectItem { expr: Expr::Star, alias: None }]
        } else {
            let mut cols: Vec<usize> = (0..table.columns.len()).collect();
            cols.shuffle(rng);
            cols.truncate(rng.gen_range(1..=3.min(cols.len())));
            cols.into_iter()
                .enumerate()
                .map(|(k, c)| SelectItem {
                    expr: Expr::Column(table.columns[c].clone()),
                    alias: if rng.gen_bool(0.25) { Some(format!("out_{k}")) } else { None },
                })
                .collect()
        };
        let distinct = rng.gen_bool(0.25);
        let order_by = if rng.gen_bool(0.5) {
            let pool: Vec<Expr> = if distinct && !star {
                items
                    .iter()
                    .map(|it| {
                        Expr::Column(it.alias.clone().unwrap_or_else(|| match &it.expr {
                            Expr::Column(c) => c.clone(),
                            _ => unreachable!("plain items are columns"),
                        }))
                    })
                    .collect()
            } else {
                table.columns.iter().map(|c| Expr::Column(c.clone())).collect()
            };
            let mut pool = pool;
            pool.shuffle(rng);
            pool.truncate(rng.gen_range(1..=2.min(pool.len()).max(1)));
            pool.into_iter().map(|expr| OrderKey { expr, desc: rng.gen_bool(0.5) }).collect()
        } else {
            Vec::new()
        };
        Query {
            distinct,
            items,
            from: table.name.clone(),
            where_clause,
            group_by: Vec::new(),
            having: None,
            order_by,
            limit: if rng.gen_bool(0.3) { Some(rng.gen_range(0..20)) } else { None },
        }
    }
}
