//! The SQL engine against the brute-force row evaluator: 1200 seeded
//! random (table, query) pairs must agree exactly. Queries with ORDER BY
//! must match row for row; without it, as multisets; errors must occur on
//! both sides together.

use std::collections::HashMap;
use std::time::Instant;

use meqa::sql::{execute, print_sql, Value};
use meqa::testkit::{naive_execute, random_query, random_table, rng};

/// Float-equal rows hash differently when one side carries -0.0; normalize
/// before building multiset keys.
fn canonical(rows: &[Vec<Value>]) -> Vec<Vec<Value>> {
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|v| match v {
                    Value::Decimal(d) if *d == 0.0 => Value::Decimal(0.0),
                    other => other.clone(),
                })
                .collect()
        })
        .collect()
}

fn multiset(rows: &[Vec<Value>]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for row in canonical(rows) {
        *counts.entry(format!("{row:?}")).or_insert(0) += 1;
    }
    counts
}

#[test]
fn engine_matches_brute_force_oracle() {
    let started = Instant::now();
    let mut error_agreements = 0usize;
    let mut compared = 0usize;
    for seed in 0..1200u64 {
        let mut r = rng(seed);
        let generated = random_table(&mut r);
        let query = random_query(&mut r, &generated);
        let sql = print_sql(&query);

        let fast = execute(&query, &generated.table);
        let slow = naive_execute(&query, &generated.table);
        match (fast, slow) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.columns, b.columns, "columns differ\nseed {seed}\n{sql}");
                if query.order_by.is_empty() {
                    assert_eq!(
                        multiset(&a.rows),
                        multiset(&b.rows),
                        "row multisets differ\nseed {seed}\n{sql}"
                    );
                } else {
                    assert_eq!(
                        canonical(&a.rows),
                        canonical(&b.rows),
                        "ordered rows differ\nseed {seed}\n{sql}"
                    );
                }
                compared += 1;
            }
            (Err(_), Err(_)) => error_agreements += 1,
            (Ok(a), Err(e)) => {
                panic!("engine succeeded, oracle failed: {e}\nseed {seed}\n{sql}\n{a:?}")
            }
            (Err(e), Ok(b)) => {
                panic!("oracle succeeded, engine failed: {e}\nseed {seed}\n{sql}\n{b:?}")
            }
        }
    }
    // The generator leans heavily toward valid queries; make sure the run
    // exercised real successes and that agreement was not all-error.
    assert!(compared >= 900, "only {compared} successful comparisons");
    assert!(error_agreements < 300, "{error_agreements} error cases is too many");
    assert!(started.elapsed().as_secs() < 60, "equivalence run too slow");
}
