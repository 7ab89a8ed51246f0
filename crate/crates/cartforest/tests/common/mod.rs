//! Shared generators for integration tests.
#![allow(dead_code)] // each test binary uses its own subset

use cartforest::data::{Column, ColumnKind, Dataset, Target};
use cartforest::rng::{rng_from, Rng};
use rand::Rng as _;

pub fn rng(seed: u64) -> Rng {
    rng_from(seed, &[0x7e57])
}

/// Random regression dataset: `p` numeric features on a small integer grid
/// (so duplicate values and ties occur), response linear in the first
/// feature plus noise.
pub fn random_regression(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let columns: Vec<Column> = (0..p)
        .map(|j| Column {
            name: format!("x{j}"),
            kind: ColumnKind::Numeric,
            values: (0..n).map(|_| r.random_range(0..12) as f64).collect(),
            missing: vec![false; n],
        })
        .collect();
    let values: Vec<f64> = (0..n)
        .map(|i| 2.0 * columns[0].values[i] + r.random_range(-3.0..3.0))
        .collect();
    Dataset::new(
        columns,
        Target::Regression {
            name: "y".into(),
            values,
        },
    )
    .unwrap()
}

/// Random binary classification dataset; the first feature carries signal.
pub fn random_binary(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let columns: Vec<Column> = (0..p)
        .map(|j| Column {
            name: format!("x{j}"),
            kind: ColumnKind::Numeric,
            values: (0..n).map(|_| r.random_range(0..10) as f64).collect(),
            missing: vec![false; n],
        })
        .collect();
    let codes: Vec<u32> = (0..n)
        .map(|i| {
            let noisy = columns[0].values[i] + r.random_range(-2.0..2.0);
            u32::from(noisy > 4.5)
        })
        .collect();
    Dataset::new(
        columns,
        Target::Classification {
            name: "y".into(),
            codes,
            classes: vec!["no".into(), "yes".into()],
        },
    )
    .unwrap()
}

/// Dataset with explicit columns and a regression target.
pub fn reg_ds(cols: Vec<(&str, Vec<f64>)>, y: Vec<f64>) -> Dataset {
    let n = y.len();
    Dataset::new(
        cols.into_iter()
            .map(|(name, values)| Column {
                name: name.into(),
                kind: ColumnKind::Numeric,
                values,
                missing: vec![false; n],
            })
            .collect(),
        Target::Regression {
            name: "y".into(),
            values: y,
        },
    )
    .unwrap()
}

/// Dataset with explicit columns and a binary classification target.
pub fn cls_ds(cols: Vec<(&str, Vec<f64>)>, codes: Vec<u32>) -> Dataset {
    let n = codes.len();
    Dataset::new(
        cols.into_iter()
            .map(|(name, values)| Column {
                name: name.into(),
                kind: ColumnKind::Numeric,
                values,
                missing: vec![false; n],
            })
            .collect(),
        Target::Classification {
            name: "y".into(),
            codes,
            classes: vec!["a".into(), "b".into()],
        },
    )
    .unwrap()
}

/// Replaces selected cells of a feature column with missing values.
pub fn with_missing(ds: &Dataset, var: usize, rows: &[usize]) -> Dataset {
    let mut columns: Vec<Column> = ds.columns().to_vec();
    for &r in rows {
        columns[var].missing[r] = true;
    }
    Dataset::new(columns, ds.target().clone()).unwrap()
}
