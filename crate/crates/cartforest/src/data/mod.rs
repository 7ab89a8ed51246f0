//! Columnar dataset representation and resampling primitives.
//!
//! A [`Dataset`] is an immutable feature table (numeric and categorical
//! columns) plus a regression or classification target. Categorical levels
//! are coded as dense integers in first-appearance order; missing feature
//! cells are tracked by an explicit per-cell mask rather than sentinel
//! values. Targets never have missing values.

mod csv_io;
mod resample;

pub use csv_io::{load_csv, parse_schema, read_schema_file, save_csv, save_schema, SchemaEntry};
pub use resample::{draw_resample, ResampleKind, ResamplePlan};

use crate::error::{Error, Result};
use crate::rng::{rng_from, tags};
use rand::seq::SliceRandom;

/// Kind of a feature column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    /// Levels are kept in first-appearance order; codes are dense in
    /// `0..levels.len()`.
    Categorical { levels: Vec<String> },
}

impl ColumnKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnKind::Categorical { .. })
    }

    /// Number of levels for categorical columns, 0 for numeric.
    pub fn cardinality(&self) -> usize {
        match self {
            ColumnKind::Numeric => 0,
            ColumnKind::Categorical { levels } => levels.len(),
        }
    }
}

/// One feature column. Categorical values hold the level code as `f64`
/// (codes are exact small integers, so the representation is lossless).
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl Column {
    /// Observed (non-missing) value at `row`.
    #[inline]
    pub fn get(&self, row: usize) -> Option<f64> {
        if self.missing[row] {
            None
        } else {
            Some(self.values[row])
        }
    }
}

/// Prediction target.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Regression {
        name: String,
        values: Vec<f64>,
    },
    /// Class codes are dense in `0..classes.len()`, first-appearance order.
    Classification {
        name: String,
        codes: Vec<u32>,
        classes: Vec<String>,
    },
}

impl Target {
    pub fn name(&self) -> &str {
        match self {
            Target::Regression { name, .. } => name,
            Target::Classification { name, .. } => name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Target::Regression { values, .. } => values.len(),
            Target::Classification { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Learning task, derived from the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

impl Task {
    pub fn is_classification(&self) -> bool {
        matches!(self, Task::Classification { .. })
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Task::Regression => 0,
            Task::Classification { n_classes } => *n_classes,
        }
    }
}

/// Immutable columnar dataset. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    columns: Vec<Column>,
    target: Target,
}

impl Dataset {
    /// Assembles a dataset from parts, validating the documented invariants:
    /// all columns have length `n`, class codes are dense, the target has no
    /// missing values (missingness is not representable in [`Target`]), and
    /// classification targets have at least two classes when any rows exist.
    pub fn new(columns: Vec<Column>, target: Target) -> Result<Self> {
        let n = target.len();
        for c in &columns {
            if c.values.len() != n || c.missing.len() != n {
                return Err(Error::Schema(format!(
                    "column '{}' has {} values for {} rows",
                    c.name,
                    c.values.len(),
                    n
                )));
            }
            if let ColumnKind::Categorical { levels } = &c.kind {
                let card = levels.len() as f64;
                for (i, (&v, &m)) in c.values.iter().zip(&c.missing).enumerate() {
                    if !m && (v < 0.0 || v >= card.max(1.0) || v.fract() != 0.0) {
                        return Err(Error::Schema(format!(
                            "column '{}' row {i}: code {v} out of 0..{}",
                            c.name,
                            levels.len()
                        )));
                    }
                }
            }
        }
        if let Target::Classification { codes, classes, .. } = &target {
            if n > 0 && classes.len() < 2 {
                return Err(Error::Schema(format!(
                    "classification target '{}' has {} class(es); need at least 2",
                    target.name(),
                    classes.len()
                )));
            }
            if codes.iter().any(|&c| c as usize >= classes.len()) {
                return Err(Error::Schema("class code out of range".into()));
            }
        }
        Ok(Dataset { n, columns, target })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// A dataset with no rows is accepted at load time but flagged so that
    /// downstream operations can refuse it early.
    pub fn is_degenerate(&self) -> bool {
        self.n == 0
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn task(&self) -> Task {
        match &self.target {
            Target::Regression { .. } => Task::Regression,
            Target::Classification { classes, .. } => Task::Classification {
                n_classes: classes.len(),
            },
        }
    }

    /// Regression response at `row`. Panics on classification targets.
    #[inline]
    pub fn y_num(&self, row: usize) -> f64 {
        match &self.target {
            Target::Regression { values, .. } => values[row],
            _ => panic!("y_num on classification target"),
        }
    }

    /// Class code at `row`. Panics on regression targets.
    #[inline]
    pub fn y_class(&self, row: usize) -> u32 {
        match &self.target {
            Target::Classification { codes, .. } => codes[row],
            _ => panic!("y_class on regression target"),
        }
    }

    /// Observed feature value (numeric value or categorical code).
    #[inline]
    pub fn feature(&self, row: usize, j: usize) -> Option<f64> {
        self.columns[j].get(row)
    }

    /// New dataset holding `rows` (in the given order).
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: c.kind.clone(),
                values: rows.iter().map(|&i| c.values[i]).collect(),
                missing: rows.iter().map(|&i| c.missing[i]).collect(),
            })
            .collect();
        let target = match &self.target {
            Target::Regression { name, values } => Target::Regression {
                name: name.clone(),
                values: rows.iter().map(|&i| values[i]).collect(),
            },
            Target::Classification {
                name,
                codes,
                classes,
            } => Target::Classification {
                name: name.clone(),
                codes: rows.iter().map(|&i| codes[i]).collect(),
                classes: classes.clone(),
            },
        };
        Dataset {
            n: rows.len(),
            columns,
            target,
        }
    }

    /// New dataset restricted to the feature columns in `keep` (in the given
    /// order). The target is unchanged.
    pub fn select_columns(&self, keep: &[usize]) -> Dataset {
        Dataset {
            n: self.n,
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            target: self.target.clone(),
        }
    }

    /// True when both datasets have the same feature schema (names, kinds)
    /// and target declaration, i.e. models can be exchanged between them.
    pub fn schema_matches(&self, other: &Dataset) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
            && match (&self.target, &other.target) {
                (Target::Regression { name: a, .. }, Target::Regression { name: b, .. }) => a == b,
                (
                    Target::Classification {
                        name: a,
                        classes: ca,
                        ..
                    },
                    Target::Classification {
                        name: b,
                        classes: cb,
                        ..
                    },
                ) => a == b && ca == cb,
                _ => false,
            }
    }

    /// Structural + content fingerprint. Two datasets with the same
    /// fingerprint are treated as the same training data (used to decide
    /// whether merged forests retain a meaningful OOB estimate).
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write_usize(self.n);
        h.write_usize(self.columns.len());
        for c in &self.columns {
            h.write_bytes(c.name.as_bytes());
            match &c.kind {
                ColumnKind::Numeric => h.write_u8(0),
                ColumnKind::Categorical { levels } => {
                    h.write_u8(1);
                    for l in levels {
                        h.write_bytes(l.as_bytes());
                    }
                }
            }
            for (&v, &m) in c.values.iter().zip(&c.missing) {
                h.write_u64(if m { u64::MAX } else { v.to_bits() });
            }
        }
        h.write_bytes(self.target.name().as_bytes());
        match &self.target {
            Target::Regression { values, .. } => {
                h.write_u8(2);
                for &v in values {
                    h.write_u64(v.to_bits());
                }
            }
            Target::Classification { codes, classes, .. } => {
                h.write_u8(3);
                for c in classes {
                    h.write_bytes(c.as_bytes());
                }
                for &c in codes {
                    h.write_u64(c as u64);
                }
            }
        }
        h.finish()
    }
}

/// FNV-1a, enough for dataset identity checks.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write_u8(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
    }
    fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u8(b);
        }
        self.write_u8(0xff);
    }
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.write_u8(b);
        }
    }
    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Uniformly random partition of the rows into `n_train` training rows and
/// the rest. Row order within each part preserves the original order, and the
/// partition is a pure function of `(n, n_train, seed)`.
pub fn split_train_test(ds: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.n_rows();
    if n_train == 0 || n_train >= n {
        return Err(Error::Argument(format!(
            "n_train must be in 1..{n}, got {n_train}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed, &[tags::FOLDS, n as u64]));
    let mut train: Vec<usize> = order[..n_train].to_vec();
    let mut test: Vec<usize> = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}
