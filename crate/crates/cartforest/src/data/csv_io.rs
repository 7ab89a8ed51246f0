//! CSV ingestion and emission.
//!
//! Files are RFC-4180-style: first row is the header, UTF-8, `.` decimal
//! separator, empty field = missing. A schema declares every column as
//! `name:numeric` or `name:categorical`, one per line (`#` starts a comment).
//! Loading and re-saving a dataset reproduces it exactly: numeric cells are
//! written with shortest round-trip formatting and categorical cells by
//! level name.

use super::{Column, ColumnKind, Dataset, Target};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

/// Declared kind for one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaEntry {
    Numeric,
    Categorical,
}

/// Parses schema text: one `name:kind` per line.
pub fn parse_schema(text: &str) -> Result<Vec<(String, SchemaEntry)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.split_once(':').ok_or_else(|| {
            Error::Schema(format!("line {}: expected 'name:kind'", lineno + 1))
        })?;
        let entry = match kind.trim() {
            "numeric" => SchemaEntry::Numeric,
            "categorical" => SchemaEntry::Categorical,
            other => {
                return Err(Error::Schema(format!(
                    "line {}: unknown kind '{other}' (expected numeric|categorical)",
                    lineno + 1
                )))
            }
        };
        out.push((name.trim().to_string(), entry));
    }
    if out.is_empty() {
        return Err(Error::Schema("schema declares no columns".into()));
    }
    Ok(out)
}

pub fn read_schema_file(path: &Path) -> Result<Vec<(String, SchemaEntry)>> {
    parse_schema(&std::fs::read_to_string(path)?)
}

pub fn save_schema(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in ds.columns() {
        let kind = if c.kind.is_categorical() {
            "categorical"
        } else {
            "numeric"
        };
        out.push_str(&format!("{}:{}\n", c.name, kind));
    }
    let target_kind = match ds.target() {
        Target::Regression { .. } => "numeric",
        Target::Classification { .. } => "categorical",
    };
    out.push_str(&format!("{}:{}\n", ds.target().name(), target_kind));
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a CSV file against a schema.
///
/// Every header column must be declared in the schema and vice versa; the
/// target column is identified by name and must be free of missing values.
/// Categorical levels (and classification classes) are coded by first
/// appearance in the file.
pub fn load_csv(
    path: &Path,
    schema: &[(String, SchemaEntry)],
    target_column: &str,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, schema, target_column)
}

pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    schema: &[(String, SchemaEntry)],
    target_column: &str,
) -> Result<Dataset> {
    let schema_map: HashMap<&str, SchemaEntry> =
        schema.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    if schema_map.len() != schema.len() {
        return Err(Error::Schema("duplicate column in schema".into()));
    }
    let target_kind = *schema_map
        .get(target_column)
        .ok_or_else(|| Error::Schema(format!("target column '{target_column}' not in schema")))?;

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    for h in &headers {
        if !schema_map.contains_key(h.as_str()) {
            return Err(Error::Schema(format!("column '{h}' not declared in schema")));
        }
    }
    for (name, _) in schema {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::Schema(format!("schema column '{name}' not in file")));
        }
    }
    let target_pos = headers
        .iter()
        .position(|h| h == target_column)
        .expect("target presence checked above");

    struct RawCol {
        name: String,
        entry: SchemaEntry,
        values: Vec<f64>,
        missing: Vec<bool>,
        levels: Vec<String>,
        level_codes: HashMap<String, u32>,
    }
    let mut cols: Vec<RawCol> = headers
        .iter()
        .map(|h| RawCol {
            name: h.clone(),
            entry: schema_map[h.as_str()],
            values: Vec::new(),
            missing: Vec::new(),
            levels: Vec::new(),
            level_codes: HashMap::new(),
        })
        .collect();
    let mut y_num: Vec<f64> = Vec::new();
    let mut y_codes: Vec<u32> = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    let mut class_codes: HashMap<String, u32> = HashMap::new();

    for (row_idx, record) in rdr.records().enumerate() {
        let record =
            record.map_err(|e| Error::Schema(format!("row {}: {e}", row_idx + 1)))?;
        if record.len() != headers.len() {
            return Err(Error::Schema(format!(
                "row {}: {} fields, expected {}",
                row_idx + 1,
                record.len(),
                headers.len()
            )));
        }
        for (pos, field) in record.iter().enumerate() {
            let field = field.trim();
            if pos == target_pos {
                if field.is_empty() {
                    return Err(Error::TargetMissing { row: row_idx + 1 });
                }
                match target_kind {
                    SchemaEntry::Numeric => {
                        let v: f64 = field.parse().map_err(|_| Error::Parse {
                            row: row_idx + 1,
                            column: headers[pos].clone(),
                            message: format!("'{field}' is not numeric"),
                        })?;
                        y_num.push(v);
                    }
                    SchemaEntry::Categorical => {
                        let code = *class_codes.entry(field.to_string()).or_insert_with(|| {
                            classes.push(field.to_string());
                            (classes.len() - 1) as u32
                        });
                        y_codes.push(code);
                    }
                }
                continue;
            }
            let col = &mut cols[pos];
            if field.is_empty() {
                col.values.push(0.0);
                col.missing.push(true);
                continue;
            }
            match col.entry {
                SchemaEntry::Numeric => {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        row: row_idx + 1,
                        column: col.name.clone(),
                        message: format!("'{field}' is not numeric"),
                    })?;
                    col.values.push(v);
                    col.missing.push(false);
                }
                SchemaEntry::Categorical => {
                    let code = *col.level_codes.entry(field.to_string()).or_insert_with(|| {
                        col.levels.push(field.to_string());
                        (col.levels.len() - 1) as u32
                    });
                    col.values.push(code as f64);
                    col.missing.push(false);
                }
            }
        }
    }

    let columns: Vec<Column> = cols
        .into_iter()
        .enumerate()
        .filter(|(pos, _)| *pos != target_pos)
        .map(|(_, c)| Column {
            name: c.name,
            kind: match c.entry {
                SchemaEntry::Numeric => ColumnKind::Numeric,
                SchemaEntry::Categorical => ColumnKind::Categorical { levels: c.levels },
            },
            values: c.values,
            missing: c.missing,
        })
        .collect();
    let target = match target_kind {
        SchemaEntry::Numeric => Target::Regression {
            name: target_column.to_string(),
            values: y_num,
        },
        SchemaEntry::Categorical => Target::Classification {
            name: target_column.to_string(),
            codes: y_codes,
            classes,
        },
    };
    Dataset::new(columns, target)
}

/// Shortest decimal rendering that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes the dataset back to CSV (features in column order, target last).
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header: Vec<&str> = ds.columns().iter().map(|c| c.name.as_str()).collect();
    header.push(ds.target().name());
    writeln!(w, "{}", quote_row(&header))?;
    for i in 0..ds.n_rows() {
        let mut fields: Vec<String> = Vec::with_capacity(ds.n_columns() + 1);
        for c in ds.columns() {
            fields.push(match c.get(i) {
                None => String::new(),
                Some(v) => match &c.kind {
                    ColumnKind::Numeric => fmt_f64(v),
                    ColumnKind::Categorical { levels } => levels[v as usize].clone(),
                },
            });
        }
        fields.push(match ds.target() {
            Target::Regression { values, .. } => fmt_f64(values[i]),
            Target::Classification { codes, classes, .. } => classes[codes[i] as usize].clone(),
        });
        let refs: Vec<&str> = fields.iter().map(|s| s.as_str()).collect();
        writeln!(w, "{}", quote_row(&refs))?;
    }
    w.flush()?;
    Ok(())
}

fn quote_row(fields: &[&str]) -> String {
    fields
        .iter()
        .map(|f| {
            if f.contains(',') || f.contains('"') || f.contains('\n') {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema3() -> Vec<(String, SchemaEntry)> {
        vec![
            ("a".into(), SchemaEntry::Numeric),
            ("color".into(), SchemaEntry::Categorical),
            ("y".into(), SchemaEntry::Categorical),
        ]
    }

    #[test]
    fn loads_mixed_columns_with_missing() {
        let csv = "a,color,y\n1.5,red,yes\n,blue,no\n2.25,red,yes\n";
        let ds = load_csv_reader(csv.as_bytes(), &schema3(), "y").unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_columns(), 2);
        assert_eq!(ds.feature(0, 0), Some(1.5));
        assert_eq!(ds.feature(1, 0), None);
        // first-appearance coding
        assert_eq!(ds.feature(0, 1), Some(0.0));
        assert_eq!(ds.feature(1, 1), Some(1.0));
        assert_eq!(ds.task().n_classes(), 2);
        assert_eq!(ds.y_class(0), 0);
        assert_eq!(ds.y_class(1), 1);
    }

    #[test]
    fn header_only_is_degenerate() {
        let csv = "a,color,y\n";
        let ds = load_csv_reader(csv.as_bytes(), &schema3(), "y").unwrap();
        assert_eq!(ds.n_rows(), 0);
        assert!(ds.is_degenerate());
    }

    #[test]
    fn bad_numeric_cell_is_parse_error() {
        let csv = "a,color,y\nabc,red,yes\n";
        match load_csv_reader(csv.as_bytes(), &schema3(), "y") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "a");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn missing_target_cell_is_rejected() {
        let csv = "a,color,y\n1.0,red,\n";
        match load_csv_reader(csv.as_bytes(), &schema3(), "y") {
            Err(Error::TargetMissing { row }) => assert_eq!(row, 1),
            other => panic!("expected TargetMissing, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_column_is_schema_error() {
        let csv = "a,b,y\n1,2,yes\n";
        assert!(matches!(
            load_csv_reader(csv.as_bytes(), &schema3(), "y"),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn schema_text_round_trip() {
        let entries = parse_schema("a:numeric\n# comment\ncolor:categorical\ny:categorical\n").unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0], ("a".to_string(), SchemaEntry::Numeric));
        assert!(parse_schema("a=numeric\n").is_err());
        assert!(parse_schema("a:float\n").is_err());
    }
}
