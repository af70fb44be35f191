//! CSV ingestion with declared column roles, and min-max normalization.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lineformat::{quote_if_needed, split_fields, Field};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Feature,
    #[serde(rename = "id")]
    Identifier,
    Class,
    Excluded,
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnRole::Feature => "feature",
            ColumnRole::Identifier => "id",
            ColumnRole::Class => "class",
            ColumnRole::Excluded => "excluded",
        })
    }
}

impl FromStr for ColumnRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "feature" => Ok(ColumnRole::Feature),
            "id" | "identifier" => Ok(ColumnRole::Identifier),
            "class" => Ok(ColumnRole::Class),
            "excluded" => Ok(ColumnRole::Excluded),
            other => Err(format!(
                "unknown role {other:?} (expected feature, id, class or excluded)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("input is empty")]
    Empty,
    #[error("csv: {0}")]
    Csv(String),
    #[error("duplicate header column {0:?}")]
    DuplicateHeader(String),
    #[error("schema line {line}: {message}")]
    SchemaSyntax { line: usize, message: String },
    #[error("schema names column {0:?} which is not in the header")]
    UnknownSchemaColumn(String),
    #[error("no feature columns survive ingestion")]
    NoFeatureColumns,
    #[error("all {rows_read} rows were dropped for missing or unparseable feature values")]
    NoRowsSurvive { rows_read: usize },
    #[error("feature column {0:?} has no numeric values; declare its role in the schema")]
    NonNumericColumn(String),
    #[error("column {0:?} is constant and cannot be normalized")]
    ConstantColumn(String),
    #[error("column {0:?} has a non-finite value range")]
    NonFiniteRange(String),
    #[error("matrix shape: {0}")]
    Shape(String),
}

/// Column roles keyed by header name. Columns not listed are features.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    roles: Vec<(String, ColumnRole)>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the line format `column<TAB>NAME<TAB>role=<feature|id|class|excluded>`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut schema = Schema::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.split('\n').enumerate() {
            let line = idx + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |message: String| DataError::SchemaSyntax { line, message };
            let fields = split_fields(raw).map_err(err)?;
            let [Field {
                key: None,
                value: tag,
                ..
            }, Field {
                key: None,
                value: name,
                ..
            }, Field {
                key: Some(key),
                value: role,
                ..
            }] = fields.as_slice()
            else {
                return Err(err("expected `column<TAB>NAME<TAB>role=ROLE`".into()));
            };
            if tag != "column" || key != "role" || name.is_empty() {
                return Err(err("expected `column<TAB>NAME<TAB>role=ROLE`".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(err(format!("column {name:?} listed twice")));
            }
            schema
                .roles
                .push((name.clone(), role.parse().map_err(err)?));
        }
        Ok(schema)
    }

    pub fn with(mut self, column: impl Into<String>, role: ColumnRole) -> Self {
        let column = column.into();
        self.roles.retain(|(c, _)| *c != column);
        self.roles.push((column, role));
        self
    }

    pub fn role_of(&self, column: &str) -> ColumnRole {
        self.roles
            .iter()
            .find(|(c, _)| c == column)
            .map(|(_, r)| *r)
            .unwrap_or(ColumnRole::Feature)
    }

    pub fn entries(&self) -> &[(String, ColumnRole)] {
        &self.roles
    }

    pub fn to_text(&self) -> String {
        self.roles
            .iter()
            .map(|(c, r)| format!("column\t{}\trole={r}\n", quote_if_needed(c, false)))
            .collect()
    }
}

/// `n × d` feature values with their column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    column_names: Vec<String>,
    values: Matrix,
    normalized: bool,
}

impl DataMatrix {
    /// Builds an un-normalized matrix. Requires `n, d >= 1`, unique column
    /// names and finite values.
    pub fn new(column_names: Vec<String>, values: Matrix) -> Result<Self, DataError> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(DataError::Shape(format!(
                "need at least one row and one column, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if column_names.len() != values.cols() {
            return Err(DataError::Shape(format!(
                "{} names for {} columns",
                column_names.len(),
                values.cols()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = column_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(DataError::DuplicateHeader(dup.clone()));
        }
        if !values.is_finite() {
            return Err(DataError::Shape("non-finite value".into()));
        }
        Ok(Self {
            column_names,
            values,
            normalized: false,
        })
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExclusionReason {
    Role(ColumnRole),
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedColumn {
    pub name: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub columns_excluded: Vec<ExcludedColumn>,
    pub warnings: Vec<String>,
}

fn is_missing(token: &str) -> bool {
    token.is_empty()
        || token == "?"
        || ["na", "n/a", "nan", "null"]
            .iter()
            .any(|m| token.eq_ignore_ascii_case(m))
}

/// Reads a CSV with a header row, keeps the feature columns in header order,
/// drops rows with a missing or unparseable feature value, and excludes
/// features that are constant across the surviving rows.
pub fn load_csv(text: &str, schema: &Schema) -> Result<(DataMatrix, IngestReport), DataError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if text.trim().is_empty() {
        return Err(DataError::Empty);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(DataError::DuplicateHeader(dup.clone()));
    }
    for (name, _) in schema.entries() {
        if !seen.contains(name.as_str()) {
            return Err(DataError::UnknownSchemaColumn(name.clone()));
        }
    }

    let mut report = IngestReport::default();
    let mut features = Vec::new();
    for (j, name) in header.iter().enumerate() {
        match schema.role_of(name) {
            ColumnRole::Feature => features.push(j),
            role => report.columns_excluded.push(ExcludedColumn {
                name: name.clone(),
                reason: ExclusionReason::Role(role),
            }),
        }
    }
    if features.is_empty() {
        return Err(DataError::NoFeatureColumns);
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut parsed_any = vec![false; features.len()];
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        report.rows_read += 1;
        let mut row = Vec::with_capacity(features.len());
        for (slot, &j) in features.iter().enumerate() {
            let token = record.get(j).unwrap_or("");
            if is_missing(token) {
                continue;
            }
            match token.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    parsed_any[slot] = true;
                    row.push(v);
                }
                _ => {}
            }
        }
        if row.len() == features.len() {
            rows.push(row);
        } else {
            report.rows_dropped += 1;
        }
    }
    if report.rows_read == 0 {
        return Err(DataError::Empty);
    }
    if let Some(slot) = parsed_any.iter().position(|p| !p) {
        return Err(DataError::NonNumericColumn(header[features[slot]].clone()));
    }
    if rows.is_empty() {
        return Err(DataError::NoRowsSurvive {
            rows_read: report.rows_read,
        });
    }

    let mut keep = Vec::new();
    for (slot, &j) in features.iter().enumerate() {
        let first = rows[0][slot];
        if rows.iter().all(|r| r[slot] == first) {
            let msg = format!("column {:?} is constant ({first}); excluded", header[j]);
            warn!("{msg}");
            report.warnings.push(msg);
            report.columns_excluded.push(ExcludedColumn {
                name: header[j].clone(),
                reason: ExclusionReason::Constant,
            });
        } else {
            keep.push(slot);
        }
    }
    if keep.is_empty() {
        return Err(DataError::NoFeatureColumns);
    }
    // Report exclusions in header order regardless of why they happened.
    let order: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    report
        .columns_excluded
        .sort_by_key(|c| order[c.name.as_str()]);

    for &slot in &keep {
        if is_sequential(rows.iter().map(|r| r[slot])) {
            let msg = format!(
                "column {:?} is a strictly sequential integer run; consider role=id",
                header[features[slot]]
            );
            warn!("{msg}");
            report.warnings.push(msg);
        }
    }

    let names = keep
        .iter()
        .map(|&slot| header[features[slot]].clone())
        .collect();
    let data: Vec<f64> = rows
        .iter()
        .flat_map(|r| keep.iter().map(move |&slot| r[slot]))
        .collect();
    let values = Matrix::new(rows.len(), keep.len(), data).expect("shape computed above");
    Ok((DataMatrix::new(names, values)?, report))
}

fn is_sequential(mut values: impl Iterator<Item = f64>) -> bool {
    let Some(mut prev) = values.next() else {
        return false;
    };
    if prev.fract() != 0.0 {
        return false;
    }
    let mut len = 1;
    for v in values {
        if v != prev + 1.0 {
            return false;
        }
        prev = v;
        len += 1;
    }
    len >= 3
}

/// Min-max rescales every column onto `[0, 1]`. Column extremes map to
/// exactly 0 and 1. Normalizing an already normalized matrix returns it
/// unchanged.
pub fn normalize(m: &DataMatrix) -> Result<DataMatrix, DataError> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = Matrix::zeros(rows, cols);
    for j in 0..cols {
        let (min, max) = m
            .values
            .column(j)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if min == max {
            return Err(DataError::ConstantColumn(m.column_names[j].clone()));
        }
        let range = max - min;
        if !range.is_finite() {
            return Err(DataError::NonFiniteRange(m.column_names[j].clone()));
        }
        for i in 0..rows {
            let v = m.values.get(i, j);
            let scaled = if v == min {
                0.0
            } else if v == max {
                1.0
            } else {
                ((v - min) / range).clamp(0.0, 1.0)
            };
            out.set(i, j, scaled);
        }
    }
    Ok(DataMatrix {
        column_names: m.column_names.clone(),
        values: out,
        normalized: true,
    })
}
