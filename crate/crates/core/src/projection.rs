//! Per-level datasets built by rolling attributes up the ontology.
//!
//! Level 1 is the data matrix restricted to the leaf bindings. Every higher
//! level assigns each concept the per-record mean of its children's values
//! on the level below, so a parent weighs each child equally no matter how
//! many leaves sit underneath it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DataMatrix;
use crate::matrix::{CompensatedSum, Matrix};
use crate::ontology::{Ontology, OntologyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("leaf {concept:?} binds column {column:?} which is not in the data")]
    UnboundLeaf { concept: String, column: String },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

/// The data projected onto one ontology level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDataset {
    pub level: usize,
    pub concept_names: Vec<String>,
    pub values: Matrix,
}

impl LevelDataset {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Renders the dataset as CSV with the concept names as header.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.concept_names)
            .expect("writing to a Vec cannot fail");
        for row in self.values.iter_rows() {
            w.write_record(row.iter().map(|v| format_float(*v)))
                .expect("writing to a Vec cannot fail");
        }
        String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().ok(), Some(v));
    s
}

/// Projects `m` onto `level` of `o`.
pub fn project(
    m: &DataMatrix,
    o: &Ontology,
    level: usize,
) -> Result<LevelDataset, ProjectionError> {
    o.level_indices(level)?;
    let mut all = project_up_to(m, o, level)?;
    Ok(all.pop().expect("at least level 1"))
}

/// Projects `m` onto every level `1..=depth`, each level computed from the
/// one below.
pub fn project_all(m: &DataMatrix, o: &Ontology) -> Result<Vec<LevelDataset>, ProjectionError> {
    project_up_to(m, o, o.depth())
}

fn project_up_to(
    m: &DataMatrix,
    o: &Ontology,
    top: usize,
) -> Result<Vec<LevelDataset>, ProjectionError> {
    let leaves = o.level_indices(1)?;
    let mut order = Vec::with_capacity(leaves.len());
    for &i in leaves {
        let c = &o.concepts()[i];
        let column = c.column.as_deref().expect("validated leaves bind a column");
        let j = m
            .column_index(column)
            .ok_or_else(|| ProjectionError::UnboundLeaf {
                concept: c.name.clone(),
                column: column.to_string(),
            })?;
        order.push(j);
    }
    let names = |idx: &[usize]| -> Vec<String> {
        idx.iter().map(|&i| o.concepts()[i].name.clone()).collect()
    };

    let mut out = vec![LevelDataset {
        level: 1,
        concept_names: names(leaves),
        values: m.values().select_columns(&order),
    }];
    for level in 2..=top {
        let below = o.level_indices(level - 1)?;
        let position: HashMap<usize, usize> =
            below.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let here = o.level_indices(level)?;
        let groups: Vec<Vec<usize>> = here
            .iter()
            .map(|&i| o.child_indices(i).iter().map(|c| position[c]).collect())
            .collect();
        let prev = &out.last().expect("level 1 pushed").values;
        let mut values = Matrix::zeros(prev.rows(), groups.len());
        for r in 0..prev.rows() {
            let src = prev.row(r);
            for (dst, group) in values.row_mut(r).iter_mut().zip(&groups) {
                let sum: CompensatedSum = group.iter().map(|&p| src[p]).collect();
                *dst = sum.value() / group.len() as f64;
            }
        }
        out.push(LevelDataset {
            level,
            concept_names: names(here),
            values,
        });
    }
    Ok(out)
}
