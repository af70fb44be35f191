//! SSE per level and the level-to-level improvement percentages.
//!
//! A step improvement is `100 * (prev - next) / prev`; the total is the plain
//! sum of the unrounded steps. Percentages are rounded to two decimals only
//! when rendered as tables or text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::Clustering;
use crate::matrix::{squared_distance, CompensatedSum, Matrix};
use crate::projection::LevelDataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("{assignments} assignments for {records} records")]
    AssignmentLength { assignments: usize, records: usize },
    #[error("level datasets disagree on record count: {expected} vs {got}")]
    RecordCountMismatch { expected: usize, got: usize },
    #[error("SSE at level {level} is zero; improvement undefined")]
    ZeroBaseline { level: usize },
    #[error("baseline SSE must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("no step improvements to aggregate")]
    NoSteps,
    #[error("no levels to evaluate")]
    NoLevels,
    #[error("{clusterings} clusterings for {levels} level datasets")]
    LevelCountMismatch { clusterings: usize, levels: usize },
    #[error("report: {0}")]
    Format(String),
}

/// Which attribute matrix drives the improvement percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SseSpace {
    /// The level-1 attribute matrix, shared by every level.
    #[default]
    Original,
    /// Each level's own projected matrix.
    Level,
}

impl fmt::Display for SseSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SseSpace::Original => "original",
            SseSpace::Level => "level",
        })
    }
}

impl FromStr for SseSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(SseSpace::Original),
            "level" => Ok(SseSpace::Level),
            other => Err(format!(
                "unknown SSE space {other:?} (expected original or level)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub k: usize,
    pub sse_original_space: f64,
    pub sse_level_space: f64,
}

impl LevelResult {
    pub fn sse(&self, space: SseSpace) -> f64 {
        match space {
            SseSpace::Original => self.sse_original_space,
            SseSpace::Level => self.sse_level_space,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub space: SseSpace,
    pub levels: Vec<LevelResult>,
    pub step_improvements: Vec<f64>,
    pub total_improvement: f64,
}

/// Sum of squared distances from each record to the mean of its cluster.
/// Cluster ids must cover `0..k` with no gaps.
pub fn sse(points: &Matrix, assignments: &[usize]) -> Result<f64, EvalError> {
    if assignments.len() != points.rows() {
        return Err(EvalError::AssignmentLength {
            assignments: assignments.len(),
            records: points.rows(),
        });
    }
    let Some(&max) = assignments.iter().max() else {
        return Ok(0.0);
    };
    let k = max + 1;
    let d = points.cols();
    let mut sums = vec![CompensatedSum::new(); k * d];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (acc, &x) in sums[a * d..(a + 1) * d].iter_mut().zip(points.row(i)) {
            acc.add(x);
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(EvalError::EmptyCluster(empty));
    }
    let means: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(idx, s)| s.value() / counts[idx / d] as f64)
        .collect();
    Ok(assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| squared_distance(points.row(i), &means[a * d..(a + 1) * d]))
        .collect::<CompensatedSum>()
        .value())
}

/// Scores one level's clustering in both the level-1 space and the level's
/// own space.
pub fn evaluate_level(
    original: &LevelDataset,
    projected: &LevelDataset,
    c: &Clustering,
) -> Result<LevelResult, EvalError> {
    if original.rows() != projected.rows() {
        return Err(EvalError::RecordCountMismatch {
            expected: original.rows(),
            got: projected.rows(),
        });
    }
    Ok(LevelResult {
        level: projected.level,
        k: c.k(),
        sse_original_space: sse(&original.values, &c.assignments)?,
        sse_level_space: sse(&projected.values, &c.assignments)?,
    })
}

/// Percentage drop from `sse_prev` to `sse_next`; negative means the SSE grew.
pub fn step_improvement(sse_prev: f64, sse_next: f64) -> Result<f64, EvalError> {
    if sse_prev.is_nan() || sse_prev <= 0.0 {
        return Err(EvalError::NonPositiveBaseline(sse_prev));
    }
    Ok(100.0 * (sse_prev - sse_next) / sse_prev)
}

/// Sum of the step improvements.
pub fn total_improvement(steps: &[f64]) -> Result<f64, EvalError> {
    if steps.is_empty() {
        return Err(EvalError::NoSteps);
    }
    Ok(steps.iter().copied().collect::<CompensatedSum>().value())
}

/// Step improvements between consecutive SSE values and their total. A
/// single level gives no steps and a total of zero.
pub fn improvements(sses: &[f64]) -> Result<(Vec<f64>, f64), EvalError> {
    if sses.is_empty() {
        return Err(EvalError::NoLevels);
    }
    let steps = sses
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            step_improvement(w[0], w[1]).map_err(|_| EvalError::ZeroBaseline { level: i + 1 })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let total = if steps.is_empty() {
        0.0
    } else {
        total_improvement(&steps)?
    };
    Ok((steps, total))
}

/// Evaluates one clustering per level (ascending) and derives the
/// improvements in the chosen space. `levels[0]` must be the level-1 dataset.
pub fn build_report(
    dataset: &str,
    clusterings: &[Clustering],
    levels: &[LevelDataset],
    space: SseSpace,
) -> Result<EvaluationReport, EvalError> {
    if clusterings.len() != levels.len() {
        return Err(EvalError::LevelCountMismatch {
            clusterings: clusterings.len(),
            levels: levels.len(),
        });
    }
    let original = levels.first().ok_or(EvalError::NoLevels)?;
    let results = levels
        .iter()
        .zip(clusterings)
        .map(|(level, c)| evaluate_level(original, level, c))
        .collect::<Result<Vec<_>, _>>()?;
    let sses: Vec<f64> = results.iter().map(|r| r.sse(space)).collect();
    let (step_improvements, total_improvement) = improvements(&sses).map_err(|e| match e {
        EvalError::ZeroBaseline { level } => EvalError::ZeroBaseline {
            level: results[level - 1].level,
        },
        other => other,
    })?;
    Ok(EvaluationReport {
        dataset: dataset.to_string(),
        space,
        levels: results,
        step_improvements,
        total_improvement,
    })
}

fn pct(v: f64) -> String {
    // Avoid printing "-0.00".
    let r = (v * 100.0).round() / 100.0;
    format!("{:.2}", if r == 0.0 { 0.0 } else { r })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Format(e.to_string()))
    }

    fn step_labels(&self) -> Vec<String> {
        self.levels
            .windows(2)
            .map(|w| format!("L{} to L{}", w[0].level, w[1].level))
            .collect()
    }

    /// Per-level SSE in both spaces.
    pub fn sse_table_csv(&self) -> String {
        let mut out = String::from("level,k,sse_original_space,sse_level_space\n");
        for r in &self.levels {
            out.push_str(&format!(
                "L{},{},{},{}\n",
                r.level, r.k, r.sse_original_space, r.sse_level_space
            ));
        }
        out
    }

    /// Step and total improvements, rounded to two decimals.
    pub fn improvement_table_csv(&self) -> String {
        let mut out = String::from("step,improvement_percent\n");
        for (label, v) in self.step_labels().iter().zip(&self.step_improvements) {
            out.push_str(&format!("{label},{}\n", pct(*v)));
        }
        out.push_str(&format!("Total,{}\n", pct(self.total_improvement)));
        out
    }

    /// Number of clusters per level.
    pub fn cluster_count_csv(&self) -> String {
        let mut out = String::from("level,clusters\n");
        for r in &self.levels {
            out.push_str(&format!("L{},{}\n", r.level, r.k));
        }
        out
    }

    /// Human-readable summary for the terminal.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "dataset: {}\nimprovement space: {}\n\n{:<6}{:>6}{:>20}{:>20}\n",
            self.dataset, self.space, "level", "k", "SSE (original)", "SSE (level)"
        );
        for r in &self.levels {
            out.push_str(&format!(
                "{:<6}{:>6}{:>20.4}{:>20.4}\n",
                format!("L{}", r.level),
                r.k,
                r.sse_original_space,
                r.sse_level_space
            ));
        }
        out.push_str("\nimprovement (%)\n");
        for (label, v) in self.step_labels().iter().zip(&self.step_improvements) {
            out.push_str(&format!("{label:<12}{:>10}\n", pct(*v)));
        }
        out.push_str(&format!(
            "{:<12}{:>10}\n",
            "Total",
            pct(self.total_improvement)
        ));
        out
    }
}
