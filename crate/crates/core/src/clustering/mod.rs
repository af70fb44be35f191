//! Clustering of level datasets: Lloyd k-means and a genetic/k-means hybrid
//! that picks the number of clusters itself.

mod fitness;
mod genetic;
mod kmeans;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

pub use fitness::{davies_bouldin, fitness};
pub use genetic::{genetic_cluster, GaConfig, GaRun};
pub use kmeans::{kmeans, kmeans_traced, LloydRun};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("dataset has no records")]
    NoRecords,
    #[error("data contains non-finite values")]
    NonFinite,
    #[error("k = {k} exceeds the number of records n = {n}")]
    KExceedsN { k: usize, n: usize },
    #[error("need at least one initial centroid")]
    NoCentroids,
    #[error("centroids have {got} dimensions, data has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial centroids {0} and {1} coincide")]
    DuplicateInitialCentroids(usize, usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("fitness needs k >= 2, got {0}")]
    TooFewClusters(usize),
    #[error("n = {n} records is fewer than k_min = {k_min}")]
    TooFewRecords { n: usize, k_min: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A finalized partition: every cluster is non-empty and every centroid is
/// the mean of its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// CSV with one `record,cluster` line per record.
    pub fn assignments_csv(&self) -> String {
        let mut out = String::from("record,cluster\n");
        for (i, a) in self.assignments.iter().enumerate() {
            out.push_str(&format!("{i},{a}\n"));
        }
        out
    }

    /// Parses the output of [`Clustering::assignments_csv`] back into an
    /// assignment vector. Records must appear in order `0..n`.
    pub fn parse_assignments_csv(text: &str) -> Result<Vec<usize>, String> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| e.to_string())?;
        if headers.iter().collect::<Vec<_>>() != ["record", "cluster"] {
            return Err("expected header `record,cluster`".into());
        }
        let mut out = Vec::new();
        for (expected, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let idx: usize = rec[0]
                .parse()
                .map_err(|_| format!("bad record index {:?}", &rec[0]))?;
            if idx != expected {
                return Err(format!("record {idx} out of order (expected {expected})"));
            }
            out.push(
                rec[1]
                    .parse()
                    .map_err(|_| format!("bad cluster id {:?}", &rec[1]))?,
            );
        }
        Ok(out)
    }
}

/// Member means for `k` clusters. Returns the empty cluster id on failure.
pub(crate) fn member_means(
    data: &Matrix,
    assignments: &[usize],
    k: usize,
) -> Result<Matrix, usize> {
    let d = data.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, x) in sums.row_mut(a).iter_mut().zip(data.row(i)) {
            *s += x;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(empty);
    }
    for (j, &c) in counts.iter().enumerate() {
        for s in sums.row_mut(j) {
            *s /= c as f64;
        }
    }
    Ok(sums)
}

/// Sum of squared distances of each record to the given centroid.
pub(crate) fn sse_to_centroids(data: &Matrix, assignments: &[usize], centroids: &Matrix) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| crate::matrix::squared_distance(data.row(i), centroids.row(a)))
        .sum()
}
