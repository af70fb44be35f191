//! End-to-end pipeline: load, normalize, project every level, cluster each
//! projection and evaluate.

use log::info;

use crate::clustering::{genetic_cluster, GaConfig, GaRun};
use crate::dataset::{load_csv, normalize, DataError, DataMatrix, IngestReport, Schema};
use crate::error::{Error, Result};
use crate::evaluation::{build_report, EvaluationReport, SseSpace};
use crate::ontology::Ontology;
use crate::projection::{project_all, LevelDataset};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOptions {
    pub dataset_name: String,
    pub ga: GaConfig,
    pub space: SseSpace,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub ingest: IngestReport,
    pub matrix: DataMatrix,
    pub levels: Vec<LevelDataset>,
    pub runs: Vec<GaRun>,
    pub report: EvaluationReport,
}

/// Loads the CSV and min-max normalizes the surviving feature columns.
pub fn load_normalized(csv_text: &str, schema: &Schema) -> Result<(DataMatrix, IngestReport)> {
    let (raw, ingest) = load_csv(csv_text, schema)?;
    let matrix = normalize(&raw).map_err(|e| match e {
        DataError::ConstantColumn(c) => {
            Error::Internal(format!("constant column {c:?} survived ingestion"))
        }
        other => other.into(),
    })?;
    Ok((matrix, ingest))
}

/// Clusters one level dataset with the genetic search.
pub fn cluster_level(level: &LevelDataset, ga: &GaConfig) -> Result<GaRun> {
    genetic_cluster(&level.values, ga).map_err(|source| Error::Cluster {
        level: level.level,
        source,
    })
}

/// Runs every stage over in-memory inputs.
pub fn run_pipeline(
    csv_text: &str,
    schema: &Schema,
    ontology: &Ontology,
    opts: &PipelineOptions,
) -> Result<PipelineOutput> {
    let (matrix, ingest) = load_normalized(csv_text, schema)?;
    info!(
        "loaded {} records x {} features ({} dropped)",
        matrix.rows(),
        matrix.cols(),
        ingest.rows_dropped
    );
    let levels = project_all(&matrix, ontology)?;
    let mut runs = Vec::with_capacity(levels.len());
    for level in &levels {
        let run = cluster_level(level, &opts.ga)?;
        info!(
            "level {}: {} columns, k = {}, fitness = {:.4}",
            level.level,
            level.cols(),
            run.clustering.k(),
            run.fitness
        );
        runs.push(run);
    }
    let clusterings: Vec<_> = runs.iter().map(|r| r.clustering.clone()).collect();
    let report = build_report(&opts.dataset_name, &clusterings, &levels, opts.space)?;
    Ok(PipelineOutput {
        ingest,
        matrix,
        levels,
        runs,
        report,
    })
}
