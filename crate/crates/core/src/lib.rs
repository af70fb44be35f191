//! Ontology-guided clustering of numerical datasets.
//!
//! A dataset's attributes are the leaves of a level-stratified domain
//! ontology. The data is min-max normalized, projected onto every ontology
//! level by averaging children into their parents, each projection is
//! clustered with a genetic/k-means hybrid that chooses k itself, and the
//! clusterings are compared by SSE from one level to the next.
//!
//! ```
//! use ontoclust::{evaluation, ontology::parse_ontology};
//!
//! let o = parse_ontology("concept\tx\tlevel=1\tparent=ROOT\tcolumn=x\n").unwrap();
//! assert_eq!(o.depth(), 1);
//! let step = evaluation::step_improvement(200.0, 150.0).unwrap();
//! assert_eq!(step, 25.0);
//! ```

pub mod cli;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod evaluation;
mod lineformat;
pub mod matrix;
pub mod ontology;
pub mod pipeline;
pub mod projection;

pub use clustering::{genetic_cluster, kmeans, Clustering, GaConfig};
pub use dataset::{load_csv, normalize, ColumnRole, DataMatrix, IngestReport, Schema};
pub use error::{Error, Result};
pub use evaluation::{build_report, EvaluationReport, LevelResult, SseSpace};
pub use matrix::Matrix;
pub use ontology::{parse_ontology, Concept, Ontology, Parent};
pub use projection::{project, project_all, LevelDataset};
