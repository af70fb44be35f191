//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::clustering::{Clustering, GaConfig};
use crate::dataset::Schema;
use crate::error::{exit, Error, Result, Stage};
use crate::evaluation::{build_report, SseSpace};
use crate::ontology::Ontology;
use crate::pipeline::{cluster_level, load_normalized, run_pipeline, PipelineOptions};
use crate::projection::{project, project_all, LevelDataset};

#[derive(Debug, Parser)]
#[command(
    name = "ontoclust",
    version,
    about = "Cluster a numerical dataset at every level of a domain ontology"
)]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate an ontology file and print its level census.
    ValidateOntology(ValidateArgs),
    /// Write the per-level projected datasets as CSV.
    Project(ProjectArgs),
    /// Cluster the normalized data, or one of its level projections.
    Cluster(ClusterArgs),
    /// Score existing per-level assignments and compute improvements.
    Evaluate(EvaluateArgs),
    /// Run the whole pipeline and write the report.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Ontology file (alternatively pass --ontology).
    path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    ontology: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Column role file (`column<TAB>NAME<TAB>role=...`).
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InputArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Ontology file.
    #[arg(long)]
    ontology: PathBuf,
}

#[derive(Debug, Args)]
struct GaArgs {
    /// TOML file with genetic-search settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Only this level (default: every level).
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Cluster a projection of the data onto this ontology.
    #[arg(long, requires = "level")]
    ontology: Option<PathBuf>,
    #[arg(long, requires = "ontology")]
    level: Option<usize>,
    #[command(flatten)]
    ga: GaArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// One `record,cluster` file per ontology level, in level order.
    #[arg(long = "assignments", required = true, num_args = 1..)]
    assignments: Vec<PathBuf>,
    #[arg(long, default_value = "original")]
    sse_space: SseSpace,
    /// Dataset name used in the report (default: data file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    ga: GaArgs,
    #[arg(long, default_value = "original")]
    sse_space: SseSpace,
    #[arg(long, default_value = "ontoclust-out")]
    out: PathBuf,
    /// Also write each level dataset as CSV.
    #[arg(long)]
    emit_levels: bool,
    /// Also write each level's cluster assignments as CSV.
    #[arg(long)]
    emit_assignments: bool,
    /// Dataset name used in the report (default: data file stem).
    #[arg(long)]
    name: Option<String>,
}

/// Parses `args` and runs the selected command, returning the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::ValidateOntology(args) => validate(args, stdout),
        Command::Project(args) => cmd_project(args, stdout, stderr),
        Command::Cluster(args) => cmd_cluster(args, stdout, stderr),
        Command::Evaluate(args) => cmd_evaluate(args, stdout, stderr),
        Command::Run(args) => cmd_run(args, stdout, stderr),
    }
}

fn read(path: &Path, stage: Stage) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        stage,
        path: path.to_path_buf(),
        source,
    })
}

fn load_ontology(path: &Path) -> Result<Ontology> {
    Ok(Ontology::parse(&read(path, Stage::Ontology)?)?)
}

fn load_schema(path: Option<&Path>) -> Result<Schema> {
    match path {
        Some(p) => Ok(Schema::parse(&read(p, Stage::Data)?)?),
        None => Ok(Schema::new()),
    }
}

fn ga_config(args: &GaArgs) -> Result<GaConfig> {
    let mut cfg = match &args.config {
        Some(path) => toml::from_str(&read(path, Stage::Config)?)
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?,
        None => GaConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.population {
        cfg.population_size = p;
    }
    if let Some(g) = args.generations {
        cfg.generations = g;
    }
    if let Some(k) = args.k_min {
        cfg.k_min = k;
    }
    if let Some(k) = args.k_max {
        cfg.k_max = Some(k);
    }
    Ok(cfg)
}

fn dataset_name(name: &Option<String>, data: &Path) -> String {
    name.clone().unwrap_or_else(|| {
        data.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    })
}

/// Writes every file only once all of them have been computed.
fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io {
            stage: Stage::Output,
            path,
            source,
        }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(io(&path))?;
    }
    Ok(())
}

fn print_warnings(warnings: &[String], stderr: &mut dyn Write) {
    for w in warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
}

fn validate(args: ValidateArgs, stdout: &mut dyn Write) -> Result<()> {
    let path = args
        .path
        .or(args.ontology)
        .ok_or_else(|| Error::Usage("an ontology file is required".into()))?;
    let o = load_ontology(&path)?;
    let census: Vec<String> = o.level_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(stdout, "levels: {}, depth {}", census.join("/"), o.depth());
    Ok(())
}

fn level_file(level: &LevelDataset) -> (String, String) {
    (format!("level_{}.csv", level.level), level.to_csv())
}

fn cmd_project(args: ProjectArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ontology = load_ontology(&args.input.ontology)?;
    let schema = load_schema(args.input.data.schema.as_deref())?;
    let (matrix, ingest) = load_normalized(&read(&args.input.data.data, Stage::Data)?, &schema)?;
    print_warnings(&ingest.warnings, stderr);
    let levels = match args.level {
        Some(l) => vec![project(&matrix, &ontology, l)?],
        None => project_all(&matrix, &ontology)?,
    };
    let files: Vec<_> = levels.iter().map(level_file).collect();
    write_outputs(&args.out, &files)?;
    for l in &levels {
        let _ = writeln!(
            stdout,
            "level {}: {} records x {} columns",
            l.level,
            l.rows(),
            l.cols()
        );
    }
    Ok(())
}

fn cmd_cluster(args: ClusterArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ga = ga_config(&args.ga)?;
    let ontology = args.ontology.as_deref().map(load_ontology).transpose()?;
    let schema = load_schema(args.data.schema.as_deref())?;
    let (matrix, ingest) = load_normalized(&read(&args.data.data, Stage::Data)?, &schema)?;
    print_warnings(&ingest.warnings, stderr);
    let level = match (&ontology, args.level) {
        (Some(o), Some(l)) => project(&matrix, o, l)?,
        _ => LevelDataset {
            level: 0,
            concept_names: matrix.column_names().to_vec(),
            values: matrix.values().clone(),
        },
    };
    let run = cluster_level(&level, &ga)?;
    if run.degenerate {
        let _ = writeln!(stderr, "warning: all records identical; k fixed at k_min");
    }
    let sse = crate::evaluation::sse(&level.values, &run.clustering.assignments)?;
    let name = match args.level {
        Some(l) => format!("assignments_level_{l}.csv"),
        None => "assignments.csv".to_string(),
    };
    write_outputs(&args.out, &[(name, run.clustering.assignments_csv())])?;
    let _ = writeln!(
        stdout,
        "k = {}, SSE = {sse:.6}, fitness = {:.6}",
        run.clustering.k(),
        run.fitness
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ontology = load_ontology(&args.input.ontology)?;
    if args.assignments.len() != ontology.depth() {
        return Err(Error::Usage(format!(
            "ontology has {} levels but {} assignment files were given",
            ontology.depth(),
            args.assignments.len()
        )));
    }
    let schema = load_schema(args.input.data.schema.as_deref())?;
    let (matrix, ingest) = load_normalized(&read(&args.input.data.data, Stage::Data)?, &schema)?;
    print_warnings(&ingest.warnings, stderr);
    let levels = project_all(&matrix, &ontology)?;
    let mut clusterings = Vec::with_capacity(levels.len());
    for (path, level) in args.assignments.iter().zip(&levels) {
        let assignments =
            Clustering::parse_assignments_csv(&read(path, Stage::Data)?).map_err(|e| {
                Error::Evaluation(crate::evaluation::EvalError::Format(format!(
                    "{}: {e}",
                    path.display()
                )))
            })?;
        if assignments.len() != level.rows() {
            return Err(crate::evaluation::EvalError::AssignmentLength {
                assignments: assignments.len(),
                records: level.rows(),
            }
            .into());
        }
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let centroids = crate::clustering::member_means(&level.values, &assignments, k)
            .map_err(crate::evaluation::EvalError::EmptyCluster)?;
        clusterings.push(Clustering {
            assignments,
            centroids,
        });
    }
    let name = dataset_name(&args.name, &args.input.data.data);
    let report = build_report(&name, &clusterings, &levels, args.sse_space)?;
    if let Some(out) = &args.out {
        write_outputs(out, &report_files(&report))?;
    }
    let _ = write!(stdout, "{}", report.summary());
    Ok(())
}

fn report_files(report: &crate::evaluation::EvaluationReport) -> Vec<(String, String)> {
    vec![
        ("report.json".into(), report.to_json()),
        ("sse.csv".into(), report.sse_table_csv()),
        ("improvements.csv".into(), report.improvement_table_csv()),
        ("clusters.csv".into(), report.cluster_count_csv()),
    ]
}

fn cmd_run(args: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ga = ga_config(&args.ga)?;
    let ontology = load_ontology(&args.input.ontology)?;
    let schema = load_schema(args.input.data.schema.as_deref())?;
    let csv_text = read(&args.input.data.data, Stage::Data)?;
    let opts = PipelineOptions {
        dataset_name: dataset_name(&args.name, &args.input.data.data),
        ga,
        space: args.sse_space,
    };
    let output = run_pipeline(&csv_text, &schema, &ontology, &opts)?;
    print_warnings(&output.ingest.warnings, stderr);
    for run in &output.runs {
        if run.degenerate {
            let _ = writeln!(
                stderr,
                "warning: all records identical at a level; k fixed at k_min"
            );
        }
    }

    let mut files = report_files(&output.report);
    files.push((
        "ingest.json".into(),
        serde_json::to_string_pretty(&output.ingest).expect("ingest report serializes") + "\n",
    ));
    if args.emit_levels {
        files.extend(output.levels.iter().map(level_file));
    }
    if args.emit_assignments {
        files.extend(output.levels.iter().zip(&output.runs).map(|(l, r)| {
            (
                format!("assignments_level_{}.csv", l.level),
                r.clustering.assignments_csv(),
            )
        }));
    }
    write_outputs(&args.out, &files)?;
    let _ = write!(stdout, "{}", output.report.summary());
    Ok(())
}
