use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ontoclust::clustering::Clustering;
use ontoclust::error::exit;
use ontoclust::{EvaluationReport, IngestReport};
use tempfile::TempDir;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
const GOLDEN_FILES: [&str; 4] = ["report.json", "sse.csv", "improvements.csv", "clusters.csv"];

fn fixture(name: &str) -> PathBuf {
    Path::new(FIXTURES).join(name)
}

macro_rules! fx {
    ($name:literal) => {
        concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $name)
    };
}

fn ontoclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontoclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p
}

/// `run` on the 200-record fixture with the TRO ontology.
fn run_fixture(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--data",
        fx!("reviews_200.csv"),
        "--ontology",
        fx!("tro.ontology"),
        "--schema",
        fx!("tr.schema"),
        "--out",
        path(out),
    ];
    args.extend_from_slice(extra);
    ontoclust(&args)
}

#[test]
fn validate_tro_prints_census() {
    let out = ontoclust(&["validate-ontology", fx!("tro.ontology")]);
    assert_eq!(code(&out), exit::OK);
    assert_eq!(stdout(&out).trim(), "levels: 24/7/2, depth 3");
}

#[test]
fn validate_reports_errors_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let dup = write(
        &dir,
        "dup.ontology",
        "concept\tx\tlevel=1\tparent=ROOT\tcolumn=a\nconcept\tx\tlevel=1\tparent=ROOT\tcolumn=b\n",
    );
    let out = ontoclust(&["validate-ontology", path(&dup)]);
    assert_eq!(code(&out), exit::ONTOLOGY);
    let msg = stderr(&out);
    assert!(msg.contains("duplicate name"), "{msg}");
    assert!(msg.contains("line 2"), "{msg}");

    let empty = write(&dir, "empty.ontology", "");
    assert_eq!(
        code(&ontoclust(&["validate-ontology", path(&empty)])),
        exit::ONTOLOGY
    );
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&ontoclust(&[])), exit::USAGE);
    assert_eq!(code(&ontoclust(&["frobnicate"])), exit::USAGE);
    assert_eq!(code(&ontoclust(&["run", "--data", "x.csv"])), exit::USAGE);
    let dir = TempDir::new().unwrap();
    let out = run_fixture(&dir.path().join("o"), &["--population", "1"]);
    assert_eq!(code(&out), exit::USAGE);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn help_and_version_succeed() {
    let out = ontoclust(&["--help"]);
    assert_eq!(code(&out), exit::OK);
    assert!(stdout(&out).contains("validate-ontology"));
    assert_eq!(code(&ontoclust(&["--version"])), exit::OK);
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "a,b\n1,x\n");
    let out = ontoclust(&[
        "run",
        "--data",
        path(&bad),
        "--ontology",
        fx!("tro.ontology"),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), exit::DATA);
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn missing_ontology_leaves_no_outputs() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("o");
    let out = ontoclust(&[
        "run",
        "--data",
        fx!("reviews_200.csv"),
        "--ontology",
        path(&dir.path().join("missing.ontology")),
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(code(&out), exit::ONTOLOGY);
    assert!(stderr(&out).contains("missing.ontology"));
    assert!(!out_dir.exists());
}

#[test]
fn unbound_leaf_is_an_ontology_error() {
    let dir = TempDir::new().unwrap();
    let onto = write(
        &dir,
        "o.ontology",
        "concept\tx\tlevel=1\tparent=ROOT\tcolumn=nope\n",
    );
    let out = ontoclust(&[
        "project",
        "--data",
        fx!("reviews_200.csv"),
        "--schema",
        fx!("tr.schema"),
        "--ontology",
        path(&onto),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), exit::ONTOLOGY);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn run_matches_golden_files() {
    let dir = TempDir::new().unwrap();
    let out = run_fixture(dir.path(), &[]);
    assert_eq!(code(&out), exit::OK, "{}", stderr(&out));
    let golden = fixture("golden");
    if std::env::var_os("ONTOCLUST_BLESS").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for f in GOLDEN_FILES {
            fs::copy(dir.path().join(f), golden.join(f)).unwrap();
        }
        fs::write(golden.join("summary.txt"), stdout(&out)).unwrap();
    }
    for f in GOLDEN_FILES {
        let got = fs::read_to_string(dir.path().join(f)).unwrap();
        let want = fs::read_to_string(golden.join(f)).unwrap();
        assert_eq!(got, want, "{f} differs from the frozen copy");
    }
    assert_eq!(
        stdout(&out),
        fs::read_to_string(golden.join("summary.txt")).unwrap()
    );

    let report =
        EvaluationReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report.levels.len(), 3);
    assert_eq!(report.step_improvements.len(), 2);
    assert_eq!(report.dataset, "reviews_200");
}

#[test]
fn reruns_are_byte_identical_and_artifacts_parse() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let flags = ["--emit-levels", "--emit-assignments", "--seed", "11"];
    let (ra, rb) = (run_fixture(a.path(), &flags), run_fixture(b.path(), &flags));
    assert_eq!(code(&ra), exit::OK);
    assert_eq!(ra.stdout, rb.stdout);

    let mut names: Vec<String> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "assignments_level_1.csv",
            "assignments_level_2.csv",
            "assignments_level_3.csv",
            "clusters.csv",
            "improvements.csv",
            "ingest.json",
            "level_1.csv",
            "level_2.csv",
            "level_3.csv",
            "report.json",
            "sse.csv",
        ]
    );
    for n in &names {
        assert_eq!(
            fs::read(a.path().join(n)).unwrap(),
            fs::read(b.path().join(n)).unwrap(),
            "{n} differs between runs"
        );
    }

    let report_text = fs::read_to_string(a.path().join("report.json")).unwrap();
    let report = EvaluationReport::from_json(&report_text).unwrap();
    assert_eq!(report.to_json(), report_text);
    let ingest: IngestReport =
        serde_json::from_str(&fs::read_to_string(a.path().join("ingest.json")).unwrap()).unwrap();
    assert_eq!(ingest.rows_read, 200);
    for (l, width) in [(1, 24), (2, 7), (3, 2)] {
        let assignments = Clustering::parse_assignments_csv(
            &fs::read_to_string(a.path().join(format!("assignments_level_{l}.csv"))).unwrap(),
        )
        .unwrap();
        assert_eq!(assignments.len(), 200);
        assert_eq!(
            assignments.iter().max().unwrap() + 1,
            report.levels[l - 1].k
        );

        let mut rdr = csv::Reader::from_path(a.path().join(format!("level_{l}.csv"))).unwrap();
        assert_eq!(rdr.headers().unwrap().len(), width);
        assert_eq!(rdr.records().count(), 200);
    }
    for table in ["sse.csv", "improvements.csv", "clusters.csv"] {
        let mut rdr = csv::Reader::from_path(a.path().join(table)).unwrap();
        assert!(rdr.records().all(|r| r.is_ok()));
    }

    // Scoring the emitted assignments reproduces the run's report.
    let assignment_paths: Vec<PathBuf> = (1..=3)
        .map(|l| a.path().join(format!("assignments_level_{l}.csv")))
        .collect();
    let eval_dir = a.path().join("eval");
    let mut args = vec![
        "evaluate",
        "--data",
        fx!("reviews_200.csv"),
        "--schema",
        fx!("tr.schema"),
        "--ontology",
        fx!("tro.ontology"),
        "--out",
        path(&eval_dir),
        "--assignments",
    ];
    args.extend(assignment_paths.iter().map(|p| path(p)));
    let out = ontoclust(&args);
    assert_eq!(code(&out), exit::OK, "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(eval_dir.join("report.json")).unwrap(),
        report_text
    );
}

#[test]
fn level_space_changes_only_the_driving_sse() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&run_fixture(a.path(), &[])), exit::OK);
    assert_eq!(
        code(&run_fixture(b.path(), &["--sse-space", "level"])),
        exit::OK
    );
    let read = |d: &TempDir| {
        EvaluationReport::from_json(&fs::read_to_string(d.path().join("report.json")).unwrap())
            .unwrap()
    };
    let (orig, level) = (read(&a), read(&b));
    assert_eq!(orig.levels, level.levels);
    let expected = 100.0 * (level.levels[0].sse_level_space - level.levels[1].sse_level_space)
        / level.levels[0].sse_level_space;
    assert!((level.step_improvements[0] - expected).abs() < 1e-9);
}

#[test]
fn depth_one_run_has_zero_total() {
    let dir = TempDir::new().unwrap();
    let csv = write(
        &dir,
        "d.csv",
        "x,y\n0,0\n0.1,0.2\n0.9,1\n1,0.8\n0.5,0.5\n0.2,0.1\n",
    );
    let onto = write(
        &dir,
        "flat.ontology",
        "concept\tx\tlevel=1\tparent=ROOT\tcolumn=x\nconcept\ty\tlevel=1\tparent=ROOT\tcolumn=y\n",
    );
    let out_dir = dir.path().join("o");
    let out = ontoclust(&[
        "run",
        "--data",
        path(&csv),
        "--ontology",
        path(&onto),
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(code(&out), exit::OK, "{}", stderr(&out));
    let report =
        EvaluationReport::from_json(&fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report.levels.len(), 1);
    assert!(report.step_improvements.is_empty());
    assert_eq!(report.total_improvement, 0.0);
}

#[test]
fn cluster_and_project_subcommands() {
    let dir = TempDir::new().unwrap();
    let out = ontoclust(&[
        "cluster",
        "--data",
        fx!("reviews_200.csv"),
        "--schema",
        fx!("tr.schema"),
        "--ontology",
        fx!("tro.ontology"),
        "--level",
        "3",
        "--k-min",
        "4",
        "--k-max",
        "4",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), exit::OK, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("k = 4,"));
    let assignments = Clustering::parse_assignments_csv(
        &fs::read_to_string(dir.path().join("assignments_level_3.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(assignments.len(), 200);

    let config = write(
        &dir,
        "ga.toml",
        "generations = 5\npopulation_size = 8\nseed = 3\n",
    );
    let out = ontoclust(&[
        "cluster",
        "--data",
        fx!("reviews_200.csv"),
        "--schema",
        fx!("tr.schema"),
        "--config",
        path(&config),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), exit::OK, "{}", stderr(&out));
    assert!(dir.path().join("assignments.csv").exists());

    let bad_config = write(&dir, "bad.toml", "generatons = 5\n");
    let out = ontoclust(&[
        "cluster",
        "--data",
        fx!("reviews_200.csv"),
        "--config",
        path(&bad_config),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), exit::USAGE);

    let proj = dir.path().join("levels");
    let out = ontoclust(&[
        "project",
        "--data",
        fx!("reviews_200.csv"),
        "--schema",
        fx!("tr.schema"),
        "--ontology",
        fx!("tro.ontology"),
        "--level",
        "2",
        "--out",
        path(&proj),
    ]);
    assert_eq!(code(&out), exit::OK);
    assert_eq!(stdout(&out).trim(), "level 2: 200 records x 7 columns");
    let header = fs::read_to_string(proj.join("level_2.csv")).unwrap();
    assert!(header.starts_with("Cultural Places,Natural Place,Social Place,"));
}

#[test]
fn evaluate_checks_assignment_files() {
    let dir = TempDir::new().unwrap();
    let short = write(&dir, "a.csv", "record,cluster\n0,0\n1,1\n");
    let base = [
        "evaluate",
        "--data",
        fx!("reviews_200.csv"),
        "--schema",
        fx!("tr.schema"),
        "--ontology",
        fx!("tro.ontology"),
        "--assignments",
    ];
    let mut one = base.to_vec();
    one.push(path(&short));
    assert_eq!(code(&ontoclust(&one)), exit::USAGE);

    let mut three = base.to_vec();
    three.extend([path(&short); 3]);
    let out = ontoclust(&three);
    assert_eq!(code(&out), exit::DATA, "{}", stderr(&out));
}
