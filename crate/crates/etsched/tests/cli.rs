//! End-to-end checks of the binary: exit codes, output shapes, the
//! published JSON schema, and byte-level determinism.

use std::io::Write;
use std::process::{Command, Output};

use etsched::gen::random_relaxation_point;
use etsched::instance::{make_instance, parse_benchmark, RawInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_etsched");

fn data_file() -> String {
    format!("{}/../../data/n10.txt", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

#[test]
fn inline_enum_solve_reports_the_hand_checked_optimum() {
    let out = run(&[
        "solve", "--inline", "2;3 1 10;3 1 10", "--h", "1.0", "--method", "enum", "--format",
        "json", "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let run = &doc["runs"][0];
    assert_eq!(run["value"], 3);
    assert_eq!(run["optimal"], true);
    assert_eq!(run["schedule"]["feasible"], true);
}

#[test]
fn csv_over_all_instances_emits_one_row_each() {
    let out = run(&[
        "solve", "--file", &data_file(), "--all", "--h", "0.2", "--method", "enum", "--format",
        "csv", "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "index,h,n,d,method,value,optimal,nodes,cuts,lp_iterations,time_s"
    );
    assert_eq!(lines.len(), 11);
    assert!(lines[1..].iter().all(|l| l.starts_with(|c: char| c.is_ascii_digit())));
}

#[test]
fn usage_problems_exit_with_code_two() {
    for args in [
        &["solve", "--inline", "1;2 3 4", "--definitely-not-a-flag"][..],
        &["solve", "--h", "0.5"][..],
        &["solve", "--inline", "1;2 3 4", "--h", "0"][..],
        &["solve", "--file", "/nonexistent/etsched.txt"][..],
        &["solve", "--inline", "2;3 1"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn node_limited_searches_exit_with_code_one() {
    let out = run(&[
        "solve", "--file", &data_file(), "--index", "5", "--h", "0.2", "--method", "f3",
        "--node-limit", "1", "--format", "json", "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["runs"][0]["optimal"], false);
    // The limit report still carries a usable bound and incumbent.
    assert!(doc["runs"][0]["lower_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn deterministic_reruns_are_byte_identical() {
    let args = [
        "solve", "--inline", "6;4 2 7;6 9 1;3 3 3;5 1 8;2 6 2;7 4 4", "--h", "0.4,0.8",
        "--method", "f3", "--format", "json", "--deterministic",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn solve_json_validates_against_the_published_schema() {
    let schema_text = std::fs::read_to_string(format!(
        "{}/schemas/solve-report.schema.json",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let schema: serde_json::Value = serde_json::from_str(&schema_text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    for args in [
        &[
            "solve", "--inline", "4;3 2 7;5 1 4;2 6 1;4 3 3", "--h", "0.5,1.0", "--method", "f3",
            "--format", "json", "--deterministic",
        ][..],
        &[
            "solve", "--inline", "2;3 1 10;3 1 10", "--h", "1.0", "--method", "enum", "--format",
            "json",
        ][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "args {args:?}");
        let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "schema violations for {args:?}: {errors:?}");
    }
}

#[test]
fn separate_reports_an_encoded_schedule_as_cut_free() {
    let inst = make_instance(
        &RawInstance { p: vec![3, 5, 2, 4], alpha: vec![2, 1, 6, 3], beta: vec![7, 4, 1, 3] },
        etsched::Rat::new(1, 2),
    )
    .unwrap();
    let delta = vec![true, false, true, false];
    let (_, schedule) = etsched::dominance::best_for_partition(&inst, &delta).unwrap();
    let point = etsched::polytope::encode_f1_point(&inst, &schedule);
    let point: Vec<f64> = point.iter().map(|&v| etsched::rat_f64(v)).collect();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    serde_json::to_writer(&mut file, &serde_json::json!({"formulation": "f1", "point": point}))
        .unwrap();
    file.flush().unwrap();
    let out = run(&[
        "separate", "--inline", "4;3 2 7;5 1 4;2 6 1;4 3 3", "--h", "0.5", "--point",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "no violated cuts");
}

#[test]
fn separate_lists_subset_rows_violated_at_a_fractional_point() {
    let inst = make_instance(
        &RawInstance {
            p: vec![3, 5, 2, 4, 6, 2],
            alpha: vec![2, 1, 6, 3, 2, 5],
            beta: vec![7, 4, 1, 3, 2, 6],
        },
        etsched::rat(1),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let point = random_relaxation_point(&inst, &mut rng);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    serde_json::to_writer(&mut file, &serde_json::json!({"formulation": "f1", "point": point}))
        .unwrap();
    file.flush().unwrap();
    let out = run(&[
        "separate", "--inline", "6;3 2 7;5 1 4;2 6 1;4 3 3;6 2 2;2 5 6", "--h", "1.0", "--point",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("viol="), "expected violated rows, got: {text}");
    assert!(text.contains("s1") || text.contains("s2"), "expected a subset row: {text}");
}

#[test]
fn separate_rejects_points_of_the_wrong_arity() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    serde_json::to_writer(&mut file, &serde_json::json!({"formulation": "f1", "point": [0.0]}))
        .unwrap();
    file.flush().unwrap();
    let out = run(&[
        "separate", "--inline", "4;3 2 7;5 1 4;2 6 1;4 3 3", "--h", "1.0", "--point",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_seed_reproducible_and_parses_back() {
    let args = ["gen", "--seed", "3", "--count", "2", "--n", "4"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let raws = parse_benchmark(&stdout(&first)).unwrap();
    assert_eq!(raws.len(), 2);
    assert!(raws.iter().all(|r| r.p.len() == 4));
}

#[test]
fn bench_prints_one_group_row_per_h() {
    let out = run(&[
        "bench", "--inline", "5;4 2 7;6 9 1;3 3 3;5 1 8;2 6 2", "--h", "0.4,0.8", "--method",
        "enum", "--deterministic",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("#opt"), "header: {}", lines[0]);
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(&cells[2..4], ["1", "1"], "runs and #opt in {line:?}");
    }
}
