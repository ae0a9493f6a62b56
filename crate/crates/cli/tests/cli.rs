use std::path::PathBuf;
use std::process::{Command, Output};

fn gdtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdtm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gdtm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn external_trace_of_copy_matches() {
    let o = gdtm(&["trace", "--machine", "copy", "--construction", "external", "--input", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("steps=3 halted=true oracle=match"), "{}", stdout(&o));
}

#[test]
fn internal_line_search_is_strictly_decreasing() {
    for machine in ["copy", "increment", "mark_copy"] {
        let o = gdtm(&["trace", "--machine", machine, "--construction", "internal", "--mode", "linesearch"]);
        assert_eq!(o.status.code(), Some(0), "{machine}: {}", stdout(&o));
        assert!(stdout(&o).contains("loss strictly decreasing: true"));
    }
}

#[test]
fn non_halting_machine_exits_with_two() {
    let o = gdtm(&["trace", "--machine", "pendulum", "--max-iters", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no halt within 10"));
}

#[test]
fn trace_output_is_deterministic() {
    let (a, b) = (scratch("a.jsonl"), scratch("b.jsonl"));
    let run = |p: &PathBuf| gdtm(&["trace", "--machine", "increment", "--out", p.to_str().unwrap()]);
    let (oa, ob) = (run(&a), run(&b));
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    let (fa, fb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(fa, fb);
    assert_eq!(fa.iter().filter(|&&c| c == b'\n').count(), 7);
}

#[test]
fn demo_training_reports_the_checks() {
    let report = scratch("report.json");
    let o = gdtm(&["train", "--machine", "copy", "--out", report.to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("steps = k_t+1: true"));
    assert!(text.contains("F == f_TM(x,y)(x): true"));
    assert!(text.contains("s_init flips at [1]; s_net flips at [386]"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["steps"], 386);
    assert_eq!(json["records"].as_array().unwrap().len(), 387);
}

#[test]
fn small_labels_are_a_configuration_error() {
    let data = scratch("small.json");
    std::fs::write(&data, r#"{"x": [[1.0]], "y": [[0.1, 0.1]], "epsilon": 1.0}"#).unwrap();
    let o = gdtm(&["train", "--dataset", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("labels too small"));
}

#[test]
fn verify_names_a_bad_constant() {
    let cfg = scratch("b16.toml");
    std::fs::write(&cfg, "[net]\nb = 16\n").unwrap();
    let o = gdtm(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("[FAIL] 10. configured constants"), "{text}");
    assert!(text.contains("4102 >= 4096"));
    assert!(text.contains("[PASS] 9. negative controls"));
}

#[test]
fn verify_passes_and_lists_the_corpus() {
    let o = gdtm(&["verify"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("9 of 9 checks passed"));
    assert!(text.contains("mark_copy    7  3"));
}

#[test]
fn bad_flags_and_files_exit_with_one() {
    assert_eq!(gdtm(&["trace", "--construction", "sideways"]).status.code(), Some(1));
    assert_eq!(gdtm(&["trace", "--machine", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(gdtm(&["trace", "--input", "12"]).status.code(), Some(1));
}
