use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use teleop_core::annotate::{check_tiling, SubtaskAnnotation};
use teleop_core::dataio::{read_annotations, read_episode};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn teleop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teleop"))
        .args(args)
        .env("RETARGET_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn retarget_fixture(dir: &Path) -> PathBuf {
    let out = dir.join("demo.jsonl");
    let o = teleop(&["retarget", "-i", s(&fixture("capture.jsonl")), "-c", s(&fixture("pipeline.toml")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

fn report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {report}"))
        .parse()
        .unwrap()
}

#[test]
fn retarget_writes_a_readable_episode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo.jsonl");
    let o = teleop(&["retarget", "-i", s(&fixture("capture.jsonl")), "-c", s(&fixture("pipeline.toml")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("commanded_zero_fraction="));
    assert!(report.contains("torso_saturations="));
    let ep = read_episode(&out).unwrap();
    assert_eq!(ep.id, "demo");
    assert_eq!(ep.observations.len(), 241);
    assert_eq!(ep.actions.len(), 241 - 16);
    assert_eq!(ep.transcript.len(), 3);
    assert_eq!(report_value(&report, "samples"), 241.0);
}

#[test]
fn malformed_config_exits_1_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[retarget]\nmax_gap_s = \"long\"\n").unwrap();
    let o = teleop(&["retarget", "-i", s(&fixture("capture.jsonl")), "-c", s(&cfg), "-o", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("retarget.max_gap_s"), "{}", stderr(&o));

    std::fs::write(&cfg, "[retarget]\nunknown_knob = 1\n").unwrap();
    let o = teleop(&["retarget", "-i", s(&fixture("capture.jsonl")), "-c", s(&cfg), "-o", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_monotone_input_exits_2_naming_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("broken.jsonl");
    let mut text = std::fs::read_to_string(fixture("capture.jsonl")).unwrap();
    text.push_str("{\"type\":\"tracker\",\"t\":3.21,\"pose\":{\"rotation\":[1,0,0,0],\"translation\":[0,0,1.6]}}\n");
    std::fs::write(&input, text).unwrap();
    let o = teleop(&["retarget", "-i", s(&input), "-c", s(&fixture("pipeline.toml")), "-o", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3.21"), "{}", stderr(&o));
}

#[test]
fn unparseable_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("junk.jsonl");
    std::fs::write(&input, "{\"type\":\"tracker\",\"t\":\n").unwrap();
    let o = teleop(&["retarget", "-i", s(&input), "-c", s(&fixture("pipeline.toml")), "-o", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn simulate_sway_only_reports_zero_displacement() {
    let o = teleop(&["simulate", "-s", s(&fixture("sway_only.toml")), "-c", s(&fixture("pipeline.toml"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("base_displacement=0\n"), "{report}");
    assert_eq!(report_value(&report, "commanded_zero_fraction"), 1.0);
}

#[test]
fn simulate_exact_inverse_fixture() {
    let o = teleop(&["simulate", "-s", s(&fixture("square_walk.toml")), "-c", s(&fixture("exact.toml")), "--csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report_value(&report, "max_position_error") <= 1e-6);
    assert!(report_value(&report, "max_heading_error") <= 1e-8);
    let mut lines = report.lines().rev();
    let row = lines.next().unwrap();
    let header = lines.next().unwrap();
    assert!(header.starts_with("steps,"));
    assert_eq!(header.split(',').count(), row.split(',').count());
}

#[test]
fn simulate_bad_spec_exits_1() {
    let o = teleop(&["simulate", "-s", s(&fixture("bad_spec.toml")), "-c", s(&fixture("pipeline.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = teleop(&["simulate", "-s", s(&fixture("missing.toml")), "-c", s(&fixture("pipeline.toml"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn annotate_writes_tiling_annotations_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let ep_path = retarget_fixture(dir.path());
    let o = teleop(&["annotate", "-e", s(&ep_path), "--params", s(&fixture("segmentation.toml"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ann_path = dir.path().join("demo.annotations.json");
    let first = std::fs::read(&ann_path).unwrap();
    let anns: Vec<SubtaskAnnotation> = read_annotations(&ann_path).unwrap();
    check_tiling(&anns).unwrap();
    let ep = read_episode(&ep_path).unwrap();
    let (t0, t1) = ep.time_bounds().unwrap();
    assert_eq!(anns.first().unwrap().start, t0);
    assert_eq!(anns.last().unwrap().end, t1);
    assert!(anns.len() >= 3, "{anns:?}");
    assert!(anns.iter().any(|a| a.instruction.contains("pick up the cup")));

    let o = teleop(&["annotate", "-e", s(&ep_path), "--params", s(&fixture("segmentation.toml"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&ann_path).unwrap(), first);
}

#[test]
fn annotate_missing_episode_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = teleop(&["annotate", "-e", s(&dir.path().join("nope.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
}
