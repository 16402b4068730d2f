use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swarmshape::dfcp::dfcp_path;
use swarmshape::engine::{Location, Trace};
use swarmshape::shapes;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swarmshape"))
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn run_to(dir: &TempDir, scenario: &str, extra: &[&str]) -> PathBuf {
    let trace = dir.path().join("trace.jsonl");
    let mut cmd = bin();
    cmd.args(["run", "--scenario"]).arg(repo(scenario)).arg("--trace").arg(&trace).args(extra);
    ok(cmd.output().unwrap());
    trace
}

#[test]
fn persistence_scenario_passes_every_check() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(&dir, "scenarios/persistence.toml", &[]);
    let out = ok(bin().args(["check", "--trace"]).arg(&trace).output().unwrap());
    assert_eq!(out.lines().count(), 6, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
}

#[test]
fn failed_check_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let path = run_to(&dir, "scenarios/persistence.toml", &["--steps", "20"]);
    let mut t = Trace::read_jsonl(fs::read(&path).unwrap().as_slice()).unwrap();
    // Stack two robots on one node.
    let rec = t.steps.last_mut().unwrap();
    let on: Vec<usize> = (0..rec.robots.len()).filter(|&k| matches!(rec.robots[k].loc, Location::Node(_))).collect();
    rec.robots[on[1]].loc = rec.robots[on[0]].loc;
    fs::write(&path, t.to_jsonl()).unwrap();
    let out = bin().args(["check", "--checks", "collision", "--trace"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("FAIL collision"));
}

#[test]
fn scenario_files_reproduce_the_walkthrough_goldens() {
    let dir = TempDir::new().unwrap();
    for name in ["add_primary", "sub_memory_message", "add_movement"] {
        let trace = run_to(&dir, &format!("scenarios/{name}.toml"), &[]);
        let golden = repo(&format!("crates/core/tests/golden/{name}.jsonl"));
        assert_eq!(fs::read(trace).unwrap(), fs::read(golden).unwrap(), "{name}");
    }
    // The method flag overrides the scenario file.
    let trace = run_to(&dir, "scenarios/add_primary.toml", &["--method", "movement"]);
    assert_eq!(fs::read(trace).unwrap(), fs::read(repo("crates/core/tests/golden/add_movement.jsonl")).unwrap());
}

#[test]
fn seed_comes_from_flag_or_environment() {
    let args = ["run", "--steps", "30", "--scenario"];
    let sc = repo("scenarios/persistence.toml");
    let by_flag = ok(bin().args(args).arg(&sc).args(["--seed", "7"]).output().unwrap());
    let by_env = ok(bin().args(args).arg(&sc).env("SWARMSHAPE_SEED", "7").output().unwrap());
    assert_eq!(by_flag, by_env);
    let t = Trace::read_jsonl(by_flag.as_bytes()).unwrap();
    assert_eq!(t.header.unwrap().seed, 7);
}

#[test]
fn oracle_on_the_unit_shape_prints_three_edges() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("unit.toml");
    fs::write(&f, "boxes = [[0, 0]]\nentry = [0, 0]\nexit = [1, 0]\n").unwrap();
    let out = ok(bin().args(["oracle", "--shape"]).arg(&f).output().unwrap());
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["edges"].as_array().unwrap().len(), 3);
    assert_eq!(doc["class"], "Preferred");
}

#[test]
fn parse_errors_name_line_and_column() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("bad.toml");
    fs::write(&f, "boxes = [[0, 0]\nentry = [0, 0]\n").unwrap();
    let out = bin().args(["oracle", "--shape"]).arg(&f).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 1"));
}

fn svg_edges(svg: &str) -> BTreeSet<String> {
    svg.split("data-edge=\"").skip(1).map(|s| s[..s.find('"').unwrap()].to_string()).collect()
}

#[test]
fn rendered_arrows_follow_the_dfcp_path() {
    let dir = TempDir::new().unwrap();
    let s = shapes::dfcp_example();
    let f = dir.path().join("shape.toml");
    fs::write(&f, toml::to_string(&s).unwrap()).unwrap();
    let svg = ok(bin().args(["render", "--shape"]).arg(&f).output().unwrap());
    let want: BTreeSet<String> =
        dfcp_path(&s).edges().map(|e| format!("{},{}>{},{}", e.from.x, e.from.y, e.to.x, e.to.y)).collect();
    assert_eq!(svg_edges(&svg), want);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/dfcp_example.svg");
    if std::env::var_os("SWARMSHAPE_BLESS").is_some() {
        fs::write(&golden, &svg).unwrap();
    }
    assert_eq!(svg, fs::read_to_string(golden).unwrap());
}

#[test]
fn render_of_a_trace_step_colors_every_robot_on_the_shape() {
    let dir = TempDir::new().unwrap();
    let trace = run_to(&dir, "scenarios/add_primary.toml", &[]);
    let t = Trace::read_jsonl(fs::read(&trace).unwrap().as_slice()).unwrap();
    for step in [0, 2, 20] {
        let out = bin().args(["render", "--render-step", &step.to_string(), "--trace"]).arg(&trace).output().unwrap();
        let svg = ok(out);
        let on = t.steps[step].robots.iter().filter(|r| r.loc.node().is_some()).count();
        assert_eq!(svg.matches("data-robot=").count(), on, "step {step}");
        // The change is still running at step 2, so every robot shows red.
        let calm = t.steps[step].change.is_none();
        assert_eq!(calm, step != 2);
        assert_eq!(svg.contains("#3c9d4e") || svg.contains("#3b6fd1"), calm, "step {step}");
    }
    let out = bin().args(["render", "--render-step", "999", "--trace"]).arg(&trace).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
