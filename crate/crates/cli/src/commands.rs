use std::fs;
use std::io::BufReader;
use std::path::Path as FsPath;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use swarmshape::agent::Method;
use swarmshape::dfcp::dfcp_construct;
use swarmshape::engine::{run_scenario, Scenario, Trace};
use swarmshape::path::classify_path;
use swarmshape::verify::{check_theorem, check_trace, CheckReport, Instance};
use swarmshape::{DirectedEdge, Node, PathKind, Shape};

/// Checks accepted by [`check`], in report order.
pub const CHECKS: [&str; 6] = ["occupancy", "collision", "liveness", "cadence", "change_resolution", "theorem_5"];

pub fn load_scenario(path: &FsPath) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A shape file holds the `[shape]` table of a scenario at top level.
pub fn load_shape(path: &FsPath) -> Result<Shape> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_trace(path: &FsPath) -> Result<Trace> {
    let f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Trace::read_jsonl(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub steps: Option<u64>,
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<Trace> {
    let mut sc = scenario.clone();
    if let Some(s) = opts.seed {
        sc.config.rng_seed = s;
    }
    if let Some(m) = opts.method {
        sc.config.method = m;
    }
    if let Some(n) = opts.steps {
        sc.steps = n;
    }
    Ok(run_scenario(&sc)?)
}

/// Runs the named checks, or all of [`CHECKS`] when `names` is empty.
pub fn check(trace: &Trace, names: &[String]) -> Result<Vec<CheckReport>> {
    if let Some(bad) = names.iter().find(|n| !CHECKS.contains(&n.as_str())) {
        bail!("unknown check {bad:?}; expected one of {}", CHECKS.join(", "));
    }
    let wanted = |n: &str| names.is_empty() || names.iter().any(|m| m == n);
    let mut out: Vec<CheckReport> = check_trace(trace)?.into_iter().filter(|r| wanted(&r.check_name)).collect();
    if wanted("theorem_5") {
        out.push(check_theorem(5, &Instance::Trace(Box::new(trace.clone()))));
    }
    Ok(out)
}

/// The DFCP path of a shape, as written by `oracle`.
#[derive(Clone, Debug, Serialize)]
pub struct PathDoc {
    pub entry: Node,
    pub exit: Node,
    pub boxes: usize,
    pub edges: Vec<DirectedEdge>,
    pub walk: Vec<Node>,
    pub class: PathKind,
    pub ops: usize,
}

pub fn oracle(shape: &Shape) -> PathDoc {
    let r = dfcp_construct(shape);
    PathDoc {
        entry: shape.entry(),
        exit: shape.exit(),
        boxes: shape.box_count(),
        edges: r.path.edges().collect(),
        walk: r.path.walk(),
        class: classify_path(shape, &r.path).kind,
        ops: r.ops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmshape::lattice::unit_shape;

    #[test]
    fn unit_oracle_has_three_edges() {
        let d = oracle(&unit_shape());
        assert_eq!(d.edges.len(), 3);
        assert_eq!(d.walk.first(), Some(&d.entry));
        assert_eq!(d.walk.last(), Some(&d.exit));
        assert_eq!(d.class, PathKind::Preferred);
    }

    #[test]
    fn unknown_check_is_an_error() {
        let t = Trace::default();
        let err = check(&t, &["speed".into()]).unwrap_err();
        assert!(err.to_string().contains("unknown check"));
    }
}
