//! SVG pictures of a shape, its path and the robots on it.
//!
//! Robots are filled by their LED color and outlined by role. Arrows follow
//! the DFCP path while the swarm is calm and the robots' headings while a
//! change is running.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{anyhow, Context, Result};
use swarmshape::agent::{ChangeType, Role};
use swarmshape::dfcp::dfcp_path;
use swarmshape::engine::{ChangeHints, Event, Led, RobotRecord, Trace};
use swarmshape::lattice::validate_shape;
use swarmshape::{BoxId, DirectedEdge, Node, Shape};

/// Pixels between neighboring nodes.
const UNIT: f64 = 40.0;
const MARGIN: f64 = 40.0;

pub fn render_shape(shape: &Shape) -> String {
    let edges: Vec<DirectedEdge> = dfcp_path(shape).edges().collect();
    Canvas::new(shape).draw(shape, &edges, &[], None, "")
}

/// Renders the state recorded at `step`.
pub fn render_step(trace: &Trace, step: u64) -> Result<String> {
    let rec = trace
        .steps
        .iter()
        .find(|r| r.step == step)
        .ok_or_else(|| anyhow!("trace has no step {step}"))?;
    let shape = shape_at(trace, step)?;
    let (edges, hints) = if rec.change.is_some() {
        (heading_edges(&shape, &rec.robots), ChangeHints::all_blocked(&shape))
    } else {
        let max_boxes = trace.header.as_ref().map_or(usize::MAX, |h| h.config.max_boxes);
        (dfcp_path(&shape).edges().collect(), ChangeHints::for_shape(&shape, max_boxes))
    };
    let away = rec.robots.iter().filter(|r| r.loc.node().is_none()).count();
    let caption = format!("step {step}, {} boxes, {away} robots off the shape", shape.box_count());
    Ok(Canvas::new(&shape).draw(&shape, &edges, &rec.robots, Some(&hints), &caption))
}

/// The shape as of the record for `step`: header boxes plus every change
/// injected up to and including that step.
pub fn shape_at(trace: &Trace, step: u64) -> Result<Shape> {
    let h = trace.header.as_ref().ok_or_else(|| anyhow!("trace has no header"))?;
    let mut shape = validate_shape(h.boxes.iter().copied(), h.entry, h.exit).context("trace header shape")?;
    for rec in trace.steps.iter().take_while(|r| r.step <= step) {
        for e in &rec.events {
            if let Event::ChangeInjected { ct, target, .. } = e {
                shape = match ct {
                    ChangeType::Add => shape.with_box_added(*target),
                    ChangeType::Subtract => shape.with_box_removed(*target),
                }
                .with_context(|| format!("replaying change at step {}", rec.step))?;
            }
        }
    }
    Ok(shape)
}

fn heading_edges(shape: &Shape, robots: &[RobotRecord]) -> Vec<DirectedEdge> {
    robots
        .iter()
        .filter_map(|r| {
            let n = r.loc.node()?;
            let m = n.step(r.heading?);
            shape.contains(m).then(|| DirectedEdge::new(n, m))
        })
        .collect()
}

struct Canvas {
    min_x: i32,
    max_y: i32,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new(shape: &Shape) -> Canvas {
        let xs = shape.nodes().iter().map(|n| n.x);
        let ys = shape.nodes().iter().map(|n| n.y);
        let (min_x, max_x) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
        let (min_y, max_y) = (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(0));
        Canvas {
            min_x,
            max_y,
            width: f64::from(max_x - min_x) * UNIT + 2.0 * MARGIN,
            height: f64::from(max_y - min_y) * UNIT + 2.0 * MARGIN + 20.0,
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - f64::from(self.min_x)) * UNIT, MARGIN + (f64::from(self.max_y) - y) * UNIT)
    }

    fn at(&self, n: Node) -> (f64, f64) {
        self.px(f64::from(n.x), f64::from(n.y))
    }

    fn draw(
        &self,
        shape: &Shape,
        edges: &[DirectedEdge],
        robots: &[RobotRecord],
        hints: Option<&ChangeHints>,
        caption: &str,
    ) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            self.width, self.height, self.width, self.height
        );
        s.push_str(concat!(
            r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="5" markerHeight="5" orient="auto">"#,
            r##"<path d="M0,0 L10,5 L0,10 z" fill="#555"/></marker></defs>"##,
            "\n"
        ));
        for &b in shape.boxes() {
            self.draw_box(&mut s, b, b == shape.root());
        }
        for &n in shape.nodes() {
            let (x, y) = self.at(n);
            let _ = writeln!(s, r##"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="#999"/>"##);
        }
        for e in edges {
            self.draw_edge(&mut s, e);
        }
        self.draw_port(&mut s, shape.entry(), "in");
        self.draw_port(&mut s, shape.exit(), "out");
        let placed: BTreeMap<Node, &RobotRecord> = robots.iter().filter_map(|r| Some((r.loc.node()?, r))).collect();
        for (n, r) in placed {
            let led = hints.map_or(Led::Red, |h| h.led(n));
            self.draw_robot(&mut s, n, r, led);
        }
        if !caption.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="12">{caption}</text>"#,
                MARGIN / 2.0,
                self.height - 8.0
            );
        }
        s.push_str("</svg>\n");
        s
    }

    fn draw_box(&self, s: &mut String, b: BoxId, root: bool) {
        let (x, y) = self.px(f64::from(2 * b.i) - 0.5, f64::from(2 * b.j) + 1.5);
        let fill = if root { "#dde8f4" } else { "#eef2f6" };
        let _ = writeln!(
            s,
            r##"<rect data-box="{},{}" x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{w:.1}" fill="{fill}" stroke="#b8c4d0"/>"##,
            b.i,
            b.j,
            w = 2.0 * UNIT
        );
    }

    fn draw_edge(&self, s: &mut String, e: &DirectedEdge) {
        let (x1, y1) = self.at(e.from);
        let (x2, y2) = self.at(e.to);
        // Stop short of both nodes so arrow heads stay visible.
        let (dx, dy) = ((x2 - x1) * 0.2, (y2 - y1) * 0.2);
        let _ = writeln!(
            s,
            r##"<line data-edge="{},{}>{},{}" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#555" stroke-width="2" marker-end="url(#arrow)"/>"##,
            e.from.x,
            e.from.y,
            e.to.x,
            e.to.y,
            x1 + dx,
            y1 + dy,
            x2 - dx,
            y2 - dy
        );
    }

    fn draw_port(&self, s: &mut String, n: Node, label: &str) {
        let (x, y) = self.at(n);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
            x,
            y + UNIT * 0.55
        );
    }

    fn draw_robot(&self, s: &mut String, n: Node, r: &RobotRecord, led: Led) {
        let (x, y) = self.at(n);
        let fill = match led {
            Led::Green => "#3c9d4e",
            Led::Blue => "#3b6fd1",
            Led::Red => "#d04a3b",
        };
        let (stroke, width, dash) = match r.role {
            Role::Normal => ("#222", 1.0, ""),
            Role::PassBack => ("#222", 2.0, r#" stroke-dasharray="3,2""#),
            Role::ChangeRobot => ("#f2c230", 3.5, ""),
        };
        let _ = writeln!(
            s,
            r#"<circle data-robot="{}" cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            r.id,
            UNIT * 0.28
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="10" fill="white" text-anchor="middle">{}</text>"#,
            y + 3.5,
            r.id
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmshape::lattice::unit_shape;

    #[test]
    fn unit_shape_draws_three_arrows() {
        let svg = render_shape(&unit_shape());
        assert_eq!(svg.matches("data-edge=").count(), 3);
        assert_eq!(svg.matches("data-box=").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn missing_step_is_an_error() {
        assert!(render_step(&Trace::default(), 3).is_err());
    }
}
