use std::fmt::Write as _;
use std::path::Path;

use super::world::Simulation;
use crate::cbba::Round;
use crate::geometry::Ellipse;
use crate::ids::{RadarId, TargetId};

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const ELLIPSE_VERTICES: usize = 48;

/// Everything drawn in one picture, in world coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub t: u64,
    pub radars: Vec<(RadarId, [f64; 2])>,
    pub targets: Vec<(TargetId, [f64; 2])>,
    pub main_links: Vec<(RadarId, TargetId)>,
    pub optional_links: Vec<(RadarId, TargetId)>,
    pub ellipses: Vec<Ellipse>,
}

impl Snapshot {
    /// Current truth plus every bundle entry and its bid ellipse.
    pub fn from_simulation(sim: &Simulation) -> Self {
        let mut snap = Snapshot {
            t: sim.time().saturating_sub(1),
            radars: sim.agents().iter().map(|a| (a.id(), a.params().position)).collect(),
            targets: sim
                .targets()
                .iter()
                .map(|t| (t.id, [t.position.x, t.position.y]))
                .collect(),
            ..Snapshot::default()
        };
        for a in sim.agents() {
            for (round, links) in [(Round::Main, &mut snap.main_links), (Round::Optional, &mut snap.optional_links)] {
                for t in a.belief(round).bundle() {
                    links.push((a.id(), *t));
                    if let Some(e) = a.ellipses().get(t) {
                        snap.ellipses.push(*e);
                    }
                }
            }
        }
        snap
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let points = self.radars.iter().map(|r| r.1).chain(self.targets.iter().map(|t| t.1));
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for [x, y] in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return (0.0, 0.0, 1.0, 1.0);
        }
        let span = (x1 - x0).max(y1 - y0).max(1.0);
        (x0, y0, x0 + span, y0 + span)
    }

    pub fn render(&self) -> String {
        let (x0, y0, x1, _) = self.bounds();
        let k = (SIZE - 2.0 * MARGIN) / (x1 - x0);
        let px = |x: f64, y: f64| (MARGIN + (x - x0) * k, SIZE - MARGIN - (y - y0) * k);
        let position = |id: &RadarId| self.radars.iter().find(|r| r.0 == *id).map(|r| r.1);
        let target = |id: &TargetId| self.targets.iter().find(|t| t.0 == *id).map(|t| t.1);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="14">t = {}</text>"#, self.t);
        let (ox, oy) = px(x0, y0);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{ox:.2}" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}" stroke="black"/>"#,
            SIZE - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{ox:.2}" y1="{oy:.2}" x2="{ox:.2}" y2="{MARGIN:.2}" stroke="black"/>"#
        );
        for e in &self.ellipses {
            let pts: Vec<String> = e
                .polygon(ELLIPSE_VERTICES)
                .iter()
                .map(|p| {
                    let (x, y) = px(p.x, p.y);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon class="ellipse" points="{}" fill="none" stroke="gold" stroke-width="1"/>"#,
                pts.join(" ")
            );
        }
        for (links, class, colour) in [
            (&self.main_links, "main-track", "green"),
            (&self.optional_links, "optional-track", "purple"),
        ] {
            for (r, t) in links {
                let (Some(a), Some(b)) = (position(r), target(t)) else { continue };
                let (ax, ay) = px(a[0], a[1]);
                let (bx, by) = px(b[0], b[1]);
                let _ = writeln!(
                    s,
                    r#"<line class="{class}" x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="{colour}" stroke-width="1.5"/>"#
                );
            }
        }
        for (id, [x, y]) in &self.radars {
            let (cx, cy) = px(*x, *y);
            let _ = writeln!(
                s,
                r#"<circle class="radar" cx="{cx:.2}" cy="{cy:.2}" r="6" fill="blue"><title>{id}</title></circle>"#
            );
        }
        for (id, [x, y]) in &self.targets {
            let (cx, cy) = px(*x, *y);
            let _ = writeln!(
                s,
                r#"<polygon class="target" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="red"><title>{id}</title></polygon>"#,
                cx,
                cy - 6.0,
                cx - 5.0,
                cy + 4.0,
                cx + 5.0,
                cy + 4.0
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::sim::scenario::{generate_scenario, GeneratorSpec, Topology};

    #[test]
    fn empty_world_has_axes_only() {
        let svg = Snapshot::default().render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"class="axis""#).count(), 2);
        assert!(!svg.contains("radar") && !svg.contains("track"));
    }

    #[test]
    fn link_counts_match_claims() {
        let s = generate_scenario(&GeneratorSpec::new(3, 10, 4, Topology::Complete)).unwrap();
        let mut sim = Simulation::new(s, Execution::Sequential).unwrap();
        for _ in 0..15 {
            sim.step().unwrap();
        }
        let claims = sim.claims();
        let svg = Snapshot::from_simulation(&sim).render();
        let main: usize = claims.main.values().map(Vec::len).sum();
        let opt: usize = claims.optional.values().map(Vec::len).sum();
        assert_eq!(svg.matches(r#"class="main-track""#).count(), main);
        assert_eq!(svg.matches(r#"class="optional-track""#).count(), opt);
        assert_eq!(svg.matches(r#"class="radar""#).count(), 3);
        assert_eq!(svg.matches(r#"class="target""#).count(), 10);
        assert!(main > 0);
        assert_eq!(Snapshot::from_simulation(&sim).render(), svg);
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.svg");
        assert!(Snapshot::default().write(&path).is_err());
    }
}
