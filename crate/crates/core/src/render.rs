//! Deterministic SVG snapshots: obstacles black on white, explored tree
//! blue, final path red, start marker green, goal marker with the
//! goal-region circle around it.

use std::fmt::Write as _;

use crate::connector::PathPoint;
use crate::geom::Point2;
use crate::planner::Tree;
use crate::world::OccupancyGrid;

/// Pixels per meter.
const SCALE: f64 = 10.0;

struct Frame {
    min: Point2,
    max_y: f64,
}

impl Frame {
    fn px(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.min.x) * SCALE, (self.max_y - p.y) * SCALE)
    }
}

fn polyline(out: &mut String, frame: &Frame, points: &[Point2], style: &str) {
    if points.len() < 2 {
        return;
    }
    out.push_str("<polyline points=\"");
    for (i, &p) in points.iter().enumerate() {
        let (x, y) = frame.px(p);
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.2},{y:.2}");
    }
    let _ = writeln!(out, "\" {style}/>");
}

/// Render the scene to SVG text. Identical inputs produce identical bytes.
pub fn render_svg(
    grid: &OccupancyGrid,
    tree: Option<&Tree>,
    path: &[PathPoint],
    start: Point2,
    goal: Point2,
    mindist: f64,
) -> String {
    let (lo, hi) = grid.extent();
    let frame = Frame { min: lo, max_y: hi.y };
    let width = (hi.x - lo.x) * SCALE;
    let height = (hi.y - lo.y) * SCALE;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>"
    );

    // obstacle cells, row-major
    let cell = grid.resolution * SCALE;
    for row in 0..grid.height {
        for col in 0..grid.width {
            if grid.occupied(col, row) {
                let world = Point2::new(
                    lo.x + col as f64 * grid.resolution,
                    lo.y + (row + 1) as f64 * grid.resolution,
                );
                let (x, y) = frame.px(world);
                let _ = writeln!(
                    out,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"black\"/>"
                );
            }
        }
    }

    // goal region
    let (gx, gy) = frame.px(goal);
    let _ = writeln!(
        out,
        "<circle cx=\"{gx:.2}\" cy=\"{gy:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>",
        mindist * SCALE
    );

    // explored tree: one blue polyline per non-root node
    if let Some(tree) = tree {
        for node in tree.nodes.iter() {
            let Some(parent) = node.parent else { continue };
            let mut pts = vec![tree.nodes[parent].position()];
            if node.segment.is_empty() {
                pts.push(node.position());
            } else {
                pts.extend(node.segment.iter().map(|s| Point2::new(s.x, s.y)));
            }
            polyline(
                &mut out,
                &frame,
                &pts,
                "fill=\"none\" stroke=\"blue\" stroke-width=\"1\"",
            );
        }
    }

    // final path in red
    let path_points: Vec<Point2> = path.iter().map(|p| Point2::new(p.x, p.y)).collect();
    polyline(
        &mut out,
        &frame,
        &path_points,
        "fill=\"none\" stroke=\"red\" stroke-width=\"2\"",
    );

    // start and goal markers
    let (sx, sy) = frame.px(start);
    let _ = writeln!(
        out,
        "<circle cx=\"{sx:.2}\" cy=\"{sy:.2}\" r=\"4.00\" fill=\"green\"/>"
    );
    let _ = writeln!(
        out,
        "<circle cx=\"{gx:.2}\" cy=\"{gy:.2}\" r=\"4.00\" fill=\"magenta\"/>"
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ReducedState;
    use crate::planner::{plan, PlannerConfig};
    use crate::VehicleParams;

    fn grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::empty(40, 20, 1.0, Point2::new(0.0, 0.0));
        for col in 10..12 {
            for row in 0..8 {
                g.set_occupied(col, row, true);
            }
        }
        g
    }

    #[test]
    fn empty_tree_renders_map_and_markers_only() {
        let g = grid();
        let svg = render_svg(&g, None, &[], Point2::new(2.0, 10.0), Point2::new(35.0, 10.0), 3.0);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        let rects = svg.matches("<rect").count();
        assert_eq!(rects, 1 + g.obstacle_count()); // background + obstacles
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 3); // region + start + goal
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let g = grid();
        let path = [
            PathPoint { x: 2.0, y: 10.0, theta: 0.0 },
            PathPoint { x: 20.0, y: 12.0, theta: 0.1 },
            PathPoint { x: 35.0, y: 10.0, theta: 0.0 },
        ];
        let a = render_svg(&g, None, &path, Point2::new(2.0, 10.0), Point2::new(35.0, 10.0), 3.0);
        let b = render_svg(&g, None, &path, Point2::new(2.0, 10.0), Point2::new(35.0, 10.0), 3.0);
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn element_counts_track_tree_and_path() {
        let params = VehicleParams::default();
        let mut cfg = PlannerConfig::defaults(&params);
        cfg.rng_seed = 4;
        let mut g = OccupancyGrid::empty(160, 60, 0.5, Point2::new(0.0, 0.0));
        for row in 0..60 {
            let y = (row as f64 + 0.5) * 0.5;
            if !(5.0..=25.0).contains(&y) {
                for col in 0..160 {
                    g.set_occupied(col, row, true);
                }
            }
        }
        let start = ReducedState::new(5.0, 15.0, 0.0, 0.0, 0.0);
        let goal = Point2::new(65.0, 15.0);
        let result = plan(&g, start, goal, &cfg, &params).unwrap();
        let path: Vec<PathPoint> = result
            .path
            .iter()
            .map(|s| PathPoint { x: s.x, y: s.y, theta: s.theta })
            .collect();
        let svg = render_svg(&g, Some(&result.tree), &path, Point2::new(5.0, 15.0), goal, cfg.mindist);
        let polylines = svg.matches("<polyline").count();
        let blue = svg.matches("stroke=\"blue\"").count();
        let red = svg.matches("stroke=\"red\"").count();
        assert_eq!(blue, result.tree.nodes.len() - 1); // one per non-root node
        assert_eq!(red, 1);
        assert_eq!(polylines, blue + red);
    }
}
