//! Occupancy-grid environment: map ingestion, the world-coordinate
//! transform, and the point / swept-trajectory collision queries that act
//! as collision authority for the planner and connector.

mod pgm;
mod scenario;

pub use pgm::{load_grid, save_grid_p2};
pub use scenario::{ScenarioSpec, ScenarioError};

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geom::Point2;

/// A rasterized free/obstacle map with a world-coordinate transform.
///
/// Cells are stored row-major with cell `(0, 0)` at the world position
/// `origin` (bottom-left); `true` marks an obstacle. The PGM loader flips
/// image rows (image row 0 is the top of the world) into this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    /// Cell edge length, m.
    pub resolution: f64,
    /// World coordinates of the lower-left corner of cell (0, 0), m.
    pub origin: Point2,
    /// Row-major occupancy bits, `cells[row * width + col]`.
    pub cells: Vec<bool>,
}

/// Errors from map loading and queries.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("pgm parse error at byte {offset}: expected {what}")]
    Parse { offset: usize, what: &'static str },
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("cannot read map file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl OccupancyGrid {
    /// Load from a PGM file on disk.
    pub fn from_pgm_file(path: &Path, resolution: f64, origin: Point2) -> Result<Self, GridError> {
        let bytes = fs::read(path).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })?;
        load_grid(&bytes, resolution, origin)
    }

    /// Build an all-free grid (fixture/test helper).
    pub fn empty(width: usize, height: usize, resolution: f64, origin: Point2) -> Self {
        OccupancyGrid {
            width,
            height,
            resolution,
            origin,
            cells: vec![false; width * height],
        }
    }

    /// Occupancy of a cell by integer index; out-of-range is an obstacle.
    pub fn occupied(&self, col: usize, row: usize) -> bool {
        if col >= self.width || row >= self.height {
            return true;
        }
        self.cells[row * self.width + col]
    }

    pub fn set_occupied(&mut self, col: usize, row: usize, value: bool) {
        assert!(col < self.width && row < self.height);
        self.cells[row * self.width + col] = value;
    }

    /// Cell containing a world point, by the floor rule. `None` when the
    /// point is outside the grid extent.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.origin.x) / self.resolution).floor();
        let row = ((y - self.origin.y) / self.resolution).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            None
        } else {
            Some((col as usize, row as usize))
        }
    }

    /// World extent as (min, max) corners.
    pub fn extent(&self) -> (Point2, Point2) {
        (
            self.origin,
            Point2::new(
                self.origin.x + self.width as f64 * self.resolution,
                self.origin.y + self.height as f64 * self.resolution,
            ),
        )
    }

    /// True when the point lies inside the grid and its cell is free.
    /// Out-of-bounds points are "not free" rather than an error.
    pub fn point_free(&self, x: f64, y: f64) -> bool {
        match self.cell_of(x, y) {
            Some((col, row)) => !self.cells[row * self.width + col],
            None => false,
        }
    }

    /// True when `p` is outside the grid or within `margin` of an obstacle
    /// cell (Euclidean distance to the cell rectangle).
    fn point_collides(&self, p: Point2, margin: f64) -> bool {
        let (lo, hi) = self.extent();
        if p.x < lo.x || p.y < lo.y || p.x >= hi.x || p.y >= hi.y {
            return true;
        }
        let res = self.resolution;
        let col_lo = (((p.x - margin - self.origin.x) / res).floor()).max(0.0) as usize;
        let row_lo = (((p.y - margin - self.origin.y) / res).floor()).max(0.0) as usize;
        let col_hi = ((((p.x + margin - self.origin.x) / res).floor()) as isize)
            .min(self.width as isize - 1);
        let row_hi = ((((p.y + margin - self.origin.y) / res).floor()) as isize)
            .min(self.height as isize - 1);
        if col_hi < 0 || row_hi < 0 {
            return false;
        }
        let margin_sq = margin * margin;
        for row in row_lo..=(row_hi as usize) {
            for col in col_lo..=(col_hi as usize) {
                if !self.cells[row * self.width + col] {
                    continue;
                }
                let x_min = self.origin.x + col as f64 * res;
                let y_min = self.origin.y + row as f64 * res;
                let dx = (x_min - p.x).max(0.0).max(p.x - (x_min + res));
                let dy = (y_min - p.y).max(0.0).max(p.y - (y_min + res));
                if dx * dx + dy * dy <= margin_sq {
                    return true;
                }
            }
        }
        false
    }

    /// Swept-trajectory collision test: checks every given state position
    /// plus interpolated points at spacing at most `resolution / 2` between
    /// consecutive positions, each with the disc-margin test.
    pub fn trajectory_collides(&self, states: &[Point2], margin: f64) -> bool {
        assert!(margin >= 0.0, "margin must be non-negative");
        let Some(&first) = states.first() else {
            return false;
        };
        if self.point_collides(first, margin) {
            return true;
        }
        for pair in states.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let len = a.distance(b);
            let pieces = (len / (0.5 * self.resolution)).ceil().max(1.0) as usize;
            for i in 1..=pieces {
                let t = i as f64 / pieces as f64;
                let p = Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                if self.point_collides(p, margin) {
                    return true;
                }
            }
        }
        false
    }

    /// Dense reference collision test at spacing `resolution / 10`; used as
    /// the brute-force oracle for `trajectory_collides`.
    pub fn trajectory_collides_dense(&self, states: &[Point2], margin: f64) -> bool {
        let Some(&first) = states.first() else {
            return false;
        };
        if self.point_collides(first, margin) {
            return true;
        }
        for pair in states.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let len = a.distance(b);
            let pieces = (len / (0.1 * self.resolution)).ceil().max(1.0) as usize;
            for i in 1..=pieces {
                let t = i as f64 / pieces as f64;
                let p = Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                if self.point_collides(p, margin) {
                    return true;
                }
            }
        }
        false
    }

    /// Number of obstacle cells.
    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wall_grid() -> OccupancyGrid {
        // 10 x 10 m at 1 m resolution with a 1-cell-thick vertical wall at
        // x in [5, 6)
        let mut g = OccupancyGrid::empty(10, 10, 1.0, Point2::new(0.0, 0.0));
        for row in 0..10 {
            g.set_occupied(5, row, true);
        }
        g
    }

    #[test]
    fn point_free_center_of_free_cell() {
        let g = wall_grid();
        assert!(g.point_free(0.5, 0.5));
        assert!(!g.point_free(5.5, 0.5)); // inside the wall
    }

    #[test]
    fn outside_extent_is_not_free() {
        let g = wall_grid();
        assert!(!g.point_free(-0.1, 5.0));
        assert!(!g.point_free(10.1, 5.0));
        assert!(!g.point_free(5.0, -3.0));
    }

    #[test]
    fn edge_points_resolve_by_floor() {
        let g = wall_grid();
        // x = 5.0 floors into column 5 (the wall), x = 4.999… into column 4
        assert!(!g.point_free(5.0, 0.5));
        assert!(g.point_free(4.999999, 0.5));
        // the right extent boundary floors out of range -> not free
        assert!(!g.point_free(10.0, 0.5));
    }

    #[test]
    fn segment_through_thin_wall_is_caught() {
        let g = wall_grid();
        let states = [Point2::new(3.5, 4.5), Point2::new(7.5, 4.5)];
        assert!(g.trajectory_collides(&states, 0.0));
        // parallel to the wall on the free side: no collision
        let free = [Point2::new(3.5, 0.5), Point2::new(3.5, 9.5)];
        assert!(!g.trajectory_collides(&free, 0.0));
    }

    #[test]
    fn state_inside_obstacle_collides() {
        let g = wall_grid();
        assert!(g.trajectory_collides(&[Point2::new(5.5, 5.5)], 0.0));
        assert!(!g.trajectory_collides(&[Point2::new(2.5, 5.5)], 0.0));
        assert!(!g.trajectory_collides(&[], 0.0));
    }

    #[test]
    fn margin_expands_the_wall() {
        let g = wall_grid();
        let near = [Point2::new(4.2, 4.5)]; // 0.8 m from the wall face
        assert!(!g.trajectory_collides(&near, 0.5));
        assert!(g.trajectory_collides(&near, 1.0));
    }

    #[test]
    fn save_load_roundtrip_preserves_occupancy() {
        let g = wall_grid();
        let reparsed = load_grid(&save_grid_p2(&g), g.resolution, g.origin).unwrap();
        assert_eq!(g.cells, reparsed.cells);
        assert_eq!((g.width, g.height), (reparsed.width, reparsed.height));
    }

    #[test]
    fn matches_dense_sampling_on_random_segments() {
        // seeded LCG; 100 random segments against the res/10 oracle
        let g = wall_grid();
        let mut seed = 0x853c49e6748fea9bu64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut disagreements = 0;
        for _ in 0..100 {
            let a = Point2::new(next() * 12.0 - 1.0, next() * 12.0 - 1.0);
            let b = Point2::new(next() * 12.0 - 1.0, next() * 12.0 - 1.0);
            let margin = next() * 1.5;
            let coarse = g.trajectory_collides(&[a, b], margin);
            let dense = g.trajectory_collides_dense(&[a, b], margin);
            if coarse != dense {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    proptest! {
        #[test]
        fn collision_is_monotone_in_margin(
            ax in -1.0f64..11.0, ay in -1.0f64..11.0,
            bx in -1.0f64..11.0, by in -1.0f64..11.0,
            m1 in 0.0f64..2.0, m2 in 0.0f64..2.0,
        ) {
            let g = wall_grid();
            let (small, large) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let states = [Point2::new(ax, ay), Point2::new(bx, by)];
            if g.trajectory_collides(&states, small) {
                prop_assert!(g.trajectory_collides(&states, large));
            }
        }
    }
}
