//! Scenario files: a map reference, start pose, goal point and optional
//! planner/connector overrides, in the same flat key=value format as the
//! parameter files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::OccupancyGrid;
use crate::geom::Point2;
use crate::params::{parse_key_values, ParamError};

/// A parsed scenario: where the map lives, where the vehicle starts and
/// where it should end up, plus any configuration overrides.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    /// Map path, resolved relative to the scenario file's directory.
    pub map: PathBuf,
    /// Map resolution, m/cell.
    pub resolution: f64,
    /// World coordinates of the map's lower-left corner.
    pub origin: Point2,
    /// Start pose (x, y, theta).
    pub start: (f64, f64, f64),
    /// Goal point.
    pub goal: Point2,
    pub overrides: ScenarioOverrides,
}

/// Optional per-scenario overrides of planner and connector settings.
/// `None` keeps the built-in default.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOverrides {
    pub n_arc_points: Option<usize>,
    pub arc_radius: Option<f64>,
    pub n_goal_bias: Option<usize>,
    pub goal_bias_radius: Option<f64>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub mindist: Option<f64>,
    pub margin: Option<f64>,
    pub max_expansions: Option<usize>,
    pub seed: Option<u64>,
    pub shooting_intervals: Option<usize>,
    pub v_max: Option<f64>,
    pub force_bound: Option<f64>,
    pub goal_theta: Option<f64>,
    pub goal_v: Option<f64>,
    pub tol_pos: Option<f64>,
    pub tol_theta: Option<f64>,
    pub tol_v: Option<f64>,
    pub max_solver_iters: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] ParamError),
    #[error("scenario is missing required key {0:?}")]
    Missing(&'static str),
    #[error("scenario start ({0}, {1}) is not in free space")]
    StartBlocked(f64, f64),
    #[error("scenario goal ({0}, {1}) is not in free space")]
    GoalBlocked(f64, f64),
}

impl ScenarioSpec {
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_with_base(&text, base)
    }

    /// Parse scenario text; `base` anchors relative map paths.
    pub fn from_str_with_base(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        let mut map: Option<PathBuf> = None;
        let mut values: [Option<f64>; 8] = [None; 8];
        const REQUIRED: [&str; 8] = [
            "resolution",
            "origin_x",
            "origin_y",
            "start_x",
            "start_y",
            "start_theta",
            "goal_x",
            "goal_y",
        ];
        let mut over = ScenarioOverrides::default();

        for (key, value, line) in parse_key_values(text)? {
            if key == "map" {
                let p = PathBuf::from(&value);
                map = Some(if p.is_absolute() { p } else { base.join(p) });
                continue;
            }
            if let Some(slot) = REQUIRED.iter().position(|&k| k == key) {
                values[slot] = Some(parse_f64(&key, &value, line)?);
                continue;
            }
            match key.as_str() {
                "n_arc_points" => over.n_arc_points = Some(parse_usize(&key, &value, line)?),
                "arc_radius" => over.arc_radius = Some(parse_f64(&key, &value, line)?),
                "n_goal_bias" => over.n_goal_bias = Some(parse_usize(&key, &value, line)?),
                "goal_bias_radius" => over.goal_bias_radius = Some(parse_f64(&key, &value, line)?),
                "horizon" => over.horizon = Some(parse_f64(&key, &value, line)?),
                "step" => over.step = Some(parse_f64(&key, &value, line)?),
                "mindist" => over.mindist = Some(parse_f64(&key, &value, line)?),
                "margin" => over.margin = Some(parse_f64(&key, &value, line)?),
                "max_expansions" => over.max_expansions = Some(parse_usize(&key, &value, line)?),
                "seed" => over.seed = Some(parse_usize(&key, &value, line)? as u64),
                "shooting_intervals" => {
                    over.shooting_intervals = Some(parse_usize(&key, &value, line)?)
                }
                "v_max" => over.v_max = Some(parse_f64(&key, &value, line)?),
                "force_bound" => over.force_bound = Some(parse_f64(&key, &value, line)?),
                "goal_theta" => over.goal_theta = Some(parse_f64(&key, &value, line)?),
                "goal_v" => over.goal_v = Some(parse_f64(&key, &value, line)?),
                "tol_pos" => over.tol_pos = Some(parse_f64(&key, &value, line)?),
                "tol_theta" => over.tol_theta = Some(parse_f64(&key, &value, line)?),
                "tol_v" => over.tol_v = Some(parse_f64(&key, &value, line)?),
                "max_solver_iters" => {
                    over.max_solver_iters = Some(parse_usize(&key, &value, line)?)
                }
                _ => return Err(ParamError::UnknownKey { key, line }.into()),
            }
        }

        let map = map.ok_or(ScenarioError::Missing("map"))?;
        let mut req = [0.0f64; 8];
        for (i, v) in values.iter().enumerate() {
            req[i] = v.ok_or(ScenarioError::Missing(REQUIRED[i]))?;
        }
        Ok(ScenarioSpec {
            map,
            resolution: req[0],
            origin: Point2::new(req[1], req[2]),
            start: (req[3], req[4], req[5]),
            goal: Point2::new(req[6], req[7]),
            overrides: over,
        })
    }

    /// Load the referenced map.
    pub fn load_map(&self) -> Result<OccupancyGrid, super::GridError> {
        OccupancyGrid::from_pgm_file(&self.map, self.resolution, self.origin)
    }

    /// Enforce the free-start / free-goal invariants against the map.
    pub fn validate_against(&self, grid: &OccupancyGrid) -> Result<(), ScenarioError> {
        if !grid.point_free(self.start.0, self.start.1) {
            return Err(ScenarioError::StartBlocked(self.start.0, self.start.1));
        }
        if !grid.point_free(self.goal.x, self.goal.y) {
            return Err(ScenarioError::GoalBlocked(self.goal.x, self.goal.y));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, ScenarioError> {
    value.parse::<f64>().map_err(|_| {
        ParamError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            line,
        }
        .into()
    })
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize, ScenarioError> {
    value.parse::<usize>().map_err(|_| {
        ParamError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            line,
        }
        .into()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
# corridor run
map = maps/corridor.pgm
resolution = 0.5
origin_x = 0
origin_y = 0
start_x = 5
start_y = 15
start_theta = 0
goal_x = 65
goal_y = 15
seed = 7
mindist = 3.0
";

    #[test]
    fn parses_required_fields_and_overrides() {
        let spec = ScenarioSpec::from_str_with_base(TEXT, Path::new("/tmp/fix")).unwrap();
        assert_eq!(spec.map, PathBuf::from("/tmp/fix/maps/corridor.pgm"));
        assert_eq!(spec.resolution, 0.5);
        assert_eq!(spec.start, (5.0, 15.0, 0.0));
        assert_eq!(spec.goal, Point2::new(65.0, 15.0));
        assert_eq!(spec.overrides.seed, Some(7));
        assert_eq!(spec.overrides.mindist, Some(3.0));
        assert_eq!(spec.overrides.horizon, None);
    }

    #[test]
    fn missing_key_is_an_error() {
        let text = "map=m.pgm\nresolution=1\n";
        assert!(matches!(
            ScenarioSpec::from_str_with_base(text, Path::new(".")),
            Err(ScenarioError::Missing(_))
        ));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = format!("{TEXT}warp_drive=1\n");
        assert!(matches!(
            ScenarioSpec::from_str_with_base(&text, Path::new(".")),
            Err(ScenarioError::Format(ParamError::UnknownKey { .. }))
        ));
    }

    #[test]
    fn blocked_start_is_rejected() {
        let spec = ScenarioSpec::from_str_with_base(TEXT, Path::new(".")).unwrap();
        let mut grid = OccupancyGrid::empty(140, 60, 0.5, Point2::new(0.0, 0.0));
        assert!(spec.validate_against(&grid).is_ok());
        let (col, row) = grid.cell_of(5.0, 15.0).unwrap();
        grid.set_occupied(col, row, true);
        assert!(matches!(
            spec.validate_against(&grid),
            Err(ScenarioError::StartBlocked(..))
        ));
    }
}
