//! Regenerate the fixture maps and scenario files under `fixtures/`.
//!
//! ```bash
//! cargo run -p arcplan --example make_maps
//! ```
//!
//! Five planning scenarios (corridor, slalom, street, openfield, wallgap)
//! plus a deliberately unreachable one (walledoff) used to exercise the
//! no-path exit status.

use std::fs;
use std::path::Path;

use arcplan::geom::Point2;
use arcplan::world::{save_grid_p2, OccupancyGrid};

const RES: f64 = 0.5;

struct MapBuilder {
    grid: OccupancyGrid,
}

impl MapBuilder {
    fn new(width_m: f64, height_m: f64) -> Self {
        let w = (width_m / RES).round() as usize;
        let h = (height_m / RES).round() as usize;
        MapBuilder {
            grid: OccupancyGrid::empty(w, h, RES, Point2::new(0.0, 0.0)),
        }
    }

    /// Fill the world-rectangle [x0, x1) x [y0, y1) with obstacles.
    fn block(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        let c0 = (x0 / RES).round().max(0.0) as usize;
        let r0 = (y0 / RES).round().max(0.0) as usize;
        let c1 = ((x1 / RES).round() as usize).min(self.grid.width);
        let r1 = ((y1 / RES).round() as usize).min(self.grid.height);
        for row in r0..r1 {
            for col in c0..c1 {
                self.grid.set_occupied(col, row, true);
            }
        }
    }

    fn save(&self, dir: &Path, name: &str) {
        let path = dir.join(format!("{name}.pgm"));
        fs::write(&path, save_grid_p2(&self.grid)).expect("write map");
        println!(
            "{}: {}x{} cells, {} obstacles",
            path.display(),
            self.grid.width,
            self.grid.height,
            self.grid.obstacle_count()
        );
    }
}

fn scenario(
    dir: &Path,
    name: &str,
    start: (f64, f64, f64),
    goal: (f64, f64),
    extra: &str,
) {
    let text = format!(
        "map = ../maps/{name}.pgm\nresolution = {RES}\norigin_x = 0\norigin_y = 0\n\
         start_x = {}\nstart_y = {}\nstart_theta = {}\ngoal_x = {}\ngoal_y = {}\n{extra}",
        start.0, start.1, start.2, goal.0, goal.1
    );
    let path = dir.join(format!("{name}.scenario"));
    fs::write(&path, text).expect("write scenario");
    println!("{}", path.display());
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let maps = root.join("maps");
    let scenarios = root.join("scenarios");
    fs::create_dir_all(&maps).unwrap();
    fs::create_dir_all(&scenarios).unwrap();

    // corridor: straight free run, goal 60 m ahead
    let mut m = MapBuilder::new(80.0, 30.0);
    m.block(0.0, 0.0, 80.0, 5.0);
    m.block(0.0, 25.0, 80.0, 30.0);
    m.save(&maps, "corridor");
    scenario(&scenarios, "corridor", (5.0, 15.0, 0.0), (65.0, 15.0), "");

    // slalom: staggered gates force S-curves
    let mut m = MapBuilder::new(100.0, 30.0);
    m.block(0.0, 0.0, 100.0, 3.0);
    m.block(0.0, 27.0, 100.0, 30.0);
    m.block(25.0, 3.0, 31.0, 17.0);
    m.block(50.0, 13.0, 56.0, 27.0);
    m.block(75.0, 3.0, 81.0, 17.0);
    m.save(&maps, "slalom");
    scenario(&scenarios, "slalom", (5.0, 15.0, 0.0), (95.0, 15.0), "");

    // street: a straight road with parked obstacles to weave around
    let mut m = MapBuilder::new(80.0, 60.0);
    m.block(0.0, 0.0, 80.0, 23.0); // south buildings
    m.block(0.0, 37.0, 80.0, 60.0); // north buildings
    m.block(0.0, 23.0, 2.0, 37.0); // west end cap
    m.block(20.0, 23.0, 23.0, 28.0); // parked obstacle from the south curb
    m.block(48.0, 32.0, 51.0, 37.0); // parked obstacle from the north curb
    m.save(&maps, "street");
    scenario(&scenarios, "street", (6.0, 30.0, 0.0), (75.0, 30.0), "");

    // openfield: large free space with scattered blocks
    let mut m = MapBuilder::new(100.0, 80.0);
    m.block(30.0, 20.0, 38.0, 28.0);
    m.block(55.0, 40.0, 63.0, 48.0);
    m.block(20.0, 55.0, 28.0, 63.0);
    m.block(70.0, 15.0, 78.0, 23.0);
    m.save(&maps, "openfield");
    scenario(&scenarios, "openfield", (8.0, 8.0, 0.6), (88.0, 66.0), "");

    // wallgap: a wall between start and goal with an offset opening
    let mut m = MapBuilder::new(80.0, 40.0);
    m.block(38.0, 0.0, 40.0, 28.0);
    m.save(&maps, "wallgap");
    scenario(&scenarios, "wallgap", (10.0, 14.0, 0.0), (70.0, 14.0), "");

    // walledoff: the goal is sealed inside a box; planning must fail
    let mut m = MapBuilder::new(60.0, 30.0);
    m.block(40.0, 10.0, 50.0, 11.0);
    m.block(40.0, 19.0, 50.0, 20.0);
    m.block(40.0, 11.0, 41.0, 19.0);
    m.block(49.0, 11.0, 50.0, 19.0);
    m.save(&maps, "walledoff");
    scenario(
        &scenarios,
        "walledoff",
        (5.0, 15.0, 0.0),
        (45.0, 15.0),
        "max_expansions = 400\n",
    );
}
