//! Arc-sampling path planner for a non-holonomic vehicle.
//!
//! The crate covers four pieces that are usable on their own and compose
//! into an end-to-end planner over occupancy-grid maps:
//!
//! - [`dynamics`]: the single-track (bicycle) vehicle models and the exact
//!   affine form of their lateral subsystem;
//! - [`integrators`]: eight fixed-step schemes, an adaptive Dormand-Prince
//!   reference, and analytic + empirical stability classification;
//! - [`world`]: PGM occupancy grids with point and swept-trajectory
//!   collision queries;
//! - [`planner`]: greedy tree search that samples steering targets on an
//!   arc ahead of the vehicle and shoots the reduced model at them;
//! - [`connector`]: a minimum-time single-shooting problem over a point
//!   mass model that closes the gap from the tree to the exact goal;
//! - [`render`]: deterministic SVG snapshots of map, tree and path.
//!
//! The `examples/` directory has one runnable example per capability; the
//! thin `arcplan` binary drives the same code from scenario files.

pub mod connector;
pub mod dynamics;
pub mod geom;
pub mod integrators;
pub mod params;
pub mod planner;
pub mod render;
pub mod world;

pub mod cli;

pub use params::VehicleParams;
