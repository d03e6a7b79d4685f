//! Environment discretization and fleet parameters.
//!
//! The surveyed area is an `x_max × y_max` rectangle flown at altitude `z_bar`.
//! It is cut into square cells of side `d` (one detection footprint) and every
//! cell center at patrol altitude is a node that must be revisited forever.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;

/// Absolute tolerance for derived-geometry equality checks, in length units.
pub const GEOM_TOL: f64 = 1e-9;

pub type Point = Point3<f64>;

/// Row-major node index: `row * x_bar + col`.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_max: f64,
    pub y_max: f64,
    /// Side of the square detection footprint.
    pub d: f64,
    /// Patrol altitude.
    pub z_bar: f64,
    pub x_bar: usize,
    pub y_bar: usize,
}

fn cell_count(extent: f64, d: f64, axis: &'static str) -> Result<usize, PlanError> {
    let ratio = extent / d;
    let cells = ratio.round();
    if cells < 1.0 || (cells * d - extent).abs() > GEOM_TOL {
        return Err(PlanError::NotDivisible { axis, extent, d, ratio });
    }
    Ok(cells as usize)
}

impl GridSpec {
    /// Builds the grid, rejecting dimensions that are not whole multiples of `d`.
    pub fn new(x_max: f64, y_max: f64, d: f64, z_bar: f64) -> Result<Self, PlanError> {
        for (name, value) in [("x_max", x_max), ("y_max", y_max), ("d", d), ("z_bar", z_bar)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(PlanError::NonPositive { name, value });
            }
        }
        Ok(GridSpec {
            x_max,
            y_max,
            d,
            z_bar,
            x_bar: cell_count(x_max, d, "x")?,
            y_bar: cell_count(y_max, d, "y")?,
        })
    }

    pub fn node_count(&self) -> usize {
        self.x_bar * self.y_bar
    }

    pub fn node_id(&self, col: usize, row: usize) -> NodeId {
        debug_assert!(col < self.x_bar && row < self.y_bar);
        row * self.x_bar + col
    }

    pub fn node(&self, id: NodeId) -> Node {
        let col = id % self.x_bar;
        let row = id / self.x_bar;
        Node {
            col,
            row,
            position: self.cell_center(col, row),
        }
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new((col as f64 + 0.5) * self.d, (row as f64 + 0.5) * self.d, self.z_bar)
    }

    /// Cell whose center lies closest to `(x, y)`, if the point is inside the area.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if x < 0.0 || y < 0.0 || x > self.x_max || y > self.y_max {
            return None;
        }
        let col = ((x / self.d).floor() as usize).min(self.x_bar - 1);
        let row = ((y / self.d).floor() as usize).min(self.y_bar - 1);
        Some((col, row))
    }

    /// All nodes in row-major order.
    pub fn nodes(&self) -> Vec<Node> {
        (0..self.node_count()).map(|id| self.node(id)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub col: usize,
    pub row: usize,
    pub position: Point,
}

/// Team sizes, energy model and speed limits shared by every vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetParams {
    /// Number of UAVs.
    pub n: usize,
    /// Number of UGVs (one per team).
    pub m: usize,
    /// Energy capacity of each UAV.
    pub e_bar: f64,
    /// Energy spent per unit time while airborne.
    pub beta_minus: f64,
    /// Energy gained per unit time while docked on a UGV.
    pub beta_plus: f64,
    pub uav_speed: f64,
    pub ugv_speed: f64,
}

impl FleetParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.n == 0 || self.m == 0 {
            return Err(PlanError::EmptyFleet { n: self.n, m: self.m });
        }
        if !self.n.is_multiple_of(self.m) {
            return Err(PlanError::UnevenTeams { n: self.n, m: self.m });
        }
        for (name, value) in [
            ("e_bar", self.e_bar),
            ("beta_minus", self.beta_minus),
            ("beta_plus", self.beta_plus),
            ("uav_speed", self.uav_speed),
            ("ugv_speed", self.ugv_speed),
        ] {
            if value.is_nan() || value <= 0.0 {
                return Err(PlanError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    pub fn uavs_per_team(&self) -> usize {
        self.n / self.m
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    nalgebra::distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn survey_area_dimensions() {
        let g = GridSpec::new(1584.0, 1056.0, 33.0, 100.0).unwrap();
        assert_eq!((g.x_bar, g.y_bar), (48, 32));
        assert_eq!(g.nodes().len(), 1536);

        let g = GridSpec::new(33.0, 33.0, 33.0, 1.0).unwrap();
        assert_eq!((g.x_bar, g.y_bar), (1, 1));
        let nodes = g.nodes();
        assert_eq!(nodes.len(), 1);
        assert_abs_diff_eq!(nodes[0].position, Point::new(16.5, 16.5, 1.0));

        let g = GridSpec::new(330.0, 165.0, 33.0, 50.0).unwrap();
        assert_eq!((g.x_bar, g.y_bar), (10, 5));
        assert_abs_diff_eq!(g.x_bar as f64 * g.d, g.x_max, epsilon = GEOM_TOL);
        assert_abs_diff_eq!(g.y_bar as f64 * g.d, g.y_max, epsilon = GEOM_TOL);
    }

    #[test]
    fn nodes_sit_at_cell_centers() {
        let g = GridSpec::new(4.0, 4.0, 2.0, 3.0).unwrap();
        let got: Vec<(f64, f64)> = g.nodes().iter().map(|n| (n.position.x, n.position.y)).collect();
        assert_eq!(got, vec![(1.0, 1.0), (3.0, 1.0), (1.0, 3.0), (3.0, 3.0)]);
        assert!(g.nodes().iter().all(|n| n.position.z == 3.0));
    }

    #[test]
    fn rejects_non_divisible_dimensions() {
        let err = GridSpec::new(100.0, 66.0, 33.0, 10.0).unwrap_err();
        assert!(matches!(err, PlanError::NotDivisible { axis: "x", .. }));
        assert!(GridSpec::new(66.0, 50.0, 33.0, 10.0).is_err());
        assert!(GridSpec::new(10.0, 10.0, 20.0, 1.0).is_err());
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(GridSpec::new(0.0, 10.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(10.0, 10.0, -1.0, 1.0).is_err());
        assert!(GridSpec::new(10.0, 10.0, 1.0, 0.0).is_err());
        assert!(GridSpec::new(f64::NAN, 10.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fleet_validation() {
        let ok = FleetParams {
            n: 15,
            m: 3,
            e_bar: 100.0,
            beta_minus: 0.5,
            beta_plus: 0.5,
            uav_speed: 10.0,
            ugv_speed: 5.0,
        };
        ok.validate().unwrap();
        assert_eq!(ok.uavs_per_team(), 5);
        assert!(matches!(
            FleetParams { n: 7, ..ok }.validate(),
            Err(PlanError::UnevenTeams { .. })
        ));
        assert!(FleetParams { beta_plus: 0.0, ..ok }.validate().is_err());
        assert!(FleetParams { m: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn cell_lookup_matches_centers() {
        let g = GridSpec::new(10.0, 6.0, 2.0, 1.0).unwrap();
        for node in g.nodes() {
            assert_eq!(g.cell_at(node.position.x, node.position.y), Some((node.col, node.row)));
        }
        assert_eq!(g.cell_at(10.0, 6.0), Some((4, 2)));
        assert_eq!(g.cell_at(-0.1, 1.0), None);
    }
}
