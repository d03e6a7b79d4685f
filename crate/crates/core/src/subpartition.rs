//! Angular split of a partition among the UAVs of one team.
//!
//! Nodes are ordered by their polar angle about the release point (measured
//! counter-clockwise from +x, in `[0, 2π)`), and consecutive runs of that order
//! are handed to the UAV slots with sizes `ceil((|V| - s_k) / (u - k))`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{distance, FleetParams, GridSpec, NodeId, Point};
use crate::partition::PartitionRect;
use crate::tour::{Tour, TourSolver};

/// Consecutive run of the angular order assigned to one UAV slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub partition_id: usize,
    /// Zero-based UAV slot within the team.
    pub slot: usize,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubpartitionAssignment {
    pub partition_id: usize,
    pub slot: usize,
    /// Release point lifted to patrol altitude; the route starts and ends here.
    pub release: Point,
    /// Assigned nodes in flying order.
    pub visit_order: Vec<NodeId>,
    pub tour_length: f64,
    /// `tour_length * beta_minus / uav_speed`.
    pub energy_cost: f64,
    pub exact: bool,
}

impl SubpartitionAssignment {
    /// Closed waypoint list: release, every node in order, release.
    pub fn route(&self, grid: &GridSpec) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.visit_order.len() + 2);
        pts.push(self.release);
        pts.extend(self.visit_order.iter().map(|&v| grid.node(v).position));
        pts.push(self.release);
        pts
    }
}

/// Angle and radius of a cell center about the partition center, in cell units.
///
/// Working in local half-cell units keeps the key identical for every
/// translated copy of the partition.
fn polar_key(p: &PartitionRect, col: usize, row: usize) -> (f64, f64) {
    let dx = (col - p.anchor_col) as f64 + 0.5 - p.a1 as f64 / 2.0;
    let dy = (row - p.anchor_row) as f64 + 0.5 - p.a2 as f64 / 2.0;
    let mut angle = dy.atan2(dx);
    if angle < 0.0 {
        angle += TAU;
    }
    (angle, dx.hypot(dy))
}

/// Partition nodes in ascending polar angle; ties go to the nearer node, then
/// the lower id.
pub fn quadrant_sort(grid: &GridSpec, p: &PartitionRect) -> Vec<NodeId> {
    let mut keyed: Vec<(f64, f64, NodeId)> = p
        .nodes
        .iter()
        .map(|&v| {
            let n = grid.node(v);
            let (a, r) = polar_key(p, n.col, n.row);
            (a, r, v)
        })
        .collect();
    keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2)));
    keyed.into_iter().map(|(_, _, v)| v).collect()
}

/// Slice sizes for `total` nodes over `uavs` slots.
pub fn slice_sizes(total: usize, uavs: usize) -> Vec<usize> {
    let mut taken = 0;
    (0..uavs)
        .map(|k| {
            let size = (total - taken).div_ceil(uavs - k);
            taken += size;
            size
        })
        .collect()
}

pub fn allocate(grid: &GridSpec, p: &PartitionRect, uavs: usize) -> Result<Vec<Slice>, PlanError> {
    if uavs == 0 || uavs > p.nodes.len() {
        return Err(PlanError::TooManyUavs {
            uavs,
            nodes: p.nodes.len(),
        });
    }
    let sorted = quadrant_sort(grid, p);
    let mut rest = sorted.as_slice();
    Ok(slice_sizes(sorted.len(), uavs)
        .into_iter()
        .enumerate()
        .map(|(slot, size)| {
            let (head, tail) = rest.split_at(size);
            rest = tail;
            Slice {
                partition_id: p.id,
                slot,
                nodes: head.to_vec(),
            }
        })
        .collect())
}

/// Solves the closed tour release → slice nodes → release for one slice.
pub fn tour_slice(
    grid: &GridSpec,
    p: &PartitionRect,
    slice: &Slice,
    solver: &TourSolver,
    fleet: &FleetParams,
) -> Result<SubpartitionAssignment, PlanError> {
    let release = Point::new(p.centroid.x, p.centroid.y, grid.z_bar);
    let mut points = Vec::with_capacity(slice.nodes.len() + 1);
    points.push(release);
    points.extend(slice.nodes.iter().map(|&v| grid.node(v).position));
    let tour: Tour = solver.solve(&points)?;
    debug_assert_eq!(tour.order[0], 0);
    let visit_order = tour.order[1..].iter().map(|&i| slice.nodes[i - 1]).collect();
    Ok(SubpartitionAssignment {
        partition_id: p.id,
        slot: slice.slot,
        release,
        visit_order,
        tour_length: tour.length,
        energy_cost: tour.length * fleet.beta_minus / fleet.uav_speed,
        exact: tour.exact,
    })
}

/// Re-anchors an assignment computed on `from` onto the same-shaped `to`.
pub fn translate(
    grid: &GridSpec,
    a: &SubpartitionAssignment,
    from: &PartitionRect,
    to: &PartitionRect,
) -> SubpartitionAssignment {
    debug_assert_eq!((from.a1, from.a2), (to.a1, to.a2));
    let visit_order = a
        .visit_order
        .iter()
        .map(|&v| {
            let n = grid.node(v);
            grid.node_id(
                n.col - from.anchor_col + to.anchor_col,
                n.row - from.anchor_row + to.anchor_row,
            )
        })
        .collect();
    let release = Point::new(to.centroid.x, to.centroid.y, grid.z_bar);
    SubpartitionAssignment {
        partition_id: to.id,
        slot: a.slot,
        release,
        visit_order,
        tour_length: a.tour_length,
        energy_cost: a.energy_cost,
        exact: a.exact,
    }
}

pub fn route_length(route: &[Point]) -> f64 {
    route.windows(2).map(|w| distance(&w[0], &w[1])).sum()
}
