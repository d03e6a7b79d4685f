//! Decomposition of the grid into identical `a1 × a2` rectangles.
//!
//! Blocks are laid out from the origin on a stride of `(a1, a2)`. The last
//! column band and the last row band are anchored flush against the far
//! boundary instead, so every partition has the same shape and the bands may
//! overlap their neighbours when the grid is not an exact multiple of the
//! extents. Partitions are emitted in four families:
//!
//! 1. interior blocks (column-major over block indices),
//! 2. the right-edge band, bottom to top,
//! 3. the top-edge band, left to right,
//! 4. the top-right corner.

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{GridSpec, NodeId, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Interior,
    RightEdge,
    TopEdge,
    Corner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRect {
    pub id: usize,
    pub family: Family,
    pub anchor_col: usize,
    pub anchor_row: usize,
    pub a1: usize,
    pub a2: usize,
    /// Node ids, row-major within the rectangle.
    pub nodes: Vec<NodeId>,
    /// Release point: geometric center of the rectangle at ground level.
    pub centroid: Point,
}

impl PartitionRect {
    fn new(grid: &GridSpec, id: usize, family: Family, col: usize, row: usize, a1: usize, a2: usize) -> Self {
        let mut nodes = Vec::with_capacity(a1 * a2);
        for r in row..row + a2 {
            for c in col..col + a1 {
                nodes.push(grid.node_id(c, r));
            }
        }
        PartitionRect {
            id,
            family,
            anchor_col: col,
            anchor_row: row,
            a1,
            a2,
            nodes,
            centroid: Point::new(
                (col as f64 + a1 as f64 / 2.0) * grid.d,
                (row as f64 + a2 as f64 / 2.0) * grid.d,
                0.0,
            ),
        }
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        (self.anchor_col..self.anchor_col + self.a1).contains(&col)
            && (self.anchor_row..self.anchor_row + self.a2).contains(&row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub a1: usize,
    pub a2: usize,
    pub partitions: Vec<PartitionRect>,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    /// Number of partitions containing each node.
    pub fn membership_counts(&self, grid: &GridSpec) -> Vec<usize> {
        let mut counts = vec![0; grid.node_count()];
        for p in &self.partitions {
            for &v in &p.nodes {
                counts[v] += 1;
            }
        }
        counts
    }
}

/// `ceil(x_bar / a1) * ceil(y_bar / a2)`.
pub fn partition_count(grid: &GridSpec, a1: usize, a2: usize) -> usize {
    grid.x_bar.div_ceil(a1) * grid.y_bar.div_ceil(a2)
}

pub fn partition(grid: &GridSpec, a1: usize, a2: usize) -> Result<PartitionSet, PlanError> {
    if a1 == 0 || a2 == 0 || a1 > grid.x_bar || a2 > grid.y_bar {
        return Err(PlanError::PartitionTooLarge {
            a1,
            a2,
            x_bar: grid.x_bar,
            y_bar: grid.y_bar,
        });
    }
    let blocks_x = grid.x_bar.div_ceil(a1);
    let blocks_y = grid.y_bar.div_ceil(a2);
    let far_col = grid.x_bar - a1;
    let far_row = grid.y_bar - a2;

    let mut out = Vec::with_capacity(blocks_x * blocks_y);
    let mut push = |family, col, row| {
        let id = out.len();
        out.push(PartitionRect::new(grid, id, family, col, row, a1, a2));
    };
    for k1 in 0..blocks_x - 1 {
        for k2 in 0..blocks_y - 1 {
            push(Family::Interior, k1 * a1, k2 * a2);
        }
    }
    for k in 0..blocks_y - 1 {
        push(Family::RightEdge, far_col, k * a2);
    }
    for k in 0..blocks_x - 1 {
        push(Family::TopEdge, k * a1, far_row);
    }
    push(Family::Corner, far_col, far_row);

    Ok(PartitionSet {
        a1,
        a2,
        partitions: out,
    })
}

/// Returns the lowest-id node that belongs to exactly one partition.
///
/// Such a node always exists for layouts produced by [`partition`]; a miss
/// means the layout is corrupt and this panics.
pub fn unique_coverage_witness(grid: &GridSpec, pset: &PartitionSet) -> NodeId {
    pset.membership_counts(grid)
        .iter()
        .position(|&c| c == 1)
        .expect("partition layout has no singly-covered node")
}
