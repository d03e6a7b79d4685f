//! Closed minimum-length tours over small 3D point sets.
//!
//! Instances up to `n_exact` points are solved exactly with Held-Karp dynamic
//! programming. Larger ones use multi-start nearest-neighbour construction
//! polished by 2-opt.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{distance, Point};

/// Largest instance the exact solver will accept regardless of configuration.
pub const EXACT_HARD_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    /// Cyclic visiting order; always starts at index 0.
    pub order: Vec<usize>,
    pub length: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TourSolver {
    pub n_exact: usize,
    pub seed: u64,
    /// Nearest-neighbour starts tried by the heuristic.
    pub restarts: usize,
}

impl Default for TourSolver {
    fn default() -> Self {
        TourSolver {
            n_exact: 16,
            seed: 0,
            restarts: 8,
        }
    }
}

impl TourSolver {
    pub fn solve(&self, points: &[Point]) -> Result<Tour, PlanError> {
        if points.len() <= self.n_exact.min(EXACT_HARD_LIMIT) {
            solve_exact_with_limit(points, self.n_exact.min(EXACT_HARD_LIMIT))
        } else {
            solve_heuristic_with(points, self.seed, self.restarts)
        }
    }
}

fn distance_matrix(points: &[Point]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| distance(a, b)).collect())
        .collect()
}

fn closed_length(order: &[usize], dist: &[Vec<f64>]) -> f64 {
    let n = order.len();
    (0..n).map(|i| dist[order[i]][order[(i + 1) % n]]).sum()
}

/// Closed-loop Euclidean length of `order` over `points`.
pub fn tour_length(order: &[usize], points: &[Point]) -> Result<f64, PlanError> {
    let mut seen = vec![false; points.len()];
    if order.len() != points.len() {
        return Err(PlanError::NotPermutation { len: points.len() });
    }
    for &i in order {
        if i >= points.len() || std::mem::replace(&mut seen[i], true) {
            return Err(PlanError::NotPermutation { len: points.len() });
        }
    }
    let n = order.len();
    Ok((0..n)
        .map(|i| distance(&points[order[i]], &points[order[(i + 1) % n]]))
        .sum())
}

pub fn solve_exact(points: &[Point]) -> Result<Tour, PlanError> {
    solve_exact_with_limit(points, TourSolver::default().n_exact)
}

/// Held-Karp over "cost to finish" states so that the optimum can be rebuilt
/// forwards, always taking the smallest admissible next index. Among tours
/// whose length ties the optimum this yields the lexicographically smallest
/// order starting at 0.
pub fn solve_exact_with_limit(points: &[Point], limit: usize) -> Result<Tour, PlanError> {
    let k = points.len();
    if k == 0 {
        return Err(PlanError::EmptyInstance);
    }
    if k > limit.min(EXACT_HARD_LIMIT) {
        return Err(PlanError::TooManyPoints {
            got: k,
            limit: limit.min(EXACT_HARD_LIMIT),
        });
    }
    if k <= 3 {
        let order: Vec<usize> = (0..k).collect();
        let length = tour_length(&order, points)?;
        return Ok(Tour {
            order,
            length,
            exact: true,
        });
    }

    let dist = distance_matrix(points);
    // Vertex v >= 1 is bit v-1.
    let rest = k - 1;
    let full = (1usize << rest) - 1;
    let mut finish = vec![f64::INFINITY; (full + 1) * rest];
    let at = |mask: usize, v: usize| mask * rest + (v - 1);

    for v in 1..k {
        finish[at(full, v)] = dist[v][0];
    }
    for mask in (1..full).rev() {
        for v in 1..k {
            if mask & (1 << (v - 1)) == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for u in 1..k {
                let bit = 1 << (u - 1);
                if mask & bit != 0 {
                    continue;
                }
                let c = dist[v][u] + finish[at(mask | bit, u)];
                if c < best {
                    best = c;
                }
            }
            finish[at(mask, v)] = best;
        }
    }

    let step_cost = |cur: usize, mask: usize, u: usize| dist[cur][u] + finish[at(mask | (1 << (u - 1)), u)];
    let optimum = (1..k).map(|u| step_cost(0, 0, u)).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * optimum.max(1.0);

    let mut order = Vec::with_capacity(k);
    order.push(0);
    let mut cur = 0;
    let mut mask = 0usize;
    let mut remaining = optimum;
    while mask != full {
        let next = (1..k)
            .filter(|&u| mask & (1 << (u - 1)) == 0)
            .find(|&u| step_cost(cur, mask, u) <= remaining + tol)
            .expect("Held-Karp reconstruction lost the optimum");
        mask |= 1 << (next - 1);
        remaining = finish[at(mask, next)];
        order.push(next);
        cur = next;
    }
    let length = closed_length(&order, &dist);
    Ok(Tour {
        order,
        length,
        exact: true,
    })
}

pub fn solve_heuristic(points: &[Point], seed: u64) -> Result<Tour, PlanError> {
    solve_heuristic_with(points, seed, TourSolver::default().restarts)
}

pub fn solve_heuristic_with(points: &[Point], seed: u64, restarts: usize) -> Result<Tour, PlanError> {
    let k = points.len();
    if k == 0 {
        return Err(PlanError::EmptyInstance);
    }
    let dist = distance_matrix(points);
    let mut starts: Vec<usize> = (0..k).collect();
    starts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    starts.truncate(restarts.max(1));

    let mut best: Option<(Vec<usize>, f64)> = None;
    for start in starts {
        let mut order = nearest_neighbor(&dist, start);
        two_opt(&mut order, &dist);
        let order = canonical(order);
        let len = closed_length(&order, &dist);
        let better = match &best {
            None => true,
            Some((b, bl)) => len < *bl - 1e-12 || (len <= *bl + 1e-12 && order < *b),
        };
        if better {
            best = Some((order, len));
        }
    }
    let (order, length) = best.expect("at least one start");
    Ok(Tour {
        order,
        length,
        exact: false,
    })
}

fn nearest_neighbor(dist: &[Vec<f64>], start: usize) -> Vec<usize> {
    let k = dist.len();
    let mut visited = vec![false; k];
    let mut order = Vec::with_capacity(k);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..k {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for (u, &seen) in visited.iter().enumerate() {
            if !seen && dist[cur][u] < best {
                best = dist[cur][u];
                next = u;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// Applies improving 2-opt exchanges until none remains.
pub(crate) fn two_opt(order: &mut [usize], dist: &[Vec<f64>]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            let a = order[i];
            let b = order[i + 1];
            let dab = dist[a][b];
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let c = order[j];
                let d = order[(j + 1) % n];
                let delta = dist[a][c] + dist[b][d] - dab - dist[c][d];
                if delta < -1e-10 * dab.max(1.0) {
                    order[i + 1..=j].reverse();
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            return;
        }
    }
}

/// Rotates to start at 0 and orients so that `order[1] < order[n-1]`.
fn canonical(mut order: Vec<usize>) -> Vec<usize> {
    let pos = order.iter().position(|&v| v == 0).expect("index 0 present");
    order.rotate_left(pos);
    if order.len() > 2 && order[1] > order[order.len() - 1] {
        order[1..].reverse();
    }
    order
}

/// Largest length reduction any single 2-opt exchange could still achieve.
pub fn best_two_opt_gain(order: &[usize], points: &[Point]) -> f64 {
    let n = order.len();
    let mut gain: f64 = 0.0;
    if n < 4 {
        return gain;
    }
    let d = |a: usize, b: usize| distance(&points[order[a]], &points[order[b % n]]);
    for i in 0..n - 1 {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            gain = gain.max(d(i, i + 1) + d(j, j + 1) - d(i, j) - d(i + 1, j + 1));
        }
    }
    gain
}
