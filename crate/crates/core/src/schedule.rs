//! Supercycle construction and partition-size selection.
//!
//! One team visits every partition once per supercycle: it releases its UAVs
//! at the partition centroid, waits `Δe/β⁻` for the slowest tour to finish,
//! then drives to the next centroid while recharging, waiting there if the
//! batteries are not yet full. Partition centroids are visited along a
//! minimum-length closed tour.

use serde::{Deserialize, Serialize};

use crate::error::{CandidateDiagnostic, PlanError};
use crate::geometry::{distance, FleetParams, GridSpec, Point};
use crate::par::Execution;
use crate::partition::{partition, partition_count, PartitionSet};
use crate::subpartition::{allocate, tour_slice, translate, SubpartitionAssignment};
use crate::tour::TourSolver;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PlanOptions {
    pub solver: TourSolver,
    pub execution: Execution,
    /// Restrict the sweep to extents that divide the grid evenly.
    pub divisors_only: bool,
    /// Replaces the tour-derived `Δe` when building a plan.
    pub pin_delta_e: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupercyclePlan {
    pub a1: usize,
    pub a2: usize,
    pub partitions: PartitionSet,
    /// Partition ids in visiting order; the cycle closes back to the first.
    pub partition_order: Vec<usize>,
    pub centroid_tour_length: f64,
    pub centroid_tour_exact: bool,
    /// Every partition's assignments, ordered by partition id then slot.
    pub assignments: Vec<SubpartitionAssignment>,
    /// Energy budget governing dwell and charge times.
    pub delta_e: f64,
    /// Largest per-UAV tour energy; equals `delta_e` unless pinned.
    pub tour_delta_e: f64,
    pub pinned: bool,
    /// Release time at each position of `partition_order`, first cycle.
    pub release_times: Vec<f64>,
    /// Time from release at position `i` to release at position `i + 1`.
    pub leg_times: Vec<f64>,
    pub period: f64,
    pub feasible: bool,
}

impl SupercyclePlan {
    pub fn uavs_per_team(&self) -> usize {
        self.assignments.len() / self.partitions.len()
    }

    pub fn assignment(&self, partition_id: usize, slot: usize) -> &SubpartitionAssignment {
        &self.assignments[partition_id * self.uavs_per_team() + slot]
    }

    /// Centroid of the partition at cycle position `pos` (wrapping).
    pub fn release_point(&self, pos: usize) -> Point {
        let id = self.partition_order[pos % self.partition_order.len()];
        self.partitions.partitions[id].centroid
    }

    /// Phase spacing between teams, which is also the steady-state maximum age.
    pub fn team_spacing(&self, fleet: &FleetParams) -> f64 {
        self.period / fleet.m as f64
    }
}

/// Summary of one `(a1, a2)` candidate in the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub a1: usize,
    pub a2: usize,
    pub partitions: usize,
    pub delta_e: f64,
    pub feasible: bool,
    pub period: f64,
}

/// `Δe = max_i L_i β⁻ / u_A`.
pub fn cover_energy(assignments: &[SubpartitionAssignment]) -> f64 {
    assignments.iter().map(|a| a.energy_cost).fold(0.0, f64::max)
}

pub fn check_feasible(delta_e: f64, e_bar: f64) -> bool {
    delta_e <= e_bar
}

/// Release-to-release time for one leg of the supercycle.
pub fn leg_time(from: &Point, to: &Point, delta_e: f64, fleet: &FleetParams) -> f64 {
    let travel = distance(from, to) / fleet.ugv_speed;
    delta_e / fleet.beta_minus + travel.max(delta_e / fleet.beta_plus)
}

/// `T_c = |P| Δe/β⁻ + Σ max(‖c_{i+1} − c_i‖ / u_G, Δe/β⁺)` over the closed
/// cycle through `centroids`; infinite when `Δe` exceeds the capacity.
pub fn supercycle_period(centroids: &[Point], delta_e: f64, fleet: &FleetParams) -> f64 {
    if !check_feasible(delta_e, fleet.e_bar) {
        return f64::INFINITY;
    }
    let k = centroids.len();
    let charge = delta_e / fleet.beta_plus;
    let legs: f64 = (0..k)
        .map(|i| (distance(&centroids[i], &centroids[(i + 1) % k]) / fleet.ugv_speed).max(charge))
        .sum();
    k as f64 * delta_e / fleet.beta_minus + legs
}

/// Tours for the first partition, which is always anchored at the origin.
/// Every other partition is a translated copy with identical tours.
fn template_assignments(
    grid: &GridSpec,
    fleet: &FleetParams,
    pset: &PartitionSet,
    opts: &PlanOptions,
) -> Result<Vec<SubpartitionAssignment>, PlanError> {
    let base = &pset.partitions[0];
    let slices = allocate(grid, base, fleet.uavs_per_team())?;
    opts.execution
        .map(&slices, |s| tour_slice(grid, base, s, &opts.solver, fleet))
        .into_iter()
        .collect()
}

fn centroid_cycle(pset: &PartitionSet, opts: &PlanOptions) -> Result<(Vec<usize>, f64, bool), PlanError> {
    let points: Vec<Point> = pset.partitions.iter().map(|p| p.centroid).collect();
    let tour = opts.solver.solve(&points)?;
    Ok((tour.order, tour.length, tour.exact))
}

/// Scores one candidate without materializing per-partition assignments.
pub fn evaluate(
    grid: &GridSpec,
    fleet: &FleetParams,
    a1: usize,
    a2: usize,
    opts: &PlanOptions,
) -> Result<Candidate, PlanError> {
    let pset = partition(grid, a1, a2)?;
    let delta_e = cover_energy(&template_assignments(grid, fleet, &pset, opts)?);
    let feasible = check_feasible(delta_e, fleet.e_bar);
    let period = if feasible {
        let (order, _, _) = centroid_cycle(&pset, opts)?;
        let centroids: Vec<Point> = order.iter().map(|&i| pset.partitions[i].centroid).collect();
        supercycle_period(&centroids, delta_e, fleet)
    } else {
        f64::INFINITY
    };
    Ok(Candidate {
        a1,
        a2,
        partitions: pset.len(),
        delta_e,
        feasible,
        period,
    })
}

/// Builds the complete supercycle for fixed extents.
pub fn build_plan(
    grid: &GridSpec,
    fleet: &FleetParams,
    a1: usize,
    a2: usize,
    opts: &PlanOptions,
) -> Result<SupercyclePlan, PlanError> {
    fleet.validate()?;
    let pset = partition(grid, a1, a2)?;
    let template = template_assignments(grid, fleet, &pset, opts)?;
    let base = &pset.partitions[0];
    let assignments: Vec<SubpartitionAssignment> = pset
        .partitions
        .iter()
        .flat_map(|p| template.iter().map(move |a| translate(grid, a, base, p)))
        .collect();

    let tour_delta_e = cover_energy(&template);
    let delta_e = opts.pin_delta_e.unwrap_or(tour_delta_e);
    let feasible = check_feasible(delta_e, fleet.e_bar);
    let (partition_order, centroid_tour_length, centroid_tour_exact) = centroid_cycle(&pset, opts)?;

    let k = partition_order.len();
    let centroid = |pos: usize| pset.partitions[partition_order[pos % k]].centroid;
    let (leg_times, release_times, period) = if feasible {
        let legs: Vec<f64> = (0..k)
            .map(|i| leg_time(&centroid(i), &centroid(i + 1), delta_e, fleet))
            .collect();
        let mut releases = Vec::with_capacity(k);
        let mut t = 0.0;
        for leg in &legs {
            releases.push(t);
            t += leg;
        }
        let ordered: Vec<Point> = (0..k).map(centroid).collect();
        (legs, releases, supercycle_period(&ordered, delta_e, fleet))
    } else {
        (vec![f64::INFINITY; k], vec![0.0; k], f64::INFINITY)
    };

    Ok(SupercyclePlan {
        a1,
        a2,
        partitions: pset,
        partition_order,
        centroid_tour_length,
        centroid_tour_exact,
        assignments,
        delta_e,
        tour_delta_e,
        pinned: opts.pin_delta_e.is_some(),
        release_times,
        leg_times,
        period,
        feasible,
    })
}

/// All `(a1, a2)` pairs considered by the sweep, a1-major.
pub fn search_space(grid: &GridSpec, divisors_only: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a1 in 1..=grid.x_bar {
        if divisors_only && !grid.x_bar.is_multiple_of(a1) {
            continue;
        }
        for a2 in 1..=grid.y_bar {
            if divisors_only && !grid.y_bar.is_multiple_of(a2) {
                continue;
            }
            out.push((a1, a2));
        }
    }
    out
}

/// Evaluates every pair, skipping those that cannot seat a full team.
pub fn sweep(
    grid: &GridSpec,
    fleet: &FleetParams,
    space: &[(usize, usize)],
    opts: &PlanOptions,
) -> Result<Vec<Candidate>, PlanError> {
    fleet.validate()?;
    let uavs = fleet.uavs_per_team();
    opts.execution
        .map(space, |&(a1, a2)| {
            if a1 * a2 < uavs {
                Ok(Candidate {
                    a1,
                    a2,
                    partitions: partition_count(grid, a1, a2),
                    delta_e: f64::NAN,
                    feasible: false,
                    period: f64::INFINITY,
                })
            } else {
                evaluate(grid, fleet, a1, a2, opts)
            }
        })
        .into_iter()
        .collect()
}

/// Index of the best candidate: smallest period, then larger area, then
/// smaller `a1`. Independent of evaluation order.
pub fn select_best(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if !c.feasible || !c.period.is_finite() {
            continue;
        }
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let cur = &candidates[b];
        let tol = 1e-9 * cur.period.abs().max(1.0);
        let better = if c.period < cur.period - tol {
            true
        } else if c.period <= cur.period + tol {
            let (area, cur_area) = (c.a1 * c.a2, cur.a1 * cur.a2);
            area > cur_area || (area == cur_area && c.a1 < cur.a1)
        } else {
            false
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Sweeps the search space and builds the plan for the minimizing extents.
pub fn optimize_partition_size(
    grid: &GridSpec,
    fleet: &FleetParams,
    opts: &PlanOptions,
) -> Result<(SupercyclePlan, Vec<Candidate>), PlanError> {
    let space = search_space(grid, opts.divisors_only);
    if space.is_empty() {
        return Err(PlanError::EmptySearchSpace);
    }
    let candidates = sweep(grid, fleet, &space, opts)?;
    let Some(best) = select_best(&candidates) else {
        let diags = candidates
            .iter()
            .map(|c| CandidateDiagnostic {
                a1: c.a1,
                a2: c.a2,
                delta_e: c.delta_e,
                e_bar: fleet.e_bar,
                reason: if c.delta_e.is_nan() {
                    format!("{} nodes cannot seat {} UAVs", c.a1 * c.a2, fleet.uavs_per_team())
                } else {
                    format!("delta_e {} exceeds e_bar {}", c.delta_e, fleet.e_bar)
                },
            })
            .collect();
        return Err(PlanError::NoFeasiblePlan(diags));
    };
    let c = &candidates[best];
    let plan = build_plan(grid, fleet, c.a1, c.a2, opts)?;
    Ok((plan, candidates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn survey_fleet() -> FleetParams {
        FleetParams {
            n: 15,
            m: 3,
            e_bar: 100.0,
            beta_minus: 0.5,
            beta_plus: 0.5,
            uav_speed: 10.0,
            ugv_speed: 5.0,
        }
    }

    fn assignment(len: f64, fleet: &FleetParams) -> SubpartitionAssignment {
        SubpartitionAssignment {
            partition_id: 0,
            slot: 0,
            release: Point::origin(),
            visit_order: vec![],
            tour_length: len,
            energy_cost: len * fleet.beta_minus / fleet.uav_speed,
            exact: true,
        }
    }

    #[test]
    fn cover_energy_is_max_over_uavs() {
        let f = FleetParams {
            beta_minus: 0.5,
            uav_speed: 1.0,
            ..survey_fleet()
        };
        assert_abs_diff_eq!(cover_energy(&[assignment(100.0, &f)]), 50.0);
        let f = FleetParams {
            beta_minus: 1.0,
            uav_speed: 2.0,
            ..survey_fleet()
        };
        let a: Vec<_> = [10.0, 20.0, 15.0].iter().map(|&l| assignment(l, &f)).collect();
        assert_abs_diff_eq!(cover_energy(&a), 10.0);
    }

    #[test]
    fn feasibility_boundary() {
        assert!(check_feasible(96.07, 100.0));
        assert!(check_feasible(100.0, 100.0));
        assert!(!check_feasible(100.0 + 1e-9, 100.0));
        let f = survey_fleet();
        assert_eq!(supercycle_period(&[Point::origin()], 100.5, &f), f64::INFINITY);
    }

    #[test]
    fn leg_times() {
        let f = survey_fleet();
        let a = Point::new(264.0, 264.0, 0.0);
        let b = Point::new(792.0, 264.0, 0.0);
        assert_abs_diff_eq!(leg_time(&a, &b, 96.07, &f), 384.28, epsilon = 1e-9);
        assert_abs_diff_eq!(leg_time(&a, &a, 10.0, &f), 10.0 / 0.5 + 10.0 / 0.5);
        let fast = FleetParams {
            beta_plus: 1e12,
            ugv_speed: 10.0,
            ..f
        };
        let c = Point::new(364.0, 264.0, 0.0);
        assert_abs_diff_eq!(leg_time(&a, &c, 10.0, &fast), 20.0 + 10.0, epsilon = 1e-9);
    }

    #[test]
    fn period_examples() {
        let f = survey_fleet();
        let centers: Vec<Point> = [
            (264.0, 264.0),
            (264.0, 792.0),
            (792.0, 792.0),
            (1320.0, 792.0),
            (1320.0, 264.0),
            (792.0, 264.0),
        ]
        .iter()
        .map(|&(x, y)| Point::new(x, y, 0.0))
        .collect();
        let tc = supercycle_period(&centers, 96.07, &f);
        assert_abs_diff_eq!(tc, 2305.68, epsilon = 1e-9);
        let legs: f64 = (0..6)
            .map(|i| leg_time(&centers[i], &centers[(i + 1) % 6], 96.07, &f))
            .sum();
        assert_abs_diff_eq!(tc, legs, epsilon = 1e-9);

        assert_abs_diff_eq!(supercycle_period(&centers[..1], 10.0, &f), 40.0);

        let g = FleetParams {
            ugv_speed: 10.0,
            beta_plus: 0.2,
            ..f
        };
        // Δe/β⁺ = 50 < 1000/10 = 100.
        let two = [Point::origin(), Point::new(1000.0, 0.0, 0.0)];
        assert_abs_diff_eq!(supercycle_period(&two, 10.0, &g), 2.0 * 20.0 + 2.0 * 100.0);
    }

    #[test]
    fn tie_break_prefers_larger_area_then_smaller_a1() {
        let c = |a1, a2, period| Candidate {
            a1,
            a2,
            partitions: 1,
            delta_e: 1.0,
            feasible: period < f64::INFINITY,
            period,
        };
        let cands = vec![
            c(2, 2, 10.0),
            c(1, 4, 10.0),
            c(4, 1, 10.0),
            c(3, 3, f64::INFINITY),
            c(1, 1, 12.0),
        ];
        assert_eq!(select_best(&cands), Some(1));
        assert_eq!(select_best(&[c(3, 3, f64::INFINITY)]), None);
    }

    #[test]
    fn search_space_shapes() {
        let g = GridSpec::new(4.0, 6.0, 1.0, 1.0).unwrap();
        assert_eq!(search_space(&g, false).len(), 24);
        assert_eq!(
            search_space(&g, true),
            vec![
                (1, 1),
                (1, 2),
                (1, 3),
                (1, 6),
                (2, 1),
                (2, 2),
                (2, 3),
                (2, 6),
                (4, 1),
                (4, 2),
                (4, 3),
                (4, 6)
            ]
        );
    }

    #[test]
    fn single_cell_grid() {
        let g = GridSpec::new(33.0, 33.0, 33.0, 10.0).unwrap();
        let f = FleetParams {
            n: 1,
            m: 1,
            ..survey_fleet()
        };
        let (plan, cands) = optimize_partition_size(&g, &f, &PlanOptions::default()).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!((plan.a1, plan.a2), (1, 1));
        assert_abs_diff_eq!(plan.delta_e, 0.0);
        assert_abs_diff_eq!(plan.period, plan.delta_e / f.beta_minus + plan.delta_e / f.beta_plus);
    }

    #[test]
    fn plan_structure() {
        let g = GridSpec::new(8.0, 8.0, 1.0, 1.0).unwrap();
        let f = FleetParams {
            n: 2,
            m: 1,
            e_bar: 20.0,
            beta_minus: 1.0,
            beta_plus: 2.0,
            uav_speed: 1.0,
            ugv_speed: 1.0,
        };
        let plan = build_plan(&g, &f, 4, 4, &PlanOptions::default()).unwrap();
        assert!(plan.feasible);
        assert_eq!(plan.partitions.len(), 4);
        assert_eq!(plan.assignments.len(), 8);
        assert_eq!(plan.release_times[0], 0.0);
        assert!(plan.release_times.windows(2).all(|w| w[1] > w[0]));
        assert_abs_diff_eq!(plan.leg_times.iter().sum::<f64>(), plan.period, epsilon = 1e-9);
        assert!(plan.assignments.iter().all(|a| a.exact));
        assert!(plan.centroid_tour_exact);
        assert_eq!(plan.assignment(2, 1).partition_id, 2);
        assert_eq!(plan.assignment(2, 1).slot, 1);
    }

    #[test]
    fn infeasible_plan_has_infinite_period() {
        let g = GridSpec::new(8.0, 8.0, 1.0, 1.0).unwrap();
        let f = FleetParams {
            n: 1,
            m: 1,
            e_bar: 1.0,
            beta_minus: 1.0,
            beta_plus: 1.0,
            uav_speed: 1.0,
            ugv_speed: 1.0,
        };
        let plan = build_plan(&g, &f, 8, 8, &PlanOptions::default()).unwrap();
        assert!(!plan.feasible);
        assert_eq!(plan.period, f64::INFINITY);
        let c = evaluate(&g, &f, 8, 8, &PlanOptions::default()).unwrap();
        assert!(!c.feasible && c.period.is_infinite());
    }

    #[test]
    fn nothing_feasible_reports_every_candidate() {
        let g = GridSpec::new(2.0, 2.0, 1.0, 1.0).unwrap();
        let f = FleetParams {
            n: 3,
            m: 1,
            e_bar: 0.1,
            beta_minus: 1.0,
            beta_plus: 1.0,
            uav_speed: 1.0,
            ugv_speed: 1.0,
        };
        match optimize_partition_size(&g, &f, &PlanOptions::default()) {
            Err(PlanError::NoFeasiblePlan(d)) => assert_eq!(d.len(), 4),
            other => panic!("expected NoFeasiblePlan, got {other:?}"),
        }
    }
}
