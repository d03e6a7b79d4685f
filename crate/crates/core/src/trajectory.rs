//! Piecewise-constant velocity profiles realizing a supercycle.
//!
//! Profiles cover one period starting at the team's first release. Takeoff
//! and landing at the release point are instantaneous mode switches, so all
//! velocities are horizontal: UAVs fly at `z_bar` while patrolling and sit on
//! their UGV deck otherwise.

use std::io::{self, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{FleetParams, GridSpec, Point};
use crate::schedule::SupercyclePlan;

pub type Velocity = Vector3<f64>;

/// Durations at or below this are dropped from profiles.
const MIN_SEGMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Airborne at patrol altitude.
    Patrol,
    /// On (or being) a moving UGV.
    Carried,
    /// Docked on a stationary UGV, charging until full.
    ChargingIdle,
    /// Stationary; for UAVs, docked.
    Parked,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Patrol => "patrol",
            Mode::Carried => "carried",
            Mode::ChargingIdle => "charging-idle",
            Mode::Parked => "parked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub velocity: Velocity,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    /// Contiguous segments covering `[0, period)`.
    pub segments: Vec<Segment>,
    pub period: f64,
    pub start: Point,
}

impl VelocityProfile {
    /// Segment active at local time `t`, wrapped into one period.
    pub fn segment_at(&self, t: f64) -> &Segment {
        let local = if self.period > 0.0 {
            t.rem_euclid(self.period)
        } else {
            0.0
        };
        let idx = self.segments.partition_point(|s| s.t_end <= local);
        &self.segments[idx.min(self.segments.len() - 1)]
    }

    /// Displacement accumulated over one full period.
    pub fn net_displacement(&self) -> Velocity {
        self.segments.iter().map(|s| s.velocity * (s.t_end - s.t_start)).sum()
    }

    /// Closed-form position (x, y only) at local time `t` within the first period.
    pub fn position_at(&self, t: f64) -> Point {
        let mut p = self.start;
        for s in &self.segments {
            if t <= s.t_start {
                break;
            }
            p += s.velocity * (t.min(s.t_end) - s.t_start);
        }
        p
    }

    fn push(&mut self, t_start: f64, t_end: f64, velocity: Velocity, mode: Mode) {
        if t_end - t_start > MIN_SEGMENT {
            self.segments.push(Segment {
                t_start,
                t_end,
                velocity,
                mode,
            });
        } else if let Some(last) = self.segments.last_mut() {
            // Absorb rounding slivers so the profile stays gap-free.
            last.t_end = last.t_end.max(t_end);
        }
    }
}

/// Cycle timing shared by the UGV and its UAVs for cycle position `i`.
struct Leg {
    release: f64,
    depart: f64,
    arrive: f64,
    next_release: f64,
    velocity: Velocity,
}

fn legs(plan: &SupercyclePlan, fleet: &FleetParams) -> Result<Vec<Leg>, PlanError> {
    if !plan.feasible {
        return Err(PlanError::Infeasible {
            delta_e: plan.delta_e,
            e_bar: fleet.e_bar,
        });
    }
    let dwell = plan.delta_e / fleet.beta_minus;
    let k = plan.partition_order.len();
    Ok((0..k)
        .map(|i| {
            let from = plan.release_point(i);
            let to = plan.release_point(i + 1);
            let gap = to - from;
            let dist = gap.norm();
            let release = plan.release_times[i];
            let next_release = if i + 1 == k {
                plan.period
            } else {
                plan.release_times[i + 1]
            };
            let depart = release + dwell;
            let arrive = depart + dist / fleet.ugv_speed;
            Leg {
                release,
                depart,
                arrive: arrive.min(next_release),
                next_release,
                velocity: if dist > 0.0 {
                    gap * (fleet.ugv_speed / dist)
                } else {
                    Velocity::zeros()
                },
            }
        })
        .collect())
}

pub fn ugv_profile(plan: &SupercyclePlan, fleet: &FleetParams) -> Result<VelocityProfile, PlanError> {
    let mut prof = VelocityProfile {
        segments: Vec::new(),
        period: plan.period,
        start: plan.release_point(0),
    };
    for leg in legs(plan, fleet)? {
        prof.push(leg.release, leg.depart, Velocity::zeros(), Mode::Parked);
        prof.push(leg.depart, leg.arrive, leg.velocity, Mode::Carried);
        prof.push(leg.arrive, leg.next_release, Velocity::zeros(), Mode::Parked);
    }
    Ok(prof)
}

/// Profile of the UAV flying `slot` in every partition.
pub fn uav_profile(
    plan: &SupercyclePlan,
    grid: &GridSpec,
    fleet: &FleetParams,
    slot: usize,
) -> Result<VelocityProfile, PlanError> {
    let mut prof = VelocityProfile {
        segments: Vec::new(),
        period: plan.period,
        start: plan.release_point(0),
    };
    for (i, leg) in legs(plan, fleet)?.into_iter().enumerate() {
        let a = plan.assignment(plan.partition_order[i], slot);
        let mut t = leg.release;
        for w in a.route(grid).windows(2) {
            let edge = w[1] - w[0];
            let len = edge.norm();
            if len <= 0.0 {
                continue;
            }
            let dt = len / fleet.uav_speed;
            let end = t + dt;
            prof.push(t, end, edge / dt, Mode::Patrol);
            t = end;
        }
        // The slowest tour ends at the dwell bound up to rounding.
        let slack = 1e-9 * (1.0 + leg.depart.abs());
        if t > leg.depart + slack {
            return Err(PlanError::Infeasible {
                delta_e: plan.delta_e,
                e_bar: fleet.e_bar,
            });
        }
        if t != leg.depart && (t - leg.depart).abs() <= slack {
            if let Some(last) = prof.segments.last_mut() {
                last.t_end = leg.depart;
            }
            t = leg.depart;
        }
        prof.push(t, leg.depart, Velocity::zeros(), Mode::ChargingIdle);
        prof.push(leg.depart, leg.arrive, leg.velocity, Mode::Carried);
        prof.push(leg.arrive, leg.next_release, Velocity::zeros(), Mode::ChargingIdle);
    }
    Ok(prof)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleKind {
    Uav,
    Ugv,
}

impl VehicleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleKind::Uav => "uav",
            VehicleKind::Ugv => "ugv",
        }
    }
}

/// All `m` teams. Every team flies the same profiles, shifted in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub ugv: VelocityProfile,
    /// One profile per UAV slot.
    pub uavs: Vec<VelocityProfile>,
    /// Start time of team `j`: `j * T_c / m`.
    pub offsets: Vec<f64>,
    pub period: f64,
}

impl Deployment {
    pub fn teams(&self) -> usize {
        self.offsets.len()
    }

    pub fn uavs_per_team(&self) -> usize {
        self.uavs.len()
    }

    pub fn uav_count(&self) -> usize {
        self.teams() * self.uavs_per_team()
    }

    /// Team of a global UAV index.
    pub fn team_of(&self, uav: usize) -> usize {
        uav / self.uavs_per_team()
    }

    fn sample(profile: &VelocityProfile, offset: f64, t: f64) -> (Velocity, Mode) {
        if t < offset {
            return (Velocity::zeros(), Mode::Parked);
        }
        let s = profile.segment_at(t - offset);
        (s.velocity, s.mode)
    }

    pub fn ugv_at(&self, team: usize, t: f64) -> (Velocity, Mode) {
        Self::sample(&self.ugv, self.offsets[team], t)
    }

    pub fn uav_at(&self, uav: usize, t: f64) -> (Velocity, Mode) {
        let team = self.team_of(uav);
        Self::sample(&self.uavs[uav % self.uavs_per_team()], self.offsets[team], t)
    }

    /// Every time in `[0, horizon]` at which some vehicle switches segment.
    pub fn boundaries(&self, horizon: f64) -> Vec<f64> {
        let mut local: Vec<f64> = std::iter::once(&self.ugv)
            .chain(&self.uavs)
            .flat_map(|p| p.segments.iter().map(|s| s.t_start))
            .collect();
        local.push(0.0);
        local.sort_by(f64::total_cmp);
        local.dedup();
        let mut out = Vec::new();
        for &off in &self.offsets {
            let mut base = off;
            while base <= horizon {
                out.extend(local.iter().map(|&t| base + t).filter(|&t| t <= horizon));
                if self.period <= 0.0 {
                    break;
                }
                base += self.period;
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
        out
    }

    /// Shortest segment across all profiles.
    pub fn min_segment(&self) -> f64 {
        std::iter::once(&self.ugv)
            .chain(&self.uavs)
            .flat_map(|p| p.segments.iter().map(|s| s.t_end - s.t_start))
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes one period per vehicle, in absolute time, plus the parked
    /// interval before each late team launches.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "vehicle_id,kind,t_start,t_end,vx,vy,vz,mode")?;
        let per_team = self.uavs_per_team();
        for (team, &off) in self.offsets.iter().enumerate() {
            let mut rows = |id: usize, kind: VehicleKind, prof: &VelocityProfile| -> io::Result<()> {
                if off > 0.0 {
                    writeln!(out, "{id},{},0,{off},0,0,0,parked", kind.as_str())?;
                }
                for s in &prof.segments {
                    writeln!(
                        out,
                        "{id},{},{},{},{},{},{},{}",
                        kind.as_str(),
                        s.t_start + off,
                        s.t_end + off,
                        s.velocity.x,
                        s.velocity.y,
                        s.velocity.z,
                        s.mode.as_str()
                    )?;
                }
                Ok(())
            };
            rows(team, VehicleKind::Ugv, &self.ugv)?;
            for (slot, prof) in self.uavs.iter().enumerate() {
                rows(team * per_team + slot, VehicleKind::Uav, prof)?;
            }
        }
        Ok(())
    }
}

/// Builds all team profiles with uniform `T_c / m` phase spacing.
pub fn deploy(plan: &SupercyclePlan, grid: &GridSpec, fleet: &FleetParams) -> Result<Deployment, PlanError> {
    let ugv = ugv_profile(plan, fleet)?;
    let uavs = (0..fleet.uavs_per_team())
        .map(|k| uav_profile(plan, grid, fleet, k))
        .collect::<Result<Vec<_>, _>>()?;
    let spacing = plan.period / fleet.m as f64;
    Ok(Deployment {
        ugv,
        uavs,
        offsets: (0..fleet.m).map(|j| j as f64 * spacing).collect(),
        period: plan.period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{build_plan, PlanOptions};
    use approx::assert_abs_diff_eq;

    fn desk() -> (GridSpec, FleetParams) {
        (
            GridSpec::new(8.0, 8.0, 1.0, 0.5).unwrap(),
            FleetParams {
                n: 2,
                m: 1,
                e_bar: 20.0,
                beta_minus: 1.0,
                beta_plus: 2.0,
                uav_speed: 1.0,
                ugv_speed: 1.0,
            },
        )
    }

    fn contiguous(p: &VelocityProfile) {
        assert_eq!(p.segments[0].t_start, 0.0);
        for w in p.segments.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start);
        }
        assert_abs_diff_eq!(p.segments.last().unwrap().t_end, p.period, epsilon = 1e-9);
    }

    #[test]
    fn single_partition_ugv_never_moves() {
        let (g, f) = desk();
        let f = FleetParams { e_bar: 200.0, ..f };
        let plan = build_plan(&g, &f, 8, 8, &PlanOptions::default()).unwrap();
        let ugv = ugv_profile(&plan, &f).unwrap();
        assert!(ugv.segments.iter().all(|s| s.velocity == Velocity::zeros()));
        contiguous(&ugv);
    }

    #[test]
    fn survey_leg_breakdown() {
        // Two 16x16 partitions side by side with d=33: centroids 528 apart.
        let g = GridSpec::new(1056.0, 528.0, 33.0, 50.0).unwrap();
        let f = FleetParams {
            n: 5,
            m: 1,
            e_bar: 100.0,
            beta_minus: 0.5,
            beta_plus: 0.5,
            uav_speed: 10.0,
            ugv_speed: 5.0,
        };
        let opts = PlanOptions {
            pin_delta_e: Some(96.07),
            ..PlanOptions::default()
        };
        let plan = build_plan(&g, &f, 16, 16, &opts).unwrap();
        let ugv = ugv_profile(&plan, &f).unwrap();
        let d: Vec<f64> = ugv.segments.iter().map(|s| s.t_end - s.t_start).collect();
        assert_abs_diff_eq!(d[0], 192.14, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 105.6, epsilon = 1e-9);
        assert_abs_diff_eq!(d[2], 86.54, epsilon = 1e-9);
        assert_abs_diff_eq!(d[0] + d[1] + d[2], 384.28, epsilon = 1e-9);
        assert_abs_diff_eq!(ugv.segments[1].velocity.norm(), 5.0, epsilon = 1e-12);
        assert!(ugv.net_displacement().norm() < 1e-6);
    }

    #[test]
    fn uav_profiles_close_and_respect_caps() {
        let (g, f) = desk();
        let plan = build_plan(&g, &f, 4, 4, &PlanOptions::default()).unwrap();
        let ugv = ugv_profile(&plan, &f).unwrap();
        contiguous(&ugv);
        for k in 0..2 {
            let p = uav_profile(&plan, &g, &f, k).unwrap();
            contiguous(&p);
            assert!(p.net_displacement().norm() < 1e-6);
            for s in &p.segments {
                let cap = if s.mode == Mode::Patrol {
                    f.uav_speed
                } else {
                    f.ugv_speed
                };
                assert!(s.velocity.norm() <= cap * (1.0 + 1e-12));
                assert_eq!(s.velocity.z, 0.0);
                if s.mode == Mode::Carried {
                    let mid = 0.5 * (s.t_start + s.t_end);
                    let u = ugv.segment_at(mid);
                    assert_eq!(u.mode, Mode::Carried);
                    assert_eq!(u.velocity, s.velocity);
                    assert_eq!((u.t_start, u.t_end), (s.t_start, s.t_end));
                }
            }
            let patrol: f64 = p
                .segments
                .iter()
                .filter(|s| s.mode == Mode::Patrol)
                .map(|s| s.t_end - s.t_start)
                .sum();
            let own: f64 = plan
                .assignments
                .iter()
                .filter(|a| a.slot == k)
                .map(|a| a.tour_length / f.uav_speed)
                .sum();
            assert_abs_diff_eq!(patrol, own, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_node_out_and_back() {
        // One UAV, a 1x2 partition: release sits between the two centers.
        let g = GridSpec::new(2.0, 4.0, 2.0, 1.0).unwrap();
        let f = FleetParams {
            n: 1,
            m: 1,
            e_bar: 10.0,
            beta_minus: 1.0,
            beta_plus: 1.0,
            uav_speed: 2.0,
            ugv_speed: 1.0,
        };
        let plan = build_plan(&g, &f, 1, 2, &PlanOptions::default()).unwrap();
        assert_abs_diff_eq!(plan.assignments[0].tour_length, 4.0);
        let p = uav_profile(&plan, &g, &f, 0).unwrap();
        let patrol: Vec<_> = p.segments.iter().filter(|s| s.mode == Mode::Patrol).collect();
        assert_eq!(patrol.len(), 3);
        assert_abs_diff_eq!(patrol.iter().map(|s| s.t_end - s.t_start).sum::<f64>(), 2.0);
    }

    #[test]
    fn deployment_offsets() {
        let (g, f) = desk();
        let f = FleetParams { n: 6, m: 3, ..f };
        let plan = build_plan(&g, &f, 4, 4, &PlanOptions::default()).unwrap();
        let dep = deploy(&plan, &g, &f).unwrap();
        assert_eq!(dep.teams(), 3);
        assert_abs_diff_eq!(dep.offsets[1], plan.period / 3.0);
        assert_abs_diff_eq!(dep.offsets[2], 2.0 * plan.period / 3.0);
        assert_eq!(dep.uav_at(4, 0.0).1, Mode::Parked);
        let t = dep.offsets[2] + 0.3;
        assert_eq!(dep.uav_at(4, t), dep.uav_at(0, 0.3));
        assert_eq!(dep.ugv_at(2, t), dep.ugv_at(0, 0.3));
    }

    #[test]
    fn csv_export_shape() {
        let (g, f) = desk();
        let f = FleetParams { n: 4, m: 2, ..f };
        let plan = build_plan(&g, &f, 4, 4, &PlanOptions::default()).unwrap();
        let dep = deploy(&plan, &g, &f).unwrap();
        let mut buf = Vec::new();
        dep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "vehicle_id,kind,t_start,t_end,vx,vy,vz,mode");
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert!(rows.iter().all(|r| r.len() == 8));
        assert!(rows.iter().any(|r| r[0] == "3" && r[1] == "uav"));
        assert!(rows
            .iter()
            .any(|r| r[0] == "1" && r[1] == "ugv" && r[7] == "parked" && r[2] == "0"));
    }
}
