//! Discrete-time execution of a deployment.
//!
//! Vehicles follow single-integrator dynamics under their piecewise-constant
//! profiles. Steps are split at every segment boundary, so Euler integration
//! is exact up to rounding and every waypoint is sampled. Each step updates
//! UAV energy (drain while airborne, charge while docked on a co-located UGV
//! below capacity), checks the motion and energy constraints, and records
//! node arrivals and departures for the age metric.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, FleetParams, GridSpec, NodeId, Point};
use crate::schedule::SupercyclePlan;
use crate::trajectory::{deploy, Deployment, Mode, Velocity};

/// Tolerance for "same place" between a UAV and its carrier.
const DOCK_TOL: f64 = 1e-6;
/// Energy undershoot tolerated as rounding before it counts as a fault.
const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Radius around a node within which an airborne UAV occupies it.
    pub node_tolerance: f64,
}

impl SimConfig {
    /// `dt = min segment / 10` capped at 0.1, `node_tolerance = d / 100`,
    /// horizon of `cycles` periods.
    pub fn for_deployment(dep: &Deployment, grid: &GridSpec, cycles: u32) -> Self {
        SimConfig {
            dt: (dep.min_segment() / 10.0).clamp(1e-4, 0.1),
            horizon: cycles as f64 * dep.period,
            node_tolerance: grid.d / 100.0,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<(), SimError> {
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(SimError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.horizon.is_nan() || self.horizon < 0.0 {
            return Err(SimError::Config(format!(
                "horizon must be non-negative, got {}",
                self.horizon
            )));
        }
        if !(self.node_tolerance > 0.0 && self.node_tolerance < grid.d / 2.0) {
            return Err(SimError::Config(format!(
                "node_tolerance must lie in (0, d/2) = (0, {}), got {}",
                grid.d / 2.0,
                self.node_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("plan cannot be simulated: {0}")]
    Plan(String),
    #[error("no age data: {0}")]
    NoData(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub uav_pos: Vec<Point>,
    pub ugv_pos: Vec<Point>,
    pub energy: Vec<f64>,
    pub uav_mode: Vec<Mode>,
    /// Velocities applied over the step that produced this state.
    pub uav_vel: Vec<Velocity>,
    pub ugv_vel: Vec<Velocity>,
}

impl SimState {
    /// Every vehicle docked at the first release point with full batteries.
    pub fn initial(dep: &Deployment, fleet: &FleetParams) -> Self {
        let start = dep.ugv.start;
        SimState {
            t: 0.0,
            uav_pos: vec![start; dep.uav_count()],
            ugv_pos: vec![start; dep.teams()],
            energy: vec![fleet.e_bar; dep.uav_count()],
            uav_mode: vec![Mode::Parked; dep.uav_count()],
            uav_vel: vec![Velocity::zeros(); dep.uav_count()],
            ugv_vel: vec![Velocity::zeros(); dep.teams()],
        }
    }

    pub fn airborne(&self, uav: usize) -> bool {
        self.uav_pos[uav].z > 0.0
    }

    fn docked_on_any(&self, uav: usize) -> Option<usize> {
        let p = self.uav_pos[uav];
        self.ugv_pos.iter().position(|g| distance(g, &p) <= DOCK_TOL)
    }
}

/// Energy went negative during a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyFault {
    pub t: f64,
    pub uav: usize,
    pub energy: f64,
}

/// Advances `state` by `dt`, assuming no profile boundary falls strictly
/// inside the step.
pub fn step(
    state: &SimState,
    dep: &Deployment,
    grid: &GridSpec,
    fleet: &FleetParams,
    dt: f64,
) -> Result<SimState, SafetyFault> {
    let mid = state.t + 0.5 * dt;
    let mut next = state.clone();
    next.t = state.t + dt;
    for team in 0..dep.teams() {
        let (v, _) = dep.ugv_at(team, mid);
        next.ugv_pos[team] += v * dt;
        next.ugv_vel[team] = v;
    }
    for uav in 0..dep.uav_count() {
        let (v, mode) = dep.uav_at(uav, mid);
        let p = &mut next.uav_pos[uav];
        *p += v * dt;
        p.z = if mode == Mode::Patrol { grid.z_bar } else { 0.0 };
        next.uav_vel[uav] = v;
        next.uav_mode[uav] = mode;
    }
    for uav in 0..dep.uav_count() {
        let docked = next.docked_on_any(uav).is_some();
        let e = &mut next.energy[uav];
        if next.uav_pos[uav].z > 0.0 {
            *e -= fleet.beta_minus * dt;
            if *e < -ENERGY_TOL {
                return Err(SafetyFault {
                    t: next.t,
                    uav,
                    energy: *e,
                });
            }
            *e = e.max(0.0);
        } else if *e < fleet.e_bar && docked {
            *e = (*e + fleet.beta_plus * dt).min(fleet.e_bar);
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    UavSpeed,
    UgvSpeed,
    UgvOffPlane,
    EnergyRange,
    /// Airborne UAV inside the emergency-landing envelope `z >= u_A e / β⁻`.
    CriticalEnergy,
    /// Depleted UAV moving on its own.
    DepletedMotion,
    /// Grounded UAV moving other than by takeoff or on a UGV.
    GroundMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub kind: ViolationKind,
    pub vehicle: usize,
    pub magnitude: f64,
}

/// Every constraint `state` violates. Never mutates.
pub fn monitor_constraints(state: &SimState, fleet: &FleetParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |kind, vehicle, magnitude| {
        out.push(Violation {
            t: state.t,
            kind,
            vehicle,
            magnitude,
        })
    };
    let speed_tol = |cap: f64| cap * (1.0 + 1e-9) + 1e-12;

    for (j, (p, v)) in state.ugv_pos.iter().zip(&state.ugv_vel).enumerate() {
        let s = v.norm();
        if s > speed_tol(fleet.ugv_speed) {
            flag(ViolationKind::UgvSpeed, j, s - fleet.ugv_speed);
        }
        if p.z != 0.0 || v.z != 0.0 {
            flag(ViolationKind::UgvOffPlane, j, p.z.abs().max(v.z.abs()));
        }
    }
    for i in 0..state.uav_pos.len() {
        let p = state.uav_pos[i];
        let v = state.uav_vel[i];
        let e = state.energy[i];
        let s = v.norm();
        if s > speed_tol(fleet.uav_speed) {
            flag(ViolationKind::UavSpeed, i, s - fleet.uav_speed);
        }
        if e < -ENERGY_TOL || e > fleet.e_bar + ENERGY_TOL {
            flag(
                ViolationKind::EnergyRange,
                i,
                if e < 0.0 { -e } else { e - fleet.e_bar },
            );
        }
        let rides = state
            .ugv_pos
            .iter()
            .zip(&state.ugv_vel)
            .any(|(g, gv)| distance(g, &p) <= DOCK_TOL && (gv - v).norm() <= DOCK_TOL);
        if p.z > 0.0 {
            let envelope = fleet.uav_speed * e / fleet.beta_minus;
            if p.z >= envelope {
                flag(ViolationKind::CriticalEnergy, i, p.z - envelope);
            }
        } else if s > 0.0 && v.z <= 0.0 && !rides {
            flag(ViolationKind::GroundMotion, i, s);
        }
        if e <= 0.0 && s > 0.0 && !rides {
            flag(ViolationKind::DepletedMotion, i, s);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrival,
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitEvent {
    pub node: NodeId,
    pub kind: EventKind,
    pub t: f64,
    pub uav: usize,
}

/// Arrival/departure log over all nodes with current occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub events: Vec<VisitEvent>,
    /// UAV occupying each node, if any.
    occupant: Vec<Option<usize>>,
    pub last_departure: Vec<Option<f64>>,
}

impl EventLog {
    pub fn new(grid: &GridSpec) -> Self {
        EventLog {
            events: Vec::new(),
            occupant: vec![None; grid.node_count()],
            last_departure: vec![None; grid.node_count()],
        }
    }

    pub fn occupied(&self, node: NodeId) -> bool {
        self.occupant[node].is_some()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "node_id,event,t,uav_id")?;
        for e in &self.events {
            let kind = match e.kind {
                EventKind::Arrival => "arrival",
                EventKind::Departure => "departure",
            };
            writeln!(out, "{},{},{},{}", e.node, kind, e.t, e.uav)?;
        }
        Ok(())
    }
}

/// Node an airborne UAV at `p` occupies, if it is within `tol` of one.
fn occupied_node(grid: &GridSpec, p: &Point, tol: f64) -> Option<NodeId> {
    let (col, row) = grid.cell_at(p.x, p.y)?;
    (distance(&grid.cell_center(col, row), p) <= tol).then(|| grid.node_id(col, row))
}

/// Records occupancy transitions at `state.t`.
pub fn track_age(state: &SimState, grid: &GridSpec, tol: f64, log: &mut EventLog) {
    let mut now: Vec<(NodeId, usize)> = state
        .uav_pos
        .iter()
        .enumerate()
        .filter(|(_, p)| p.z > 0.0)
        .filter_map(|(i, p)| occupied_node(grid, p, tol).map(|v| (v, i)))
        .collect();
    now.sort_unstable();
    now.dedup_by_key(|x| x.0);

    let previously: Vec<NodeId> = log
        .occupant
        .iter()
        .enumerate()
        .filter_map(|(v, o)| o.map(|_| v))
        .collect();
    for v in previously {
        if now.binary_search_by_key(&v, |x| x.0).is_err() {
            let uav = log.occupant[v].take().expect("occupied");
            log.last_departure[v] = Some(state.t);
            log.events.push(VisitEvent {
                node: v,
                kind: EventKind::Departure,
                t: state.t,
                uav,
            });
        }
    }
    for (v, uav) in now {
        if log.occupant[v].is_none() {
            log.occupant[v] = Some(uav);
            log.events.push(VisitEvent {
                node: v,
                kind: EventKind::Arrival,
                t: state.t,
                uav,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeSummary {
    pub max_age: f64,
    /// Node and departure time achieving the maximum.
    pub worst_node: NodeId,
    pub worst_departure: f64,
    /// Departures in the window never followed by an arrival.
    pub open_departures: usize,
    pub gaps: usize,
}

/// Largest departure-to-next-arrival gap over departures at or after
/// `window_start`.
pub fn max_age(log: &EventLog, window_start: f64) -> Result<AgeSummary, SimError> {
    if log.events.is_empty() {
        return Err(SimError::NoData("event log is empty".into()));
    }
    let mut pending: Vec<Option<f64>> = vec![None; log.occupant.len()];
    let mut best: Option<(f64, NodeId, f64)> = None;
    let mut gaps = 0;
    for e in &log.events {
        match e.kind {
            EventKind::Departure if e.t >= window_start => pending[e.node] = Some(e.t),
            EventKind::Departure => {}
            EventKind::Arrival => {
                if let Some(td) = pending[e.node].take() {
                    gaps += 1;
                    let age = e.t - td;
                    if best.is_none_or(|b| age > b.0) {
                        best = Some((age, e.node, td));
                    }
                }
            }
        }
    }
    let open_departures = pending.iter().filter(|p| p.is_some()).count();
    let (max_age, worst_node, worst_departure) =
        best.ok_or_else(|| SimError::NoData(format!("no completed gaps after t={window_start}")))?;
    Ok(AgeSummary {
        max_age,
        worst_node,
        worst_departure,
        open_departures,
        gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub period: f64,
    pub teams: usize,
    pub dt: f64,
    pub horizon: f64,
    pub steps: usize,
    pub window_start: f64,
    pub age: Option<AgeSummary>,
    pub expected_max_age: f64,
    pub min_energy: f64,
    /// Smallest `e_bar - e` reached; bounded by `Δe` for a correct plan.
    pub max_energy_drawdown: f64,
    pub violation_count: usize,
    /// First few violations, for diagnostics.
    pub violations: Vec<Violation>,
    pub fault: Option<SafetyFault>,
    pub max_closure_error: f64,
    /// Largest `|p_j(t) - p_{j+1}(t + T_c/m)|` over sampled UGV pairs.
    pub max_phase_error: f64,
}

impl SimReport {
    pub fn safe(&self) -> bool {
        self.fault.is_none() && self.violation_count == 0
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "period: {}", self.period)?;
        writeln!(out, "teams: {}", self.teams)?;
        writeln!(out, "expected_max_age: {}", self.expected_max_age)?;
        match &self.age {
            Some(a) => {
                writeln!(out, "measured_max_age: {}", a.max_age)?;
                writeln!(out, "worst_node: {}", a.worst_node)?;
                writeln!(out, "worst_departure: {}", a.worst_departure)?;
                writeln!(out, "open_departures: {}", a.open_departures)?;
            }
            None => writeln!(out, "measured_max_age: none")?,
        }
        writeln!(out, "window_start: {}", self.window_start)?;
        writeln!(out, "dt: {}", self.dt)?;
        writeln!(out, "horizon: {}", self.horizon)?;
        writeln!(out, "steps: {}", self.steps)?;
        writeln!(out, "min_energy: {}", self.min_energy)?;
        writeln!(out, "max_energy_drawdown: {}", self.max_energy_drawdown)?;
        writeln!(out, "violation_count: {}", self.violation_count)?;
        writeln!(out, "max_closure_error: {}", self.max_closure_error)?;
        writeln!(out, "max_phase_error: {}", self.max_phase_error)?;
        match &self.fault {
            Some(f) => writeln!(out, "safety_fault: uav {} energy {} at t={}", f.uav, f.energy, f.t)?,
            None => writeln!(out, "safety_fault: none")?,
        }
        for v in &self.violations {
            writeln!(
                out,
                "violation: {:?} vehicle {} magnitude {} at t={}",
                v.kind, v.vehicle, v.magnitude, v.t
            )?;
        }
        Ok(())
    }
}

pub struct SimOutcome {
    pub report: SimReport,
    pub log: EventLog,
    pub final_state: SimState,
}

const KEPT_VIOLATIONS: usize = 20;

/// Runs a deployment from `t = 0` to `config.horizon`.
pub fn run(dep: &Deployment, grid: &GridSpec, fleet: &FleetParams, config: &SimConfig) -> Result<SimOutcome, SimError> {
    config.validate(grid)?;
    if !(dep.period > 0.0 && dep.period.is_finite()) {
        return Err(SimError::Plan(format!(
            "period must be positive and finite, got {}",
            dep.period
        )));
    }
    let boundaries = dep.boundaries(config.horizon);
    let mut state = SimState::initial(dep, fleet);
    let mut log = EventLog::new(grid);
    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut min_energy = fleet.e_bar;
    let mut fault = None;
    let mut steps = 0;

    // Period-start times per team for closure checks, in order.
    let mut checkpoints: Vec<(f64, usize)> = Vec::new();
    for (team, &off) in dep.offsets.iter().enumerate() {
        let mut t = off + dep.period;
        while t <= config.horizon + 1e-9 {
            checkpoints.push((t, team));
            t += dep.period;
        }
    }
    checkpoints.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut next_check = 0;
    let mut max_closure_error: f64 = 0.0;
    let start = dep.ugv.start;
    let per_team = dep.uavs_per_team();

    // Phase relation samples: UGV j at t against UGV j+1 at t + T_c/m.
    let spacing = dep.period / dep.teams() as f64;
    let mut ugv_trace: Vec<(f64, Vec<Point>)> = Vec::new();

    let mut b = 0;
    while state.t < config.horizon {
        while b < boundaries.len() && boundaries[b] <= state.t + 1e-12 {
            b += 1;
        }
        let mut target = (state.t + config.dt).min(config.horizon);
        if b < boundaries.len() && boundaries[b] < target {
            target = boundaries[b];
        }
        let h = target - state.t;
        match step(&state, dep, grid, fleet, h) {
            Ok(mut next) => {
                next.t = target;
                state = next;
            }
            Err(f) => {
                fault = Some(f);
                break;
            }
        }
        steps += 1;
        track_age(&state, grid, config.node_tolerance, &mut log);
        let found = monitor_constraints(&state, fleet);
        violation_count += found.len();
        for v in found {
            if violations.len() < KEPT_VIOLATIONS {
                violations.push(v);
            }
        }
        min_energy = state.energy.iter().copied().fold(min_energy, f64::min);

        while next_check < checkpoints.len() && checkpoints[next_check].0 <= state.t + 1e-9 {
            let (tc, team) = checkpoints[next_check];
            if (tc - state.t).abs() <= 1e-9 {
                let mut err = distance(&state.ugv_pos[team], &start);
                for k in 0..per_team {
                    let p = state.uav_pos[team * per_team + k];
                    err = err.max(distance(&p, &start));
                }
                max_closure_error = max_closure_error.max(err);
            }
            next_check += 1;
        }
        if dep.teams() > 1 && ugv_trace.last().is_none_or(|(t, _)| state.t - t >= spacing / 64.0) {
            ugv_trace.push((state.t, state.ugv_pos.clone()));
        }
    }

    let max_phase_error = phase_error(dep, &ugv_trace, spacing);
    let window_start = dep.period;
    let age = if fault.is_none() {
        max_age(&log, window_start).ok()
    } else {
        None
    };
    let report = SimReport {
        period: dep.period,
        teams: dep.teams(),
        dt: config.dt,
        horizon: config.horizon,
        steps,
        window_start,
        age,
        expected_max_age: spacing,
        min_energy,
        max_energy_drawdown: fleet.e_bar - min_energy,
        violation_count,
        violations,
        fault,
        max_closure_error,
        max_phase_error,
    };
    Ok(SimOutcome {
        report,
        log,
        final_state: state,
    })
}

/// Compares UGV `j` against UGV `j + 1` one phase later, using the closed-form
/// profile position of the later team as the reference sample time.
fn phase_error(dep: &Deployment, trace: &[(f64, Vec<Point>)], spacing: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (t, positions) in trace {
        for j in 0..dep.teams() - 1 {
            // Both launched.
            if *t < dep.offsets[j + 1] {
                continue;
            }
            let later = t - spacing;
            if later < dep.offsets[j] {
                continue;
            }
            let local = (later - dep.offsets[j]).rem_euclid(dep.period);
            let expect = dep.ugv.position_at(local);
            worst = worst.max(distance(&positions[j + 1], &expect));
        }
    }
    worst
}

/// Builds the deployment for `plan` and simulates it.
pub fn simulate_plan(
    plan: &SupercyclePlan,
    grid: &GridSpec,
    fleet: &FleetParams,
    config: Option<SimConfig>,
    cycles: u32,
) -> Result<SimOutcome, SimError> {
    let dep = deploy(plan, grid, fleet).map_err(|e| SimError::Plan(e.to_string()))?;
    let config = config.unwrap_or_else(|| SimConfig::for_deployment(&dep, grid, cycles));
    run(&dep, grid, fleet, &config)
}
