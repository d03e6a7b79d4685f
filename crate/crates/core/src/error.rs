use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{axis}-extent {extent} is not a whole multiple of the footprint d={d} (ratio {ratio})")]
    NotDivisible {
        axis: &'static str,
        extent: f64,
        d: f64,
        ratio: f64,
    },
    #[error("fleet must contain at least one UAV and one UGV (n={n}, m={m})")]
    EmptyFleet { n: usize, m: usize },
    #[error("UAV count n={n} is not divisible by UGV count m={m}")]
    UnevenTeams { n: usize, m: usize },
    #[error("partition extents {a1}x{a2} do not fit a {x_bar}x{y_bar} grid")]
    PartitionTooLarge {
        a1: usize,
        a2: usize,
        x_bar: usize,
        y_bar: usize,
    },
    #[error("{uavs} UAVs per team cannot share a partition of only {nodes} nodes")]
    TooManyUavs { uavs: usize, nodes: usize },
    #[error("exact tour solver accepts at most {limit} points, got {got}; use the heuristic")]
    TooManyPoints { got: usize, limit: usize },
    #[error("tour order is not a permutation of 0..{len}")]
    NotPermutation { len: usize },
    #[error("empty point set")]
    EmptyInstance,
    #[error("search space is empty")]
    EmptySearchSpace,
    #[error("no feasible partition size among {} candidates", .0.len())]
    NoFeasiblePlan(Vec<CandidateDiagnostic>),
    #[error("plan is infeasible: delta_e={delta_e} exceeds e_bar={e_bar}")]
    Infeasible { delta_e: f64, e_bar: f64 },
}

/// Why one `(a1, a2)` candidate was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateDiagnostic {
    pub a1: usize,
    pub a2: usize,
    pub delta_e: f64,
    pub e_bar: f64,
    pub reason: String,
}
