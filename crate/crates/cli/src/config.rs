use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use supercycle::{Execution, FleetParams, GridSpec, PlanOptions, TourSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub fleet: FleetSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_max: f64,
    pub y_max: f64,
    pub d: f64,
    pub z_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSection {
    pub uavs: usize,
    pub ugvs: usize,
    pub e_bar: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub uav_speed: f64,
    pub ugv_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub n_exact: usize,
    pub seed: u64,
    pub restarts: usize,
    pub divisors_only: bool,
    /// Fixed `[a1, a2]`; skips the sweep when set.
    pub partition: Option<[usize; 2]>,
    pub pin_delta_e: Option<f64>,
    pub execution: Execution,
}

impl Default for SolverSection {
    fn default() -> Self {
        let t = TourSolver::default();
        SolverSection {
            n_exact: t.n_exact,
            seed: t.seed,
            restarts: t.restarts,
            divisors_only: false,
            partition: None,
            pin_delta_e: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: Option<f64>,
    pub horizon_cycles: u32,
    pub node_tolerance: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: None,
            horizon_cycles: 3,
            node_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.grid()?;
        cfg.fleet().validate()?;
        if cfg.solver.n_exact == 0 {
            anyhow::bail!("solver.n_exact must be at least 1");
        }
        if let Some(pin) = cfg.solver.pin_delta_e {
            if !(pin >= 0.0 && pin.is_finite()) {
                anyhow::bail!("solver.pin_delta_e must be finite and non-negative, got {pin}");
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let g = &self.grid;
        Ok(GridSpec::new(g.x_max, g.y_max, g.d, g.z_bar)?)
    }

    pub fn fleet(&self) -> FleetParams {
        let f = &self.fleet;
        FleetParams {
            n: f.uavs,
            m: f.ugvs,
            e_bar: f.e_bar,
            beta_minus: f.beta_minus,
            beta_plus: f.beta_plus,
            uav_speed: f.uav_speed,
            ugv_speed: f.ugv_speed,
        }
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            solver: TourSolver {
                n_exact: self.solver.n_exact,
                seed: self.solver.seed,
                restarts: self.solver.restarts,
            },
            execution: self.solver.execution,
            divisors_only: self.solver.divisors_only,
            pin_delta_e: self.solver.pin_delta_e,
        }
    }
}
