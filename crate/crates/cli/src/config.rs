//! Scenario configuration: one JSON file per run. All defaults live here in
//! the schema, so emitted reports are self-describing.

use serde::{Deserialize, Serialize};

use contact_hj_core::grid::{
    even_periodic_extension, phi_eps_example, GridFunction, InterpOrder, PeriodicGrid,
};
use contact_hj_core::model::{ContactHamiltonian, HamiltonianSpec};
use contact_hj_core::semigroup::SemigroupParams;


#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Identifier; output files are scoped under a directory of this name.
    pub scenario: String,
    pub kind: ScenarioKind,
    #[serde(default = "HamiltonianSpec::example")]
    pub hamiltonian: HamiltonianSpec,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub semigroup: SemigroupConfig,
    #[serde(default)]
    pub fd: FdConfig,
    #[serde(default)]
    pub ode: OdeConfig,
}

fn default_grid_n() -> usize {
    1000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    /// Evolve a datum under the backward semigroup and/or the
    /// finite-difference solver.
    Solve {
        initial: DatumSpec,
        horizon: f64,
        #[serde(default)]
        solver: SolverChoice,
    },
    /// Forward weak KAM solution by both routes, plus optional datum
    /// classification and Aubry set.
    Weakkam {
        #[serde(default)]
        datum: Option<DatumSpec>,
    },
    /// Implicit action field from a point datum.
    Action {
        x0: f64,
        u0: f64,
        t_max: f64,
        #[serde(default)]
        direction: ActionDirection,
    },
    /// Build a near-stationary datum, evolve it, and measure the reach time
    /// against the stationary profile.
    Reach {
        epsilon: f64,
        #[serde(default = "default_reach_horizon")]
        horizon: f64,
        #[serde(default = "default_reach_tol")]
        tol: f64,
        #[serde(default)]
        construction: ReachConstruction,
        /// Also estimate the class-bound constant and the uniform bound
        /// (adds substantial runtime).
        #[serde(default)]
        estimate_class_bound: bool,
    },
    /// Run the invariant suites of every module.
    Verify {
        #[serde(default)]
        quick: bool,
    },
    /// The built-in worked example end to end.
    Example {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_reach_horizon() -> f64 {
    3.0
}

fn default_reach_tol() -> f64 {
    0.01
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    SemiLagrangian,
    FiniteDifference,
    #[default]
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionDirection {
    #[default]
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachConstruction {
    /// The built-in three-piece pinned profile.
    #[default]
    ClosedFormProfile,
    /// Pin the datum to the stationary profile near its Aubry set.
    Pinned,
    /// Clip the once-evolved stationary profile into the eps-band.
    Clipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// Even periodic extension of `x^2/2`.
    U1,
    /// Even periodic extension of `x^2/2 + x`.
    Phi,
    /// The three-piece pinned profile.
    PhiEps { epsilon: f64 },
    Constant { value: f64 },
    /// `u_plus + offset` (computes `u_plus` first).
    UPlusOffset { offset: f64 },
    /// `offset + amplitude cos(2 pi frequency x)`.
    Cosine {
        amplitude: f64,
        #[serde(default = "default_frequency")]
        frequency: u32,
        #[serde(default)]
        offset: f64,
    },
}

fn default_frequency() -> u32 {
    1
}

impl DatumSpec {
    pub fn needs_u_plus(&self) -> bool {
        matches!(self, DatumSpec::UPlusOffset { .. })
    }

    pub fn build(
        &self,
        grid: PeriodicGrid,
        u_plus: Option<&GridFunction<f64>>,
    ) -> contact_hj_core::Result<GridFunction<f64>> {
        use contact_hj_core::Error;
        Ok(match self {
            DatumSpec::U1 => contact_hj_core::grid::u1_example(grid),
            DatumSpec::Phi => contact_hj_core::grid::phi_example(grid),
            DatumSpec::PhiEps { epsilon } => phi_eps_example(grid, *epsilon)?,
            DatumSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidParams("constant datum must be finite".into()));
                }
                GridFunction::constant(grid, *value)
            }
            DatumSpec::UPlusOffset { offset } => u_plus
                .ok_or_else(|| Error::InvalidParams("u_plus unavailable for offset datum".into()))?
                .offset(*offset),
            DatumSpec::Cosine {
                amplitude,
                frequency,
                offset,
            } => {
                let (a, f, o) = (*amplitude, f64::from(*frequency), *offset);
                even_periodic_extension(grid, move |y: f64| {
                    o + a * (std::f64::consts::TAU * f * y).cos()
                })
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemigroupConfig {
    pub v_max: f64,
    pub n_v: usize,
    /// Defaults to `min(0.5 dx / v_max, 0.5 / k1)` when absent.
    pub dt: Option<f64>,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub interpolation: InterpOrder,
    pub refine: bool,
    /// Recording stride for evolution traces.
    pub stride: usize,
}

impl Default for SemigroupConfig {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            n_v: 129,
            dt: None,
            fp_tol: 1e-12,
            fp_max_iter: 60,
            interpolation: InterpOrder::Linear,
            refine: true,
            stride: 40,
        }
    }
}

impl SemigroupConfig {
    pub fn params(
        &self,
        ham: &ContactHamiltonian<f64>,
        grid: PeriodicGrid,
    ) -> SemigroupParams<f64> {
        let mut p = SemigroupParams::suggested(ham, grid, self.v_max);
        if let Some(dt) = self.dt {
            p.dt = dt;
        }
        p.n_v = self.n_v;
        p.fp_tol = self.fp_tol;
        p.fp_max_iter = self.fp_max_iter;
        p.interp = self.interpolation;
        p.refine = self.refine;
        p
    }

    pub fn point_params(
        &self,
        ham: &ContactHamiltonian<f64>,
        grid: PeriodicGrid,
    ) -> SemigroupParams<f64> {
        let mut p = SemigroupParams::for_point_data(ham, grid, self.v_max);
        if let Some(dt) = self.dt {
            p.dt = dt;
        }
        p.n_v = self.n_v;
        p.fp_tol = self.fp_tol;
        p.fp_max_iter = self.fp_max_iter;
        p.interp = self.interpolation;
        p.refine = self.refine;
        p
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdConfig {
    pub cfl: f64,
    /// Defaults to the suggested viscosity speed for the datum when absent.
    pub alpha: Option<f64>,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            cfl: 0.9,
            alpha: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub dt: f64,
    pub n_starts: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            n_starts: 24,
        }
    }
}

/// Structural validation of numeric ranges; runs before any compute.
pub fn validate(cfg: &ScenarioConfig) -> Result<(), String> {
    if cfg.scenario.is_empty()
        || !cfg
            .scenario
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err("scenario id must be nonempty and filesystem-safe".into());
    }
    PeriodicGrid::new(cfg.grid_n).map_err(|e| e.to_string())?;
    let ham: ContactHamiltonian<f64> =
        contact_hj_core::model::from_catalog(&cfg.hamiltonian).map_err(|e| e.to_string())?;
    let grid = PeriodicGrid::new(cfg.grid_n).expect("validated above");
    cfg.semigroup
        .params(&ham, grid)
        .validate(&ham)
        .map_err(|e| e.to_string())?;
    if !(cfg.fd.cfl > 0.0 && cfg.fd.cfl <= 0.9) {
        return Err(format!("fd.cfl must lie in (0, 0.9], got {}", cfg.fd.cfl));
    }
    if let Some(alpha) = cfg.fd.alpha {
        if !(alpha > 0.0) {
            return Err("fd.alpha must be positive".into());
        }
    }
    if !(cfg.ode.dt > 0.0 && cfg.ode.dt <= 1e-3) {
        return Err("ode.dt must lie in (0, 1e-3]".into());
    }
    match &cfg.kind {
        ScenarioKind::Solve { horizon, .. } => {
            if !(*horizon >= 0.0 && horizon.is_finite()) {
                return Err("solve horizon must be nonnegative".into());
            }
        }
        ScenarioKind::Weakkam { .. } => {}
        ScenarioKind::Action { t_max, x0, .. } => {
            if !(*t_max > 0.0 && t_max.is_finite()) {
                return Err("action t_max must be positive".into());
            }
            if !x0.is_finite() {
                return Err("action x0 must be finite".into());
            }
        }
        ScenarioKind::Reach {
            epsilon,
            horizon,
            tol,
            ..
        } => {
            if !(*epsilon > 0.0 && *epsilon < 0.25) {
                return Err(format!("reach epsilon must lie in (0, 1/4), got {epsilon}"));
            }
            if !(*horizon > 0.0) || !(*tol > 0.0) {
                return Err("reach horizon and tol must be positive".into());
            }
        }
        ScenarioKind::Verify { .. } => {}
        ScenarioKind::Example { epsilon } => {
            if !(*epsilon > 0.0 && *epsilon < 0.25) {
                return Err(format!(
                    "example epsilon must lie in (0, 1/4), got {epsilon}"
                ));
            }
        }
    }
    Ok(())
}
