//! Explicit-implicit time stepping.
//!
//! Each step advances `U` on inner nodes by forward Euler with GFD spatial
//! terms, copies the paired inner value onto each boundary node, and then
//! solves the elliptic equation for the new `V`.

use log::warn;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::elliptic::{assemble_elliptic, EllipticSystem, NeumannRows};
use crate::error::{Error, Result};
use crate::motility::{
    validate_hypotheses, validate_initial_condition, ModelParameters, MotilityFunction,
    DEFAULT_SAMPLES, DEFAULT_S_MAX,
};
use crate::stability::{max_stable_dt, Fields, StabilityOptions, StabilityReport};
use crate::stars::DEFAULT_STAR_SIZE;
use crate::stencil::{Discretization, StencilRow, WeightScheme, DX, DY};

/// Discrete `U`, `V` over all nodes at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

impl FieldState {
    pub fn fields(&self) -> Fields<'_> {
        Fields {
            u: &self.u,
            v: &self.v,
        }
    }
}

/// `(max |U - 1|, max |V - 1|)` over every node.
pub fn norms(state: &FieldState) -> (f64, f64) {
    let dev = |f: &[f64]| f.iter().fold(0.0f64, |m, x| m.max((x - 1.0).abs()));
    (dev(&state.u), dev(&state.v))
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub gamma: MotilityFunction,
    pub params: ModelParameters,
    pub star_size: usize,
    pub weights: WeightScheme,
    pub snapshot_times: Vec<f64>,
    /// Fail the run when `dt` exceeds the convergence bound.
    pub enforce_stability_bound: bool,
    /// Re-evaluate the bound every this many steps when enforcing (0: only at t = 0).
    pub stability_check_every: usize,
    pub stability: StabilityOptions,
    pub neumann: NeumannRows,
    /// Proceed with a warning when the initial data or `gamma` fail their
    /// hypotheses instead of returning an error.
    pub allow_hypothesis_violations: bool,
}

impl SimulationConfig {
    pub fn new(dt: f64, t_final: f64, gamma: MotilityFunction, params: ModelParameters) -> Self {
        Self {
            dt,
            t_final,
            gamma,
            params,
            star_size: DEFAULT_STAR_SIZE,
            weights: WeightScheme::default(),
            snapshot_times: Vec::new(),
            enforce_stability_bound: false,
            stability_check_every: 1,
            stability: StabilityOptions::default(),
            neumann: NeumannRows::default(),
            allow_hypothesis_violations: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "t_final = {} must be at least dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("snapshot times must be sorted".into()));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(0.0..=self.t_final).contains(&t))
        {
            return Err(Error::Config(format!(
                "snapshot time {t} outside [0, t_final]"
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`.
    pub fn step_count(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Step index closest to time `t`.
    pub fn step_at(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRecord {
    pub step: usize,
    pub t: f64,
    pub norm_u: f64,
    pub norm_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Requested time.
    pub time: f64,
    pub state: FieldState,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    /// One record per time level, starting with `t = 0`.
    pub series: Vec<NormRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: FieldState,
    pub initial_stability: Option<StabilityReport>,
}

impl SimulationResult {
    /// Norm record at the step closest to `t`.
    pub fn record_at(&self, t: f64, dt: f64) -> Option<NormRecord> {
        let step = (t / dt).round() as usize;
        self.series.iter().find(|r| r.step == step).copied()
    }
}

/// Right-hand side of the explicit update at one inner node.
pub fn parabolic_rhs(
    state: &FieldState,
    row: &StencilRow,
    gamma: &MotilityFunction,
    mu: f64,
) -> f64 {
    let (u, v) = (&state.u, &state.v);
    let u0 = u[row.center];
    let v0 = v[row.center];
    let lap_u = row.laplacian(u);
    let (ux, uy) = (row.derivative(DX, u), row.derivative(DY, u));
    let (vx, vy) = (row.derivative(DX, v), row.derivative(DY, v));
    let g = gamma.value(v0);
    let g1 = gamma.d1(v0);
    let g2 = gamma.d2(v0);
    g * lap_u
        + 2.0 * g1 * (ux * vx + uy * vy)
        + u0 * g2 * (vx * vx + vy * vy)
        + u0 * g1 * (v0 - u0)
        + mu * u0 * (1.0 - u0)
}

/// A cloud with its stencils and factored elliptic operator.
#[derive(Debug, Clone)]
pub struct Simulation {
    cloud: PointCloud,
    disc: Discretization,
    system: EllipticSystem,
    config: SimulationConfig,
}

impl Simulation {
    pub fn new(cloud: PointCloud, config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::build(
            &cloud,
            config.star_size,
            config.weights,
            config.neumann == NeumannRows::NormalDerivative,
        )?;
        let system = assemble_elliptic(&cloud, &disc, config.neumann)?;
        Ok(Self {
            cloud,
            disc,
            system,
            config,
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn stencils(&self) -> &[StencilRow] {
        &self.disc.inner
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn system(&self) -> &EllipticSystem {
        &self.system
    }

    fn check(&self, passed: bool, what: String) -> Result<()> {
        if passed {
            return Ok(());
        }
        if self.config.allow_hypothesis_violations {
            warn!("{what}; continuing");
            Ok(())
        } else {
            Err(Error::InitialCondition(what))
        }
    }

    /// Samples `u0`, checks the hypotheses and solves for `V`.
    pub fn initialize<F: Fn(f64, f64) -> f64>(&self, u0: F) -> Result<FieldState> {
        self.initialize_values(self.cloud.sample(u0))
    }

    pub fn initialize_values(&self, u: Vec<f64>) -> Result<FieldState> {
        if u.len() != self.cloud.len() {
            return Err(Error::LengthMismatch {
                expected: self.cloud.len(),
                actual: u.len(),
            });
        }
        let init = validate_initial_condition(&u);
        self.check(
            init.passed,
            format!(
                "initial density ranges over [{}, {}]; it must be positive",
                init.min, init.max
            ),
        )?;
        let hyp = validate_hypotheses(
            &self.config.gamma,
            &self.config.params,
            DEFAULT_S_MAX,
            DEFAULT_SAMPLES,
        )?;
        self.check(
            hyp.passed,
            format!(
                "motility function `{}`: {}",
                self.config.gamma.name(),
                hyp.failures.join("; ")
            ),
        )?;
        let v = self.system.solve(&u)?;
        Ok(FieldState {
            u,
            v,
            time: 0.0,
            step: 0,
        })
    }

    pub fn parabolic_rhs(&self, state: &FieldState, slot: usize) -> f64 {
        parabolic_rhs(
            state,
            &self.disc.inner[slot],
            &self.config.gamma,
            self.config.params.mu,
        )
    }

    /// Advances one time step.
    pub fn step(&self, state: &FieldState) -> Result<FieldState> {
        let dt = self.config.dt;
        let mu = self.config.params.mu;
        let gamma = &self.config.gamma;
        let step = state.step + 1;
        let updates: Vec<f64> = self
            .disc
            .inner
            .par_iter()
            .map(|row| state.u[row.center] + dt * parabolic_rhs(state, row, gamma, mu))
            .collect();
        let mut u = state.u.clone();
        for (row, value) in self.disc.inner.iter().zip(updates) {
            u[row.center] = value;
        }
        for &b in self.cloud.boundary_indices() {
            let pair = self
                .cloud
                .node(b)
                .paired_inner()
                .expect("boundary node has a pair");
            u[b] = u[pair];
        }
        if let Some(node) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                step,
                node,
                value: u[node],
            });
        }
        let v = self.system.solve(&u).map_err(|e| match e {
            Error::Solve(_) => Error::Divergence {
                step,
                node: 0,
                value: f64::NAN,
            },
            other => other,
        })?;
        if let Some(node) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                step,
                node,
                value: v[node],
            });
        }
        Ok(FieldState {
            u,
            v,
            time: step as f64 * dt,
            step,
        })
    }

    pub fn stability_report(&self, state: &FieldState) -> Result<StabilityReport> {
        max_stable_dt(
            state.fields(),
            &self.disc.inner,
            &self.config.gamma,
            self.config.params.mu,
            self.config.stability,
        )
    }

    fn enforce(&self, state: &FieldState) -> Result<StabilityReport> {
        let report = self.stability_report(state)?;
        if !report.admits(self.config.dt) {
            return Err(Error::StabilityViolation {
                dt: self.config.dt,
                bound: report.global_bound,
                step: state.step,
                node: report.worst_node,
            });
        }
        Ok(report)
    }

    /// Runs from `u0` to `t_final`.
    pub fn run<F: Fn(f64, f64) -> f64>(&self, u0: F) -> Result<SimulationResult> {
        let state = self.initialize(u0)?;
        self.run_from(state)
    }

    pub fn run_from(&self, mut state: FieldState) -> Result<SimulationResult> {
        let cfg = &self.config;
        let steps = cfg.step_count();
        let initial_stability = if cfg.enforce_stability_bound {
            Some(self.enforce(&state)?)
        } else {
            match self.stability_report(&state) {
                Ok(r) => Some(r),
                Err(e) => {
                    warn!("convergence bound unavailable at t = 0: {e}");
                    None
                }
            }
        };
        let snapshot_steps: Vec<(f64, usize)> = cfg
            .snapshot_times
            .iter()
            .map(|&t| (t, cfg.step_at(t)))
            .collect();
        let mut snapshots = Vec::new();
        let mut series = Vec::with_capacity(steps + 1);
        let mut record = |s: &FieldState, snapshots: &mut Vec<Snapshot>| {
            let (norm_u, norm_v) = norms(s);
            series.push(NormRecord {
                step: s.step,
                t: s.time,
                norm_u,
                norm_v,
            });
            for &(t, k) in &snapshot_steps {
                if k == s.step {
                    snapshots.push(Snapshot {
                        time: t,
                        state: s.clone(),
                    });
                }
            }
        };
        record(&state, &mut snapshots);
        for _ in 0..steps {
            if cfg.enforce_stability_bound
                && cfg.stability_check_every > 0
                && state.step > 0
                && state.step.is_multiple_of(cfg.stability_check_every)
            {
                self.enforce(&state)?;
            }
            state = self.step(&state)?;
            record(&state, &mut snapshots);
        }
        Ok(SimulationResult {
            series,
            snapshots,
            final_state: state,
            initial_stability,
        })
    }
}
