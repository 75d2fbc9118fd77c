//! The two numerical experiments: a smooth perturbation of the constant
//! state under `γ = exp(-s)`, and a piecewise-polynomial density under
//! `γ = (1 + s)^-2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::motility::{ModelParameters, MotilityFunction};
use crate::simulation::SimulationConfig;
use crate::stencil::WeightScheme;

pub const REPORT_TIMES: [f64; 5] = [0.05, 0.1, 0.5, 1.0, 5.0];

#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub u0: fn(f64, f64) -> f64,
    /// Motility function name accepted by [`MotilityFunction::by_name`].
    pub gamma: &'static str,
    pub mu: f64,
    pub dt: f64,
    pub weights: WeightScheme,
    pub report_times: Vec<f64>,
    /// The initial datum touches zero, so positivity is only warned about.
    pub allow_hypothesis_violations: bool,
}

impl ExperimentPreset {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(example1()),
            "example2" => Ok(example2()),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected example1 or example2)"
            ))),
        }
    }

    pub fn motility(&self) -> MotilityFunction {
        MotilityFunction::by_name(self.gamma).expect("preset motility names are built in")
    }

    pub fn t_final(&self) -> f64 {
        self.report_times.iter().copied().fold(0.0, f64::max)
    }

    /// Simulation settings up to the last report time, with a snapshot at
    /// every report time.
    pub fn config(&self) -> SimulationConfig {
        let mut c = SimulationConfig::new(
            self.dt,
            self.t_final(),
            self.motility(),
            ModelParameters::new(self.mu).expect("preset mu is positive"),
        );
        c.weights = self.weights;
        c.snapshot_times = self.report_times.clone();
        c.allow_hypothesis_violations = self.allow_hypothesis_violations;
        c
    }
}

pub fn example1_u0(x: f64, y: f64) -> f64 {
    4.0 + (3.0 * PI * x).cos() + 2.0 * (PI * y).cos()
}

/// `p(x) = 19.2x⁴ - 25.6x³ + 9.6x² + 0.1` on `[0, 0.5]`, `0.5` beyond.
pub fn example2_profile(x: f64) -> f64 {
    if x <= 0.5 {
        ((19.2 * x - 25.6) * x + 9.6) * x * x + 0.1
    } else {
        0.5
    }
}

pub fn example2_u0(x: f64, y: f64) -> f64 {
    example2_profile(x) * (1.0 + (2.0 * PI * y).cos())
}

pub fn example1() -> ExperimentPreset {
    ExperimentPreset {
        name: "example1",
        u0: example1_u0,
        gamma: "exp",
        mu: 3.0,
        dt: 1e-3,
        weights: WeightScheme::default(),
        report_times: REPORT_TIMES.to_vec(),
        allow_hypothesis_violations: false,
    }
}

pub fn example2() -> ExperimentPreset {
    ExperimentPreset {
        name: "example2",
        u0: example2_u0,
        gamma: "rational",
        mu: 4.5,
        dt: 1e-3,
        weights: WeightScheme::default(),
        report_times: REPORT_TIMES.to_vec(),
        allow_hypothesis_violations: true,
    }
}
