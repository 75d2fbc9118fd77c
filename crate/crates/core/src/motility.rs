//! Motility regulation functions and the sampled hypothesis checks on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_S_MAX: f64 = 50.0;
pub const DEFAULT_SAMPLES: usize = 100_000;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `gamma` and its first three derivatives.
#[derive(Clone)]
pub struct MotilityFunction {
    name: String,
    f: [Scalar; 4],
    /// Arguments at or below this value are outside the domain.
    lower_limit: Option<f64>,
}

impl fmt::Debug for MotilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MotilityFunction")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl MotilityFunction {
    /// A user-supplied motility function. The evaluators must be pure.
    pub fn custom<F0, F1, F2, F3>(
        name: impl Into<String>,
        gamma: F0,
        d1: F1,
        d2: F2,
        d3: F3,
    ) -> Self
    where
        F0: Fn(f64) -> f64 + Send + Sync + 'static,
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
        F3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: [Arc::new(gamma), Arc::new(d1), Arc::new(d2), Arc::new(d3)],
            lower_limit: None,
        }
    }

    /// Built-in functions by CLI name: `exp` or `rational`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "exp" => Ok(gamma_exp()),
            "rational" => Ok(gamma_rational()),
            other => Err(Error::Config(format!(
                "unknown motility function `{other}` (expected exp or rational)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        (self.f[0])(s)
    }

    #[inline]
    pub fn d1(&self, s: f64) -> f64 {
        (self.f[1])(s)
    }

    #[inline]
    pub fn d2(&self, s: f64) -> f64 {
        (self.f[2])(s)
    }

    #[inline]
    pub fn d3(&self, s: f64) -> f64 {
        (self.f[3])(s)
    }

    /// Derivative of order `k` (0 to 3).
    pub fn derivative(&self, k: usize, s: f64) -> f64 {
        (self.f[k])(s)
    }

    /// `[gamma, gamma', gamma'', gamma''']` at `s`, with a domain check.
    pub fn evaluate(&self, s: f64) -> Result<[f64; 4]> {
        if let Some(limit) = self.lower_limit {
            if !(s > limit) {
                return Err(Error::MotilityDomain {
                    name: self.name.clone(),
                    s,
                });
            }
        }
        Ok([self.value(s), self.d1(s), self.d2(s), self.d3(s)])
    }
}

/// `gamma(s) = exp(-s)`.
pub fn gamma_exp() -> MotilityFunction {
    MotilityFunction::custom(
        "exp",
        |s: f64| (-s).exp(),
        |s: f64| -(-s).exp(),
        |s: f64| (-s).exp(),
        |s: f64| -(-s).exp(),
    )
}

/// `gamma(s) = (1 + s)^-2`, defined for `s > -1`.
pub fn gamma_rational() -> MotilityFunction {
    let mut g = MotilityFunction::custom(
        "rational",
        |s: f64| (1.0 + s).powi(-2),
        |s: f64| -2.0 * (1.0 + s).powi(-3),
        |s: f64| 6.0 * (1.0 + s).powi(-4),
        |s: f64| -24.0 * (1.0 + s).powi(-5),
    );
    g.lower_limit = Some(-1.0);
    g
}

/// Logistic growth rate `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters {
    pub mu: f64,
}

impl ModelParameters {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
        Ok(Self { mu })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub gamma_nonnegative: bool,
    pub d1_nonpositive: bool,
    pub d2_nonnegative: bool,
    pub d3_nonpositive: bool,
    /// Sampled maximum of `-2 gamma'(s) + gamma''(s) s`.
    pub mu0: f64,
    pub mu0_at: f64,
    /// Sampled maximum of `|gamma'(s)|^2 / gamma(s)`; infinite when gamma
    /// vanishes where gamma' does not.
    pub c_gamma: f64,
    pub mu: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks the sign, growth and ratio hypotheses on `gamma` by sampling
/// `[0, s_max]` at `n_samples` uniformly spaced points.
pub fn validate_hypotheses(
    gamma: &MotilityFunction,
    params: &ModelParameters,
    s_max: f64,
    n_samples: usize,
) -> Result<HypothesisReport> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::Config(format!(
            "s_max must be positive, got {s_max}"
        )));
    }
    if n_samples < 100 {
        return Err(Error::Config(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let mut signs = [true; 4];
    let mut first_bad = [f64::NAN; 4];
    let mut mu0 = f64::NEG_INFINITY;
    let mut mu0_at = 0.0;
    let mut c_gamma = 0.0f64;
    for i in 0..n_samples {
        let s = s_max * i as f64 / (n_samples - 1) as f64;
        let [g, g1, g2, g3] = gamma.evaluate(s)?;
        let ok = [g >= 0.0, g1 <= 0.0, g2 >= 0.0, g3 <= 0.0];
        for k in 0..4 {
            if !ok[k] && signs[k] {
                signs[k] = false;
                first_bad[k] = s;
            }
        }
        let growth = -2.0 * g1 + g2 * s;
        if growth > mu0 {
            mu0 = growth;
            mu0_at = s;
        }
        let ratio = if g == 0.0 {
            if g1 == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            g1 * g1 / g
        };
        c_gamma = c_gamma.max(ratio);
    }

    let mut failures = Vec::new();
    let labels = ["gamma >= 0", "gamma' <= 0", "gamma'' >= 0", "gamma''' <= 0"];
    for k in 0..4 {
        if !signs[k] {
            failures.push(format!("{} fails at s = {}", labels[k], first_bad[k]));
        }
    }
    if !(mu0 < params.mu) {
        failures.push(format!(
            "-2 gamma' + gamma'' s reaches {mu0} at s = {mu0_at}, not below mu = {}",
            params.mu
        ));
    }
    if !c_gamma.is_finite() {
        failures.push("|gamma'|^2 / gamma is unbounded".to_string());
    }
    Ok(HypothesisReport {
        gamma_nonnegative: signs[0],
        d1_nonpositive: signs[1],
        d2_nonnegative: signs[2],
        d3_nonpositive: signs[3],
        mu0,
        mu0_at,
        c_gamma,
        mu: params.mu,
        passed: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDataReport {
    pub min: f64,
    pub max: f64,
    pub passed: bool,
}

/// Reports the range of the initial density; it must be strictly positive.
pub fn validate_initial_condition(values: &[f64]) -> InitialDataReport {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let finite = values.iter().all(|v| v.is_finite());
    InitialDataReport {
        min,
        max,
        passed: !values.is_empty() && finite && min > 0.0,
    }
}
