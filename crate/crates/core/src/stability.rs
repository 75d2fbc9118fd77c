//! Time-step bound guaranteeing convergence of the explicit-implicit scheme.
//!
//! For each inner node the bound reads
//!
//! ```text
//! dt < (1 + K) / (K (A1' + A1'') + B1),   K = |1 - λ00| + Σ|λi0|
//! ```
//!
//! where `A1 = |1 - dt A1'| + dt A1''` and `B1 = dt * b1` are the coefficients
//! of the one-step error recursion `eu(n+1) <= A1 eu(n) + B1 ev(n)`.
//!
//! The coefficients involve the unknown continuous solution and mean-value
//! points ξ. Here the continuous values are replaced by the discrete ones
//! (`u0 ≈ U0`, `v0 ≈ V0`), and each `γ⁽ᵏ⁾(ξ)` by the endpoint value over
//! `[min V, max V]` on the star with the largest magnitude.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::motility::MotilityFunction;
use crate::stencil::{StencilRow, DX, DY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StabilityOptions {
    /// Multiply the leading `-λ00` term of `A1'` by `γ(V0)`, matching the
    /// diffusion term of the scheme. Off by default.
    pub scale_laplacian_by_gamma: bool,
}

/// Fields the coefficients are evaluated on.
#[derive(Debug, Clone, Copy)]
pub struct Fields<'a> {
    pub u: &'a [f64],
    pub v: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCoefficients {
    pub node: usize,
    pub a1_prime: f64,
    pub a1_doubleprime: f64,
    /// `B1 / dt`.
    pub b1: f64,
    /// `|1 - λ00| + Σ|λi0|`.
    pub k: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// One bound per inner node, in inner-node order.
    pub per_node_bound: Vec<f64>,
    pub global_bound: f64,
    /// Cloud index of the node attaining `global_bound`.
    pub worst_node: usize,
    pub coefficients: Vec<NodeCoefficients>,
}

impl StabilityReport {
    pub fn admits(&self, dt: f64) -> bool {
        dt < self.global_bound
    }

    /// Per-node CSV: `node,a1_prime,a1_doubleprime,b1,k,bound`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node,a1_prime,a1_doubleprime,b1,k,bound")?;
        for c in &self.coefficients {
            writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                c.node, c.a1_prime, c.a1_doubleprime, c.b1, c.k, c.bound
            )?;
        }
        out.flush()
    }
}

struct Local {
    u0: f64,
    v0: f64,
    ux: f64,
    uy: f64,
    vx: f64,
    vy: f64,
    lap_u: f64,
    v_min: f64,
    v_max: f64,
}

fn local(row: &StencilRow, f: Fields<'_>) -> Local {
    let (mut v_min, mut v_max) = (f.v[row.center], f.v[row.center]);
    for &n in &row.neighbors {
        v_min = v_min.min(f.v[n]);
        v_max = v_max.max(f.v[n]);
    }
    Local {
        u0: f.u[row.center],
        v0: f.v[row.center],
        ux: row.derivative(DX, f.u),
        uy: row.derivative(DY, f.u),
        vx: row.derivative(DX, f.v),
        vy: row.derivative(DY, f.v),
        lap_u: row.laplacian(f.u),
        v_min,
        v_max,
    }
}

/// Worst-case stand-in for `γ⁽ᵏ⁾(ξ)` with ξ in `[lo, hi]`.
fn at_xi(gamma: &MotilityFunction, k: usize, lo: f64, hi: f64) -> f64 {
    let (a, b) = (gamma.derivative(k, lo), gamma.derivative(k, hi));
    if a.abs() >= b.abs() {
        a
    } else {
        b
    }
}

/// `(A1', A1'')` at one inner node.
pub fn coefficient_a1(
    row: &StencilRow,
    fields: Fields<'_>,
    gamma: &MotilityFunction,
    mu: f64,
    options: StabilityOptions,
) -> (f64, f64) {
    let l = local(row, fields);
    let lam = &row.lambda_center;
    let g1 = gamma.d1(l.v0);
    let g2 = gamma.d2(l.v0);
    let diffusion = if options.scale_laplacian_by_gamma {
        gamma.value(l.v0)
    } else {
        1.0
    };
    // Bracket multiplying dt inside |1 + dt [...]|; A1' is its negation.
    let bracket = -row.lambda_laplacian_center * diffusion
        - 2.0 * g1 * lam[DX] * l.vx
        - 2.0 * g1 * lam[DY] * l.vy
        + g2 * l.vx * l.vx
        + g2 * l.vy * l.vy
        + l.v0 * g1
        + l.u0 * g1
        - 2.0 * l.u0 * g1
        + mu
        - 2.0 * mu * l.u0;
    let sum_l0: f64 = row.lambda_laplacian_neighbors.iter().sum();
    let a1_doubleprime =
        (g1 * sum_l0).abs() + 2.0 * (g2 * l.vx * lam[DX]).abs() + 2.0 * (g2 * l.vy * lam[DY]).abs();
    (-bracket, a1_doubleprime)
}

/// `B1 / dt` at one inner node.
pub fn coefficient_b1(row: &StencilRow, fields: Fields<'_>, gamma: &MotilityFunction) -> f64 {
    let l = local(row, fields);
    let lam = &row.lambda_center;
    let g1 = gamma.d1(l.v0);
    let g2 = gamma.d2(l.v0);
    let xi1 = at_xi(gamma, 1, l.v_min, l.v_max);
    let xi2 = at_xi(gamma, 2, l.v_min, l.v_max);
    let xi3 = at_xi(gamma, 3, l.v_min, l.v_max);
    // D(v + V) with v ≈ V.
    let (svx, svy) = (2.0 * l.vx, 2.0 * l.vy);
    let signed = xi1 * l.lap_u + 2.0 * xi2 * l.ux * l.vx + 2.0 * xi2 * l.uy * l.vy
        - 2.0 * g1 * l.ux * lam[DX]
        - 2.0 * g1 * l.uy * lam[DY]
        + l.u0 * xi3 * l.vx * l.vx
        + l.u0 * xi3 * l.vy * l.vy
        - l.u0 * g2 * svx * lam[DX]
        - l.u0 * g2 * svy * lam[DY]
        + l.u0 * (l.v0 - l.u0) * xi2;
    signed.abs()
        + 2.0 * (g1 * l.ux * lam[DX]).abs()
        + 2.0 * (g1 * l.uy * lam[DY]).abs()
        + (l.u0 * g2 * svx * lam[DX]).abs()
        + (l.u0 * g2 * svy * lam[DY]).abs()
}

/// `|1 - λ00| + Σ|λi0|`.
pub fn laplacian_weight_mass(row: &StencilRow) -> f64 {
    (1.0 - row.lambda_laplacian_center).abs()
        + row
            .lambda_laplacian_neighbors
            .iter()
            .map(|l| l.abs())
            .sum::<f64>()
}

fn node_bound(
    row: &StencilRow,
    fields: Fields<'_>,
    gamma: &MotilityFunction,
    mu: f64,
    options: StabilityOptions,
) -> Result<NodeCoefficients> {
    let (a1_prime, a1_doubleprime) = coefficient_a1(row, fields, gamma, mu, options);
    let b1 = coefficient_b1(row, fields, gamma);
    let k = laplacian_weight_mass(row);
    let denominator = k * (a1_prime + a1_doubleprime) + b1;
    if !(denominator > 0.0) {
        return Err(Error::BoundBreakdown {
            node: row.center,
            denominator,
        });
    }
    Ok(NodeCoefficients {
        node: row.center,
        a1_prime,
        a1_doubleprime,
        b1,
        k,
        bound: (1.0 + k) / denominator,
    })
}

/// Evaluates the bound at every inner node and takes the minimum.
pub fn max_stable_dt(
    fields: Fields<'_>,
    stencils: &[StencilRow],
    gamma: &MotilityFunction,
    mu: f64,
    options: StabilityOptions,
) -> Result<StabilityReport> {
    if stencils.is_empty() {
        return Err(Error::Config("no inner stencils".into()));
    }
    let coefficients: Vec<NodeCoefficients> = stencils
        .par_iter()
        .map(|row| node_bound(row, fields, gamma, mu, options))
        .collect::<Result<_>>()?;
    let per_node_bound: Vec<f64> = coefficients.iter().map(|c| c.bound).collect();
    let (worst, global_bound) = per_node_bound
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one stencil");
    Ok(StabilityReport {
        worst_node: coefficients[worst].node,
        global_bound,
        per_node_bound,
        coefficients,
    })
}

/// Bound at a spatially constant state `(c, c)` in closed form: all
/// derivative estimates vanish and `B1 = 0`.
pub fn constant_state_bound(
    row: &StencilRow,
    c: f64,
    gamma: &MotilityFunction,
    mu: f64,
    options: StabilityOptions,
) -> f64 {
    let diffusion = if options.scale_laplacian_by_gamma {
        gamma.value(c)
    } else {
        1.0
    };
    let l00 = row.lambda_laplacian_center;
    let g1 = gamma.d1(c);
    // Bracket: -λ00 + c γ' + c γ' - 2 c γ' + μ - 2 μ c.
    let a1_prime = l00 * diffusion - (mu - 2.0 * mu * c);
    let sum_l0: f64 = row.lambda_laplacian_neighbors.iter().sum();
    let a1_doubleprime = (g1 * sum_l0).abs();
    let k = laplacian_weight_mass(row);
    (1.0 + k) / (k * (a1_prime + a1_doubleprime))
}
