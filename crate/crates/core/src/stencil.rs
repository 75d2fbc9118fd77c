//! Generalized finite difference weights.
//!
//! For a star around node 0 with offsets `(h_i, k_i)` and weights `w_i`, the
//! five derivatives `(u_x, u_y, u_xx, u_yy, u_xy)` minimize
//!
//! ```text
//! B = sum_i w_i^2 (u_0 + c_i . D - u_i)^2,   c_i = (h, k, h^2/2, k^2/2, h k)
//! ```
//!
//! whose normal equations are `A D = b` with `A = sum_i w_i^2 c_i c_i^T`.
//! Solving once per star gives the weights `lambda_{i,r} = w_i^2 (A^-1 c_i)_r`
//! and `lambda_{0,r} = sum_i lambda_{i,r}`, so that
//! `D_r = -lambda_{0,r} u_0 + sum_i lambda_{i,r} u_i`.

use std::io::Write;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::stars::{build_all_stars, build_boundary_stars, Star};

pub const DX: usize = 0;
pub const DY: usize = 1;
pub const DXX: usize = 2;
pub const DYY: usize = 3;
pub const DXY: usize = 4;

/// Stars whose normal matrix has a 1-norm condition number above this are
/// rejected as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

pub type Matrix5 = [[f64; 5]; 5];

/// Distance weights `w_i = |z_0 - z_i|^(-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightScheme {
    alpha: f64,
}

impl Default for WeightScheme {
    /// `w_i = 1 / (h_i^2 + k_i^2)`.
    fn default() -> Self {
        Self { alpha: 2.0 }
    }
}

impl WeightScheme {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "weight exponent must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weight(&self, h: f64, k: f64) -> f64 {
        let d2 = h * h + k * k;
        if self.alpha == 2.0 {
            1.0 / d2
        } else {
            d2.powf(-0.5 * self.alpha)
        }
    }
}

/// Second-order Taylor coefficients of a neighbor at offset `(h, k)`.
pub fn taylor_row(h: f64, k: f64) -> [f64; 5] {
    [h, k, 0.5 * h * h, 0.5 * k * k, h * k]
}

/// `A = sum_i w_i^2 c_i c_i^T`.
pub fn assemble_normal_matrix(star: &Star, weights: &WeightScheme) -> Matrix5 {
    let mut a = [[0.0; 5]; 5];
    for &[h, k] in &star.offsets {
        let w = weights.weight(h, k);
        let w2 = w * w;
        let c = taylor_row(h, k);
        for r in 0..5 {
            for s in r..5 {
                a[r][s] += w2 * c[r] * c[s];
            }
        }
    }
    for r in 0..5 {
        for s in 0..r {
            a[r][s] = a[s][r];
        }
    }
    a
}

/// Lower-triangular Cholesky factor, or `None` on a non-positive pivot.
fn cholesky(a: &Matrix5) -> Option<Matrix5> {
    let mut l = [[0.0; 5]; 5];
    for j in 0..5 {
        let mut d = a[j][j];
        for p in 0..j {
            d -= l[j][p] * l[j][p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let pivot = d.sqrt();
        l[j][j] = pivot;
        for i in j + 1..5 {
            let mut v = a[i][j];
            for p in 0..j {
                v -= l[i][p] * l[j][p];
            }
            l[i][j] = v / pivot;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` in place.
fn cholesky_solve(l: &Matrix5, b: &mut [f64; 5]) {
    for i in 0..5 {
        let mut v = b[i];
        for p in 0..i {
            v -= l[i][p] * b[p];
        }
        b[i] = v / l[i][i];
    }
    for i in (0..5).rev() {
        let mut v = b[i];
        for p in i + 1..5 {
            v -= l[p][i] * b[p];
        }
        b[i] = v / l[i][i];
    }
}

fn norm1(m: &Matrix5) -> f64 {
    (0..5)
        .map(|c| (0..5).map(|r| m[r][c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Derivative weights of one star.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilRow {
    pub center: usize,
    pub neighbors: Vec<usize>,
    /// `lambda_{0,r} = sum_i lambda_{i,r}`.
    pub lambda_center: [f64; 5],
    pub lambda_neighbors: Vec<[f64; 5]>,
    /// `lambda_{00} = lambda_{03} + lambda_{04}`.
    pub lambda_laplacian_center: f64,
    pub lambda_laplacian_neighbors: Vec<f64>,
    /// 1-norm condition number of the normal matrix.
    pub condition_estimate: f64,
}

impl StencilRow {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Estimate of derivative `r` from a field defined on the whole cloud.
    #[inline]
    pub fn derivative(&self, r: usize, field: &[f64]) -> f64 {
        let mut acc = -self.lambda_center[r] * field[self.center];
        for (lam, &n) in self.lambda_neighbors.iter().zip(&self.neighbors) {
            acc += lam[r] * field[n];
        }
        acc
    }

    /// All five derivative estimates from a field on the whole cloud.
    pub fn derivatives(&self, field: &[f64]) -> [f64; 5] {
        let u0 = field[self.center];
        let mut out = self.lambda_center.map(|l| -l * u0);
        for (lam, &n) in self.lambda_neighbors.iter().zip(&self.neighbors) {
            let u = field[n];
            for r in 0..5 {
                out[r] += lam[r] * u;
            }
        }
        out
    }

    /// Discrete Laplacian `-lambda_00 u_0 + sum_i lambda_i0 u_i`.
    #[inline]
    pub fn laplacian(&self, field: &[f64]) -> f64 {
        let mut acc = -self.lambda_laplacian_center * field[self.center];
        for (lam, &n) in self.lambda_laplacian_neighbors.iter().zip(&self.neighbors) {
            acc += lam * field[n];
        }
        acc
    }

    /// Applies the weights to explicit center and neighbor samples.
    pub fn apply(&self, center_value: f64, neighbor_values: &[f64]) -> Result<[f64; 5]> {
        if neighbor_values.len() != self.neighbors.len() {
            return Err(Error::LengthMismatch {
                expected: self.neighbors.len(),
                actual: neighbor_values.len(),
            });
        }
        let mut out = self.lambda_center.map(|l| -l * center_value);
        for (lam, &u) in self.lambda_neighbors.iter().zip(neighbor_values) {
            for r in 0..5 {
                out[r] += lam[r] * u;
            }
        }
        Ok(out)
    }
}

/// Computes the weights of one star through a Cholesky factorization of the
/// normal matrix.
pub fn compute_stencil(star: &Star, weights: &WeightScheme) -> Result<StencilRow> {
    let degenerate = |reason: String| Error::DegenerateStar {
        center: star.center,
        reason,
    };
    let a = assemble_normal_matrix(star, weights);
    let l =
        cholesky(&a).ok_or_else(|| degenerate("normal matrix is not positive definite".into()))?;

    let mut inverse = [[0.0; 5]; 5];
    for c in 0..5 {
        let mut e = [0.0; 5];
        e[c] = 1.0;
        cholesky_solve(&l, &mut e);
        for r in 0..5 {
            inverse[r][c] = e[r];
        }
    }
    let condition_estimate = norm1(&a) * norm1(&inverse);
    if !(condition_estimate <= MAX_CONDITION) {
        return Err(degenerate(format!(
            "condition estimate {condition_estimate:e} exceeds {MAX_CONDITION:e}"
        )));
    }

    let mut lambda_neighbors = Vec::with_capacity(star.len());
    let mut lambda_center = [0.0; 5];
    for &[h, k] in &star.offsets {
        let w = weights.weight(h, k);
        let mut x = taylor_row(h, k);
        cholesky_solve(&l, &mut x);
        let lam = x.map(|v| w * w * v);
        for r in 0..5 {
            lambda_center[r] += lam[r];
        }
        lambda_neighbors.push(lam);
    }
    let lambda_laplacian_neighbors = lambda_neighbors.iter().map(|l| l[DXX] + l[DYY]).collect();
    Ok(StencilRow {
        center: star.center,
        neighbors: star.neighbors.clone(),
        lambda_center,
        lambda_laplacian_center: lambda_center[DXX] + lambda_center[DYY],
        lambda_neighbors,
        lambda_laplacian_neighbors,
        condition_estimate,
    })
}

pub fn compute_stencils(stars: &[Star], weights: &WeightScheme) -> Result<Vec<StencilRow>> {
    stars
        .par_iter()
        .map(|s| compute_stencil(s, weights))
        .collect()
}

/// Estimates derivatives from explicit samples.
pub fn apply_stencil(
    row: &StencilRow,
    center_value: f64,
    neighbor_values: &[f64],
) -> Result<[f64; 5]> {
    row.apply(center_value, neighbor_values)
}

/// Stars and weights for every inner node, plus optional boundary stencils.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub star_size: usize,
    pub weights: WeightScheme,
    /// One row per inner node, in inner-node order.
    pub inner: Vec<StencilRow>,
    /// One row per boundary node when normal-derivative closures are in use.
    pub boundary: Vec<StencilRow>,
}

impl Discretization {
    pub fn build(
        cloud: &PointCloud,
        star_size: usize,
        weights: WeightScheme,
        with_boundary: bool,
    ) -> Result<Self> {
        let inner = compute_stencils(&build_all_stars(cloud, star_size)?, &weights)?;
        let boundary = if with_boundary {
            compute_stencils(&build_boundary_stars(cloud, star_size)?, &weights)?
        } else {
            Vec::new()
        };
        Ok(Self {
            star_size,
            weights,
            inner,
            boundary,
        })
    }
}

/// Dumps weights as `center,neighbor,lam1,lam2,lam3,lam4,lam5`.
pub fn write_stencils_csv<W: Write>(rows: &[StencilRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "center,neighbor,lam1,lam2,lam3,lam4,lam5")?;
    for row in rows {
        for (lam, n) in row.lambda_neighbors.iter().zip(&row.neighbors) {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                row.center, n, lam[0], lam[1], lam[2], lam[3], lam[4]
            )?;
        }
    }
    out.flush()
}
