//! The implicit screened Poisson equation `-Δv + v = u` with homogeneous
//! Neumann conditions.
//!
//! Inner rows use the GFD Laplacian. Boundary rows impose a zero normal
//! derivative, either through a GFD first-derivative star at the boundary node
//! (second order) or by copying the paired inner value (first order).

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, BandedLu, CsrMatrix};
use crate::stencil::{Discretization, StencilRow, DX, DY};

/// Relative residual accepted from a solve: `|A v - rhs| <= tol (1 + |rhs|)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// How boundary rows close the Neumann condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeumannRows {
    /// `n . grad V = 0` from a GFD star centered at the boundary node.
    #[default]
    NormalDerivative,
    /// `V_b - V_pair(b) = 0`.
    Paired,
}

impl NeumannRows {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "stencil" | "normal-derivative" => Ok(Self::NormalDerivative),
            "paired" => Ok(Self::Paired),
            other => Err(Error::Config(format!(
                "unknown Neumann closure `{other}` (expected stencil or paired)"
            ))),
        }
    }
}

/// Assembled and factored elliptic operator. Immutable once built.
#[derive(Debug, Clone)]
pub struct EllipticSystem {
    matrix: CsrMatrix,
    inner_rows: Vec<usize>,
    boundary_rows: Vec<usize>,
    neumann: NeumannRows,
    lu: BandedLu,
}

impl EllipticSystem {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn inner_rows(&self) -> &[usize] {
        &self.inner_rows
    }

    pub fn boundary_rows(&self) -> &[usize] {
        &self.boundary_rows
    }

    pub fn neumann(&self) -> NeumannRows {
        self.neumann
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Right-hand side: `u` on inner rows, zero on boundary rows.
    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.dim()];
        for &j in &self.inner_rows {
            rhs[j] = u[j];
        }
        rhs
    }

    /// `|A v - rhs|_inf`.
    pub fn residual(&self, v: &[f64], rhs: &[f64]) -> f64 {
        let av = self.matrix.mul_vec(v);
        av.iter()
            .zip(rhs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn solve(&self, u: &[f64]) -> Result<Vec<f64>> {
        solve_elliptic(self, u)
    }
}

fn inner_row(row: &StencilRow, triplets: &mut Vec<(usize, usize, f64)>) {
    triplets.push((row.center, row.center, 1.0 + row.lambda_laplacian_center));
    for (&n, &lam) in row.neighbors.iter().zip(&row.lambda_laplacian_neighbors) {
        triplets.push((row.center, n, -lam));
    }
}

fn normal_derivative_row(
    row: &StencilRow,
    normal: [f64; 2],
    triplets: &mut Vec<(usize, usize, f64)>,
) {
    let dot = |l: &[f64; 5]| normal[0] * l[DX] + normal[1] * l[DY];
    triplets.push((row.center, row.center, -dot(&row.lambda_center)));
    for (&n, lam) in row.neighbors.iter().zip(&row.lambda_neighbors) {
        triplets.push((row.center, n, dot(lam)));
    }
}

/// Assembles the elliptic matrix and factors it.
pub fn assemble_elliptic(
    cloud: &PointCloud,
    disc: &Discretization,
    neumann: NeumannRows,
) -> Result<EllipticSystem> {
    let m = cloud.len();
    let inner = cloud.inner_indices();
    let boundary = cloud.boundary_indices();
    let mut triplets = Vec::new();

    for (slot, &j) in inner.iter().enumerate() {
        let row = disc.inner.get(slot).ok_or(Error::MissingStencil(j))?;
        if row.center != j {
            return Err(Error::MissingStencil(j));
        }
        inner_row(row, &mut triplets);
    }
    if disc.inner.len() != inner.len() {
        return Err(Error::Config(format!(
            "{} inner stencils for {} inner nodes",
            disc.inner.len(),
            inner.len()
        )));
    }

    match neumann {
        NeumannRows::Paired => {
            for &b in boundary {
                let pair = cloud
                    .node(b)
                    .paired_inner()
                    .expect("boundary node has a pair");
                triplets.push((b, b, 1.0));
                triplets.push((b, pair, -1.0));
            }
        }
        NeumannRows::NormalDerivative => {
            if disc.boundary.len() != boundary.len() {
                return Err(Error::Config(
                    "normal-derivative closure needs one stencil per boundary node".into(),
                ));
            }
            for (&b, row) in boundary.iter().zip(&disc.boundary) {
                if row.center != b {
                    return Err(Error::Config(format!(
                        "boundary stencil for node {b} is misplaced"
                    )));
                }
                let normal = cloud.node(b).normal().expect("boundary node has a normal");
                normal_derivative_row(row, normal, &mut triplets);
            }
        }
    }

    let matrix = CsrMatrix::from_triplets(m, &triplets);
    let lu = BandedLu::factor(&matrix)?;
    Ok(EllipticSystem {
        matrix,
        inner_rows: inner.to_vec(),
        boundary_rows: boundary.to_vec(),
        neumann,
        lu,
    })
}

/// Solves for `V` given `U`, checking the residual contract.
pub fn solve_elliptic(system: &EllipticSystem, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != system.dim() {
        return Err(Error::LengthMismatch {
            expected: system.dim(),
            actual: u.len(),
        });
    }
    let rhs = system.rhs(u);
    let tol = RESIDUAL_TOL * (1.0 + max_abs(&rhs));
    let mut v = system.lu.solve(&rhs)?;
    let mut residual = system.residual(&v, &rhs);
    if !(residual <= tol) && residual.is_finite() {
        // One step of iterative refinement.
        let av = system.matrix.mul_vec(&v);
        let r: Vec<f64> = rhs.iter().zip(&av).map(|(b, a)| b - a).collect();
        let dv = system.lu.solve(&r)?;
        for (x, d) in v.iter_mut().zip(&dv) {
            *x += d;
        }
        residual = system.residual(&v, &rhs);
    }
    if !(residual <= tol) {
        return Err(Error::Solve(format!(
            "residual {residual:e} exceeds {tol:e}"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{generate_regular_cloud, Domain};
    use crate::stencil::WeightScheme;

    fn system(n: usize, neumann: NeumannRows) -> (PointCloud, Discretization, EllipticSystem) {
        let c = generate_regular_cloud(n, n, Domain::unit_square()).unwrap();
        let d = Discretization::build(
            &c,
            8,
            WeightScheme::default(),
            neumann == NeumannRows::NormalDerivative,
        )
        .unwrap();
        let s = assemble_elliptic(&c, &d, neumann).unwrap();
        (c, d, s)
    }

    #[test]
    fn single_inner_row() {
        let (_, d, s) = system(3, NeumannRows::Paired);
        let row = &d.inner[0];
        assert_eq!(s.matrix().get(4, 4), 1.0 + row.lambda_laplacian_center);
        let entries: Vec<_> = s.matrix().row(4).collect();
        assert_eq!(entries.len(), 9);
        for b in [0, 1, 2, 3, 5, 6, 7, 8] {
            let row_b: Vec<_> = s.matrix().row(b).collect();
            assert_eq!(
                row_b,
                vec![
                    (b.min(4), if b < 4 { 1.0 } else { -1.0 }),
                    (b.max(4), if b < 4 { -1.0 } else { 1.0 })
                ]
            );
        }
    }

    #[test]
    fn ones_vector_identity() {
        for neumann in [NeumannRows::Paired, NeumannRows::NormalDerivative] {
            let (c, _, s) = system(7, neumann);
            let r = s.matrix().mul_vec(&vec![1.0; c.len()]);
            for &j in c.inner_indices() {
                assert!((r[j] - 1.0).abs() < 1e-9, "{j}: {}", r[j]);
            }
            for &b in c.boundary_indices() {
                assert!(r[b].abs() < 1e-9, "{b}: {}", r[b]);
            }
            let v = s.solve(&vec![1.0; c.len()]).unwrap();
            for x in v {
                assert!((x - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sparsity_bound() {
        let (c, _, s) = system(9, NeumannRows::NormalDerivative);
        for r in 0..c.len() {
            assert!(s.matrix().row(r).count() <= 9);
        }
    }

    #[test]
    fn deterministic_solve() {
        let (c, _, s) = system(11, NeumannRows::NormalDerivative);
        let u = c.sample(|x, y| 2.0 + (3.0 * x).sin() * y);
        let a = s.solve(&u).unwrap();
        let b = s.solve(&u).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let rhs = s.rhs(&u);
        assert!(s.residual(&a, &rhs) <= RESIDUAL_TOL * (1.0 + max_abs(&rhs)));
    }

    #[test]
    fn nonnegative_forcing_gives_nonnegative_solution() {
        let (c, _, s) = system(21, NeumannRows::NormalDerivative);
        let u = c.sample(|x, y| {
            (4.0 + (3.0 * std::f64::consts::PI * x).cos() + 2.0 * (std::f64::consts::PI * y).cos())
                .max(0.0)
                * x
        });
        let v = s.solve(&u).unwrap();
        assert!(v.iter().all(|&x| x >= -1e-9));
    }

    #[test]
    fn rejects_missing_stencils() {
        let c = generate_regular_cloud(5, 5, Domain::unit_square()).unwrap();
        let mut d = Discretization::build(&c, 8, WeightScheme::default(), false).unwrap();
        assert!(assemble_elliptic(&c, &d, NeumannRows::NormalDerivative).is_err());
        d.inner.pop();
        assert!(matches!(
            assemble_elliptic(&c, &d, NeumannRows::Paired),
            Err(Error::MissingStencil(_))
        ));
        let (_, _, s) = system(5, NeumannRows::Paired);
        assert!(matches!(
            s.solve(&[1.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn parse_closure() {
        assert_eq!(NeumannRows::parse("paired").unwrap(), NeumannRows::Paired);
        assert_eq!(
            NeumannRows::parse("stencil").unwrap(),
            NeumannRows::NormalDerivative
        );
        assert!(NeumannRows::parse("dirichlet").is_err());
    }
}
