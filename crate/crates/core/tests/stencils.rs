use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use gfdm::stencil::{DX, DXX, DXY, DY, DYY};
use gfdm::{
    build_all_stars, compute_stencil, generate_irregular_cloud, generate_regular_cloud, Domain,
    Star, WeightScheme,
};

/// Derivatives at the center from a dense weighted least-squares solve.
fn dense_derivatives(star: &Star, weights: &WeightScheme, du: &[f64]) -> [f64; 5] {
    let s = star.len();
    let r = star
        .offsets
        .iter()
        .fold(0.0f64, |m, o| m.max(o[0].hypot(o[1])));
    let scale = [r, r, r * r, r * r, r * r];
    let mut a = DMatrix::zeros(s, 5);
    let mut b = DVector::zeros(s);
    for (i, &[h, k]) in star.offsets.iter().enumerate() {
        let w = weights.weight(h, k);
        let c = [h, k, h * h / 2.0, k * k / 2.0, h * k];
        for j in 0..5 {
            a[(i, j)] = w * c[j] / scale[j];
        }
        b[i] = w * du[i];
    }
    let x = a.svd(true, true).solve(&b, 0.0).unwrap();
    std::array::from_fn(|j| x[j] / scale[j])
}

#[test]
fn weights_match_dense_least_squares_on_irregular_cloud() {
    let cloud = generate_irregular_cloud(15, 13, 0.3, 11, Domain::unit_square()).unwrap();
    for alpha in [1.0, 2.0, 3.0] {
        let weights = WeightScheme::new(alpha).unwrap();
        for star in build_all_stars(&cloud, 10).unwrap() {
            let row = compute_stencil(&star, &weights).unwrap();
            // Unit data on one neighbor picks out that neighbor's weights.
            for i in 0..star.len() {
                let mut du = vec![0.0; star.len()];
                du[i] = 1.0;
                let want = dense_derivatives(&star, &weights, &du);
                for (got, want) in row.lambda_neighbors[i].iter().zip(&want) {
                    assert_relative_eq!(got, want, max_relative = 1e-9, epsilon = 1e-6);
                }
            }
        }
    }
}

#[test]
fn neighbor_order_does_not_matter() {
    let cloud = generate_irregular_cloud(11, 11, 0.25, 5, Domain::unit_square()).unwrap();
    let weights = WeightScheme::default();
    for star in build_all_stars(&cloud, 9).unwrap().into_iter().step_by(7) {
        let row = compute_stencil(&star, &weights).unwrap();
        let order: Vec<usize> = (0..star.len()).rev().collect();
        let flipped = compute_stencil(&star.permuted(&order), &weights).unwrap();
        for (pos, &i) in order.iter().enumerate() {
            for r in 0..5 {
                assert_relative_eq!(
                    flipped.lambda_neighbors[pos][r],
                    row.lambda_neighbors[i][r],
                    max_relative = 1e-10
                );
            }
        }
        assert_relative_eq!(
            flipped.lambda_laplacian_center,
            row.lambda_laplacian_center,
            max_relative = 1e-10
        );
    }
}

#[test]
fn laplacian_center_is_sum_of_second_derivative_weights() {
    let cloud = generate_regular_cloud(9, 7, Domain::unit_square()).unwrap();
    for star in build_all_stars(&cloud, 8).unwrap() {
        let row = compute_stencil(&star, &WeightScheme::default()).unwrap();
        assert_relative_eq!(
            row.lambda_laplacian_center,
            row.lambda_center[DXX] + row.lambda_center[DYY],
            max_relative = 1e-14
        );
        let sum: f64 = row.lambda_laplacian_neighbors.iter().sum();
        assert_relative_eq!(sum, row.lambda_laplacian_center, max_relative = 1e-12);
    }
}

fn star_strategy() -> impl Strategy<Value = Star> {
    (8usize..=12)
        .prop_flat_map(|s| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), s))
        .prop_filter("separated, non-degenerate points", |pts| {
            pts.iter().all(|p| p.0.hypot(p.1) > 0.1)
                && pts
                    .iter()
                    .enumerate()
                    .all(|(i, p)| pts[..i].iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) > 0.05))
        })
        .prop_filter_map("degenerate star", |pts| {
            let star = Star {
                center: 0,
                neighbors: (1..=pts.len()).collect(),
                offsets: pts.iter().map(|&(h, k)| [h, k]).collect(),
            };
            compute_stencil(&star, &WeightScheme::default())
                .ok()
                .map(|_| star)
        })
}

proptest! {
    #[test]
    fn quadratics_are_differentiated_exactly(
        star in star_strategy(),
        a in prop::array::uniform6(-3.0f64..3.0),
    ) {
        let row = compute_stencil(&star, &WeightScheme::default()).unwrap();
        let p = |x: f64, y: f64| a[0] + a[1] * x + a[2] * y + a[3] * x * x + a[4] * x * y + a[5] * y * y;
        let values: Vec<f64> = star.offsets.iter().map(|&[h, k]| p(h, k)).collect();
        let d = row.apply(p(0.0, 0.0), &values).unwrap();
        let exact = [a[1], a[2], 2.0 * a[3], 2.0 * a[5], a[4]];
        for r in [DX, DY, DXX, DYY, DXY] {
            prop_assert!((d[r] - exact[r]).abs() < 1e-8, "r = {}: {} vs {}", r, d[r], exact[r]);
        }
    }

    #[test]
    fn weights_scale_with_spacing(star in star_strategy(), t in 0.01f64..10.0) {
        let w = WeightScheme::default();
        let row = compute_stencil(&star, &w).unwrap();
        let scaled = Star {
            offsets: star.offsets.iter().map(|&[h, k]| [t * h, t * k]).collect(),
            ..star.clone()
        };
        let srow = compute_stencil(&scaled, &w).unwrap();
        let power = [1, 1, 2, 2, 2];
        for (a, b) in row.lambda_neighbors.iter().zip(&srow.lambda_neighbors) {
            for r in 0..5 {
                let want = a[r] / t.powi(power[r]);
                prop_assert!((b[r] - want).abs() <= 1e-8 * want.abs().max(1.0 / t.powi(power[r])));
            }
        }
    }
}
