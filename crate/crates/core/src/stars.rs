//! E_s-stars: the `s` nearest nodes around a center node.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Smallest star that determines the five first and second derivatives.
pub const MIN_STAR_SIZE: usize = 5;

/// Default number of neighbors per star.
pub const DEFAULT_STAR_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Star {
    pub center: usize,
    /// Neighbor indices sorted by (distance, index).
    pub neighbors: Vec<usize>,
    /// `(x_i - x_center, y_i - y_center)` for each neighbor.
    pub offsets: Vec<[f64; 2]>,
}

impl Star {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Star with the same center but neighbors visited in `order`.
    pub fn permuted(&self, order: &[usize]) -> Star {
        Star {
            center: self.center,
            neighbors: order.iter().map(|&i| self.neighbors[i]).collect(),
            offsets: order.iter().map(|&i| self.offsets[i]).collect(),
        }
    }
}

/// Star of `s` nearest nodes around an inner node.
pub fn build_star(cloud: &PointCloud, center: usize, s: usize) -> Result<Star> {
    let node = cloud
        .nodes()
        .get(center)
        .ok_or(Error::NodeOutOfRange(center))?;
    if !node.is_inner() {
        return Err(Error::NotInner(center));
    }
    nearest_star(cloud, center, s)
}

/// Star of `s` nearest nodes around any node, boundary nodes included.
///
/// Used for the normal-derivative rows of the elliptic system.
pub fn nearest_star(cloud: &PointCloud, center: usize, s: usize) -> Result<Star> {
    if s < MIN_STAR_SIZE {
        return Err(Error::StarTooSmall(s));
    }
    if center >= cloud.len() {
        return Err(Error::NodeOutOfRange(center));
    }
    if cloud.len() < s + 1 {
        return Err(Error::CloudTooSmall {
            nodes: cloud.len(),
            requested: s,
            needed: s + 1,
        });
    }
    let [cx, cy] = cloud.position(center);
    let mut candidates: Vec<(f64, usize)> = cloud
        .nodes()
        .iter()
        .filter(|n| n.index != center)
        .map(|n| {
            let (h, k) = (n.x - cx, n.y - cy);
            (h * h + k * k, n.index)
        })
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if candidates.len() > s {
        candidates.select_nth_unstable_by(s - 1, by_distance);
        candidates.truncate(s);
    }
    candidates.sort_unstable_by(by_distance);

    let neighbors: Vec<usize> = candidates.iter().map(|&(_, i)| i).collect();
    let offsets = neighbors
        .iter()
        .map(|&i| {
            let [x, y] = cloud.position(i);
            [x - cx, y - cy]
        })
        .collect();
    Ok(Star {
        center,
        neighbors,
        offsets,
    })
}

/// One star per inner node, in inner-node order.
pub fn build_all_stars(cloud: &PointCloud, s: usize) -> Result<Vec<Star>> {
    cloud
        .inner_indices()
        .par_iter()
        .map(|&c| build_star(cloud, c, s))
        .collect()
}

/// One star per boundary node, in boundary-node order.
pub fn build_boundary_stars(cloud: &PointCloud, s: usize) -> Result<Vec<Star>> {
    cloud
        .boundary_indices()
        .par_iter()
        .map(|&c| nearest_star(cloud, c, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{generate_irregular_cloud, generate_regular_cloud, Domain};

    fn grid(n: usize) -> PointCloud {
        generate_regular_cloud(n, n, Domain::unit_square()).unwrap()
    }

    #[test]
    fn moore_neighborhood_on_grid() {
        let c = grid(5);
        let star = build_star(&c, 12, 8).unwrap();
        let mut got = star.neighbors.clone();
        got.sort_unstable();
        assert_eq!(got, vec![6, 7, 8, 11, 13, 16, 17, 18]);
        // Axis neighbors first, lowest index breaks ties.
        assert_eq!(&star.neighbors[..4], &[7, 11, 13, 17]);
        for (&n, off) in star.neighbors.iter().zip(&star.offsets) {
            let [x, y] = c.position(n);
            assert_eq!(*off, [x - 0.5, y - 0.5]);
        }
    }

    #[test]
    fn exhaustive_star() {
        let c = grid(4);
        let star = build_star(&c, 5, c.len() - 1).unwrap();
        let mut got = star.neighbors.clone();
        got.sort_unstable();
        let want: Vec<usize> = (0..c.len()).filter(|&i| i != 5).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn errors() {
        let c = grid(3);
        assert!(matches!(build_star(&c, 4, 4), Err(Error::StarTooSmall(4))));
        assert!(matches!(
            build_star(&c, 4, 9),
            Err(Error::CloudTooSmall { .. })
        ));
        assert!(matches!(build_star(&c, 0, 5), Err(Error::NotInner(0))));
        assert!(matches!(
            build_star(&c, 99, 5),
            Err(Error::NodeOutOfRange(99))
        ));
    }

    #[test]
    fn all_stars_match_brute_force() {
        let c = generate_irregular_cloud(13, 11, 0.3, 5, Domain::unit_square()).unwrap();
        for s in [8, 12] {
            let stars = build_all_stars(&c, s).unwrap();
            assert_eq!(stars.len(), c.inner_indices().len());
            for (star, &center) in stars.iter().zip(c.inner_indices()) {
                assert_eq!(star.center, center);
                assert_eq!(star.len(), s);
                // O(m^2)-style oracle: full sort of all distances.
                let p = c.position(center);
                let mut all: Vec<(f64, usize)> = (0..c.len())
                    .filter(|&i| i != center)
                    .map(|i| {
                        let q = c.position(i);
                        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2), i)
                    })
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let want: Vec<usize> = all[..s].iter().map(|&(_, i)| i).collect();
                assert_eq!(star.neighbors, want);
            }
        }
    }

    #[test]
    fn grid_star_radius() {
        let c = grid(21);
        for star in build_all_stars(&c, 8).unwrap() {
            let r = star
                .offsets
                .iter()
                .map(|o| o[0].hypot(o[1]))
                .fold(0.0, f64::max);
            assert!(r <= 2f64.sqrt() * 0.05 + 1e-12);
        }
    }
}
