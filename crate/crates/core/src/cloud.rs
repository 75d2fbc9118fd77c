//! Point clouds discretizing a rectangular domain.
//!
//! A cloud is an ordered list of nodes, each either inner or boundary. Boundary
//! nodes carry an outward unit normal and are paired with an inner node lying
//! along the inward normal, which is what the first-order Neumann closure uses.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance on the Euclidean length of a boundary normal.
pub const NORMAL_LENGTH_TOL: f64 = 1e-12;

/// Angular tolerance between `pair - node` and the inward normal.
pub const PAIR_ANGLE_TOL: f64 = 1e-9;

const CSV_HEADER: &str = "index,x,y,kind,nx,ny,pair";

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidDomain(format!(
                "[{x_min}, {x_max}] x [{y_min}, {y_max}] has no area"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn unit_square() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Whether the point lies strictly inside the rectangle.
    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        x > self.x_min && x < self.x_max && y > self.y_min && y < self.y_max
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.x_min, self.x_max, self.y_min, self.y_max).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Inner,
    Boundary {
        /// Outward unit normal.
        normal: [f64; 2],
        /// Index of the inner node along the inward normal.
        pair: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_inner(&self) -> bool {
        matches!(self.kind, NodeKind::Inner)
    }

    pub fn is_boundary(&self) -> bool {
        !self.is_inner()
    }

    pub fn normal(&self) -> Option<[f64; 2]> {
        match self.kind {
            NodeKind::Boundary { normal, .. } => Some(normal),
            NodeKind::Inner => None,
        }
    }

    pub fn paired_inner(&self) -> Option<usize> {
        match self.kind {
            NodeKind::Boundary { pair, .. } => Some(pair),
            NodeKind::Inner => None,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// An immutable, validated discretization of a rectangular domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    nodes: Vec<Node>,
    domain: Domain,
    inner: Vec<usize>,
    boundary: Vec<usize>,
}

impl PointCloud {
    /// Builds a cloud after checking every structural invariant.
    pub fn new(nodes: Vec<Node>, domain: Domain) -> Result<Self> {
        domain.validate()?;
        for (pos, node) in nodes.iter().enumerate() {
            if node.index != pos {
                return Err(Error::InvalidCloud(format!(
                    "node at position {pos} has index {}",
                    node.index
                )));
            }
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(Error::InvalidCloud(format!(
                    "node {pos} has non-finite coordinates"
                )));
            }
            if !domain.contains(node.x, node.y) {
                return Err(Error::InvalidCloud(format!(
                    "node {pos} at ({}, {}) lies outside the domain",
                    node.x, node.y
                )));
            }
        }
        for node in &nodes {
            if let NodeKind::Boundary { normal, pair } = node.kind {
                check_boundary_node(node, normal, pair, &nodes, &domain)?;
            }
        }
        if let Some((a, b)) = find_coincident(&nodes) {
            return Err(Error::InvalidCloud(format!("nodes {a} and {b} coincide")));
        }
        let inner = nodes
            .iter()
            .filter(|n| n.is_inner())
            .map(|n| n.index)
            .collect();
        let boundary = nodes
            .iter()
            .filter(|n| n.is_boundary())
            .map(|n| n.index)
            .collect();
        Ok(Self {
            nodes,
            domain,
            inner,
            boundary,
        })
    }

    /// Builds a cloud from positions and boundary normals, pairing every
    /// boundary node with the inner node best aligned with its inward normal.
    ///
    /// Candidates must lie on the inward side. Among those, the smallest angle
    /// to the inward normal wins, then the smaller distance, then the smaller
    /// index. Corner nodes (normals off the axes) rank distance before angle,
    /// which picks the diagonal grid neighbor even when `hx != hy`.
    pub fn from_points(points: &[([f64; 2], Option<[f64; 2]>)], domain: Domain) -> Result<Self> {
        let inner: Vec<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, (_, n))| n.is_none())
            .map(|(i, _)| i)
            .collect();
        let mut nodes = Vec::with_capacity(points.len());
        for (index, &(p, normal)) in points.iter().enumerate() {
            let kind = match normal {
                None => NodeKind::Inner,
                Some(normal) => {
                    let pair = best_aligned_inner(p, normal, &inner, points).ok_or_else(|| {
                        Error::InvalidCloud(format!(
                            "boundary node {index} has no inner node on its inward side"
                        ))
                    })?;
                    NodeKind::Boundary { normal, pair }
                }
            };
            nodes.push(Node {
                index,
                x: p[0],
                y: p[1],
                kind,
            });
        }
        Self::new(nodes, domain)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Inner node indices in increasing order.
    pub fn inner_indices(&self) -> &[usize] {
        &self.inner
    }

    /// Boundary node indices in increasing order.
    pub fn boundary_indices(&self) -> &[usize] {
        &self.boundary
    }

    pub fn position(&self, index: usize) -> [f64; 2] {
        self.nodes[index].position()
    }

    /// Samples `f` at every node.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|n| f(n.x, n.y)).collect()
    }

    /// Smallest distance between two distinct nodes (brute force).
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                best = best.min((a.x - b.x).hypot(a.y - b.y));
            }
        }
        best
    }
}

fn check_boundary_node(
    node: &Node,
    normal: [f64; 2],
    pair: usize,
    nodes: &[Node],
    domain: &Domain,
) -> Result<()> {
    let idx = node.index;
    let len = normal[0].hypot(normal[1]);
    if !((len - 1.0).abs() <= NORMAL_LENGTH_TOL) {
        return Err(Error::InvalidCloud(format!(
            "boundary node {idx} has a normal of length {len}"
        )));
    }
    let Some(partner) = nodes.get(pair) else {
        return Err(Error::InvalidCloud(format!(
            "boundary node {idx} is paired with missing node {pair}"
        )));
    };
    if !partner.is_inner() {
        return Err(Error::InvalidCloud(format!(
            "boundary node {idx} is paired with boundary node {pair}"
        )));
    }
    if !domain.contains_strictly(partner.x, partner.y) {
        return Err(Error::InvalidCloud(format!(
            "paired node {pair} of boundary node {idx} is not strictly inside the domain"
        )));
    }
    let d = [partner.x - node.x, partner.y - node.y];
    let inward = [-normal[0], -normal[1]];
    let angle = angle_between(d, inward);
    let axis_aligned = normal[0] == 0.0 || normal[1] == 0.0;
    let ok = if axis_aligned {
        angle <= PAIR_ANGLE_TOL
    } else {
        angle < std::f64::consts::FRAC_PI_2
    };
    if !ok {
        return Err(Error::InvalidCloud(format!(
            "paired node {pair} deviates {angle:e} rad from the inward normal of node {idx}"
        )));
    }
    Ok(())
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.abs().atan2(dot)
}

fn best_aligned_inner(
    p: [f64; 2],
    normal: [f64; 2],
    inner: &[usize],
    points: &[([f64; 2], Option<[f64; 2]>)],
) -> Option<usize> {
    let inward = [-normal[0], -normal[1]];
    let axis_aligned = normal[0] == 0.0 || normal[1] == 0.0;
    inner
        .iter()
        .filter_map(|&q| {
            let c = points[q].0;
            let d = [c[0] - p[0], c[1] - p[1]];
            let dot = d[0] * inward[0] + d[1] * inward[1];
            (dot > 0.0).then(|| (angle_between(d, inward), d[0].hypot(d[1]), q))
        })
        .min_by(|a, b| {
            let (first, second) = if axis_aligned {
                (a.0.total_cmp(&b.0), a.1.total_cmp(&b.1))
            } else {
                (a.1.total_cmp(&b.1), a.0.total_cmp(&b.0))
            };
            first.then(second).then(a.2.cmp(&b.2))
        })
        .map(|(_, _, q)| q)
}

fn find_coincident(nodes: &[Node]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes[a]
            .x
            .total_cmp(&nodes[b].x)
            .then(nodes[a].y.total_cmp(&nodes[b].y))
    });
    order.windows(2).find_map(|w| {
        let (a, b) = (&nodes[w[0]], &nodes[w[1]]);
        (a.x == b.x && a.y == b.y).then(|| (a.index.min(b.index), a.index.max(b.index)))
    })
}

/// Grid coordinate and boundary normal of tensor-grid node `(i, j)`.
fn grid_point(
    i: usize,
    j: usize,
    nx: usize,
    ny: usize,
    d: &Domain,
) -> ([f64; 2], Option<[f64; 2]>) {
    let x = d.x_min + (d.x_max - d.x_min) * i as f64 / (nx - 1) as f64;
    let y = d.y_min + (d.y_max - d.y_min) * j as f64 / (ny - 1) as f64;
    let mut n = [0.0f64; 2];
    if i == 0 {
        n[0] -= 1.0;
    } else if i == nx - 1 {
        n[0] += 1.0;
    }
    if j == 0 {
        n[1] -= 1.0;
    } else if j == ny - 1 {
        n[1] += 1.0;
    }
    let normal = if n == [0.0, 0.0] {
        None
    } else {
        let len = n[0].hypot(n[1]);
        Some([n[0] / len, n[1] / len])
    };
    ([x, y], normal)
}

fn check_grid(nx: usize, ny: usize, domain: &Domain) -> Result<()> {
    domain.validate()?;
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidGrid(format!(
            "a {nx}x{ny} grid has no inner node; need at least 3x3"
        )));
    }
    Ok(())
}

/// Tensor grid of `nx * ny` nodes, indexed row by row (`j * nx + i`).
///
/// Perimeter nodes are boundary nodes with outward axis normals; corners get
/// the normalized sum of their two edge normals.
pub fn generate_regular_cloud(nx: usize, ny: usize, domain: Domain) -> Result<PointCloud> {
    check_grid(nx, ny, &domain)?;
    let points: Vec<_> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| grid_point(i, j, nx, ny, &domain))
        .collect();
    PointCloud::from_points(&points, domain)
}

/// Regular grid whose inner nodes are displaced by a seeded uniform offset in
/// `[-p*h, p*h]` per axis.
///
/// Boundary nodes do not move. Inner nodes in the first ring next to the
/// boundary only move along the boundary normal so that every boundary node
/// keeps an inner partner exactly on its normal line; the four inner nodes
/// next to the corners stay fixed.
pub fn generate_irregular_cloud(
    nx: usize,
    ny: usize,
    perturbation: f64,
    seed: u64,
    domain: Domain,
) -> Result<PointCloud> {
    check_grid(nx, ny, &domain)?;
    if !(0.0..0.5).contains(&perturbation) {
        return Err(Error::InvalidGrid(format!(
            "perturbation {perturbation} must lie in [0, 0.5)"
        )));
    }
    let hx = (domain.x_max - domain.x_min) / (nx - 1) as f64;
    let hy = (domain.y_max - domain.y_min) / (ny - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (mut p, normal) = grid_point(i, j, nx, ny, &domain);
            if normal.is_none() {
                let rx: f64 = rng.random_range(-1.0..=1.0);
                let ry: f64 = rng.random_range(-1.0..=1.0);
                let near_x_edge = i == 1 || i == nx - 2;
                let near_y_edge = j == 1 || j == ny - 2;
                // First-ring nodes keep their tangential coordinate.
                if !near_y_edge {
                    p[0] += rx * perturbation * hx;
                }
                if !near_x_edge {
                    p[1] += ry * perturbation * hy;
                }
            }
            points.push((p, normal));
        }
    }
    PointCloud::from_points(&points, domain)
}

/// Writes the cloud CSV (`index,x,y,kind,nx,ny,pair`).
pub fn write_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for n in cloud.nodes() {
        match n.kind {
            NodeKind::Inner => writeln!(out, "{},{:.16e},{:.16e},I,,,", n.index, n.x, n.y)?,
            NodeKind::Boundary { normal, pair } => writeln!(
                out,
                "{},{:.16e},{:.16e},B,{:.16e},{:.16e},{}",
                n.index, n.x, n.y, normal[0], normal[1], pair
            )?,
        }
    }
    out.flush()
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_cloud(cloud, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cloud(BufReader::new(file), path)
}

struct Row {
    line: usize,
    x: f64,
    y: f64,
    boundary: Option<([f64; 2], usize)>,
}

/// Parses a cloud CSV. `origin` only labels error messages.
pub fn read_cloud<R: BufRead>(reader: R, origin: &Path) -> Result<PointCloud> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rows: HashMap<usize, Row> = HashMap::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if !saw_header {
            if line.trim_end() != CSV_HEADER {
                return Err(err(lineno, format!("expected header `{CSV_HEADER}`")));
            }
            saw_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(err(
                lineno,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| err(lineno, format!("bad index `{}`", fields[0])))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| err(lineno, format!("bad {what} `{s}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(lineno, format!("non-finite {what}")))
            }
        };
        let x = num(fields[1], "x")?;
        let y = num(fields[2], "y")?;
        let boundary = match fields[3] {
            "I" => {
                if fields[4..].iter().any(|f| !f.is_empty()) {
                    return Err(err(
                        lineno,
                        "inner node must leave nx, ny, pair empty".into(),
                    ));
                }
                None
            }
            "B" => {
                if fields[4..].iter().any(|f| f.is_empty()) {
                    return Err(err(lineno, "boundary node needs nx, ny and pair".into()));
                }
                let normal = [num(fields[4], "nx")?, num(fields[5], "ny")?];
                let pair: usize = fields[6]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad pair `{}`", fields[6])))?;
                Some((normal, pair))
            }
            other => return Err(err(lineno, format!("unknown kind `{other}`"))),
        };
        let row = Row {
            line: lineno,
            x,
            y,
            boundary,
        };
        if let Some(prev) = rows.insert(index, row) {
            return Err(err(
                lineno,
                format!("duplicate index {index} (first seen on line {})", prev.line),
            ));
        }
    }
    if !saw_header {
        return Err(err(1, "empty file".into()));
    }
    let m = rows.len();
    if m == 0 {
        return Err(err(2, "no nodes".into()));
    }
    let mut ordered: Vec<(usize, Row)> = rows.into_iter().collect();
    ordered.sort_by_key(|(i, _)| *i);
    if let Some((i, row)) = ordered.iter().find(|(i, _)| *i >= m) {
        return Err(err(row.line, format!("index {i} leaves a gap in 0..{m}")));
    }
    for (_, row) in &ordered {
        if let Some((_, pair)) = row.boundary {
            match ordered.get(pair) {
                None => return Err(err(row.line, format!("pair {pair} refers to no node"))),
                Some((_, p)) if p.boundary.is_some() => {
                    return Err(err(row.line, format!("pair {pair} is not an inner node")))
                }
                _ => {}
            }
        }
    }
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (_, row) in &ordered {
        // Normalize -0.0 so that it collides with 0.0.
        let key = ((row.x + 0.0).to_bits(), (row.y + 0.0).to_bits());
        if let Some(first) = seen.insert(key, row.line) {
            return Err(err(
                row.line,
                format!("node coincides with the node on line {first}"),
            ));
        }
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, r) in &ordered {
        x_min = x_min.min(r.x);
        x_max = x_max.max(r.x);
        y_min = y_min.min(r.y);
        y_max = y_max.max(r.y);
    }
    let domain = Domain::new(x_min, x_max, y_min, y_max)?;
    let nodes = ordered
        .into_iter()
        .map(|(index, r)| Node {
            index,
            x: r.x,
            y: r.y,
            kind: match r.boundary {
                None => NodeKind::Inner,
                Some((normal, pair)) => NodeKind::Boundary { normal, pair },
            },
        })
        .collect();
    PointCloud::new(nodes, domain)
}
