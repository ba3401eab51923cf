//! Level-`n` Sierpinski gasket graphs.
//!
//! Vertices live on the integer lattice spanned by `e1 = (1, 0)` and
//! `e2 = (1/2, sqrt(3)/2)`: the coordinate `(a, b)` sits at `a*e1 + b*e2`.
//! Level 0 is the unit triangle `{(0,0), (1,0), (0,1)}`; level `k + 1` is the
//! union of three copies of level `k` translated by `(0,0)`, `(2^k, 0)` and
//! `(0, 2^k)`, with the shared junction vertices identified.
//!
//! Canonical vertex order is lexicographic on `(b, a)`, i.e. bottom row first,
//! left to right.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::matrix::BigMatrix;
use crate::{Error, Result};

/// Lattice coordinate of a gasket vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GasketCoord {
    pub a: u32,
    pub b: u32,
}

impl GasketCoord {
    pub const fn new(a: u32, b: u32) -> Self {
        Self { a, b }
    }

    fn key(self) -> (u32, u32) {
        (self.b, self.a)
    }

    fn translate(self, da: u32, db: u32) -> Self {
        Self::new(self.a + da, self.b + db)
    }

    /// Euclidean position in units of the lattice edge length.
    pub fn position(self) -> (f64, f64) {
        (
            self.a as f64 + self.b as f64 / 2.0,
            self.b as f64 * 3f64.sqrt() / 2.0,
        )
    }
}

impl PartialOrd for GasketCoord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GasketCoord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for GasketCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// One of the three outer corners of a gasket, also used to name the three
/// sub-copies of level `n - 1` inside level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    LowerLeft,
    LowerRight,
    Top,
}

impl Corner {
    pub const ALL: [Corner; 3] = [Corner::LowerLeft, Corner::LowerRight, Corner::Top];

    pub fn coord(self, level: u32) -> GasketCoord {
        let side = side_length(level);
        match self {
            Corner::LowerLeft => GasketCoord::new(0, 0),
            Corner::LowerRight => GasketCoord::new(side, 0),
            Corner::Top => GasketCoord::new(0, side),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Corner::LowerLeft => "lower_left",
            Corner::LowerRight => "lower_right",
            Corner::Top => "top",
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Corner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower_left" => Ok(Corner::LowerLeft),
            "lower_right" => Ok(Corner::LowerRight),
            "top" => Ok(Corner::Top),
            _ => Err(Error::Parse(format!("unknown corner `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryCondition {
    /// Every corner is joined to an external sink by two edges.
    #[default]
    Normal,
    /// The given corner is the sink.
    CornerSink(Corner),
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Normal => f.write_str("normal"),
            BoundaryCondition::CornerSink(c) => write!(f, "corner_sink:{c}"),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "normal" {
            return Ok(BoundaryCondition::Normal);
        }
        match s.strip_prefix("corner_sink:") {
            Some(corner) => Ok(BoundaryCondition::CornerSink(corner.parse()?)),
            None => Err(Error::Parse(format!("unknown boundary `{s}`"))),
        }
    }
}

impl Serialize for BoundaryCondition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BoundaryCondition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Side length `2^level` of the level-`level` gasket in lattice units.
pub fn side_length(level: u32) -> u32 {
    assert!(level < 31, "gasket level {level} does not fit lattice coordinates");
    1u32 << level
}

/// `|V_n| = 3 (3^n + 1) / 2`, counting every gasket vertex.
pub fn vertex_count(level: u32) -> u64 {
    3 * (3u64.pow(level) + 1) / 2
}

/// `|E_n| = 3^(n+1)`, counting gasket edges only.
pub fn edge_count(level: u32) -> u64 {
    3u64.pow(level + 1)
}

/// Vertex set and edge list of the bare level-`level` gasket, vertices in
/// canonical order and edges as coordinate pairs.
pub fn bare_gasket(level: u32) -> (Vec<GasketCoord>, Vec<(GasketCoord, GasketCoord)>) {
    let mut vertices: BTreeSet<GasketCoord> = [(0, 0), (1, 0), (0, 1)]
        .into_iter()
        .map(|(a, b)| GasketCoord::new(a, b))
        .collect();
    let mut edges = vec![
        (GasketCoord::new(0, 0), GasketCoord::new(1, 0)),
        (GasketCoord::new(0, 0), GasketCoord::new(0, 1)),
        (GasketCoord::new(1, 0), GasketCoord::new(0, 1)),
    ];
    for k in 0..level {
        let shift = side_length(k);
        let mut next_vertices = BTreeSet::new();
        let mut next_edges = Vec::with_capacity(edges.len() * 3);
        for (da, db) in [(0, 0), (shift, 0), (0, shift)] {
            next_vertices.extend(vertices.iter().map(|v| v.translate(da, db)));
            next_edges.extend(
                edges
                    .iter()
                    .map(|&(u, v)| (u.translate(da, db), v.translate(da, db))),
            );
        }
        vertices = next_vertices;
        edges = next_edges;
    }
    (vertices.into_iter().collect(), edges)
}

/// Vertices of the level-`level` gasket in canonical order.
pub fn gasket_vertices(level: u32) -> Vec<GasketCoord> {
    bare_gasket(level).0
}

/// Rotation by 120 degrees counterclockwise about the centre of the
/// level-`level` gasket: `(a, b) -> (2^n - a - b, a)`.
pub fn rotate_coord_ccw(level: u32, c: GasketCoord) -> GasketCoord {
    GasketCoord::new(side_length(level) - c.a - c.b, c.a)
}

#[derive(Debug, Clone)]
pub struct GasketGraph {
    level: u32,
    boundary: BoundaryCondition,
    vertices: Vec<GasketCoord>,
    index: HashMap<GasketCoord, usize>,
    neighbors: Vec<Vec<usize>>,
    beta: Vec<u32>,
    degree: Vec<u32>,
    gasket_edges: usize,
}

impl GasketGraph {
    /// Builds the level-`level` gasket with the given boundary. Non-sink
    /// vertices are stored in canonical order; under a corner sink the sunk
    /// corner is not a vertex of the graph.
    pub fn new(level: u32, boundary: BoundaryCondition) -> Self {
        let (all, edges) = bare_gasket(level);
        let gasket_edges = edges.len();
        let sunk = match boundary {
            BoundaryCondition::Normal => None,
            BoundaryCondition::CornerSink(c) => Some(c.coord(level)),
        };
        let vertices: Vec<GasketCoord> = all.into_iter().filter(|&v| Some(v) != sunk).collect();
        let index: HashMap<GasketCoord, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut neighbors = vec![Vec::with_capacity(4); vertices.len()];
        let mut beta = vec![0u32; vertices.len()];
        for (u, v) in edges {
            match (index.get(&u), index.get(&v)) {
                (Some(&i), Some(&j)) => {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
                (Some(&i), None) | (None, Some(&i)) => beta[i] += 1,
                (None, None) => unreachable!("edge with both endpoints in the sink"),
            }
        }
        if boundary == BoundaryCondition::Normal {
            for corner in Corner::ALL {
                beta[index[&corner.coord(level)]] += 2;
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let degree = neighbors
            .iter()
            .zip(&beta)
            .map(|(n, &b)| n.len() as u32 + b)
            .collect();

        Self {
            level,
            boundary,
            vertices,
            index,
            neighbors,
            beta,
            degree,
            gasket_edges,
        }
    }

    pub fn normal(level: u32) -> Self {
        Self::new(level, BoundaryCondition::Normal)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    /// Number of non-sink vertices.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[GasketCoord] {
        &self.vertices
    }

    pub fn coord(&self, i: usize) -> GasketCoord {
        self.vertices[i]
    }

    pub fn index_of(&self, c: GasketCoord) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of edges from vertex `i` to the sink.
    pub fn beta(&self, i: usize) -> u32 {
        self.beta[i]
    }

    pub fn betas(&self) -> &[u32] {
        &self.beta
    }

    /// Degree including sink edges.
    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn sink_degree(&self) -> u32 {
        self.beta.iter().sum()
    }

    /// Number of gasket edges, `3^(n+1)`, whatever the boundary.
    pub fn gasket_edge_count(&self) -> usize {
        self.gasket_edges
    }

    /// Edges between non-sink vertices as index pairs `(i, j)` with `i < j`,
    /// sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.gasket_edges);
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Corner coordinates `(x_n, y_n, z_n)`: lower-left, lower-right, top.
    pub fn corners(&self) -> [GasketCoord; 3] {
        Corner::ALL.map(|c| c.coord(self.level))
    }

    /// Index of a corner, `None` when that corner is the sink.
    pub fn corner_index(&self, corner: Corner) -> Option<usize> {
        self.index_of(corner.coord(self.level))
    }

    /// Junction coordinates `(a_n, b_n, c_n)`: left-middle, right-middle and
    /// bottom-middle. Level 0 has none.
    pub fn junctions(&self) -> Option<[GasketCoord; 3]> {
        junctions(self.level)
    }

    /// Permutation of canonical indices induced by the counterclockwise
    /// rotation: `perm[i]` is the index of the image of vertex `i`.
    pub fn rotation_ccw(&self) -> Result<Vec<usize>> {
        if self.boundary != BoundaryCondition::Normal {
            return Err(Error::RequiresNormalBoundary(self.boundary));
        }
        Ok(self
            .vertices
            .iter()
            .map(|&v| self.index[&rotate_coord_ccw(self.level, v)])
            .collect())
    }

    /// Clockwise rotation, the counterclockwise one applied twice.
    pub fn rotation_cw(&self) -> Result<Vec<usize>> {
        let ccw = self.rotation_ccw()?;
        Ok(ccw.iter().map(|&j| ccw[j]).collect())
    }

    /// Reduced Laplacian over the non-sink vertices in canonical order.
    pub fn reduced_laplacian(&self) -> BigMatrix {
        let n = self.len();
        let mut m = BigMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::from(self.degree[i]);
            for &j in &self.neighbors[i] {
                m[(i, j)] = BigInt::from(-1);
            }
        }
        m
    }

    /// Integer `Delta * x` computed from the adjacency lists.
    pub fn laplacian_apply(&self, x: &[i128]) -> Vec<i128> {
        (0..self.len())
            .map(|v| {
                let own = self.degree[v] as i128 * x[v];
                self.neighbors[v].iter().fold(own, |acc, &w| acc - x[w])
            })
            .collect()
    }
}

/// Junctions `(a_n, b_n, c_n)` of level `level`, if it has any.
pub fn junctions(level: u32) -> Option<[GasketCoord; 3]> {
    if level == 0 {
        return None;
    }
    let h = side_length(level - 1);
    Some([
        GasketCoord::new(0, h),
        GasketCoord::new(h, h),
        GasketCoord::new(h, 0),
    ])
}

/// Translation of the sub-copy `copy` of level `level - 1` inside level `level`.
pub fn subcopy_offset(level: u32, copy: Corner) -> Result<(u32, u32)> {
    if level == 0 {
        return Err(Error::InvalidLevel {
            level,
            reason: "level 0 has no sub-copies",
        });
    }
    let h = side_length(level - 1);
    Ok(match copy {
        Corner::LowerLeft => (0, 0),
        Corner::LowerRight => (h, 0),
        Corner::Top => (0, h),
    })
}

/// Maps canonical indices of the full level-`(level-1)` vertex set to
/// canonical indices of the full level-`level` vertex set, for the given
/// sub-copy.
pub fn subcopy_embedding(level: u32, copy: Corner) -> Result<Vec<usize>> {
    let (da, db) = subcopy_offset(level, copy)?;
    let big: HashMap<GasketCoord, usize> = gasket_vertices(level)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    Ok(gasket_vertices(level - 1)
        .into_iter()
        .map(|v| big[&v.translate(da, db)])
        .collect())
}
