//! Toppling dynamics on a [`GasketGraph`].

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gasket::{BoundaryCondition, GasketGraph};
use crate::matrix::ScaledInverse;
use crate::{Error, Result};

/// Chip counts on the non-sink vertices of one gasket graph, in canonical
/// vertex order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    level: u32,
    boundary: BoundaryCondition,
    chips: Vec<u64>,
}

impl Configuration {
    pub fn new(graph: &GasketGraph, chips: Vec<u64>) -> Result<Self> {
        if chips.len() != graph.len() {
            return Err(Error::LengthMismatch {
                expected: graph.len(),
                got: chips.len(),
            });
        }
        Ok(Self {
            level: graph.level(),
            boundary: graph.boundary(),
            chips,
        })
    }

    /// A configuration tagged with a level and boundary but not yet checked
    /// against a graph; operations validate it on use.
    pub fn from_parts(level: u32, boundary: BoundaryCondition, chips: Vec<u64>) -> Self {
        Self {
            level,
            boundary,
            chips,
        }
    }

    pub fn zeros(graph: &GasketGraph) -> Self {
        Self::constant(graph, 0)
    }

    pub fn constant(graph: &GasketGraph, value: u64) -> Self {
        Self {
            level: graph.level(),
            boundary: graph.boundary(),
            chips: vec![value; graph.len()],
        }
    }

    /// The maximal stable configuration `d_v - 1`.
    pub fn max_stable(graph: &GasketGraph) -> Self {
        Self {
            level: graph.level(),
            boundary: graph.boundary(),
            chips: graph.degrees().iter().map(|&d| d as u64 - 1).collect(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    pub fn chips(&self) -> &[u64] {
        &self.chips
    }

    pub fn chips_mut(&mut self) -> &mut [u64] {
        &mut self.chips
    }

    pub fn into_chips(self) -> Vec<u64> {
        self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn total(&self) -> u128 {
        self.chips.iter().map(|&c| c as u128).sum()
    }

    /// Errors unless the configuration belongs to `graph`.
    pub fn check_graph(&self, graph: &GasketGraph) -> Result<()> {
        if self.level != graph.level() || self.boundary != graph.boundary() {
            return Err(Error::GraphMismatch {
                config_level: self.level,
                config_boundary: self.boundary,
                graph_level: graph.level(),
                graph_boundary: graph.boundary(),
            });
        }
        if self.chips.len() != graph.len() {
            return Err(Error::LengthMismatch {
                expected: graph.len(),
                got: self.chips.len(),
            });
        }
        Ok(())
    }

    /// First vertex with `chips >= degree`, if any.
    pub fn first_unstable(&self, graph: &GasketGraph) -> Option<usize> {
        self.chips
            .iter()
            .zip(graph.degrees())
            .position(|(&c, &d)| c >= d as u64)
    }

    pub fn is_stable(&self, graph: &GasketGraph) -> bool {
        self.first_unstable(graph).is_none()
    }

    /// Pointwise sum with overflow checking.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.level != other.level || self.boundary != other.boundary {
            return Err(Error::GraphMismatch {
                config_level: other.level,
                config_boundary: other.boundary,
                graph_level: self.level,
                graph_boundary: self.boundary,
            });
        }
        let chips = self
            .chips
            .iter()
            .zip(&other.chips)
            .enumerate()
            .map(|(v, (&a, &b))| a.checked_add(b).ok_or(Error::Overflow { vertex: v }))
            .collect::<Result<_>>()?;
        Ok(Self { chips, ..self.clone() })
    }

    /// Adds `amount` chips at vertex `v`.
    pub fn add_at(&mut self, v: usize, amount: u64) -> Result<()> {
        let len = self.chips.len();
        let slot = self
            .chips
            .get_mut(v)
            .ok_or(Error::VertexOutOfRange { index: v, len })?;
        *slot = slot.checked_add(amount).ok_or(Error::Overflow { vertex: v })?;
        Ok(())
    }

    pub fn scaled(&self, k: u64) -> Result<Self> {
        let chips = self
            .chips
            .iter()
            .enumerate()
            .map(|(v, &c)| c.checked_mul(k).ok_or(Error::Overflow { vertex: v }))
            .collect::<Result<_>>()?;
        Ok(Self { chips, ..self.clone() })
    }

    /// Entries permuted so that entry `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut chips = vec![0; self.chips.len()];
        for (i, &c) in self.chips.iter().enumerate() {
            chips[perm[i]] = c;
        }
        Self { chips, ..self.clone() }
    }
}

/// Per-vertex firing counts of one stabilization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Odometer {
    pub fires: Vec<u64>,
}

impl Odometer {
    pub fn total(&self) -> u128 {
        self.fires.iter().map(|&f| f as u128).sum()
    }

    pub fn is_all_ones(&self) -> bool {
        self.fires.iter().all(|&f| f == 1)
    }

    pub fn is_zero(&self) -> bool {
        self.fires.iter().all(|&f| f == 0)
    }
}

/// An element of `Z^V` (entries may be negative); its class lives in the
/// sandpile group `Z^V / Delta Z^V`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerClassVector {
    pub entries: Vec<BigInt>,
}

impl IntegerClassVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            entries: vec![BigInt::zero(); len],
        }
    }

    pub fn from_i64(xs: &[i64]) -> Self {
        Self {
            entries: xs.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }

    /// Indicator vector of a vertex.
    pub fn delta(len: usize, v: usize) -> Self {
        let mut x = Self::zeros(len);
        x.entries[v] = BigInt::from(1);
        x
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl From<&Configuration> for IntegerClassVector {
    fn from(c: &Configuration) -> Self {
        Self {
            entries: c.chips.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }
}

fn frozen_mask(graph: &GasketGraph, frozen: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; graph.len()];
    for &v in frozen {
        if v >= graph.len() {
            return Err(Error::VertexOutOfRange {
                index: v,
                len: graph.len(),
            });
        }
        mask[v] = true;
    }
    Ok(mask)
}

/// Stabilizes `config`, never firing the vertices in `frozen` (they only
/// collect chips). Chips sent along sink edges are lost.
///
/// Unstable vertices are processed from a FIFO queue; a visited vertex with
/// `c` chips and degree `d` fires `c / d` times at once.
pub fn stabilize(
    graph: &GasketGraph,
    config: &Configuration,
    frozen: &[usize],
) -> Result<(Configuration, Odometer)> {
    config.check_graph(graph)?;
    let frozen = frozen_mask(graph, frozen)?;
    let degree = graph.degrees();
    let mut chips = config.chips.clone();
    let mut fires = vec![0u64; chips.len()];
    let mut queued = vec![false; chips.len()];
    let mut queue = VecDeque::new();

    for v in 0..chips.len() {
        if !frozen[v] && chips[v] >= degree[v] as u64 {
            queued[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        let d = degree[v] as u64;
        let k = chips[v] / d;
        if k == 0 {
            continue;
        }
        chips[v] -= k * d;
        fires[v] = fires[v].checked_add(k).ok_or(Error::Overflow { vertex: v })?;
        for &w in graph.neighbors(v) {
            chips[w] = chips[w].checked_add(k).ok_or(Error::Overflow { vertex: w })?;
            if !frozen[w] && !queued[w] && chips[w] >= degree[w] as u64 {
                queued[w] = true;
                queue.push_back(w);
            }
        }
    }

    let out = Configuration {
        chips,
        ..config.clone()
    };
    let odometer = Odometer { fires };
    debug_assert!(conservation_holds(graph, config, &out, &odometer));
    Ok((out, odometer))
}

/// Stabilization firing one randomly chosen unstable vertex at a time.
/// Slow; exists to exercise the abelian property against [`stabilize`].
pub fn stabilize_random_order<R: Rng + ?Sized>(
    graph: &GasketGraph,
    config: &Configuration,
    frozen: &[usize],
    rng: &mut R,
) -> Result<(Configuration, Odometer)> {
    config.check_graph(graph)?;
    let frozen = frozen_mask(graph, frozen)?;
    let degree = graph.degrees();
    let mut chips = config.chips.clone();
    let mut fires = vec![0u64; chips.len()];
    let unstable = |chips: &[u64]| -> Vec<usize> {
        (0..chips.len())
            .filter(|&v| !frozen[v] && chips[v] >= degree[v] as u64)
            .collect()
    };
    let mut pending = unstable(&chips);
    while !pending.is_empty() {
        let v = pending[rng.random_range(0..pending.len())];
        chips[v] -= degree[v] as u64;
        fires[v] += 1;
        for &w in graph.neighbors(v) {
            chips[w] = chips[w].checked_add(1).ok_or(Error::Overflow { vertex: w })?;
        }
        pending = unstable(&chips);
    }
    Ok((
        Configuration {
            chips,
            ..config.clone()
        },
        Odometer { fires },
    ))
}

/// Checks `after = before - Delta * odometer` exactly.
pub fn conservation_holds(
    graph: &GasketGraph,
    before: &Configuration,
    after: &Configuration,
    odometer: &Odometer,
) -> bool {
    let u: Vec<i128> = odometer.fires.iter().map(|&f| f as i128).collect();
    let lu = graph.laplacian_apply(&u);
    before
        .chips
        .iter()
        .zip(&after.chips)
        .zip(&lu)
        .all(|((&b, &a), &l)| b as i128 - l == a as i128)
}

/// `a (+) b`: pointwise sum, then stabilize.
pub fn oplus(graph: &GasketGraph, a: &Configuration, b: &Configuration) -> Result<Configuration> {
    a.check_graph(graph)?;
    b.check_graph(graph)?;
    Ok(stabilize(graph, &a.checked_add(b)?, &[])?.0)
}

/// Burning test: adds `beta(v)` chips at every vertex and stabilizes. The
/// configuration is recurrent iff it comes back and every vertex fired
/// exactly once. The burning odometer is returned for diagnostics.
pub fn is_recurrent_burning(graph: &GasketGraph, config: &Configuration) -> Result<(bool, Odometer)> {
    config.check_graph(graph)?;
    if let Some(vertex) = config.first_unstable(graph) {
        return Err(Error::NotStable { vertex });
    }
    let mut burned = config.clone();
    for (v, &b) in graph.betas().iter().enumerate() {
        burned.add_at(v, b as u64)?;
    }
    let (after, odometer) = stabilize(graph, &burned, &[])?;
    Ok((after == *config && odometer.is_all_ones(), odometer))
}

pub fn is_recurrent(graph: &GasketGraph, config: &Configuration) -> Result<bool> {
    Ok(is_recurrent_burning(graph, config)?.0)
}

/// `m + (m - (2m)°)` for `m` the maximal stable configuration: a
/// configuration `>= m` in the class of zero.
pub fn zero_class_filler(graph: &GasketGraph) -> Result<Configuration> {
    let m = Configuration::max_stable(graph);
    let (doubled, _) = stabilize(graph, &m.scaled(2)?, &[])?;
    let chips = m
        .chips
        .iter()
        .zip(&doubled.chips)
        .map(|(&mv, &dv)| 2 * mv - dv)
        .collect();
    Ok(Configuration { chips, ..m })
}

/// Identity of the sandpile group: `(m + (m - (2m)°))°`.
pub fn identity(graph: &GasketGraph) -> Result<Configuration> {
    let filler = zero_class_filler(graph)?;
    let (e, _) = stabilize(graph, &filler, &[])?;
    debug_assert!(is_recurrent(graph, &e).unwrap_or(false));
    Ok(e)
}

/// Maps lattice vectors to their recurrent representatives.
///
/// A vector `x` is first reduced to `x - Delta * floor(Delta^{-1} x)`, whose
/// entries satisfy `-d_v < x_v < d_v`. Adding twice the zero-class filler
/// gives `m + xi` with `xi >= 0` in the same class, whose stabilization is
/// recurrent.
#[derive(Debug, Clone)]
pub struct ClassReducer {
    graph: GasketGraph,
    laplacian_inverse: ScaledInverse,
    filler: Configuration,
}

impl ClassReducer {
    pub fn new(graph: &GasketGraph) -> Result<Self> {
        Ok(Self {
            graph: graph.clone(),
            laplacian_inverse: ScaledInverse::new(&graph.reduced_laplacian())?,
            filler: zero_class_filler(graph)?,
        })
    }

    pub fn graph(&self) -> &GasketGraph {
        &self.graph
    }

    /// `x - Delta * floor(Delta^{-1} x)`, entrywise in `(-d_v, d_v)`.
    pub fn reduce(&self, x: &IntegerClassVector) -> Result<Vec<i64>> {
        if x.len() != self.graph.len() {
            return Err(Error::LengthMismatch {
                expected: self.graph.len(),
                got: x.len(),
            });
        }
        let y = self.laplacian_inverse.floor_apply(&x.entries)?;
        (0..self.graph.len())
            .map(|v| {
                let mut dy = &y[v] * self.graph.degree(v);
                for &w in self.graph.neighbors(v) {
                    dy -= &y[w];
                }
                (&x.entries[v] - dy)
                    .to_i64()
                    .ok_or_else(|| Error::Precondition("reduction out of range".into()))
            })
            .collect()
    }

    /// The unique recurrent configuration in the class of `x`.
    pub fn rep(&self, x: &IntegerClassVector) -> Result<Configuration> {
        let reduced = self.reduce(x)?;
        let chips = reduced
            .iter()
            .zip(&self.filler.chips)
            .map(|(&r, &f)| {
                let v = r + 2 * f as i64;
                debug_assert!(v >= 0);
                v as u64
            })
            .collect();
        let lifted = Configuration {
            chips,
            ..self.filler.clone()
        };
        Ok(stabilize(&self.graph, &lifted, &[])?.0)
    }
}

/// Recurrent representative of the class of `x`. Builds a [`ClassReducer`]
/// per call; keep one around for repeated use.
pub fn recurrent_rep(graph: &GasketGraph, x: &IntegerClassVector) -> Result<Configuration> {
    ClassReducer::new(graph)?.rep(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::{Corner, GasketCoord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn max_stable_is_fixed() {
        let g = GasketGraph::normal(2);
        let m = Configuration::max_stable(&g);
        let (out, odo) = stabilize(&g, &m, &[]).unwrap();
        assert_eq!(out, m);
        assert!(odo.is_zero());
    }

    #[test]
    fn corner_sink_collects_ten_on_level_one() {
        // 2 * M_1(2, 1, 1) with the lower-left corner as the collecting sink.
        let g = GasketGraph::new(1, BoundaryCondition::CornerSink(Corner::LowerLeft));
        let at = |a, b| g.index_of(GasketCoord::new(a, b)).unwrap();
        let mut chips = vec![0; 5];
        chips[at(1, 0)] = 6;
        chips[at(2, 0)] = 2;
        chips[at(0, 1)] = 6;
        chips[at(1, 1)] = 4;
        chips[at(0, 2)] = 2;
        let c = Configuration::new(&g, chips).unwrap();
        let (out, odo) = stabilize(&g, &c, &[]).unwrap();
        let collected: u64 = (0..g.len()).map(|v| g.beta(v) as u64 * odo.fires[v]).sum();
        assert_eq!(collected, 10);
        let mut expected = [0; 5];
        expected[at(1, 0)] = 3;
        expected[at(2, 0)] = 1;
        expected[at(0, 1)] = 3;
        expected[at(1, 1)] = 2;
        expected[at(0, 2)] = 1;
        assert_eq!(out.chips(), &expected[..]);
    }

    #[test]
    fn frozen_corners_under_normal_boundary() {
        // Doubling the identity of G_2 with all three corners frozen: each
        // doubled corner (4 chips) collects 4 * 3 - 2 = 10 more, the rest is
        // restored.
        let g = GasketGraph::normal(2);
        let e = identity(&g).unwrap();
        let corners: Vec<usize> = Corner::ALL.iter().map(|&c| g.corner_index(c).unwrap()).collect();
        let (out, _) = stabilize(&g, &e.scaled(2).unwrap(), &corners).unwrap();
        for v in 0..g.len() {
            let expected = if corners.contains(&v) { e.chips()[v] + 12 } else { e.chips()[v] };
            assert_eq!(out.chips()[v], expected, "vertex {v}");
        }
    }

    #[test]
    fn zero_is_not_recurrent_on_level_one() {
        let g = GasketGraph::normal(1);
        let (rec, odo) = is_recurrent_burning(&g, &Configuration::zeros(&g)).unwrap();
        assert!(!rec);
        assert!(odo.is_zero());
    }

    #[test]
    fn max_stable_burns_once_everywhere() {
        let g = GasketGraph::normal(2);
        let (rec, odo) = is_recurrent_burning(&g, &Configuration::max_stable(&g)).unwrap();
        assert!(rec);
        assert!(odo.is_all_ones());
    }

    #[test]
    fn burning_rejects_unstable_input() {
        let g = GasketGraph::normal(0);
        let c = Configuration::constant(&g, 4);
        assert!(matches!(is_recurrent_burning(&g, &c), Err(Error::NotStable { vertex: 0 })));
    }

    #[test]
    fn identity_of_triangle() {
        let g = GasketGraph::normal(0);
        let e = identity(&g).unwrap();
        assert_eq!(e.chips(), &[2, 2, 2]);
        // Delta * (1,1,1) = (2,2,2): the identity is the class of zero.
        assert_eq!(g.laplacian_apply(&[1, 1, 1]), vec![2, 2, 2]);
    }

    #[test]
    fn identity_is_idempotent() {
        for level in 0..=4 {
            let g = GasketGraph::normal(level);
            let e = identity(&g).unwrap();
            assert!(is_recurrent(&g, &e).unwrap());
            assert_eq!(oplus(&g, &e, &e).unwrap(), e);
        }
    }

    #[test]
    fn identity_fixes_zero_sum() {
        let g = GasketGraph::normal(2);
        let e = identity(&g).unwrap();
        assert_eq!(oplus(&g, &e, &Configuration::zeros(&g)).unwrap(), e);
    }

    #[test]
    fn overflow_is_reported() {
        let g = GasketGraph::normal(0);
        let c = Configuration::new(&g, vec![u64::MAX, u64::MAX, 0]).unwrap();
        assert!(matches!(stabilize(&g, &c, &[]), Err(Error::Overflow { .. })));
        let one = Configuration::constant(&g, 1);
        assert!(matches!(c.checked_add(&one), Err(Error::Overflow { vertex: 0 })));
    }

    #[test]
    fn mismatched_graph_is_rejected() {
        let g1 = GasketGraph::normal(1);
        let g0 = GasketGraph::normal(0);
        let c = Configuration::zeros(&g0);
        assert!(matches!(stabilize(&g1, &c, &[]), Err(Error::GraphMismatch { .. })));
        assert!(matches!(
            Configuration::new(&g1, vec![0; 3]),
            Err(Error::LengthMismatch { expected: 6, got: 3 })
        ));
    }

    #[test]
    fn frozen_index_out_of_range() {
        let g = GasketGraph::normal(0);
        let c = Configuration::zeros(&g);
        assert!(matches!(stabilize(&g, &c, &[3]), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn rep_of_zero_is_identity() {
        for level in 0..=2 {
            let g = GasketGraph::normal(level);
            let rep = recurrent_rep(&g, &IntegerClassVector::zeros(g.len())).unwrap();
            assert_eq!(rep, identity(&g).unwrap());
        }
    }

    #[test]
    fn rep_handles_negative_and_large_entries() {
        let g = GasketGraph::normal(1);
        let reducer = ClassReducer::new(&g).unwrap();
        let x = IntegerClassVector::from_i64(&[-1_000_000_007, 3, 0, 5, -2, 1 << 50]);
        let rep = reducer.rep(&x).unwrap();
        assert!(is_recurrent(&g, &rep).unwrap());
        let reduced = reducer.reduce(&x).unwrap();
        assert!(reduced.iter().all(|&r| r.abs() < 4));
    }

    #[test]
    fn random_order_agrees_with_queue() {
        let g = GasketGraph::normal(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let chips: Vec<u64> = (0..g.len()).map(|_| rng.random_range(0..12)).collect();
        let c = Configuration::new(&g, chips).unwrap();
        let a = stabilize(&g, &c, &[]).unwrap();
        let b = stabilize_random_order(&g, &c, &[], &mut rng).unwrap();
        assert_eq!(a, b);
    }
}
