//! Multiplicative harmonic functions, characters and exact distances.
//!
//! A multiplicative harmonic function is stored by its rotation numbers
//! `q(v)` in `[0, 1)`, `h(v) = exp(2 pi i q(v))`, with `q = 0` at the sink.
//! Harmonicity `h(v)^d_v = prod h(w)` becomes the congruence
//! `d_v q(v) = sum q(w) (mod 1)`, i.e. `L q` is integral.
//!
//! The chain adds a chip at a vertex drawn uniformly from `V` plus the sink,
//! a sink draw being a lazy step. The eigenvalue of `chi_h` is
//! `(sum_v h(v) + 1) / (|V| + 1)`.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::gasket::{BoundaryCondition, GasketCoord, GasketGraph};
use crate::matrix::determinant;
use crate::sandpile::Configuration;
use crate::snf::smith_normal_form;
use crate::{Error, Result};

/// Default bound on `|Gamma|` for character enumeration.
pub const CHARACTER_CAP: u64 = 1_000_000;

fn frac_part(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// Rotation numbers of a multiplicative harmonic function on a graph's
/// non-sink vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RotationNumberFunction {
    level: u32,
    boundary: BoundaryCondition,
    q: Vec<BigRational>,
}

impl RotationNumberFunction {
    /// Reduces `q` mod 1 and checks harmonicity.
    pub fn new(graph: &GasketGraph, q: Vec<BigRational>) -> Result<Self> {
        if q.len() != graph.len() {
            return Err(Error::LengthMismatch {
                expected: graph.len(),
                got: q.len(),
            });
        }
        let h = Self {
            level: graph.level(),
            boundary: graph.boundary(),
            q: q.iter().map(frac_part).collect(),
        };
        if let Some(vertex) = h.first_non_harmonic(graph) {
            return Err(Error::NotHarmonic { vertex });
        }
        Ok(h)
    }

    pub fn trivial(graph: &GasketGraph) -> Self {
        Self {
            level: graph.level(),
            boundary: graph.boundary(),
            q: vec![BigRational::zero(); graph.len()],
        }
    }

    pub fn q(&self) -> &[BigRational] {
        &self.q
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    /// `d_v q(v) - sum_{w ~ v} q(w)` for each vertex; integral iff harmonic.
    pub fn harmonic_residues(&self, graph: &GasketGraph) -> Vec<BigRational> {
        (0..graph.len())
            .map(|v| {
                let mut r = &self.q[v] * BigRational::from_integer(graph.degree(v).into());
                for &w in graph.neighbors(v) {
                    r -= &self.q[w];
                }
                r
            })
            .collect()
    }

    fn first_non_harmonic(&self, graph: &GasketGraph) -> Option<usize> {
        self.harmonic_residues(graph)
            .iter()
            .position(|r| !r.is_integer())
    }

    pub fn is_harmonic(&self, graph: &GasketGraph) -> bool {
        self.level == graph.level()
            && self.boundary == graph.boundary()
            && self.first_non_harmonic(graph).is_none()
    }

    pub fn is_trivial(&self) -> bool {
        self.q.iter().all(Zero::is_zero)
    }

    /// Pointwise product `h * g`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.q.len() != other.q.len() {
            return Err(Error::LengthMismatch {
                expected: self.q.len(),
                got: other.q.len(),
            });
        }
        Ok(Self {
            q: self
                .q
                .iter()
                .zip(&other.q)
                .map(|(a, b)| frac_part(&(a + b)))
                .collect(),
            ..self.clone()
        })
    }

    /// `h(v)` as `(re, im)`.
    pub fn values(&self) -> Vec<(f64, f64)> {
        self.q
            .iter()
            .map(|q| {
                let angle = TAU * q.to_f64().unwrap_or(0.0);
                (angle.cos(), angle.sin())
            })
            .collect()
    }

    /// `chi_h(eta) = prod h(v)^eta(v)`.
    pub fn evaluate(&self, eta: &Configuration) -> Result<CharacterValue> {
        if eta.len() != self.q.len() {
            return Err(Error::LengthMismatch {
                expected: self.q.len(),
                got: eta.len(),
            });
        }
        let mut r = BigRational::zero();
        for (q, &c) in self.q.iter().zip(eta.chips()) {
            r += q * BigRational::from_integer(c.into());
        }
        Ok(CharacterValue::new(frac_part(&r)))
    }
}

/// A unit complex number `exp(2 pi i r)` with exact rotation `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterValue {
    #[serde(serialize_with = "ser_rational")]
    pub rotation: BigRational,
    pub re: f64,
    pub im: f64,
}

impl CharacterValue {
    fn new(rotation: BigRational) -> Self {
        let angle = TAU * rotation.to_f64().unwrap_or(0.0);
        Self {
            rotation,
            re: angle.cos(),
            im: angle.sin(),
        }
    }
}

pub(crate) fn ser_rational<S: serde::Serializer>(
    r: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Origins of the level-1 cells of `G_n`, sorted in canonical vertex order.
/// Cell `i` (1-based) has corners `o`, `o + (2,0)`, `o + (0,2)` and
/// midpoints `o + (1,0)`, `o + (0,1)`, `o + (1,1)`.
pub fn cell_origins(level: u32) -> Result<Vec<GasketCoord>> {
    if level == 0 {
        return Err(Error::InvalidLevel {
            level,
            reason: "level-1 cells need level >= 1",
        });
    }
    let mut cells = vec![GasketCoord::new(0, 0)];
    for k in 1..level {
        let s = 1u32 << k;
        let mut next = cells.clone();
        next.extend(cells.iter().map(|c| GasketCoord::new(c.a + s, c.b)));
        next.extend(cells.iter().map(|c| GasketCoord::new(c.a, c.b + s)));
        cells = next;
    }
    cells.sort();
    Ok(cells)
}

fn cell_midpoints(origin: GasketCoord) -> [GasketCoord; 3] {
    let (a, b) = (origin.a, origin.b);
    [
        GasketCoord::new(a + 1, b),
        GasketCoord::new(a, b + 1),
        GasketCoord::new(a + 1, b + 1),
    ]
}

/// Midpoint vertex indices of every level-1 cell of `G_n` (normal boundary).
pub fn cell_midpoint_indices(level: u32) -> Result<Vec<[usize; 3]>> {
    let graph = GasketGraph::normal(level);
    Ok(cell_origins(level)?
        .into_iter()
        .map(|o| cell_midpoints(o).map(|m| graph.index_of(m).expect("midpoint is a vertex")))
        .collect())
}

/// The `-1, +1` function of a level-1 cell extended by 1: rotation 1/2 on
/// the three midpoints of cell `index` (1-based), 0 elsewhere.
pub fn embed_h1(level: u32, index: usize) -> Result<RotationNumberFunction> {
    let cells = cell_origins(level)?;
    if index == 0 || index > cells.len() {
        return Err(Error::VertexOutOfRange {
            index,
            len: cells.len(),
        });
    }
    let graph = GasketGraph::normal(level);
    let half = BigRational::new(1.into(), 2.into());
    let mut q = vec![BigRational::zero(); graph.len()];
    for m in cell_midpoints(cells[index - 1]) {
        q[graph.index_of(m).expect("midpoint is a vertex")] = half.clone();
    }
    let h = RotationNumberFunction::new(&graph, q)?;
    debug_assert!(h.is_harmonic(&graph));
    Ok(h)
}

/// `lambda_h`: exact when every rotation is 0 or 1/2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenvalue {
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact: Option<BigRational>,
    pub re: f64,
    pub im: f64,
}

fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

pub fn eigenvalue(graph: &GasketGraph, h: &RotationNumberFunction) -> Result<Eigenvalue> {
    if !(h.level == graph.level() && h.boundary == graph.boundary() && h.q.len() == graph.len()) {
        return Err(Error::Precondition("function belongs to another graph".into()));
    }
    if let Some(vertex) = h.first_non_harmonic(graph) {
        return Err(Error::NotHarmonic { vertex });
    }
    let denom = graph.len() as f64 + 1.0;
    let half = BigRational::new(1.into(), 2.into());
    let exact = h.q.iter().all(|q| q.is_zero() || *q == half).then(|| {
        let minus = h.q.iter().filter(|q| !q.is_zero()).count() as i64;
        let plus = graph.len() as i64 - minus;
        BigRational::new((plus - minus + 1).into(), (graph.len() as i64 + 1).into())
    });
    let (re, im) = h
        .values()
        .iter()
        .fold((1.0, 0.0), |(r, i), (a, b)| (r + a, i + b));
    Ok(Eigenvalue {
        re: exact.as_ref().and_then(ToPrimitive::to_f64).unwrap_or(re / denom),
        im: if exact.is_some() { 0.0 } else { im / denom },
        exact,
    })
}

/// The character group as `theta = U^-T (c / d)` for the Smith form
/// `L = U D V`, scaled to integers modulo the exponent `D = d_max`.
/// Character `c` has rotation numbers `k_v / D`.
#[derive(Debug, Clone)]
pub struct CharacterTable {
    graph: GasketGraph,
    order: u64,
    modulus: u64,
    /// `(d_i, row i of U^-1 scaled by D / d_i, mod D)` for each `d_i > 1`.
    generators: Vec<(u64, Vec<u64>)>,
}

impl CharacterTable {
    /// Refuses groups larger than `cap`; the order is computed first from the
    /// determinant.
    pub fn new(graph: &GasketGraph, cap: u64) -> Result<Self> {
        let order = determinant(&graph.reduced_laplacian())?;
        if order > BigInt::from(cap) {
            return Err(Error::CapExceeded {
                order: order.to_string(),
                cap,
            });
        }
        let order = order.to_u64().expect("below cap");
        let s = smith_normal_form(&graph.reduced_laplacian());
        let diag: Vec<u64> = s
            .diagonal()
            .iter()
            .map(|d| d.to_u64().expect("divides the order"))
            .collect();
        let modulus = diag.iter().copied().fold(1, |acc: u64, d| acc.lcm(&d));
        let bm = BigInt::from(modulus);
        let generators = diag
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 1)
            .map(|(i, &d)| {
                let scale = BigInt::from(modulus / d);
                let row = s
                    .u_inv
                    .row(i)
                    .iter()
                    .map(|x| (x * &scale).mod_floor(&bm).to_u64().expect("reduced"))
                    .collect();
                (d, row)
            })
            .collect();
        Ok(Self {
            graph: graph.clone(),
            order,
            modulus,
            generators,
        })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Visits every character's numerators `k_v` (rotation `k_v / D`) in a
    /// fixed mixed-radix order, the trivial character first.
    pub fn for_each(&self, mut f: impl FnMut(&[u64])) {
        let n = self.graph.len();
        let m = self.modulus;
        let mut digits = vec![0u64; self.generators.len()];
        let mut k = vec![0u64; n];
        loop {
            f(&k);
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return;
                }
                let (d, row) = &self.generators[i];
                digits[i] += 1;
                for (kv, r) in k.iter_mut().zip(row) {
                    *kv = (*kv + r) % m;
                }
                if digits[i] < *d {
                    break;
                }
                // Wrapped: the digit returns to 0 and k is back where it was
                // since d * row = 0 mod D.
                digits[i] = 0;
                i += 1;
            }
        }
    }

    pub fn functions(&self) -> Vec<RotationNumberFunction> {
        let mut out = Vec::with_capacity(self.order as usize);
        let m = BigInt::from(self.modulus);
        self.for_each(|k| {
            out.push(RotationNumberFunction {
                level: self.graph.level(),
                boundary: self.graph.boundary(),
                q: k.iter()
                    .map(|&kv| BigRational::new(kv.into(), m.clone()))
                    .collect(),
            })
        });
        out
    }

    /// `|lambda|^2` for a character given by its numerators.
    fn modulus_squared(&self, k: &[u64]) -> f64 {
        let m = self.modulus as f64;
        let (mut re, mut im) = (1.0, 0.0);
        for &kv in k {
            let angle = TAU * kv as f64 / m;
            re += angle.cos();
            im += angle.sin();
        }
        let denom = self.graph.len() as f64 + 1.0;
        (re * re + im * im) / (denom * denom)
    }

    /// `|lambda|^2` of every character in enumeration order.
    pub fn eigenvalue_moduli_squared(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.order as usize);
        self.for_each(|k| out.push(self.modulus_squared(k)));
        out
    }
}

/// All characters of the sandpile group of `graph`.
pub fn enumerate_characters(graph: &GasketGraph, cap: u64) -> Result<Vec<RotationNumberFunction>> {
    Ok(CharacterTable::new(graph, cap)?.functions())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distance {
    pub t: u64,
    /// `||P^t_id - pi||_2` with the unnormalized sum over group elements.
    pub l2: f64,
    /// `l2 / 2`. Not a bound on total variation for this norm.
    pub half_l2: f64,
    /// `sqrt(|Gamma|) * l2 / 2`, which bounds the total variation distance.
    pub tv_upper: f64,
}

/// Plancherel: `||P^t_id - pi||_2^2 = (1/|Gamma|) sum_{chi != 1} |lambda|^(2t)`.
pub fn exact_distance(graph: &GasketGraph, t: u64, cap: u64) -> Result<Distance> {
    Ok(exact_distances(graph, &[t], cap)?[0])
}

/// [`exact_distance`] for several times sharing one enumeration.
pub fn exact_distances(graph: &GasketGraph, ts: &[u64], cap: u64) -> Result<Vec<Distance>> {
    let table = CharacterTable::new(graph, cap)?;
    let moduli = table.eigenvalue_moduli_squared();
    let n = table.order() as f64;
    Ok(ts
        .iter()
        .map(|&t| {
            let exponent = i32::try_from(t).unwrap_or(i32::MAX);
            // Skip the trivial character, first in enumeration order.
            let sum: f64 = moduli[1..].iter().map(|m| m.powi(exponent)).sum();
            let l2 = (sum / n).sqrt();
            Distance {
                t,
                l2,
                half_l2: l2 / 2.0,
                tv_upper: n.sqrt() * l2 / 2.0,
            }
        })
        .collect())
}

/// `chi(eta) = (1/3^(n-1)) sum_i chi_n^i(eta)`, each summand
/// `(-1)^(chips on the midpoints of cell i)`.
pub fn distinguishing_statistic(level: u32, eta: &Configuration) -> Result<f64> {
    let graph = GasketGraph::normal(level);
    eta.check_graph(&graph)?;
    let cells = cell_midpoint_indices(level)?;
    Ok(distinguishing_from_cells(&cells, eta.chips()))
}

pub(crate) fn distinguishing_from_cells(cells: &[[usize; 3]], chips: &[u64]) -> f64 {
    let sum: i64 = cells
        .iter()
        .map(|m| {
            let parity = m.iter().map(|&v| chips[v]).sum::<u64>() % 2;
            1 - 2 * parity as i64
        })
        .sum();
    sum as f64 / cells.len() as f64
}

/// `Var_pi[chi]` from character orthogonality: `E_pi[chi_i chi_j]` is 1 when
/// `h_i h_j` is trivial and 0 otherwise, and `E_pi[chi] = 0` when every
/// `h_i` is nontrivial.
pub fn stationary_variance(level: u32) -> Result<BigRational> {
    let count = cell_origins(level)?.len();
    let hs: Vec<RotationNumberFunction> =
        (1..=count).map(|i| embed_h1(level, i)).collect::<Result<_>>()?;
    if hs.iter().any(RotationNumberFunction::is_trivial) {
        return Err(Error::Precondition("a cell function is trivial".into()));
    }
    let mut trivial_pairs = 0i64;
    for a in &hs {
        for b in &hs {
            if a.product(b)?.is_trivial() {
                trivial_pairs += 1;
            }
        }
    }
    let c = BigInt::from(count);
    Ok(BigRational::new(trivial_pairs.into(), &c * &c))
}

/// `1 - k / (|V_n| + 1)` as an exact rational.
pub fn one_minus_over(level: u32, k: i64) -> BigRational {
    let v = BigInt::from(crate::gasket::vertex_count(level)) + 1;
    BigRational::one() - BigRational::new(k.into(), v)
}

/// Largest `|lambda|` over the nontrivial characters.
pub fn max_nontrivial_modulus(graph: &GasketGraph, cap: u64) -> Result<f64> {
    let moduli = CharacterTable::new(graph, cap)?.eigenvalue_moduli_squared();
    Ok(moduli[1..].iter().copied().fold(0.0, f64::max).sqrt())
}
