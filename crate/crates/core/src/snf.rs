//! Smith normal form over the integers and finite abelian group invariants.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::matrix::BigMatrix;
use crate::{Error, Result};

/// `A = U * D * V` with `D` diagonal in Smith form and `U`, `V` unimodular.
/// The inverses of `U` and `V` are kept as well, since both directions are
/// needed downstream (class coordinates and character enumeration).
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub d: BigMatrix,
    pub u: BigMatrix,
    pub v: BigMatrix,
    pub u_inv: BigMatrix,
    pub v_inv: BigMatrix,
}

impl SmithDecomposition {
    /// Diagonal entries `d_1 | d_2 | ...`, zeros last.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d[(i, i)].clone())
            .collect()
    }

    pub fn invariant_factors(&self) -> InvariantFactors {
        InvariantFactors::from_diagonal(&self.diagonal(), self.d.rows())
    }
}

struct Transforms {
    u: BigMatrix,
    u_inv: BigMatrix,
    v: BigMatrix,
    v_inv: BigMatrix,
}

/// Working state of the elimination. Row operations on the work matrix are
/// mirrored on `u_inv` (left) and inverted on `u` (right); column operations
/// likewise on `v_inv` and `v`.
struct Elimination {
    a: BigMatrix,
    t: Option<Transforms>,
}

impl Elimination {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        if let Some(t) = &mut self.t {
            t.u_inv.swap_rows(i, j);
            t.u.swap_cols(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        if let Some(t) = &mut self.t {
            t.v_inv.swap_cols(i, j);
            t.v.swap_rows(i, j);
        }
    }

    /// `row[dst] += c * row[src]`
    fn add_row(&mut self, dst: usize, src: usize, c: &BigInt) {
        self.a.add_row_multiple(dst, src, c);
        if let Some(t) = &mut self.t {
            t.u_inv.add_row_multiple(dst, src, c);
            t.u.add_col_multiple(src, dst, &-c);
        }
    }

    /// `col[dst] += c * col[src]`
    fn add_col(&mut self, dst: usize, src: usize, c: &BigInt) {
        self.a.add_col_multiple(dst, src, c);
        if let Some(t) = &mut self.t {
            t.v_inv.add_col_multiple(dst, src, c);
            t.v.add_row_multiple(src, dst, &-c);
        }
    }

    fn negate_row(&mut self, i: usize) {
        self.a.negate_row(i);
        if let Some(t) = &mut self.t {
            t.u_inv.negate_row(i);
            t.u.negate_col(i);
        }
    }

    /// Position of the nonzero entry of least absolute value in the trailing
    /// block starting at `(t, t)`.
    fn min_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), BigInt)> = None;
        for i in t..self.a.rows() {
            for j in t..self.a.cols() {
                let x = &self.a[(i, j)];
                if x.is_zero() {
                    continue;
                }
                let ax = x.abs();
                if best.as_ref().is_none_or(|(_, b)| ax < *b) {
                    let one = ax.is_one();
                    best = Some(((i, j), ax));
                    if one {
                        return best.map(|(p, _)| p);
                    }
                }
            }
        }
        best.map(|(p, _)| p)
    }

    /// Clears row and column `t` outside the pivot. Returns false when a
    /// nonzero remainder was left behind (a smaller pivot now exists).
    fn clear_cross(&mut self, t: usize) -> bool {
        let mut clean = true;
        let pivot = self.a[(t, t)].clone();
        for i in t + 1..self.a.rows() {
            if self.a[(i, t)].is_zero() {
                continue;
            }
            let q = self.a[(i, t)].div_floor(&pivot);
            self.add_row(i, t, &-q);
            clean &= self.a[(i, t)].is_zero();
        }
        for j in t + 1..self.a.cols() {
            if self.a[(t, j)].is_zero() {
                continue;
            }
            let q = self.a[(t, j)].div_floor(&pivot);
            self.add_col(j, t, &-q);
            clean &= self.a[(t, j)].is_zero();
        }
        clean
    }

    fn run(&mut self) {
        let steps = self.a.rows().min(self.a.cols());
        for t in 0..steps {
            loop {
                let Some((pi, pj)) = self.min_pivot(t) else {
                    return;
                };
                self.swap_rows(t, pi);
                self.swap_cols(t, pj);
                if !self.clear_cross(t) {
                    continue;
                }
                // Divisibility: pull a row with a non-multiple into row t.
                let pivot = self.a[(t, t)].clone();
                let offender = (t + 1..self.a.rows()).find(|&i| {
                    (t + 1..self.a.cols()).any(|j| !self.a[(i, j)].is_multiple_of(&pivot))
                });
                match offender {
                    Some(i) => self.add_row(t, i, &BigInt::one()),
                    None => break,
                }
            }
            if self.a[(t, t)].is_negative() {
                self.negate_row(t);
            }
        }
    }
}

/// Smith normal form with unimodular transforms. Pivot choice is the entry
/// of least absolute value in the trailing block, which keeps entry growth
/// in check on Laplacian-like inputs. Deterministic.
pub fn smith_normal_form(a: &BigMatrix) -> SmithDecomposition {
    let (m, n) = (a.rows(), a.cols());
    let mut e = Elimination {
        a: a.clone(),
        t: Some(Transforms {
            u: BigMatrix::identity(m),
            u_inv: BigMatrix::identity(m),
            v: BigMatrix::identity(n),
            v_inv: BigMatrix::identity(n),
        }),
    };
    e.run();
    let t = e.t.expect("transforms tracked");
    SmithDecomposition {
        d: e.a,
        u: t.u,
        v: t.v,
        u_inv: t.u_inv,
        v_inv: t.v_inv,
    }
}

/// Invariant factors of the cokernel `Z^rows / A Z^cols`, without tracking
/// transforms.
pub fn cokernel_invariants(a: &BigMatrix) -> InvariantFactors {
    let mut e = Elimination {
        a: a.clone(),
        t: None,
    };
    e.run();
    let diag: Vec<BigInt> = (0..a.rows().min(a.cols()))
        .map(|i| e.a[(i, i)].clone())
        .collect();
    InvariantFactors::from_diagonal(&diag, a.rows())
}

/// A finitely generated abelian group `Z^free_rank + Z/d_1 + ... + Z/d_k` with
/// `1 < d_1 | d_2 | ... | d_k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InvariantFactors {
    factors: Vec<BigInt>,
    free_rank: usize,
}

impl InvariantFactors {
    /// From the diagonal of a Smith form of a matrix with `rows` rows; rows
    /// beyond the diagonal and zero diagonal entries are free summands.
    pub fn from_diagonal(diag: &[BigInt], rows: usize) -> Self {
        let factors: Vec<BigInt> = diag
            .iter()
            .map(Signed::abs)
            .filter(|d| *d > BigInt::one())
            .collect();
        let zeros = diag.iter().filter(|d| d.is_zero()).count();
        let free_rank = zeros + rows.saturating_sub(diag.len());
        debug_assert!(factors.windows(2).all(|w| w[1].is_multiple_of(&w[0])));
        Self { factors, free_rank }
    }

    /// From an arbitrary list of cyclic orders; canonicalized through the
    /// primary decomposition.
    pub fn from_cyclic_orders(orders: &[BigInt]) -> Result<Self> {
        let mut primary: BTreeMap<BigInt, Vec<u32>> = BTreeMap::new();
        for d in orders {
            for (p, e) in factorize(d)? {
                primary.entry(p).or_default().push(e);
            }
        }
        Ok(Self::from_primary(primary))
    }

    fn from_primary(mut primary: BTreeMap<BigInt, Vec<u32>>) -> Self {
        let len = primary.values().map(Vec::len).max().unwrap_or(0);
        for exps in primary.values_mut() {
            exps.sort_unstable_by(|a, b| b.cmp(a));
        }
        // Largest factor first: combine the k-th largest power of each prime.
        let mut factors: Vec<BigInt> = (0..len)
            .map(|k| {
                primary
                    .iter()
                    .filter_map(|(p, exps)| exps.get(k).map(|&e| num_traits::pow(p.clone(), e as usize)))
                    .product()
            })
            .collect();
        factors.reverse();
        Self {
            factors,
            free_rank: 0,
        }
    }

    pub fn factors(&self) -> &[BigInt] {
        &self.factors
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty() && self.free_rank == 0
    }

    /// Group order, `None` for infinite groups.
    pub fn order(&self) -> Option<BigInt> {
        self.is_finite().then(|| self.factors.iter().product())
    }

    /// Prime-power components `p -> [e_1, e_2, ...]` (descending).
    pub fn primary_decomposition(&self) -> Result<BTreeMap<BigInt, Vec<u32>>> {
        let mut primary: BTreeMap<BigInt, Vec<u32>> = BTreeMap::new();
        for d in &self.factors {
            for (p, e) in factorize(d)? {
                primary.entry(p).or_default().push(e);
            }
        }
        for exps in primary.values_mut() {
            exps.sort_unstable_by(|a, b| b.cmp(a));
        }
        Ok(primary)
    }

    /// Invariant factors of the direct sum, by merging prime-power
    /// components.
    pub fn direct_sum(parts: &[&InvariantFactors]) -> Result<Self> {
        let mut primary: BTreeMap<BigInt, Vec<u32>> = BTreeMap::new();
        for part in parts {
            for (p, exps) in part.primary_decomposition()? {
                primary.entry(p).or_default().extend(exps);
            }
        }
        let mut out = Self::from_primary(primary);
        out.free_rank = parts.iter().map(|p| p.free_rank).sum();
        Ok(out)
    }
}

impl fmt::Display for InvariantFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.factors.iter().map(|d| format!("Z/{d}")).collect();
        if self.free_rank > 0 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

impl Serialize for InvariantFactors {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("InvariantFactors", 3)?;
        let factors: Vec<String> = self.factors.iter().map(ToString::to_string).collect();
        st.serialize_field("factors", &factors)?;
        st.serialize_field("free_rank", &self.free_rank)?;
        st.serialize_field("order", &self.order().map(|o| o.to_string()))?;
        st.end()
    }
}

/// Trial division stops at this prime bound. A cofactor left above the bound
/// is accepted as prime when it is below the bound squared, otherwise the
/// factorization fails with [`Error::FactorizationCap`].
pub const PRIME_CAP: u64 = 1_000_000;

/// Prime factorization of `|n|` by trial division, `n != 0`.
pub fn factorize(n: &BigInt) -> Result<Vec<(BigInt, u32)>> {
    let mut rest = n.abs();
    if rest.is_zero() {
        return Err(Error::Precondition("cannot factor zero".into()));
    }
    let mut out = Vec::new();
    let mut p: u64 = 2;
    while p <= PRIME_CAP && !rest.is_one() {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            out.push((bp, e));
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    if !rest.is_one() {
        // Either p^2 > rest (rest is prime) or trial division ran out at the
        // cap, in which case rest has no factor <= PRIME_CAP.
        let cap_sq = BigInt::from(PRIME_CAP) * BigInt::from(PRIME_CAP);
        if p > PRIME_CAP && rest >= cap_sq {
            return Err(Error::FactorizationCap(n.to_string()));
        }
        out.push((rest, 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::determinant;

    fn ints(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn check_decomposition(a: &BigMatrix, s: &SmithDecomposition) {
        assert!(s.d.is_diagonal());
        let diag = s.diagonal();
        let nonzero: Vec<&BigInt> = diag.iter().take_while(|d| !d.is_zero()).collect();
        assert!(diag[nonzero.len()..].iter().all(Zero::is_zero), "zeros last");
        assert!(nonzero.iter().all(|d| d.is_positive()));
        assert!(nonzero.windows(2).all(|w| w[1].is_multiple_of(w[0])));
        assert_eq!(&s.u.mul(&s.d).unwrap().mul(&s.v).unwrap(), a);
        assert_eq!(determinant(&s.u).unwrap().abs(), BigInt::one());
        assert_eq!(determinant(&s.v).unwrap().abs(), BigInt::one());
        assert_eq!(s.u.mul(&s.u_inv).unwrap(), BigMatrix::identity(a.rows()));
        assert_eq!(s.v.mul(&s.v_inv).unwrap(), BigMatrix::identity(a.cols()));
    }

    #[test]
    fn coprime_diagonal() {
        let a = BigMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let s = smith_normal_form(&a);
        check_decomposition(&a, &s);
        assert_eq!(s.diagonal(), ints(&[1, 6]));
    }

    #[test]
    fn zero_matrix() {
        let a = BigMatrix::zeros(3, 2);
        let s = smith_normal_form(&a);
        assert_eq!(s.d, a);
        assert_eq!(s.u, BigMatrix::identity(3));
        assert_eq!(s.v, BigMatrix::identity(2));
        assert_eq!(s.invariant_factors().free_rank(), 3);
    }

    #[test]
    fn triangle_laplacian_order_fifty() {
        let a = BigMatrix::from_rows(&[vec![4, -1, -1], vec![-1, 4, -1], vec![-1, -1, 4]]);
        let s = smith_normal_form(&a);
        check_decomposition(&a, &s);
        let inv = s.invariant_factors();
        assert_eq!(inv.order().unwrap(), BigInt::from(50));
        assert_eq!(inv.factors(), &ints(&[5, 10])[..]);
        assert_eq!(cokernel_invariants(&a), inv);
    }

    #[test]
    fn direct_sum_merges_prime_powers() {
        let a = InvariantFactors::from_cyclic_orders(&ints(&[4, 6])).unwrap();
        assert_eq!(a.factors(), &ints(&[2, 12])[..]);
        let b = InvariantFactors::from_cyclic_orders(&ints(&[3])).unwrap();
        let sum = InvariantFactors::direct_sum(&[&a, &b]).unwrap();
        assert_eq!(sum.factors(), &ints(&[6, 12])[..]);
        let diag = BigMatrix::diagonal(&ints(&[2, 12, 3]));
        assert_eq!(cokernel_invariants(&diag), sum);
    }

    #[test]
    fn factorize_small_and_large() {
        assert_eq!(
            factorize(&BigInt::from(540)).unwrap(),
            vec![(BigInt::from(2), 2), (BigInt::from(3), 3), (BigInt::from(5), 1)]
        );
        let big_prime = BigInt::from(1_000_003u64);
        assert_eq!(factorize(&big_prime).unwrap(), vec![(big_prime.clone(), 1)]);
        let beyond = BigInt::from(1_000_003u64) * BigInt::from(1_000_033u64);
        assert!(matches!(factorize(&beyond), Err(Error::FactorizationCap(_))));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]
        #[test]
        fn random_matrices_decompose(
            rows in 1usize..=8,
            cols in 1usize..=8,
            seed in proptest::collection::vec(-9i64..=9, 64),
        ) {
            let a = BigMatrix::from_fn(rows, cols, |i, j| BigInt::from(seed[i * 8 + j]));
            let s = smith_normal_form(&a);
            check_decomposition(&a, &s);
            if rows == cols {
                let det = determinant(&a).unwrap().abs();
                let prod: BigInt = s.diagonal().iter().product();
                proptest::prop_assert_eq!(det, prod);
            }
        }
    }
}
