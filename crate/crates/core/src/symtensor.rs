//! Fully symmetric tensors over three-dimensional space.
//!
//! A symmetric tensor of rank `n` is stored by index multiset: the entry for
//! indices `(i1, .., in)` depends only on how many of them equal 0, 1 and 2.
//! The same `(a, b, c)` bookkeeping indexes homogeneous polynomials in three
//! variables, which is how contractions are evaluated: contracting a symmetric
//! tensor against vectors `u` and symmetric matrices `M` equals pairing its
//! entries with the monomial coefficients of `prod (u.x) * prod (x^T M x)`.

use std::sync::{Arc, OnceLock};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Largest rank for which [`sym_delta`] answers without an explicit limit.
pub const DEFAULT_MAX_RANK: usize = 12;

/// Hard storage limit for the memoized delta tables. `(HARD_MAX_RANK - 1)!!`
/// still fits in an `i64`.
pub const HARD_MAX_RANK: usize = 24;

pub fn dot(u: &Vec3, w: &Vec3) -> f64 {
    u[0] * w[0] + u[1] * w[1] + u[2] * w[2]
}

/// Symmetric 3x3 matrix, six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct SymMatrix {
    // xx, yy, zz, xy, xz, yz
    c: [f64; 6],
}

/// Component order of [`SymMatrix::components`].
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl SymMatrix {
    pub const fn zero() -> Self {
        Self { c: [0.0; 6] }
    }

    pub const fn identity() -> Self {
        Self {
            c: [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn diag(d: Vec3) -> Self {
        Self {
            c: [d[0], d[1], d[2], 0.0, 0.0, 0.0],
        }
    }

    /// Components in the order `xx, yy, zz, xy, xz, yz`.
    pub fn from_components(c: [f64; 6]) -> Self {
        Self { c }
    }

    pub fn components(&self) -> [f64; 6] {
        self.c
    }

    pub fn component_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.c[k]
    }

    /// Builds from a full matrix, averaging the off-diagonal pairs.
    pub fn symmetrized(m: &[[f64; 3]; 3]) -> Self {
        Self {
            c: [
                m[0][0],
                m[1][1],
                m[2][2],
                0.5 * (m[0][1] + m[1][0]),
                0.5 * (m[0][2] + m[2][0]),
                0.5 * (m[1][2] + m[2][1]),
            ],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.c[0],
            (1, 1) => self.c[1],
            (2, 2) => self.c[2],
            (0, 1) => self.c[3],
            (0, 2) => self.c[4],
            (1, 2) => self.c[5],
            _ => panic!("SymMatrix index ({i}, {j}) out of range"),
        }
    }

    pub fn to_array(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.c[0] + self.c[1] + self.c[2]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            c: self.c.map(|v| v * s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(other.c) {
            *x += y;
        }
        Self { c }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Full double contraction `A_ij B_ij`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let d = self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2];
        let o = self.c[3] * other.c[3] + self.c[4] * other.c[4] + self.c[5] * other.c[5];
        d + 2.0 * o
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.get(i, j) * v[j]).sum();
        }
        out
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
}

impl From<SymMatrix> for [[f64; 3]; 3] {
    fn from(m: SymMatrix) -> Self {
        m.to_array()
    }
}

impl TryFrom<[[f64; 3]; 3]> for SymMatrix {
    type Error = String;

    fn try_from(m: [[f64; 3]; 3]) -> std::result::Result<Self, Self::Error> {
        for (i, j) in [(1, 0), (2, 0), (2, 1)] {
            let (a, b) = (m[i][j], m[j][i]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(format!("matrix is not symmetric at ({i},{j}): {a} vs {b}"));
            }
        }
        Ok(Self::symmetrized(&m))
    }
}

/// Traceless part `m - tr(m)/3 I`.
pub fn deviator(m: &SymMatrix) -> SymMatrix {
    let t = m.trace() / 3.0;
    let mut c = m.components();
    for v in &mut c[..3] {
        *v -= t;
    }
    SymMatrix::from_components(c)
}

/// Position of the multiset with `a` zeros, `b` ones (and `rank - a - b`
/// twos) in a rank-`rank` table.
#[inline]
fn multiset_index(rank: usize, a: usize, b: usize) -> usize {
    let k = rank - a;
    k * (k + 1) / 2 + b
}

#[inline]
fn table_len(rank: usize) -> usize {
    (rank + 1) * (rank + 2) / 2
}

fn counts_of(indices: &[usize]) -> [usize; 3] {
    let mut n = [0; 3];
    for &i in indices {
        assert!(i < 3, "tensor index {i} out of range (expected 0..3)");
        n[i] += 1;
    }
    n
}

/// Fully symmetric rank-`n` tensor over 3-space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    rank: usize,
    values: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(rank: usize) -> Self {
        Self {
            rank,
            values: vec![0.0; table_len(rank)],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            rank: 0,
            values: vec![v],
        }
    }

    /// Builds a tensor from a function of the index counts `(n0, n1, n2)`.
    pub fn from_fn(rank: usize, mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let mut t = Self::zeros(rank);
        for a in 0..=rank {
            for b in 0..=rank - a {
                t.values[multiset_index(rank, a, b)] = f([a, b, rank - a - b]);
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of independent entries, `C(rank + 2, 2)`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry at 0-based `indices`; any ordering gives the same value.
    pub fn get(&self, indices: &[usize]) -> f64 {
        assert_eq!(indices.len(), self.rank, "index count must equal rank");
        let [a, b, _] = counts_of(indices);
        self.values[multiset_index(self.rank, a, b)]
    }

    pub fn get_counts(&self, counts: [usize; 3]) -> f64 {
        debug_assert_eq!(counts.iter().sum::<usize>(), self.rank);
        self.values[multiset_index(self.rank, counts[0], counts[1])]
    }

    pub fn set(&mut self, indices: &[usize], v: f64) {
        assert_eq!(indices.len(), self.rank, "index count must equal rank");
        let [a, b, _] = counts_of(indices);
        self.values[multiset_index(self.rank, a, b)] = v;
    }
}

/// Exact entries of the symmetrized delta product of the given rank.
///
/// The entry for index counts `(a, b, c)` is the fraction of perfect pairings
/// of the `n` slots that only pair equal indices: `(a-1)!!(b-1)!!(c-1)!!` out
/// of `(n-1)!!`, zero unless all counts are even.
#[derive(Debug, Clone, PartialEq)]
pub struct SymDelta {
    rank: usize,
    entries: Vec<Ratio<i64>>,
    tensor: SymTensor,
}

impl SymDelta {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn exact(&self, indices: &[usize]) -> Ratio<i64> {
        assert_eq!(indices.len(), self.rank);
        let [a, b, _] = counts_of(indices);
        self.entries[multiset_index(self.rank, a, b)]
    }

    pub fn tensor(&self) -> &SymTensor {
        &self.tensor
    }
}

fn double_factorial_odd(n: usize) -> i64 {
    // (n-1)!! for even n, 1 for n = 0
    let mut p = 1_i64;
    let mut k = n as i64 - 1;
    while k > 1 {
        p *= k;
        k -= 2;
    }
    p
}

fn build_delta(rank: usize) -> SymDelta {
    let total = double_factorial_odd(rank);
    let mut entries = vec![Ratio::from_integer(0); table_len(rank)];
    for a in 0..=rank {
        for b in 0..=rank - a {
            let c = rank - a - b;
            if a % 2 == 0 && b % 2 == 0 && c.is_multiple_of(2) {
                let count =
                    double_factorial_odd(a) * double_factorial_odd(b) * double_factorial_odd(c);
                entries[multiset_index(rank, a, b)] = Ratio::new(count, total);
            }
        }
    }
    let values = entries
        .iter()
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .collect();
    SymDelta {
        rank,
        entries,
        tensor: SymTensor { rank, values },
    }
}

static DELTAS: [OnceLock<Arc<SymDelta>>; HARD_MAX_RANK / 2 + 1] =
    [const { OnceLock::new() }; HARD_MAX_RANK / 2 + 1];

/// Symmetrized product of `rank / 2` Kronecker deltas, with an explicit rank
/// limit.
pub fn sym_delta_with_limit(rank: usize, max_rank: usize) -> Result<Arc<SymDelta>> {
    if rank % 2 == 1 {
        return Err(Error::OddRank(rank));
    }
    let max = max_rank.min(HARD_MAX_RANK);
    if rank > max {
        return Err(Error::RankTooLarge { rank, max });
    }
    Ok(DELTAS[rank / 2]
        .get_or_init(|| Arc::new(build_delta(rank)))
        .clone())
}

/// Symmetrized delta product `delta^(i1 i2 ... delta^ i_{n-1} i_n)`, rank at
/// most [`DEFAULT_MAX_RANK`].
pub fn sym_delta(rank: usize) -> Result<Arc<SymDelta>> {
    sym_delta_with_limit(rank, DEFAULT_MAX_RANK)
}

/// One argument of a contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    /// Consumes one index.
    Vector(Vec3),
    /// Consumes two adjacent indices.
    Matrix(SymMatrix),
}

impl Slot {
    fn arity(&self) -> usize {
        match self {
            Slot::Vector(_) => 1,
            Slot::Matrix(_) => 2,
        }
    }
}

/// Homogeneous polynomial in `(x, y, z)` with coefficients stored by exponent
/// counts, same layout as [`SymTensor`].
#[derive(Debug, Clone)]
pub(crate) struct HomPoly {
    degree: usize,
    coeffs: Vec<f64>,
}

impl HomPoly {
    pub(crate) fn one() -> Self {
        Self {
            degree: 0,
            coeffs: vec![1.0],
        }
    }

    fn mul_linear(&self, u: &Vec3) -> Self {
        let d = self.degree;
        let mut out = vec![0.0; table_len(d + 1)];
        for a in 0..=d {
            for b in 0..=d - a {
                let v = self.coeffs[multiset_index(d, a, b)];
                if v == 0.0 {
                    continue;
                }
                out[multiset_index(d + 1, a + 1, b)] += v * u[0];
                out[multiset_index(d + 1, a, b + 1)] += v * u[1];
                out[multiset_index(d + 1, a, b)] += v * u[2];
            }
        }
        Self {
            degree: d + 1,
            coeffs: out,
        }
    }

    fn mul_quadratic(&self, m: &SymMatrix) -> Self {
        let d = self.degree;
        let e = d + 2;
        let mut out = vec![0.0; table_len(e)];
        let [xx, yy, zz, xy, xz, yz] = m.components();
        for a in 0..=d {
            for b in 0..=d - a {
                let v = self.coeffs[multiset_index(d, a, b)];
                if v == 0.0 {
                    continue;
                }
                out[multiset_index(e, a + 2, b)] += v * xx;
                out[multiset_index(e, a, b + 2)] += v * yy;
                out[multiset_index(e, a, b)] += v * zz;
                out[multiset_index(e, a + 1, b + 1)] += 2.0 * v * xy;
                out[multiset_index(e, a + 1, b)] += 2.0 * v * xz;
                out[multiset_index(e, a, b + 1)] += 2.0 * v * yz;
            }
        }
        Self {
            degree: e,
            coeffs: out,
        }
    }

    pub(crate) fn mul_slot(&self, s: &Slot) -> Self {
        match s {
            Slot::Vector(u) => self.mul_linear(u),
            Slot::Matrix(m) => self.mul_quadratic(m),
        }
    }

    /// Pairs the polynomial with a symmetric tensor of the same rank.
    pub(crate) fn pair(&self, t: &SymTensor) -> f64 {
        debug_assert_eq!(self.degree, t.rank);
        self.coeffs.iter().zip(&t.values).map(|(c, v)| c * v).sum()
    }

    /// Pairs `x_k * self` with `t` for k = 0, 1, 2.
    pub(crate) fn pair_free(&self, t: &SymTensor) -> Vec3 {
        debug_assert_eq!(self.degree + 1, t.rank);
        let d = self.degree;
        let mut out = [0.0; 3];
        for a in 0..=d {
            for b in 0..=d - a {
                let v = self.coeffs[multiset_index(d, a, b)];
                if v == 0.0 {
                    continue;
                }
                out[0] += v * t.values[multiset_index(d + 1, a + 1, b)];
                out[1] += v * t.values[multiset_index(d + 1, a, b + 1)];
                out[2] += v * t.values[multiset_index(d + 1, a, b)];
            }
        }
        out
    }
}

fn slot_polynomial(t: &SymTensor, slots: &[Slot], free: usize) -> Result<HomPoly> {
    let consumed: usize = slots.iter().map(Slot::arity).sum::<usize>() + free;
    if consumed != t.rank {
        return Err(Error::Arity {
            rank: t.rank,
            consumed,
        });
    }
    Ok(slots.iter().fold(HomPoly::one(), |p, s| p.mul_slot(s)))
}

/// Full contraction of `t` against the slots.
pub fn contract(t: &SymTensor, slots: &[Slot]) -> Result<f64> {
    Ok(slot_polynomial(t, slots, 0)?.pair(t))
}

/// Contraction leaving the first index of `t` open.
pub fn contract_free(t: &SymTensor, slots: &[Slot]) -> Result<Vec3> {
    Ok(slot_polynomial(t, slots, 1)?.pair_free(t))
}

/// Result of [`contract_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contracted {
    Scalar(f64),
    Vector(Vec3),
}

/// Contraction with `free_indices` in `{0, 1}`.
pub fn contract_with(t: &SymTensor, slots: &[Slot], free_indices: usize) -> Result<Contracted> {
    match free_indices {
        0 => contract(t, slots).map(Contracted::Scalar),
        1 => contract_free(t, slots).map(Contracted::Vector),
        n => Err(Error::Param(format!(
            "free_indices must be 0 or 1, got {n}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    // Average over all index permutations of delta_{i1 i2} delta_{i3 i4} ...
    fn brute_force_entry(idx: &[usize]) -> f64 {
        let perms = permutations(idx.len());
        let hits = perms
            .iter()
            .filter(|p| p.chunks(2).all(|w| idx[w[0]] == idx[w[1]]))
            .count();
        hits as f64 / perms.len() as f64
    }

    fn all_indices(rank: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..rank {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..3).map(move |i| {
                        let mut w = v.clone();
                        w.push(i);
                        w
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn sym_delta_matches_permutation_average() {
        for rank in (0..=6).step_by(2) {
            let d = sym_delta(rank).unwrap();
            for idx in all_indices(rank) {
                let want = brute_force_entry(&idx);
                assert!((d.tensor().get(&idx) - want).abs() < 1e-15, "{idx:?}");
            }
        }
    }

    #[test]
    fn sym_delta_examples() {
        let d2 = sym_delta(2).unwrap();
        assert_eq!(d2.exact(&[0, 0]), Ratio::from_integer(1));
        let d4 = sym_delta(4).unwrap();
        assert_eq!(d4.exact(&[0, 0, 1, 1]), Ratio::new(1, 3));
        // full self-contraction with delta_ij delta_kl
        let mut s = 0.0;
        for idx in all_indices(4) {
            if idx[0] == idx[1] && idx[2] == idx[3] {
                s += d4.tensor().get(&idx);
            }
        }
        assert!((s - 5.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rank_and_limit_rejected() {
        assert_eq!(sym_delta(3).unwrap_err(), Error::OddRank(3));
        assert!(matches!(sym_delta(14), Err(Error::RankTooLarge { .. })));
        assert!(sym_delta_with_limit(14, 16).is_ok());
    }

    #[test]
    fn storage_size() {
        for rank in 0..8 {
            assert_eq!(SymTensor::zeros(rank).len(), (rank + 2) * (rank + 1) / 2);
        }
    }

    #[test]
    fn contraction_examples() {
        let d2 = sym_delta(2).unwrap();
        let v = contract(
            d2.tensor(),
            &[Slot::Vector([1.0, 0.0, 0.0]), Slot::Vector([0.0, 1.0, 0.0])],
        )
        .unwrap();
        assert_eq!(v, 0.0);

        let d4 = sym_delta(4).unwrap();
        let u = Slot::Vector([1.0, 1.0, 1.0]);
        assert!((contract(d4.tensor(), &[u, u, u, u]).unwrap() - 9.0).abs() < 1e-13);

        let a = Slot::Matrix(SymMatrix::diag([1.0, -1.0, 0.0]));
        assert!((contract(d4.tensor(), &[a, a]).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn contraction_matches_explicit_sum() {
        let d4 = sym_delta(4).unwrap();
        let u = [0.3, -1.2, 0.7];
        let m = SymMatrix::from_components([0.5, -0.2, 1.1, 0.4, -0.3, 0.25]);
        let mut want = 0.0;
        for idx in all_indices(4) {
            want += d4.tensor().get(&idx) * u[idx[0]] * m.get(idx[1], idx[2]) * u[idx[3]];
        }
        let got = contract(
            d4.tensor(),
            &[Slot::Vector(u), Slot::Matrix(m), Slot::Vector(u)],
        )
        .unwrap();
        assert!((got - want).abs() < 1e-14);

        let free = contract_free(d4.tensor(), &[Slot::Vector(u), Slot::Matrix(m)]).unwrap();
        for (k, f) in free.iter().enumerate() {
            let mut w = 0.0;
            for idx in all_indices(3) {
                w += d4.tensor().get(&[k, idx[0], idx[1], idx[2]])
                    * u[idx[0]]
                    * m.get(idx[1], idx[2]);
            }
            assert!((f - w).abs() < 1e-14);
        }
    }

    #[test]
    fn arity_errors() {
        let d4 = sym_delta(4).unwrap();
        let u = Slot::Vector([1.0, 0.0, 0.0]);
        assert_eq!(
            contract(d4.tensor(), &[u, u, u]).unwrap_err(),
            Error::Arity {
                rank: 4,
                consumed: 3
            }
        );
        assert!(contract_free(d4.tensor(), &[u, u, u]).is_ok());
        assert!(contract_with(d4.tensor(), &[u], 2).is_err());
    }

    #[test]
    fn deviator_examples() {
        let d = deviator(&SymMatrix::diag([1.0, 2.0, 3.0]));
        assert_eq!(d, SymMatrix::diag([-1.0, 0.0, 1.0]));
        assert_eq!(deviator(&SymMatrix::identity()), SymMatrix::zero());
        let off = SymMatrix::from_components([0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(deviator(&off), off);
    }

    #[test]
    fn matrix_json_is_nested_array() {
        let m = SymMatrix::from_components([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,4.0,5.0],[4.0,2.0,6.0],[5.0,6.0,3.0]]");
        let back: SymMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<SymMatrix>("[[1,2,0],[0,1,0],[0,0,1]]").is_err());
    }
}
