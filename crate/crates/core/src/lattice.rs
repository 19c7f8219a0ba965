//! Integral unimodular lattices: pairings, characteristic vectors, divisibility,
//! automorphisms, `sgn₊` and bounded enumeration of characteristic vectors.
//!
//! Coordinates are `i64`; products are accumulated in `i128` and anything that
//! needs division (signatures, projections) goes through exact rationals.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("gram matrix is not square")]
    NotSquare,
    #[error("gram matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("gram matrix is not unimodular (|det| = {0})")]
    NotUnimodular(String),
    #[error("expected {expected} basis labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("vector has length {got}, lattice rank is {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vectors live on different lattices")]
    ParentMismatch,
    #[error("reflection needs v² in {{±1, ±2}}, got {0}")]
    BadReflection(i64),
    #[error("matrix does not preserve the intersection form")]
    NotAnIsometry,
    #[error("positive subspace basis is invalid: {0}")]
    BadPositiveBasis(String),
}

/// JSON shape of a lattice: Gram matrix flattened row-major plus labels.
#[derive(Serialize, Deserialize)]
struct LatticeJson {
    rank: usize,
    gram: Vec<i64>,
    labels: Vec<String>,
}

/// An integral symmetric unimodular bilinear form with a labelled basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "LatticeJson", try_from = "LatticeJson")]
pub struct IntersectionLattice {
    gram: Vec<Vec<i64>>,
    labels: Vec<String>,
    inverse: Vec<Vec<i64>>,
    b_plus: usize,
    b_minus: usize,
}

impl From<IntersectionLattice> for LatticeJson {
    fn from(l: IntersectionLattice) -> Self {
        LatticeJson {
            rank: l.rank(),
            gram: l.gram.iter().flatten().copied().collect(),
            labels: l.labels,
        }
    }
}

impl TryFrom<LatticeJson> for IntersectionLattice {
    type Error = LatticeError;

    fn try_from(j: LatticeJson) -> Result<Self, Self::Error> {
        if j.gram.len() != j.rank * j.rank {
            return Err(LatticeError::NotSquare);
        }
        let gram = if j.rank == 0 {
            Vec::new()
        } else {
            j.gram.chunks(j.rank).map(<[i64]>::to_vec).collect()
        };
        IntersectionLattice::new(gram, j.labels)
    }
}

impl IntersectionLattice {
    pub fn new(gram: Vec<Vec<i64>>, labels: Vec<String>) -> Result<Self, LatticeError> {
        let n = gram.len();
        if gram.iter().any(|row| row.len() != n) {
            return Err(LatticeError::NotSquare);
        }
        if labels.len() != n {
            return Err(LatticeError::LabelCount { expected: n, got: labels.len() });
        }
        for i in 0..n {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(LatticeError::NotSymmetric(i, j));
                }
            }
        }
        let diag = rational::congruence_diagonalize(&gram);
        let det = diag.abs_determinant();
        if det != rational::q(1) {
            return Err(LatticeError::NotUnimodular(det.to_string()));
        }
        let inverse = rational::inverse(&rational::to_rational_matrix(&gram))
            .and_then(|m| rational::to_integer_matrix(&m))
            .ok_or_else(|| LatticeError::NotUnimodular("singular".into()))?;
        Ok(IntersectionLattice {
            b_plus: diag.positive_count(),
            b_minus: diag.negative_count(),
            gram,
            labels,
            inverse,
        })
    }

    /// The rank-0 lattice, the identity for `⊕`.
    pub fn zero() -> Self {
        IntersectionLattice::new(Vec::new(), Vec::new()).expect("empty form")
    }

    pub fn diagonal(entries: &[i64], labels: &[&str]) -> Result<Self, LatticeError> {
        let n = entries.len();
        let gram = (0..n)
            .map(|i| (0..n).map(|j| if i == j { entries[i] } else { 0 }).collect())
            .collect();
        IntersectionLattice::new(gram, labels.iter().map(|s| s.to_string()).collect())
    }

    /// `Z^{p,q}` = diag(1,…,1,−1,…,−1) with labels `h1…hp, e1…eq`.
    pub fn odd(p: usize, q: usize) -> Self {
        let mut entries = vec![1; p];
        entries.extend(std::iter::repeat_n(-1, q));
        let labels: Vec<String> = (1..=p)
            .map(|i| format!("h{i}"))
            .chain((1..=q).map(|i| format!("e{i}")))
            .collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        IntersectionLattice::diagonal(&entries, &refs).expect("diagonal ±1 form is unimodular")
    }

    /// The hyperbolic plane `H = [[0,1],[1,0]]`.
    pub fn hyperbolic() -> Self {
        IntersectionLattice::new(vec![vec![0, 1], vec![1, 0]], vec!["a".into(), "b".into()])
            .expect("H is unimodular")
    }

    /// Negative definite `−E8`, Gram `−(2I − A)` for the E8 Dynkin diagram.
    pub fn e8_negative() -> Self {
        // chain r1-r2-r3-r4-r5-r6-r7 with r8 attached to r5
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 7)];
        let mut gram = vec![vec![0i64; 8]; 8];
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] = -2;
        }
        for &(a, b) in &edges {
            gram[a][b] = 1;
            gram[b][a] = 1;
        }
        let labels = (1..=8).map(|i| format!("r{i}")).collect();
        IntersectionLattice::new(gram, labels).expect("E8 is unimodular")
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Integer inverse of the Gram matrix.
    pub fn gram_inverse(&self) -> &[Vec<i64>] {
        &self.inverse
    }

    /// `(b₊, b₋)` from exact rational diagonalization.
    pub fn signature(&self) -> (usize, usize) {
        (self.b_plus, self.b_minus)
    }

    pub fn sigma(&self) -> i64 {
        self.b_plus as i64 - self.b_minus as i64
    }

    pub fn is_even(&self) -> bool {
        self.gram.iter().enumerate().all(|(i, row)| row[i] % 2 == 0)
    }

    pub fn with_prefix(&self, prefix: &str) -> Self {
        IntersectionLattice {
            labels: self.labels.iter().map(|l| format!("{prefix}{l}")).collect(),
            ..self.clone()
        }
    }

    /// Block-diagonal sum; labels are concatenated.
    pub fn direct_sum(&self, other: &IntersectionLattice) -> Self {
        let (n, m) = (self.rank(), other.rank());
        let mut gram = vec![vec![0i64; n + m]; n + m];
        let mut inverse = vec![vec![0i64; n + m]; n + m];
        for i in 0..n {
            gram[i][..n].copy_from_slice(&self.gram[i]);
            inverse[i][..n].copy_from_slice(&self.inverse[i]);
        }
        for i in 0..m {
            gram[n + i][n..].copy_from_slice(&other.gram[i]);
            inverse[n + i][n..].copy_from_slice(&other.inverse[i]);
        }
        IntersectionLattice {
            gram,
            labels: self.labels.iter().chain(&other.labels).cloned().collect(),
            inverse,
            b_plus: self.b_plus + other.b_plus,
            b_minus: self.b_minus + other.b_minus,
        }
    }

    /// Same form, ignoring labels.
    pub fn same_form(&self, other: &IntersectionLattice) -> bool {
        self.gram == other.gram
    }

    pub(crate) fn pair_raw(&self, x: &[i64], y: &[i64]) -> i64 {
        let mut acc: i128 = 0;
        for (i, row) in self.gram.iter().enumerate() {
            if x[i] == 0 {
                continue;
            }
            let inner: i128 = row
                .iter()
                .zip(y)
                .filter(|(g, _)| **g != 0)
                .map(|(&g, &v)| g as i128 * v as i128)
                .sum();
            acc += x[i] as i128 * inner;
        }
        i64::try_from(acc).expect("pairing overflows i64")
    }

    /// Mod-2 residue class forced on every coordinate of a characteristic vector.
    ///
    /// `c` is characteristic iff `G c ≡ diag(G) (mod 2)`; `G` is invertible mod 2
    /// because `det G = ±1`, so the residue is unique.
    pub fn characteristic_parity(&self) -> Vec<u8> {
        let n = self.rank();
        // augmented system over F2
        let mut rows: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                let mut r: Vec<u8> = self.gram[i].iter().map(|g| g.rem_euclid(2) as u8).collect();
                r.push(self.gram[i][i].rem_euclid(2) as u8);
                r
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| rows[r][col] == 1)
                .expect("unimodular gram is invertible mod 2");
            rows.swap(col, pivot);
            for r in 0..n {
                if r != col && rows[r][col] == 1 {
                    let pivot_row = rows[col].clone();
                    for (x, y) in rows[r].iter_mut().zip(pivot_row) {
                        *x ^= y;
                    }
                }
            }
        }
        rows.iter().map(|r| r[n]).collect()
    }
}

impl fmt::Display for IntersectionLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lattice(rank {}, signature ({}, {}))", self.rank(), self.b_plus, self.b_minus)
    }
}

/// A vector in a specific lattice.
#[derive(Debug, Clone)]
pub struct LatticeVector {
    coords: Vec<i64>,
    lattice: Arc<IntersectionLattice>,
}

impl PartialEq for LatticeVector {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
            && (Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice == other.lattice)
    }
}

impl Eq for LatticeVector {}

impl LatticeVector {
    pub fn new(lattice: &Arc<IntersectionLattice>, coords: Vec<i64>) -> Result<Self, LatticeError> {
        if coords.len() != lattice.rank() {
            return Err(LatticeError::LengthMismatch { expected: lattice.rank(), got: coords.len() });
        }
        Ok(LatticeVector { coords, lattice: Arc::clone(lattice) })
    }

    pub fn zero(lattice: &Arc<IntersectionLattice>) -> Self {
        LatticeVector { coords: vec![0; lattice.rank()], lattice: Arc::clone(lattice) }
    }

    pub fn basis(lattice: &Arc<IntersectionLattice>, i: usize) -> Self {
        let mut v = LatticeVector::zero(lattice);
        v.coords[i] = 1;
        v
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn lattice(&self) -> &Arc<IntersectionLattice> {
        &self.lattice
    }

    fn check_same(&self, other: &LatticeVector) -> Result<(), LatticeError> {
        if Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice == other.lattice {
            Ok(())
        } else {
            Err(LatticeError::ParentMismatch)
        }
    }

    pub fn pair(&self, other: &LatticeVector) -> Result<i64, LatticeError> {
        self.check_same(other)?;
        Ok(self.lattice.pair_raw(&self.coords, &other.coords))
    }

    pub fn square(&self) -> i64 {
        self.lattice.pair_raw(&self.coords, &self.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn scale(&self, k: i64) -> LatticeVector {
        LatticeVector {
            coords: self.coords.iter().map(|&c| c * k).collect(),
            lattice: Arc::clone(&self.lattice),
        }
    }

    pub fn add(&self, other: &LatticeVector) -> Result<LatticeVector, LatticeError> {
        self.check_same(other)?;
        Ok(LatticeVector {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
            lattice: Arc::clone(&self.lattice),
        })
    }

    pub fn sub(&self, other: &LatticeVector) -> Result<LatticeVector, LatticeError> {
        self.add(&other.scale(-1))
    }

    pub fn neg(&self) -> LatticeVector {
        self.scale(-1)
    }

    /// Reinterprets the coordinates in another lattice carrying the same form.
    pub fn rebase(&self, lattice: &Arc<IntersectionLattice>) -> Result<LatticeVector, LatticeError> {
        if !self.lattice.same_form(lattice) {
            return Err(LatticeError::ParentMismatch);
        }
        LatticeVector::new(lattice, self.coords.clone())
    }

    /// `c·x ≡ x·x (mod 2)` for every basis vector `x`.
    pub fn is_characteristic(&self) -> bool {
        let g = self.lattice.gram();
        (0..self.coords.len()).all(|i| {
            let cx: i128 = g[i].iter().zip(&self.coords).map(|(&a, &b)| a as i128 * b as i128).sum();
            (cx - g[i][i] as i128).rem_euclid(2) == 0
        })
    }

    /// gcd of the coordinates; 0 for the zero vector.
    pub fn divisibility(&self) -> u64 {
        self.coords.iter().fold(0u64, |acc, &c| acc.gcd(&c.unsigned_abs()))
    }

    pub fn is_primitive(&self) -> bool {
        self.divisibility() == 1
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `x − (2(x·v)/v²)·v`, defined for `v² ∈ {±1, ±2}`.
pub fn reflect(v: &LatticeVector, x: &LatticeVector) -> Result<LatticeVector, LatticeError> {
    let v2 = v.square();
    if !matches!(v2, -2 | -1 | 1 | 2) {
        return Err(LatticeError::BadReflection(v2));
    }
    let xv = x.pair(v)?;
    let coeff = 2 * xv / v2;
    x.sub(&v.scale(coeff))
}

/// A form-preserving integer matrix acting on coordinate column vectors.
#[derive(Debug, Clone)]
pub struct LatticeAutomorphism {
    matrix: Vec<Vec<i64>>,
    lattice: Arc<IntersectionLattice>,
}

impl PartialEq for LatticeAutomorphism {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.lattice.same_form(&other.lattice)
    }
}

impl Eq for LatticeAutomorphism {}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let m = if b.is_empty() { 0 } else { b[0].len() };
    let mut out = vec![vec![0i64; m]; n];
    for i in 0..n {
        for j in 0..m {
            let s: i128 = (0..b.len()).map(|k| a[i][k] as i128 * b[k][j] as i128).sum();
            out[i][j] = i64::try_from(s).expect("matrix entry overflows i64");
        }
    }
    out
}

fn transpose(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

impl LatticeAutomorphism {
    pub fn new(lattice: &Arc<IntersectionLattice>, matrix: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let n = lattice.rank();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(LatticeError::LengthMismatch { expected: n, got: matrix.len() });
        }
        let g = lattice.gram();
        if mat_mul(&mat_mul(&transpose(&matrix), g), &matrix) != g {
            return Err(LatticeError::NotAnIsometry);
        }
        Ok(LatticeAutomorphism { matrix, lattice: Arc::clone(lattice) })
    }

    pub fn identity(lattice: &Arc<IntersectionLattice>) -> Self {
        let n = lattice.rank();
        let matrix = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        LatticeAutomorphism { matrix, lattice: Arc::clone(lattice) }
    }

    pub fn reflection(v: &LatticeVector) -> Result<Self, LatticeError> {
        let lattice = v.lattice();
        let n = lattice.rank();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            cols.push(reflect(v, &LatticeVector::basis(lattice, j))?.coords);
        }
        Ok(LatticeAutomorphism { matrix: transpose(&cols), lattice: Arc::clone(lattice) })
    }

    /// Block sum `a ⊕ b` on the direct-sum lattice `target`.
    pub fn block_sum(
        a: &LatticeAutomorphism,
        b: &LatticeAutomorphism,
        target: &Arc<IntersectionLattice>,
    ) -> Result<Self, LatticeError> {
        let (n, m) = (a.matrix.len(), b.matrix.len());
        let mut matrix = vec![vec![0i64; n + m]; n + m];
        for i in 0..n {
            matrix[i][..n].copy_from_slice(&a.matrix[i]);
        }
        for i in 0..m {
            matrix[n + i][n..].copy_from_slice(&b.matrix[i]);
        }
        LatticeAutomorphism::new(target, matrix)
    }

    /// Transports the matrix to another lattice with the same form.
    pub fn rebase(&self, lattice: &Arc<IntersectionLattice>) -> Result<Self, LatticeError> {
        if !self.lattice.same_form(lattice) {
            return Err(LatticeError::ParentMismatch);
        }
        Ok(LatticeAutomorphism { matrix: self.matrix.clone(), lattice: Arc::clone(lattice) })
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn lattice(&self) -> &Arc<IntersectionLattice> {
        &self.lattice
    }

    pub fn is_identity(&self) -> bool {
        self.matrix
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &x)| x == i64::from(i == j)))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LatticeAutomorphism) -> Result<Self, LatticeError> {
        if !self.lattice.same_form(&other.lattice) {
            return Err(LatticeError::ParentMismatch);
        }
        Ok(LatticeAutomorphism {
            matrix: mat_mul(&self.matrix, &other.matrix),
            lattice: Arc::clone(&self.lattice),
        })
    }

    /// `G⁻¹ Mᵀ G`, integral because the form is unimodular.
    pub fn inverse(&self) -> Self {
        let g = self.lattice.gram();
        let matrix = mat_mul(&mat_mul(self.lattice.gram_inverse(), &transpose(&self.matrix)), g);
        LatticeAutomorphism { matrix, lattice: Arc::clone(&self.lattice) }
    }

    pub fn apply(&self, v: &LatticeVector) -> Result<LatticeVector, LatticeError> {
        if !self.lattice.same_form(v.lattice()) {
            return Err(LatticeError::ParentMismatch);
        }
        let coords = self
            .matrix
            .iter()
            .map(|row| {
                let s: i128 = row.iter().zip(v.coords()).map(|(&a, &b)| a as i128 * b as i128).sum();
                i64::try_from(s).expect("image coordinate overflows i64")
            })
            .collect();
        LatticeVector::new(v.lattice(), coords)
    }

    pub fn determinant(&self) -> i64 {
        let d = rational::determinant(&rational::to_rational_matrix(&self.matrix));
        if d == rational::q(1) {
            1
        } else if d == rational::q(-1) {
            -1
        } else {
            unreachable!("form-preserving matrix has det ±1")
        }
    }
}

/// Rational basis of a maximal positive definite subspace.
#[derive(Debug, Clone)]
pub struct PositiveSubspaceBasis {
    vectors: Vec<Vec<Q>>,
}

impl PositiveSubspaceBasis {
    pub fn new(lattice: &IntersectionLattice, vectors: Vec<Vec<Q>>) -> Result<Self, LatticeError> {
        let (b_plus, _) = lattice.signature();
        if vectors.len() != b_plus {
            return Err(LatticeError::BadPositiveBasis(format!(
                "expected {b_plus} vectors, got {}",
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| v.len() != lattice.rank()) {
            return Err(LatticeError::BadPositiveBasis("wrong vector length".into()));
        }
        // Sylvester's criterion on the Gram matrix of the vectors
        let gram_p: Vec<Vec<Q>> = vectors
            .iter()
            .map(|x| vectors.iter().map(|y| rational::bilinear(lattice.gram(), x, y)).collect())
            .collect();
        for k in 1..=gram_p.len() {
            let minor: Vec<Vec<Q>> = gram_p[..k].iter().map(|r| r[..k].to_vec()).collect();
            if !rational::determinant(&minor).is_positive() {
                return Err(LatticeError::BadPositiveBasis("not positive definite".into()));
            }
        }
        Ok(PositiveSubspaceBasis { vectors })
    }

    /// Positive directions of the congruence diagonalization of the Gram matrix.
    pub fn from_diagonalization(lattice: &IntersectionLattice) -> Self {
        let diag = rational::congruence_diagonalize(lattice.gram());
        PositiveSubspaceBasis { vectors: diag.positive_vectors() }
    }

    pub fn vectors(&self) -> &[Vec<Q>] {
        &self.vectors
    }

    /// Image `φ(P)`, again a positive basis.
    pub fn transformed(&self, phi: &LatticeAutomorphism) -> Self {
        let m = phi.matrix();
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                m.iter()
                    .map(|row| {
                        row.iter()
                            .zip(v)
                            .filter(|(a, _)| **a != 0)
                            .fold(Q::zero(), |acc, (&a, x)| acc + x * rational::q(a))
                    })
                    .collect()
            })
            .collect();
        PositiveSubspaceBasis { vectors }
    }
}

/// Whether `φ` preserves (+1) or swaps (−1) the orientation classes of maximal
/// positive subspaces.
///
/// The matrix of `ρ_P ∘ φ|_P` in the basis `P` is `G_P⁻¹ · (Pᵀ G φ P)` with
/// `G_P` positive definite, so its determinant has the sign of `det(Pᵀ G φ P)`.
pub fn sgn_plus(phi: &LatticeAutomorphism, basis: &PositiveSubspaceBasis) -> i8 {
    let g = phi.lattice().gram();
    let images = basis.transformed(phi);
    let m: Vec<Vec<Q>> = basis
        .vectors()
        .iter()
        .map(|x| images.vectors().iter().map(|y| rational::bilinear(g, x, y)).collect())
        .collect();
    let det = rational::determinant(&m);
    if det.is_positive() {
        1
    } else if det.is_negative() {
        -1
    } else {
        unreachable!("positive subspace meets its negative complement trivially")
    }
}

/// `sgn₊` against the default diagonalization basis.
pub fn sgn_plus_default(phi: &LatticeAutomorphism) -> i8 {
    sgn_plus(phi, &PositiveSubspaceBasis::from_diagonalization(phi.lattice()))
}

/// Deterministic word of reflections in pseudo-random vectors of square ±1 or ±2.
pub fn random_automorphism(
    lattice: &Arc<IntersectionLattice>,
    seed: u64,
    word_length: usize,
) -> LatticeAutomorphism {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = LatticeAutomorphism::identity(lattice);
    let n = lattice.rank();
    if n == 0 {
        return acc;
    }
    for _ in 0..word_length {
        // sparse ±1 vectors; retried until the square is ±1 or ±2
        for _attempt in 0..10_000 {
            let support = rng.gen_range(1..=n.min(3));
            let mut coords = vec![0i64; n];
            for _ in 0..support {
                let i = rng.gen_range(0..n);
                coords[i] = if rng.gen_bool(0.5) { 1 } else { -1 };
            }
            let v = LatticeVector::new(lattice, coords).expect("length matches");
            if let Ok(r) = LatticeAutomorphism::reflection(&v) {
                acc = r.compose(&acc).expect("same lattice");
                break;
            }
        }
    }
    acc
}

/// Contiguous index ranges with no Gram entries crossing between them.
fn orthogonal_blocks(gram: &[Vec<i64>]) -> Vec<(usize, usize)> {
    let n = gram.len();
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut reach = 0;
    for i in 0..n {
        let last_nonzero = (0..n).rev().find(|&j| gram[i][j] != 0).unwrap_or(i);
        reach = reach.max(last_nonzero).max(i);
        if reach == i {
            blocks.push((start, i + 1));
            start = i + 1;
        }
    }
    blocks
}

struct Block {
    start: usize,
    // vectors of the block in lexicographic order, with their squares
    vectors: Vec<(Vec<i64>, i64)>,
}

fn block_vectors(gram: &[Vec<i64>], start: usize, end: usize, parity: &[u8], bound: i64) -> Vec<(Vec<i64>, i64)> {
    let width = end - start;
    let choices: Vec<Vec<i64>> = (start..end)
        .map(|i| (-bound..=bound).filter(|x| x.rem_euclid(2) as u8 == parity[i]).collect())
        .collect();
    if choices.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; width];
    loop {
        let v: Vec<i64> = idx.iter().enumerate().map(|(k, &c)| choices[k][c]).collect();
        let mut sq: i64 = 0;
        for a in 0..width {
            if v[a] == 0 {
                continue;
            }
            for b in 0..width {
                sq += v[a] * gram[start + a][start + b] * v[b];
            }
        }
        out.push((v, sq));
        // odometer, last coordinate fastest
        let mut k = width;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// All characteristic `c` with `c² = square` and `|c_i| ≤ bound`, in
/// lexicographic order of coordinates.
pub fn enumerate_characteristics(
    lattice: &Arc<IntersectionLattice>,
    square: i64,
    bound: i64,
) -> Vec<LatticeVector> {
    let n = lattice.rank();
    if bound < 0 {
        return Vec::new();
    }
    if n == 0 {
        return if square == 0 { vec![LatticeVector::zero(lattice)] } else { Vec::new() };
    }
    let parity = lattice.characteristic_parity();
    let gram = lattice.gram();
    let blocks: Vec<Block> = orthogonal_blocks(gram)
        .into_iter()
        .map(|(s, e)| Block { start: s, vectors: block_vectors(gram, s, e, &parity, bound) })
        .collect();
    if blocks.iter().any(|b| b.vectors.is_empty()) {
        return Vec::new();
    }
    // reach[i] = squares attainable by blocks i..
    let mut reach: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); blocks.len() + 1];
    reach[blocks.len()].insert(0);
    for i in (0..blocks.len()).rev() {
        let squares: BTreeSet<i64> = blocks[i].vectors.iter().map(|(_, s)| *s).collect();
        let mut r = BTreeSet::new();
        for s in &squares {
            for t in &reach[i + 1] {
                r.insert(s + t);
            }
        }
        reach[i] = r;
    }

    let mut out = Vec::new();
    let mut current = vec![0i64; n];
    fn recurse(
        i: usize,
        target: i64,
        blocks: &[Block],
        reach: &[BTreeSet<i64>],
        current: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if i == blocks.len() {
            if target == 0 {
                out.push(current.clone());
            }
            return;
        }
        if !reach[i].contains(&target) {
            return;
        }
        let block = &blocks[i];
        for (v, sq) in &block.vectors {
            if reach[i + 1].contains(&(target - sq)) {
                current[block.start..block.start + v.len()].copy_from_slice(v);
                recurse(i + 1, target - sq, blocks, reach, current, out);
            }
        }
    }
    let mut raw = Vec::new();
    recurse(0, square, &blocks, &reach, &mut current, &mut raw);
    for coords in raw {
        out.push(LatticeVector::new(lattice, coords).expect("length matches"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(l: IntersectionLattice) -> Arc<IntersectionLattice> {
        Arc::new(l)
    }

    fn brute_force_characteristics(l: &Arc<IntersectionLattice>, square: i64, bound: i64) -> Vec<Vec<i64>> {
        let n = l.rank();
        let mut out = Vec::new();
        let mut v = vec![-bound; n];
        if n == 0 {
            return vec![vec![]];
        }
        loop {
            let lv = LatticeVector::new(l, v.clone()).unwrap();
            if lv.is_characteristic() && lv.square() == square {
                out.push(v.clone());
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                v[k] += 1;
                if v[k] <= bound {
                    break;
                }
                v[k] = -bound;
            }
        }
    }

    #[test]
    fn pairing_examples() {
        let z11 = arc(IntersectionLattice::odd(1, 1));
        let h = LatticeVector::new(&z11, vec![1, 0]).unwrap();
        assert_eq!(h.pair(&h).unwrap(), 1);

        let hyp = arc(IntersectionLattice::hyperbolic());
        let v = LatticeVector::new(&hyp, vec![1, 1]).unwrap();
        assert_eq!(v.square(), 2);

        let z19 = arc(IntersectionLattice::odd(1, 9));
        let mut c = vec![-1; 10];
        c[0] = 3;
        let f = LatticeVector::new(&z19, c).unwrap();
        assert_eq!(f.square(), 0);
        assert!(f.is_characteristic());
        assert_eq!(f.divisibility(), 1);
        assert_eq!(f.scale(3).divisibility(), 3);
        assert_eq!(LatticeVector::zero(&z19).divisibility(), 0);
    }

    #[test]
    fn pair_rejects_foreign_vectors() {
        let a = arc(IntersectionLattice::odd(1, 1));
        let b = arc(IntersectionLattice::hyperbolic());
        let x = LatticeVector::zero(&a);
        let y = LatticeVector::zero(&b);
        assert_eq!(x.pair(&y), Err(LatticeError::ParentMismatch));
    }

    #[test]
    fn characteristic_examples() {
        let z11 = arc(IntersectionLattice::odd(1, 1));
        assert!(!LatticeVector::zero(&z11).is_characteristic());
        let hyp = arc(IntersectionLattice::hyperbolic());
        assert!(LatticeVector::zero(&hyp).is_characteristic());
        assert_eq!(hyp.characteristic_parity(), vec![0, 0]);
        assert_eq!(z11.characteristic_parity(), vec![1, 1]);
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(matches!(
            IntersectionLattice::new(vec![vec![2]], vec!["x".into()]),
            Err(LatticeError::NotUnimodular(_))
        ));
        assert!(matches!(
            IntersectionLattice::new(vec![vec![1, 1], vec![0, 1]], vec!["x".into(), "y".into()]),
            Err(LatticeError::NotSymmetric(1, 0))
        ));
    }

    #[test]
    fn direct_sum_signatures() {
        let l = IntersectionLattice::odd(1, 9).direct_sum(&IntersectionLattice::hyperbolic());
        assert_eq!(l.rank(), 12);
        assert_eq!(l.signature(), (2, 10));
        let z = IntersectionLattice::odd(1, 9);
        assert_eq!(z.direct_sum(&IntersectionLattice::zero()), z);
        let a = IntersectionLattice::diagonal(&[1], &["h"]).unwrap();
        let b = IntersectionLattice::diagonal(&[-1], &["e"]).unwrap();
        assert_eq!(a.direct_sum(&b).gram(), IntersectionLattice::odd(1, 1).gram());
        assert_eq!(IntersectionLattice::e8_negative().signature(), (0, 8));
        assert!(IntersectionLattice::e8_negative().is_even());
    }

    #[test]
    fn reflection_examples() {
        let z11 = arc(IntersectionLattice::odd(1, 1));
        let h = LatticeVector::basis(&z11, 0);
        let e = LatticeVector::basis(&z11, 1);
        assert_eq!(reflect(&h, &h).unwrap(), h.neg());
        assert_eq!(reflect(&h, &e).unwrap(), e);

        let hyp = arc(IntersectionLattice::hyperbolic());
        let v = LatticeVector::new(&hyp, vec![1, 1]).unwrap();
        let x = LatticeVector::new(&hyp, vec![1, 0]).unwrap();
        assert_eq!(reflect(&v, &x).unwrap().coords(), &[0, -1]);

        let bad = LatticeVector::new(&z11, vec![2, 0]).unwrap();
        assert_eq!(reflect(&bad, &x.rebase(&hyp).unwrap()).unwrap_err(), LatticeError::BadReflection(4));
    }

    #[test]
    fn automorphism_inverse_and_identity() {
        let l = arc(IntersectionLattice::odd(1, 9).direct_sum(&IntersectionLattice::hyperbolic()));
        assert!(random_automorphism(&l, 7, 0).is_identity());
        let phi = random_automorphism(&l, 7, 6);
        assert!(LatticeAutomorphism::new(&l, phi.matrix().to_vec()).is_ok());
        assert!(phi.compose(&phi.inverse()).unwrap().is_identity());
        assert_eq!(phi.determinant().abs(), 1);
    }

    #[test]
    fn sgn_plus_examples() {
        let hyp = arc(IntersectionLattice::hyperbolic());
        let id = LatticeAutomorphism::identity(&hyp);
        assert_eq!(sgn_plus_default(&id), 1);
        let minus = LatticeAutomorphism::new(&hyp, vec![vec![-1, 0], vec![0, -1]]).unwrap();
        assert_eq!(sgn_plus_default(&minus), -1);
        // swapping a and b fixes a+b, so it preserves the positive direction
        let swap = LatticeAutomorphism::new(&hyp, vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(sgn_plus_default(&swap), 1);
    }

    #[test]
    fn positive_basis_validation() {
        let l = IntersectionLattice::odd(1, 1);
        let bad = vec![vec![rational::q(0), rational::q(1)]];
        assert!(PositiveSubspaceBasis::new(&l, bad).is_err());
        let good = vec![vec![rational::q(2), rational::q(1)]];
        assert!(PositiveSubspaceBasis::new(&l, good).is_ok());
    }

    #[test]
    fn enumeration_examples() {
        let z11 = arc(IntersectionLattice::odd(1, 1));
        let found: Vec<Vec<i64>> = enumerate_characteristics(&z11, 0, 3)
            .iter()
            .map(|v| v.coords().to_vec())
            .collect();
        assert_eq!(found.len(), 8);
        assert_eq!(found, brute_force_characteristics(&z11, 0, 3));
        assert!(enumerate_characteristics(&z11, 0, 0).is_empty());

        let hh = arc(IntersectionLattice::hyperbolic().direct_sum(&IntersectionLattice::hyperbolic()));
        for sq in [-3, 1, 5] {
            assert!(enumerate_characteristics(&hh, sq, 4).is_empty());
        }
    }

    #[test]
    fn enumeration_matches_brute_force_on_mixed_blocks() {
        let lattices = vec![
            IntersectionLattice::odd(2, 2),
            IntersectionLattice::hyperbolic().direct_sum(&IntersectionLattice::odd(1, 1)),
            IntersectionLattice::odd(1, 0).direct_sum(&IntersectionLattice::hyperbolic()).direct_sum(&IntersectionLattice::odd(0, 1)),
        ];
        for l in lattices {
            let l = arc(l);
            for sq in -6..=6 {
                let fast: Vec<Vec<i64>> =
                    enumerate_characteristics(&l, sq, 3).iter().map(|v| v.coords().to_vec()).collect();
                assert_eq!(fast, brute_force_characteristics(&l, sq, 3), "square {sq}");
            }
        }
    }

    #[test]
    fn blocks_split_on_direct_sums() {
        let l = IntersectionLattice::odd(1, 0)
            .direct_sum(&IntersectionLattice::hyperbolic())
            .direct_sum(&IntersectionLattice::e8_negative());
        assert_eq!(orthogonal_blocks(l.gram()), vec![(0, 1), (1, 3), (3, 11)]);
    }

    #[test]
    fn json_roundtrip() {
        let l = IntersectionLattice::odd(1, 2).direct_sum(&IntersectionLattice::hyperbolic());
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.contains("\"gram\":[1,0,0,0,0"));
        let back: IntersectionLattice = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<IntersectionLattice>(r#"{"rank":1,"gram":[2],"labels":["x"]}"#).is_err());
    }
}
