//! Exact rational linear algebra over `BigRational` for the lattice code.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_rational_matrix(m: &[Vec<i64>]) -> Vec<Vec<Q>> {
    m.iter().map(|row| row.iter().map(|&x| q(x)).collect()).collect()
}

/// Determinant by Gaussian elimination over Q.
pub fn determinant(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut det = Q::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in (col + 1)..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &p;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    det
}

/// Inverse of a square rational matrix, `None` when singular.
pub fn inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let p = a[col][col].clone();
        for c in 0..n {
            a[col][c] /= &p;
            inv[col][c] /= &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..n {
                let da = &factor * &a[col][c];
                a[r][c] -= da;
                let di = &factor * &inv[col][c];
                inv[r][c] -= di;
            }
        }
    }
    Some(inv)
}

/// Converts a rational matrix to integers, failing if any entry is fractional
/// or does not fit in `i64`.
pub fn to_integer_matrix(m: &[Vec<Q>]) -> Option<Vec<Vec<i64>>> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|x| if x.is_integer() { x.to_integer().to_i64() } else { None })
                .collect()
        })
        .collect()
}

/// Result of congruence-diagonalizing a symmetric matrix: `basisᵀ · G · basis`
/// is diagonal with entries `diagonal`.
#[derive(Debug, Clone)]
pub struct Diagonalization {
    /// Column vectors (stored as rows here) of the change-of-basis matrix.
    pub basis: Vec<Vec<Q>>,
    pub diagonal: Vec<Q>,
}

impl Diagonalization {
    pub fn positive_count(&self) -> usize {
        self.diagonal.iter().filter(|d| d.is_positive()).count()
    }

    pub fn negative_count(&self) -> usize {
        self.diagonal.iter().filter(|d| d.is_negative()).count()
    }

    /// `|det G|`, the product of the diagonal entries up to sign.
    pub fn abs_determinant(&self) -> Q {
        self.diagonal.iter().fold(Q::one(), |acc, d| acc * d).abs()
    }

    pub fn positive_vectors(&self) -> Vec<Vec<Q>> {
        self.basis
            .iter()
            .zip(&self.diagonal)
            .filter(|(_, d)| d.is_positive())
            .map(|(v, _)| v.clone())
            .collect()
    }
}

/// Symmetric Gaussian elimination over Q.
///
/// Row and column operations are applied in pairs so the form stays congruent
/// to the input. A zero pivot is repaired either by swapping in a later nonzero
/// diagonal entry or, failing that, by adding a basis vector `e_j` with
/// `G[k][j] != 0`, which makes the pivot `2 G[k][j]`.
pub fn congruence_diagonalize(gram: &[Vec<i64>]) -> Diagonalization {
    let n = gram.len();
    let mut a = to_rational_matrix(gram);
    // columns of the change of basis, stored row-wise: cols[k] is the k-th new basis vector
    let mut cols: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();

    for k in 0..n {
        if a[k][k].is_zero() {
            if let Some(j) = ((k + 1)..n).find(|&j| !a[j][j].is_zero()) {
                a.swap(k, j);
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
                cols.swap(k, j);
            } else if let Some(j) = ((k + 1)..n).find(|&j| !a[k][j].is_zero()) {
                // new e_k := e_k + e_j
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[k][c] += v;
                }
                for r in 0..n {
                    let v = a[r][j].clone();
                    a[r][k] += v;
                }
                let vj = cols[j].clone();
                for (x, y) in cols[k].iter_mut().zip(vj) {
                    *x += y;
                }
            } else {
                continue;
            }
        }
        let pivot = a[k][k].clone();
        for i in (k + 1)..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &pivot;
            for c in 0..n {
                let d = &factor * &a[k][c];
                a[i][c] -= d;
            }
            for r in 0..n {
                let d = &factor * &a[r][k];
                a[r][i] -= d;
            }
            let vk = cols[k].clone();
            for (x, y) in cols[i].iter_mut().zip(vk) {
                *x -= &factor * y;
            }
        }
    }

    Diagonalization {
        basis: cols,
        diagonal: (0..n).map(|i| a[i][i].clone()).collect(),
    }
}

/// Evaluates `xᵀ · G · y` for rational vectors against an integer Gram matrix.
pub fn bilinear(gram: &[Vec<i64>], x: &[Q], y: &[Q]) -> Q {
    let mut acc = Q::zero();
    for (i, row) in gram.iter().enumerate() {
        if x[i].is_zero() {
            continue;
        }
        let mut inner = Q::zero();
        for (j, &g) in row.iter().enumerate() {
            if g != 0 && !y[j].is_zero() {
                inner += &y[j] * q(g);
            }
        }
        acc += &x[i] * inner;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_of_hyperbolic_plane() {
        let h = to_rational_matrix(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(determinant(&h), q(-1));
    }

    #[test]
    fn diagonalize_hyperbolic_needs_basis_repair() {
        let d = congruence_diagonalize(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(d.positive_count(), 1);
        assert_eq!(d.negative_count(), 1);
        assert_eq!(d.abs_determinant(), q(1));
        for (i, v) in d.basis.iter().enumerate() {
            for (j, w) in d.basis.iter().enumerate() {
                let val = bilinear(&[vec![0, 1], vec![1, 0]], v, w);
                if i == j {
                    assert_eq!(val, d.diagonal[i]);
                } else {
                    assert!(val.is_zero());
                }
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = to_rational_matrix(&[vec![2, 1], vec![1, 1]]);
        let inv = inverse(&m).unwrap();
        assert_eq!(to_integer_matrix(&inv).unwrap(), vec![vec![1, -1], vec![-1, 2]]);
        assert!(inverse(&to_rational_matrix(&[vec![1, 2], vec![2, 4]])).is_none());
    }
}
