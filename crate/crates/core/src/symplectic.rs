//! The symplectic matrix J, exact integer matrices, symplectic-ness checks,
//! seeded generation of integer symplectic matrices, and the group action on
//! numeric tensors. Together these form the numeric invariance oracle.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{NumericTensor, TensorSize};

/// Entry `(i, j)` of the block matrix `(0, I_N; -I_N, 0)`:
/// `+1` when `j = i + N`, `-1` when `i = j + N`, `0` otherwise.
pub fn j_entry(i: u32, j: u32, size: TensorSize) -> i8 {
    let s = size.s();
    assert!(i < s && j < s, "J index out of range");
    let n = size.half();
    if j == i + n {
        1
    } else if i == j + n {
        -1
    } else {
        0
    }
}

/// Dense square matrix of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: alloc::vec![BigInt::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, BigInt::from(1));
        }
        m
    }

    /// The symplectic matrix J for the given size.
    pub fn j(size: TensorSize) -> Self {
        let s = size.s() as usize;
        let mut m = IntMatrix::zeros(s);
        for i in 0..s {
            for j in 0..s {
                let e = j_entry(i as u32, j as u32, size);
                if e != 0 {
                    m.set(i, j, BigInt::from(e));
                }
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[i64]]) -> Self {
        let n = rows.len();
        let mut m = IntMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(v));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMatrix {
        let n = self.n;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn scaled(&self, c: i64) -> IntMatrix {
        IntMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// Exact check that `K J K^T = J` and `K^T J K = J`.
pub fn verify_symplectic(k: &IntMatrix, size: TensorSize) -> bool {
    if k.dim() != size.s() as usize {
        return false;
    }
    let j = IntMatrix::j(size);
    let kt = k.transpose();
    k.mul(&j).mul(&kt) == j && kt.mul(&j).mul(k) == j
}

/// Builds a seeded integer symplectic matrix as a short random product of
/// elementary generators, each exactly symplectic:
///
/// - J itself;
/// - shears `(I, B; 0, I)` and `(I, 0; B, I)` with `B` symmetric;
/// - block-unimodular `(A, 0; 0, (A^T)^-1)` with `A` an elementary
///   transvection (so the inverse transpose is again integral);
/// - block permutations `(P, 0; 0, P)`.
pub fn make_test_symplectic(size: TensorSize, seed: u64) -> IntMatrix {
    let s = size.s() as usize;
    let n = size.half() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = IntMatrix::identity(s);
    let len = rng.random_range(1..=8u32);
    for _ in 0..len {
        let g = match rng.random_range(0..4u32) {
            0 => IntMatrix::j(size),
            1 | 2 => {
                // Random symmetric B with small entries, placed in the upper
                // or lower off-diagonal block.
                let mut b = IntMatrix::zeros(n);
                for i in 0..n {
                    for j in i..n {
                        let v = BigInt::from(rng.random_range(-2i64..=2));
                        b.set(i, j, v.clone());
                        b.set(j, i, v);
                    }
                }
                let upper = rng.random_range(0..2u32) == 0;
                let mut g = IntMatrix::identity(s);
                for i in 0..n {
                    for j in 0..n {
                        if upper {
                            g.set(i, n + j, b.get(i, j).clone());
                        } else {
                            g.set(n + i, j, b.get(i, j).clone());
                        }
                    }
                }
                g
            }
            _ => {
                if n == 1 || rng.random_range(0..2u32) == 0 {
                    // Block sign/permutation: (P, 0; 0, P) for a permutation P.
                    let mut perm: Vec<usize> = (0..n).collect();
                    for i in (1..n).rev() {
                        let j = rng.random_range(0..=i as u32) as usize;
                        perm.swap(i, j);
                    }
                    let mut g = IntMatrix::zeros(s);
                    for (i, &p) in perm.iter().enumerate() {
                        g.set(i, p, BigInt::from(1));
                        g.set(n + i, n + p, BigInt::from(1));
                    }
                    g
                } else {
                    // (A, 0; 0, (A^T)^-1) with A = I + c*E_{ij}, i != j, so
                    // (A^T)^-1 = I - c*E_{ji}.
                    let i = rng.random_range(0..n as u32) as usize;
                    let j = loop {
                        let j = rng.random_range(0..n as u32) as usize;
                        if j != i {
                            break j;
                        }
                    };
                    let c = *[-2i64, -1, 1, 2]
                        .get(rng.random_range(0..4u32) as usize)
                        .unwrap();
                    let mut g = IntMatrix::identity(s);
                    g.set(i, j, BigInt::from(c));
                    g.set(n + j, n + i, BigInt::from(-c));
                    g
                }
            }
        };
        k = k.mul(&g);
    }
    debug_assert!(verify_symplectic(&k, size));
    k
}

/// Applies the same matrix to every index slot:
/// `T'[q1][q2][q3] = sum K[q1][p1] K[q2][p2] K[q3][p3] T[p1][p2][p3]`.
///
/// Panics if `K` is not symplectic for the tensor's size.
pub fn symplectic_transform(t: &NumericTensor, k: &IntMatrix) -> NumericTensor {
    let size = t.size();
    assert!(
        verify_symplectic(k, size),
        "transform matrix is not symplectic"
    );
    let s = size.s();
    let mut out = NumericTensor::zeros(size);
    for q1 in 0..s {
        for q2 in 0..s {
            for q3 in 0..s {
                let mut acc = BigInt::ZERO;
                for p1 in 0..s {
                    let k1 = k.get(q1 as usize, p1 as usize);
                    if k1.is_zero() {
                        continue;
                    }
                    for p2 in 0..s {
                        let k2 = k.get(q2 as usize, p2 as usize);
                        if k2.is_zero() {
                            continue;
                        }
                        let k12 = k1 * k2;
                        for p3 in 0..s {
                            let k3 = k.get(q3 as usize, p3 as usize);
                            if k3.is_zero() {
                                continue;
                            }
                            acc += &k12 * k3 * t.get(p1, p2, p3);
                        }
                    }
                }
                out.set(q1, q2, q3, acc);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(s: u32) -> TensorSize {
        TensorSize::new(s).unwrap()
    }

    #[test]
    fn j_block_structure_at_size_2() {
        let sz = size(2);
        assert_eq!(j_entry(0, 1, sz), 1);
        assert_eq!(j_entry(1, 0, sz), -1);
        assert_eq!(j_entry(0, 0, sz), 0);
        assert_eq!(j_entry(1, 1, sz), 0);
    }

    #[test]
    fn j_squared_is_minus_identity() {
        for s in [2u32, 4, 8] {
            let sz = size(s);
            let j = IntMatrix::j(sz);
            assert_eq!(j.mul(&j), IntMatrix::identity(s as usize).scaled(-1));
        }
    }

    #[test]
    fn identity_and_j_are_symplectic_but_2i_is_not() {
        for s in [2u32, 4] {
            let sz = size(s);
            assert!(verify_symplectic(&IntMatrix::identity(s as usize), sz));
            assert!(verify_symplectic(&IntMatrix::j(sz), sz));
            assert!(!verify_symplectic(
                &IntMatrix::identity(s as usize).scaled(2),
                sz
            ));
        }
    }

    #[test]
    fn shear_example_is_symplectic() {
        let sz = size(2);
        let k = IntMatrix::from_rows(&[&[1, 1], &[0, 1]]);
        assert!(verify_symplectic(&k, sz));
    }

    #[test]
    fn generated_matrices_are_symplectic() {
        for s in [2u32, 4, 6] {
            let sz = size(s);
            for seed in 0..20 {
                let k = make_test_symplectic(sz, seed);
                assert!(verify_symplectic(&k, sz), "seed {seed} size {s}");
            }
        }
    }

    #[test]
    fn transform_by_identity_is_identity() {
        let sz = size(4);
        let t = NumericTensor::random(sz, 5, 9);
        let id = IntMatrix::identity(4);
        assert_eq!(symplectic_transform(&t, &id), t);
    }

    #[test]
    #[should_panic(expected = "not symplectic")]
    fn transform_rejects_non_symplectic() {
        let sz = size(2);
        let t = NumericTensor::zeros(sz);
        let bad = IntMatrix::identity(2).scaled(2);
        symplectic_transform(&t, &bad);
    }
}
