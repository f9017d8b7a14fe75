//! The degree-4 invariant of a rank-3 symbolic tensor under the symplectic
//! group: four tensor copies contracted pairwise through J over the complete
//! graph on four vertices.
//!
//! Two independent evaluations are provided. [`invariant_naive`] walks all
//! twelve contraction indices directly (short-circuiting zero J factors, so
//! the effective work is `O(S^6)`). [`invariant_optimized`] exploits the
//! block structure of J: every surviving index assignment pairs a low index
//! with its high partner, which collapses the sum to six loops over `[0, N)`
//! and, after quotienting by the symmetries of the contraction pattern, to
//! the 16 signed sub-sums tabulated in [`SUB_SUMS`], each scaled by 4.
//!
//! [`inner_block`] computes the optimized sum restricted to a set of outer
//! loop triples; summing it over any partition of the full triple space
//! reproduces [`invariant_optimized`]. That additivity is what every
//! parallel execution scheme relies on.

use alloc::vec::Vec;

use crate::poly::{Coefficient, Monomial, Polynomial, VariableId};
use crate::symplectic::j_entry;
use crate::tensor::{SymbolicTensor, TensorSize};

/// Coordinates of the three outer loops of the optimized evaluation, each in
/// `[0, N)`. The fields are named after the contraction slots they range
/// over; their lexicographic enumeration (a4-major) is the canonical work
/// order for parallel distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexTriple {
    pub a4: u32,
    pub a2: u32,
    pub a6: u32,
}

/// Total number of outer triples, `N^3`.
pub fn triple_count(size: TensorSize) -> u64 {
    let n = size.half() as u64;
    n * n * n
}

/// The triple at a given position in the lexicographic (a4, a2, a6) order.
pub fn triple_at(size: TensorSize, index: u64) -> IndexTriple {
    let n = size.half() as u64;
    assert!(index < n * n * n, "triple index out of range");
    IndexTriple {
        a4: (index / (n * n)) as u32,
        a2: ((index / n) % n) as u32,
        a6: (index % n) as u32,
    }
}

/// The contiguous run of `count` triples starting at linear index `start`.
pub fn triples_in_range(size: TensorSize, start: u64, count: u64) -> Vec<IndexTriple> {
    (start..start + count).map(|i| triple_at(size, i)).collect()
}

/// One sub-sum of the optimized evaluation.
///
/// Every sub-sum accumulates, over the six loop variables, the product
/// `T[.4][.2][.6] * T[.1][.5][.6] * T[.1][.2][.3] * T[.4][.5][.3]` where each
/// position independently takes the low copy (`a`) or the high copy (`a + N`)
/// of its loop variable, as recorded in `hi[entry][position]`.
#[derive(Debug, Clone, Copy)]
pub struct SubSum {
    pub sign: i8,
    pub hi: [[bool; 3]; 4],
}

/// Which loop variable each of the twelve positions ranges over.
const ENTRY_SLOTS: [[usize; 3]; 4] = [[4, 2, 6], [1, 5, 6], [1, 2, 3], [4, 5, 3]];

const LO: bool = false;
const HI: bool = true;

/// The 16 sub-sums, one representative per symmetry class of the 64 block
/// combinations, with the sign each contributes to the final combination.
pub const SUB_SUMS: [SubSum; 16] = [
    SubSum { sign: 1,  hi: [[HI, HI, LO], [HI, HI, HI], [LO, LO, LO], [LO, LO, HI]] },
    SubSum { sign: -1, hi: [[LO, LO, HI], [HI, LO, LO], [LO, HI, HI], [HI, HI, LO]] },
    SubSum { sign: -1, hi: [[LO, HI, HI], [LO, LO, LO], [HI, LO, HI], [HI, HI, LO]] },
    SubSum { sign: -1, hi: [[LO, LO, HI], [LO, LO, LO], [HI, HI, LO], [HI, HI, HI]] },
    SubSum { sign: -1, hi: [[HI, LO, HI], [LO, LO, LO], [HI, HI, HI], [LO, HI, LO]] },
    SubSum { sign: -1, hi: [[LO, LO, HI], [LO, HI, LO], [HI, HI, HI], [HI, LO, LO]] },
    SubSum { sign: 1,  hi: [[LO, HI, HI], [HI, LO, LO], [LO, LO, HI], [HI, HI, LO]] },
    SubSum { sign: 1,  hi: [[LO, LO, HI], [HI, LO, LO], [LO, HI, LO], [HI, HI, HI]] },
    SubSum { sign: 1,  hi: [[HI, LO, HI], [HI, LO, LO], [LO, HI, HI], [LO, HI, LO]] },
    SubSum { sign: 1,  hi: [[LO, LO, LO], [HI, LO, HI], [LO, HI, HI], [HI, HI, LO]] },
    SubSum { sign: 1,  hi: [[LO, HI, HI], [LO, LO, LO], [HI, LO, LO], [HI, HI, HI]] },
    SubSum { sign: 1,  hi: [[HI, HI, HI], [LO, LO, LO], [HI, LO, HI], [LO, HI, LO]] },
    SubSum { sign: 1,  hi: [[LO, HI, LO], [LO, LO, HI], [HI, LO, HI], [HI, HI, LO]] },
    SubSum { sign: -1, hi: [[LO, HI, HI], [HI, LO, LO], [LO, LO, LO], [HI, HI, HI]] },
    SubSum { sign: -1, hi: [[LO, HI, LO], [HI, LO, HI], [LO, LO, HI], [HI, HI, LO]] },
    SubSum { sign: -1, hi: [[HI, LO, HI], [HI, LO, LO], [LO, HI, LO], [LO, HI, HI]] },
];

fn inner_block_impl(
    size: TensorSize,
    triples: impl IntoIterator<Item = IndexTriple>,
    flip_row: Option<usize>,
) -> Polynomial {
    let n = size.half();
    let s = size.s();
    let vid = |a: u32, b: u32, c: u32| VariableId(a * s * s + b * s + c);
    let mut acc = Polynomial::zero();
    for t in triples {
        debug_assert!(t.a4 < n && t.a2 < n && t.a6 < n, "triple out of range");
        for a1 in 0..n {
            for a5 in 0..n {
                for a3 in 0..n {
                    let loop_value = [a1, t.a2, a3, t.a4, a5, t.a6];
                    for (row_index, row) in SUB_SUMS.iter().enumerate() {
                        let pos = |entry: usize, p: usize| {
                            let v = loop_value[ENTRY_SLOTS[entry][p] - 1];
                            if row.hi[entry][p] {
                                v + n
                            } else {
                                v
                            }
                        };
                        let ids = [
                            vid(pos(0, 0), pos(0, 1), pos(0, 2)),
                            vid(pos(1, 0), pos(1, 1), pos(1, 2)),
                            vid(pos(2, 0), pos(2, 1), pos(2, 2)),
                            vid(pos(3, 0), pos(3, 1), pos(3, 2)),
                        ];
                        let sign = if flip_row == Some(row_index) {
                            -row.sign
                        } else {
                            row.sign
                        };
                        acc.add_term(
                            Monomial::from_variables(&ids),
                            Coefficient::from(4 * sign as i64),
                        );
                    }
                }
            }
        }
    }
    acc
}

/// The optimized sum restricted to the given outer triples, including each
/// sub-sum's sign and the overall factor 4. Additive over disjoint triple
/// sets; the empty set yields the zero polynomial.
pub fn inner_block(
    size: TensorSize,
    triples: impl IntoIterator<Item = IndexTriple>,
) -> Polynomial {
    inner_block_impl(size, triples, None)
}

/// The full invariant via the symmetry-reduced evaluation: six loops over
/// `[0, N)` and the 16 signed sub-sums.
pub fn invariant_optimized(size: TensorSize) -> Polynomial {
    inner_block(size, (0..triple_count(size)).map(|i| triple_at(size, i)))
}

/// [`invariant_optimized`] with the sign of one sub-sum deliberately flipped.
///
/// The result is wrong by construction. It exists so that equivalence
/// checkers can demonstrate they detect a single-sign mutation; see the
/// `verify` command's sign-corruption flag.
pub fn invariant_optimized_mutated(size: TensorSize) -> Polynomial {
    inner_block_impl(
        size,
        (0..triple_count(size)).map(|i| triple_at(size, i)),
        Some(6),
    )
}

/// The full invariant by direct enumeration of all twelve contraction
/// indices, with partial products short-circuited as soon as a J factor is
/// zero. Each surviving assignment contributes the product of its six J
/// signs times the degree-4 monomial of the four tensor entries.
pub fn invariant_naive(size: TensorSize) -> Polynomial {
    let s = size.s();
    let t = SymbolicTensor::new(size);
    let mut acc = Polynomial::zero();
    for a1 in 0..s {
        for a2 in 0..s {
            for a3 in 0..s {
                let va = t.entry(a1, a2, a3);
                for b1 in 0..s {
                    let j1 = j_entry(a1, b1, size);
                    if j1 == 0 {
                        continue;
                    }
                    for b2 in 0..s {
                        for b3 in 0..s {
                            let vb = t.entry(b1, b2, b3);
                            for c1 in 0..s {
                                for c2 in 0..s {
                                    let j2 = j_entry(a2, c2, size);
                                    if j2 == 0 {
                                        continue;
                                    }
                                    for c3 in 0..s {
                                        let j3 = j_entry(c3, b3, size);
                                        if j3 == 0 {
                                            continue;
                                        }
                                        let vc = t.entry(c1, c2, c3);
                                        for d1 in 0..s {
                                            let j4 = j_entry(d1, c1, size);
                                            if j4 == 0 {
                                                continue;
                                            }
                                            for d2 in 0..s {
                                                let j5 = j_entry(d2, b2, size);
                                                if j5 == 0 {
                                                    continue;
                                                }
                                                for d3 in 0..s {
                                                    let j6 = j_entry(a3, d3, size);
                                                    if j6 == 0 {
                                                        continue;
                                                    }
                                                    let sign =
                                                        j1 * j2 * j3 * j4 * j5 * j6;
                                                    let vd = t.entry(d1, d2, d3);
                                                    acc.add_term(
                                                        Monomial::from_variables(&[
                                                            va, vb, vc, vd,
                                                        ]),
                                                        Coefficient::from(sign as i64),
                                                    );
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{make_test_symplectic, symplectic_transform};
    use crate::tensor::{numeric_evaluate, NumericTensor};
    use proptest::prelude::*;

    fn size(s: u32) -> TensorSize {
        TensorSize::new(s).unwrap()
    }

    /// Independent oracle: the defining contraction, enumerated directly.
    ///
    /// For each assignment of the six unbarred indices the barred partner is
    /// forced (J has exactly one nonzero per row), so the walk is `S^6`
    /// assignments of `sign * T[a1][a2][a3] T[a4][a5][p3] T[p4][p2][a6]
    /// T[p1][p5][p6]` with `p` the partner index.
    fn contraction_oracle(sz: TensorSize) -> Polynomial {
        let s = sz.s();
        let n = sz.half();
        let t = SymbolicTensor::new(sz);
        let partner = |x: u32| if x < n { x + n } else { x - n };
        let mut acc = Polynomial::zero();
        for a1 in 0..s {
            for a2 in 0..s {
                for a3 in 0..s {
                    for a4 in 0..s {
                        for a5 in 0..s {
                            for a6 in 0..s {
                                let a = [a1, a2, a3, a4, a5, a6];
                                let p: Vec<u32> = a.iter().map(|&x| partner(x)).collect();
                                let mut sign = 1i8;
                                for l in 0..6 {
                                    sign *= j_entry(a[l], p[l], sz);
                                }
                                let ids = [
                                    t.entry(a1, a2, a3),
                                    t.entry(a4, a5, p[2]),
                                    t.entry(p[3], p[1], a6),
                                    t.entry(p[0], p[4], p[5]),
                                ];
                                acc.add_term(
                                    Monomial::from_variables(&ids),
                                    Coefficient::from(sign as i64),
                                );
                            }
                        }
                    }
                }
            }
        }
        acc
    }

    /// The twelve-loop walk with no zero short-circuiting, for checking that
    /// pruning does not change the result.
    fn naive_unpruned(sz: TensorSize) -> Polynomial {
        let s = sz.s();
        let t = SymbolicTensor::new(sz);
        let mut acc = Polynomial::zero();
        let idx: Vec<u32> = (0..s).collect();
        let mut assign = [0u32; 12];
        fn rec(
            depth: usize,
            idx: &[u32],
            assign: &mut [u32; 12],
            sz: TensorSize,
            t: &SymbolicTensor,
            acc: &mut Polynomial,
        ) {
            if depth == 12 {
                let [a1, a2, a3, b1, b2, b3, c1, c2, c3, d1, d2, d3] = *assign;
                let sign = j_entry(a1, b1, sz) as i64
                    * j_entry(a2, c2, sz) as i64
                    * j_entry(c3, b3, sz) as i64
                    * j_entry(d1, c1, sz) as i64
                    * j_entry(d2, b2, sz) as i64
                    * j_entry(a3, d3, sz) as i64;
                if sign != 0 {
                    let ids = [
                        t.entry(a1, a2, a3),
                        t.entry(b1, b2, b3),
                        t.entry(c1, c2, c3),
                        t.entry(d1, d2, d3),
                    ];
                    acc.add_term(Monomial::from_variables(&ids), Coefficient::from(sign));
                }
                return;
            }
            for &v in idx {
                assign[depth] = v;
                rec(depth + 1, idx, assign, sz, t, acc);
            }
        }
        rec(0, &idx, &mut assign, sz, &t, &mut acc);
        acc
    }

    #[test]
    fn naive_matches_contraction_oracle() {
        for s in [2u32, 4] {
            let sz = size(s);
            assert_eq!(invariant_naive(sz), contraction_oracle(sz), "size {s}");
        }
    }

    #[test]
    fn optimized_matches_naive() {
        for s in [2u32, 4] {
            let sz = size(s);
            assert_eq!(invariant_optimized(sz), invariant_naive(sz), "size {s}");
        }
    }

    #[test]
    fn pruning_does_not_change_the_result() {
        let sz = size(2);
        assert_eq!(invariant_naive(sz), naive_unpruned(sz));
    }

    #[test]
    fn known_term_counts() {
        // Frozen from independent prototype enumerations. The invariant
        // happens to vanish identically at size 2.
        assert_eq!(invariant_optimized(size(2)).num_terms(), 0);
        assert_eq!(invariant_optimized(size(4)).num_terms(), 800);
        assert_eq!(invariant_optimized(size(6)).num_terms(), 10584);
    }

    #[test]
    fn every_monomial_has_degree_four() {
        for s in [2u32, 4, 6] {
            for (m, _) in invariant_optimized(size(s)).iter() {
                assert_eq!(m.degree(), 4);
            }
        }
    }

    #[test]
    fn numeric_specialization_matches_oracle() {
        // The polynomial evaluated at concrete tensors agrees with the
        // oracle polynomial evaluated there (five random assignments).
        let sz = size(4);
        let inv = invariant_optimized(sz);
        let oracle = contraction_oracle(sz);
        for seed in 0..5 {
            let t = NumericTensor::random(sz, seed, 7);
            assert_eq!(numeric_evaluate(&inv, &t), numeric_evaluate(&oracle, &t));
        }
    }

    #[test]
    fn inner_block_of_empty_set_is_zero() {
        assert!(inner_block(size(4), core::iter::empty()).is_zero());
    }

    #[test]
    fn inner_block_of_full_set_is_the_invariant() {
        let sz = size(4);
        let all = triples_in_range(sz, 0, triple_count(sz));
        assert_eq!(inner_block(sz, all), invariant_optimized(sz));
    }

    #[test]
    fn two_way_split_sums_to_the_whole() {
        let sz = size(4);
        let total = triple_count(sz);
        let whole = invariant_optimized(sz);
        for cut in [1, 3, total / 2, total - 1] {
            let left = inner_block(sz, triples_in_range(sz, 0, cut));
            let right = inner_block(sz, triples_in_range(sz, cut, total - cut));
            assert_eq!(&left + &right, whole, "cut {cut}");
        }
    }

    #[test]
    fn mutated_differs_from_true_invariant() {
        let sz = size(4);
        assert_ne!(invariant_optimized_mutated(sz), invariant_optimized(sz));
    }

    #[test]
    fn triple_enumeration_is_lexicographic() {
        let sz = size(8); // N = 4
        assert_eq!(triple_count(sz), 64);
        assert_eq!(triple_at(sz, 0), IndexTriple { a4: 0, a2: 0, a6: 0 });
        assert_eq!(triple_at(sz, 1), IndexTriple { a4: 0, a2: 0, a6: 1 });
        assert_eq!(triple_at(sz, 4), IndexTriple { a4: 0, a2: 1, a6: 0 });
        assert_eq!(triple_at(sz, 63), IndexTriple { a4: 3, a2: 3, a6: 3 });
    }

    #[test]
    fn invariance_under_generated_symplectic_transforms() {
        for s in [2u32, 4] {
            let sz = size(s);
            let inv = invariant_optimized(sz);
            for seed in 0..3 {
                let t = NumericTensor::random(sz, 100 + seed, 5);
                let k = make_test_symplectic(sz, 200 + seed);
                let t2 = symplectic_transform(&t, &k);
                assert_eq!(
                    numeric_evaluate(&inv, &t2),
                    numeric_evaluate(&inv, &t),
                    "size {s} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn scaling_law_is_quartic() {
        let sz = size(4);
        let inv = invariant_optimized(sz);
        let t = NumericTensor::random(sz, 42, 5);
        let base = numeric_evaluate(&inv, &t);
        for c in -3i64..=3 {
            let scaled = t.scaled(&Coefficient::from(c));
            let expect = Coefficient::from(c).pow(4u32) * &base;
            assert_eq!(numeric_evaluate(&inv, &scaled), expect, "c = {c}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_partitions_sum_to_the_whole(cuts in proptest::collection::btree_set(1u64..8, 0..3)) {
            let sz = size(4);
            let total = triple_count(sz);
            let mut bounds: Vec<u64> = cuts.into_iter().filter(|&c| c < total).collect();
            bounds.push(0);
            bounds.push(total);
            bounds.sort_unstable();
            bounds.dedup();
            let mut sum = Polynomial::zero();
            for w in bounds.windows(2) {
                sum += &inner_block(sz, triples_in_range(sz, w[0], w[1] - w[0]));
            }
            prop_assert_eq!(sum, invariant_optimized(sz));
        }
    }
}
