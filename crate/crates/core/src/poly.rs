//! Sparse multivariate polynomials with exact integer coefficients.
//!
//! A [`Polynomial`] is a map from [`Monomial`] to a nonzero [`Coefficient`];
//! the zero polynomial has an empty map. Monomials are sorted factor lists
//! `(variable, exponent)` with strictly ascending variable ids and no zero
//! exponents. The monomial order is graded lexicographic: total degree
//! first, then lexicographic on the dense exponent vector with variable 0
//! most significant. Every operation returns canonical values, so equality
//! is plain structural equality.

use alloc::collections::btree_map::{BTreeMap, Entry};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Arbitrary-precision signed integer coefficient.
pub type Coefficient = BigInt;

/// Index of one formal variable (one tensor component).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub u32);

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A product of variables with positive exponents, kept sorted by variable id.
///
/// The empty factor list is the constant monomial 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: Vec<(VariableId, u16)>,
}

impl Monomial {
    /// The constant monomial 1.
    pub fn one() -> Self {
        Monomial {
            factors: Vec::new(),
        }
    }

    /// The monomial consisting of a single variable to the first power.
    pub fn variable(v: VariableId) -> Self {
        Monomial {
            factors: alloc::vec![(v, 1)],
        }
    }

    /// Builds a monomial from arbitrary `(variable, exponent)` pairs.
    ///
    /// Pairs are sorted, duplicate variables have their exponents merged, and
    /// zero exponents are dropped.
    ///
    /// Panics on exponent overflow (the backing exponent type is `u16`).
    pub fn from_factors(factors: impl IntoIterator<Item = (VariableId, u16)>) -> Self {
        let mut pairs: Vec<(VariableId, u16)> = factors.into_iter().filter(|f| f.1 != 0).collect();
        pairs.sort_unstable_by_key(|f| f.0);
        let mut merged: Vec<(VariableId, u16)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => {
                    last.1 = last.1.checked_add(e).expect("monomial exponent overflow");
                }
                _ => merged.push((v, e)),
            }
        }
        Monomial { factors: merged }
    }

    /// Builds the degree-`vars.len()` product of the given variables.
    ///
    /// Repeats are merged into exponents. This is the hot path of the
    /// invariant algorithms, which only ever form products of four entries.
    pub fn from_variables(vars: &[VariableId]) -> Self {
        let mut ids: Vec<u32> = vars.iter().map(|v| v.0).collect();
        ids.sort_unstable();
        let mut factors: Vec<(VariableId, u16)> = Vec::with_capacity(ids.len());
        for id in ids {
            match factors.last_mut() {
                Some(last) if last.0 .0 == id => last.1 += 1,
                _ => factors.push((VariableId(id), 1)),
            }
        }
        Monomial { factors }
    }

    /// The sorted `(variable, exponent)` factor list.
    pub fn factors(&self) -> &[(VariableId, u16)] {
        &self.factors
    }

    /// Total degree: the sum of all exponents.
    pub fn degree(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64).sum()
    }

    /// True for the constant monomial 1.
    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// The largest variable id appearing in this monomial.
    pub fn max_variable(&self) -> Option<VariableId> {
        self.factors.last().map(|&(v, _)| v)
    }

    /// Product of two monomials: a merge of the factor lists.
    ///
    /// Panics on exponent overflow.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.factors, &other.factors);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i]
                        .1
                        .checked_add(b[j].1)
                        .expect("monomial exponent overflow");
                    out.push((a[i].0, e));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { factors: out }
    }

    /// Lexicographic comparison of the dense exponent vectors, with variable 0
    /// most significant: at the first variable where the exponents differ, the
    /// monomial with the larger exponent is the greater one.
    fn cmp_lex(&self, other: &Monomial) -> Ordering {
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                // `self` ends while `other` still has a positive exponent at
                // some variable where `self` has zero.
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    // `self` has a positive exponent at an earlier variable.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

/// Graded lexicographic order: total degree first, then [`Monomial::cmp_lex`].
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.cmp_lex(other))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (v, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse multivariate polynomial with exact integer coefficients.
///
/// Invariant: no stored coefficient is zero. The term map is ordered by the
/// graded-lex monomial order, ascending; serialization emits terms in
/// descending order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Coefficient>,
}

impl Polynomial {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
    }

    /// A constant polynomial (zero if `c` is zero).
    pub fn constant(c: Coefficient) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    /// The polynomial consisting of the single variable `v`.
    pub fn variable(v: VariableId) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::variable(v), Coefficient::from(1));
        p
    }

    /// A single-term polynomial `c * m` (zero if `c` is zero).
    pub fn monomial(m: Monomial, c: Coefficient) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from arbitrary `(monomial, coefficient)` pairs,
    /// merging duplicates and dropping anything that cancels to zero.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Coefficient)>) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Number of terms in canonical form.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// True iff this is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Coefficient)> {
        self.terms.iter()
    }

    /// Terms in descending graded-lex order (the serialization order).
    pub fn iter_desc(&self) -> impl Iterator<Item = (&Monomial, &Coefficient)> {
        self.terms.iter().rev()
    }

    /// Coefficient of `m`, or zero if absent.
    pub fn coefficient(&self, m: &Monomial) -> Coefficient {
        self.terms.get(m).cloned().unwrap_or_else(Coefficient::zero)
    }

    /// The largest variable id appearing anywhere in the polynomial.
    pub fn max_variable(&self) -> Option<VariableId> {
        self.terms.keys().filter_map(Monomial::max_variable).max()
    }

    /// Adds `c * m` into the polynomial in place.
    pub fn add_term(&mut self, m: Monomial, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// In-place sum, consuming the right-hand side so its coefficients move
    /// rather than clone.
    pub fn add_assign_owned(&mut self, rhs: Polynomial) {
        if self.terms.is_empty() {
            self.terms = rhs.terms;
            return;
        }
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }

    /// Every coefficient multiplied by `c`; the zero polynomial if `c` is zero.
    pub fn scale(&self, c: &Coefficient) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        // Integer coefficients have no zero divisors, so no term can vanish.
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    /// Substitutes values for variables and returns the resulting integer.
    pub fn evaluate(&self, mut value_of: impl FnMut(VariableId) -> Coefficient) -> Coefficient {
        let mut total = Coefficient::zero();
        for (m, c) in &self.terms {
            let mut prod = c.clone();
            for &(v, e) in m.factors() {
                let base = value_of(v);
                for _ in 0..e {
                    prod *= &base;
                }
            }
            total += prod;
        }
        total
    }
}

impl AddAssign<&Polynomial> for Polynomial {
    fn add_assign(&mut self, rhs: &Polynomial) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Deterministic pseudo-random polynomial over the variable window
/// `[window_start, window_start + num_vars)`.
///
/// At most `num_terms` terms survive (random duplicates merge); each term
/// uses up to four distinct variables with exponents in `1..=max_exp` and a
/// nonzero coefficient in `[-999, 999]`.
pub fn random_polynomial_window(
    num_terms: u32,
    num_vars: u32,
    max_exp: u16,
    seed: u64,
    window_start: u32,
) -> Polynomial {
    assert!(num_terms > 0 && num_vars > 0 && max_exp > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Polynomial::zero();
    for _ in 0..num_terms {
        let nf = rng.random_range(1..=num_vars.min(4));
        let mut vars: Vec<u32> = Vec::with_capacity(nf as usize);
        while vars.len() < nf as usize {
            let v = window_start + rng.random_range(0..num_vars);
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let factors = vars
            .into_iter()
            .map(|v| (VariableId(v), rng.random_range(1..=max_exp)));
        let mono = Monomial::from_factors(factors);
        let coeff = loop {
            let c: i32 = rng.random_range(-999..=999);
            if c != 0 {
                break c;
            }
        };
        p.add_term(mono, Coefficient::from(coeff));
    }
    p
}

/// [`random_polynomial_window`] with the window anchored at variable 0.
pub fn random_polynomial(num_terms: u32, num_vars: u32, max_exp: u16, seed: u64) -> Polynomial {
    random_polynomial_window(num_terms, num_vars, max_exp, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn var(id: u32) -> Polynomial {
        Polynomial::variable(VariableId(id))
    }

    fn int(n: i64) -> Coefficient {
        Coefficient::from(n)
    }

    #[test]
    fn additive_identity_and_cancellation() {
        let x = var(0);
        let zero = Polynomial::zero();
        assert_eq!(&x + &zero, x);
        assert_eq!(&x + &-&x, zero);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn add_merges_coefficients() {
        // (2x + 3y) + (x - 3y) = 3x
        let (x, y) = (var(0), var(1));
        let p = &x.scale(&int(2)) + &y.scale(&int(3));
        let q = &x + &y.scale(&int(-3));
        let sum = &p + &q;
        assert_eq!(sum, x.scale(&int(3)));
        assert_eq!(sum.num_terms(), 1);
    }

    #[test]
    fn mul_identities() {
        let p = random_polynomial(10, 6, 3, 42);
        let one = Polynomial::constant(int(1));
        let zero = Polynomial::zero();
        assert_eq!(&p * &one, p);
        assert_eq!(&p * &zero, zero);
    }

    #[test]
    fn difference_of_squares() {
        let (x, y) = (var(0), var(1));
        let lhs = &(&x + &y) * &(&x - &y);
        let x2 = Polynomial::monomial(Monomial::from_factors([(VariableId(0), 2)]), int(1));
        let y2 = Polynomial::monomial(Monomial::from_factors([(VariableId(1), 2)]), int(-1));
        assert_eq!(lhs, &x2 + &y2);
    }

    #[test]
    fn scale_examples() {
        let (x, y) = (var(0), var(1));
        let p = &x + &y;
        assert_eq!(p.scale(&int(4)), &x.scale(&int(4)) + &y.scale(&int(4)));
        assert_eq!(p.scale(&int(1)), p);
        assert!(p.scale(&int(0)).is_zero());
    }

    #[test]
    fn term_counts() {
        assert_eq!(Polynomial::zero().num_terms(), 0);
        assert_eq!(var(0).scale(&int(3)).num_terms(), 1);
        assert!((&var(0) - &var(0)).is_zero());
    }

    #[test]
    fn monomial_merge_and_degree() {
        let m = Monomial::from_variables(&[VariableId(3), VariableId(1), VariableId(3)]);
        assert_eq!(m.factors(), &[(VariableId(1), 1), (VariableId(3), 2)]);
        assert_eq!(m.degree(), 3);
        assert!(Monomial::one().is_one());
        assert_eq!(Monomial::from_factors([(VariableId(5), 0)]), Monomial::one());
    }

    /// Reference order on dense exponent vectors, for checking the sparse walk.
    fn grlex_dense(a: &Monomial, b: &Monomial, nvars: u32) -> core::cmp::Ordering {
        let dense = |m: &Monomial| {
            let mut v = vec![0u16; nvars as usize];
            for &(id, e) in m.factors() {
                v[id.0 as usize] = e;
            }
            v
        };
        let (da, db) = (a.degree(), b.degree());
        da.cmp(&db).then_with(|| dense(a).cmp(&dense(b)))
    }

    #[test]
    fn grlex_matches_dense_reference() {
        let mk = |f: &[(u32, u16)]| {
            Monomial::from_factors(f.iter().map(|&(v, e)| (VariableId(v), e)))
        };
        let monos = [
            mk(&[]),
            mk(&[(0, 1)]),
            mk(&[(1, 1)]),
            mk(&[(2, 1)]),
            mk(&[(0, 2)]),
            mk(&[(0, 1), (1, 1)]),
            mk(&[(1, 2)]),
            mk(&[(0, 1), (2, 1)]),
            mk(&[(1, 1), (2, 1)]),
            mk(&[(0, 3)]),
            mk(&[(0, 2), (1, 1)]),
            mk(&[(2, 3)]),
            mk(&[(0, 1), (1, 1), (2, 1)]),
        ];
        for a in &monos {
            for b in &monos {
                assert_eq!(a.cmp(b), grlex_dense(a, b, 3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn evaluate_simple() {
        let p = &var(0) + &var(1);
        let vals = [int(2), int(3)];
        let got = p.evaluate(|v| vals[v.0 as usize].clone());
        assert_eq!(got, int(5));
        assert_eq!(Polynomial::zero().evaluate(|_| int(7)), int(0));
    }

    #[test]
    fn random_polynomial_is_deterministic() {
        let a = random_polynomial(50, 10, 3, 123);
        let b = random_polynomial(50, 10, 3, 123);
        assert_eq!(a, b);
        assert!(a.num_terms() <= 50);
        let c = random_polynomial(50, 10, 3, 124);
        assert_ne!(a, c);
    }

    #[test]
    fn random_polynomial_single_term_shape() {
        let p = random_polynomial(1, 1, 1, 9);
        assert_eq!(p.num_terms(), 1);
        let (m, _) = p.iter().next().unwrap();
        assert_eq!(m.factors(), &[(VariableId(0), 1)]);
    }

    #[test]
    fn window_shift_shares_half_the_variables() {
        for v in [4u32, 7, 10] {
            let lo: alloc::collections::BTreeSet<u32> = (0..v).collect();
            let hi: alloc::collections::BTreeSet<u32> = (v / 2..v / 2 + v).collect();
            let shared = lo.intersection(&hi).count() as u32;
            assert_eq!(shared, v.div_ceil(2));
        }
        // And a generated pair stays inside its windows.
        let v = 8;
        let b = random_polynomial_window(20, v, 3, 77, v / 2);
        for (m, _) in b.iter() {
            for &(id, _) in m.factors() {
                assert!(id.0 >= v / 2 && id.0 < v / 2 + v);
            }
        }
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        (1u32..30, 1u32..8, 1u16..4, any::<u64>())
            .prop_map(|(n, v, e, seed)| random_polynomial(n, v, e, seed))
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn canonical_form_upheld(a in arb_poly(), b in arb_poly()) {
            for p in [&a + &b, &a * &b, &a - &b] {
                for (m, c) in p.iter() {
                    prop_assert!(!c.is_zero());
                    for w in m.factors().windows(2) {
                        prop_assert!(w[0].0 < w[1].0);
                    }
                    for &(_, e) in m.factors() {
                        prop_assert!(e > 0);
                    }
                }
            }
        }

        #[test]
        fn scale_is_evaluation_homomorphic(a in arb_poly(), k in -9i64..9, vals in proptest::collection::vec(-50i64..50, 8)) {
            let f = |v: VariableId| Coefficient::from(vals[v.0 as usize % 8]);
            let lhs = a.scale(&Coefficient::from(k)).evaluate(f);
            let rhs = a.evaluate(f) * Coefficient::from(k);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
