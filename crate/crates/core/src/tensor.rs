//! Tensor sizes, the symbolic tensor variable layout, and numeric tensors
//! used as specialization oracles.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::{Coefficient, Polynomial, VariableId};

/// Edge size `S` of a rank-3 tensor, constrained to be even (`S = 2N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorSize {
    s: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeError {
    Odd(u32),
    TooSmall(u32),
}

impl fmt::Display for SizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeError::Odd(s) => write!(f, "tensor size {s} is odd; it must be even"),
            SizeError::TooSmall(s) => write!(f, "tensor size {s} is too small; it must be >= 2"),
        }
    }
}

impl TensorSize {
    pub fn new(s: u32) -> Result<Self, SizeError> {
        if s < 2 {
            return Err(SizeError::TooSmall(s));
        }
        if s % 2 != 0 {
            return Err(SizeError::Odd(s));
        }
        Ok(TensorSize { s })
    }

    /// The edge size `S`.
    pub fn s(self) -> u32 {
        self.s
    }

    /// Half the edge size, `N = S / 2`.
    pub fn half(self) -> u32 {
        self.s / 2
    }

    /// Number of formal variables, `S^3`.
    pub fn variable_count(self) -> u32 {
        self.s * self.s * self.s
    }

    /// Decodes a variable id back into its `(a, b, c)` tensor position.
    pub fn decode(self, v: VariableId) -> (u32, u32, u32) {
        let s = self.s;
        debug_assert!(v.0 < self.variable_count());
        (v.0 / (s * s), (v.0 / s) % s, v.0 % s)
    }
}

/// The fully formal tensor: each position `(a, b, c)` is its own variable.
///
/// `entry` is a bijection from positions onto `0..S^3`.
#[derive(Debug, Clone, Copy)]
pub struct SymbolicTensor {
    size: TensorSize,
}

impl SymbolicTensor {
    pub fn new(size: TensorSize) -> Self {
        SymbolicTensor { size }
    }

    pub fn size(&self) -> TensorSize {
        self.size
    }

    /// Variable id of position `(a, b, c)`: `a*S^2 + b*S + c`.
    pub fn entry(&self, a: u32, b: u32, c: u32) -> VariableId {
        let s = self.size.s;
        assert!(a < s && b < s && c < s, "tensor index out of range");
        VariableId(a * s * s + b * s + c)
    }
}

/// A concrete integer-valued rank-3 tensor, used to specialize polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericTensor {
    size: TensorSize,
    values: Vec<BigInt>,
}

impl NumericTensor {
    pub fn zeros(size: TensorSize) -> Self {
        NumericTensor {
            size,
            values: alloc::vec![BigInt::ZERO; size.variable_count() as usize],
        }
    }

    /// Deterministic random tensor with entries uniform in `[-max_abs, max_abs]`.
    pub fn random(size: TensorSize, seed: u64, max_abs: i64) -> Self {
        assert!(max_abs > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..size.variable_count())
            .map(|_| BigInt::from(rng.random_range(-max_abs..=max_abs)))
            .collect();
        NumericTensor { size, values }
    }

    pub fn size(&self) -> TensorSize {
        self.size
    }

    pub fn get(&self, a: u32, b: u32, c: u32) -> &BigInt {
        let s = self.size.s;
        assert!(a < s && b < s && c < s, "tensor index out of range");
        &self.values[(a * s * s + b * s + c) as usize]
    }

    pub fn set(&mut self, a: u32, b: u32, c: u32, value: BigInt) {
        let s = self.size.s;
        assert!(a < s && b < s && c < s, "tensor index out of range");
        self.values[(a * s * s + b * s + c) as usize] = value;
    }

    /// Value of the variable with the given id.
    ///
    /// Panics if the id is out of range for this tensor size.
    pub fn value(&self, v: VariableId) -> &BigInt {
        assert!(
            v.0 < self.size.variable_count(),
            "variable id {} out of range for tensor size {}",
            v.0,
            self.size.s
        );
        &self.values[v.0 as usize]
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: &BigInt) -> NumericTensor {
        NumericTensor {
            size: self.size,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Substitutes the tensor's entries for the polynomial's variables and sums.
///
/// Panics if the polynomial mentions a variable out of range for `t`.
pub fn numeric_evaluate(p: &Polynomial, t: &NumericTensor) -> Coefficient {
    if let Some(max) = p.max_variable() {
        assert!(
            max.0 < t.size().variable_count(),
            "polynomial variable {} out of range for tensor size {}",
            max.0,
            t.size().s()
        );
    }
    p.evaluate(|v| t.value(v).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    #[test]
    fn size_validation() {
        assert!(TensorSize::new(2).is_ok());
        assert!(TensorSize::new(8).is_ok());
        assert_eq!(TensorSize::new(3), Err(SizeError::Odd(3)));
        assert_eq!(TensorSize::new(0), Err(SizeError::TooSmall(0)));
    }

    #[test]
    fn entry_is_a_bijection() {
        let size = TensorSize::new(4).unwrap();
        let t = SymbolicTensor::new(size);
        let mut seen = alloc::collections::BTreeSet::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let v = t.entry(a, b, c);
                    assert!(v.0 < size.variable_count());
                    assert!(seen.insert(v.0));
                    assert_eq!(size.decode(v), (a, b, c));
                }
            }
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn evaluate_against_tensor() {
        let size = TensorSize::new(2).unwrap();
        let mut t = NumericTensor::zeros(size);
        t.set(0, 0, 0, BigInt::from(2));
        t.set(0, 0, 1, BigInt::from(3));
        // x0 + x1 evaluates to 5.
        let p = &Polynomial::variable(VariableId(0)) + &Polynomial::variable(VariableId(1));
        assert_eq!(numeric_evaluate(&p, &t), BigInt::from(5));
        assert_eq!(numeric_evaluate(&Polynomial::zero(), &t), BigInt::ZERO);
    }

    #[test]
    fn evaluate_is_multiplicative_in_scale() {
        let size = TensorSize::new(2).unwrap();
        let t = NumericTensor::random(size, 11, 5);
        let p = Polynomial::monomial(
            Monomial::from_factors([(VariableId(1), 2), (VariableId(5), 1)]),
            Coefficient::from(3),
        );
        let c = Coefficient::from(4);
        assert_eq!(
            numeric_evaluate(&p.scale(&c), &t),
            c * numeric_evaluate(&p, &t)
        );
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn evaluate_rejects_out_of_range_variable() {
        let size = TensorSize::new(2).unwrap();
        let t = NumericTensor::zeros(size);
        let p = Polynomial::variable(VariableId(8)); // 8 == S^3
        numeric_evaluate(&p, &t);
    }

    #[test]
    fn random_tensor_is_deterministic() {
        let size = TensorSize::new(4).unwrap();
        assert_eq!(
            NumericTensor::random(size, 3, 9),
            NumericTensor::random(size, 3, 9)
        );
        assert_ne!(
            NumericTensor::random(size, 3, 9),
            NumericTensor::random(size, 4, 9)
        );
    }
}
