//! Algorithmic core for symplectic tensor invariant computation.
//!
//! This crate is `no_std` (with `alloc`) and holds everything that does not
//! touch a clock, a socket, or a file: exact sparse multivariate polynomials
//! over arbitrary-precision integers, their canonical binary encoding, the
//! symplectic matrix machinery, and the invariant algorithms themselves.
//! IO, parallel execution schemes, and the CLI live in the companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod invariant;
pub mod poly;
pub mod symplectic;
pub mod tensor;
pub mod wire;

pub use invariant::{inner_block, invariant_naive, invariant_optimized, IndexTriple};
pub use poly::{Coefficient, Monomial, Polynomial, VariableId};
pub use symplectic::{
    j_entry, make_test_symplectic, symplectic_transform, verify_symplectic, IntMatrix,
};
pub use tensor::{numeric_evaluate, NumericTensor, SizeError, SymbolicTensor, TensorSize};
