//! Canonical binary encoding of polynomials.
//!
//! Layout (all integers little-endian): magic `"SPLY"`, version `u8 = 1`,
//! term count `u32`; per term: sign byte (`0x00` positive, `0x01` negative),
//! magnitude length `u16`, magnitude bytes (minimal, little-endian), factor
//! count `u16`, then per factor variable id `u32` and exponent `u16`. Terms
//! appear in descending graded-lex order.
//!
//! The encoding is bit-exact: equal polynomials serialize to equal bytes and
//! distinct canonical polynomials to distinct bytes. `deserialize` rejects
//! anything that is not the canonical image of some polynomial, naming the
//! byte offset of the first violation.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, Sign};

use crate::poly::{Monomial, Polynomial, VariableId};

pub const MAGIC: [u8; 4] = *b"SPLY";
pub const VERSION: u8 = 1;

/// Malformed input for [`deserialize`], locating the offending byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireError {
    pub offset: usize,
    pub kind: WireErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireErrorKind {
    BadMagic,
    UnsupportedVersion(u8),
    /// Input ended before the announced structure was complete.
    Truncated,
    BadSignByte(u8),
    /// Zero coefficients are never stored, so an empty magnitude is invalid.
    EmptyMagnitude,
    /// Magnitudes must be minimal: no zero high byte.
    NonMinimalMagnitude,
    ZeroExponent,
    /// Factor variable ids must be strictly ascending within a term.
    FactorOrder,
    /// Terms must be strictly descending in graded-lex order.
    TermOrder,
    TrailingBytes,
}

impl fmt::Display for WireError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            WireErrorKind::BadMagic => "bad magic bytes",
            WireErrorKind::UnsupportedVersion(v) => return write!(f, "unsupported format version {v} at byte {}", self.offset),
            WireErrorKind::Truncated => "unexpected end of input",
            WireErrorKind::BadSignByte(b) => return write!(f, "invalid sign byte 0x{b:02x} at byte {}", self.offset),
            WireErrorKind::EmptyMagnitude => "zero coefficient magnitude",
            WireErrorKind::NonMinimalMagnitude => "non-minimal coefficient magnitude",
            WireErrorKind::ZeroExponent => "zero exponent",
            WireErrorKind::FactorOrder => "factor variables not strictly ascending",
            WireErrorKind::TermOrder => "terms not in descending graded-lex order",
            WireErrorKind::TrailingBytes => "trailing bytes after final term",
        };
        write!(f, "{what} at byte {}", self.offset)
    }
}

/// Serializes a polynomial to its canonical byte representation.
pub fn serialize(p: &Polynomial) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + p.num_terms() * 24);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    let nterms = u32::try_from(p.num_terms()).expect("term count exceeds u32");
    out.extend_from_slice(&nterms.to_le_bytes());
    for (m, c) in p.iter_desc() {
        let (sign, mag) = c.to_bytes_le();
        out.push(if sign == Sign::Minus { 0x01 } else { 0x00 });
        let mag_len = u16::try_from(mag.len()).expect("coefficient magnitude exceeds u16 length");
        out.extend_from_slice(&mag_len.to_le_bytes());
        out.extend_from_slice(&mag);
        let nf = u16::try_from(m.factors().len()).expect("factor count exceeds u16");
        out.extend_from_slice(&nf.to_le_bytes());
        for &(v, e) in m.factors() {
            out.extend_from_slice(&v.0.to_le_bytes());
            out.extend_from_slice(&e.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.pos + n > self.bytes.len() {
            return Err(WireError {
                offset: self.bytes.len(),
                kind: WireErrorKind::Truncated,
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses the canonical byte representation back into a polynomial.
pub fn deserialize(bytes: &[u8]) -> Result<Polynomial, WireError> {
    let mut r = Reader { bytes, pos: 0 };
    let err = |offset, kind| WireError { offset, kind };

    let magic_at = r.pos;
    if r.take(4)? != MAGIC {
        return Err(err(magic_at, WireErrorKind::BadMagic));
    }
    let version_at = r.pos;
    let version = r.u8()?;
    if version != VERSION {
        return Err(err(version_at, WireErrorKind::UnsupportedVersion(version)));
    }
    let nterms = r.u32()?;

    let mut poly = Polynomial::zero();
    let mut prev: Option<Monomial> = None;
    for _ in 0..nterms {
        let sign_at = r.pos;
        let sign = match r.u8()? {
            0x00 => Sign::Plus,
            0x01 => Sign::Minus,
            b => return Err(err(sign_at, WireErrorKind::BadSignByte(b))),
        };
        let mag_len_at = r.pos;
        let mag_len = r.u16()? as usize;
        if mag_len == 0 {
            return Err(err(mag_len_at, WireErrorKind::EmptyMagnitude));
        }
        let mag_at = r.pos;
        let mag = r.take(mag_len)?;
        if mag[mag_len - 1] == 0 {
            return Err(err(mag_at + mag_len - 1, WireErrorKind::NonMinimalMagnitude));
        }
        let coeff = BigInt::from_bytes_le(sign, mag);

        let nf = r.u16()? as usize;
        let mut factors = Vec::with_capacity(nf);
        let mut prev_var: Option<u32> = None;
        for _ in 0..nf {
            let var_at = r.pos;
            let v = r.u32()?;
            let exp_at = r.pos;
            let e = r.u16()?;
            if e == 0 {
                return Err(err(exp_at, WireErrorKind::ZeroExponent));
            }
            if prev_var.is_some_and(|p| p >= v) {
                return Err(err(var_at, WireErrorKind::FactorOrder));
            }
            prev_var = Some(v);
            factors.push((VariableId(v), e));
        }
        let mono = Monomial::from_factors(factors);
        if let Some(p) = &prev {
            if *p <= mono {
                return Err(err(sign_at, WireErrorKind::TermOrder));
            }
        }
        prev = Some(mono.clone());
        poly.add_term(mono, coeff);
    }
    if r.pos != bytes.len() {
        return Err(err(r.pos, WireErrorKind::TrailingBytes));
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{random_polynomial, Coefficient};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn round_trip_zero() {
        let z = Polynomial::zero();
        let bytes = serialize(&z);
        assert_eq!(bytes, vec![b'S', b'P', b'L', b'Y', 1, 0, 0, 0, 0]);
        assert_eq!(deserialize(&bytes).unwrap(), z);
    }

    #[test]
    fn round_trip_small() {
        // 4x^2y - 7
        let mut p = Polynomial::zero();
        p.add_term(
            Monomial::from_factors([(VariableId(0), 2), (VariableId(1), 1)]),
            Coefficient::from(4),
        );
        p.add_term(Monomial::one(), Coefficient::from(-7));
        assert_eq!(deserialize(&serialize(&p)).unwrap(), p);
    }

    #[test]
    fn serialization_is_deterministic_and_injective() {
        let a = random_polynomial(40, 10, 3, 1);
        let b = random_polynomial(40, 10, 3, 2);
        assert_ne!(a, b);
        assert_eq!(serialize(&a), serialize(&a));
        assert_ne!(serialize(&a), serialize(&b));
    }

    #[test]
    fn terms_are_emitted_in_descending_order() {
        let p = random_polynomial(30, 6, 3, 99);
        let monos: Vec<Monomial> = p.iter_desc().map(|(m, _)| m.clone()).collect();
        for w in monos.windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let e = deserialize(b"NOPE").unwrap_err();
        assert_eq!(e.kind, WireErrorKind::BadMagic);
        assert_eq!(e.offset, 0);
    }

    #[test]
    fn rejects_bad_version() {
        let mut bytes = serialize(&Polynomial::zero());
        bytes[4] = 9;
        let e = deserialize(&bytes).unwrap_err();
        assert_eq!(e.kind, WireErrorKind::UnsupportedVersion(9));
        assert_eq!(e.offset, 4);
    }

    #[test]
    fn rejects_truncation() {
        let p = random_polynomial(5, 4, 2, 7);
        let bytes = serialize(&p);
        let e = deserialize(&bytes[..bytes.len() - 1]).unwrap_err();
        assert_eq!(e.kind, WireErrorKind::Truncated);
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = serialize(&Polynomial::variable(VariableId(0)));
        let at = bytes.len();
        bytes.push(0);
        let e = deserialize(&bytes).unwrap_err();
        assert_eq!(e.kind, WireErrorKind::TrailingBytes);
        assert_eq!(e.offset, at);
    }

    #[test]
    fn rejects_zero_coefficient() {
        // Hand-built: one term with sign 0x00 and zero-length magnitude.
        let mut bytes = vec![b'S', b'P', b'L', b'Y', 1, 1, 0, 0, 0];
        bytes.extend_from_slice(&[0x00, 0, 0]); // sign, mag_len = 0
        let e = deserialize(&bytes).unwrap_err();
        assert_eq!(e.kind, WireErrorKind::EmptyMagnitude);
        assert_eq!(e.offset, 10);
    }

    #[test]
    fn rejects_misordered_terms() {
        // Two terms in ascending order: x0 then x0^2.
        let mut bytes = vec![b'S', b'P', b'L', b'Y', 1, 2, 0, 0, 0];
        for exp in [1u16, 2] {
            bytes.extend_from_slice(&[0x00, 1, 0, 1]); // +1
            bytes.extend_from_slice(&1u16.to_le_bytes()); // one factor
            bytes.extend_from_slice(&0u32.to_le_bytes());
            bytes.extend_from_slice(&exp.to_le_bytes());
        }
        let e = deserialize(&bytes).unwrap_err();
        assert_eq!(e.kind, WireErrorKind::TermOrder);
    }

    proptest! {
        #[test]
        fn round_trip_identity(n in 1u32..60, v in 1u32..12, e in 1u16..5, seed in any::<u64>()) {
            let p = random_polynomial(n, v, e, seed);
            let bytes = serialize(&p);
            prop_assert_eq!(deserialize(&bytes).unwrap(), p);
        }
    }
}
