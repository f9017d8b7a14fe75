//! Output files: the human-readable text format, the canonical binary
//! format, and the JSON metadata side file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sptensor_core::{wire, Monomial, Polynomial, TensorSize};

/// SHA-256 of the canonical binary serialization, hex-encoded. Two runs
/// produced the same polynomial iff their hashes match.
pub fn result_hash(p: &Polynomial) -> String {
    hex::encode(Sha256::digest(wire::serialize(p)))
}

/// Renders one monomial with variables decoded to tensor positions, e.g.
/// `T[0][1][1]^2 * T[1][0][0]`.
pub fn monomial_text(m: &Monomial, size: TensorSize) -> String {
    if m.factors().is_empty() {
        return "1".to_string();
    }
    let mut out = String::new();
    for (i, &(v, e)) in m.factors().iter().enumerate() {
        if i > 0 {
            out.push_str(" * ");
        }
        let (a, b, c) = size.decode(v);
        let _ = write!(out, "T[{a}][{b}][{c}]");
        if e > 1 {
            let _ = write!(out, "^{e}");
        }
    }
    out
}

/// Text format: a `# size=<S> terms=<n>` header, then one term per line in
/// descending graded-lex order as `<coeff> * T[a][b][c]...`.
pub fn to_text(p: &Polynomial, size: TensorSize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# size={} terms={}", size.s(), p.num_terms());
    for (m, c) in p.iter_desc() {
        if m.factors().is_empty() {
            let _ = writeln!(out, "{c}");
        } else {
            let _ = writeln!(out, "{c} * {}", monomial_text(m, size));
        }
    }
    out
}

/// Metadata recorded next to each computed polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub size: u32,
    pub algorithm: String,
    pub scheme: String,
    pub wall_seconds: f64,
    pub terms: u64,
    pub is_zero: bool,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Binary,
    Both,
}

/// Written file paths for one result.
pub struct WrittenFiles {
    pub text: Option<PathBuf>,
    pub binary: Option<PathBuf>,
    pub metadata: PathBuf,
}

/// Writes the polynomial (per the requested format) and its metadata under
/// `dir`, as `<stem>.txt`, `<stem>.sply`, and `<stem>.json`.
pub fn write_result(
    dir: &Path,
    stem: &str,
    poly: &Polynomial,
    size: TensorSize,
    algorithm: &str,
    scheme: &str,
    wall: Duration,
    format: OutputFormat,
) -> std::io::Result<WrittenFiles> {
    std::fs::create_dir_all(dir)?;
    let mut files = WrittenFiles {
        text: None,
        binary: None,
        metadata: dir.join(format!("{stem}.json")),
    };
    if matches!(format, OutputFormat::Text | OutputFormat::Both) {
        let path = dir.join(format!("{stem}.txt"));
        std::fs::write(&path, to_text(poly, size))?;
        files.text = Some(path);
    }
    if matches!(format, OutputFormat::Binary | OutputFormat::Both) {
        let path = dir.join(format!("{stem}.sply"));
        std::fs::write(&path, wire::serialize(poly))?;
        files.binary = Some(path);
    }
    let meta = ResultMetadata {
        size: size.s(),
        algorithm: algorithm.to_string(),
        scheme: scheme.to_string(),
        wall_seconds: wall.as_secs_f64(),
        terms: poly.num_terms() as u64,
        is_zero: poly.is_zero(),
        sha256: result_hash(poly),
    };
    std::fs::write(&files.metadata, serde_json::to_vec_pretty(&meta)?)?;
    Ok(files)
}

/// First monomial whose coefficients differ between two polynomials, with
/// both coefficients, for mismatch reporting. `None` when equal.
pub fn first_difference(
    a: &Polynomial,
    b: &Polynomial,
    size: TensorSize,
) -> Option<String> {
    if a == b {
        return None;
    }
    let mut monos: Vec<&Monomial> = a.iter().map(|(m, _)| m).collect();
    monos.extend(b.iter().map(|(m, _)| m));
    monos.sort();
    monos.dedup();
    for m in monos {
        let ca = a.coefficient(m);
        let cb = b.coefficient(m);
        if ca != cb {
            return Some(format!(
                "first differing monomial: {} (coefficients {ca} vs {cb})",
                monomial_text(m, size)
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use sptensor_core::{Coefficient, VariableId};

    #[test]
    fn text_format_shape() {
        let size = TensorSize::new(2).unwrap();
        let mut p = Polynomial::zero();
        // 4 * x3^2 (= T[0][1][1]^2) - 7
        p.add_term(
            Monomial::from_factors([(VariableId(3), 2)]),
            Coefficient::from(4),
        );
        p.add_term(Monomial::one(), Coefficient::from(-7));
        let text = to_text(&p, size);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# size=2 terms=2");
        assert_eq!(lines[1], "4 * T[0][1][1]^2");
        assert_eq!(lines[2], "-7");
    }

    #[test]
    fn hash_separates_polynomials() {
        let a = sptensor_core::poly::random_polynomial(10, 5, 2, 1);
        let b = sptensor_core::poly::random_polynomial(10, 5, 2, 2);
        assert_eq!(result_hash(&a), result_hash(&a));
        assert_ne!(result_hash(&a), result_hash(&b));
    }

    #[test]
    fn difference_reporting() {
        let size = TensorSize::new(2).unwrap();
        let x = Polynomial::variable(VariableId(0));
        let y = Polynomial::variable(VariableId(1));
        assert!(first_difference(&x, &x, size).is_none());
        let diff = first_difference(&x, &y, size).unwrap();
        assert!(diff.contains("T[0][0][0]"), "{diff}");
    }
}
