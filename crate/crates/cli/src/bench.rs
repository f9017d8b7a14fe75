//! Microbenchmarks of the polynomial core and scheme scaling sweeps.

use std::time::Instant;

use sptensor_core::poly::{random_polynomial, random_polynomial_window};
use sptensor_core::Coefficient;

/// One measured grid point.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub op: &'static str,
    pub terms: u32,
    pub vars: u32,
    pub seconds: f64,
}

pub const BENCH_CSV_HEADER: &str = "op,terms,vars,seconds";

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        format!("{},{},{},{:.9}", self.op, self.terms, self.vars, self.seconds)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

/// Times constant multiplication and the addition of two polynomials that
/// share half of their unknowns, at each `(terms, vars)` grid point; reports
/// the median of `reps` repetitions.
pub fn bench_poly(terms: &[u32], vars: &[u32], max_exp: u16, reps: u32, seed: u64) -> Vec<BenchRow> {
    assert!(reps >= 1);
    let mut rows = Vec::new();
    let scale_by = Coefficient::from(12345);
    for &t in terms {
        for &v in vars {
            // A pair over windows [0, v) and [v/2, v/2 + v): exactly half of
            // the unknowns are shared.
            let a = random_polynomial(t, v, max_exp, seed);
            let b = random_polynomial_window(t, v, max_exp, seed.wrapping_add(1), v / 2);
            let mut scale_samples = Vec::with_capacity(reps as usize);
            let mut add_samples = Vec::with_capacity(reps as usize);
            for _ in 0..reps {
                let begin = Instant::now();
                let scaled = a.scale(&scale_by);
                scale_samples.push(begin.elapsed().as_secs_f64());
                std::hint::black_box(scaled);

                let begin = Instant::now();
                let sum = &a + &b;
                add_samples.push(begin.elapsed().as_secs_f64());
                std::hint::black_box(sum);
            }
            rows.push(BenchRow {
                op: "scale",
                terms: t,
                vars: v,
                seconds: median(scale_samples),
            });
            rows.push(BenchRow {
                op: "add",
                terms: t,
                vars: v,
                seconds: median(add_samples),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_grid_yields_one_row_per_op() {
        let rows = bench_poly(&[50], &[8], 3, 1, 7);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].op, "scale");
        assert_eq!(rows[1].op, "add");
        assert!(rows.iter().all(|r| r.seconds >= 0.0));
    }

    #[test]
    fn generation_is_deterministic_across_calls() {
        let a1 = random_polynomial(100, 16, 3, 99);
        let a2 = random_polynomial(100, 16, 3, 99);
        assert_eq!(a1, a2);
    }
}
