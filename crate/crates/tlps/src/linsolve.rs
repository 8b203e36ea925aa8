//! Dense Gaussian elimination for the small linear systems of the N-phase
//! sojourn-time computation.
//!
//! The systems are `(I − M)L* = rhs` with `M` positive and row sums bounded
//! by the contraction ratio `q < 1`, so they are comfortably nonsingular —
//! but partial pivoting and an explicit residual check are kept so a bad
//! input fails loudly instead of returning garbage.

use thiserror::Error;

/// Relative pivot threshold: a pivot below `1e-13·max|entry|` is treated as
/// singular.
const PIVOT_RTOL: f64 = 1e-13;

/// Residual acceptance bound: `‖Ax−b‖∞ ≤ 1e-8·(1+‖b‖∞)`.
const RESIDUAL_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("entry count {entries} does not match dimension {n}x{n}")]
    BadShape { n: usize, entries: usize },
    #[error("matrix entries must be finite")]
    NotFinite,
    #[error("dimension mismatch: matrix is {n}x{n} but rhs has length {rhs}")]
    DimensionMismatch { n: usize, rhs: usize },
    #[error("system is singular (pivot {pivot:.3e} below threshold at elimination step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("solution rejected: residual {residual:.3e} exceeds bound {bound:.3e}")]
    IllConditioned { residual: f64, bound: f64 },
}

/// A square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Build from row-major entries; requires `entries.len() == n²` and all
    /// entries finite.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, SolveError> {
        if n == 0 || entries.len() != n * n {
            return Err(SolveError::BadShape {
                n,
                entries: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(SolveError::NotFinite);
        }
        Ok(Self { n, entries })
    }

    /// The n×n zero matrix.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// The n×n identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
    }

    /// Matrix-vector product `A·v`.
    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (i, out_i) in out.iter_mut().enumerate() {
            let row = &self.entries[i * self.n..(i + 1) * self.n];
            *out_i = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    }
}

/// Solve `A·x = b` by Gaussian elimination with partial pivoting, then verify
/// the residual against the original system.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    let n = a.n;
    if b.len() != n {
        return Err(SolveError::DimensionMismatch { n, rhs: b.len() });
    }
    let pivot_floor = PIVOT_RTOL * a.max_abs();

    // Work on copies; `a` and `b` stay untouched for the residual check.
    let mut m = a.entries.clone();
    let mut rhs = b.to_vec();

    for col in 0..n {
        // Partial pivot: largest magnitude in this column at or below row `col`.
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty pivot candidates");
        if pivot_abs <= pivot_floor {
            return Err(SolveError::Singular {
                step: col,
                pivot: pivot_abs,
            });
        }
        if pivot_row != col {
            for j in col..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[row * n + col] = 0.0;
            for j in col + 1..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    // Back substitution.
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }

    // Residual audit against the original system.
    let ax = a.mat_vec(&x);
    let residual = ax
        .iter()
        .zip(b)
        .fold(0.0f64, |r, (axi, bi)| r.max((axi - bi).abs()));
    let b_norm = b.iter().fold(0.0f64, |r, bi| r.max(bi.abs()));
    let bound = RESIDUAL_RTOL * (1.0 + b_norm);
    // NaN residuals (from non-finite inputs) must land in the error branch.
    if residual.is_nan() || residual > bound {
        return Err(SolveError::IllConditioned { residual, bound });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let a = DenseMatrix::identity(4);
        let b = vec![1.0, -2.0, 3.5, 0.0];
        assert_eq!(solve(&a, &b).unwrap(), b);
    }

    #[test]
    fn diagonal_system() {
        let a = DenseMatrix::new(2, vec![2.0, 0.0, 0.0, 4.0]).unwrap();
        let x = solve(&a, &[2.0, 8.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn construct_then_solve_recovers_known_solution() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        // Random entries plus a dominant diagonal keep the system
        // well-conditioned.
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                a.set(i, j, if i == j { v + n as f64 } else { v });
            }
        }
        let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b = a.mat_vec(&x_true);
        let x = solve(&a, &b).unwrap();
        let err = x
            .iter()
            .zip(&x_true)
            .fold(0.0f64, |e, (xi, ti)| e.max((xi - ti).abs()));
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = DenseMatrix::new(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            solve(&a, &[1.0, 2.0]),
            Err(SolveError::Singular { .. })
        ));
    }

    #[test]
    fn shape_and_dimension_errors() {
        assert!(matches!(
            DenseMatrix::new(2, vec![1.0; 3]),
            Err(SolveError::BadShape { .. })
        ));
        assert!(matches!(
            DenseMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(SolveError::NotFinite)
        ));
        let a = DenseMatrix::identity(3);
        assert!(matches!(
            solve(&a, &[1.0]),
            Err(SolveError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn row_permutation_leaves_solution_unchanged() {
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                a.set(i, j, if i == j { v + 4.0 } else { v });
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = solve(&a, &b).unwrap();

        // Shuffle rows of (A|b) with a fixed permutation.
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let mut a2 = DenseMatrix::zeros(n);
        let mut b2 = vec![0.0; n];
        for (to, &from) in perm.iter().enumerate() {
            for j in 0..n {
                a2.set(to, j, a.at(from, j));
            }
            b2[to] = b[from];
        }
        let x2 = solve(&a2, &b2).unwrap();
        for (xi, x2i) in x.iter().zip(&x2) {
            assert!((xi - x2i).abs() <= 1e-10, "{xi} vs {x2i}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Construct-then-solve on random diagonally dominant systems.
        #[test]
        fn random_dominant_systems(seed in any::<u64>(), n in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = DenseMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    a.set(i, j, if i == j { v + 3.0 } else { v });
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = a.mat_vec(&x_true);
            let x = solve(&a, &b).unwrap();
            for (xi, ti) in x.iter().zip(&x_true) {
                prop_assert!((xi - ti).abs() < 1e-8);
            }
        }
    }
}
