//! Dense LU factorization with partial pivoting for the small square
//! matrices used by the separation loop (N is at most a few dozen).

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot smaller than this times `max|A|` is
/// treated as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Packed LU factors of a row-permuted square matrix, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::invalid(format!(
                "LU needs a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let threshold = SINGULAR_TOLERANCE * scale;

        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;

        for k in 0..n {
            let mut p = k;
            let mut best = lu[[k, k]].abs();
            for i in k + 1..n {
                let v = lu[[i, k]].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold || best == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot: best,
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[[k, k]];
            for i in k + 1..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[[i, j]] -= factor * lu[[k, j]];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn determinant(&self) -> f64 {
        self.lu.diag().iter().product::<f64>() * self.sign
    }

    /// `ln|det A|`, accumulated in log space so it stays finite for
    /// matrices whose determinant under- or overflows.
    pub fn ln_abs_det(&self) -> f64 {
        self.lu.diag().iter().map(|d| d.abs().ln()).sum()
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        let mut x: Array1<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        x
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut inv = Array2::zeros((n, n));
        let mut e = Array1::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            inv.column_mut(j).assign(&self.solve(&e));
        }
        inv
    }
}

pub fn inverse(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(Lu::factor(a)?.inverse())
}

/// `(A^{-1})^T`, the term the standard InfoMax gradient needs.
pub fn inverse_transpose(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(Lu::factor(a)?.inverse().reversed_axes())
}

pub fn frobenius_norm(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn determinant_of_2x2() {
        let a = array![[4.0, 3.0], [6.0, 3.0]];
        let lu = Lu::factor(a.view()).unwrap();
        assert!((lu.determinant() - (-6.0)).abs() < 1e-12);
        assert!((lu.ln_abs_det() - 6.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = array![[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        let inv = inverse(a.view()).unwrap();
        let prod = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let lu = Lu::factor(a.view()).unwrap();
        assert_eq!(lu.determinant(), -1.0);
        assert_eq!(lu.inverse(), a);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(
            Lu::factor(a.view()),
            Err(Error::SingularMatrix { .. })
        ));
        let z = Array2::<f64>::zeros((3, 3));
        assert!(Lu::factor(z.view()).is_err());
    }

    #[test]
    fn non_square_is_invalid() {
        let a = Array2::<f64>::zeros((2, 3));
        assert!(matches!(
            Lu::factor(a.view()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn inverse_transpose_matches_definition() {
        let a = array![[1.0, 2.0], [3.0, 5.0]];
        let it = inverse_transpose(a.view()).unwrap();
        // inv = [[-5, 2], [3, -1]]
        assert!((it[[0, 0]] + 5.0).abs() < 1e-12);
        assert!((it[[0, 1]] - 3.0).abs() < 1e-12);
        assert!((it[[1, 0]] - 2.0).abs() < 1e-12);
        assert!((it[[1, 1]] + 1.0).abs() < 1e-12);
    }
}
