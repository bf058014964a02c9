//! Small dense and structured symmetric solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateFit("information matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Symmetric matrix with a tridiagonal leading block and a dense border:
///
/// ```text
/// [ T   B ]
/// [ B'  C ]
/// ```
///
/// `T` is `m × m` with `diag` and `off` (`off[k]` couples `k` and `k+1`), `B` is
/// `m × p` and `C` is `p × p`. The cumulative-link information matrix has this
/// shape because each observation touches at most two adjacent intercepts.
#[derive(Debug, Clone)]
pub struct ArrowMatrix {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub border: DMatrix<f64>,
    pub corner: DMatrix<f64>,
}

impl ArrowMatrix {
    pub fn zeros(m: usize, p: usize) -> Self {
        Self {
            diag: vec![0.0; m],
            off: vec![0.0; m.saturating_sub(1)],
            border: DMatrix::zeros(m, p),
            corner: DMatrix::zeros(p, p),
        }
    }

    /// Solves the system for a positive definite arrow matrix in `O(m p^2 + p^3)`.
    pub fn solve(&self, rhs_t: &[f64], rhs_c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.diag.len();
        let p = self.corner.nrows();
        let ldl = TridiagLdl::factor(&self.diag, &self.off)?;
        let tinv_b: Vec<Vec<f64>> = (0..p)
            .map(|j| ldl.solve(&self.border.column(j).iter().copied().collect::<Vec<_>>()))
            .collect();
        let tinv_r = ldl.solve(rhs_t);
        if p == 0 {
            return Ok((tinv_r, Vec::new()));
        }
        let mut schur = self.corner.clone();
        let mut rhs = DVector::from_column_slice(rhs_c);
        for a in 0..p {
            for b in 0..p {
                let s: f64 = (0..m).map(|k| self.border[(k, a)] * tinv_b[b][k]).sum();
                schur[(a, b)] -= s;
            }
            rhs[a] -= (0..m).map(|k| self.border[(k, a)] * tinv_r[k]).sum::<f64>();
        }
        let v = solve_spd(&schur, &rhs)?;
        let u = (0..m)
            .map(|k| tinv_r[k] - (0..p).map(|j| tinv_b[j][k] * v[j]).sum::<f64>())
            .collect();
        Ok((u, v.iter().copied().collect()))
    }
}

/// `L D L'` factorization of a symmetric tridiagonal matrix.
struct TridiagLdl {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl TridiagLdl {
    fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut d = vec![0.0; m];
        let mut l = vec![0.0; m.saturating_sub(1)];
        for k in 0..m {
            d[k] = diag[k] - if k > 0 { l[k - 1] * l[k - 1] * d[k - 1] } else { 0.0 };
            if !(d[k] > 0.0) || !d[k].is_finite() {
                return Err(Error::DegenerateFit(
                    "intercept information matrix is not positive definite".into(),
                ));
            }
            if k + 1 < m {
                l[k] = off[k] / d[k];
            }
        }
        Ok(Self { d, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.d.len();
        let mut x = b.to_vec();
        for k in 1..m {
            x[k] -= self.l[k - 1] * x[k - 1];
        }
        for k in 0..m {
            x[k] /= self.d[k];
        }
        for k in (0..m.saturating_sub(1)).rev() {
            x[k] -= self.l[k] * x[k + 1];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrow_solve_matches_dense() {
        let m = 5;
        let p = 2;
        let mut a = ArrowMatrix::zeros(m, p);
        for k in 0..m {
            a.diag[k] = 4.0 + k as f64;
        }
        for k in 0..m - 1 {
            a.off[k] = -1.0 + 0.1 * k as f64;
        }
        for k in 0..m {
            a.border[(k, 0)] = 0.3 * k as f64;
            a.border[(k, 1)] = -0.2 + 0.05 * k as f64;
        }
        a.corner = DMatrix::from_row_slice(2, 2, &[6.0, 0.5, 0.5, 5.0]);

        let mut dense = DMatrix::zeros(m + p, m + p);
        for k in 0..m {
            dense[(k, k)] = a.diag[k];
            if k + 1 < m {
                dense[(k, k + 1)] = a.off[k];
                dense[(k + 1, k)] = a.off[k];
            }
            for j in 0..p {
                dense[(k, m + j)] = a.border[(k, j)];
                dense[(m + j, k)] = a.border[(k, j)];
            }
        }
        for i in 0..p {
            for j in 0..p {
                dense[(m + i, m + j)] = a.corner[(i, j)];
            }
        }
        let rhs: Vec<f64> = (0..m + p).map(|i| (i as f64).sin() + 1.0).collect();
        let want = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let (u, v) = a.solve(&rhs[..m], &rhs[m..]).unwrap();
        for k in 0..m {
            assert!((u[k] - want[k]).abs() < 1e-12);
        }
        for j in 0..p {
            assert!((v[j] - want[m + j]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = ArrowMatrix {
            diag: vec![1.0, -1.0],
            off: vec![0.0],
            border: DMatrix::zeros(2, 0),
            corner: DMatrix::zeros(0, 0),
        };
        assert!(a.solve(&[1.0, 1.0], &[]).is_err());
    }
}
