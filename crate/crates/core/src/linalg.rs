//! Dense linear-algebra helpers: a cyclic Jacobi eigensolver for small
//! symmetric matrices and Kronecker-structured block operators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius threshold, relative to the Frobenius norm of the input.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = V diag(values) Vᵀ` with eigenvalues ascending and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

impl SymmetricEigen {
    /// Cyclic Jacobi rotations. Only the upper triangle is trusted; the input
    /// is symmetrized first.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "eigensolver needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let mut m = (a + a.transpose()) * 0.5;
        let mut v = DMatrix::<f64>::identity(n, n);
        let scale = m.norm();
        let mut sweeps = 0;

        loop {
            let off = off_diagonal_norm(&m);
            if off <= JACOBI_TOL * scale || scale == 0.0 {
                break;
            }
            if sweeps == JACOBI_MAX_SWEEPS {
                return Err(Error::EigenNotConverged {
                    sweeps,
                    off_norm: off,
                });
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
            sweeps += 1;
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &v.column(src));
        }
        Ok(Self {
            values,
            vectors,
            sweeps,
        })
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(j, self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|_, l| l)
    }
}

fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.nrows();

    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `‖x‖²_D = xᵀ D x`.
pub fn weighted_sq_norm(x: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    x.dot(&(d * x))
}

/// Applies `M ⊗ I_E` to a vector stored as K blocks of length E: block k of
/// the result is `Σ_s M[k, s] x_s`. The EK×EK matrix is never formed.
pub fn kron_apply(m: &DMatrix<f64>, blocks: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let k = blocks.len();
    debug_assert_eq!(m.nrows(), k);
    let e = blocks.first().map_or(0, |b| b.len());
    (0..k)
        .map(|row| {
            let mut out = DVector::zeros(e);
            for (col, b) in blocks.iter().enumerate() {
                let c = m[(row, col)];
                if c != 0.0 {
                    out.axpy(c, b, 1.0);
                }
            }
            out
        })
        .collect()
}

pub fn stack(blocks: &[DVector<f64>]) -> DVector<f64> {
    let n = blocks.iter().map(|b| b.len()).sum();
    DVector::from_iterator(n, blocks.iter().flat_map(|b| b.iter().copied()))
}

/// Splits a stacked vector into blocks of the given sizes.
pub fn unstack(v: &DVector<f64>, sizes: &[usize]) -> Vec<DVector<f64>> {
    let mut offset = 0;
    sizes
        .iter()
        .map(|&len| {
            let b = v.rows(offset, len).into_owned();
            offset += len;
            b
        })
        .collect()
}

pub fn sq_dist_blocks(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum()
}

/// Row-major nested arrays, as used by the JSON file formats.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}
