//! Small dense and Krylov-space linear algebra helpers shared by the dynamics
//! and MPS code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending eigen-decomposition of a real symmetric tridiagonal matrix.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Lowest `n_eigs` eigenvalues of a Hermitian operator given by `matvec`,
/// by Lanczos with full reorthogonalization. Converged when every requested
/// Ritz residual is below `tol`.
pub fn lanczos_lowest<F>(
    matvec: F,
    start: &[C64],
    n_eigs: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let dim = start.len();
    let n0 = norm(start);
    if n0 == 0.0 {
        return Err(Error::InvalidArgument("Lanczos start vector is zero".into()));
    }
    let mut basis: Vec<Vec<C64>> = vec![start.iter().map(|x| x / n0).collect()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let max_iter = max_iter.min(dim);
    loop {
        let j = basis.len() - 1;
        let mut w = matvec(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm(&w);
        let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
        let want = n_eigs.min(alpha.len());
        let converged = want == n_eigs
            && (0..want).all(|i| (b * vecs[(alpha.len() - 1, i)]).abs() < tol);
        if converged || b < 1e-12 || basis.len() >= max_iter {
            if want < n_eigs {
                return Err(Error::Convergence {
                    step: alpha.len(),
                    message: format!("Krylov space of dimension {} holds fewer than {n_eigs} eigenvalues", alpha.len()),
                });
            }
            if !converged && b >= 1e-12 && basis.len() < dim {
                return Err(Error::Convergence {
                    step: alpha.len(),
                    message: format!("Lanczos residual above {tol:e} after {max_iter} iterations"),
                });
            }
            return Ok(vals[..n_eigs].to_vec());
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
}

/// `exp(-i·dt·H) v` by a Lanczos projection of dimension at most `max_dim`.
/// Returns `None` when the a-posteriori error estimate exceeds `tol`.
pub fn expm_krylov<F>(matvec: &F, v: &[C64], dt: f64, tol: f64, max_dim: usize) -> Option<Vec<C64>>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n0 = norm(v);
    if n0 == 0.0 {
        return Some(v.to_vec());
    }
    let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|x| x / n0).collect()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    loop {
        let j = basis.len() - 1;
        let mut w = matvec(&basis[j]);
        alpha.push(dot(&basis[j], &w).re);
        for _ in 0..2 {
            for u in &basis {
                let c = dot(u, &w);
                axpy(-c, u, &mut w);
            }
        }
        let b = norm(&w);
        let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
        let m = alpha.len();
        // c = exp(-i dt T) e1 in the Krylov basis
        let coeffs: DVector<C64> = DVector::from_fn(m, |r, _| {
            (0..m)
                .map(|i| vecs[(r, i)] * vecs[(0, i)] * C64::from_polar(1.0, -dt * vals[i]))
                .sum()
        });
        let err = n0 * b * coeffs[m - 1].norm();
        let exhausted = b < 1e-12;
        if err < tol || exhausted {
            let mut out = vec![C64::new(0.0, 0.0); v.len()];
            for (r, u) in basis.iter().enumerate() {
                axpy(coeffs[r] * n0, u, &mut out);
            }
            return Some(out);
        }
        if m >= max_dim {
            return None;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
}

/// Orthonormal columns spanning the input columns, dropping any whose
/// residual after projection falls below `drop_tol`. Column `j` of the result
/// is chosen so that `Q^† A` is upper triangular with non-negative diagonal.
pub fn gram_schmidt_columns(a: &DMatrix<C64>, drop_tol: f64) -> DMatrix<C64> {
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > drop_tol {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(a.nrows(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// Completes orthonormal columns to a full unitary by appending standard
/// basis vectors orthogonalized against the existing span.
pub fn complete_unitary(q: &DMatrix<C64>) -> DMatrix<C64> {
    let d = q.nrows();
    let mut cols: Vec<DVector<C64>> = q.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = DVector::from_fn(d, |r, _| C64::new(if r == e { 1.0 } else { 0.0 }, 0.0));
        for _ in 0..2 {
            for c in &cols {
                let p = c.dotc(&v);
                v -= c * p;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    DMatrix::from_columns(&cols)
}
