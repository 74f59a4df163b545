//! Small dense linear-algebra helpers shared by the filters, the smoother and
//! the simulator.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, QR};

/// Replaces `m` by `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(*v))
}

pub fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

/// A square root `S` with `S Sᵀ = m` for a symmetric PSD matrix.
///
/// Uses the Cholesky factor when `m` is positive definite and falls back to
/// the eigen-decomposition `V diag(√max(λ, 0))` for singular matrices, so
/// degenerate directions map to exact zeros.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    if let Some(chol) = Cholesky::new(m.clone()) {
        let l = chol.unpack();
        if l.iter().all(|v| v.is_finite()) {
            return l;
        }
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let mut v = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = libm::sqrt(lambda.max(0.0));
        v.column_mut(j).scale_mut(scale);
    }
    v
}

/// Lower-triangular `L` with `L Lᵀ = A Aᵀ`, obtained from the QR decomposition
/// of `Aᵀ`. `A` must have at least as many columns as rows.
pub fn lower_triangularize(pre: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = pre.nrows();
    debug_assert!(pre.ncols() >= rows);
    let r = QR::new(pre.transpose()).r();
    let mut l = r.transpose();
    // QR of a wide transpose can return extra zero columns; keep the square part.
    if l.ncols() > rows {
        l = l.columns(0, rows).into_owned();
    }
    l
}

/// Solves `L x = b` for lower-triangular `L`, returning `None` on a zero or
/// non-finite pivot.
pub fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let d = l[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let mut acc = x[i];
        for j in 0..i {
            acc -= l[(i, j)] * x[j];
        }
        x[i] = acc / d;
    }
    Some(x)
}

pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_square(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub fn select_entries(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Block-diagonal matrix with `count` copies of `block`.
pub fn block_diagonal(block: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let (br, bc) = block.shape();
    let mut out = DMatrix::zeros(br * count, bc * count);
    for k in 0..count {
        out.view_mut((k * br, k * bc), (br, bc)).copy_from(block);
    }
    out
}

/// Kronecker product `I_count ⊗ block`.
pub fn kron_identity(count: usize, block: &DMatrix<f64>) -> DMatrix<f64> {
    block_diagonal(block, count)
}

pub fn matrices_equal(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

pub(crate) fn nan_vector(n: usize) -> DVector<f64> {
    DVector::from_element(n, f64::NAN)
}

pub(crate) fn nan_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, f64::NAN)
}

/// Scatters a reduced vector back into a full-length one, leaving the
/// unobserved slots as NaN.
pub(crate) fn scatter_vector(reduced: &DVector<f64>, idx: &[usize], full_len: usize) -> DVector<f64> {
    let mut out = nan_vector(full_len);
    for (k, &i) in idx.iter().enumerate() {
        out[i] = reduced[k];
    }
    out
}

pub(crate) fn scatter_square(reduced: &DMatrix<f64>, idx: &[usize], full: usize) -> DMatrix<f64> {
    let mut out = nan_matrix(full);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = reduced[(a, b)];
        }
    }
    out
}
