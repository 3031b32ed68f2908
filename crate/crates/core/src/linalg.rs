//! Dense linear-algebra kernels shared by certification and solving:
//! Hermitian eigenvalues, SVD null vectors, and minimal-norm least squares.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Max-entry deviation of `m` from its adjoint.
pub(crate) fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    (m - m.adjoint()).map(|z| z.norm()).max()
}

/// Max-entry deviation of `m·m†` from the identity.
pub(crate) fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    (prod - DMatrix::<Complex64>::identity(n, n))
        .map(|z| z.norm())
        .max()
}

/// Eigenvalues of a Hermitian matrix (symmetrized first to shed roundoff).
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
}

/// Smallest eigenvalue and a matching unit eigenvector of a real symmetric
/// matrix.
pub(crate) fn symmetric_min_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let se = SymmetricEigen::new(m.clone());
    let mut arg = 0;
    for (i, ev) in se.eigenvalues.iter().enumerate() {
        if *ev < se.eigenvalues[arg] {
            arg = i;
        }
    }
    (se.eigenvalues[arg], se.eigenvectors.column(arg).into_owned())
}

/// Smallest singular value of `a` together with the corresponding unit
/// right-singular vector (a near-null vector when the value is tiny).
pub(crate) fn smallest_singular_pair(a: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let svd = a.clone().svd(true, true);
    let vt = svd.v_t.expect("svd computed with vectors");
    let mut arg = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[arg] {
            arg = i;
        }
    }
    // v_t holds V†; the right-singular vector is the adjoint of its row.
    // Only sound for tall systems: a wide matrix has null directions with
    // no singular triple at all.
    let v = vt.row(arg).adjoint();
    (svd.singular_values[arg], v)
}

/// Minimal-norm least-squares solution of `a·x = b` via SVD, with singular
/// values below `rank_rtol · σ_max` treated as zero.
pub(crate) fn min_norm_least_squares(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    rank_rtol: f64,
) -> DVector<Complex64> {
    let svd = a.clone().svd(true, true);
    let smax = svd
        .singular_values
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);
    let eps = if smax > 0.0 { rank_rtol * smax } else { rank_rtol };
    let x = svd
        .solve(b, eps)
        .expect("svd solve with computed factors cannot fail");
    DVector::from_column_slice(x.as_slice())
}
