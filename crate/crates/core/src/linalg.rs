//! Small dense complex linear-algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `(A + A^H) / 2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Real trace.
pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0.first().copied().unwrap_or(0.0)
}

/// Factor `L` with `L L^H = A` for a Hermitian PSD `A`.
///
/// Eigenvalues down to `-tol * max(1, trace)` are clipped to zero; anything
/// more negative is reported as a numerical error.
pub fn psd_factor(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(a);
    let scale = trace_re(a).abs().max(f64::MIN_POSITIVE);
    let mut out = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        if lambda < -tol * scale {
            return Err(Error::Numerical(format!(
                "matrix is not positive semidefinite (eigenvalue {lambda:e}, trace {scale:e})"
            )));
        }
        let s = lambda.max(0.0).sqrt();
        for r in 0..out.nrows() {
            out[(r, c)] *= s;
        }
    }
    Ok(out)
}

/// Clips eigenvalues in `(-eps, 0)` to zero and re-symmetrizes.
pub fn clip_psd(a: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(sym);
    }
    if let Some(&l) = eig.eigenvalues.iter().find(|&&l| l <= -eps) {
        return Err(Error::Numerical(format!(
            "kernel matrix has eigenvalue {l:e} below the repair threshold {:e}",
            -eps
        )));
    }
    let clipped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0)),
    );
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Ok((&rebuilt + rebuilt.transpose()) * 0.5)
}

/// One draw of `CN(0, 1)`.
pub fn cn_scalar<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw of `CN(0, I_n)`.
pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| cn_scalar(rng))
}

/// Draw of `CN(0, L L^H)` given the factor `L`.
pub fn cn_correlated<R: Rng + ?Sized>(rng: &mut R, factor: &CMatrix) -> CVector {
    factor * cn_vector(rng, factor.ncols())
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_factor_reconstructs() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[real(2.0), C64::new(0.5, 0.5), C64::new(0.5, -0.5), real(1.0)],
        );
        let l = psd_factor(&a, 1e-12).unwrap();
        let back = &l * l.adjoint();
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let a = CMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(-1.0)]);
        assert!(psd_factor(&a, 1e-9).is_err());
    }

    #[test]
    fn clip_psd_repairs_tiny_negative() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0 + 1e-12, 1.0 + 1e-12, 1.0]);
        let fixed = clip_psd(&a, 1e-9).unwrap();
        assert!(fixed.symmetric_eigenvalues().min() >= -1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(clip_psd(&bad, 1e-9).is_err());
    }

    #[test]
    fn trace_product_matches_product() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 + 1.0, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64, 0.5));
        let direct: C64 = (&a * &b).trace();
        assert!((trace_product(&a, &b) - direct).norm() < 1e-12);
    }
}
