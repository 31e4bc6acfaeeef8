//! Complex linear-algebra helpers: real embedding of Hermitian matrices,
//! orthogonal complements and PSD projection.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::real::Real;
use crate::scene::RANK_TOLERANCE;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Real symmetric embedding `[Re H, −Im H; Im H, Re H]` of a Hermitian
/// matrix. `tr(φ(A)φ(B)) = 2·tr(AB)` for Hermitian `A`, `B`.
pub fn embed<T: Real>(h: &CMatrix<T>) -> DMatrix<T> {
    let n = h.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
        }
    }
    m
}

/// Inverse of [`embed`], averaging the redundant blocks.
pub fn unembed<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    let n = m.nrows() / 2;
    let half = T::lit(0.5);
    CMatrix::from_fn(n, n, |i, j| {
        Complex::new(
            half * (m[(i, j)] + m[(i + n, j + n)]),
            half * (m[(i + n, j)] - m[(i, j + n)]),
        )
    })
}

pub fn hermitian_part<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    (h + h.adjoint()).scale(T::lit(0.5))
}

/// `u† M v`.
pub fn sesquilinear<T: Real>(u: &CVector<T>, m: &CMatrix<T>, v: &CVector<T>) -> Complex<T> {
    u.dotc(&(m * v))
}

pub fn trace_re<T: Real>(h: &CMatrix<T>) -> T {
    h.diagonal().iter().fold(T::zero(), |acc, z| acc + z.re)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Real>(h: &CMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = SymmetricEigen::new(hermitian_part(h)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

pub fn min_eigenvalue<T: Real>(h: &CMatrix<T>) -> T {
    hermitian_eigenvalues(h).first().copied().unwrap_or_else(T::zero)
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
pub fn project_psd<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    let eig = SymmetricEigen::new(hermitian_part(h));
    let clipped = eig.eigenvalues.map(|l| l.max(T::zero()));
    let v = &eig.eigenvectors;
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)].scale(clipped[j]));
    hermitian_part(&(scaled * v.adjoint()))
}

/// Orthonormal basis of the span of `vectors` (numerical rank cut at
/// `RANK_TOLERANCE` relative to the largest singular value).
pub fn span_basis<T: Real>(n: usize, vectors: &[CVector<T>]) -> CMatrix<T> {
    if vectors.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    let a = CMatrix::from_columns(vectors);
    let svd = a.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let largest = svd.singular_values.iter().copied().fold(T::zero(), |x, y| x.max(y));
    if largest == T::zero() {
        return CMatrix::zeros(n, 0);
    }
    let cutoff = largest * T::lit(RANK_TOLERANCE);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .collect();
    CMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis (as columns) of the orthogonal complement of the span
/// of `vectors` in `C^n`. Returns an `n×0` matrix when the span is full.
pub fn complement_basis<T: Real>(n: usize, vectors: &[CVector<T>]) -> CMatrix<T> {
    let q = span_basis(n, vectors);
    let projector = CMatrix::identity(n, n) - &q * q.adjoint();
    let eig = SymmetricEigen::new(hermitian_part(&projector));
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > T::lit(0.5)).collect();
    let basis = CMatrix::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
    // one Gram-Schmidt sweep against the span removes eigen-solver noise
    let mut out = basis.clone();
    for mut col in out.column_iter_mut() {
        for qc in q.column_iter() {
            let c = qc.dotc(&col);
            col -= qc * c;
        }
    }
    orthonormalize(out)
}

fn orthonormalize<T: Real>(mut m: CMatrix<T>) -> CMatrix<T> {
    for j in 0..m.ncols() {
        for i in 0..j {
            let qi = m.column(i).clone_owned();
            let c = qi.dotc(&m.column(j));
            let mut col = m.column_mut(j);
            col -= qi * c;
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    m
}

/// Largest entry modulus of `u† v` over the columns of `basis`.
pub fn max_projection<T: Real>(basis: &CMatrix<T>, v: &CVector<T>) -> T {
    (basis.adjoint() * v).iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AntennaArray;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn embedding_roundtrip_and_trace_identity() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, -1.0), c(0.5, 1.0), c(1.0, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)]);
        assert_eq!(unembed(&embed(&a)), a);
        let lhs = (embed(&a) * embed(&b)).trace();
        let rhs = 2.0 * (a * b).trace().re;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn complement_of_nothing_is_unitary() {
        let u = complement_basis::<f64>(3, &[]);
        assert_eq!(u.ncols(), 3);
        assert!((u.adjoint() * &u - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn complement_of_one_vector() {
        let a = AntennaArray::ula(3).unwrap().steering(0.4_f64);
        let u = complement_basis(3, &[a.clone()]);
        assert_eq!(u.ncols(), 2);
        assert!(max_projection(&u, &a) < 1e-12);
        assert!((u.adjoint() * &u - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn complement_of_two_steering_vectors() {
        let arr = AntennaArray::ula(4).unwrap();
        let (a, b) = (arr.steering(-0.3_f64), arr.steering(0.8_f64));
        let u = complement_basis(4, &[a.clone(), b.clone()]);
        assert_eq!(u.ncols(), 2);
        // projector oracle: (I - P_span) u = u for each column
        let m = CMatrix::from_columns(&[a.clone(), b.clone()]);
        let gram = m.adjoint() * &m;
        let p_span = &m * gram.try_inverse().unwrap() * m.adjoint();
        let resid = (&p_span * &u).norm();
        assert!(resid < 1e-10);
        assert!(max_projection(&u, &a) < 1e-10 && max_projection(&u, &b) < 1e-10);
    }

    #[test]
    fn complement_of_spanning_set_is_empty() {
        let arr = AntennaArray::ula(2).unwrap();
        let vs = [arr.steering(-0.3_f64), arr.steering(0.2), arr.steering(0.9)];
        assert_eq!(complement_basis(2, &vs).ncols(), 0);
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)]);
        let p = project_psd(&h);
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(p[(1, 1)].modulus() < 1e-12);
        assert!(min_eigenvalue(&p) > -1e-12);
    }
}
