//! Dense complex helpers shared by the simulation modules.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Only the upper triangle is read. Backed by LAPACK `zheevd`.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let (w, _) = zheevd(m, false)?;
    Ok(w)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix.
pub fn hermitian_eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (w, v) = zheevd(m, true)?;
    Ok((w, v.expect("eigenvectors requested")))
}

fn zheevd(m: &CMatrix, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape { expected: n, got: m.ncols() });
    }
    if n == 0 {
        return Ok((Vec::new(), vectors.then(|| CMatrix::zeros(0, 0))));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical {
            message: "non-finite matrix entry passed to eigensolver".into(),
            residual: f64::NAN,
        });
    }
    let job = if vectors { b'V' } else { b'N' };
    let ni = i32::try_from(n).map_err(|_| Error::size("matrix too large for LAPACK"))?;
    // nalgebra is column-major, as LAPACK expects
    let mut a: Vec<C64> = m.as_slice().to_vec();
    let mut w = vec![0.0; n];
    let mut info = 0;

    let mut work = vec![C64::new(0.0, 0.0); 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::zheevd(
            job, b'U', ni, &mut a, ni, &mut w, &mut work, -1, &mut rwork, -1, &mut iwork, -1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical {
            message: format!("zheevd workspace query failed (info = {info})"),
            residual: f64::NAN,
        });
    }
    let lwork = work[0].re.max(1.0) as usize;
    let lrwork = rwork[0].max(1.0) as usize;
    let liwork = iwork[0].max(1) as usize;
    let mut work = vec![C64::new(0.0, 0.0); lwork];
    let mut rwork = vec![0.0; lrwork];
    let mut iwork = vec![0i32; liwork];
    unsafe {
        lapack::zheevd(
            job,
            b'U',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        // info > 0: the divide-and-conquer step failed to converge
        return Err(Error::Numerical {
            message: format!("Hermitian eigensolver did not converge (info = {info})"),
            residual: hermiticity_defect(m),
        });
    }
    let vecs = vectors.then(|| CMatrix::from_vec(n, n, a));
    Ok((w, vecs))
}

/// `a · b^†` through BLAS `zgemm`.
pub fn mul_adjoint(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols(), "inner dimensions must agree");
    let (m, k) = a.shape();
    let n = b.nrows();
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    unsafe {
        blas::zgemm(
            b'N',
            b'C',
            m as i32,
            n as i32,
            k as i32,
            one,
            a.as_slice(),
            m as i32,
            b.as_slice(),
            n as i32,
            zero,
            c.as_mut_slice(),
            m as i32,
        );
    }
    c
}

/// `a · b` through BLAS `zgemm`.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions must agree");
    let (m, k) = a.shape();
    let n = b.ncols();
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    unsafe {
        blas::zgemm(
            b'N',
            b'N',
            m as i32,
            n as i32,
            k as i32,
            one,
            a.as_slice(),
            m as i32,
            b.as_slice(),
            k as i32,
            zero,
            c.as_mut_slice(),
            m as i32,
        );
    }
    c
}

/// Largest absolute entry of `m - m^†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Kronecker product `a ⊗ b` with `a` as the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Partial transpose on the second tensor factor of a `(da·db)`-dimensional
/// operator: `(a b, a' b') -> (a b', a' b)`.
pub fn partial_transpose_second(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let d = da * db;
    assert_eq!(m.shape(), (d, d), "operator dimension must be da*db");
    CMatrix::from_fn(d, d, |r, c| {
        let (a, b) = (r / db, r % db);
        let (ap, bp) = (c / db, c % db);
        m[(a * db + bp, ap * db + b)]
    })
}
