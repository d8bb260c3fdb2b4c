//! Thin wrappers over the system LAPACK for the dense kernels.
//!
//! Everything here works on square row-major `ndarray` matrices. LAPACK is
//! column-major, so the buffers are interpreted as transposes: for symmetric
//! and Hermitian input that costs nothing beyond a conjugation fix-up on
//! complex eigenvectors. Eigenvectors come back as the *rows* of the returned
//! array, which also keeps them contiguous for the spectral-calculus loops.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{CoreError, Result};

type C64 = Complex64;

/// Eigendecomposition of a real symmetric matrix (divide and conquer).
///
/// Returns ascending eigenvalues and a matrix whose row `k` is the `k`-th
/// orthonormal eigenvector.
pub fn eigh_real(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::SolverBreakdown("eigh needs a square matrix".into()));
    }
    let mut buf = a.clone();
    let buf_slice = buf
        .as_slice_mut()
        .ok_or_else(|| CoreError::SolverBreakdown("matrix not contiguous".into()))?;
    let n_i = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let (mut work_q, mut iwork_q) = ([0.0f64], [0i32]);
    unsafe {
        lapack_sys::dsyevd_(
            &(b'V' as i8),
            &(b'L' as i8),
            &n_i,
            buf_slice.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &(-1i32),
            iwork_q.as_mut_ptr(),
            &(-1i32),
            &mut info,
        );
    }
    let lwork = work_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &(b'V' as i8),
            &(b'L' as i8),
            &n_i,
            buf_slice.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::SolverBreakdown(format!("dsyevd info = {info}")));
    }
    // LAPACK wrote eigenvectors column-major; in row-major view row k is the
    // k-th eigenvector.
    Ok((w, buf))
}

/// Eigendecomposition of a complex Hermitian matrix.
///
/// Returns ascending eigenvalues and a matrix whose row `k` is the `k`-th
/// orthonormal eigenvector.
pub fn eigh_complex(a: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::SolverBreakdown("eigh needs a square matrix".into()));
    }
    let mut buf = a.clone();
    let buf_slice = buf
        .as_slice_mut()
        .ok_or_else(|| CoreError::SolverBreakdown("matrix not contiguous".into()))?;
    let n_i = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let (mut work_q, mut rwork_q, mut iwork_q) = ([C64::new(0.0, 0.0)], [0.0f64], [0i32]);
    unsafe {
        lapack_sys::zheevd_(
            &(b'V' as i8),
            &(b'L' as i8),
            &n_i,
            buf_slice.as_mut_ptr() as *mut _,
            &n_i,
            w.as_mut_ptr(),
            work_q.as_mut_ptr() as *mut _,
            &(-1i32),
            rwork_q.as_mut_ptr(),
            &(-1i32),
            iwork_q.as_mut_ptr(),
            &(-1i32),
            &mut info,
        );
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &(b'V' as i8),
            &(b'L' as i8),
            &n_i,
            buf_slice.as_mut_ptr() as *mut _,
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::SolverBreakdown(format!("zheevd info = {info}")));
    }
    // The buffer held the transpose, i.e. the conjugate of the Hermitian
    // input, whose eigenvectors are the conjugates of those of the input.
    let vecs = buf.mapv(|v| v.conj());
    Ok((w, vecs))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn invert_spd(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::SolverBreakdown("inverse needs a square matrix".into()));
    }
    let mut buf = a.clone();
    let slice = buf
        .as_slice_mut()
        .ok_or_else(|| CoreError::SolverBreakdown("matrix not contiguous".into()))?;
    let n_i = n as i32;
    let mut info = 0i32;
    unsafe {
        lapack_sys::dpotrf_(&(b'L' as i8), &n_i, slice.as_mut_ptr(), &n_i, &mut info);
    }
    if info != 0 {
        return Err(CoreError::SolverBreakdown(format!(
            "dpotrf info = {info} (matrix not positive definite?)"
        )));
    }
    unsafe {
        lapack_sys::dpotri_(&(b'L' as i8), &n_i, slice.as_mut_ptr(), &n_i, &mut info);
    }
    if info != 0 {
        return Err(CoreError::SolverBreakdown(format!("dpotri info = {info}")));
    }
    // LAPACK's lower triangle sits in the row-major upper triangle; mirror it
    // down. The inverse of a symmetric matrix is symmetric, so the transpose
    // ambiguity is immaterial.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = buf[[i, j]];
            buf[[j, i]] = v;
        }
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn real_eigh_small_and_medium() {
        let a = array![[2.0, 1.0, 0.5], [1.0, 3.0, -0.7], [0.5, -0.7, 1.5]];
        let (vals, vecs) = eigh_real(&a).unwrap();
        for k in 0..3 {
            let v = vecs.row(k);
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[[i, j]] * v[j]).sum();
                assert_abs_diff_eq!(av, vals[k] * v[i], epsilon = 1e-12);
            }
        }
        // Larger random case.
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        let (vals, vecs) = eigh_real(&m).unwrap();
        for k in [0, n / 2, n - 1] {
            let v = vecs.row(k).to_owned();
            let av = m.dot(&v);
            let resid: f64 = (0..n).map(|j| (av[j] - vals[k] * v[j]).abs()).sum();
            assert!(resid < 1e-10, "resid {resid}");
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn complex_eigh_hermitian() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    C64::new(rng.gen_range(-1.0..1.0), 0.0)
                } else {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                };
                m[[i, j]] = v;
                m[[j, i]] = v.conj();
            }
        }
        let (vals, vecs) = eigh_complex(&m).unwrap();
        for k in [0, n / 3, n - 1] {
            let v = vecs.row(k).to_owned();
            let av = m.dot(&v);
            let resid: f64 = (0..n).map(|j| (av[j] - vals[k] * v[j]).norm()).sum();
            assert!(resid < 1e-10, "resid {resid}");
        }
    }

    #[test]
    fn spd_inverse() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                b[[i, j]] = rng.gen_range(-1.0..1.0);
            }
        }
        // A = B B^T + n I is SPD.
        let mut a = b.dot(&b.t());
        for i in 0..n {
            a[[i, i]] += n as f64;
        }
        let inv = invert_spd(&a).unwrap();
        let prod = a.dot(&inv);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[[i, j]], want, epsilon = 1e-10);
            }
        }
    }
}
