use faer::complex_native::c64;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub(crate) fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigen-decomposition of a Hermitian matrix, `H = V diag(λ) V†`.
pub(crate) struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = hermiticity_deviation(h);
        if dev > 1e-12 * scale {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let e = to_faer(h).selfadjoint_eigendecomposition(faer::Side::Lower);
        let n = h.nrows();
        let values = DVector::from_fn(n, |k, _| e.s().column_vector().read(k).re);
        let u = e.u();
        let vectors = DMatrix::from_fn(n, n, |i, k| from_c64(u.read(i, k)));
        Ok(Self { values, vectors })
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.values.len();
        let mut left = self.vectors.clone();
        for k in 0..n {
            let ph = Complex64::from_polar(1.0, -self.values[k] * t);
            for i in 0..n {
                left[(i, k)] *= ph;
            }
        }
        left * self.vectors.adjoint()
    }
}

fn to_faer(m: &DMatrix<Complex64>) -> faer::Mat<c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)].re, m[(i, j)].im))
}

fn from_c64(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s = to_faer(m).singular_values();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `exp(-i H t)` for Hermitian `H`.
pub(crate) fn propagator(h: &DMatrix<Complex64>, t: f64) -> Result<DMatrix<Complex64>> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}
