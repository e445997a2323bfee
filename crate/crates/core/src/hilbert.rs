//! Truncated Fock spaces of labelled cavities tensored with a three-level dot.
//!
//! Basis order: quantum-dot level slowest, then cavity occupations in label
//! order with the last cavity fastest.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{hermiticity_deviation, HermitianEigen};
use crate::{Error, Result};

pub const MAX_DIMENSION: usize = 10_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Ground state and the two orthogonally polarized excitons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QdLevel {
    G,
    X,
    Y,
}

impl QdLevel {
    pub const ALL: [QdLevel; 3] = [QdLevel::G, QdLevel::X, QdLevel::Y];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for QdLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(QdLevel::G),
            "x" | "X" => Ok(QdLevel::X),
            "y" | "Y" => Ok(QdLevel::Y),
            _ => Err(Error::UnknownLevel(s.to_string())),
        }
    }
}

impl fmt::Display for QdLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QdLevel::G => "g",
            QdLevel::X => "x",
            QdLevel::Y => "y",
        })
    }
}

/// Cavity labels with their photon-number truncations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpec {
    pub cavities: Vec<(String, usize)>,
}

impl HilbertSpec {
    pub fn new<S: Into<String>>(cavities: impl IntoIterator<Item = (S, usize)>) -> Self {
        Self { cavities: cavities.into_iter().map(|(l, n)| (l.into(), n)).collect() }
    }

    /// `c1`, `c2` with the given truncation.
    pub fn one_qubit(n_max: usize) -> Self {
        Self::new([("c1", n_max), ("c2", n_max)])
    }

    /// `c3`..`c6` with the given truncation.
    pub fn two_qubit(n_max: usize) -> Self {
        Self::new([("c3", n_max), ("c4", n_max), ("c5", n_max), ("c6", n_max)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    spec: HilbertSpec,
    /// Stride of each cavity inside the cavity block.
    strides: Vec<usize>,
    cav_dim: usize,
}

impl Space {
    pub fn new(spec: HilbertSpec) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut cav_dim: usize = 1;
        for (label, n) in &spec.cavities {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate cavity label `{label}`")));
            }
            if *n == 0 {
                return Err(Error::InvalidParameter(format!("cavity `{label}` needs n_max >= 1")));
            }
            cav_dim = cav_dim.saturating_mul(n + 1);
        }
        let dim = cav_dim.saturating_mul(3);
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionOverflow { dim, cap: MAX_DIMENSION });
        }
        let mut strides = vec![1; spec.cavities.len()];
        for k in (0..spec.cavities.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * (spec.cavities[k + 1].1 + 1);
        }
        Ok(Self { spec, strides, cav_dim })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        3 * self.cav_dim
    }

    pub fn cavity_position(&self, label: &str) -> Result<usize> {
        self.spec.cavities.iter().position(|(l, _)| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn n_max(&self, label: &str) -> Result<usize> {
        Ok(self.spec.cavities[self.cavity_position(label)?].1)
    }

    /// Index of the basis state with the given occupations (label order).
    pub fn index(&self, occupations: &[usize], qd: QdLevel) -> Result<usize> {
        if occupations.len() != self.spec.cavities.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} occupations, got {}",
                self.spec.cavities.len(),
                occupations.len()
            )));
        }
        let mut idx = qd.index() * self.cav_dim;
        for (k, (&n, (label, n_max))) in occupations.iter().zip(&self.spec.cavities).enumerate() {
            if n > *n_max {
                return Err(Error::OutOfTruncation { label: label.clone(), occupation: n, n_max: *n_max });
            }
            idx += n * self.strides[k];
        }
        Ok(idx)
    }

    /// Occupations and dot level of a basis index.
    pub fn decode(&self, index: usize) -> (Vec<usize>, QdLevel) {
        let qd = QdLevel::ALL[index / self.cav_dim];
        let rem = index % self.cav_dim;
        let occ = self.spec.cavities.iter().enumerate().map(|(k, (_, n))| (rem / self.strides[k]) % (n + 1)).collect();
        (occ, qd)
    }

    /// Compact label such as `|0110x>`.
    pub fn basis_label(&self, index: usize) -> String {
        let (occ, qd) = self.decode(index);
        let digits: String = occ.iter().map(|n| n.to_string()).collect();
        format!("|{digits}{qd}>")
    }

    /// Basis state from `(label, occupation)` pairs; unnamed cavities are empty.
    pub fn basis_state(&self, occupations: &[(&str, usize)], qd: QdLevel) -> Result<StateVector> {
        let mut occ = vec![0; self.spec.cavities.len()];
        for (label, n) in occupations {
            occ[self.cavity_position(label)?] = *n;
        }
        let mut v = DVector::from_element(self.dim(), ZERO);
        v[self.index(&occ, qd)?] = ONE;
        Ok(StateVector(v))
    }

    pub fn vacuum(&self) -> StateVector {
        let mut v = DVector::from_element(self.dim(), ZERO);
        v[0] = ONE;
        StateVector(v)
    }

    pub fn identity(&self) -> LinearOperator {
        LinearOperator(DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn zero(&self) -> LinearOperator {
        LinearOperator(DMatrix::from_element(self.dim(), self.dim(), ZERO))
    }

    pub fn annihilation(&self, label: &str) -> Result<LinearOperator> {
        let k = self.cavity_position(label)?;
        let stride = self.strides[k];
        let mut m = DMatrix::from_element(self.dim(), self.dim(), ZERO);
        for col in 0..self.dim() {
            let (occ, _) = self.decode(col);
            if occ[k] > 0 {
                m[(col - stride, col)] = Complex64::new((occ[k] as f64).sqrt(), 0.0);
            }
        }
        Ok(LinearOperator(m))
    }

    pub fn number(&self, label: &str) -> Result<LinearOperator> {
        let k = self.cavity_position(label)?;
        let diag = DVector::from_fn(self.dim(), |i, _| Complex64::new(self.decode(i).0[k] as f64, 0.0));
        Ok(LinearOperator(DMatrix::from_diagonal(&diag)))
    }

    /// `|to><from|` on the dot, identity on the cavities.
    pub fn qd_transition(&self, to: QdLevel, from: QdLevel) -> LinearOperator {
        let mut m = DMatrix::from_element(self.dim(), self.dim(), ZERO);
        for c in 0..self.cav_dim {
            m[(to.index() * self.cav_dim + c, from.index() * self.cav_dim + c)] = ONE;
        }
        LinearOperator(m)
    }

    pub fn qd_projector(&self, level: QdLevel) -> LinearOperator {
        self.qd_transition(level, level)
    }

    /// Total photons plus dot excitations.
    pub fn excitation_number(&self) -> LinearOperator {
        let diag = DVector::from_fn(self.dim(), |i, _| {
            let (occ, qd) = self.decode(i);
            let n: usize = occ.iter().sum::<usize>() + usize::from(qd != QdLevel::G);
            Complex64::new(n as f64, 0.0)
        });
        LinearOperator(DMatrix::from_diagonal(&diag))
    }
}

/// Dense operator on a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator(pub DMatrix<Complex64>);

impl LinearOperator {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scaled(&self, c: impl Into<Complex64>) -> Self {
        Self(&self.0 * c.into())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector(&self.0 * &psi.0)
    }

    pub fn expectation(&self, psi: &StateVector) -> Complex64 {
        psi.0.dotc(&(&self.0 * &psi.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Add for LinearOperator {
    type Output = LinearOperator;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl std::ops::Sub for LinearOperator {
    type Output = LinearOperator;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub DVector<Complex64>);

impl StateVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero state".into()));
        }
        Ok(Self(&self.0 / Complex64::new(n, 0.0)))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn add_scaled(&self, c: Complex64, other: &Self) -> Self {
        Self(&self.0 + &other.0 * c)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.0[index].norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub DMatrix<Complex64>);

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        Self(&psi.0 * psi.0.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.0)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        HermitianEigen::new(&herm).map(|e| e.values.min()).unwrap_or(f64::NAN)
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        psi.0.dotc(&(&self.0 * &psi.0)).re
    }
}
