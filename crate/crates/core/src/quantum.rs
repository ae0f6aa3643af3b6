//! Dense complex linear algebra and the quantum primitives built on it.
//!
//! Everything here is sized for the few-party systems this crate deals with
//! (total dimension at most 9), so matrices are plain row-major `Vec`s and
//! the algorithms favour clarity over asymptotics.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const STATE_HERMITIAN_TOL: f64 = 1e-10;
const STATE_TRACE_TOL: f64 = 1e-10;
const STATE_PSD_TOL: f64 = 1e-9;
/// Tolerance used when an operator must be Hermitian (observables, eigen input).
pub const HERMITIAN_TOL: f64 = 1e-8;

#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let m = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(n, m, data).expect("valid literal matrix")
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| c64(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c64(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(c64(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermiticity, `max |M_ij - conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert!(self.cols == other.rows && self.rows == other.cols);
        let mut acc = C64::default();
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::default() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let s = a[(ai, aj)];
            for bi in 0..b.rows {
                for bj in 0..b.cols {
                    out[(ai * b.rows + bi, aj * b.cols + bj)] = s * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Left-fold of [`tensor`] over a non-empty list of factors.
pub fn tensor_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    let mut it = factors.into_iter();
    let first = it.next().expect("at least one tensor factor").clone();
    it.fold(first, |acc, m| tensor(&acc, m))
}

/// Kronecker product of state vectors.
pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Density matrix of a (possibly mixed) state.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    rho: ComplexMatrix,
}

impl QuantumState {
    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let dev = rho.hermitian_deviation();
        if dev > STATE_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TRACE_TOL || tr.im.abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (vals, _) = hermitian_eig(&rho).map_err(|e| Error::InvalidState(e.to_string()))?;
        if let Some(min) = vals.first() {
            if *min < -STATE_PSD_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self { rho })
    }

    /// Rank-one state from amplitudes; the vector is normalised.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector must be nonzero and finite".into()));
        }
        let v: Vec<C64> = amplitudes.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            rho: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// `p·a + (1-p)·b`.
    pub fn mixture(p: f64, a: &QuantumState, b: &QuantumState) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidState(format!("mixing weight {p} outside [0, 1]")));
        }
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Self::new(&a.rho.scale(p) + &b.rho.scale(1.0 - p))
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    /// `⟨v|ρ|v⟩` for a (not necessarily normalised) vector.
    pub fn vector_expectation(&self, v: &[C64]) -> f64 {
        let rv = self.rho.apply(v);
        v.iter().zip(rv).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }
}

/// Real coefficients `θ_i` of `H = Σ θ_i λ_i` over the generalized Gell-Mann basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianGenerator {
    dim: usize,
    coefficients: Vec<f64>,
}

impl HermitianGenerator {
    pub fn new(dim: usize, coefficients: Vec<f64>) -> Result<Self> {
        if !matches!(dim, 2 | 3) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coefficients.len() != dim * dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: dim * dim - 1,
                found: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("generator coefficients must be finite".into()));
        }
        Ok(Self { dim, coefficients })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `H = Σ θ_i λ_i`, Hermitian by construction.
    pub fn matrix(&self) -> ComplexMatrix {
        let basis = gell_mann_basis(self.dim).expect("dimension validated on construction");
        let mut h = ComplexMatrix::zeros(self.dim, self.dim);
        for (theta, lambda) in self.coefficients.iter().zip(&basis) {
            h = &h + &lambda.scale(*theta);
        }
        h
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are returned in ascending order and the eigenvectors are the
/// matching columns of the second matrix.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::NotHermitian(f64::INFINITY));
    }
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.rows();
    let eig = SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, new_col)] = eig.eigenvectors[(row, old_col)];
        }
    }
    Ok((values, vectors))
}

/// `U = exp(iH)` through the eigendecomposition of `H`.
pub fn unitary_from_hermitian(generator: &HermitianGenerator) -> ComplexMatrix {
    let h = generator.matrix();
    let (values, v) = hermitian_eig(&h).expect("Gell-Mann combination is Hermitian");
    let phases: Vec<C64> = values.iter().map(|&x| C64::from_polar(1.0, x)).collect();
    &(&v * &ComplexMatrix::diagonal(&phases)) * &v.adjoint()
}

/// `Tr(ρ·obs)` for a Hermitian observable.
pub fn expectation(state: &QuantumState, obs: &ComplexMatrix) -> Result<f64> {
    if obs.rows() != state.dim() || obs.cols() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: obs.rows(),
        });
    }
    let dev = obs.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(state.rho.trace_product(obs).re)
}

pub fn pauli_x() -> ComplexMatrix {
    let (o, l) = (c64(0.0, 0.0), c64(1.0, 0.0));
    ComplexMatrix::from_rows(&[&[o, l], &[l, o]])
}

pub fn pauli_y() -> ComplexMatrix {
    let o = c64(0.0, 0.0);
    ComplexMatrix::from_rows(&[&[o, c64(0.0, -1.0)], &[c64(0.0, 1.0), o]])
}

pub fn pauli_z() -> ComplexMatrix {
    let (o, l) = (c64(0.0, 0.0), c64(1.0, 0.0));
    ComplexMatrix::from_rows(&[&[l, o], &[o, -l]])
}

/// Traceless Hermitian generators with `Tr(λ_i λ_j) = 2δ_ij`.
///
/// `dim = 2` gives the Pauli matrices `(σ1, σ2, σ3)`. `dim = 3` gives the
/// eight Gell-Mann matrices grouped as symmetric off-diagonal (pairs 01, 02,
/// 12), antisymmetric off-diagonal (same pairs), then the two diagonal ones
/// `diag(1,-1,0)` and `diag(1,1,-2)/√3`. This order fixes the meaning of each
/// qutrit setting parameter.
pub fn gell_mann_basis(dim: usize) -> Result<Vec<ComplexMatrix>> {
    match dim {
        2 => Ok(vec![pauli_x(), pauli_y(), pauli_z()]),
        3 => {
            let pairs = [(0, 1), (0, 2), (1, 2)];
            let mut basis = Vec::with_capacity(8);
            for &(j, k) in &pairs {
                let mut m = ComplexMatrix::zeros(3, 3);
                m[(j, k)] = c64(1.0, 0.0);
                m[(k, j)] = c64(1.0, 0.0);
                basis.push(m);
            }
            for &(j, k) in &pairs {
                let mut m = ComplexMatrix::zeros(3, 3);
                m[(j, k)] = c64(0.0, -1.0);
                m[(k, j)] = c64(0.0, 1.0);
                basis.push(m);
            }
            basis.push(ComplexMatrix::diagonal(&[c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)]));
            let s = 1.0 / 3f64.sqrt();
            basis.push(ComplexMatrix::diagonal(&[c64(s, 0.0), c64(s, 0.0), c64(-2.0 * s, 0.0)]));
            Ok(basis)
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}
