//! Dense complex operators on small Hilbert spaces, together with the
//! generalized Gell-Mann basis of traceless Hermitian matrices.
//!
//! Everything here works in units with hbar = 1. Operators are immutable
//! after construction and cheap to clone at the dimensions this crate
//! targets (d <= 5 or so).

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance for structural assertions (Hermiticity, tracelessness,
/// orthonormality): one order above double-precision noise for 4x4 products.
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// A dense complex operator on a d-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: Array2<C64>,
}

impl Operator {
    /// Wrap a square complex matrix.
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        Ok(Self { entries })
    }

    /// Wrap a square matrix and require it to be Hermitian.
    pub fn hermitian(entries: Array2<C64>) -> Result<Self> {
        let op = Self::new(entries)?;
        let res = op.hermiticity_residual();
        if res > STRUCTURAL_TOL {
            return Err(Error::NotHermitian(res));
        }
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: Array2::eye(dim),
        }
    }

    /// The matrix unit |j><k|.
    pub fn ket_bra(dim: usize, j: usize, k: usize) -> Self {
        assert!(j < dim && k < dim, "level index out of range");
        let mut m = Array2::zeros((dim, dim));
        m[(j, k)] = C64::new(1.0, 0.0);
        Self { entries: m }
    }

    /// The rank-one projector |j><j|.
    pub fn projector(dim: usize, j: usize) -> Self {
        Self::ket_bra(dim, j, j)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.entries[(j, k)]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let mut m = Array2::zeros((d, d));
        for j in 0..d {
            for k in 0..d {
                m[(j, k)] = self.entries[(k, j)].conj();
            }
        }
        Self { entries: m }
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            entries: self.entries.mapv(|x| x * c),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Matrix product; panics on dimension mismatch (internal arithmetic is
    /// always same-dimension by construction).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        Self {
            entries: self.entries.dot(&other.entries),
        }
    }

    /// max_jk |A_jk - conj(A_kj)|
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut res = 0.0f64;
        for j in 0..d {
            for k in 0..d {
                let dev = (self.entries[(j, k)] - self.entries[(k, j)].conj()).norm();
                res = res.max(dev);
            }
        }
        res
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Idempotency residual max |P^2 - P|; zero for projectors.
    pub fn projector_residual(&self) -> f64 {
        let p2 = self.matmul(self);
        p2.max_abs_diff(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, x| m.max(x.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Tr(self * other).
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim());
        let d = self.dim();
        let mut t = C64::new(0.0, 0.0);
        for j in 0..d {
            for k in 0..d {
                t += self.entries[(j, k)] * other.entries[(k, j)];
            }
        }
        t
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim());
        Operator {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim());
        Operator {
            entries: &self.entries - &rhs.entries,
        }
    }
}

/// Commutator [a, b] = ab - ba.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(&a.matmul(b) - &b.matmul(a))
}

/// Anticommutator {a, b} = ab + ba.
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(&a.matmul(b) + &b.matmul(a))
}

/// An ordered basis of d^2 - 1 traceless Hermitian operators, orthogonal
/// under the trace form with Tr(sigma_i sigma_j) = 2 delta_ij.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<Operator>,
    labels: Vec<String>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn element(&self, i: usize) -> &Operator {
        &self.elements[i]
    }

    /// Rebuild identity_coeff * I + sum_i coeffs[i] * sigma_i.
    pub fn reconstruct(&self, coeffs: &[f64], identity_coeff: f64) -> Operator {
        assert_eq!(coeffs.len(), self.elements.len());
        let mut out = Operator::identity(self.dim).scale_re(identity_coeff);
        for (c, sigma) in coeffs.iter().zip(&self.elements) {
            out = &out + &sigma.scale_re(*c);
        }
        out
    }
}

/// The generalized Gell-Mann matrices for SU(d), ordered so that for each
/// column level k = 1..d-1 the pairs (j, k) contribute a symmetric element
/// |j><k| + |k><j| immediately followed by the antisymmetric
/// -i(|j><k| - |k><j|), and the diagonal element
/// sqrt(2/(m(m-1))) * diag(1, ..., 1, -(m-1), 0, ...) for m = k + 1 closes
/// the block at index m^2 - 1. For d = 2 this yields the Pauli matrices.
pub fn gell_mann_basis(dim: usize) -> Result<OperatorBasis> {
    if dim < 2 {
        return Err(Error::BasisDimension(dim));
    }
    let mut elements = Vec::with_capacity(dim * dim - 1);
    for k in 1..dim {
        for j in 0..k {
            let jk = Operator::ket_bra(dim, j, k);
            let kj = Operator::ket_bra(dim, k, j);
            // symmetric: |j><k| + |k><j|
            elements.push(&jk + &kj);
            // antisymmetric: -i(|j><k| - |k><j|)
            elements.push((&jk - &kj).scale(C64::new(0.0, -1.0)));
        }
        let m = k + 1;
        let norm = (2.0 / (m * (m - 1)) as f64).sqrt();
        let mut diag = Array2::zeros((dim, dim));
        for i in 0..m - 1 {
            diag[(i, i)] = C64::new(norm, 0.0);
        }
        diag[(m - 1, m - 1)] = C64::new(-norm * (m - 1) as f64, 0.0);
        elements.push(Operator { entries: diag });
    }
    let labels = (1..=elements.len()).map(|i| format!("sigma_{i}")).collect();
    Ok(OperatorBasis {
        dim,
        elements,
        labels,
    })
}

/// Expand a Hermitian operator as identity_coeff * I + sum_i coeffs[i] sigma_i
/// with coeffs[i] = Tr(a sigma_i) / 2 and identity_coeff = Tr(a) / d.
pub fn expand_in_basis(a: &Operator, basis: &OperatorBasis) -> Result<(Vec<f64>, f64)> {
    if a.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(a.dim(), basis.dim()));
    }
    let res = a.hermiticity_residual();
    if res > STRUCTURAL_TOL {
        return Err(Error::NotHermitian(res));
    }
    let coeffs = basis
        .elements
        .iter()
        .map(|sigma| a.trace_product(sigma).re / 2.0)
        .collect();
    let identity_coeff = a.trace().re / a.dim() as f64;
    Ok((coeffs, identity_coeff))
}
