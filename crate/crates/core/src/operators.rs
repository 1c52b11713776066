//! Dense complex operators on tensor-product Hilbert spaces.
//!
//! Basis conventions used throughout the crate:
//! * mode 1 is the leftmost tensor factor (slowest-varying basis index);
//! * for qubit modes, local index 0 is the ground state `|dn>` and index 1 the
//!   excited state `|up>`, so `|up up dn dn>` is basis index `0b1100 = 12`;
//! * `sigma_z = diag(-1, +1)` under that indexing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix acting on the full Hilbert space (or a subspace).
pub type OperatorMatrix = DMatrix<Complex64>;

/// Dense complex state vector.
pub type StateVector = DVector<Complex64>;

/// Shorthand for a real-valued complex entry.
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The imaginary unit.
pub const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Per-mode local dimensions of a tensor-product space.
///
/// `[2, 2, 2, 2]` describes four qubits; `[d, d, d, d]` four bosonic modes
/// truncated to `d` Fock states each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeLayout {
    dims: Vec<usize>,
}

/// Largest total Hilbert-space dimension the dense representation accepts.
pub const MAX_TOTAL_DIM: usize = 4096;

impl ModeLayout {
    /// Builds a layout from per-mode local dimensions.
    ///
    /// Errors if `dims` is empty, any local dimension is below 2, or the
    /// total dimension exceeds [`MAX_TOTAL_DIM`].
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("mode layout needs at least one mode".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "local dimension must be at least 2, got {d}"
            )));
        }
        let total: usize = dims.iter().product();
        if total > MAX_TOTAL_DIM {
            return Err(Error::InvalidArgument(format!(
                "total dimension {total} exceeds the dense-representation cap {MAX_TOTAL_DIM}"
            )));
        }
        Ok(Self { dims })
    }

    /// Layout of `n` qubits.
    pub fn qubits(n: usize) -> Self {
        Self::new(vec![2; n]).expect("qubit layout is always valid for n >= 1")
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    /// Per-mode dimensions.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Local dimension of 1-based `mode`.
    pub fn local_dim(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.dims[mode - 1])
    }

    /// Total Hilbert-space dimension (product of local dimensions).
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Basis index of a product state given per-mode occupations
    /// (mode 1 first, i.e. mixed-radix with mode 1 most significant).
    pub fn basis_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} occupations, got {}",
                self.dims.len(),
                occupations.len()
            )));
        }
        let mut idx = 0;
        for (n, d) in occupations.iter().zip(&self.dims) {
            if n >= d {
                return Err(Error::InvalidArgument(format!(
                    "occupation {n} out of range for local dimension {d}"
                )));
            }
            idx = idx * d + n;
        }
        Ok(idx)
    }

    /// Occupation of 1-based `mode` in the product basis state `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        if index >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {}",
                self.dim()
            )));
        }
        let tail: usize = self.dims[mode..].iter().product();
        Ok(index / tail % self.dims[mode - 1])
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range 1..={}",
                self.dims.len()
            )));
        }
        Ok(())
    }
}

/// Lifts a single-mode operator to the full space:
/// `I x .. x op x .. x I` with `op` on 1-based `mode`.
pub fn embed(op: &OperatorMatrix, mode: usize, layout: &ModeLayout) -> Result<OperatorMatrix> {
    let local = layout.local_dim(mode)?;
    if op.nrows() != op.ncols() || op.nrows() != local {
        return Err(Error::InvalidArgument(format!(
            "operator is {}x{} but mode {mode} has local dimension {local}",
            op.nrows(),
            op.ncols()
        )));
    }
    let before: usize = layout.dims()[..mode - 1].iter().product();
    let after: usize = layout.dims()[mode..].iter().product();
    let left = OperatorMatrix::identity(before, before).kronecker(op);
    Ok(left.kronecker(&OperatorMatrix::identity(after, after)))
}

/// Lowering and raising operators on a `local_dim`-level mode:
/// `a |n> = sqrt(n) |n-1>`, returned as `(a, a_dagger)`.
///
/// For `local_dim = 2` these are exactly `sigma_minus` / `sigma_plus`.
pub fn ladder_ops(local_dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if local_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "ladder operators need local dimension >= 2, got {local_dim}"
        )));
    }
    let mut lower = OperatorMatrix::zeros(local_dim, local_dim);
    for n in 1..local_dim {
        lower[(n - 1, n)] = re((n as f64).sqrt());
    }
    let raise = lower.adjoint();
    Ok((lower, raise))
}

/// `sigma_x = |dn><up| + |up><dn|`.
pub fn pauli_x() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

/// `sigma_y` in the index-0-is-ground convention.
pub fn pauli_y() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[re(0.0), IM, -IM, re(0.0)])
}

/// `sigma_z = diag(-1, +1)`: ground state has eigenvalue -1.
pub fn pauli_z() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[re(-1.0), re(0.0), re(0.0), re(1.0)])
}

/// `sigma_minus = |dn><up|` (deexcites a qubit).
pub fn sigma_minus() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)])
}

/// `sigma_plus = |up><dn|`.
pub fn sigma_plus() -> OperatorMatrix {
    sigma_minus().adjoint()
}

/// Largest entry magnitude; zero for empty matrices.
pub fn max_abs(m: &OperatorMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// True when `max |M - M^dag|` is within `tol`.
pub fn is_hermitian(m: &OperatorMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// `A B - B A`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`; each
    /// column's largest-magnitude component is made real and positive
    /// (ties broken by the lowest index).
    pub vectors: OperatorMatrix,
}

/// Absolute floor of the Hermiticity tolerance accepted by
/// [`hermitian_eigensystem`]; scaled up by the matrix magnitude.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Diagonalizes a Hermitian matrix, returning ascending eigenvalues and
/// phase-fixed orthonormal eigenvectors.
///
/// Errors if the matrix is not square or departs from Hermiticity by more
/// than `HERMITICITY_TOL * max(1, |M|_max)`.
pub fn hermitian_eigensystem(m: &OperatorMatrix) -> Result<Eigensystem> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigensystem needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = max_abs(m).max(1.0);
    if !is_hermitian(m, HERMITICITY_TOL * scale) {
        return Err(Error::InvalidArgument(
            "eigensystem input is not Hermitian within tolerance".into(),
        ));
    }
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = OperatorMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        // phase fix: rotate the largest-magnitude component onto the
        // positive real axis so eigenvectors are reproducible
        let mut k_max = 0;
        let mut v_max = 0.0;
        for (k, z) in col.iter().enumerate() {
            if z.norm() > v_max {
                v_max = z.norm();
                k_max = k;
            }
        }
        let phase = if v_max > 0.0 { col[k_max].conj() / v_max } else { re(1.0) };
        for k in 0..n {
            vectors[(k, dst)] = col[k] * phase;
        }
    }
    Ok(Eigensystem { values, vectors })
}
