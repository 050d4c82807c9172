//! Density matrices and the operator algebra of one or two spins.
//!
//! Supported Hilbert spaces: a single qubit (dim 2), a single qutrit (dim 3),
//! two qubits (dim 4 = 2 x 2) and two qutrits (dim 9 = 3 x 3). The
//! computational basis is ordered by decreasing spin projection, so index 0
//! is m = +j.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Max-entry tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Tolerance on |trace - 1| for density matrices.
pub const TRACE_TOL: f64 = 1e-10;

/// Density-matrix eigenvalues must be at least `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrix `sigma_k` for k in 0..=3 (k = 0 is the identity).
pub fn pauli(k: usize) -> ComplexMatrix {
    let entries = match k {
        0 => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        1 => vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        2 => vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        3 => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        _ => panic!("pauli index {k} out of range 0..=3"),
    };
    ComplexMatrix::from_entries(2, 2, entries).unwrap()
}

/// Spin-1 angular momentum matrices (Jx, Jy, Jz) in the m = 1, 0, -1 basis.
pub fn spin1_generators() -> [ComplexMatrix; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let jx = ComplexMatrix::from_entries(
        3,
        3,
        vec![
            c(0., 0.),
            c(r, 0.),
            c(0., 0.),
            c(r, 0.),
            c(0., 0.),
            c(r, 0.),
            c(0., 0.),
            c(r, 0.),
            c(0., 0.),
        ],
    )
    .unwrap();
    let jy = ComplexMatrix::from_entries(
        3,
        3,
        vec![
            c(0., 0.),
            c(0., -r),
            c(0., 0.),
            c(0., r),
            c(0., 0.),
            c(0., -r),
            c(0., 0.),
            c(0., r),
            c(0., 0.),
        ],
    )
    .unwrap();
    let jz = ComplexMatrix::from_entries(
        3,
        3,
        vec![
            c(1., 0.),
            c(0., 0.),
            c(0., 0.),
            c(0., 0.),
            c(0., 0.),
            c(0., 0.),
            c(0., 0.),
            c(0., 0.),
            c(-1., 0.),
        ],
    )
    .unwrap();
    [jx, jy, jz]
}

/// Traceless Hermitian basis of d x d matrices with tr(B_i B_j) = 2 delta_ij.
///
/// For d = 2 these are the Pauli matrices, for d = 3 the Gell-Mann matrices.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = ComplexMatrix::zeros(d, d).unwrap();
            sym.set(j, k, c(1., 0.));
            sym.set(k, j, c(1., 0.));
            basis.push(sym);
            let mut asym = ComplexMatrix::zeros(d, d).unwrap();
            asym.set(j, k, c(0., -1.));
            asym.set(k, j, c(0., 1.));
            basis.push(asym);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l as f64 * (l + 1) as f64)).sqrt();
        let mut diag = ComplexMatrix::zeros(d, d).unwrap();
        for j in 0..l {
            diag.set(j, j, c(norm, 0.));
        }
        diag.set(l, l, c(-(l as f64) * norm, 0.));
        basis.push(diag);
    }
    basis
}

/// Swap operator V on d x d, V |i>|j> = |j>|i>, for d in {2, 3}.
pub fn swap_operator(d: usize) -> Result<ComplexMatrix> {
    if d != 2 && d != 3 {
        return Err(Error::Domain(format!("swap operator needs d in {{2, 3}}, got {d}")));
    }
    let mut v = ComplexMatrix::zeros(d * d, d * d)?;
    for i in 0..d {
        for j in 0..d {
            v.set(j * d + i, i * d + j, c(1., 0.));
        }
    }
    Ok(v)
}

/// Validated density matrix of dimension 2, 3, 4 (= 2 x 2) or 9 (= 3 x 3).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixWire {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl DensityMatrix {
    /// Validate Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Shape(format!(
                "density matrix must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let dim = mat.rows();
        if !matches!(dim, 2 | 3 | 4 | 9) {
            return Err(Error::Domain(format!(
                "unsupported density-matrix dimension {dim}; expected 2, 3, 4 or 9"
            )));
        }
        let dev = mat.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::Invariant(format!(
                "density matrix is not Hermitian: max deviation {dev:.3e}"
            )));
        }
        let tr = mat.trace()?;
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Invariant(format!(
                "density matrix trace is {} + {}i, expected 1",
                tr.re, tr.im
            )));
        }
        if !mat.is_psd(PSD_TOL)? {
            return Err(Error::Invariant(
                "density matrix has an eigenvalue below -1e-10".into(),
            ));
        }
        Ok(Self { mat })
    }

    /// Build from row-major complex entries.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::new(ComplexMatrix::from_entries(dim, dim, entries)?)
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Local dimension of each tensor factor.
    pub fn party_dims(&self) -> Vec<usize> {
        match self.dim() {
            2 => vec![2],
            3 => vec![3],
            4 => vec![2, 2],
            9 => vec![3, 3],
            _ => unreachable!("dimension validated on construction"),
        }
    }

    pub fn parties(&self) -> usize {
        self.party_dims().len()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Frobenius norm of the difference to another state.
    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.mat.sub(&other.mat)?.frobenius_norm())
    }

    /// Basis projector |index><index| as a state.
    pub fn basis_projector(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut m = ComplexMatrix::zeros(dim, dim)?;
        m.set(index, index, c(1., 0.));
        Self::new(m)
    }

    /// Werner state of two spins with local dimension d in {2, 3}:
    /// rho = [(d - phi) Id + (d phi - 1) V] / (d^3 - d), phi in [-1, 1].
    pub fn werner(d: usize, phi: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::Domain(format!("Werner states need d in {{2, 3}}, got {d}")));
        }
        if !(-1.0..=1.0).contains(&phi) || phi.is_nan() {
            return Err(Error::Domain(format!(
                "Werner parameter {phi} outside [-1, 1]"
            )));
        }
        let dd = d as f64;
        let denom = dd * dd * dd - dd;
        let id = ComplexMatrix::identity(d * d)?;
        let v = swap_operator(d)?;
        let m = id
            .scale(c((dd - phi) / denom, 0.))
            .add(&v.scale(c((dd * phi - 1.0) / denom, 0.)))?;
        Self::new(m)
    }

    /// Random full-rank state: G G^dagger normalized, G with i.i.d. complex
    /// standard normal entries drawn from `rng`.
    pub fn random_ginibre(dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })?;
        let gg = g.mul(&g.dagger())?;
        let tr = gg.trace()?.re;
        Self::new(gg.scale(c(1.0 / tr, 0.)))
    }

    /// Serialize as `{"dim": n, "entries": [[re, im], ...]}` row-major.
    pub fn to_json(&self) -> String {
        let wire = DensityMatrixWire {
            dim: self.dim(),
            entries: self.mat.entries().iter().map(|z| [z.re, z.im]).collect(),
        };
        serde_json::to_string(&wire).expect("density matrix serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let wire: DensityMatrixWire =
            serde_json::from_str(json).map_err(|e| Error::Parse(format!("density matrix: {e}")))?;
        if wire.entries.len() != wire.dim * wire.dim {
            return Err(Error::Shape(format!(
                "expected {} entries for dim {}, got {}",
                wire.dim * wire.dim,
                wire.dim,
                wire.entries.len()
            )));
        }
        Self::new(ComplexMatrix::from_re_im(wire.dim, &wire.entries)?)
    }
}

/// Pauli expectation data of a one- or two-qubit state: x_i = tr(rho sigma_i x Id),
/// y_j = tr(rho Id x sigma_j), corr_ij = tr(rho sigma_i x sigma_j).
#[derive(Clone, Debug, PartialEq)]
pub struct BlochData {
    pub x: [f64; 3],
    pub y: Option<[f64; 3]>,
    pub corr: Option<[[f64; 3]; 3]>,
}

/// Pauli decomposition of a qubit (dim 2) or two-qubit (dim 4) state.
pub fn bloch_decompose(rho: &DensityMatrix) -> Result<BlochData> {
    let m = rho.matrix();
    match rho.dim() {
        2 => {
            let mut x = [0.0; 3];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = m.mul(&pauli(i + 1))?.trace()?.re;
            }
            Ok(BlochData { x, y: None, corr: None })
        }
        4 => {
            let id = pauli(0);
            let mut x = [0.0; 3];
            let mut y = [0.0; 3];
            let mut corr = [[0.0; 3]; 3];
            for i in 0..3 {
                x[i] = m.mul(&pauli(i + 1).kron(&id)?)?.trace()?.re;
                y[i] = m.mul(&id.kron(&pauli(i + 1))?)?.trace()?.re;
                for j in 0..3 {
                    corr[i][j] = m.mul(&pauli(i + 1).kron(&pauli(j + 1))?)?.trace()?.re;
                }
            }
            Ok(BlochData { x, y: Some(y), corr: Some(corr) })
        }
        d => Err(Error::Shape(format!(
            "Pauli decomposition needs dimension 2 or 4, got {d}"
        ))),
    }
}

/// Convex mixture of two-party product states.
#[derive(Clone, Debug)]
pub struct SeparableSpec {
    pub weights: Vec<f64>,
    pub factors: Vec<(DensityMatrix, DensityMatrix)>,
}

/// Assemble sum_k w_k A_k x B_k as a density matrix.
pub fn mix_separable(spec: &SeparableSpec) -> Result<DensityMatrix> {
    if spec.weights.len() != spec.factors.len() || spec.weights.is_empty() {
        return Err(Error::Shape(format!(
            "{} weights for {} product terms",
            spec.weights.len(),
            spec.factors.len()
        )));
    }
    if spec.weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Domain("mixture weights must be nonnegative".into()));
    }
    let total: f64 = spec.weights.iter().sum();
    if (total - 1.0).abs() > TRACE_TOL {
        return Err(Error::Domain(format!(
            "mixture weights sum to {total}, expected 1"
        )));
    }
    let d = spec.factors[0].0.dim();
    for (a, b) in &spec.factors {
        if a.dim() != d || b.dim() != d {
            return Err(Error::Shape(
                "all product factors must share one local dimension".into(),
            ));
        }
        if d != 2 && d != 3 {
            return Err(Error::Domain(format!(
                "product factors must be qubits or qutrits, got dimension {d}"
            )));
        }
    }
    let mut acc = ComplexMatrix::zeros(d * d, d * d)?;
    for (w, (a, b)) in spec.weights.iter().zip(&spec.factors) {
        let term = a.matrix().kron(b.matrix())?.scale(c(*w, 0.));
        acc = acc.add(&term)?;
    }
    DensityMatrix::new(acc)
}
