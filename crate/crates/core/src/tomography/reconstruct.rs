//! Least-squares recovery of a density matrix from tomogram tables.
//!
//! The state is expanded as rho = Id/D + sum_a c_a B_a over the traceless
//! Hermitian product basis, so every tomogram row tr(rho Pi) = p becomes one
//! linear equation sum_a c_a tr(B_a Pi) = p - 1/D with real coefficients.
//! The normal equations are solved through the Jacobi eigendecomposition,
//! which doubles as the rank check for ill-posed direction sets.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::states::{hermitian_basis, DensityMatrix};

use super::{dequantizer, Tomogram};

/// Singular values below this threshold flag a rank-deficient design.
const SV_TOL: f64 = 1e-8;

/// Least-squares estimates with an eigenvalue below this are reported as
/// clipped; smaller negative rounding is repaired silently.
const CLIP_FLAG_TOL: f64 = 1e-9;

/// Result of a tomographic reconstruction.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// The recovered state, positive semidefinite by construction.
    pub state: DensityMatrix,
    /// True when the raw least-squares estimate had an eigenvalue below
    /// -1e-9 and was projected back onto the state space.
    pub clipped: bool,
    /// Root-mean-square misfit of the probabilities, before any clipping.
    pub residual: f64,
}

fn party_dims_of(dim: usize) -> Result<Vec<usize>> {
    match dim {
        2 => Ok(vec![2]),
        3 => Ok(vec![3]),
        4 => Ok(vec![2, 2]),
        9 => Ok(vec![3, 3]),
        d => Err(Error::Domain(format!(
            "reconstruction supports dimensions 2, 3, 4, 9; got {d}"
        ))),
    }
}

/// Traceless Hermitian operator basis for the full system: local basis
/// elements for one party, all products (Id or basis element per party,
/// identity-on-both excluded) for two.
fn basis_operators(party_dims: &[usize]) -> Result<Vec<ComplexMatrix>> {
    match party_dims {
        [d] => Ok(hermitian_basis(*d)),
        [d1, d2] => {
            let mut left = vec![ComplexMatrix::identity(*d1)?];
            left.extend(hermitian_basis(*d1));
            let mut right = vec![ComplexMatrix::identity(*d2)?];
            right.extend(hermitian_basis(*d2));
            let mut ops = Vec::with_capacity(left.len() * right.len() - 1);
            for (i, a) in left.iter().enumerate() {
                for (j, b) in right.iter().enumerate() {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    ops.push(a.kron(b)?);
                }
            }
            Ok(ops)
        }
        _ => Err(Error::Shape("reconstruction supports one or two parties".into())),
    }
}

fn real_trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(a.mul(b)?.trace()?.re)
}

/// Count distinct directions each party was measured along.
fn distinct_directions_per_party(samples: &[Tomogram], parties: usize) -> Vec<usize> {
    let mut seen: Vec<Vec<(u64, u64)>> = vec![Vec::new(); parties];
    for t in samples {
        for (k, d) in t.directions().iter().enumerate() {
            let key = d.bits();
            if !seen[k].contains(&key) {
                seen[k].push(key);
            }
        }
    }
    seen.into_iter().map(|v| v.len()).collect()
}

/// Recover a density matrix of dimension `dim` from tomogram tables.
///
/// Each table contributes one equation per outcome tuple. The direction
/// sets must make the problem well posed: a qubit party needs at least 3
/// linearly independent directions, a qutrit party at least 5 in general
/// position. A rank-deficient design is reported as [`Error::IllPosed`]
/// with the per-party direction counts.
pub fn reconstruct(samples: &[Tomogram], dim: usize) -> Result<Reconstruction> {
    let party_dims = party_dims_of(dim)?;
    if samples.is_empty() {
        return Err(Error::Shape("reconstruction needs at least one tomogram".into()));
    }
    for t in samples {
        if t.party_dims() != party_dims {
            return Err(Error::Shape(format!(
                "tomogram party dimensions {:?} do not match state dimension {dim}",
                t.party_dims()
            )));
        }
    }

    let basis = basis_operators(&party_dims)?;
    let n = basis.len();
    let dimf = dim as f64;

    // Design rows: a_row[k] = tr(B_k Pi_row), rhs = p - 1/D.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for t in samples {
        for (tuple, &p) in t.outcome_tuples().iter().zip(t.probabilities()) {
            let mut kernel: Option<ComplexMatrix> = None;
            for ((&m, &d), nd) in tuple.iter().zip(&party_dims).zip(t.directions()) {
                let pi = dequantizer(d, m, nd)?;
                kernel = Some(match kernel {
                    None => pi,
                    Some(k) => k.kron(&pi)?,
                });
            }
            let kernel = kernel.expect("at least one party");
            let mut a = Vec::with_capacity(n);
            for b in &basis {
                a.push(real_trace_product(b, &kernel)?);
            }
            rows.push((a, p - 1.0 / dimf));
        }
    }

    // Normal equations N c = g with N = A^T A, g = A^T b.
    let mut normal = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    for (a, b) in &rows {
        for i in 0..n {
            g[i] += a[i] * b;
            for j in i..n {
                normal[i * n + j] += a[i] * a[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            normal[i * n + j] = normal[j * n + i];
        }
    }
    let nmat = ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(normal[i * n + j], 0.0))?;
    let eig = nmat.hermitian_eigen()?;

    let rank = eig
        .values
        .iter()
        .filter(|&&l| l.max(0.0).sqrt() > SV_TOL)
        .count();
    if rank < n {
        let counts = distinct_directions_per_party(samples, party_dims.len());
        let needs: Vec<String> = party_dims
            .iter()
            .zip(&counts)
            .enumerate()
            .map(|(k, (&d, &got))| {
                let (need, caveat) = if d == 2 {
                    (3, "linearly independent")
                } else {
                    (5, "in general position")
                };
                format!("party {} got {got} distinct directions, needs at least {need} ({caveat})", k + 1)
            })
            .collect();
        return Err(Error::IllPosed(format!(
            "design rank {rank} of {n}: {}",
            needs.join("; ")
        )));
    }

    // c = V diag(1/lambda) V^T g.
    let mut coeffs = vec![0.0; n];
    for k in 0..n {
        let mut proj = 0.0;
        for i in 0..n {
            proj += eig.vectors.get(i, k).re * g[i];
        }
        let scale = proj / eig.values[k];
        for (i, ck) in coeffs.iter_mut().enumerate() {
            *ck += scale * eig.vectors.get(i, k).re;
        }
    }

    let mut sq_sum = 0.0;
    for (a, b) in &rows {
        let fit: f64 = a.iter().zip(&coeffs).map(|(ai, ci)| ai * ci).sum();
        sq_sum += (fit - b) * (fit - b);
    }
    let residual = (sq_sum / rows.len() as f64).sqrt();

    let mut estimate = ComplexMatrix::identity(dim)?.scale(Complex64::new(1.0 / dimf, 0.0));
    for (bop, &ck) in basis.iter().zip(&coeffs) {
        estimate = estimate.add(&bop.scale(Complex64::new(ck, 0.0)))?;
    }

    let spectrum = estimate.hermitian_eigen()?;
    let min_eig = spectrum.values.first().copied().unwrap_or(0.0);
    let clipped = min_eig < -CLIP_FLAG_TOL;
    let state = if min_eig < 0.0 {
        // Project onto the state space: clip negative eigenvalues,
        // renormalize the trace, rebuild from the eigenvectors.
        let clipped_vals: Vec<f64> = spectrum.values.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped_vals.iter().sum();
        let rebuilt = ComplexMatrix::from_fn(dim, dim, |r, s| {
            let mut v = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                v += spectrum.vectors.get(r, k)
                    * spectrum.vectors.get(s, k).conj()
                    * (clipped_vals[k] / total);
            }
            v
        })?;
        DensityMatrix::new(rebuilt)?
    } else {
        DensityMatrix::new(estimate)?
    };

    Ok(Reconstruction { state, clipped, residual })
}
