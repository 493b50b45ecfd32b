use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::lattice::HamiltonianOperator;

/// Largest chain handled by the dense reference routines.
pub const DENSE_MAX_SITES: usize = 10;

/// Full eigendecomposition of a small Hamiltonian, reusable across times.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl DenseSpectrum {
    pub fn new(h: &HamiltonianOperator) -> Result<Self> {
        if h.n_s() > DENSE_MAX_SITES {
            return Err(Error::Capability(format!(
                "dense reference limited to n_s <= {DENSE_MAX_SITES}, got {}",
                h.n_s()
            )));
        }
        let eig = SymmetricEigen::new(h.dense_matrix()?);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, c| {
            eig.eigenvectors[(i, order[c])]
        });
        Ok(DenseSpectrum { values, vectors })
    }

    /// Eigenvalues in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column `k` is the eigenvector of `values()[k]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let dim = self.values.len();
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: psi.dim(),
            });
        }
        let amps = psi.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let col = self.vectors.column(k);
            let overlap: C64 = col.iter().zip(amps).map(|(v, a)| a * *v).sum();
            let c = overlap * C64::from_polar(1.0, -self.values[k] * t);
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += c * *v;
            }
        }
        StateVector::normalized(psi.n_s(), out)
    }
}

/// `exp(-iHt)ψ` through full diagonalization; a reference for small chains.
pub fn dense_expm_oracle(h: &HamiltonianOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    DenseSpectrum::new(h)?.evolve(psi, t)
}
