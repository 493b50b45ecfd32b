use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::check_sites;
use crate::linalg::{cdot, cnorm_sqr, cscale};

/// Allowed deviation of ‖ψ‖ from one for a state handed to the public API.
pub const NORM_TOL: f64 = 1e-10;

/// 2^n_s complex amplitudes; site `j` (one-based) is bit `j - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_s: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(n_s: usize, index: usize) -> Result<Self> {
        check_sites(n_s)?;
        let dim = 1usize << n_s;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for n_s = {n_s}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_s, amps })
    }

    /// |1010…10⟩: odd sites Rydberg. The false vacuum for β > 0.
    pub fn z2_plus(n_s: usize) -> Result<Self> {
        Self::basis(n_s, z2_plus_index(n_s))
    }

    /// |0101…01⟩: even sites Rydberg.
    pub fn z2_minus(n_s: usize) -> Result<Self> {
        Self::basis(n_s, z2_minus_index(n_s))
    }

    /// All atoms in the ground state.
    pub fn all_ground(n_s: usize) -> Result<Self> {
        Self::basis(n_s, 0)
    }

    /// Takes ownership of amplitudes that must already be normalized.
    pub fn from_amplitudes(n_s: usize, amps: Vec<C64>) -> Result<Self> {
        check_sites(n_s)?;
        if amps.len() != 1 << n_s {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_s,
                found: amps.len(),
            });
        }
        let norm = cnorm_sqr(&amps).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector { n_s, amps })
    }

    /// Scales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(n_s: usize, mut amps: Vec<C64>) -> Result<Self> {
        check_sites(n_s)?;
        if amps.len() != 1 << n_s {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_s,
                found: amps.len(),
            });
        }
        let norm = cnorm_sqr(&amps).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        cscale(&mut amps, 1.0 / norm);
        Ok(StateVector { n_s, amps })
    }

    /// Haar-like random state from independent Gaussian amplitudes.
    pub fn random<R: Rng>(n_s: usize, rng: &mut R) -> Result<Self> {
        check_sites(n_s)?;
        let amps = (0..1usize << n_s)
            .map(|_| C64::new(gaussian(rng), gaussian(rng)))
            .collect();
        Self::normalized(n_s, amps)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        cnorm_sqr(&self.amps).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(cdot(&self.amps, &other.amps))
    }

    /// Occupation probabilities |ψ_b|².
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

pub fn z2_plus_index(n_s: usize) -> usize {
    (0..n_s).step_by(2).map(|j| 1usize << j).sum()
}

pub fn z2_minus_index(n_s: usize) -> usize {
    (1..n_s).step_by(2).map(|j| 1usize << j).sum()
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; keeps the dependency list to rand alone
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
