//! Lanczos approximation of `exp(-iHt)ψ` with adaptive step control.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::lattice::HamiltonianOperator;
use crate::linalg::{caxpy, cdot, cnorm_sqr, cscale, tridiagonal_eigen};

/// Largest tolerated norm drift before the result is treated as a failure
/// instead of being renormalized.
pub const MAX_NORM_DRIFT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrylovOptions {
    /// Maximum Krylov subspace dimension per step.
    pub krylov_dim: usize,
    /// Bound on the estimated local error of each accepted step.
    pub tol: f64,
    /// Substep budget for a single propagation call.
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            krylov_dim: 16,
            tol: 1e-10,
            max_substeps: 1_000_000,
        }
    }
}

impl KrylovOptions {
    pub fn validate(&self) -> Result<()> {
        if self.krylov_dim < 2 || self.krylov_dim > 128 {
            return Err(Error::invalid("krylov_dim must lie in [2, 128]"));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        if self.max_substeps == 0 {
            return Err(Error::invalid("max_substeps must be > 0"));
        }
        Ok(())
    }
}

/// Counters accumulated over the lifetime of a propagator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EvolutionStats {
    pub substeps: usize,
    pub matvecs: usize,
    /// Largest |‖ψ‖ − 1| seen before renormalization.
    pub max_norm_drift: f64,
    /// Largest accepted local error estimate.
    pub max_step_error: f64,
}

impl EvolutionStats {
    pub fn merge(&mut self, other: &EvolutionStats) {
        self.substeps += other.substeps;
        self.matvecs += other.matvecs;
        self.max_norm_drift = self.max_norm_drift.max(other.max_norm_drift);
        self.max_step_error = self.max_step_error.max(other.max_step_error);
    }
}

/// Reusable workspace for Krylov propagation.
#[derive(Debug)]
pub struct KrylovPropagator {
    opts: KrylovOptions,
    basis: Vec<Vec<C64>>,
    stats: EvolutionStats,
}

struct Tridiagonal {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

/// Spectral data of the projected matrix, enough to evaluate
/// `exp(-iτT)e₁` for any τ in O(m²).
struct Projected {
    values: Vec<f64>,
    vectors: Vec<f64>,
    m: usize,
}

impl Projected {
    fn new(t: &Tridiagonal, m: usize) -> Result<Self> {
        let (values, vectors) = tridiagonal_eigen(&t.alpha[..m], &t.beta[..m - 1])?;
        Ok(Projected { values, vectors, m })
    }

    fn coefficients(&self, tau: f64) -> Vec<C64> {
        let m = self.m;
        let weights: Vec<C64> = (0..m)
            .map(|l| C64::from_polar(self.vectors[l * m], -tau * self.values[l]))
            .collect();
        (0..m)
            .map(|k| (0..m).map(|l| weights[l] * self.vectors[l * m + k]).sum())
            .collect()
    }

    fn error_estimate(&self, tau: f64, beta_next: f64) -> f64 {
        // last-row residual, checked at the midpoint as well so an accidental
        // zero of the tail coefficient cannot hide a bad step
        let end = self.coefficients(tau)[self.m - 1].norm();
        let mid = self.coefficients(0.5 * tau)[self.m - 1].norm();
        beta_next * end.max(mid)
    }
}

impl KrylovPropagator {
    pub fn new(opts: KrylovOptions) -> Result<Self> {
        opts.validate()?;
        Ok(KrylovPropagator {
            opts,
            basis: Vec::new(),
            stats: EvolutionStats::default(),
        })
    }

    pub fn options(&self) -> &KrylovOptions {
        &self.opts
    }

    pub fn stats(&self) -> &EvolutionStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = EvolutionStats::default();
    }

    fn ensure_workspace(&mut self, dim: usize) {
        let m = self.opts.krylov_dim;
        if self.basis.len() != m + 1 || self.basis[0].len() != dim {
            self.basis = vec![vec![C64::new(0.0, 0.0); dim]; m + 1];
        }
    }

    /// Replaces `psi` by `exp(-iHt)psi`.
    pub fn propagate(&mut self, h: &HamiltonianOperator, psi: &mut StateVector, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("evolution time must be >= 0, got {t}")));
        }
        if psi.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: psi.dim(),
            });
        }
        if t == 0.0 {
            return Ok(());
        }
        self.ensure_workspace(h.dim());
        let tol = self.opts.tol;
        let h_norm = h.norm_bound().max(f64::MIN_POSITIVE);
        let mut remaining = t;
        let mut substeps = 0usize;
        while remaining > 0.0 {
            if substeps >= self.opts.max_substeps {
                return Err(Error::numerical(
                    format!("Krylov propagation exceeded {} substeps", self.opts.max_substeps),
                    self.stats.max_step_error,
                ));
            }
            let (tau, err) = self.step(h, psi.amplitudes_mut(), remaining, h_norm, tol)?;
            substeps += 1;
            self.stats.substeps += 1;
            self.stats.max_step_error = self.stats.max_step_error.max(err);
            remaining = if tau >= remaining { 0.0 } else { remaining - tau };
        }

        let norm = cnorm_sqr(psi.amplitudes()).sqrt();
        let drift = (norm - 1.0).abs();
        self.stats.max_norm_drift = self.stats.max_norm_drift.max(drift);
        if !(drift <= MAX_NORM_DRIFT) {
            return Err(Error::numerical("norm conservation", drift));
        }
        cscale(psi.amplitudes_mut(), 1.0 / norm);
        Ok(())
    }

    /// One adaptive step of length at most `limit`. Returns the accepted
    /// step and its error estimate.
    fn step(
        &mut self,
        h: &HamiltonianOperator,
        psi: &mut [C64],
        limit: f64,
        h_norm: f64,
        tol: f64,
    ) -> Result<(f64, f64)> {
        let m_max = self.opts.krylov_dim;
        let beta0 = cnorm_sqr(psi).sqrt();
        if !(beta0 > 0.0) {
            return Err(Error::invalid("cannot propagate a zero vector"));
        }
        self.basis[0].copy_from_slice(psi);
        cscale(&mut self.basis[0], 1.0 / beta0);

        let mut tri = Tridiagonal {
            alpha: Vec::with_capacity(m_max),
            beta: Vec::with_capacity(m_max),
        };
        let breakdown = 1e-13 * h_norm;
        let mut m = 0;
        let mut beta_next = 0.0;
        let mut early: Option<(f64, Projected)> = None;
        for j in 0..m_max {
            let (done, rest) = self.basis.split_at_mut(j + 1);
            let w = &mut rest[0];
            h.apply(&done[j], w);
            self.stats.matvecs += 1;
            let mut a = cdot(&done[j], w).re;
            caxpy(w, C64::new(-a, 0.0), &done[j]);
            if j > 0 {
                caxpy(w, C64::new(-tri.beta[j - 1], 0.0), &done[j - 1]);
            }
            // one full reorthogonalization sweep
            for (i, v) in done.iter().enumerate() {
                let c = cdot(v, w);
                caxpy(w, -c, v);
                if i == j {
                    a += c.re;
                }
            }
            tri.alpha.push(a);
            let b = cnorm_sqr(w).sqrt();
            m = j + 1;
            beta_next = b;
            if b <= breakdown {
                // invariant subspace: the projection is exact
                beta_next = 0.0;
                break;
            }
            tri.beta.push(b);
            cscale(w, 1.0 / b);
            if j + 1 < m_max && j >= 1 {
                let proj = Projected::new(&tri, m)?;
                let err = proj.error_estimate(limit, b);
                if err <= tol {
                    early = Some((err, proj));
                    break;
                }
            }
        }

        let (tau, err, proj) = match early {
            Some((err, proj)) => (limit, err, proj),
            None => {
                let proj = Projected::new(&tri, m)?;
                let mut tau = limit;
                let mut err = proj.error_estimate(tau, beta_next);
                let mut tries = 0;
                while err > tol {
                    tries += 1;
                    let shrink = (0.9 * (tol / err).powf(1.0 / m as f64)).clamp(0.05, 0.9);
                    tau *= shrink;
                    err = proj.error_estimate(tau, beta_next);
                    if tries > 200 || tau <= limit * 1e-14 {
                        return Err(Error::numerical("Krylov step-size control", err));
                    }
                }
                (tau, err, proj)
            }
        };

        let coeffs = proj.coefficients(tau);
        psi.iter_mut().for_each(|p| *p = C64::new(0.0, 0.0));
        for (k, c) in coeffs.iter().enumerate() {
            caxpy(psi, *c * beta0, &self.basis[k]);
        }
        Ok((tau, err))
    }
}
