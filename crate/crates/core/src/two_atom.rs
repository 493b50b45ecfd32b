//! Three-level model of two atoms under a linear local-detuning ramp.
//!
//! Basis order is (|00⟩, |01⟩, |10⟩), where the left digit is site 1. The
//! doubly excited state is dropped and the energy is shifted by Δ_glob, so
//! `H_r = [[Δ_glob, Ω/2, Ω/2], [Ω/2, −Δ_loc, 0], [Ω/2, 0, Δ_loc]]`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::fmt_num;

pub type Matrix3x3 = [[f64; 3]; 3];

pub fn restricted_hamiltonian(omega: f64, delta_glob: f64, delta_loc: f64) -> Matrix3x3 {
    let h = 0.5 * omega;
    [[delta_glob, h, h], [h, -delta_loc, 0.0], [h, 0.0, delta_loc]]
}

/// Eigenvalues of a real symmetric 3×3 matrix in ascending order, from the
/// trigonometric solution of the characteristic cubic.
pub fn symmetric_eigenvalues(a: &Matrix3x3) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let diag = [a[0][0], a[1][1], a[2][2]];
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(p1.sqrt());
    if p1 <= (1e-300f64).max(1e-32 * scale * scale) {
        let mut d = diag;
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = (diag[0] + diag[1] + diag[2]) / 3.0;
    let p2 = diag.iter().map(|d| (d - q).powi(2)).sum::<f64>() + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let phi = (0.5 * det).clamp(-1.0, 1.0).acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

/// Eigenvalues and eigenvectors (columns), ascending, with each vector's
/// |00⟩ component made non-negative (|01⟩ component when |00⟩ vanishes).
pub fn eigensystem(a: &Matrix3x3) -> ([f64; 3], [[f64; 3]; 3]) {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &k) in order.iter().enumerate() {
        values[slot] = eig.eigenvalues[k];
        let mut v: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
        let lead = if v[0].abs() > 1e-12 { v[0] } else { v[1] };
        if lead < 0.0 {
            v = -v;
        }
        vectors[slot] = [v[0], v[1], v[2]];
    }
    (values, vectors)
}

/// Ramp `Δ_loc(t) = (β_start − t/τ) Δ_glob` at fixed Ω and Δ_glob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoAtomRamp {
    pub omega: f64,
    pub delta_glob: f64,
    pub beta_start: f64,
    pub tau: f64,
}

impl TwoAtomRamp {
    pub fn new(omega: f64, delta_glob: f64, beta_start: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau must be > 0"));
        }
        if ![omega, delta_glob, beta_start].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("ramp parameters must be finite"));
        }
        Ok(TwoAtomRamp {
            omega,
            delta_glob,
            beta_start,
            tau,
        })
    }

    /// Ω = 1, Δ_glob = 2, β_start = 2 with the given ramp time.
    pub fn reference(tau: f64) -> Result<Self> {
        Self::new(1.0, 2.0, 2.0, tau)
    }

    pub fn delta_loc(&self, t: f64) -> f64 {
        (self.beta_start - t / self.tau) * self.delta_glob
    }

    pub fn hamiltonian(&self, t: f64) -> Matrix3x3 {
        restricted_hamiltonian(self.omega, self.delta_glob, self.delta_loc(t))
    }

    /// Default horizon `(β_start + 2)τ`.
    pub fn default_t_end(&self) -> f64 {
        (self.beta_start + 2.0) * self.tau
    }
}

/// `((β_start − 1)τ, β_start τ, (β_start + 1)τ)`: the times where
/// Δ_loc = +Δ_glob, 0, −Δ_glob.
pub fn lz_crossing_times(beta_start: f64, tau: f64) -> Result<(f64, f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau must be > 0"));
    }
    Ok(((beta_start - 1.0) * tau, beta_start * tau, (beta_start + 1.0) * tau))
}

/// Instantaneous eigenvalues `E₁ ≤ E₂ ≤ E₃` on a time grid. Sorting is the
/// adiabatic labeling here: levels of the same symmetry never cross.
pub fn eigenvalues_vs_time(ramp: &TwoAtomRamp, grid: &[f64]) -> Vec<[f64; 3]> {
    grid.iter().map(|&t| symmetric_eigenvalues(&ramp.hamiltonian(t))).collect()
}

/// Grid times of local minima of `E_{upper} − E_{lower}` (indices 0..3).
pub fn gap_minima(grid: &[f64], curves: &[[f64; 3]], lower: usize, upper: usize) -> Vec<f64> {
    let gap: Vec<f64> = curves.iter().map(|e| e[upper] - e[lower]).collect();
    (1..gap.len().saturating_sub(1))
        .filter(|&i| gap[i] < gap[i - 1] && gap[i] <= gap[i + 1])
        .map(|i| grid[i])
        .collect()
}

/// Coefficients `(c₀₀, c₀₁, c₁₀)`.
pub type RestrictedState = [C64; 3];

/// One sample of the ramp: eigenvalues, populations and the overlap with the
/// highest instantaneous eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoAtomSample {
    pub t: f64,
    pub energies: [f64; 3],
    pub populations: [f64; 3],
    pub p_phi3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoAtomTrajectory {
    pub samples: Vec<TwoAtomSample>,
    pub final_state: RestrictedState,
}

impl TwoAtomTrajectory {
    /// CSV `t,E1,E2,E3,p00,p01,p10,p_phi3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E1,E2,E3,p00,p01,p10,p_phi3\n");
        for s in &self.samples {
            let cells = [
                s.t,
                s.energies[0],
                s.energies[1],
                s.energies[2],
                s.populations[0],
                s.populations[1],
                s.populations[2],
                s.p_phi3,
            ];
            let line: Vec<String> = cells.iter().map(|v| fmt_num(*v)).collect();
            writeln!(out, "{}", line.join(",")).unwrap();
        }
        out
    }
}

fn overlap_sqr(v: &[f64; 3], psi: &RestrictedState) -> f64 {
    (0..3).map(|i| psi[i] * v[i]).sum::<C64>().norm_sqr()
}

/// `|⟨φ₃(0)|10⟩|²`: weight of the initial product state on the highest
/// eigenstate of the starting Hamiltonian.
pub fn initial_overlap(ramp: &TwoAtomRamp) -> f64 {
    let (_, vecs) = eigensystem(&ramp.hamiltonian(0.0));
    vecs[2][2] * vecs[2][2]
}

/// Midpoint piecewise-constant integration from |10⟩ over `[0, t_end]`,
/// each step applied as an exact 3×3 exponential. Samples are recorded at
/// `sample_times`, which must be increasing and inside the interval.
pub fn evolve_two_atom(ramp: &TwoAtomRamp, t_end: f64, dt: f64, sample_times: &[f64]) -> Result<TwoAtomTrajectory> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("t_end and dt must be > 0"));
    }
    if sample_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    if sample_times.iter().any(|&t| t < 0.0 || t > t_end) {
        return Err(Error::invalid("sample times must lie in [0, t_end]"));
    }
    let mut psi: RestrictedState = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let sample = |t: f64, psi: &RestrictedState| {
        let h = ramp.hamiltonian(t);
        let (_, vecs) = eigensystem(&h);
        TwoAtomSample {
            t,
            energies: symmetric_eigenvalues(&h),
            populations: [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()],
            p_phi3: overlap_sqr(&vecs[2], psi),
        }
    };
    let mut events: Vec<f64> = sample_times.iter().copied().filter(|&t| t > 0.0).collect();
    if events.last() != Some(&t_end) {
        events.push(t_end);
    }
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next = 0;
    if sample_times.first() == Some(&0.0) {
        samples.push(sample(0.0, &psi));
        next = 1;
    }
    let mut now = 0.0;
    for &end in &events {
        let n = (((end - now) / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = (end - now) / n as f64;
        for k in 0..n {
            let mid = now + (k as f64 + 0.5) * h;
            psi = step(&ramp.hamiltonian(mid), &psi, h);
        }
        now = end;
        if next < sample_times.len() && sample_times[next] == end {
            samples.push(sample(end, &psi));
            next += 1;
        }
    }
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::numerical("two-atom norm conservation", (norm - 1.0).abs()));
    }
    Ok(TwoAtomTrajectory {
        samples,
        final_state: psi,
    })
}

fn step(h: &Matrix3x3, psi: &RestrictedState, dt: f64) -> RestrictedState {
    let (values, vecs) = eigensystem(h);
    let mut out = [C64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let v = &vecs[k];
        let c: C64 = (0..3).map(|i| psi[i] * v[i]).sum::<C64>() * C64::from_polar(1.0, -values[k] * dt);
        for i in 0..3 {
            out[i] += c * v[i];
        }
    }
    out
}
