//! Ring geometry, couplings, drive waveforms and the matrix-free Rydberg
//! Hamiltonian.
//!
//! Sites are numbered `1..=n_s`; site `j` lives in bit `j - 1` of a basis
//! index and a set bit means the atom is in its Rydberg state. All
//! frequencies are angular (rad/μs), lengths in μm, times in μs.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CHUNK;

pub const TWO_PI: f64 = 2.0 * PI;

/// C₆ for the reference species, rad/μs·μm⁶. Gives R_b ≈ 9.76 μm at Ω/2π = 1 MHz.
pub const DEFAULT_C6: f64 = TWO_PI * 862_690.0;

/// Largest chain the dense basis representation accepts.
pub const MAX_SITES: usize = 24;

/// Which distance enters the van der Waals potential on the ring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryMode {
    /// Straight-line distance between atoms placed on a circle.
    #[default]
    Chord,
    /// Minimal-image lattice distance `min(|i-j|, n_s-|i-j|) * a`.
    Arc,
}

impl std::str::FromStr for GeometryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chord" => Ok(GeometryMode::Chord),
            "arc" => Ok(GeometryMode::Arc),
            other => Err(Error::invalid(format!(
                "geometry_mode must be \"chord\" or \"arc\", got {other:?}"
            ))),
        }
    }
}

/// Physical couplings of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n_s: usize,
    /// Atom separation, μm.
    pub a: f64,
    pub omega: f64,
    pub delta_glob: f64,
    /// Amplitude of the staggered local detuning.
    pub delta_loc: f64,
    pub c6: f64,
    pub geometry_mode: GeometryMode,
}

impl PhysicalParams {
    pub fn new(
        n_s: usize,
        a: f64,
        omega: f64,
        delta_glob: f64,
        delta_loc: f64,
        c6: f64,
        geometry_mode: GeometryMode,
    ) -> Result<Self> {
        let params = PhysicalParams {
            n_s,
            a,
            omega,
            delta_glob,
            delta_loc,
            c6,
            geometry_mode,
        };
        params.validate()?;
        Ok(params)
    }

    /// Builds couplings from the dimensionless description used throughout
    /// the experiments: `Δ_glob = α Ω`, `Δ_loc = β Δ_glob` and
    /// `a = R_b / (R_b/a)` with `R_b = (C₆/Ω)^{1/6}`.
    pub fn from_ratios(
        n_s: usize,
        rb_over_a: f64,
        alpha: f64,
        beta: f64,
        omega: f64,
        c6: f64,
        geometry_mode: GeometryMode,
    ) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::invalid("omega must be > 0 to define alpha and R_b"));
        }
        if !(rb_over_a > 0.0) || !rb_over_a.is_finite() {
            return Err(Error::invalid("rb_over_a must be > 0"));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::invalid("alpha and beta must be finite"));
        }
        let rb = (c6 / omega).powf(1.0 / 6.0);
        let delta_glob = alpha * omega;
        Self::new(
            n_s,
            rb / rb_over_a,
            omega,
            delta_glob,
            beta * delta_glob,
            c6,
            geometry_mode,
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_sites(self.n_s)?;
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::invalid("atom separation a must be > 0"));
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid("omega must be >= 0"));
        }
        if !(self.c6 > 0.0) || !self.c6.is_finite() {
            return Err(Error::invalid("c6 must be > 0"));
        }
        if !self.delta_glob.is_finite() || !self.delta_loc.is_finite() {
            return Err(Error::invalid("detunings must be finite"));
        }
        Ok(())
    }

    /// `R_b = (C₆/Ω)^{1/6}`; infinite when Ω = 0.
    pub fn blockade_radius(&self) -> f64 {
        (self.c6 / self.omega).powf(1.0 / 6.0)
    }

    pub fn alpha(&self) -> f64 {
        self.delta_glob / self.omega
    }

    /// `Δ_loc / Δ_glob`, undefined for zero global detuning.
    pub fn beta(&self) -> Option<f64> {
        (self.delta_glob != 0.0).then(|| self.delta_loc / self.delta_glob)
    }

    pub fn rb_over_a(&self) -> f64 {
        self.blockade_radius() / self.a
    }

    /// Nearest-neighbour interaction V₁ = C₆/a⁶.
    pub fn v1(&self) -> f64 {
        self.c6 / self.a.powi(6)
    }

    pub fn with_delta_loc(&self, delta_loc: f64) -> Self {
        PhysicalParams {
            delta_loc,
            ..self.clone()
        }
    }

    pub fn geometry(&self) -> Result<AtomGeometry> {
        ring_positions(self.n_s, self.a, self.geometry_mode)
    }

    pub fn diagonal_terms(&self) -> Result<DiagonalTerms> {
        DiagonalTerms::new(&self.geometry()?, self.c6)
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianOperator> {
        Ok(self
            .diagonal_terms()?
            .hamiltonian(self.omega, self.delta_glob, self.delta_loc))
    }
}

pub(crate) fn check_sites(n_s: usize) -> Result<()> {
    if n_s < 2 || n_s % 2 != 0 {
        return Err(Error::invalid(format!("n_s must be even and >= 2, got {n_s}")));
    }
    if n_s > MAX_SITES {
        return Err(Error::Capability(format!(
            "n_s = {n_s} exceeds the supported maximum of {MAX_SITES}"
        )));
    }
    Ok(())
}

/// Atom positions and the full pairwise distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomGeometry {
    pub positions: Vec<[f64; 2]>,
    distances: Vec<f64>,
    n_s: usize,
}

impl AtomGeometry {
    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Distance between zero-based sites `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.n_s + j]
    }

    pub fn nearest_neighbor_distance(&self) -> f64 {
        self.distance(0, 1)
    }
}

/// Places `n_s` atoms on a ring with nearest-neighbour spacing `a`.
pub fn ring_positions(n_s: usize, a: f64, mode: GeometryMode) -> Result<AtomGeometry> {
    check_sites(n_s)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid("atom separation a must be > 0"));
    }
    let radius = a / (2.0 * (PI / n_s as f64).sin());
    let positions = (0..n_s)
        .map(|j| {
            let theta = TWO_PI * j as f64 / n_s as f64;
            [radius * theta.cos(), radius * theta.sin()]
        })
        .collect();
    let mut distances = vec![0.0; n_s * n_s];
    for i in 0..n_s {
        for j in 0..n_s {
            if i == j {
                continue;
            }
            let steps = i.abs_diff(j);
            distances[i * n_s + j] = match mode {
                GeometryMode::Chord => 2.0 * radius * (PI * steps as f64 / n_s as f64).sin(),
                GeometryMode::Arc => steps.min(n_s - steps) as f64 * a,
            };
        }
    }
    Ok(AtomGeometry {
        positions,
        distances,
        n_s,
    })
}

/// Van der Waals potential `C₆ / r⁶`.
pub fn pair_potential(c6: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("distance must be > 0, got {r}")));
    }
    Ok(c6 / r.powi(6))
}

/// Sign of the staggered detuning on one-based site `j`: `(-1)^j`.
pub fn stagger(site: usize) -> f64 {
    if site % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Instantaneous waveform values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveValues {
    pub omega: f64,
    pub delta_glob: f64,
    pub delta_loc: f64,
}

/// Piecewise-linear Ω(t), Δ_glob(t) and Δ_loc(t) on shared breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule {
    breakpoints: Vec<f64>,
    omega: Vec<f64>,
    delta_glob: Vec<f64>,
    delta_loc: Vec<f64>,
    /// Staggered detuning applied to ancilla atoms only (protocol layouts).
    pub ancilla_detuning: Option<f64>,
}

impl DriveSchedule {
    pub fn new(
        breakpoints: Vec<f64>,
        omega: Vec<f64>,
        delta_glob: Vec<f64>,
        delta_loc: Vec<f64>,
    ) -> Result<Self> {
        let n = breakpoints.len();
        if n < 2 {
            return Err(Error::invalid("a schedule needs at least two breakpoints"));
        }
        for len in [omega.len(), delta_glob.len(), delta_loc.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        let all = breakpoints
            .iter()
            .chain(&omega)
            .chain(&delta_glob)
            .chain(&delta_loc);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("schedule values must be finite"));
        }
        Ok(DriveSchedule {
            breakpoints,
            omega,
            delta_glob,
            delta_loc,
            ancilla_detuning: None,
        })
    }

    pub fn constant(duration: f64, values: DriveValues) -> Result<Self> {
        Self::new(
            vec![0.0, duration],
            vec![values.omega; 2],
            vec![values.delta_glob; 2],
            vec![values.delta_loc; 2],
        )
    }

    /// Linear ramp `β(t) = β_start - t/τ` of the local detuning at fixed Ω and
    /// Δ_glob, running until β reaches `beta_stop`.
    pub fn local_detuning_ramp(
        omega: f64,
        delta_glob: f64,
        beta_start: f64,
        beta_stop: f64,
        tau: f64,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid("ramp time tau must be > 0"));
        }
        if !(beta_start > beta_stop) {
            return Err(Error::invalid("ramp requires beta_start > beta_stop"));
        }
        let end = (beta_start - beta_stop) * tau;
        Self::new(
            vec![0.0, end],
            vec![omega; 2],
            vec![delta_glob; 2],
            vec![beta_start * delta_glob, beta_stop * delta_glob],
        )
    }

    pub fn with_ancilla_detuning(mut self, value: f64) -> Self {
        self.ancilla_detuning = Some(value);
        self
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn omega_waveform(&self) -> &[f64] {
        &self.omega
    }

    pub fn delta_glob_waveform(&self) -> &[f64] {
        &self.delta_glob
    }

    pub fn delta_loc_waveform(&self) -> &[f64] {
        &self.delta_loc
    }

    /// Linear interpolation of all waveforms at `t`.
    pub fn at(&self, t: f64) -> Result<DriveValues> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(Error::OutOfDomain { t, start, end });
        }
        let k = match self.breakpoints.partition_point(|&b| b <= t) {
            0 => 0,
            p if p >= self.breakpoints.len() => self.breakpoints.len() - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.breakpoints[k], self.breakpoints[k + 1]);
        let w = (t - t0) / (t1 - t0);
        let lerp = |v: &[f64]| v[k] + w * (v[k + 1] - v[k]);
        Ok(DriveValues {
            omega: lerp(&self.omega),
            delta_glob: lerp(&self.delta_glob),
            delta_loc: lerp(&self.delta_loc),
        })
    }
}

/// Parameter-independent pieces of the diagonal, so a Hamiltonian for any
/// waveform values can be assembled in one pass over the basis.
#[derive(Debug, Clone)]
pub struct DiagonalTerms {
    n_s: usize,
    interaction: Vec<f64>,
    occupation: Vec<f64>,
    staggered: Vec<f64>,
}

impl DiagonalTerms {
    pub fn new(geom: &AtomGeometry, c6: f64) -> Result<Self> {
        let n_s = geom.n_s();
        check_sites(n_s)?;
        if !(c6 > 0.0) {
            return Err(Error::invalid("c6 must be > 0"));
        }
        let mut potential = vec![0.0; n_s * n_s];
        for i in 0..n_s {
            for j in 0..n_s {
                if i != j {
                    potential[i * n_s + j] = pair_potential(c6, geom.distance(i, j))?;
                }
            }
        }
        let dim = 1usize << n_s;
        let mut interaction = vec![0.0; dim];
        let mut occupation = vec![0.0; dim];
        let mut staggered = vec![0.0; dim];
        for b in 1..dim {
            // peel off the lowest set bit and reuse the smaller index
            let low = b.trailing_zeros() as usize;
            let rest = b & (b - 1);
            let mut e = interaction[rest];
            let mut bits = rest;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                e += potential[low * n_s + k];
                bits &= bits - 1;
            }
            interaction[b] = e;
            occupation[b] = occupation[rest] + 1.0;
            staggered[b] = staggered[rest] + stagger(low + 1);
        }
        Ok(DiagonalTerms {
            n_s,
            interaction,
            occupation,
            staggered,
        })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Diagonal entry `-Σ_j (Δ_glob + s_j Δ_loc) n_j + Σ_{j<k} V_jk n_j n_k`.
    pub fn hamiltonian(&self, omega: f64, delta_glob: f64, delta_loc: f64) -> HamiltonianOperator {
        let diag = self
            .interaction
            .iter()
            .zip(&self.occupation)
            .zip(&self.staggered)
            .map(|((v, n), s)| v - delta_glob * n - delta_loc * s)
            .collect();
        HamiltonianOperator {
            n_s: self.n_s,
            diag,
            rabi_amplitude: 0.5 * omega,
        }
    }

    pub fn hamiltonian_at(&self, values: DriveValues) -> HamiltonianOperator {
        self.hamiltonian(values.omega, values.delta_glob, values.delta_loc)
    }
}

/// Builds the Hamiltonian for a geometry and constant couplings.
pub fn build_hamiltonian(
    geom: &AtomGeometry,
    c6: f64,
    omega: f64,
    delta_glob: f64,
    delta_loc: f64,
) -> Result<HamiltonianOperator> {
    Ok(DiagonalTerms::new(geom, c6)?.hamiltonian(omega, delta_glob, delta_loc))
}

/// Matrix-free Rydberg Hamiltonian: a real diagonal plus `Ω/2` on every
/// single-bit flip.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    n_s: usize,
    diag: Vec<f64>,
    rabi_amplitude: f64,
}

impl HamiltonianOperator {
    /// Assembles an operator from explicit parts.
    pub fn from_parts(n_s: usize, diag: Vec<f64>, rabi_amplitude: f64) -> Result<Self> {
        check_sites(n_s)?;
        if diag.len() != 1 << n_s {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_s,
                found: diag.len(),
            });
        }
        Ok(HamiltonianOperator {
            n_s,
            diag,
            rabi_amplitude,
        })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Ω/2.
    pub fn rabi_amplitude(&self) -> f64 {
        self.rabi_amplitude
    }

    /// The operator `-H`.
    pub fn negated(&self) -> Self {
        HamiltonianOperator {
            n_s: self.n_s,
            diag: self.diag.iter().map(|d| -d).collect(),
            rabi_amplitude: -self.rabi_amplitude,
        }
    }

    /// Largest diagonal magnitude.
    pub fn diag_norm(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Gershgorin bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.diag_norm() + self.n_s as f64 * self.rabi_amplitude.abs()
    }

    /// Smallest and largest diagonal entries.
    pub fn diag_range(&self) -> (f64, f64) {
        self.diag
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)))
    }

    /// `out = H psi`.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        assert_eq!(psi.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let kernel = |offset: usize, chunk: &mut [C64]| {
            for (i, o) in chunk.iter_mut().enumerate() {
                let b = offset + i;
                let mut flips = C64::new(0.0, 0.0);
                for j in 0..self.n_s {
                    flips += psi[b ^ (1 << j)];
                }
                *o = psi[b] * self.diag[b] + flips * self.rabi_amplitude;
            }
        };
        if self.dim() <= CHUNK {
            kernel(0, out);
        } else {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| kernel(c * CHUNK, chunk));
        }
    }

    /// `out = H x` for real vectors.
    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let kernel = |offset: usize, chunk: &mut [f64]| {
            for (i, o) in chunk.iter_mut().enumerate() {
                let b = offset + i;
                let mut flips = 0.0;
                for j in 0..self.n_s {
                    flips += x[b ^ (1 << j)];
                }
                *o = x[b] * self.diag[b] + flips * self.rabi_amplitude;
            }
        };
        if self.dim() <= CHUNK {
            kernel(0, out);
        } else {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| kernel(c * CHUNK, chunk));
        }
    }

    /// `<psi|H|psi>`; the imaginary part is roundoff only.
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let mut h_psi = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(psi, &mut h_psi);
        crate::linalg::cdot(psi, &h_psi)
    }

    /// Dense real symmetric matrix, for oracles on small chains.
    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        if self.n_s > 12 {
            return Err(Error::Capability(format!(
                "dense matrix for n_s = {} is too large (limit 12)",
                self.n_s
            )));
        }
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            m[(b, b)] = self.diag[b];
            for j in 0..self.n_s {
                m[(b ^ (1 << j), b)] += self.rabi_amplitude;
            }
        }
        Ok(m)
    }
}
