//! Time evolution under constant and piecewise-linear drives.

mod dense;
mod krylov;
mod state;

pub use dense::{dense_expm_oracle, DenseSpectrum, DENSE_MAX_SITES};
pub use krylov::{EvolutionStats, KrylovOptions, KrylovPropagator, MAX_NORM_DRIFT};
pub use state::{z2_minus_index, z2_plus_index, StateVector, NORM_TOL};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{DiagonalTerms, DriveSchedule, HamiltonianOperator, TWO_PI};

/// Default number of samples on a trajectory.
pub const DEFAULT_SAMPLES: usize = 401;

/// Final state, recorded samples and propagation counters.
#[derive(Debug, Clone)]
pub struct Evolution<R> {
    pub state: StateVector,
    pub samples: Vec<R>,
    pub stats: EvolutionStats,
}

/// `exp(-iHt)ψ`.
pub fn evolve_constant(
    h: &HamiltonianOperator,
    psi: &StateVector,
    t: f64,
    opts: &KrylovOptions,
) -> Result<StateVector> {
    let mut prop = KrylovPropagator::new(*opts)?;
    let mut out = psi.clone();
    prop.propagate(h, &mut out, t)?;
    Ok(out)
}

/// Evolves under a constant Hamiltonian, calling `sampler` at each of the
/// strictly increasing `times` (measured from the initial state).
pub fn evolve_constant_sampled<R, F>(
    h: &HamiltonianOperator,
    psi: &StateVector,
    times: &[f64],
    opts: &KrylovOptions,
    mut sampler: F,
) -> Result<Evolution<R>>
where
    F: FnMut(f64, &StateVector) -> Result<R>,
{
    check_grid(times)?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::invalid("sample times must be >= 0"));
    }
    let mut prop = KrylovPropagator::new(*opts)?;
    let mut state = psi.clone();
    let mut now = 0.0;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        prop.propagate(h, &mut state, t - now)?;
        now = t;
        samples.push(sampler(t, &state)?);
    }
    Ok(Evolution {
        state,
        samples,
        stats: *prop.stats(),
    })
}

/// Step control for driven evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleOptions {
    /// Upper bound on the piecewise-constant step.
    pub dt: f64,
    pub krylov: KrylovOptions,
}

impl ScheduleOptions {
    /// Ramp default: `min(τ/400, 0.005 μs)`.
    pub fn for_ramp(tau: f64) -> Self {
        ScheduleOptions {
            dt: (tau / 400.0).min(0.005),
            krylov: KrylovOptions::default(),
        }
    }
}

/// Midpoint piecewise-constant evolution over `[t0, t1]` of a drive schedule.
///
/// Each substep uses the Hamiltonian at its midpoint. Substeps are sized so
/// that every sample time and schedule breakpoint is hit exactly; samples
/// at `t0` see the initial state.
pub fn evolve_schedule<R, F>(
    terms: &DiagonalTerms,
    sched: &DriveSchedule,
    psi: &StateVector,
    (t0, t1): (f64, f64),
    opts: &ScheduleOptions,
    sample_times: &[f64],
    mut sampler: F,
) -> Result<Evolution<R>>
where
    F: FnMut(f64, &StateVector) -> Result<R>,
{
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::invalid("dt must be > 0"));
    }
    if psi.n_s() != terms.n_s() {
        return Err(Error::DimensionMismatch {
            expected: terms.n_s(),
            found: psi.n_s(),
        });
    }
    if !(t1 >= t0) {
        return Err(Error::invalid("evolution window must satisfy t0 <= t1"));
    }
    for t in [t0, t1] {
        if t < sched.start() || t > sched.end() {
            return Err(Error::OutOfDomain {
                t,
                start: sched.start(),
                end: sched.end(),
            });
        }
    }
    check_grid(sample_times)?;
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        if first < t0 || last > t1 {
            return Err(Error::invalid("sample times must lie inside the evolution window"));
        }
    }

    let mut events: Vec<f64> = sample_times
        .iter()
        .chain(sched.breakpoints())
        .copied()
        .filter(|&t| t > t0 && t < t1)
        .collect();
    events.push(t1);
    events.sort_by(f64::total_cmp);
    events.dedup();

    let mut prop = KrylovPropagator::new(opts.krylov)?;
    let mut state = psi.clone();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let mut take = |t: f64, state: &StateVector, samples: &mut Vec<R>, next: &mut usize| -> Result<()> {
        while *next < sample_times.len() && sample_times[*next] == t {
            samples.push(sampler(t, state)?);
            *next += 1;
        }
        Ok(())
    };
    take(t0, &state, &mut samples, &mut next_sample)?;
    let mut now = t0;
    for &end in &events {
        let span = end - now;
        if span <= 0.0 {
            continue;
        }
        let n = ((span / opts.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            let mid = now + (k as f64 + 0.5) * h;
            let ham = terms.hamiltonian_at(sched.at(mid)?);
            prop.propagate(&ham, &mut state, h)?;
        }
        now = end;
        take(end, &state, &mut samples, &mut next_sample)?;
    }
    Ok(Evolution {
        state,
        samples,
        stats: *prop.stats(),
    })
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("sample times must be finite"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    Ok(())
}

/// `n` uniform samples over `[t0, t1]`, endpoints included.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(t1 > t0) {
        return Err(Error::invalid("a sample grid needs n >= 2 and t1 > t0"));
    }
    let step = (t1 - t0) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k == n - 1 { t1 } else { t0 + k as f64 * step })
        .collect())
}

/// Observable table sampled along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Reference Rabi frequency for the dimensionless time column.
    pub omega: f64,
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(omega: f64, columns: Vec<String>) -> Self {
        Trajectory {
            omega,
            times: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        if self.times.last().is_some_and(|&last| !(t > last)) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        self.times.push(t);
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Ωt/2π for every sample.
    pub fn scaled_times(&self) -> Vec<f64> {
        self.times.iter().map(|t| self.omega * t / TWO_PI).collect()
    }

    /// CSV with header `t_us,omega_t_over_2pi,<columns>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_us,omega_t_over_2pi");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            write!(out, "{},{}", fmt_num(*t), fmt_num(self.omega * t / TWO_PI)).unwrap();
            for v in row {
                out.push(',');
                out.push_str(&fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed 15-significant-digit scientific notation.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.14e}")
    } else {
        v.to_string()
    }
}
