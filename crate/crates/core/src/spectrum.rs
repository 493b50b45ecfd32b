//! Low-lying eigenpairs, the zero-confinement gap and ground-state phase
//! diagrams.

use log::warn;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{z2_plus_index, StateVector};
use crate::lattice::{GeometryMode, HamiltonianOperator, PhysicalParams};
use crate::linalg::{raxpy, rdot, rscale, tridiagonal_eigen};
use crate::observables::{tpcf, tpcf_neel};

/// Ritz values closer than this (relative to ‖H‖) are treated as one
/// degenerate cluster when fixing eigenvector conventions.
pub const CLUSTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Convergence target `‖Hx − θx‖ ≤ tol·‖H‖`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov basis size per restart; chosen from the dimension if `None`.
    pub krylov_dim: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_restarts: 400,
            krylov_dim: None,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<StateVector>,
    /// `‖Hv − Ev‖` per pair.
    pub residuals: Vec<f64>,
}

/// The `k` lowest eigenpairs with the default options.
pub fn lowest_eigenpairs(h: &HamiltonianOperator, k: usize) -> Result<EigenResult> {
    lowest_eigenpairs_with(h, k, &EigenOptions::default())
}

/// Restarted Lanczos with full reorthogonalization and locking.
///
/// Pairs are found one at a time in the complement of those already locked.
/// The first search starts from the sign-alternating vector
/// `(-1)^popcount(b)`, which overlaps every ground state of a stoquastic
/// Hamiltonian with positive flip amplitude; later searches start from
/// seeded random vectors so results are reproducible.
pub fn lowest_eigenpairs_with(h: &HamiltonianOperator, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    if k == 0 || k > 8 {
        return Err(Error::invalid(format!("k must lie in [1, 8], got {k}")));
    }
    let dim = h.dim();
    if k > dim {
        return Err(Error::invalid("k exceeds the Hilbert space dimension"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("eigensolver tolerance must be > 0"));
    }
    let h_norm = h.norm_bound().max(f64::MIN_POSITIVE);
    let m_max = opts.krylov_dim.unwrap_or_else(|| default_krylov_dim(dim)).max(2).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut hx = vec![0.0; dim];
    for target in 0..k {
        let mut x: Vec<f64> = if target == 0 {
            let sign = if h.rabi_amplitude() >= 0.0 { -1.0 } else { 1.0 };
            (0..dim)
                .map(|b| if b.count_ones() % 2 == 0 { 1.0 } else { sign })
                .collect()
        } else {
            (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()
        };
        if !orthonormalize(&mut x, &locked) {
            x = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            if !orthonormalize(&mut x, &locked) {
                return Err(Error::numerical("eigensolver start vector", 0.0));
            }
        }
        let m = m_max.min(dim - locked.len());
        let mut converged = None;
        let mut last_res = f64::INFINITY;
        for _ in 0..opts.max_restarts {
            let theta = lanczos_pass(h, &mut x, &locked, m)?;
            h.apply_real(&x, &mut hx);
            raxpy(&mut hx, -theta, &x);
            last_res = rdot(&hx, &hx).sqrt();
            if last_res <= opts.tol * h_norm {
                converged = Some(theta);
                break;
            }
        }
        match converged {
            Some(theta) => {
                values.push(theta);
                residuals.push(last_res);
                locked.push(x);
            }
            None => {
                return Err(Error::numerical(
                    format!("Lanczos eigenpair {target} did not converge"),
                    last_res / h_norm,
                ))
            }
        }
    }

    // locking finds pairs in order only up to roundoff; sort to be safe
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let residuals: Vec<f64> = order.iter().map(|&i| residuals[i]).collect();
    let mut vectors: Vec<Vec<f64>> = order.iter().map(|&i| std::mem::take(&mut locked[i])).collect();
    fix_conventions(h, &values, &mut vectors, h_norm);

    let vectors = vectors
        .into_iter()
        .map(|v| StateVector::normalized(h.n_s(), v.into_iter().map(|x| C64::new(x, 0.0)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenResult {
        values,
        vectors,
        residuals,
    })
}

fn default_krylov_dim(dim: usize) -> usize {
    // keep the basis within roughly 256 MB
    let budget = (256usize << 20) / (8 * dim);
    budget.clamp(24, 100)
}

/// Gram-Schmidt against `locked` (twice) and normalize; false if nothing is left.
fn orthonormalize(x: &mut [f64], locked: &[Vec<f64>]) -> bool {
    let before = rdot(x, x).sqrt();
    for _ in 0..2 {
        for l in locked {
            let c = rdot(l, x);
            raxpy(x, -c, l);
        }
    }
    let norm = rdot(x, x).sqrt();
    if !(norm > 1e-12 * before) {
        return false;
    }
    rscale(x, 1.0 / norm);
    true
}

/// One Lanczos cycle of length `m` from `x`; replaces `x` by the lowest
/// Ritz vector and returns its Ritz value.
fn lanczos_pass(h: &HamiltonianOperator, x: &mut Vec<f64>, locked: &[Vec<f64>], m: usize) -> Result<f64> {
    let dim = x.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    basis.push(x.clone());
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let breakdown = 1e-12 * h.norm_bound().max(f64::MIN_POSITIVE);
    let mut w = vec![0.0; dim];
    for j in 0..m {
        h.apply_real(&basis[j], &mut w);
        let mut a = rdot(&basis[j], &w);
        raxpy(&mut w, -a, &basis[j]);
        if j > 0 {
            raxpy(&mut w, -beta[j - 1], &basis[j - 1]);
        }
        for l in locked {
            let c = rdot(l, &w);
            raxpy(&mut w, -c, l);
        }
        for (i, v) in basis.iter().enumerate() {
            let c = rdot(v, &w);
            raxpy(&mut w, -c, v);
            if i == j {
                a += c;
            }
        }
        alpha.push(a);
        if j + 1 == m {
            break;
        }
        let b = rdot(&w, &w).sqrt();
        if b <= breakdown {
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        rscale(&mut next, 1.0 / b);
        basis.push(next);
    }
    let n = alpha.len();
    let (vals, vecs) = tridiagonal_eigen(&alpha, &beta[..n - 1])?;
    x.iter_mut().for_each(|v| *v = 0.0);
    for (i, v) in basis.iter().enumerate() {
        raxpy(x, vecs[i], v);
    }
    // drop whatever leaked back into the locked space
    if !orthonormalize(x, locked) {
        return Err(Error::numerical("Ritz vector collapsed onto locked space", 0.0));
    }
    Ok(vals[0])
}

/// Deterministic eigenvector conventions: inside a degenerate cluster the
/// first vector is the normalized projection of |1010…⟩; every vector has
/// its largest-magnitude amplitude positive.
fn fix_conventions(h: &HamiltonianOperator, values: &[f64], vectors: &mut [Vec<f64>], h_norm: f64) {
    let z2 = z2_plus_index(h.n_s());
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end] - values[start]).abs() <= CLUSTER_TOL * h_norm {
            end += 1;
        }
        if end - start > 1 {
            let overlaps: Vec<f64> = (start..end).map(|i| vectors[i][z2]).collect();
            let weight = overlaps.iter().map(|c| c * c).sum::<f64>().sqrt();
            if weight > 1e-12 {
                let dim = vectors[start].len();
                let mut lead = vec![0.0; dim];
                for (c, i) in overlaps.iter().zip(start..end) {
                    raxpy(&mut lead, c / weight, &vectors[i]);
                }
                let mut rest: Vec<Vec<f64>> = vec![lead];
                for i in start..end {
                    let mut v = vectors[i].clone();
                    if orthonormalize(&mut v, &rest) && rest.len() < end - start {
                        rest.push(v);
                    }
                }
                for (slot, v) in (start..end).zip(rest) {
                    vectors[slot] = v;
                }
            }
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        let (idx, _) = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bm), (i, x)| if x.abs() > bm { (i, x.abs()) } else { (bi, bm) });
        if v[idx] < 0.0 {
            rscale(v, -1.0);
        }
    }
}

/// `E₂ − E₀` of the Hamiltonian with the local detuning switched off.
pub fn gap_e20(params: &PhysicalParams) -> Result<f64> {
    let res = lowest_eigenpairs(&params.with_delta_loc(0.0).hamiltonian()?, 3)?;
    Ok((res.values[2] - res.values[0]).max(0.0))
}

/// Axes of a ground-state phase diagram at zero confinement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGridSpec {
    pub n_s: usize,
    pub omega: f64,
    pub c6: f64,
    pub geometry_mode: GeometryMode,
    /// Δ_glob/Ω values.
    pub alphas: Vec<f64>,
    /// R_b/a values.
    pub rb_over_a: Vec<f64>,
}

impl PhaseGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.rb_over_a.is_empty() {
            return Err(Error::invalid("phase grid axes must be nonempty"));
        }
        if self.alphas.iter().any(|a| !(0.0..=6.0).contains(a)) {
            return Err(Error::invalid("phase grid alpha values must lie in [0, 6]"));
        }
        if self.rb_over_a.iter().any(|r| !(1.0..=2.0).contains(r)) {
            return Err(Error::invalid("phase grid rb_over_a values must lie in [1, 2]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub alphas: Vec<f64>,
    pub rb_over_a: Vec<f64>,
    /// `values[r][a]`: TPCF-Néel scalar at (`rb_over_a[r]`, `alphas[a]`);
    /// `None` marks a point whose eigensolve failed.
    pub values: Vec<Vec<Option<f64>>>,
    pub boundary: Vec<(f64, f64)>,
}

/// Ground-state TPCF-Néel scalar over a grid, evaluated in parallel on the
/// current rayon pool and assembled by grid index.
pub fn ground_phase_diagram(spec: &PhaseGridSpec) -> Result<PhaseGrid> {
    spec.validate()?;
    let points: Vec<(usize, usize)> = (0..spec.rb_over_a.len())
        .flat_map(|r| (0..spec.alphas.len()).map(move |a| (r, a)))
        .collect();
    let flat: Vec<Option<f64>> = points
        .par_iter()
        .map(|&(r, a)| match ground_tpcf_neel(spec, spec.alphas[a], spec.rb_over_a[r]) {
            Ok(v) => Some(v),
            Err(e) => {
                warn!(
                    "phase diagram point alpha={} rb_over_a={} failed: {e}",
                    spec.alphas[a], spec.rb_over_a[r]
                );
                None
            }
        })
        .collect();
    let values: Vec<Vec<Option<f64>>> = flat.chunks(spec.alphas.len()).map(|c| c.to_vec()).collect();
    let mut grid = PhaseGrid {
        alphas: spec.alphas.clone(),
        rb_over_a: spec.rb_over_a.clone(),
        values,
        boundary: Vec::new(),
    };
    grid.boundary = phase_boundary_points(&grid);
    Ok(grid)
}

/// TPCF-Néel scalar of the β = 0 ground state at one grid point.
pub fn ground_tpcf_neel(spec: &PhaseGridSpec, alpha: f64, rb_over_a: f64) -> Result<f64> {
    let p = PhysicalParams::from_ratios(spec.n_s, rb_over_a, alpha, 0.0, spec.omega, spec.c6, spec.geometry_mode)?;
    let res = lowest_eigenpairs(&p.hamiltonian()?, 1)?;
    Ok(tpcf_neel(&tpcf(&res.vectors[0], true)))
}

/// Inflection points along each constant-R_b/a row.
///
/// The second derivative is taken by central differences; zero crossings are
/// located by linear interpolation and the two sharpest flips are kept.
/// Rows that are shorter than five points, non-uniform, or contain failed
/// points are skipped.
pub fn phase_boundary_points(grid: &PhaseGrid) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let x = &grid.alphas;
    if x.len() < 5 {
        warn!("phase boundary: rows need at least 5 points, got {}", x.len());
        return out;
    }
    let step = x[1] - x[0];
    if x.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0)) {
        warn!("phase boundary: non-uniform alpha axis rejected");
        return out;
    }
    for (row, &rba) in grid.values.iter().zip(&grid.rb_over_a) {
        let Some(y) = row.iter().copied().collect::<Option<Vec<f64>>>() else {
            warn!("phase boundary: row rb_over_a={rba} has failed points, skipped");
            continue;
        };
        for alpha in row_inflections(x, &y) {
            out.push((alpha, rba));
        }
    }
    out
}

/// Up to two inflection points of a uniformly sampled curve, ascending in x.
pub fn row_inflections(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 5 || x.len() != n {
        return Vec::new();
    }
    let d2: Vec<f64> = (1..n - 1).map(|i| y[i + 1] - 2.0 * y[i] + y[i - 1]).collect();
    let scale = d2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut flips: Vec<(f64, f64)> = Vec::new();
    // compare against the last clearly signed entry so an exact zero on a
    // grid point does not hide the crossing
    let mut prev: Option<usize> = None;
    for (i, &b) in d2.iter().enumerate() {
        if b.abs() <= floor {
            continue;
        }
        if let Some(p) = prev {
            let a = d2[p];
            if a.signum() != b.signum() {
                let frac = a / (a - b);
                let (xa, xb) = (x[p + 1], x[i + 1]);
                flips.push((xa + frac * (xb - xa), (a - b).abs()));
            }
        }
        prev = Some(i);
    }
    flips.sort_by(|p, q| q.1.total_cmp(&p.1));
    flips.truncate(2);
    let mut xs: Vec<f64> = flips.into_iter().map(|f| f.0).collect();
    xs.sort_by(f64::total_cmp);
    xs
}
