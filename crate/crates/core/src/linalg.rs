//! Vector kernels and a small symmetric tridiagonal eigensolver.
//!
//! Reductions are split into fixed-size chunks whose partial sums are combined
//! in chunk order, so results are bitwise independent of the thread count.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Chunk length for parallel kernels. Fixed so reductions are reproducible.
pub(crate) const CHUNK: usize = 1 << 12;

/// `<a|b>` with the first argument conjugated.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    }
    let partial: Vec<C64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    partial.into_iter().sum()
}

pub fn cnorm_sqr(a: &[C64]) -> f64 {
    if a.len() <= CHUNK {
        return a.iter().map(|x| x.norm_sqr()).sum();
    }
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .map(|x| x.iter().map(|p| p.norm_sqr()).sum())
        .collect();
    partial.into_iter().sum()
}

/// `y += alpha * x`
pub fn caxpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    if y.len() <= CHUNK {
        y.iter_mut().zip(x).for_each(|(p, q)| *p += alpha * q);
        return;
    }
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(ys, xs)| ys.iter_mut().zip(xs).for_each(|(p, q)| *p += alpha * q));
}

pub fn cscale(y: &mut [C64], alpha: f64) {
    if y.len() <= CHUNK {
        y.iter_mut().for_each(|p| *p *= alpha);
        return;
    }
    y.par_chunks_mut(CHUNK)
        .for_each(|ys| ys.iter_mut().for_each(|p| *p *= alpha));
}

pub fn rdot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    partial.into_iter().sum()
}

pub fn raxpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    if y.len() <= CHUNK {
        y.iter_mut().zip(x).for_each(|(p, q)| *p += alpha * q);
        return;
    }
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(ys, xs)| ys.iter_mut().zip(xs).for_each(|(p, q)| *p += alpha * q));
}

pub fn rscale(y: &mut [f64], alpha: f64) {
    if y.len() <= CHUNK {
        y.iter_mut().for_each(|p| *p *= alpha);
        return;
    }
    y.par_chunks_mut(CHUNK)
        .for_each(|ys| ys.iter_mut().for_each(|p| *p *= alpha));
}

/// Eigendecomposition of a real symmetric tridiagonal matrix.
///
/// `diag` has length `n`, `offdiag` length `n - 1`. Returns eigenvalues in
/// ascending order and the matching orthonormal eigenvectors, stored
/// column-major: `vectors[k * n + i]` is component `i` of eigenvector `k`.
///
/// Implicit QL with Wilkinson-style shifts (the EISPACK `tql2` scheme).
pub fn tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: offdiag.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);
    // v[row][col] in row-major scratch
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 200 {
                    return Err(Error::numerical("tridiagonal QL iteration", e[l].abs()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * hk;
                        v[k * n + i] = c * v[k * n + i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[col * n + i] = v[i * n + k];
        }
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(diag: &[f64], off: &[f64]) {
        let n = diag.len();
        let (vals, vecs) = tridiagonal_eigen(diag, off).unwrap();
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for k in 0..n {
            let x = &vecs[k * n..(k + 1) * n];
            for i in 0..n {
                let mut tx = diag[i] * x[i];
                if i > 0 {
                    tx += off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    tx += off[i] * x[i + 1];
                }
                assert!((tx - vals[k] * x[i]).abs() < 1e-12, "residual too large");
            }
            for j in 0..n {
                let y = &vecs[j * n..(j + 1) * n];
                let ip: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let (vals, _) = tridiagonal_eigen(&[1.0, 3.0], &[1.0]).unwrap();
        let s = 2f64.sqrt();
        assert!((vals[0] - (2.0 - s)).abs() < 1e-14);
        assert!((vals[1] - (2.0 + s)).abs() < 1e-14);
    }

    #[test]
    fn laplacian_spectrum() {
        let n = 12;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let (vals, _) = tridiagonal_eigen(&diag, &off).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        check_decomposition(&diag, &off);
    }

    #[test]
    fn uneven_entries_and_decoupled_blocks() {
        check_decomposition(&[0.3, -1.2, 4.0, 2.2, 0.0, 7.5], &[0.5, 1e-3, 0.0, 2.5, -0.7]);
        check_decomposition(&[5.0], &[]);
    }

    #[test]
    fn reductions_match_sequential_sums() {
        let n = 3 * CHUNK + 17;
        let a: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let seq: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        assert!((cnorm_sqr(&a) - seq).abs() < 1e-9 * seq);
    }
}
