use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Savitzky–Golay smoothing of uniformly sampled data.
///
/// Every output point is the value at that point of the least-squares
/// polynomial of degree `order` over the surrounding `window_len` samples.
/// Near the ends the window is cut off at the boundary, so it becomes
/// one-sided and shorter, though never below `order + 1` points.
/// Polynomials of degree ≤ `order` are reproduced exactly everywhere.
pub fn savitzky_golay(series: &[f64], window_len: usize, order: usize) -> Result<Vec<f64>> {
    if window_len % 2 == 0 || window_len <= order {
        return Err(Error::invalid(format!(
            "Savitzky-Golay window must be odd and > order (window {window_len}, order {order})"
        )));
    }
    if series.len() < window_len {
        return Err(Error::invalid(format!(
            "series of length {} shorter than the smoothing window {window_len}",
            series.len()
        )));
    }
    let n = series.len();
    let half = window_len / 2;
    let interior = center_weights(half, half, half, order)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut lo = i.saturating_sub(half);
        let mut hi = (i + half).min(n - 1);
        // a truncated window must still determine the full polynomial
        while hi - lo < order {
            if lo > 0 {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let value = if i - lo == half && hi - i == half {
            dot(&interior, &series[lo..=hi])
        } else {
            let w = center_weights(i - lo, hi - i, half, order)?;
            dot(&w, &series[lo..=hi])
        };
        out.push(value);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weights that evaluate the least-squares polynomial at offset 0 for a
/// window spanning offsets `-left..=right`.
fn center_weights(left: usize, right: usize, scale: usize, order: usize) -> Result<Vec<f64>> {
    let len = left + right + 1;
    let degree = order.min(len - 1);
    let s = scale.max(1) as f64;
    let a = DMatrix::from_fn(len, degree + 1, |r, c| {
        let u = (r as f64 - left as f64) / s;
        u.powi(c as i32)
    });
    let ata = a.transpose() * &a;
    let chol = ata
        .cholesky()
        .ok_or_else(|| Error::numerical("Savitzky-Golay normal equations", f64::NAN))?;
    // row 0 of (AᵀA)⁻¹Aᵀ
    let mut e0 = DVector::zeros(degree + 1);
    e0[0] = 1.0;
    let c = chol.solve(&e0);
    Ok((0..len).map(|r| (a.row(r) * &c)[(0, 0)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_unchanged() {
        let y = vec![2.5; 40];
        let s = savitzky_golay(&y, 21, 3).unwrap();
        for v in s {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_reproduced_including_edges() {
        let y: Vec<f64> = (0..60)
            .map(|i| {
                let x = i as f64 * 0.1;
                0.3 - 1.2 * x + 0.5 * x * x - 0.07 * x * x * x
            })
            .collect();
        let s = savitzky_golay(&y, 21, 3).unwrap();
        for (a, b) in s.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn classic_five_point_quadratic_weights() {
        let w = center_weights(2, 2, 2, 2).unwrap();
        let expect = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_windows() {
        let y = vec![0.0; 30];
        assert!(savitzky_golay(&y, 20, 3).is_err());
        assert!(savitzky_golay(&y, 3, 3).is_err());
        assert!(savitzky_golay(&y[..10], 21, 3).is_err());
    }
}
