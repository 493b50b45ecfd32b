use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N(t) = A e^{−γt}` fitted on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpFit {
    pub amplitude: f64,
    /// 1/μs when times are in μs.
    pub gamma: f64,
    pub window: (f64, f64),
    /// Coefficient of determination of the log-domain fit.
    pub r_squared: f64,
    pub residual_rms: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    /// `γ = b e^{−p x}` with `x = β⁻¹`.
    Confinement,
    /// `γ = k e^{−q x}` with `x = ΔE₂₀/Ω`.
    Gap,
    /// `q = u (α₀ − α)`.
    QVsAlpha,
}

impl ScalingKind {
    pub fn param_names(self) -> (&'static str, &'static str) {
        match self {
            ScalingKind::Confinement => ("b", "p"),
            ScalingKind::Gap => ("k", "q"),
            ScalingKind::QVsAlpha => ("u", "alpha0"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingKind::Confinement => "confinement",
            ScalingKind::Gap => "gap",
            ScalingKind::QVsAlpha => "q_vs_alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateScalingFit {
    pub kind: ScalingKind,
    /// In the order of [`ScalingKind::param_names`].
    pub params: (f64, f64),
    /// Range of x covered by the fitted points.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y = c0 + c1 x`; returns `(c0, c1, r², rms)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n < 2 {
        return Err(Error::invalid("linear fit needs at least two points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("degenerate abscissae: all x values equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c0 - c1 * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok((c0, c1, r2, (ss_res / nf).sqrt()))
}

/// 10 %/90 % fall window of a smoothed decay curve.
///
/// Only samples with `t_lo <= t <= t_hi` are considered. The range is the
/// spread of the curve there; the search starts at the maximum and returns
/// the first samples that fall below `max − 0.1·range` and
/// `max − 0.9·range`.
pub fn select_fit_window(times: &[f64], smoothed: &[f64], t_lo: f64, t_hi: f64) -> Result<(f64, f64)> {
    if times.len() != smoothed.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: smoothed.len(),
        });
    }
    if !(t_hi > t_lo) {
        return Err(Error::invalid("fit search interval must satisfy t_lo < t_hi"));
    }
    let (first, last) = match (times.first(), times.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::WindowNotFound("empty series".into())),
    };
    let slack = 1e-9 * (last - first).abs().max(1.0);
    if t_lo < first - slack || t_hi > last + slack {
        return Err(Error::invalid(format!(
            "search interval [{t_lo}, {t_hi}] outside sampled range [{first}, {last}]"
        )));
    }
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= t_lo - slack && times[i] <= t_hi + slack)
        .collect();
    if idx.len() < 3 {
        return Err(Error::WindowNotFound("fewer than 3 samples in the search interval".into()));
    }
    let (imax, vmax) = idx
        .iter()
        .fold((idx[0], f64::NEG_INFINITY), |(bi, bv), &i| if smoothed[i] > bv { (i, smoothed[i]) } else { (bi, bv) });
    let vmin = idx.iter().map(|&i| smoothed[i]).fold(f64::INFINITY, f64::min);
    let range = vmax - vmin;
    if !(range > 0.0) {
        return Err(Error::WindowNotFound("curve is flat on the search interval".into()));
    }
    let upper = vmax - 0.1 * range;
    let lower = vmax - 0.9 * range;
    let after = idx.iter().copied().filter(|&i| i >= imax);
    let t_a = after.clone().find(|&i| smoothed[i] < upper).map(|i| times[i]);
    let t_b = after.clone().find(|&i| smoothed[i] < lower).map(|i| times[i]);
    match (t_a, t_b) {
        (Some(a), Some(b)) if a < b => Ok((a, b)),
        _ => Err(Error::WindowNotFound(
            "10%/90% thresholds are not crossed in descending order".into(),
        )),
    }
}

/// Shortens a window so it stops before the first non-positive sample.
pub fn truncate_positive(times: &[f64], values: &[f64], window: (f64, f64)) -> (f64, f64) {
    let mut end = window.0;
    for (t, v) in times.iter().zip(values) {
        if *t < window.0 {
            continue;
        }
        if *t > window.1 || *v <= 0.0 {
            break;
        }
        end = *t;
    }
    (window.0, end)
}

/// Log-domain least squares of `A e^{−γt}` on `window` (inclusive).
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExpFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for (&ti, &vi) in times.iter().zip(values) {
        if ti >= window.0 && ti <= window.1 {
            if !(vi > 0.0) {
                return Err(Error::FitDomain(format!("non-positive value {vi} at t = {ti}")));
            }
            t.push(ti);
            y.push(vi.ln());
        }
    }
    if t.len() < 5 {
        return Err(Error::FitDomain(format!(
            "need at least 5 samples in the fit window, found {}",
            t.len()
        )));
    }
    let (c0, c1, r2, rms) = linear_fit(&t, &y)?;
    Ok(ExpFit {
        amplitude: c0.exp(),
        gamma: -c1,
        window,
        r_squared: r2,
        residual_rms: rms,
        n_points: t.len(),
    })
}

/// Fits one of the rate-scaling laws to `(x, y)` points; `y` is γ for the
/// exponential kinds and q for [`ScalingKind::QVsAlpha`].
pub fn fit_rate_scaling(points: &[(f64, f64)], kind: ScalingKind) -> Result<RateScalingFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "rate scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let window = (
        x.iter().copied().fold(f64::INFINITY, f64::min),
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let params;
    let r2;
    match kind {
        ScalingKind::Confinement | ScalingKind::Gap => {
            if let Some(p) = points.iter().find(|p| !(p.1 > 0.0)) {
                return Err(Error::FitDomain(format!("rate {} must be > 0", p.1)));
            }
            let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
            let (c0, c1, r, _) = linear_fit(&x, &y)?;
            params = (c0.exp(), -c1);
            r2 = r;
        }
        ScalingKind::QVsAlpha => {
            let y: Vec<f64> = points.iter().map(|p| p.1).collect();
            let (c0, c1, r, _) = linear_fit(&x, &y)?;
            let u = -c1;
            if u == 0.0 {
                return Err(Error::FitDomain("zero slope: alpha0 undefined".into()));
            }
            params = (u, c0 / u);
            r2 = r;
        }
    }
    Ok(RateScalingFit {
        kind,
        params,
        window,
        r_squared: r2,
        n_points: points.len(),
    })
}
