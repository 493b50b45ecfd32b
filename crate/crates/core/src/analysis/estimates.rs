//! Closed-form nucleation estimates and the Ising reference exponent.

use crate::error::{Error, Result};

/// Critical bubble size `ℓ = Δ_glob / |Δ_loc|` in sites.
pub fn critical_bubble_size(delta_glob: f64, delta_loc: f64) -> Result<f64> {
    if delta_loc == 0.0 {
        return Err(Error::invalid("critical bubble size undefined for zero local detuning"));
    }
    Ok(delta_glob / delta_loc.abs())
}

/// Classical energy `ε₀ + Δ_glob − n Δ_loc` of a false-vacuum state with one
/// n-site true-vacuum bubble, next-nearest-neighbour terms neglected.
pub fn classical_bubble_energy(eps0: f64, delta_glob: f64, delta_loc: f64, n: usize) -> f64 {
    eps0 + delta_glob - n as f64 * delta_loc
}

/// Two-step domain-wall hopping scale `Ω²/Δ_glob + Ω²/V₁`.
pub fn hopping_energy_estimate(omega: f64, delta_glob: f64, v1: f64) -> Result<f64> {
    if !(delta_glob > 0.0) || !(v1 > 0.0) {
        return Err(Error::invalid("hopping estimate needs delta_glob > 0 and v1 > 0"));
    }
    let o2 = omega * omega;
    Ok(o2 / delta_glob + o2 / v1)
}

/// Exponent `|f(θ₀)| / (|h_z| M)` of the thin-wall Ising decay rate, with
/// `M = (1 − h_x²)^{1/8}` and
/// `|f(θ₀)| = 2 ∫₀^{|ln h_x|} √(1 + h_x² − 2 h_x cosh φ) dφ`.
///
/// The sign of `h_x` is irrelevant (spin rotation), so `|h_x|` is used.
pub fn ising_reference_exponent(h_x: f64, h_z: f64) -> Result<f64> {
    let hx = h_x.abs();
    if !(hx > 0.0 && hx < 1.0) {
        return Err(Error::invalid(format!("need 0 < |h_x| < 1, got {h_x}")));
    }
    if h_z == 0.0 || !h_z.is_finite() {
        return Err(Error::invalid("h_z must be finite and nonzero"));
    }
    let m = (1.0 - hx * hx).powf(0.125);
    Ok(ising_dispersion_integral(hx)? / (h_z.abs() * m))
}

/// `|f(θ₀)|` alone.
pub fn ising_dispersion_integral(hx: f64) -> Result<f64> {
    let upper = hx.ln().abs();
    let f = |phi: f64| (1.0 + hx * hx - 2.0 * hx * phi.cosh()).max(0.0).sqrt();
    Ok(2.0 * adaptive_gauss_kronrod(f, 0.0, upper, 1e-12)?)
}

// 15-point Kronrod extension of the 7-point Gauss rule
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive G7K15 quadrature to relative tolerance `rel_tol`.
pub fn adaptive_gauss_kronrod(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..5000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return Ok(total);
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (x0, x1) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(&f, x0, x1);
            parts.push((x0, x1, v, e));
        }
    }
    let err: f64 = parts.iter().map(|p| p.3).sum();
    Err(Error::numerical("adaptive quadrature", err))
}
