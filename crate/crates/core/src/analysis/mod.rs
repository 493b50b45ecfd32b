//! Decay-curve smoothing and fitting, rate-scaling fits and analytic
//! nucleation estimates.

mod estimates;
mod fit;
mod savgol;

pub use estimates::{
    adaptive_gauss_kronrod, classical_bubble_energy, critical_bubble_size, hopping_energy_estimate,
    ising_dispersion_integral, ising_reference_exponent,
};
pub use fit::{
    fit_exponential, fit_rate_scaling, linear_fit, select_fit_window, truncate_positive, ExpFit, RateScalingFit,
    ScalingKind,
};
pub use savgol::savitzky_golay;
