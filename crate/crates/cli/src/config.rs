//! Layered run configuration: file < `FVDSIM_*` environment < flags.
//!
//! Every field is optional at this level; defaults are filled when a section
//! is resolved into the core parameter structs for a particular subcommand.

use std::path::{Path, PathBuf};

use fvdsim_core::drivers::{AnnealSpec, DecaySettings, SystemSpec, CONFINEMENT_WINDOW, RATE_DIAGRAM_BETA};
use fvdsim_core::evolution::KrylovOptions;
use fvdsim_core::lattice::{GeometryMode, DEFAULT_C6, MAX_SITES, TWO_PI};
use fvdsim_core::observables::{SigmaPattern, Windowing};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSection,
    pub experiment: ExperimentSection,
    pub io: IoSection,
    pub compute: ComputeSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb_over_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry_mode: Option<GeometryMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c6: Option<f64>,
    /// Lattice spacing in μm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Must name the subcommand when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sg_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sg_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windowing: Option<Windowing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<SigmaPattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rba_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_y: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upgraded_fov: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_quench: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComputeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krylov_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krylov_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_substeps: Option<usize>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr; $($f:ident),+ $(,)?) => {
        $(if $src.$f.is_some() {
            $dst.$f = $src.$f.clone();
        })+
    };
}

impl RunConfig {
    /// Values set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &RunConfig) {
        overlay!(self.system, top.system; n_s, rb_over_a, alpha, beta, omega_mhz, geometry_mode, c6, a);
        overlay!(self.experiment, top.experiment;
            kind, horizon, samples, sg_window, sg_order, search, windowing, pattern, betas, beta_window,
            alphas, rb_values, alpha_range, rba_range, resolution, tau, beta_start, beta_stop, dt, t_end,
            b, n_y, upgraded_fov, step_quench);
        overlay!(self.io, top.io; out, force);
        overlay!(self.compute, top.compute; threads, krylov_dim, krylov_tol, max_substeps);
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?
        } else {
            let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(format!("invalid TOML: {e}")))?;
            serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))?
        };
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn check_kind(&self, command: &str) -> Result<(), CliError> {
        match &self.experiment.kind {
            Some(k) if k != command => Err(cfg_err(
                "experiment.kind",
                format!("config is for {k:?} but the subcommand is {command:?}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn system_spec(&self) -> Result<SystemSpec, CliError> {
        let s = &self.system;
        let n_s = require(s.n_s, "system.n_s")?;
        if n_s % 2 != 0 {
            return Err(cfg_err("system.n_s", format!("n_s must be even, got {n_s}")));
        }
        if !(4..=MAX_SITES).contains(&n_s) {
            return Err(cfg_err("system.n_s", format!("n_s must lie in [4, {MAX_SITES}], got {n_s}")));
        }
        let rba = require(s.rb_over_a, "system.rb_over_a")?;
        positive(rba, "system.rb_over_a")?;
        let alpha = require(s.alpha, "system.alpha")?;
        finite(alpha, "system.alpha")?;
        let omega = self.omega()?;
        let c6 = match (s.c6, s.a) {
            (Some(c6), _) => {
                positive(c6, "system.c6")?;
                c6
            }
            (None, Some(a)) => {
                positive(a, "system.a")?;
                if omega == 0.0 {
                    return Err(cfg_err("system.a", "deriving c6 from a needs omega_mhz > 0"));
                }
                omega * (rba * a).powi(6)
            }
            (None, None) => DEFAULT_C6,
        };
        let spec = SystemSpec {
            n_s,
            rb_over_a: rba,
            alpha,
            omega,
            c6,
            geometry_mode: s.geometry_mode.unwrap_or_default(),
        };
        // remaining invariants live with the lattice model
        spec.params(0.0).map_err(|e| cfg_err("system", e))?;
        Ok(spec)
    }

    /// Ω in rad/μs.
    pub fn omega(&self) -> Result<f64, CliError> {
        let mhz = self.system.omega_mhz.unwrap_or(1.0);
        if !(mhz >= 0.0) || !mhz.is_finite() {
            return Err(cfg_err("system.omega_mhz", format!("omega_mhz must be >= 0, got {mhz}")));
        }
        Ok(TWO_PI * mhz)
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        let b = require(self.system.beta, "system.beta")?;
        finite(b, "system.beta")?;
        Ok(b)
    }

    /// β for a decay quench from |1010…⟩, which needs a true vacuum to decay to.
    pub fn decay_beta(&self) -> Result<f64, CliError> {
        let b = self.beta()?;
        if !(b > 0.0 && b < 1.0) {
            return Err(cfg_err("system.beta", format!("decay requires 0 < beta < 1, got {b}")));
        }
        Ok(b)
    }

    pub fn krylov(&self) -> Result<KrylovOptions, CliError> {
        let d = KrylovOptions::default();
        let c = &self.compute;
        let k = KrylovOptions {
            krylov_dim: c.krylov_dim.unwrap_or(d.krylov_dim),
            tol: c.krylov_tol.unwrap_or(d.tol),
            max_substeps: c.max_substeps.unwrap_or(d.max_substeps),
        };
        k.validate().map_err(|e| cfg_err("compute", e))?;
        Ok(k)
    }

    pub fn decay_settings(&self) -> Result<DecaySettings, CliError> {
        let d = DecaySettings::default();
        let e = &self.experiment;
        let s = DecaySettings {
            horizon: e.horizon.unwrap_or(d.horizon),
            samples: e.samples.unwrap_or(d.samples),
            sg_window: e.sg_window.unwrap_or(d.sg_window),
            sg_order: e.sg_order.unwrap_or(d.sg_order),
            search: e.search.map(|[a, b]| (a, b)).unwrap_or(d.search),
            windowing: e.windowing.unwrap_or(d.windowing),
            pattern: e.pattern.unwrap_or(d.pattern),
            krylov: self.krylov()?,
        };
        s.validate().map_err(|e| cfg_err("experiment", e))?;
        if s.sg_window % 2 == 0 || s.sg_order >= s.sg_window {
            return Err(cfg_err(
                "experiment.sg_window",
                "sg_window must be odd and larger than sg_order",
            ));
        }
        Ok(s)
    }

    pub fn anneal_spec(&self) -> Result<AnnealSpec, CliError> {
        let e = &self.experiment;
        let tau = require(e.tau, "experiment.tau")?;
        let mut spec = AnnealSpec::new(self.system_spec()?, tau);
        if let Some(v) = e.beta_start {
            spec.beta_start = v;
        }
        if let Some(v) = e.beta_stop {
            spec.beta_stop = v;
        }
        if let Some(v) = e.samples {
            spec.samples = v;
        }
        if let Some(dt) = e.dt {
            positive(dt, "experiment.dt")?;
            spec.dt = Some(dt);
        }
        spec.windowing = e.windowing.unwrap_or_default();
        spec.pattern = e.pattern.unwrap_or_default();
        spec.krylov = self.krylov()?;
        spec.validate().map_err(|e| cfg_err("experiment", e))?;
        Ok(spec)
    }

    pub fn confinement_window(&self) -> Result<(f64, f64), CliError> {
        match self.experiment.beta_window {
            Some([lo, hi]) if lo < hi => Ok((lo, hi)),
            Some(_) => Err(cfg_err("experiment.beta_window", "beta_window must satisfy lo < hi")),
            None => Ok(CONFINEMENT_WINDOW),
        }
    }

    /// β of a rate diagram; the reference value unless set.
    pub fn diagram_beta(&self) -> Result<f64, CliError> {
        match self.system.beta {
            Some(_) => self.decay_beta(),
            None => Ok(RATE_DIAGRAM_BETA),
        }
    }

    /// Uniform axes from `alpha_range`, `rba_range` and `resolution`.
    pub fn grid_axes(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let e = &self.experiment;
        let n = e.resolution.unwrap_or(DEFAULT_RESOLUTION);
        if n < 2 {
            return Err(cfg_err("experiment.resolution", format!("resolution must be >= 2, got {n}")));
        }
        let alphas = linspace(require(e.alpha_range, "experiment.alpha_range")?, n, "experiment.alpha_range")?;
        let rbs = linspace(require(e.rba_range, "experiment.rba_range")?, n, "experiment.rba_range")?;
        Ok((alphas, rbs))
    }

    /// An axis list, or the matching scalar from `[system]` as a single point.
    pub fn axis(&self, list: &Option<Vec<f64>>, key: &str, scalar: Option<f64>) -> Result<Vec<f64>, CliError> {
        let v = match (list, scalar) {
            (Some(v), _) => v.clone(),
            (None, Some(x)) => vec![x],
            (None, None) => return Err(cfg_err(key, "missing required value")),
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(cfg_err(key, "values must be finite"));
        }
        Ok(v)
    }

    pub fn threads(&self) -> Result<usize, CliError> {
        match self.compute.threads {
            Some(0) => Err(cfg_err("compute.threads", "threads must be >= 1")),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

pub const DEFAULT_RESOLUTION: usize = 21;

fn linspace([lo, hi]: [f64; 2], n: usize, key: &str) -> Result<Vec<f64>, CliError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(cfg_err(key, format!("range must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect())
}

pub(crate) fn cfg_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

pub(crate) fn require<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| cfg_err(key, "missing required value"))
}

fn positive(v: f64, key: &str) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(key, format!("must be > 0, got {v}")))
    }
}

fn finite(v: f64, key: &str) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(key, format!("must be finite, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_replaces_only_set_fields() {
        let mut base = RunConfig::parse("[system]\nn_s = 8\nalpha = 2.0\n").unwrap();
        let mut top = RunConfig::default();
        top.system.alpha = Some(3.0);
        base.overlay(&top);
        assert_eq!(base.system.n_s, Some(8));
        assert_eq!(base.system.alpha, Some(3.0));
    }

    #[test]
    fn c6_from_spacing() {
        let cfg = RunConfig::parse("[system]\nn_s = 8\nrb_over_a = 1.2\nalpha = 2.5\na = 8.0\n").unwrap();
        let s = cfg.system_spec().unwrap();
        assert!((s.c6 - TWO_PI * (9.6f64).powi(6)).abs() < 1e-6 * s.c6);
    }

    #[test]
    fn linspace_hits_both_ends() {
        let v = linspace([0.1, 0.7], 7, "x").unwrap();
        assert_eq!(v[0], 0.1);
        assert_eq!(v[6], 0.7);
        assert!(linspace([1.0, 1.0], 3, "x").is_err());
    }
}
