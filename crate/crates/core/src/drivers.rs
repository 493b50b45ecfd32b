//! End-to-end numerical experiments: decay quenches, rate scans and sweeps,
//! and the local-detuning anneal.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    critical_bubble_size, fit_exponential, fit_rate_scaling, hopping_energy_estimate, savitzky_golay,
    select_fit_window, truncate_positive, ExpFit, RateScalingFit, ScalingKind,
};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve_constant_sampled, evolve_schedule, fmt_num, uniform_grid, EvolutionStats, KrylovOptions, ScheduleOptions,
    StateVector, Trajectory, DEFAULT_SAMPLES,
};
use crate::lattice::{DriveSchedule, GeometryMode, PhysicalParams, DEFAULT_C6, TWO_PI};
use crate::observables::{ObservableSet, SigmaPattern, Windowing};
use crate::spectrum::gap_e20;

/// Chain description in the dimensionless variables of the experiments.
/// The confinement β is supplied per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n_s: usize,
    pub rb_over_a: f64,
    /// Δ_glob/Ω.
    pub alpha: f64,
    /// Ω in rad/μs.
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_c6")]
    pub c6: f64,
    #[serde(default)]
    pub geometry_mode: GeometryMode,
}

fn default_omega() -> f64 {
    TWO_PI
}

fn default_c6() -> f64 {
    DEFAULT_C6
}

impl SystemSpec {
    /// Ω/2π = 1 MHz and the default C₆.
    pub fn new(n_s: usize, rb_over_a: f64, alpha: f64) -> Self {
        SystemSpec {
            n_s,
            rb_over_a,
            alpha,
            omega: TWO_PI,
            c6: DEFAULT_C6,
            geometry_mode: GeometryMode::Chord,
        }
    }

    pub fn params(&self, beta: f64) -> Result<PhysicalParams> {
        PhysicalParams::from_ratios(
            self.n_s,
            self.rb_over_a,
            self.alpha,
            beta,
            self.omega,
            self.c6,
            self.geometry_mode,
        )
    }

    pub fn at(&self, alpha: f64, rb_over_a: f64) -> Self {
        SystemSpec {
            alpha,
            rb_over_a,
            ..self.clone()
        }
    }
}

/// Sampling and fitting controls of a decay quench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySettings {
    /// Final time in units of Ωt/2π.
    pub horizon: f64,
    pub samples: usize,
    pub sg_window: usize,
    pub sg_order: usize,
    /// Fit-window search interval in units of Ωt/2π.
    pub search: (f64, f64),
    pub windowing: Windowing,
    pub pattern: SigmaPattern,
    pub krylov: KrylovOptions,
}

impl Default for DecaySettings {
    fn default() -> Self {
        DecaySettings {
            horizon: 1.0,
            samples: DEFAULT_SAMPLES,
            sg_window: 21,
            sg_order: 3,
            search: (0.1, 0.4),
            windowing: Windowing::Wrap,
            pattern: SigmaPattern::AntiInitial,
            krylov: KrylovOptions::default(),
        }
    }
}

impl DecaySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be > 0"));
        }
        if self.samples < self.sg_window {
            return Err(Error::invalid("samples must be at least the smoothing window"));
        }
        if !(self.search.0 >= 0.0 && self.search.0 < self.search.1 && self.search.1 <= self.horizon) {
            return Err(Error::invalid("fit search interval must satisfy 0 <= lo < hi <= horizon"));
        }
        self.krylov.validate()
    }

    /// μs per unit of Ωt/2π. A chain without Rabi drive uses the 1 MHz scale.
    fn time_unit(omega: f64) -> f64 {
        if omega > 0.0 {
            TWO_PI / omega
        } else {
            1.0
        }
    }
}

/// Diagnostics of the thin-wall decay regime for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub beta: f64,
    /// Δ_glob/|Δ_loc|.
    pub critical_bubble_size: f64,
    /// β ≤ 0.5, the confinement is small next to the global detuning.
    pub thin_wall: bool,
    /// Δ_glob < |Δ_loc| n_s, the critical bubble fits on the ring.
    pub bubble_fits: bool,
    /// Ω²/Δ_glob + Ω²/V₁, in rad/μs.
    pub hopping_estimate: Option<f64>,
}

impl RegimeCheck {
    pub fn new(params: &PhysicalParams) -> Result<Self> {
        let beta = params
            .beta()
            .ok_or_else(|| Error::invalid("decay regime needs delta_glob != 0"))?;
        let ell = critical_bubble_size(params.delta_glob, params.delta_loc)?;
        Ok(RegimeCheck {
            beta,
            critical_bubble_size: ell,
            thin_wall: beta.abs() <= 0.5,
            bubble_fits: ell < params.n_s as f64,
            hopping_estimate: hopping_energy_estimate(params.omega, params.delta_glob, params.v1()).ok(),
        })
    }

    pub fn holds(&self) -> bool {
        self.thin_wall && self.bubble_fits
    }
}

/// Column appended to decay trajectories.
pub const SMOOTHED_COLUMN: &str = "neel_sg";

#[derive(Debug, Clone)]
pub struct DecayRun {
    pub params: PhysicalParams,
    /// Standard observables plus the smoothed Néel column.
    pub trajectory: Trajectory,
    pub fit: Option<ExpFit>,
    pub fit_error: Option<String>,
    pub regime: Option<RegimeCheck>,
    pub stats: EvolutionStats,
}

impl DecayRun {
    pub fn gamma(&self) -> Option<f64> {
        self.fit.map(|f| f.gamma)
    }
}

/// Quench from |10…10⟩ under constant couplings, then smoothing, window
/// selection and the exponential fit of the Néel order parameter.
///
/// A failed fit is reported in the result; the trajectory is kept.
pub fn run_decay(params: &PhysicalParams, settings: &DecaySettings) -> Result<DecayRun> {
    match params.beta() {
        Some(b) if b > 0.0 && b < 1.0 => {}
        _ => return Err(Error::invalid("decay requires 0 < beta < 1")),
    }
    if !(params.delta_glob > 0.0) {
        return Err(Error::invalid("decay requires alpha > 0"));
    }
    run_decay_from(params, &StateVector::z2_plus(params.n_s)?, settings)
}

/// [`run_decay`] from an arbitrary initial state and without the regime
/// preconditions.
pub fn run_decay_from(params: &PhysicalParams, psi: &StateVector, settings: &DecaySettings) -> Result<DecayRun> {
    settings.validate()?;
    params.validate()?;
    let unit = DecaySettings::time_unit(params.omega);
    let times = uniform_grid(0.0, settings.horizon * unit, settings.samples)?;
    let obs = ObservableSet::standard(params.n_s, settings.windowing, settings.pattern)?;
    let h = params.hamiltonian()?;
    let evo = evolve_constant_sampled(&h, psi, &times, &settings.krylov, |_, s| obs.evaluate(s))?;

    let neel: Vec<f64> = evo.samples.iter().map(|r| r[0]).collect();
    let smoothed = savitzky_golay(&neel, settings.sg_window, settings.sg_order)?;

    let mut columns = obs.names();
    columns.push(SMOOTHED_COLUMN.to_string());
    let mut trajectory = Trajectory::new(params.omega, columns);
    for ((t, mut row), s) in times.iter().zip(evo.samples).zip(&smoothed) {
        row.push(*s);
        trajectory.push(*t, row)?;
    }

    let fitted = select_fit_window(&times, &smoothed, settings.search.0 * unit, settings.search.1 * unit)
        .and_then(|w| fit_exponential(&times, &neel, truncate_positive(&times, &neel, w)));
    let (fit, fit_error) = match fitted {
        Ok(f) => (Some(f), None),
        Err(e) => {
            warn!("decay fit failed: {e}");
            (None, Some(e.to_string()))
        }
    };
    Ok(DecayRun {
        params: params.clone(),
        trajectory,
        fit,
        fit_error,
        regime: RegimeCheck::new(params).ok(),
        stats: evo.stats,
    })
}

/// One point of a rate scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    /// Abscissa of the scaling law (β⁻¹ or ΔE₂₀/Ω).
    pub x: f64,
    pub alpha: f64,
    pub rb_over_a: f64,
    pub beta: f64,
    pub fit: Option<ExpFit>,
    pub error: Option<String>,
    pub regime: Option<RegimeCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateScan {
    pub points: Vec<RatePoint>,
    pub fit: Option<RateScalingFit>,
    pub fit_error: Option<String>,
}

impl RateScan {
    fn fitted(points: Vec<RatePoint>, kind: ScalingKind, window: Option<(f64, f64)>) -> Self {
        let usable: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| window.is_none_or(|(lo, hi)| p.x >= lo - 1e-9 && p.x <= hi + 1e-9))
            .filter_map(|p| p.fit.map(|f| (p.x, f.gamma)))
            .collect();
        let (fit, fit_error) = match fit_rate_scaling(&usable, kind) {
            Ok(f) => (Some(f), None),
            Err(e) => {
                warn!("{} fit skipped: {e}", kind.as_str());
                (None, Some(e.to_string()))
            }
        };
        RateScan { points, fit, fit_error }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,alpha,rb_over_a,beta,gamma,amplitude,r_squared,t_a,t_b,status\n");
        for p in &self.points {
            let head = [p.x, p.alpha, p.rb_over_a, p.beta].map(fmt_num).join(",");
            out.push_str(&head);
            out.push(',');
            out.push_str(&fit_cells(p.fit.as_ref(), p.error.as_deref()));
            out.push('\n');
        }
        out
    }
}

fn fit_cells(fit: Option<&ExpFit>, error: Option<&str>) -> String {
    match fit {
        Some(f) => format!(
            "{},{},{},{},{},ok",
            fmt_num(f.gamma),
            fmt_num(f.amplitude),
            fmt_num(f.r_squared),
            fmt_num(f.window.0),
            fmt_num(f.window.1)
        ),
        None => format!("nan,nan,nan,nan,nan,{}", csv_safe(error.unwrap_or("failed"))),
    }
}

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n', '"'], ";")
}

fn decay_point(system: &SystemSpec, beta: f64, x: impl FnOnce(&PhysicalParams) -> Result<f64>, settings: &DecaySettings) -> RatePoint {
    let mut point = RatePoint {
        x: f64::NAN,
        alpha: system.alpha,
        rb_over_a: system.rb_over_a,
        beta,
        fit: None,
        error: None,
        regime: None,
    };
    let outcome = system.params(beta).and_then(|p| {
        point.x = x(&p)?;
        run_decay(&p, settings)
    });
    match outcome {
        Ok(run) => {
            point.regime = run.regime;
            point.fit = run.fit;
            point.error = run.fit_error;
        }
        Err(e) => point.error = Some(e.to_string()),
    }
    point
}

/// Default β⁻¹ range of the confinement fit.
pub const CONFINEMENT_WINDOW: (f64, f64) = (2.5, 4.0);

/// γ(β) for each β, then `γ = b e^{−p β⁻¹}` over points whose β⁻¹ lies in
/// `window`.
pub fn run_rate_vs_confinement(
    system: &SystemSpec,
    betas: &[f64],
    window: (f64, f64),
    settings: &DecaySettings,
) -> Result<RateScan> {
    if betas.len() < 3 {
        return Err(Error::invalid("confinement scan needs at least 3 beta values"));
    }
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
        return Err(Error::invalid(format!("beta = {b} outside (0, 1)")));
    }
    let points: Vec<RatePoint> = betas
        .par_iter()
        .map(|&b| decay_point(system, b, |_| Ok(1.0 / b), settings))
        .collect();
    Ok(RateScan::fitted(points, ScalingKind::Confinement, Some(window)))
}

/// γ at fixed β against the zero-confinement gap ΔE₂₀/Ω for each R_b/a.
pub fn run_rate_vs_gap(
    system: &SystemSpec,
    rb_over_a: &[f64],
    beta: f64,
    settings: &DecaySettings,
) -> Result<RateScan> {
    if rb_over_a.len() < 3 {
        return Err(Error::invalid("gap scan needs at least 3 rb_over_a values"));
    }
    let points: Vec<RatePoint> = rb_over_a
        .par_iter()
        .map(|&r| {
            let sys = system.at(system.alpha, r);
            decay_point(&sys, beta, |p| Ok(gap_e20(p)? / p.omega), settings)
        })
        .collect();
    Ok(RateScan::fitted(points, ScalingKind::Gap, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QScan {
    pub scans: Vec<(f64, RateScan)>,
    pub fit: Option<RateScalingFit>,
    pub fit_error: Option<String>,
}

/// Gap scans at several α followed by the linear fit `q = u(α₀ − α)`.
pub fn run_q_vs_alpha(
    system: &SystemSpec,
    alphas: &[f64],
    rb_over_a: &[f64],
    beta: f64,
    settings: &DecaySettings,
) -> Result<QScan> {
    if alphas.len() < 3 {
        return Err(Error::invalid("q(alpha) fit needs at least 3 alpha values"));
    }
    let mut scans = Vec::with_capacity(alphas.len());
    for &a in alphas {
        scans.push((a, run_rate_vs_gap(&system.at(a, system.rb_over_a), rb_over_a, beta, settings)?));
    }
    let points: Vec<(f64, f64)> = scans
        .iter()
        .filter_map(|(a, s)| s.fit.map(|f| (*a, f.params.1)))
        .collect();
    let (fit, fit_error) = match fit_rate_scaling(&points, ScalingKind::QVsAlpha) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(QScan { scans, fit, fit_error })
}

/// Grid of decay quenches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub system: SystemSpec,
    pub alphas: Vec<f64>,
    pub rb_over_a: Vec<f64>,
    pub betas: Vec<f64>,
    #[serde(default)]
    pub settings: DecaySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub index: usize,
    pub alpha: f64,
    pub rb_over_a: f64,
    pub beta: f64,
    pub fit: Option<ExpFit>,
    pub error: Option<String>,
}

/// One record per grid point, ordered by (β, R_b/a, α) with α fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub rb_over_a: Vec<f64>,
    pub betas: Vec<f64>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.fit.is_none()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,alpha,rb_over_a,beta,gamma,amplitude,r_squared,t_a,t_b,status\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.index,
                fmt_num(r.alpha),
                fmt_num(r.rb_over_a),
                fmt_num(r.beta),
                fit_cells(r.fit.as_ref(), r.error.as_deref())
            ));
        }
        out
    }

    /// `γ[r][a]` for the `b`-th β value.
    pub fn gamma_matrix(&self, b: usize) -> Vec<Vec<Option<f64>>> {
        let (na, nr) = (self.alphas.len(), self.rb_over_a.len());
        (0..nr)
            .map(|r| {
                (0..na)
                    .map(|a| self.records[(b * nr + r) * na + a].fit.map(|f| f.gamma))
                    .collect()
            })
            .collect()
    }
}

/// Runs every grid point on a pool of `threads` workers. Results are
/// assembled by grid index, so the output does not depend on `threads`;
/// a failing point yields a failure record and never aborts the sweep.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepResult> {
    if spec.alphas.is_empty() || spec.rb_over_a.is_empty() || spec.betas.is_empty() {
        return Err(Error::invalid("sweep axes must be nonempty"));
    }
    spec.settings.validate()?;
    let mut grid = Vec::new();
    for &beta in &spec.betas {
        for &rb in &spec.rb_over_a {
            for &alpha in &spec.alphas {
                grid.push((alpha, rb, beta));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Capability(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(index, &(alpha, rb, beta))| {
                let outcome = spec
                    .system
                    .at(alpha, rb)
                    .params(beta)
                    .and_then(|p| run_decay(&p, &spec.settings));
                let (fit, error) = match outcome {
                    Ok(run) => (run.fit, run.fit_error),
                    Err(e) => (None, Some(e.to_string())),
                };
                if let Some(e) = &error {
                    warn!("sweep point alpha={alpha} rb_over_a={rb} beta={beta}: {e}");
                }
                SweepRecord {
                    index,
                    alpha,
                    rb_over_a: rb,
                    beta,
                    fit,
                    error,
                }
            })
            .collect()
    });
    Ok(SweepResult {
        alphas: spec.alphas.clone(),
        rb_over_a: spec.rb_over_a.clone(),
        betas: spec.betas.clone(),
        records,
    })
}

/// Confinement used for the rate diagram.
pub const RATE_DIAGRAM_BETA: f64 = 0.25;

/// γ over an (α, R_b/a) grid at fixed β.
pub fn run_rate_diagram(
    system: &SystemSpec,
    alphas: &[f64],
    rb_over_a: &[f64],
    beta: f64,
    settings: &DecaySettings,
    threads: usize,
) -> Result<SweepResult> {
    let spec = SweepSpec {
        system: system.clone(),
        alphas: alphas.to_vec(),
        rb_over_a: rb_over_a.to_vec(),
        betas: vec![beta],
        settings: *settings,
    };
    run_sweep(&spec, threads)
}

/// Matrix CSV: one row per R_b/a, one column per α; failed cells are `nan`.
pub fn grid_matrix_csv(alphas: &[f64], rb_over_a: &[f64], values: &[Vec<Option<f64>>]) -> String {
    let mut out = String::from("rb_over_a");
    for a in alphas {
        out.push(',');
        out.push_str(&fmt_num(*a));
    }
    out.push('\n');
    for (r, row) in rb_over_a.iter().zip(values) {
        out.push_str(&fmt_num(*r));
        for v in row {
            out.push(',');
            out.push_str(&v.map_or_else(|| "nan".to_string(), fmt_num));
        }
        out.push('\n');
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("spearman needs two equally long series of length >= 2"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("spearman undefined for a constant series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Linear local-detuning ramp at fixed α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSpec {
    pub system: SystemSpec,
    #[serde(default = "default_beta_start")]
    pub beta_start: f64,
    #[serde(default = "default_beta_stop")]
    pub beta_stop: f64,
    /// Ramp time in μs; β drops by one every τ.
    pub tau: f64,
    #[serde(default = "default_anneal_samples")]
    pub samples: usize,
    /// Step bound; defaults to `min(τ/400, 0.005)`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub windowing: Windowing,
    #[serde(default)]
    pub pattern: SigmaPattern,
    #[serde(default)]
    pub krylov: KrylovOptions,
}

fn default_beta_start() -> f64 {
    2.0
}

fn default_beta_stop() -> f64 {
    -1.5
}

fn default_anneal_samples() -> usize {
    600
}

impl AnnealSpec {
    pub fn new(system: SystemSpec, tau: f64) -> Self {
        AnnealSpec {
            system,
            beta_start: default_beta_start(),
            beta_stop: default_beta_stop(),
            tau,
            samples: default_anneal_samples(),
            dt: None,
            windowing: Windowing::Wrap,
            pattern: SigmaPattern::AntiInitial,
            krylov: KrylovOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_start > self.beta_stop) {
            return Err(Error::invalid("anneal requires beta_start > beta_stop"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau must be > 0"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("anneal needs at least 2 samples"));
        }
        self.krylov.validate()
    }

    pub fn schedule(&self) -> Result<DriveSchedule> {
        let s = &self.system;
        DriveSchedule::local_detuning_ramp(s.omega, s.alpha * s.omega, self.beta_start, self.beta_stop, self.tau)
    }
}

/// Column names leading every anneal trajectory row.
pub const ANNEAL_AXES: [&str; 2] = ["beta", "delta_loc_over_v1"];

#[derive(Debug, Clone)]
pub struct AnnealRun {
    pub trajectory: Trajectory,
    pub v1: f64,
    pub cliffs: CliffEstimate,
    pub stats: EvolutionStats,
}

pub fn run_anneal(spec: &AnnealSpec) -> Result<AnnealRun> {
    spec.validate()?;
    let params = spec.system.params(spec.beta_start)?;
    let sched = spec.schedule()?;
    let terms = params.diagonal_terms()?;
    let v1 = params.v1();
    let obs = ObservableSet::standard(params.n_s, spec.windowing, spec.pattern)?;
    let times = uniform_grid(sched.start(), sched.end(), spec.samples)?;
    let mut opts = ScheduleOptions::for_ramp(spec.tau);
    opts.krylov = spec.krylov;
    if let Some(dt) = spec.dt {
        opts.dt = dt;
    }
    let psi = StateVector::z2_plus(params.n_s)?;
    let evo = evolve_schedule(&terms, &sched, &psi, (sched.start(), sched.end()), &opts, &times, |t, s| {
        let dl = sched.at(t)?.delta_loc;
        let mut row = vec![dl / params.delta_glob, dl / v1];
        row.extend(obs.evaluate(s)?);
        Ok(row)
    })?;

    let mut columns: Vec<String> = ANNEAL_AXES.iter().map(|s| s.to_string()).collect();
    columns.extend(obs.names());
    let mut trajectory = Trajectory::new(params.omega, columns);
    for (t, row) in times.iter().zip(evo.samples) {
        trajectory.push(*t, row)?;
    }
    let x = trajectory.column("delta_loc_over_v1").expect("axis column");
    let neel = trajectory.column("neel").expect("neel column");
    let cliffs = cliff_midpoints(&x, &neel, 21, 3)?;
    Ok(AnnealRun {
        trajectory,
        v1,
        cliffs,
        stats: evo.stats,
    })
}

/// Positions (in the units of `x`) of the two Néel cliffs of an anneal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CliffEstimate {
    pub first: Option<f64>,
    pub second: Option<f64>,
}

/// Steepest descents of the smoothed Néel curve, one on each side of the
/// point where it first turns negative (the N ≈ 0 plateau).
pub fn cliff_midpoints(x: &[f64], neel: &[f64], sg_window: usize, sg_order: usize) -> Result<CliffEstimate> {
    if x.len() != neel.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: neel.len(),
        });
    }
    let s = savitzky_golay(neel, sg_window, sg_order)?;
    let n = s.len();
    let slope: Vec<f64> = (1..n - 1).map(|i| s[i + 1] - s[i - 1]).collect();
    let steepest = |lo: usize, hi: usize| -> Option<f64> {
        (lo.max(1)..hi.min(n - 1))
            .filter(|&i| slope[i - 1] < 0.0)
            .min_by(|&a, &b| slope[a - 1].total_cmp(&slope[b - 1]))
            .map(|i| x[i])
    };
    let split = s.iter().position(|&v| v < 0.0);
    Ok(match split {
        Some(k) => CliffEstimate {
            first: steepest(1, k + 1),
            second: steepest(k + 1, n - 1),
        },
        None => CliffEstimate {
            first: steepest(1, n - 1),
            second: None,
        },
    })
}

/// Fit export record shared by every fit kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub kind: String,
    pub params: BTreeMap<String, f64>,
    pub window: (f64, f64),
    pub r2: f64,
    pub inputs_hash: String,
}

impl FitRecord {
    pub fn exponential(fit: &ExpFit, inputs_hash: &str) -> Self {
        FitRecord {
            kind: "exponential".into(),
            params: BTreeMap::from([("amplitude".into(), fit.amplitude), ("gamma".into(), fit.gamma)]),
            window: fit.window,
            r2: fit.r_squared,
            inputs_hash: inputs_hash.into(),
        }
    }

    pub fn scaling(fit: &RateScalingFit, inputs_hash: &str) -> Self {
        let (n0, n1) = fit.kind.param_names();
        FitRecord {
            kind: fit.kind.as_str().into(),
            params: BTreeMap::from([(n0.into(), fit.params.0), (n1.into(), fit.params.1)]),
            window: fit.window,
            r2: fit.r_squared,
            inputs_hash: inputs_hash.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_of_monotone_maps() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 25.0, 90.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn cliffs_of_a_double_step() {
        let n = 300;
        let x: Vec<f64> = (0..n).map(|i| 3.0 - 6.0 * i as f64 / (n - 1) as f64).collect();
        let neel: Vec<f64> = x
            .iter()
            .map(|&v| 0.5 * ((v - 1.7) * 8.0).tanh() + 0.5 * ((v + 1.5) * 8.0).tanh())
            .collect();
        let c = cliff_midpoints(&x, &neel, 21, 3).unwrap();
        assert!((c.first.unwrap() - 1.7).abs() < 0.03, "{c:?}");
        assert!((c.second.unwrap() + 1.5).abs() < 0.03, "{c:?}");
    }

    #[test]
    fn matrix_csv_marks_failures() {
        let csv = grid_matrix_csv(&[1.0, 2.0], &[1.2], &[vec![Some(0.5), None]]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].ends_with(",nan"));
    }

    #[test]
    fn decay_preconditions() {
        let s = SystemSpec::new(4, 1.2, 2.5);
        let d = DecaySettings::default();
        for beta in [0.0, 1.0, -0.2] {
            assert!(run_decay(&s.params(beta).unwrap(), &d).is_err());
        }
        assert!(run_rate_vs_confinement(&s, &[0.3, 0.4], CONFINEMENT_WINDOW, &d).is_err());
        assert!(run_rate_vs_gap(&s, &[1.2], 0.25, &d).is_err());
    }

    #[test]
    fn anneal_requires_descending_beta() {
        let mut a = AnnealSpec::new(SystemSpec::new(4, 1.2, 5.0), 1.0);
        a.beta_stop = 3.0;
        assert!(run_anneal(&a).is_err());
    }
}
