//! Experimental layout (main ring plus ancilla chains) and hardware checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{DriveSchedule, TWO_PI};

/// Device limits. Lengths in μm, times in μs, frequencies in rad/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardwareConstraints {
    pub t_max: f64,
    pub a_min: f64,
    pub a_min_y: f64,
    pub field_of_view: (f64, f64),
    pub omega_range: (f64, f64),
    pub omega_slew_max: f64,
    pub delta_glob_range: (f64, f64),
    pub delta_glob_slew_max: f64,
    /// Largest staggered detuning allowed on the ancilla atoms.
    pub ancilla_detuning_max: f64,
}

impl Default for HardwareConstraints {
    fn default() -> Self {
        HardwareConstraints {
            t_max: 4.0,
            a_min: 4.0,
            a_min_y: 4.0,
            field_of_view: (75.0, 76.0),
            omega_range: (0.0, 15.8),
            omega_slew_max: 250.0,
            delta_glob_range: (-125.0, 125.0),
            delta_glob_slew_max: 2500.0,
            ancilla_detuning_max: TWO_PI * 10.0,
        }
    }
}

impl HardwareConstraints {
    /// Same limits with the taller field of view.
    pub fn upgraded() -> Self {
        HardwareConstraints {
            field_of_view: (75.0, 120.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [self.omega_range, self.delta_glob_range];
        if ranges.iter().any(|r| !(r.0 < r.1)) {
            return Err(Error::invalid("hardware ranges must be nonempty"));
        }
        let limits = [
            self.t_max,
            self.a_min,
            self.a_min_y,
            self.field_of_view.0,
            self.field_of_view.1,
            self.omega_slew_max,
            self.delta_glob_slew_max,
            self.ancilla_detuning_max,
        ];
        if limits.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("hardware limits must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Main,
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Site {
    pub x: f64,
    pub y: f64,
    pub role: Role,
}

/// Racetrack ring with 45° corner bonds, surrounded by four odd-length
/// ancilla chains at distance `b`. Coordinates start at (0, 0) in the lower
/// left corner of the footprint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolLayout {
    /// Ring order, clockwise from the left end of the top row.
    pub main: Vec<(f64, f64)>,
    pub ancilla: Vec<(f64, f64)>,
    pub a: f64,
    pub b: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub footprint: (f64, f64),
}

/// Builds the decay-protocol layout for `n_s = 2 n_x + 2 n_y` main atoms.
///
/// `n_x` and `n_y` must both be odd and at least 3, so that every ancilla
/// chain has an odd number of sites and the ring grows in steps of 4.
pub fn layout_decay_protocol(n_s: usize, a: f64, b: f64, n_y: usize) -> Result<ProtocolLayout> {
    if !(a > 0.0) || !a.is_finite() || !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid("spacings a and b must be positive"));
    }
    if n_s < 2 * n_y || (n_s - 2 * n_y) % 2 != 0 {
        return Err(Error::invalid(format!(
            "n_s = {n_s} is not 2 n_x + 2 n_y for n_y = {n_y}"
        )));
    }
    let n_x = (n_s - 2 * n_y) / 2;
    for (name, n) in [("n_x", n_x), ("n_y", n_y)] {
        if n < 3 || n % 2 == 0 {
            return Err(Error::invalid(format!("{name} = {n} must be odd and >= 3")));
        }
    }

    let c = a / std::f64::consts::SQRT_2;
    let width = (n_x - 1) as f64 * a;
    let height = (n_y - 1) as f64 * a;
    let x_left = b;
    let x_right = b + 2.0 * c + width;
    let y_bottom = b;
    let y_top = b + 2.0 * c + height;

    let row = |i: usize| b + c + i as f64 * a;
    let col = |j: usize| b + c + j as f64 * a;

    let mut main = Vec::with_capacity(n_s);
    main.extend((0..n_x).map(|i| (row(i), y_top)));
    main.extend((0..n_y).rev().map(|j| (x_right, col(j))));
    main.extend((0..n_x).rev().map(|i| (row(i), y_bottom)));
    main.extend((0..n_y).map(|j| (x_left, col(j))));

    let mut ancilla = Vec::with_capacity(n_s);
    ancilla.extend((0..n_x).map(|i| (row(i), y_top + b)));
    ancilla.extend((0..n_y).rev().map(|j| (x_right + b, col(j))));
    ancilla.extend((0..n_x).rev().map(|i| (row(i), 0.0)));
    ancilla.extend((0..n_y).map(|j| (0.0, col(j))));

    Ok(ProtocolLayout {
        main,
        ancilla,
        a,
        b,
        n_x,
        n_y,
        footprint: (x_right + b, y_top + b),
    })
}

impl ProtocolLayout {
    pub fn n_s(&self) -> usize {
        self.main.len()
    }

    pub fn sites(&self) -> Vec<Site> {
        let tag = |role| move |&(x, y): &(f64, f64)| Site { x, y, role };
        self.main
            .iter()
            .map(tag(Role::Main))
            .chain(self.ancilla.iter().map(tag(Role::Ancilla)))
            .collect()
    }

    /// Bounding box of every atom.
    pub fn bounding_box(&self) -> (f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in self.main.iter().chain(&self.ancilla) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        (x1 - x0, y1 - y0)
    }

    pub fn min_pair_distance(&self) -> f64 {
        let all: Vec<_> = self.main.iter().chain(&self.ancilla).collect();
        let mut best = f64::INFINITY;
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                best = best.min(dist(*all[i], *all[j]));
            }
        }
        best
    }

    pub fn min_main_ancilla_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for &p in &self.main {
            for &q in &self.ancilla {
                best = best.min(dist(p, q));
            }
        }
        best
    }

    /// Smallest gap between distinct row heights.
    pub fn min_row_spacing(&self) -> f64 {
        let mut ys: Vec<f64> = self.main.iter().chain(&self.ancilla).map(|p| p.1).collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        ys.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Layout export: footprint plus every atom with its role.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Export {
            n_s: usize,
            n_x: usize,
            n_y: usize,
            a: f64,
            b: f64,
            footprint: (f64, f64),
            atoms: Vec<Site>,
        }
        let e = Export {
            n_s: self.n_s(),
            n_x: self.n_x,
            n_y: self.n_y,
            a: self.a,
            b: self.b,
            footprint: self.footprint,
            atoms: self.sites(),
        };
        serde_json::to_string_pretty(&e).expect("layout serialises")
    }
}

fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub limit: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    fn new(name: &'static str, measured: f64, bound: Bound, limit: f64) -> Self {
        let passed = match bound {
            Bound::AtMost => measured <= limit,
            Bound::AtLeast => measured >= limit,
            Bound::Above => measured > limit,
        };
        Check {
            name,
            measured,
            limit,
            bound,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Largest |slope| between consecutive breakpoints.
pub fn max_slew(breakpoints: &[f64], values: &[f64]) -> f64 {
    breakpoints
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
        .fold(0.0, f64::max)
}

fn extent(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Geometry checks alone.
pub fn validate_layout(layout: &ProtocolLayout, hc: &HardwareConstraints) -> Vec<Check> {
    let (dx, dy) = layout.bounding_box();
    vec![
        Check::new("min_spacing", layout.min_pair_distance(), Bound::AtLeast, hc.a_min),
        Check::new("min_row_spacing", layout.min_row_spacing(), Bound::AtLeast, hc.a_min_y),
        Check::new("fov_x", dx, Bound::AtMost, hc.field_of_view.0),
        Check::new("fov_y", dy, Bound::AtMost, hc.field_of_view.1),
        // ancillas must couple more weakly than nearest neighbours on the ring
        Check::new("ancilla_separation", layout.min_main_ancilla_distance(), Bound::Above, layout.a),
    ]
}

/// Waveform checks alone. Slew rates are exact slopes between breakpoints.
pub fn validate_schedule(schedule: &DriveSchedule, hc: &HardwareConstraints) -> Vec<Check> {
    let bp = schedule.breakpoints();
    let (o_lo, o_hi) = extent(schedule.omega_waveform());
    let (g_lo, g_hi) = extent(schedule.delta_glob_waveform());
    let mut checks = vec![
        Check::new("duration", schedule.duration(), Bound::AtMost, hc.t_max),
        Check::new("omega_min", o_lo, Bound::AtLeast, hc.omega_range.0),
        Check::new("omega_max", o_hi, Bound::AtMost, hc.omega_range.1),
        Check::new(
            "omega_slew",
            max_slew(bp, schedule.omega_waveform()),
            Bound::AtMost,
            hc.omega_slew_max,
        ),
        Check::new("delta_glob_min", g_lo, Bound::AtLeast, hc.delta_glob_range.0),
        Check::new("delta_glob_max", g_hi, Bound::AtMost, hc.delta_glob_range.1),
        Check::new(
            "delta_glob_slew",
            max_slew(bp, schedule.delta_glob_waveform()),
            Bound::AtMost,
            hc.delta_glob_slew_max,
        ),
    ];
    if let Some(d) = schedule.ancilla_detuning {
        checks.push(Check::new("ancilla_detuning", d.abs(), Bound::AtMost, hc.ancilla_detuning_max));
    }
    checks
}

pub fn validate(
    layout: &ProtocolLayout,
    schedule: &DriveSchedule,
    hc: &HardwareConstraints,
) -> ValidationReport {
    let mut checks = validate_layout(layout, hc);
    checks.extend(validate_schedule(schedule, hc));
    ValidationReport { checks }
}

/// Preparation ramp of Δ_glob from `-delta_glob` to `delta_glob` over 2 μs,
/// a quench of Δ_loc with the Rabi drive dipping to zero across it, then
/// 2 μs of evolution.
pub fn decay_protocol_schedule(omega: f64, delta_glob: f64, delta_loc: f64) -> Result<DriveSchedule> {
    DriveSchedule::new(
        vec![0.0, 0.1, 1.9, 1.95, 2.0, 4.0],
        vec![0.0, omega, omega, 0.0, omega, omega],
        vec![-delta_glob, -delta_glob, delta_glob, delta_glob, delta_glob, delta_glob],
        vec![0.0, 0.0, 0.0, 0.0, delta_loc, delta_loc],
    )
}

/// Length of the "instantaneous" jump in [`step_quench_schedule`]; breakpoints
/// must be strictly increasing.
pub const STEP_DURATION: f64 = 1e-3;

/// Same endpoints as [`decay_protocol_schedule`] but every waveform jumps
/// straight to its post-quench value after 2 μs at the preparation point.
pub fn step_quench_schedule(omega: f64, delta_glob: f64, delta_loc: f64) -> Result<DriveSchedule> {
    DriveSchedule::new(
        vec![0.0, 2.0, 2.0 + STEP_DURATION, 4.0],
        vec![omega; 4],
        vec![-delta_glob, -delta_glob, delta_glob, delta_glob],
        vec![0.0, 0.0, delta_loc, delta_loc],
    )
}
