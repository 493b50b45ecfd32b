//! Resolution of a [`RunConfig`] into a concrete job, and its execution.

use fvdsim_core::drivers::{
    grid_matrix_csv, run_anneal, run_decay, run_q_vs_alpha, run_rate_diagram, run_rate_vs_confinement,
    run_rate_vs_gap, run_sweep, AnnealSpec, DecaySettings, FitRecord, RateScan, SweepSpec, SystemSpec,
};
use fvdsim_core::lattice::TWO_PI;
use fvdsim_core::protocol::{
    decay_protocol_schedule, layout_decay_protocol, step_quench_schedule, validate, HardwareConstraints,
};
use fvdsim_core::spectrum::{ground_phase_diagram, PhaseGridSpec};
use fvdsim_core::two_atom::{
    eigenvalues_vs_time, evolve_two_atom, gap_minima, initial_overlap, lz_crossing_times, TwoAtomRamp,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{cfg_err, RunConfig};
use crate::output::OutputDir;
use crate::CliError;

pub const TRAJECTORY: &str = "trajectory.csv";
pub const FITS: &str = "fits.json";
pub const GRID: &str = "grid.csv";
pub const BOUNDARY: &str = "boundary.json";
pub const LAYOUT: &str = "layout.json";
pub const REPORT: &str = "report.json";

/// Protocol defaults: 16 sites, 8.27 μm spacing, ancillas 10 μm out,
/// three atoms per short side, α = 2.5, β = 0.3.
const PROTOCOL_DEFAULTS: (usize, f64, f64, usize, f64, f64) = (16, 8.27, 10.0, 3, 2.5, 0.3);

const TWO_ATOM_SAMPLES: usize = 801;
const TWO_ATOM_DT: f64 = 1e-3;

/// A fully resolved run. Everything that can be rejected as bad input has
/// been rejected by the time one of these exists.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Job {
    Decay {
        system: SystemSpec,
        beta: f64,
        settings: DecaySettings,
    },
    Anneal {
        spec: AnnealSpec,
    },
    RateVsBeta {
        system: SystemSpec,
        betas: Vec<f64>,
        window: (f64, f64),
        settings: DecaySettings,
    },
    RateVsGap {
        system: SystemSpec,
        rb_over_a: Vec<f64>,
        alphas: Option<Vec<f64>>,
        beta: f64,
        settings: DecaySettings,
    },
    RateDiagram {
        system: SystemSpec,
        alphas: Vec<f64>,
        rb_over_a: Vec<f64>,
        beta: f64,
        settings: DecaySettings,
    },
    Sweep {
        spec: SweepSpec,
    },
    PhaseDiagram {
        spec: PhaseGridSpec,
    },
    TwoAtom {
        ramp: TwoAtomRamp,
        t_end: f64,
        dt: f64,
        samples: usize,
    },
    Protocol {
        n_s: usize,
        a: f64,
        b: f64,
        n_y: usize,
        omega: f64,
        delta_glob: f64,
        delta_loc: f64,
        upgraded_fov: bool,
        step_quench: bool,
    },
}

/// What a finished job reports back for `meta.json`.
#[derive(Debug, Clone)]
pub struct Summary {
    pub results: Value,
    pub partial: bool,
}

impl Job {
    pub fn resolve(command: &str, cfg: &RunConfig) -> Result<Job, CliError> {
        let ex = &cfg.experiment;
        Ok(match command {
            "decay" => Job::Decay {
                system: cfg.system_spec()?,
                beta: cfg.decay_beta()?,
                settings: cfg.decay_settings()?,
            },
            "anneal" => Job::Anneal {
                spec: cfg.anneal_spec()?,
            },
            "rate-vs-beta" => {
                let betas = cfg.axis(&ex.betas, "experiment.betas", None)?;
                if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
                    return Err(cfg_err("experiment.betas", format!("decay requires 0 < beta < 1, got {b}")));
                }
                Job::RateVsBeta {
                    system: cfg.system_spec()?,
                    betas,
                    window: cfg.confinement_window()?,
                    settings: cfg.decay_settings()?,
                }
            }
            "rate-vs-gap" => Job::RateVsGap {
                system: cfg.system_spec()?,
                rb_over_a: cfg.axis(&ex.rb_values, "experiment.rb_values", None)?,
                alphas: ex.alphas.clone(),
                beta: cfg.decay_beta()?,
                settings: cfg.decay_settings()?,
            },
            "rate-diagram" => {
                let (alphas, rb_over_a) = cfg.grid_axes()?;
                Job::RateDiagram {
                    system: cfg.system_spec()?,
                    alphas,
                    rb_over_a,
                    beta: cfg.diagram_beta()?,
                    settings: cfg.decay_settings()?,
                }
            }
            "sweep" => {
                let s = &cfg.system;
                Job::Sweep {
                    spec: SweepSpec {
                        system: cfg.system_spec()?,
                        alphas: cfg.axis(&ex.alphas, "experiment.alphas", s.alpha)?,
                        rb_over_a: cfg.axis(&ex.rb_values, "experiment.rb_values", s.rb_over_a)?,
                        betas: cfg.axis(&ex.betas, "experiment.betas", s.beta)?,
                        settings: cfg.decay_settings()?,
                    },
                }
            }
            "phase-diagram" => {
                let (alphas, rb_over_a) = cfg.grid_axes()?;
                // the grid supplies α and R_b/a; fill them so the chain validates
                let mut c = cfg.clone();
                c.system.alpha.get_or_insert(alphas[0]);
                c.system.rb_over_a.get_or_insert(rb_over_a[0]);
                let sys = c.system_spec()?;
                let spec = PhaseGridSpec {
                    n_s: sys.n_s,
                    omega: sys.omega,
                    c6: sys.c6,
                    geometry_mode: sys.geometry_mode,
                    alphas,
                    rb_over_a,
                };
                spec.validate().map_err(|e| cfg_err("experiment", e))?;
                Job::PhaseDiagram { spec }
            }
            "two-atom" => {
                let tau = crate::config::require(ex.tau, "experiment.tau")?;
                let ramp = TwoAtomRamp::new(1.0, 2.0, ex.beta_start.unwrap_or(2.0), tau)
                    .map_err(|e| cfg_err("experiment", e))?;
                let t_end = ex.t_end.unwrap_or_else(|| ramp.default_t_end());
                let dt = ex.dt.unwrap_or(TWO_ATOM_DT);
                if !(t_end > 0.0) || !(dt > 0.0) {
                    return Err(cfg_err("experiment", "t_end and dt must be > 0"));
                }
                let samples = ex.samples.unwrap_or(TWO_ATOM_SAMPLES);
                if samples < 2 {
                    return Err(cfg_err("experiment.samples", "need at least 2 samples"));
                }
                Job::TwoAtom { ramp, t_end, dt, samples }
            }
            "protocol" => {
                let (n_s, a, b, n_y, alpha, beta) = PROTOCOL_DEFAULTS;
                let omega = cfg.omega()?;
                let alpha = cfg.system.alpha.unwrap_or(alpha);
                let beta = cfg.system.beta.unwrap_or(beta);
                let job = Job::Protocol {
                    n_s: cfg.system.n_s.unwrap_or(n_s),
                    a: cfg.system.a.unwrap_or(a),
                    b: ex.b.unwrap_or(b),
                    n_y: ex.n_y.unwrap_or(n_y),
                    omega,
                    delta_glob: alpha * omega,
                    delta_loc: beta * alpha * omega,
                    upgraded_fov: ex.upgraded_fov.unwrap_or(false),
                    step_quench: ex.step_quench.unwrap_or(false),
                };
                if let Job::Protocol { n_s, a, b, n_y, .. } = job {
                    layout_decay_protocol(n_s, a, b, n_y).map_err(|e| cfg_err("protocol", e))?;
                }
                job
            }
            other => return Err(CliError::Config(format!("unknown command {other:?}"))),
        })
    }

    /// Files this job writes besides `meta.json`.
    pub fn outputs(&self) -> &'static [&'static str] {
        match self {
            Job::Decay { .. } => &[TRAJECTORY, FITS],
            Job::Anneal { .. } => &[TRAJECTORY],
            Job::RateVsBeta { .. } | Job::RateVsGap { .. } => &[GRID, FITS],
            Job::RateDiagram { .. } | Job::Sweep { .. } => &[GRID],
            Job::PhaseDiagram { .. } => &[GRID, BOUNDARY],
            Job::TwoAtom { .. } => &[TRAJECTORY, REPORT],
            Job::Protocol { .. } => &[LAYOUT, REPORT],
        }
    }

    pub fn execute(&self, hash: &str, threads: usize, out: &mut OutputDir) -> Result<Summary, CliError> {
        match self {
            Job::Decay { system, beta, settings } => {
                let run = run_decay(&system.params(*beta)?, settings)?;
                out.write(TRAJECTORY, &run.trajectory.to_csv())?;
                let fits: Vec<FitRecord> = run.fit.iter().map(|f| FitRecord::exponential(f, hash)).collect();
                out.write_json(FITS, &fits)?;
                if let Some(e) = &run.fit_error {
                    log::warn!("decay fit failed: {e}");
                }
                Ok(Summary {
                    partial: run.fit.is_none(),
                    results: json!({
                        "gamma": run.gamma(),
                        "fit": run.fit,
                        "fit_error": run.fit_error,
                        "regime": run.regime,
                        "regime_holds": run.regime.map(|r| r.holds()),
                        "stats": run.stats,
                    }),
                })
            }
            Job::Anneal { spec } => {
                let run = run_anneal(spec)?;
                out.write(TRAJECTORY, &run.trajectory.to_csv())?;
                Ok(Summary {
                    partial: false,
                    results: json!({ "v1": run.v1, "cliffs": run.cliffs, "stats": run.stats }),
                })
            }
            Job::RateVsBeta {
                system,
                betas,
                window,
                settings,
            } => {
                let scan = run_rate_vs_confinement(system, betas, *window, settings)?;
                write_scans(out, &[&scan], None, hash)?;
                Ok(scan_summary(&[&scan], None))
            }
            Job::RateVsGap {
                system,
                rb_over_a,
                alphas,
                beta,
                settings,
            } => match alphas {
                None => {
                    let scan = run_rate_vs_gap(system, rb_over_a, *beta, settings)?;
                    write_scans(out, &[&scan], None, hash)?;
                    Ok(scan_summary(&[&scan], None))
                }
                Some(alphas) => {
                    let q = run_q_vs_alpha(system, alphas, rb_over_a, *beta, settings)?;
                    let scans: Vec<&RateScan> = q.scans.iter().map(|(_, s)| s).collect();
                    write_scans(out, &scans, q.fit.as_ref().map(|f| FitRecord::scaling(f, hash)), hash)?;
                    let mut s = scan_summary(&scans, Some((&q.fit, &q.fit_error)));
                    s.partial |= q.fit.is_none();
                    Ok(s)
                }
            },
            Job::RateDiagram {
                system,
                alphas,
                rb_over_a,
                beta,
                settings,
            } => {
                let res = run_rate_diagram(system, alphas, rb_over_a, *beta, settings, threads)?;
                out.write(GRID, &grid_matrix_csv(alphas, rb_over_a, &res.gamma_matrix(0)))?;
                Ok(Summary {
                    partial: res.failures() > 0,
                    results: json!({ "points": res.records.len(), "failures": res.failures() }),
                })
            }
            Job::Sweep { spec } => {
                let res = run_sweep(spec, threads)?;
                out.write(GRID, &res.to_csv())?;
                Ok(Summary {
                    partial: res.failures() > 0,
                    results: json!({ "points": res.records.len(), "failures": res.failures() }),
                })
            }
            Job::PhaseDiagram { spec } => {
                let grid = ground_phase_diagram(spec)?;
                out.write(GRID, &grid_matrix_csv(&grid.alphas, &grid.rb_over_a, &grid.values))?;
                let points: Vec<Value> = grid
                    .boundary
                    .iter()
                    .map(|(a, r)| json!({ "alpha": a, "rb_over_a": r }))
                    .collect();
                out.write_json(BOUNDARY, &json!({ "n_s": spec.n_s, "points": points }))?;
                let failures = grid.values.iter().flatten().filter(|v| v.is_none()).count();
                Ok(Summary {
                    partial: failures > 0,
                    results: json!({
                        "resolution": [grid.alphas.len(), grid.rb_over_a.len()],
                        "failures": failures,
                        "boundary_points": points.len(),
                    }),
                })
            }
            Job::TwoAtom {
                ramp,
                t_end,
                dt,
                samples,
            } => {
                let grid: Vec<f64> = (0..*samples)
                    .map(|i| if i + 1 == *samples { *t_end } else { t_end * i as f64 / (*samples - 1) as f64 })
                    .collect();
                let traj = evolve_two_atom(ramp, *t_end, *dt, &grid)?;
                out.write(TRAJECTORY, &traj.to_csv())?;
                let curves = eigenvalues_vs_time(ramp, &grid);
                let report = json!({
                    "initial_overlap_phi3": initial_overlap(ramp),
                    "final_populations": traj.final_state.map(|c| c.norm_sqr()),
                    "crossing_times": lz_crossing_times(ramp.beta_start, ramp.tau)?,
                    "gap_minima_e3_e2": gap_minima(&grid, &curves, 1, 2),
                });
                out.write_json(REPORT, &report)?;
                Ok(Summary {
                    partial: false,
                    results: report,
                })
            }
            Job::Protocol {
                n_s,
                a,
                b,
                n_y,
                omega,
                delta_glob,
                delta_loc,
                upgraded_fov,
                step_quench,
            } => {
                let layout = layout_decay_protocol(*n_s, *a, *b, *n_y)?;
                let schedule = if *step_quench {
                    step_quench_schedule(*omega, *delta_glob, *delta_loc)?
                } else {
                    decay_protocol_schedule(*omega, *delta_glob, *delta_loc)?
                };
                let hc = if *upgraded_fov {
                    HardwareConstraints::upgraded()
                } else {
                    HardwareConstraints::default()
                };
                let report = validate(&layout, &schedule, &hc);
                out.write(LAYOUT, &(layout.to_json() + "\n"))?;
                out.write_json(
                    REPORT,
                    &json!({
                        "passed": report.passed(),
                        "constraints": hc,
                        "schedule": {
                            "breakpoints": schedule.breakpoints(),
                            "omega": schedule.omega_waveform(),
                            "delta_glob": schedule.delta_glob_waveform(),
                            "delta_loc": schedule.delta_loc_waveform(),
                        },
                        "checks": report.checks,
                    }),
                )?;
                let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
                if !failed.is_empty() {
                    log::warn!("protocol violates: {}", failed.join(", "));
                }
                Ok(Summary {
                    partial: false,
                    results: json!({
                        "passed": report.passed(),
                        "failed_checks": failed,
                        "footprint_um": layout.footprint,
                        "omega_over_2pi_mhz": omega / TWO_PI,
                    }),
                })
            }
        }
    }
}

fn write_scans(out: &mut OutputDir, scans: &[&RateScan], extra: Option<FitRecord>, hash: &str) -> Result<(), CliError> {
    let mut csv = String::new();
    let mut fits = Vec::new();
    for (i, s) in scans.iter().enumerate() {
        let body = s.to_csv();
        let skip = if i == 0 { 0 } else { body.find('\n').map_or(body.len(), |n| n + 1) };
        csv.push_str(&body[skip..]);
        fits.extend(s.fit.as_ref().map(|f| FitRecord::scaling(f, hash)));
    }
    fits.extend(extra);
    out.write(GRID, &csv)?;
    out.write_json(FITS, &fits)
}

fn scan_summary(scans: &[&RateScan], q: Option<(&Option<fvdsim_core::analysis::RateScalingFit>, &Option<String>)>) -> Summary {
    let failed_points = scans.iter().flat_map(|s| &s.points).filter(|p| p.fit.is_none()).count();
    let failed_fits = scans.iter().filter(|s| s.fit.is_none()).count();
    let per_scan: Vec<Value> = scans
        .iter()
        .map(|s| json!({ "fit": s.fit, "fit_error": s.fit_error }))
        .collect();
    let mut results = json!({
        "scans": per_scan,
        "failed_points": failed_points,
    });
    if let Some((fit, err)) = q {
        results["q_vs_alpha"] = json!({ "fit": fit, "fit_error": err });
    }
    Summary {
        partial: failed_points > 0 || failed_fits > 0,
        results,
    }
}
