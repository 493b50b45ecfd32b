use fvdsim_core::analysis::{fit_exponential, hopping_energy_estimate, truncate_positive};
use fvdsim_core::drivers::{
    run_anneal, run_decay, run_decay_from, run_rate_diagram, run_sweep, AnnealSpec, DecaySettings, FitRecord,
    SweepSpec, SystemSpec, SMOOTHED_COLUMN,
};
use fvdsim_core::evolution::StateVector;
use fvdsim_core::lattice::{GeometryMode, PhysicalParams, DEFAULT_C6, TWO_PI};
use fvdsim_core::spectrum::gap_e20;

#[test]
fn no_rabi_drive_means_no_dynamics() {
    let p = PhysicalParams::new(6, 7.0, 0.0, 2.0, 0.5, DEFAULT_C6, GeometryMode::Chord).unwrap();
    let run = run_decay(&p, &DecaySettings::default()).unwrap();
    for n in run.trajectory.column("neel").unwrap() {
        assert!((n - 1.0).abs() < 1e-12);
    }
    assert!(run.fit.is_none());
    assert!(run.fit_error.is_some());
}

#[test]
fn sublattice_mirror() {
    let settings = DecaySettings::default();
    for (mode, tol) in [(GeometryMode::Arc, 1e-10), (GeometryMode::Chord, 1e-6)] {
        let s = SystemSpec {
            geometry_mode: mode,
            ..SystemSpec::new(8, 1.2, 2.5)
        };
        let fwd = run_decay(&s.params(0.3).unwrap(), &settings).unwrap();
        let back = run_decay_from(&s.params(-0.3).unwrap(), &StateVector::z2_minus(8).unwrap(), &settings).unwrap();
        let (a, b) = (fwd.trajectory.column("neel").unwrap(), back.trajectory.column("neel").unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x + y).abs() < tol, "{mode:?}: {x} vs {y}");
        }
    }
}

#[test]
fn decay_trajectory_layout() {
    let run = run_decay(&SystemSpec::new(8, 1.2, 2.5).params(0.3).unwrap(), &DecaySettings::default()).unwrap();
    let csv = run.trajectory.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_us,omega_t_over_2pi,neel,sigma_1,sigma_2,sigma_ns,fidelity_z2p,fidelity_z2m,fidelity_zero,neel_sg"
    );
    assert_eq!(lines.count(), 401);
    assert!(run.trajectory.column(SMOOTHED_COLUMN).is_some());
    let fit = run.fit.expect("fit");
    let rec = serde_json::to_value(FitRecord::exponential(&fit, "abc")).unwrap();
    assert_eq!(rec["kind"], "exponential");
    assert_eq!(rec["inputs_hash"], "abc");
    assert!(rec["params"]["gamma"].as_f64().unwrap() > 0.0);
}

#[test]
fn windowed_and_fixed_fits_agree() {
    let run = run_decay(&SystemSpec::new(16, 1.2, 2.5).params(0.3).unwrap(), &DecaySettings::default()).unwrap();
    let t = &run.trajectory.times;
    let n = run.trajectory.column("neel").unwrap();
    let fixed = fit_exponential(t, &n, truncate_positive(t, &n, (0.15, 0.35))).unwrap();
    let g = run.gamma().unwrap();
    assert!((fixed.gamma - g).abs() < 0.15 * g, "{} vs {g}", fixed.gamma);
}

#[test]
fn hopping_scale_below_gap() {
    let p = SystemSpec::new(10, 1.2, 2.5).params(0.25).unwrap();
    let hop = hopping_energy_estimate(p.omega, p.delta_glob, p.v1()).unwrap();
    assert!(hop < gap_e20(&p).unwrap());
}

#[test]
fn diagram_point_matches_standalone_run() {
    let system = SystemSpec::new(8, 1.2, 2.5);
    let settings = DecaySettings::default();
    let grid = run_rate_diagram(&system, &[2.0, 2.5], &[1.15, 1.2], 0.25, &settings, 2).unwrap();
    let rec = grid
        .records
        .iter()
        .find(|r| r.alpha == 2.5 && r.rb_over_a == 1.2)
        .unwrap();
    let solo = run_decay(&system.params(0.25).unwrap(), &settings).unwrap();
    assert_eq!(rec.fit.unwrap().gamma.to_bits(), solo.gamma().unwrap().to_bits());
    assert_eq!(grid.gamma_matrix(0)[1][1], solo.gamma());
}

#[test]
fn sweep_isolates_failures() {
    let spec = SweepSpec {
        system: SystemSpec::new(6, 1.2, 2.5),
        alphas: vec![2.0, -1.0, 3.0],
        rb_over_a: vec![1.15, 1.2, 1.25],
        betas: vec![0.25],
        settings: DecaySettings::default(),
    };
    let a = run_sweep(&spec, 1).unwrap();
    assert_eq!(a.records.len(), 9);
    for r in &a.records {
        assert_eq!(r.alpha < 0.0, r.error.is_some() && r.fit.is_none(), "{r:?}");
    }
    let csv = a.to_csv();
    assert_eq!(csv.lines().count(), 10);
    assert_eq!(csv, run_sweep(&spec, 4).unwrap().to_csv());
    let empty = SweepSpec { alphas: vec![], ..spec };
    assert!(run_sweep(&empty, 1).is_err());
}

#[test]
fn anneal_cliffs_insensitive_to_ramp_time() {
    let cliffs = |tau: f64| run_anneal(&AnnealSpec::new(SystemSpec::new(12, 1.2, 5.0), tau)).unwrap().cliffs;
    let (a, b) = (cliffs(8.0), cliffs(16.0));
    assert!((a.first.unwrap() - b.first.unwrap()).abs() < 0.1, "{a:?} {b:?}");
    assert!((a.second.unwrap() - b.second.unwrap()).abs() < 0.1, "{a:?} {b:?}");
}

#[test]
fn anneal_columns_follow_the_ramp() {
    let mut spec = AnnealSpec::new(SystemSpec::new(6, 1.2, 5.0), 1.0);
    spec.samples = 50;
    let run = run_anneal(&spec).unwrap();
    let beta = run.trajectory.column("beta").unwrap();
    let x = run.trajectory.column("delta_loc_over_v1").unwrap();
    assert!((beta[0] - 2.0).abs() < 1e-12 && (beta[49] + 1.5).abs() < 1e-12);
    let dg = 5.0 * TWO_PI;
    assert!((x[0] * run.v1 - 2.0 * dg).abs() < 1e-9);
}
