//! Values frozen from an independent dense/scipy implementation of the same
//! model (numpy `eigvalsh`, `scipy.linalg.expm`, `scipy.integrate`).

use fvdsim_core::analysis::{ising_dispersion_integral, ising_reference_exponent};
use fvdsim_core::drivers::{run_anneal, run_decay, AnnealSpec, DecaySettings, SystemSpec};
use fvdsim_core::lattice::{GeometryMode, PhysicalParams, DEFAULT_C6, TWO_PI};
use fvdsim_core::spectrum::{gap_e20, lowest_eigenpairs};
use fvdsim_core::two_atom::{evolve_two_atom, TwoAtomRamp};

fn params(n_s: usize, rba: f64, alpha: f64, beta: f64, mode: GeometryMode) -> PhysicalParams {
    PhysicalParams::from_ratios(n_s, rba, alpha, beta, TWO_PI, DEFAULT_C6, mode).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn lowest_three_levels_eight_sites() {
    let cases = [
        (GeometryMode::Chord, [-77.89202158407375, -77.81474811056161, -69.89144029682]),
        (GeometryMode::Arc, [-78.66978033157929, -78.59775517174728, -70.46558100723693]),
    ];
    for (mode, expect) in cases {
        let h = params(8, 1.2, 3.0, 0.0, mode).hamiltonian().unwrap();
        let r = lowest_eigenpairs(&h, 3).unwrap();
        for (got, want) in r.values.iter().zip(expect) {
            assert!(close(*got, want, 1e-11), "{mode:?}: {got} vs {want}");
        }
    }
}

#[test]
fn zero_confinement_gap_ten_sites() {
    let g = gap_e20(&params(10, 1.2, 2.5, 0.3, GeometryMode::Chord)).unwrap() / TWO_PI;
    assert!(close(g, 1.0728170310862124, 1e-10), "{g}");
}

#[test]
fn neel_decay_ten_sites() {
    let settings = DecaySettings::default();
    let run = run_decay(&params(10, 1.2, 2.5, 0.3, GeometryMode::Chord), &settings).unwrap();
    let t = &run.trajectory;
    let neel = t.column("neel").unwrap();
    // default grid: 401 samples on [0, 1] μs
    for (idx, want) in [(100, 0.50510393886248), (200, 0.2365871579428435), (400, -0.004671820056265263)] {
        assert!((t.times[idx] - idx as f64 / 400.0).abs() < 1e-15);
        assert!((neel[idx] - want).abs() < 1e-9, "t={}: {} vs {want}", t.times[idx], neel[idx]);
    }
}

#[test]
fn short_anneal_eight_sites() {
    let mut spec = AnnealSpec::new(SystemSpec::new(8, 1.2, 5.0), 1.0);
    // sample spacing equal to the step bound, so the discretisation matches
    // the reference's uniform 0.0025 μs midpoint steps
    spec.samples = 1401;
    let run = run_anneal(&spec).unwrap();
    let t = &run.trajectory;
    let last = t.len() - 1;
    let get = |c: &str| t.column(c).unwrap()[last];
    assert!((get("neel") + 0.515878089239853).abs() < 1e-8, "{}", get("neel"));
    assert!((get("fidelity_z2m") - 0.04708375846722783).abs() < 1e-8);
    assert!((get("fidelity_zero") - 0.006936134642343837).abs() < 1e-8);
}

#[test]
fn ising_quadrature() {
    let f = ising_dispersion_integral(0.5).unwrap();
    assert!(close(f, 0.5470650084752701, 1e-12), "{f}");
    let e = ising_reference_exponent(-0.5, 0.1).unwrap();
    assert!(close(e, 5.670956020843733, 1e-12), "{e}");
}

#[test]
fn two_atom_ramp_populations() {
    let ramp = TwoAtomRamp::reference(8.0).unwrap();
    let traj = evolve_two_atom(&ramp, 32.0, 1e-3, &[]).unwrap();
    let want = [0.0217314606494618, 0.9249302093311121, 0.0533383300183936];
    for (c, w) in traj.final_state.iter().zip(want) {
        assert!((c.norm_sqr() - w).abs() < 1e-5, "{} vs {w}", c.norm_sqr());
    }
}
