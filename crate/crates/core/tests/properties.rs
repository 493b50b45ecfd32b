use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fvdsim_core::analysis::{
    fit_exponential, fit_rate_scaling, ising_reference_exponent, savitzky_golay, ScalingKind,
};
use fvdsim_core::evolution::{
    dense_expm_oracle, evolve_constant, evolve_constant_sampled, KrylovOptions, StateVector,
};
use fvdsim_core::lattice::{DriveSchedule, GeometryMode, PhysicalParams, DEFAULT_C6, TWO_PI};
use fvdsim_core::observables::{bubble_density, fidelity, neel_op, SigmaPattern, Windowing};
use fvdsim_core::protocol::{decay_protocol_schedule, layout_decay_protocol, validate, HardwareConstraints};
use fvdsim_core::two_atom::{eigensystem, restricted_hamiltonian, symmetric_eigenvalues, TwoAtomRamp};

fn chain(n_s: usize, rba: f64, alpha: f64, beta: f64, arc: bool) -> PhysicalParams {
    let mode = if arc { GeometryMode::Arc } else { GeometryMode::Chord };
    PhysicalParams::from_ratios(n_s, rba, alpha, beta, TWO_PI, DEFAULT_C6, mode).unwrap()
}

fn even_sites(max: usize) -> impl Strategy<Value = usize> {
    (1..=max / 2).prop_map(|k| 2 * k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn krylov_matches_dense_exponential(
        n_s in even_sites(8), rba in 1.0..2.0f64, alpha in -1.0..5.0f64, beta in -1.0..1.0f64,
        t in 0.01..3.0f64, arc: bool, seed: u64,
    ) {
        let h = chain(n_s, rba, alpha, beta, arc).hamiltonian().unwrap();
        let psi = StateVector::random(n_s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let a = evolve_constant(&h, &psi, t, &KrylovOptions::default()).unwrap();
        let b = dense_expm_oracle(&h, &psi, t).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn norm_and_energy_are_conserved(
        n_s in even_sites(10), rba in 1.0..1.6f64, alpha in 0.0..4.0f64, beta in -0.5..0.5f64, seed: u64,
    ) {
        let h = chain(n_s, rba, alpha, beta, false).hamiltonian().unwrap();
        let psi = StateVector::random(n_s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let times = [0.0, 0.25, 0.5, 1.0];
        let evo = evolve_constant_sampled(&h, &psi, &times, &KrylovOptions::default(), |_, s| {
            Ok((s.norm(), h.expectation(s.amplitudes()).re))
        }).unwrap();
        let e0 = evo.samples[0].1;
        for (norm, e) in &evo.samples {
            prop_assert!((norm - 1.0).abs() < 1e-10);
            prop_assert!((e - e0).abs() < 1e-7 * h.diag_norm().max(1.0));
        }
    }

    #[test]
    fn hamiltonian_is_real_symmetric(
        n_s in even_sites(8), rba in 1.0..2.0f64, alpha in -2.0..5.0f64, beta in -1.0..1.0f64, arc: bool,
    ) {
        let h = chain(n_s, rba, alpha, beta, arc).hamiltonian().unwrap();
        let m = h.dense_matrix().unwrap();
        prop_assert_eq!(&m, &m.transpose());
    }

    #[test]
    fn observables_stay_in_range(n_s in even_sites(10), k in 1usize..4, seed: u64) {
        let psi = StateVector::random(n_s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let n = neel_op(&psi);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&n));
        if k < n_s - 1 {
            for w in [Windowing::Wrap, Windowing::Open] {
                let s = bubble_density(&psi, k, w, SigmaPattern::Literal).unwrap();
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
            }
        }
        let f: f64 = [StateVector::z2_plus(n_s), StateVector::z2_minus(n_s), StateVector::all_ground(n_s)]
            .into_iter()
            .map(|phi| fidelity(&psi, &phi.unwrap()).unwrap())
            .sum();
        prop_assert!(f <= 1.0 + 1e-12);
    }

    #[test]
    fn savitzky_golay_keeps_cubics(c in prop::array::uniform4(-2.0..2.0f64), len in 21usize..80) {
        let y: Vec<f64> = (0..len)
            .map(|i| {
                let x = i as f64 / len as f64;
                c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x
            })
            .collect();
        let s = savitzky_golay(&y, 21, 3).unwrap();
        for (a, b) in s.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exponential_fit_recovers_parameters(amp in 0.1..3.0f64, gamma in -2.0..8.0f64) {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|t| amp * (-gamma * t).exp()).collect();
        let f = fit_exponential(&t, &y, (0.0, 0.49)).unwrap();
        prop_assert!((f.amplitude - amp).abs() < 1e-10 * amp);
        prop_assert!((f.gamma - gamma).abs() < 1e-9);
    }

    #[test]
    fn confinement_fit_is_unit_covariant(b in 0.1..10.0f64, p in 0.1..3.0f64, scale in 0.01..100.0f64) {
        let pts: Vec<(f64, f64)> = [2.5, 3.0, 10.0 / 3.0, 4.0].iter().map(|&x| (x, b * (-p * x).exp())).collect();
        let fit = fit_rate_scaling(&pts, ScalingKind::Confinement).unwrap();
        prop_assert!((fit.params.0 - b).abs() < 1e-10 * b);
        prop_assert!((fit.params.1 - p).abs() < 1e-10);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, y * scale)).collect();
        let g = fit_rate_scaling(&scaled, ScalingKind::Confinement).unwrap();
        prop_assert!((g.params.0 - scale * fit.params.0).abs() < 1e-9 * scale * b);
        prop_assert!((g.params.1 - fit.params.1).abs() < 1e-9);
    }

    #[test]
    fn ising_exponent_scales_inversely_with_hz(hx in 0.01..0.99f64, hz in 0.01..1.0f64, k in 0.1..10.0f64) {
        let a = ising_reference_exponent(hx, hz).unwrap();
        let b = ising_reference_exponent(-hx, k * hz).unwrap();
        prop_assert!((a - k * b).abs() <= 1e-12 * a);
    }

    #[test]
    fn footprint_formulas_are_exact(a in 4.0..9.0f64, b in 4.0..12.0f64, extra in 0usize..4) {
        let n_y = 3 + 2 * extra;
        let l = layout_decay_protocol(10 + 2 * n_y, a, b, n_y).unwrap();
        let sq2 = std::f64::consts::SQRT_2;
        prop_assert!((l.footprint.0 - ((4.0 + sq2) * a + 2.0 * b)).abs() < 1e-12);
        prop_assert!((l.footprint.1 - ((n_y as f64 - 1.0 + sq2) * a + 2.0 * b)).abs() < 1e-12);
    }

    #[test]
    fn validation_is_a_pure_predicate(a in 3.0..9.0f64, b in 3.0..12.0f64, omega in 0.0..20.0f64, dg in 0.0..130.0f64) {
        let l = layout_decay_protocol(16, a, b, 3).unwrap();
        let s = decay_protocol_schedule(omega, dg, 0.3 * dg).unwrap();
        let hc = HardwareConstraints::default();
        let r1 = validate(&l, &s, &hc);
        prop_assert_eq!(&r1, &validate(&l, &s, &hc));
        for c in &r1.checks {
            let again = match c.bound {
                fvdsim_core::protocol::Bound::AtMost => c.measured <= c.limit,
                fvdsim_core::protocol::Bound::AtLeast => c.measured >= c.limit,
                fvdsim_core::protocol::Bound::Above => c.measured > c.limit,
            };
            prop_assert_eq!(again, c.passed);
        }
    }

    #[test]
    fn restricted_eigenvalues_agree(omega in 0.0..3.0f64, dg in -4.0..4.0f64, dl in -6.0..6.0f64) {
        let h = restricted_hamiltonian(omega, dg, dl);
        let closed = symmetric_eigenvalues(&h);
        let (num, _) = eigensystem(&h);
        for (a, b) in closed.iter().zip(num) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
        // Δ_loc → −Δ_loc swaps |01⟩ and |10⟩
        let mirror = symmetric_eigenvalues(&restricted_hamiltonian(omega, dg, -dl));
        for (a, b) in closed.iter().zip(mirror) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn two_atom_spectrum_symmetric_about_zero_detuning(tau in 0.5..20.0f64, s in 0.0..2.0f64) {
        let r = TwoAtomRamp::reference(tau).unwrap();
        let t0 = r.beta_start * tau;
        let a = symmetric_eigenvalues(&r.hamiltonian(t0 - s * tau));
        let b = symmetric_eigenvalues(&r.hamiltonian(t0 + s * tau));
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn schedule_interpolation_is_bounded(
        v in prop::collection::vec(-10.0..10.0f64, 2..6), frac in 0.0..1.0f64,
    ) {
        let bp: Vec<f64> = (0..v.len()).map(|i| i as f64 * 0.5).collect();
        let s = DriveSchedule::new(bp.clone(), v.clone(), v.clone(), v.clone()).unwrap();
        let t = frac * bp[bp.len() - 1];
        let x = s.at(t).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(x.omega >= lo - 1e-12 && x.omega <= hi + 1e-12);
        prop_assert_eq!(x.omega, x.delta_glob);
    }
}
