//! Acceptance criteria A1–A11. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fvdsim_core::analysis::{ising_dispersion_integral, ising_reference_exponent};
use fvdsim_core::drivers::{
    run_anneal, run_decay, run_q_vs_alpha, run_rate_vs_confinement, run_sweep, AnnealSpec, DecaySettings,
    SweepSpec, SystemSpec, CONFINEMENT_WINDOW,
};
use fvdsim_core::evolution::{
    dense_expm_oracle, evolve_constant, evolve_constant_sampled, uniform_grid, DenseSpectrum, KrylovOptions,
    StateVector,
};
use fvdsim_core::lattice::{GeometryMode, PhysicalParams, DEFAULT_C6, TWO_PI};
use fvdsim_core::protocol::{
    decay_protocol_schedule, layout_decay_protocol, step_quench_schedule, validate, validate_layout,
    HardwareConstraints,
};
use fvdsim_core::spectrum::{ground_phase_diagram, lowest_eigenpairs, PhaseGridSpec};
use fvdsim_core::drivers::grid_matrix_csv;
use fvdsim_core::two_atom::{eigenvalues_vs_time, evolve_two_atom, gap_minima, initial_overlap, TwoAtomRamp};

const OMEGA: f64 = TWO_PI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn params(n_s: usize, rba: f64, alpha: f64, beta: f64) -> PhysicalParams {
    PhysicalParams::from_ratios(n_s, rba, alpha, beta, OMEGA, DEFAULT_C6, GeometryMode::Chord).unwrap()
}

fn a1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let n_s = [2, 4, 6, 8][i % 4];
        let mode = if rng.gen_bool(0.5) { GeometryMode::Chord } else { GeometryMode::Arc };
        let p = PhysicalParams::from_ratios(
            n_s,
            rng.gen_range(1.0..2.0),
            rng.gen_range(0.0..5.0),
            rng.gen_range(-1.0..1.0),
            OMEGA * rng.gen_range(0.5..2.0),
            DEFAULT_C6,
            mode,
        )
        .unwrap();
        let h = p.hamiltonian().unwrap();
        let psi = StateVector::random(n_s, &mut rng).unwrap();
        let t = rng.gen_range(0.05..2.0);
        let a = evolve_constant(&h, &psi, t, &KrylovOptions::default()).unwrap();
        let b = dense_expm_oracle(&h, &psi, t).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            worst = worst.max((x - y).norm());
        }
    }
    let el = start.elapsed();
    outcome(
        worst < 1e-8 && el < Duration::from_secs(60),
        format!("max amplitude error {worst:.2e} (< 1e-8), {:.1}s (< 60s)", el.as_secs_f64()),
    )
}

fn a2_unitarity() -> Outcome {
    let p = params(16, 1.2, 2.5, 0.3);
    let h = p.hamiltonian().unwrap();
    let psi = StateVector::z2_plus(16).unwrap();
    let times = uniform_grid(0.0, 1.0, 21).unwrap();
    let evo = evolve_constant_sampled(&h, &psi, &times, &KrylovOptions::default(), |_, s| {
        Ok((s.norm(), h.expectation(s.amplitudes()).re))
    })
    .unwrap();
    let e0 = evo.samples[0].1;
    let norm_drift = evo
        .samples
        .iter()
        .map(|s| (s.0 - 1.0).abs())
        .fold(evo.stats.max_norm_drift, f64::max);
    let e_drift = evo.samples.iter().map(|s| (s.1 - e0).abs()).fold(0.0, f64::max);
    let bound = 1e-6 * h.diag_norm();
    outcome(
        norm_drift < 1e-8 && e_drift < bound,
        format!("norm drift {norm_drift:.2e} (< 1e-8), <H> drift {e_drift:.2e} (< {bound:.2e})"),
    )
}

fn a3_eigensolver() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n_s, rba, alpha, beta, mode) in [
        (6, 1.2, 3.0, 0.0, GeometryMode::Chord),
        (8, 1.2, 3.0, 0.0, GeometryMode::Chord),
        (8, 1.5, 1.0, 0.2, GeometryMode::Arc),
        (10, 1.2, 2.5, 0.25, GeometryMode::Chord),
        (10, 1.1, 4.0, 0.0, GeometryMode::Arc),
    ] {
        let p = PhysicalParams::from_ratios(n_s, rba, alpha, beta, OMEGA, DEFAULT_C6, mode).unwrap();
        let h = p.hamiltonian().unwrap();
        let lz = lowest_eigenpairs(&h, 3).unwrap();
        let dense = DenseSpectrum::new(&h).unwrap();
        for k in 0..3 {
            let d = dense.values()[k];
            worst = worst.max((lz.values[k] - d).abs() / d.abs().max(1.0));
        }
    }
    let h16 = params(16, 1.2, 3.0, 0.0).hamiltonian().unwrap();
    let r = lowest_eigenpairs(&h16, 3).unwrap();
    let split = (r.values[1] - r.values[0]) / OMEGA;
    let gap = (r.values[2] - r.values[0]) / OMEGA;
    // the pair splitting closes with system size; n_s = 20 is reported only
    let r20 = lowest_eigenpairs(&params(20, 1.2, 3.0, 0.0).hamiltonian().unwrap(), 3).unwrap();
    let split20 = (r20.values[1] - r20.values[0]) / OMEGA;
    outcome(
        worst < 1e-8 && split < 1e-4 && gap > 0.1,
        format!(
            "dense agreement {worst:.2e} (< 1e-8); n_s=16: (E1-E0)/Omega = {split:.3e} (< 1e-4), \
             dE20/Omega = {gap:.4} (> 0.1); n_s=20 (E1-E0)/Omega = {split20:.3e}"
        ),
    )
}

fn a4_decay_curves() -> Outcome {
    let settings = DecaySettings::default();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut gammas = Vec::new();
    for beta in [0.1, 0.3, 0.5] {
        let start = Instant::now();
        let run = run_decay(&params(16, 1.2, 2.5, beta), &settings).unwrap();
        let el = start.elapsed().as_secs_f64();
        match run.fit {
            Some(f) => {
                let ok = f.window.0 >= 0.1 - 1e-12 && f.window.1 <= 0.4 + 1e-12 && f.r_squared >= 0.9 && el <= 900.0;
                pass &= ok;
                gammas.push(f.gamma);
                parts.push(format!(
                    "beta={beta}: gamma={:.3} r2={:.3} window=[{:.4}, {:.4}] {el:.0}s",
                    f.gamma, f.r_squared, f.window.0, f.window.1
                ));
            }
            None => {
                pass = false;
                parts.push(format!("beta={beta}: no fit ({})", run.fit_error.unwrap_or_default()));
            }
        }
    }
    let increasing = gammas.len() == 3 && gammas.windows(2).all(|w| w[1] > w[0]);
    outcome(
        pass && increasing,
        format!("{}; gamma increasing with beta: {increasing}", parts.join("; ")),
    )
}

fn a5_confinement_scaling() -> Outcome {
    let system = SystemSpec::new(16, 1.2, 2.5);
    let betas = [1.0 / 2.5, 0.3, 1.0 / 4.0];
    let scan = run_rate_vs_confinement(&system, &betas, CONFINEMENT_WINDOW, &DecaySettings::default()).unwrap();
    let regime = scan.points.iter().all(|p| p.regime.is_some_and(|r| r.holds()));
    match scan.fit {
        Some(f) => outcome(
            f.r_squared >= 0.95 && f.params.1 > 0.0 && f.n_points == 3,
            format!(
                "b={:.4} p={:.4} (> 0), r2={:.4} (>= 0.95), points={}, regime flags hold: {regime}",
                f.params.0, f.params.1, f.r_squared, f.n_points
            ),
        ),
        None => outcome(false, format!("no fit: {}", scan.fit_error.unwrap_or_default())),
    }
}

fn a6_gap_scaling() -> Outcome {
    let system = SystemSpec::new(16, 1.2, 2.5);
    let alphas = [2.5, 3.0, 3.5];
    let rbs = [1.14, 1.18, 1.22, 1.26];
    let q = run_q_vs_alpha(&system, &alphas, &rbs, 0.25, &DecaySettings::default()).unwrap();
    let mut parts = Vec::new();
    let mut first_ok = false;
    for (alpha, scan) in &q.scans {
        match scan.fit {
            Some(f) => {
                if *alpha == 2.5 {
                    first_ok = f.r_squared >= 0.9 && f.params.1 > 0.0 && f.n_points == 4;
                }
                parts.push(format!("alpha={alpha}: q={:.4} r2={:.3}", f.params.1, f.r_squared));
            }
            None => parts.push(format!("alpha={alpha}: no fit")),
        }
    }
    let (second_ok, line) = match q.fit {
        Some(f) => {
            let (u, a0) = f.params;
            let ok = u < 0.0 && alphas.iter().all(|a| a0 > *a);
            (ok, format!("q = u(alpha0 - alpha): u={u:.4} (< 0), alpha0={a0:.4} (> alpha)"))
        }
        None => (false, format!("q(alpha) fit failed: {}", q.fit_error.unwrap_or_default())),
    };
    outcome(
        first_ok && second_ok,
        format!("{}; alpha=2.5 q>0 and r2>=0.9: {first_ok}; {line}", parts.join("; ")),
    )
}

fn a7_annealing() -> Outcome {
    let spec = AnnealSpec::new(SystemSpec::new(16, 1.2, 5.0), 16.0);
    let run = run_anneal(&spec).unwrap();
    let tr = &run.trajectory;
    let x = tr.column("delta_loc_over_v1").unwrap();
    let neel = tr.column("neel").unwrap();
    let f_z2p = tr.column("fidelity_z2p").unwrap();
    let f_z2m = tr.column("fidelity_z2m").unwrap();
    let f_zero = tr.column("fidelity_zero").unwrap();
    let sigma_ns = tr.column("sigma_ns").unwrap();
    let last = neel.len() - 1;

    let start_ok = neel[0] > 0.9;
    let end_ok = neel[last] < -0.9;
    let c1 = run.cliffs.first;
    let c2 = run.cliffs.second;
    let c1_ok = c1.is_some_and(|c| (1.5..=2.1).contains(&c));
    let c2_ok = c2.is_some_and(|c| (-2.1..=-1.1).contains(&c));
    let plateau_ok = match (c1, c2) {
        (Some(a), Some(b)) => {
            let mid = 0.5 * (a + b);
            let i = (0..x.len())
                .min_by(|&i, &j| (x[i] - mid).abs().total_cmp(&(x[j] - mid).abs()))
                .unwrap();
            f_zero[i] > f_z2p[i] && f_zero[i] > f_z2m[i]
        }
        _ => false,
    };
    let sigma_ok = sigma_ns[last] >= 0.8;
    outcome(
        start_ok && end_ok && c1_ok && c2_ok && plateau_ok && sigma_ok,
        format!(
            "N start {:.3} (> 0.9) end {:.3} (< -0.9); cliffs at dloc/V1 = {:?} in [1.5, 2.1], {:?} in [-2.1, -1.1]; \
             |0..0> dominant mid-plateau: {plateau_ok}; sigma_ns end {:.3} (>= 0.8); |01..> fidelity end {:.3}",
            neel[0], neel[last], c1, c2, sigma_ns[last], f_z2m[last]
        ),
    )
}

fn a8_two_atom() -> Outcome {
    let tau = 8.0;
    let ramp = TwoAtomRamp::reference(tau).unwrap();
    let p0 = initial_overlap(&ramp);
    let t_end = ramp.default_t_end();
    let n = 3201;
    let grid = uniform_grid(0.0, t_end, n).unwrap();
    let step = t_end / (n - 1) as f64;
    let curves = eigenvalues_vs_time(&ramp, &grid);
    let minima = gap_minima(&grid, &curves, 1, 2);
    let targets = [(ramp.beta_start - 1.0) * tau, (ramp.beta_start + 1.0) * tau];
    let minima_ok = targets
        .iter()
        .all(|t| minima.iter().any(|m| (m - t).abs() <= step + 1e-12));
    let traj = evolve_two_atom(&ramp, t_end, 1e-3, &[t_end]).unwrap();
    let c01 = traj.final_state[1].norm_sqr();
    outcome(
        p0 > 0.97 && minima_ok && c01 > 0.9,
        format!(
            "p(0) = {p0:.4} (> 0.97); E3-E2 minima at {minima:?} vs {targets:?} within {step}: {minima_ok}; \
             final |c01|^2 = {c01:.4} (> 0.9)"
        ),
    )
}

fn a9_protocol() -> Outcome {
    let hc = HardwareConstraints::default();
    let l16 = layout_decay_protocol(16, 8.27, 10.0, 3).unwrap();
    let (dx, dy) = l16.footprint;
    let dims_ok = (64.7..=64.9).contains(&dx) && (48.1..=48.3).contains(&dy);
    let l28 = layout_decay_protocol(28, 8.27, 10.0, 9).unwrap();
    let narrow = validate_layout(&l28, &hc).iter().all(|c| c.passed);
    let wide = validate_layout(&l28, &HardwareConstraints::upgraded()).iter().all(|c| c.passed);
    let (o, dg, dl) = (OMEGA, 2.5 * OMEGA, 0.3 * 2.5 * OMEGA);
    let smooth = validate(&l16, &decay_protocol_schedule(o, dg, dl).unwrap(), &hc);
    let step = validate(&l16, &step_quench_schedule(o, dg, dl).unwrap(), &hc);
    let dur = smooth.check("duration").unwrap();
    let slew = step.check("delta_glob_slew").unwrap();
    let ok = dims_ok && !narrow && wide && smooth.passed() && dur.measured == hc.t_max && !slew.passed;
    outcome(
        ok,
        format!(
            "d_x = {dx:.3}, d_y = {dy:.3}; n_s=28 accepted: standard {narrow}, upgraded {wide}; \
             reference protocol passes {} (duration {}); step quench slew {:.0} > {}: {}",
            smooth.passed(),
            dur.measured,
            slew.measured,
            slew.limit,
            !slew.passed
        ),
    )
}

/// Composite Simpson after `φ = L(1 − u²)`, which removes the square-root
/// endpoint behaviour.
fn simpson_dispersion(hx: f64) -> f64 {
    let l = hx.ln().abs();
    let g = |u: f64| {
        let phi = l * (1.0 - u * u);
        (1.0 + hx * hx - 2.0 * hx * phi.cosh()).max(0.0).sqrt() * 2.0 * l * u
    };
    let n = 20_000;
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    2.0 * s * h / 3.0
}

fn a10_ising() -> Outcome {
    let hx = 0.3;
    let base = ising_reference_exponent(hx, 0.1).unwrap() * 0.1;
    let scaling = [0.05, 0.1, 0.2]
        .iter()
        .map(|hz| ((ising_reference_exponent(hx, *hz).unwrap() * hz - base) / base).abs())
        .fold(0.0, f64::max);
    let dual = [0.1, 0.3, 0.5, 0.9]
        .iter()
        .map(|&h| {
            let a = ising_dispersion_integral(h).unwrap();
            ((a - simpson_dispersion(h)) / a).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        scaling < 1e-12 && dual < 1e-8,
        format!("1/|h_z| scaling deviation {scaling:.1e} (< 1e-12), dual quadrature {dual:.1e} (< 1e-8)"),
    )
}

fn a11_determinism() -> Outcome {
    let spec = SweepSpec {
        system: SystemSpec::new(8, 1.2, 2.5),
        alphas: vec![2.0, 2.5, 3.0],
        rb_over_a: vec![1.15, 1.2, 1.25],
        betas: vec![0.25],
        settings: DecaySettings::default(),
    };
    let a = run_sweep(&spec, 1).unwrap().to_csv();
    let b = run_sweep(&spec, 8).unwrap().to_csv();
    let grid = PhaseGridSpec {
        n_s: 8,
        omega: OMEGA,
        c6: DEFAULT_C6,
        geometry_mode: GeometryMode::Chord,
        alphas: vec![1.0, 2.0, 3.0, 4.0, 5.0],
        rb_over_a: vec![1.2, 1.5],
    };
    let phase = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let g = pool.install(|| ground_phase_diagram(&grid)).unwrap();
        grid_matrix_csv(&g.alphas, &g.rb_over_a, &g.values)
    };
    let same_sweep = a == b;
    let same_phase = phase(1) == phase(8);
    outcome(
        same_sweep && same_phase,
        format!("sweep CSV identical: {same_sweep}; phase-diagram CSV identical: {same_phase}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("A1", a1_oracle_equivalence),
        ("A2", a2_unitarity),
        ("A3", a3_eigensolver),
        ("A4", a4_decay_curves),
        ("A5", a5_confinement_scaling),
        ("A6", a6_gap_scaling),
        ("A7", a7_annealing),
        ("A8", a8_two_atom),
        ("A9", a9_protocol),
        ("A10", a10_ising),
        ("A11", a11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == id) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if res.pass { "PASS" } else { "FAIL" };
        println!("{id} {tag} [{:.1}s] {}", start.elapsed().as_secs_f64(), res.detail);
        if !res.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
}
