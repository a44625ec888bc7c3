use proptest::prelude::*;

use sdl_core::fpe::{
    duhamel_picard, heat_propagate, solve_nfpe, DuhamelOptions, NfpeKernel, PeriodicGrid, SolverOptions,
};
use sdl_core::io::{read_particle_frames, read_trajectory, write_particle_frames, write_trajectory};
use sdl_core::kernels::{biot_savart, heat_kernel, DriftField};
use sdl_core::measure::MeasureSpec;
use sdl_core::particles::{all_drifts, init_particles, step_particles, ParticleKernel};
use sdl_core::spectral::wavenumbers;
use sdl_core::SampledField;

fn gaussian(x: &[f64], c: [f64; 2], s: f64, m: f64) -> f64 {
    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
    m * (-r2 / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s)
}

fn pair_density(grid: &PeriodicGrid, a: [f64; 2], b: [f64; 2], s: f64) -> SampledField {
    SampledField::from_fn(grid.geometry, |x| gaussian(x, a, s, 0.5) + gaussian(x, b, s, 0.5))
}

/// Trigonometric interpolant of a periodic sample at `x`.
fn spectral_eval(grid: &PeriodicGrid, f: &SampledField, x: &[f64; 2]) -> f64 {
    let g = grid.geometry;
    let k = wavenumbers(g.resolution, g.half_width);
    let spec = grid.forward(&f.values);
    let x0 = g.coord(0);
    let (e0, e1) = (x[0] - x0, x[1] - x0);
    let mut idx = [0usize; 2];
    let mut acc = 0.0;
    for (flat, c) in spec.iter().enumerate() {
        g.multi_index(flat, &mut idx);
        let phase = k[idx[0]] * e0 + k[idx[1]] * e1;
        acc += c.re * phase.cos() - c.im * phase.sin();
    }
    acc / g.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn biot_savart_commutes_with_rotations(r in 0.05f64..20.0, phi in 0.0f64..6.3, theta in 0.0f64..6.3) {
        let x = [r * phi.cos(), r * phi.sin()];
        let (c, s) = (theta.cos(), theta.sin());
        let rx = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
        let k = biot_savart(&x).unwrap();
        let rk = [c * k[0] - s * k[1], s * k[0] + c * k[1]];
        let k_rx = biot_savart(&rx).unwrap();
        let scale = k[0].hypot(k[1]);
        prop_assert!((k_rx[0] - rk[0]).abs() <= 1e-12 * scale);
        prop_assert!((k_rx[1] - rk[1]).abs() <= 1e-12 * scale);
    }

    #[test]
    fn heat_kernel_scales_parabolically(
        d in 1usize..4,
        t in 0.01f64..50.0,
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let x = &x[..d];
        let y: Vec<f64> = x.iter().map(|v| v / t.sqrt()).collect();
        let lhs = heat_kernel(t, x).unwrap();
        let rhs = t.powf(-(d as f64) / 2.0) * heat_kernel(1.0, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn particle_steps_keep_weights_and_cancel_the_drift_centroid(
        n in 20usize..200,
        seed in any::<u64>(),
        cx in -1.0f64..1.0,
    ) {
        let zeta = MeasureSpec::Mixture {
            parts: vec![
                MeasureSpec::gaussian(vec![cx, 0.0], 0.5, 0.7),
                MeasureSpec::gaussian(vec![-cx, 0.3], 0.3, -0.3),
            ],
        };
        let mut state = init_particles(&zeta, n, seed, 1.0).unwrap();
        let w0 = state.weights.clone();
        for step in 0..4 {
            let drifts = all_drifts(&state, &ParticleKernel::BiotSavartBlob, None).unwrap();
            let scale: f64 = drifts.chunks(2).zip(&state.weights).map(|(b, w)| w.abs() * b[0].hypot(b[1])).sum();
            let (next, diag) = step_particles(&state, &ParticleKernel::BiotSavartBlob, 0.01, seed, step, None).unwrap();
            prop_assert!(diag.drift_centroid.iter().all(|c| c.abs() <= 1e-12 * scale.max(1.0)));
            state = next;
        }
        prop_assert_eq!(state.weights, w0);
    }

    #[test]
    fn blob_summation_routes_agree(n in 10usize..120, seed in any::<u64>()) {
        let zeta = MeasureSpec::gaussian(vec![0.2, -0.1], 0.6, 1.0);
        let state = init_particles(&zeta, n, seed, 1.0).unwrap();
        let direct = all_drifts(&state, &ParticleKernel::BiotSavartBlob, None).unwrap();
        let cells = all_drifts(&state, &ParticleKernel::BiotSavartBlob, Some(100.0)).unwrap();
        let field = ParticleKernel::Field(DriftField::blob(state.blob_scale).unwrap());
        let generic = all_drifts(&state, &field, None).unwrap();
        let scale = direct.iter().fold(1e-300f64, |a, v| a.max(v.abs()));
        for ((a, b), c) in direct.iter().zip(&cells).zip(&generic) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
            prop_assert!((a - c).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn vorticity_solver_conserves_mass_and_dissipates_l2(
        ax in -1.5f64..1.5,
        ay in -1.5f64..1.5,
        s in 0.3f64..0.8,
    ) {
        let grid = PeriodicGrid::new(2, 5.0, 32).unwrap();
        let rho = pair_density(&grid, [ax, ay], [-ay, ax * 0.5], s);
        let traj = solve_nfpe(&grid, &NfpeKernel::BiotSavart, &rho, &SolverOptions::new(0.2, 0.02)).unwrap();
        let m0 = traj.norms[0].mass;
        prop_assert!(traj.mass_drift() <= 1e-12 * m0.abs().max(1.0));
        for w in traj.norms.windows(2) {
            prop_assert!(w[1].l2 <= w[0].l2 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn heat_flow_conserves_mass(ax in -2.0f64..2.0, s in 0.2f64..1.0, t in 0.0f64..2.0) {
        let grid = PeriodicGrid::new(2, 6.0, 32).unwrap();
        let rho = pair_density(&grid, [ax, 0.0], [0.0, -ax], s);
        let out = heat_propagate(&grid, &rho, t).unwrap();
        prop_assert!((out.integral() - rho.integral()).abs() <= 1e-12);
    }

    #[test]
    fn binary_formats_round_trip(n in 1usize..50, seed in any::<u64>()) {
        let zeta = MeasureSpec::gaussian(vec![0.0, 0.0], 1.0, 1.0);
        let mut frames = vec![init_particles(&zeta, n, seed, 1.0).unwrap()];
        let (next, _) = step_particles(&frames[0], &ParticleKernel::BiotSavartBlob, 0.01, seed, 0, None).unwrap();
        frames.push(next);
        let mut buf = Vec::new();
        write_particle_frames(&mut buf, &frames, 0.01).unwrap();
        let back = read_particle_frames(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.particles, n);
        for (a, b) in back.frames.iter().zip(&frames) {
            prop_assert_eq!(a.0, b.time);
            prop_assert_eq!(&a.1, &b.positions);
            prop_assert_eq!(&a.2, &b.weights);
        }

        let grid = PeriodicGrid::new(2, 3.0, 8).unwrap();
        let shift = (seed % 1000) as f64 * 1e-3;
        let rho = pair_density(&grid, [shift, 0.0], [0.0, -shift], 0.6);
        let mut opts = SolverOptions::new(0.1, 0.05);
        opts.record_every = 1;
        let traj = solve_nfpe(&grid, &NfpeKernel::BiotSavart, &rho, &opts).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let back = read_trajectory(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), traj.frames.len());
        for ((t, f), (s, g)) in back.iter().zip(traj.times.iter().zip(&traj.frames)) {
            prop_assert_eq!(t, s);
            prop_assert_eq!(&f.values, &g.values);
        }
    }
}

#[test]
fn refinement_shrinks_the_self_error() {
    let probes = [[0.0, 0.0], [0.7, -0.2], [-1.1, 0.4], [0.3, 1.3], [-0.5, -0.9], [1.6, 0.8]];
    let run = |modes: usize, dt: f64| {
        let grid = PeriodicGrid::new(2, 6.0, modes).unwrap();
        let rho = pair_density(&grid, [0.8, 0.0], [-0.8, 0.0], 0.5);
        let traj = solve_nfpe(&grid, &NfpeKernel::BiotSavart, &rho, &SolverOptions::new(0.5, dt)).unwrap();
        probes.iter().map(|x| spectral_eval(&grid, traj.last(), x)).collect::<Vec<f64>>()
    };
    let levels = [run(32, 0.05), run(64, 0.025), run(128, 0.0125)];
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let e1 = diff(&levels[0], &levels[1]);
    let e2 = diff(&levels[1], &levels[2]);
    assert!(e2 * 3.0 <= e1, "self-errors {e1:.3e} -> {e2:.3e}");
}

#[test]
fn duhamel_fixed_point_is_stable_past_convergence() {
    let grid = PeriodicGrid::new(2, 4.0, 32).unwrap();
    let rho = pair_density(&grid, [0.5, 0.0], [-0.5, 0.2], 0.4).scaled(0.1);
    let solve = |iters: usize| {
        let mut opts = DuhamelOptions::new(0.25);
        opts.intervals = 16;
        opts.max_iterations = iters;
        opts.tol = 0.0;
        duhamel_picard(&grid, &NfpeKernel::BiotSavart, &rho, &opts).unwrap()
    };
    let a = solve(10);
    let b = solve(16);
    assert!(a.log.last().unwrap().increment <= 1e-12, "{:?}", a.log.last());
    let gap = a.terminal.l1_distance(&b.terminal).unwrap();
    assert!(gap <= 1e-12, "terminal moved by {gap:.3e}");
}
