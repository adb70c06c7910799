use blowup_core::grid::radial_derivative;
use blowup_core::physical::{
    ode_solution, run_until_blowup, stability_limit, step_physical, InitialData, PhysicalRunConfig,
};
use blowup_core::{Error, Params, PerturbationSpec, PhysicalState, RadialGrid};

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn advance(mut state: PhysicalState, cfg: &PhysicalRunConfig, until: f64) -> PhysicalState {
    let steps = ((until - state.t) / cfg.dt).round() as usize;
    for _ in 0..steps {
        state = step_physical(&state, cfg).expect("finite step");
    }
    state
}

fn smooth_bump(grid: &RadialGrid, amplitude: f64, support: f64) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&r| {
            if r < support {
                amplitude * (1.0 - 1.0 / (1.0 - (r / support).powi(2))).exp()
            } else {
                0.0
            }
        })
        .collect()
}

#[test]
fn zero_is_a_fixed_point() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 65, 2.0).unwrap();
    let cfg = PhysicalRunConfig::new(
        params,
        grid,
        InitialData::GaussianBump {
            amplitude: 0.0,
            width: 1.0,
            offset: 0.0,
        },
    );
    let state = advance(PhysicalState::zeros(0.0, 65), &cfg, 1.0);
    assert!(state.u.iter().chain(&state.ut).all(|&v| v == 0.0));
}

#[test]
fn ode_solution_is_tracked_at_second_order() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let errors: Vec<f64> = [129, 257, 513]
        .iter()
        .map(|&n| {
            let grid = RadialGrid::new(3, n, 2.0).unwrap();
            let cfg = PhysicalRunConfig::new(params.clone(), grid.clone(), InitialData::OdeExact { blowup_time: 1.0 });
            let initial = cfg.initial.sample(&params, &grid).unwrap();
            let state = advance(initial, &cfg, 0.5);
            let (exact, _) = ode_solution(&params, 1.0, state.t);
            grid.nodes()
                .iter()
                .zip(&state.u)
                .filter(|(r, _)| **r <= 1.0)
                .map(|(_, u)| ((u - exact) / exact).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[2] < 1e-5, "{errors:?}");
    assert!(order(errors[0], errors[1]) > 1.8, "{errors:?}");
    assert!(order(errors[1], errors[2]) > 1.8, "{errors:?}");
}

/// Classical RK4 for `u'' = |u|^{p-1}u - u`.
fn scalar_klein_gordon(p: f64, u0: f64, until: f64, steps: usize) -> f64 {
    let rhs = |u: f64, v: f64| (v, u.abs().powf(p - 1.0) * u - u);
    let dt = until / steps as f64;
    let (mut u, mut v) = (u0, 0.0);
    for _ in 0..steps {
        let k1 = rhs(u, v);
        let k2 = rhs(u + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1);
        let k3 = rhs(u + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1);
        let k4 = rhs(u + dt * k3.0, v + dt * k3.1);
        u += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    u
}

#[test]
fn klein_gordon_constant_matches_scalar_ode() {
    let params = Params::new(3, 4.0, PerturbationSpec::KleinGordon).unwrap();
    let c = 0.1;
    let reference = scalar_klein_gordon(4.0, c, 1.0, 100_000);
    let errors: Vec<f64> = [65, 129, 257]
        .iter()
        .map(|&n| {
            let grid = RadialGrid::new(3, n, 4.0).unwrap();
            let initial = InitialData::Samples {
                u: vec![c; n],
                ut: vec![0.0; n],
            };
            let cfg = PhysicalRunConfig::new(params.clone(), grid, initial);
            let state = advance(cfg.initial.sample(&params, &cfg.grid).unwrap(), &cfg, 1.0);
            (state.u[0] - reference).abs()
        })
        .collect();
    assert!(errors[2] < 1e-6, "{errors:?}");
    assert!(order(errors[0], errors[1]) > 1.8, "{errors:?}");
    assert!(order(errors[1], errors[2]) > 1.8, "{errors:?}");
}

/// Largest `|u|` beyond `a + t + margin` over `[0, until]`.
fn precursor(n: usize, margin_nodes: f64, until: f64) -> f64 {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, n, 4.0).unwrap();
    let support = 0.5;
    let u = smooth_bump(&grid, 0.5, support);
    let cfg = PhysicalRunConfig::new(params, grid.clone(), InitialData::Samples { u, ut: vec![0.0; n] });
    let mut state = cfg.initial.sample(&cfg.params, &grid).unwrap();
    let mut worst: f64 = 0.0;
    while state.t < until {
        state = step_physical(&state, &cfg).unwrap();
        let front = support + state.t + margin_nodes * grid.spacing();
        for (r, v) in grid.nodes().iter().zip(&state.u) {
            if *r > front {
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

#[test]
fn finite_speed_of_propagation() {
    // The discrete scheme has precursors a few cells ahead of the light cone;
    // they shrink under refinement and are negligible a few dozen cells out.
    let near_coarse = precursor(513, 2.0, 2.0);
    let near_fine = precursor(1025, 2.0, 2.0);
    assert!(near_fine < near_coarse / 4.0, "{near_coarse:e} {near_fine:e}");
    assert!(precursor(513, 32.0, 2.0) < 1e-10);
    assert!(precursor(1025, 32.0, 2.0) < 1e-10);
}

/// `∫ ½u_t² + ½u_r²` plus the boundary term of the absorbing condition.
fn free_energy(state: &PhysicalState, grid: &RadialGrid) -> f64 {
    let ur = radial_derivative(&state.u, grid.spacing());
    let density: Vec<f64> = state.ut.iter().zip(&ur).map(|(a, b)| 0.5 * (a * a + b * b)).collect();
    let radius = grid.radius();
    let dim = f64::from(grid.dim());
    let last = *state.u.last().unwrap();
    grid.integrate_ball(&density).unwrap() + grid.sphere_area() * (dim - 1.0) / (4.0 * radius) * last * last
}

#[test]
fn free_wave_energy_does_not_grow() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 513, 2.0).unwrap();
    let u = smooth_bump(&grid, 1.0, 0.6);
    let mut cfg = PhysicalRunConfig::new(params, grid.clone(), InitialData::Samples { u, ut: vec![0.0; 513] });
    cfg.nonlinear = false;
    let mut state = cfg.initial.sample(&cfg.params, &grid).unwrap();
    let initial = free_energy(&state, &grid);
    let mut previous = initial;
    let tol = 1e-3 * initial;
    while state.t < 4.0 {
        state = step_physical(&state, &cfg).unwrap();
        let energy = free_energy(&state, &grid);
        assert!(energy <= previous + tol, "t = {}: {energy} > {previous}", state.t);
        previous = energy;
    }
    // The pulse has left through the absorbing end.
    assert!(previous < 0.05 * initial, "{previous} vs {initial}");
}

#[test]
fn ode_blowup_time_and_rate_are_recovered() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 2049, 2.0).unwrap();
    let mut cfg = PhysicalRunConfig::new(params, grid, InitialData::OdeExact { blowup_time: 1.0 });
    cfg.snapshot_stride = 64;
    let run = run_until_blowup(&cfg).unwrap();
    let est = run.estimate.clone();
    assert!((est.blowup_time - 1.0).abs() < 1e-3, "{est:?}");
    assert!((est.exponent / (2.0 / 3.0) - 1.0).abs() < 0.02, "{est:?}");
    assert!(est.stopped_at < est.blowup_time);
    assert!(est.fit_residual.is_finite());
    assert!(run.resolved_trajectory().last().unwrap().t <= est.stopped_at);
}

#[test]
fn zero_data_does_not_blow_up() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 65, 2.0).unwrap();
    let mut cfg = PhysicalRunConfig::new(
        params,
        grid,
        InitialData::GaussianBump {
            amplitude: 0.0,
            width: 1.0,
            offset: 0.0,
        },
    );
    cfg.max_steps = 500;
    assert!(matches!(
        run_until_blowup(&cfg),
        Err(Error::NoBlowup { steps: 500, .. })
    ));
}

#[test]
fn gaussian_blowup_is_ode_type() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let estimates: Vec<_> = [2049, 4097]
        .iter()
        .map(|&n| {
            let grid = RadialGrid::new(3, n, 0.5).unwrap();
            let initial = InitialData::GaussianBump {
                amplitude: 3.0,
                width: 1.0,
                offset: 0.0,
            };
            let mut cfg = PhysicalRunConfig::new(params.clone(), grid, initial);
            cfg.snapshot_stride = usize::MAX;
            run_until_blowup(&cfg).unwrap().estimate
        })
        .collect();
    for est in &estimates {
        assert!((est.exponent / (2.0 / 3.0) - 1.0).abs() < 0.05, "{est:?}");
    }
    assert!(
        (estimates[0].blowup_time - estimates[1].blowup_time).abs() < 1e-3,
        "{estimates:?}"
    );
}

#[test]
fn stability_limit_is_respected() {
    assert!((stability_limit(2) - 0.89).abs() < 0.01);
    assert!(stability_limit(3) < 0.8 && stability_limit(3) > 0.75);
    for dim in 2..=5 {
        assert!(stability_limit(dim + 1) < stability_limit(dim));
    }
    for (dim, p) in [(3u32, 4.0), (4, 2.5), (5, 2.2)] {
        let params = Params::pure_power(dim, p).unwrap();
        let grid = RadialGrid::new(dim, 257, 4.0).unwrap();
        let u = smooth_bump(&grid, 0.1, 0.5);
        let mut cfg = PhysicalRunConfig::new(params, grid.clone(), InitialData::Samples { u, ut: vec![0.0; 257] });
        cfg.nonlinear = false;
        cfg.dt = stability_limit(dim) * grid.spacing();
        cfg.validate().unwrap();
        let state = advance(cfg.initial.sample(&cfg.params, &grid).unwrap(), &cfg, 20.0);
        assert!(state.amplitude() < 0.1, "N = {dim}: {}", state.amplitude());
        cfg.dt *= 1.05;
        assert!(matches!(cfg.validate(), Err(Error::Cfl { .. })));
    }
}
