use blowup_core::physical::ode_solution;
use blowup_core::transform::{from_similarity, shift_frame, shifted_stationary, to_similarity};
use blowup_core::{Error, Params, PhysicalState, RadialGrid, SimilarityState};

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Smooth even field with its time derivative.
fn field(r: f64, t: f64) -> (f64, f64) {
    let g = (-r * r).exp();
    (1.0 + 0.5 * g * (2.0 * t).cos(), -g * (2.0 * t).sin())
}

fn physical_samples(grid: &RadialGrid, times: &[f64]) -> Vec<PhysicalState> {
    times
        .iter()
        .map(|&t| {
            let (u, ut) = grid.nodes().iter().map(|&r| field(r, t)).unzip();
            PhysicalState { t, u, ut }
        })
        .collect()
}

/// Physical -> similarity -> physical on the inner cone; max errors in `u`, `u_t`.
fn round_trip(cells: usize) -> (f64, f64) {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 2 * cells + 1, 2.0).unwrap();
    let dt = 1.0 / cells as f64;
    let times: Vec<f64> = (0..=cells).map(|k| k as f64 * dt * 0.95).collect();
    let trajectory = physical_samples(&grid, &times);
    let sim_grid = RadialGrid::unit_ball(3, cells + 1).unwrap();
    let s_samples: Vec<f64> = (0..=4 * cells)
        .map(|k| 0.1 + 2.4 * k as f64 / (4 * cells) as f64)
        .collect();
    let sim = to_similarity(&trajectory, &grid, &params, 1.0, 1.0, &s_samples, &sim_grid).unwrap();
    let inner = RadialGrid::new(3, cells / 4 + 1, 0.15).unwrap();
    let t_samples = [0.2, 0.4, 0.55, 0.7, 0.85];
    let back = from_similarity(&sim, &sim_grid, &params, 1.0, &t_samples, &inner).unwrap();
    let exact = physical_samples(&inner, &t_samples);
    back.iter().zip(&exact).fold((0.0f64, 0.0f64), |acc, (b, e)| {
        (acc.0.max(max_gap(&b.u, &e.u)), acc.1.max(max_gap(&b.ut, &e.ut)))
    })
}

#[test]
fn round_trip_converges() {
    let errors: Vec<(f64, f64)> = [64, 128, 256].iter().map(|&c| round_trip(c)).collect();
    for pair in errors.windows(2) {
        assert!(order(pair[0].0, pair[1].0) > 2.8, "{errors:?}");
        assert!(order(pair[0].1, pair[1].1) > 1.8, "{errors:?}");
    }
    assert!(errors[2].0 < 1e-6 && errors[2].1 < 1e-4, "{errors:?}");
}

#[test]
fn constant_and_zero_fields() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let sim_grid = RadialGrid::unit_ball(3, 65).unwrap();
    let k = params.kappa0();
    let sim: Vec<_> = (0..8)
        .map(|j| SimilarityState::constant(0.25 * j as f64, k, 65))
        .collect();
    let grid = RadialGrid::new(3, 33, 0.2).unwrap();
    let t = [0.3, 0.5, 0.7];
    for state in from_similarity(&sim, &sim_grid, &params, 1.0, &t, &grid).unwrap() {
        let tau: f64 = 1.0 - state.t;
        let u = k * tau.powf(-2.0 / 3.0);
        assert!(state.u.iter().all(|v| (v - u).abs() < 1e-12 * u));
        assert!(state
            .ut
            .iter()
            .all(|v| (v - 2.0 / 3.0 * u / tau).abs() < 1e-12 * u / tau));
    }
    let zeros: Vec<_> = (0..8).map(|j| PhysicalState::zeros(0.1 * j as f64, 33)).collect();
    let wide = RadialGrid::new(3, 33, 2.0).unwrap();
    let back = to_similarity(&zeros, &wide, &params, 1.0, 1.0, &[0.5, 1.0], &sim_grid).unwrap();
    assert!(back.iter().all(|s| s.w.iter().chain(&s.ws).all(|&v| v == 0.0)));
}

#[test]
fn coverage_is_enforced() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 33, 0.5).unwrap();
    let sim_grid = RadialGrid::unit_ball(3, 17).unwrap();
    let traj: Vec<_> = (0..8).map(|j| PhysicalState::zeros(0.1 * j as f64, 33)).collect();
    assert!(matches!(
        to_similarity(&traj, &grid, &params, 1.0, 0.9, &[1.0], &sim_grid),
        Err(Error::FrameBeyondBlowup { .. })
    ));
    assert!(matches!(
        to_similarity(&traj, &grid, &params, 1.0, 1.0, &[5.0], &sim_grid),
        Err(Error::Coverage { .. })
    ));
    assert!(matches!(
        to_similarity(&traj, &grid, &params, 1.0, 1.0, &[0.2], &sim_grid),
        Err(Error::RadialCoverage { .. })
    ));
}

/// Closed-form ODE solution with `T = 1` sampled every `dt` up to `t_end`.
fn ode_samples(dt: f64, t_end: f64) -> (Vec<PhysicalState>, RadialGrid, Params) {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 33, 2.0).unwrap();
    let steps = (t_end / dt).round() as usize;
    let traj = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            let (u, ut) = ode_solution(&params, 1.0, t);
            PhysicalState {
                t,
                u: vec![u; 33],
                ut: vec![ut; 33],
            }
        })
        .collect();
    (traj, grid, params)
}

#[test]
fn shifted_frame_matches_closed_form() {
    let (traj, grid, params) = ode_samples(2e-4, 0.99);
    let sim_grid = RadialGrid::unit_ball(3, 65).unwrap();
    for delta in [0.1, 0.01] {
        let frame = 1.0 - delta;
        let s_samples: Vec<f64> = (0..=40).map(|k| 0.2 + 0.1 * k as f64).collect();
        let shifted = to_similarity(&traj, &grid, &params, frame, 1.0, &s_samples, &sim_grid).unwrap();
        for state in &shifted {
            let (w, ws) = shifted_stationary(&params, delta, state.s);
            assert!(max_gap(&state.w, &vec![w; 65]) < 1e-6, "δ = {delta}, s = {}", state.s);
            assert!(max_gap(&state.ws, &vec![ws; 65]) < 1e-5, "δ = {delta}, s = {}", state.s);
        }
    }
}

#[test]
fn frame_covariance() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::new(3, 257, 2.0).unwrap();
    let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-3).collect();
    let traj = physical_samples(&grid, &times);
    let sim_grid = RadialGrid::unit_ball(3, 129).unwrap();
    let delta = 0.1;
    let base_s: Vec<f64> = (0..=150).map(|k| 0.02 * k as f64).collect();
    let base = to_similarity(&traj, &grid, &params, 1.0, 1.0, &base_s, &sim_grid).unwrap();
    let s_samples: Vec<f64> = (0..=20).map(|k| 0.5 + 0.1 * k as f64).collect();
    let direct = to_similarity(&traj, &grid, &params, 1.0 - delta, 1.0, &s_samples, &sim_grid).unwrap();
    let via_formula = shift_frame(&base, &sim_grid, &params, delta, &s_samples).unwrap();
    for (a, b) in direct.iter().zip(&via_formula) {
        assert!(max_gap(&a.w, &b.w) < 1e-7, "s = {}: {:e}", a.s, max_gap(&a.w, &b.w));
        assert!(max_gap(&a.ws, &b.ws) < 1e-5, "s = {}: {:e}", a.s, max_gap(&a.ws, &b.ws));
    }
    assert!(matches!(
        shift_frame(&base, &sim_grid, &params, 0.0, &s_samples),
        Err(Error::Config(_))
    ));
}
