use blowup_core::physical::{run_until_blowup, InitialData, PhysicalRunConfig};
use blowup_core::similarity::{
    radial_operator_check, run_similarity, BoundaryClosure, OperatorTerms, SimilarityInitial, SimilarityRunConfig,
};
use blowup_core::{Error, Params, RadialGrid, SimilarityState};

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn state_of(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> SimilarityState {
    SimilarityState {
        s: 0.0,
        w: grid.nodes().iter().map(|&r| f(r)).collect(),
        ws: vec![0.0; grid.len()],
    }
}

#[test]
fn stationary_solution_is_preserved() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let kappa0 = params.kappa0();
    for n in [129, 257, 513] {
        let grid = RadialGrid::unit_ball(3, n).unwrap();
        let cfg = SimilarityRunConfig::new(params.clone(), grid, 0.0, 5.0, SimilarityInitial::StationaryKappa0);
        let run = run_similarity(&cfg).unwrap();
        let drift = run
            .trajectory
            .iter()
            .flat_map(|s| s.w.iter().map(|w| (w - kappa0).abs()))
            .fold(0.0, f64::max);
        assert!(drift < 1e-12, "n = {n}: {drift:e}");
        assert!(run.blowup_at.is_none());
    }
}

#[test]
fn polynomial_operator_forms_agree_at_second_order() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let fixtures: [fn(f64) -> f64; 3] = [|r| 1.0 - r * r, |r| r.powi(4) - r * r, |r| (1.0 - r * r).powi(2)];
    for fixture in fixtures {
        let gaps: Vec<f64> = [65, 129, 257, 513]
            .iter()
            .map(|&n| {
                let grid = RadialGrid::unit_ball(3, n).unwrap();
                radial_operator_check(&state_of(&grid, fixture), &params, &grid).unwrap()
            })
            .collect();
        for pair in gaps.windows(2) {
            assert!(order(pair[0], pair[1]) > 1.8, "{gaps:?}");
        }
    }
}

#[test]
fn constant_fixture_gives_reaction_terms() {
    let params = Params::pure_power(4, 2.5).unwrap();
    let grid = RadialGrid::unit_ball(4, 129).unwrap();
    for c in [0.0, 0.3, -1.2] {
        let gap = radial_operator_check(&state_of(&grid, |_| c), &params, &grid).unwrap();
        assert!(gap < 1e-13, "{gap}");
    }
}

/// Position of the largest value, refined by a parabola through its neighbours.
fn peak(nodes: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let (i, _) = values
        .iter()
        .enumerate()
        .filter(|(i, _)| nodes[*i] > lo && nodes[*i] < hi)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
    let h = nodes[1] - nodes[0];
    nodes[i] + 0.5 * h * (a - c) / (a - 2.0 * b + c)
}

#[test]
fn principal_part_moves_along_characteristics() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::unit_ball(3, 2049).unwrap();
    let (r0, width) = (0.5, 0.02);
    let pulse = state_of(&grid, |r| (-((r - r0) / width).powi(2)).exp());
    let s_end = 0.2;
    let mut cfg = SimilarityRunConfig::new(params, grid.clone(), 0.0, s_end, SimilarityInitial::Samples(pulse));
    cfg.terms = OperatorTerms::PrincipalOnly;
    cfg.snapshot_stride = usize::MAX;
    let run = run_similarity(&cfg).unwrap();
    let last = run.trajectory.last().unwrap();
    // dr/ds = r + 1 and dr/ds = r - 1.
    let outgoing = (r0 + 1.0) * s_end.exp() - 1.0;
    let incoming = 1.0 - (1.0 - r0) * s_end.exp();
    let out_seen = peak(grid.nodes(), &last.w, r0, 1.0);
    let in_seen = peak(grid.nodes(), &last.w, 0.1, r0);
    assert!(
        ((out_seen - r0) / (outgoing - r0) - 1.0).abs() < 0.05,
        "{out_seen} vs {outgoing}"
    );
    assert!(
        ((in_seen - r0) / (incoming - r0) - 1.0).abs() < 0.05,
        "{in_seen} vs {incoming}"
    );
}

#[test]
fn outer_closure_does_not_reach_the_interior() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::unit_ball(3, 513).unwrap();
    let initial = SimilarityInitial::PerturbedKappa0 { epsilon: 0.1, mode: 1 };
    let mut one_sided = SimilarityRunConfig::new(params, grid, 0.0, 1.0, initial);
    one_sided.snapshot_stride = usize::MAX;
    let mut ghost = one_sided.clone();
    ghost.closure = BoundaryClosure::CubicGhost;
    let a = run_similarity(&one_sided).unwrap();
    let b = run_similarity(&ghost).unwrap();
    let (wa, wb) = (&a.trajectory.last().unwrap().w, &b.trajectory.last().unwrap().w);
    let gap = wa.iter().zip(wb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap:e}");
    assert!(wa != wb);
}

#[test]
fn transformed_ode_run_stays_at_kappa0() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let pgrid = RadialGrid::new(3, 1025, 2.0).unwrap();
    let mut pcfg = PhysicalRunConfig::new(
        params.clone(),
        pgrid.clone(),
        InitialData::OdeExact { blowup_time: 1.0 },
    );
    pcfg.snapshot_stride = 1;
    let physical = run_until_blowup(&pcfg).unwrap();
    let grid = RadialGrid::unit_ball(3, 257).unwrap();
    let initial = SimilarityInitial::FromTransform {
        trajectory: physical.resolved_trajectory().to_vec(),
        grid: pgrid,
        frame: 1.0,
        horizon: 1.0,
    };
    let mut cfg = SimilarityRunConfig::new(params.clone(), grid, 0.0, 2.0, initial);
    cfg.snapshot_stride = 16;
    let run = run_similarity(&cfg).unwrap();
    let kappa0 = params.kappa0();
    let drift = run
        .trajectory
        .iter()
        .flat_map(|s| s.w.iter().map(|w| (w - kappa0).abs()))
        .fold(0.0, f64::max);
    assert!(drift < 1e-4, "{drift:e}");
}

#[test]
fn configuration_is_validated() {
    let params = Params::pure_power(3, 4.0).unwrap();
    let grid = RadialGrid::unit_ball(3, 65).unwrap();
    let mut cfg = SimilarityRunConfig::new(params.clone(), grid, 0.0, 1.0, SimilarityInitial::StationaryKappa0);
    assert!((cfg.cfl_number() - 0.8).abs() < 1e-12);
    cfg.ds *= 1.2;
    assert!(matches!(run_similarity(&cfg), Err(Error::Cfl { .. })));
    let wide = RadialGrid::new(3, 65, 2.0).unwrap();
    let cfg = SimilarityRunConfig::new(params, wide, 0.0, 1.0, SimilarityInitial::StationaryKappa0);
    assert!(matches!(run_similarity(&cfg), Err(Error::NotUnitBall(_))));
}
