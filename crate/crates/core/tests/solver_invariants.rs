use hubfield::{
    eps_sweep, find_main_hub, fixed_point_solve, scaling_probe, DensityField, Grid, IterationMode, MultiplierMode,
    RoutingKernel, SolverConfig,
};

fn step(n: usize) -> DensityField {
    let g = Grid::new_1d(-1.0, 1.0, n).unwrap();
    DensityField::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 2.0 }).unwrap()
}

fn cfg(eps: f64) -> SolverConfig {
    SolverConfig::new(eps, 1.0, 1, RoutingKernel::quadratic())
}

fn argmax_x(mu: &DensityField) -> f64 {
    mu.grid().center(mu.argmax())[0]
}

#[test]
fn iterates_are_probabilities() {
    let rho = step(200);
    for mode in [MultiplierMode::Bisect, MultiplierMode::Renormalize] {
        let mut c = cfg(1e-2);
        c.multiplier_mode = mode;
        c.max_iter = 30;
        c.tol = 1e-12;
        let mut mu = DensityField::uniform_probability(rho.grid().clone());
        for _ in 0..30 {
            mu = hubfield::iterate_once(&rho, &mu, &c).unwrap().0;
            assert!((mu.integrate() - 1.0).abs() < 1e-10);
            assert!(mu.values().iter().all(|v| *v >= 0.0));
        }
    }
}

#[test]
fn iterates_vanish_on_masked_cells() {
    let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (12, 12))
        .unwrap()
        .with_polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        .unwrap();
    let rho = DensityField::uniform(g.clone(), 1.0).unwrap();
    let c = SolverConfig::new(0.05, 2.0, 2, RoutingKernel::quadratic());
    let r = fixed_point_solve(&rho, &c).unwrap();
    for k in 0..g.len() {
        if !g.is_active(k) {
            assert_eq!(r.mu.value(k), 0.0);
        }
    }
    assert!((r.mu.integrate() - 1.0).abs() < 1e-10);
}

#[test]
fn symmetric_density_gives_symmetric_iterates() {
    let g = Grid::new_1d(-1.0, 1.0, 120).unwrap();
    let rho = DensityField::from_fn(g, |x| 1.0 + (3.0 * x[0]).cos()).unwrap();
    for (it, mm) in [
        (IterationMode::Derived, MultiplierMode::Bisect),
        (IterationMode::Derived, MultiplierMode::Renormalize),
        (IterationMode::PaperLiteral, MultiplierMode::Renormalize),
    ] {
        let mut c = cfg(1e-2);
        c.iteration_mode = it;
        c.multiplier_mode = mm;
        let mut mu = DensityField::uniform_probability(rho.grid().clone());
        for _ in 0..15 {
            mu = hubfield::iterate_once(&rho, &mu, &c).unwrap().0;
            let v = mu.values();
            for k in 0..60 {
                assert!((v[k] - v[119 - k]).abs() <= 1e-10 * v[k].max(1.0), "{it} {mm}");
            }
        }
    }
}

#[test]
fn cost_mostly_decreasing_on_step_benchmark() {
    let rho = step(200);
    for eps in [1e-1, 1e-2, 1e-3] {
        let mut c = cfg(eps);
        c.tol = 1e-9;
        c.max_iter = 60;
        let r = fixed_point_solve(&rho, &c).unwrap();
        let f: Vec<f64> = r.history.iter().map(|h| h.total_cost).collect();
        let steps = f.len() - 1;
        if steps < 2 {
            continue;
        }
        let down = f[1..].windows(2).filter(|w| w[1] <= w[0] * (1.0 + 1e-12)).count();
        assert!(
            down as f64 >= 0.9 * (steps - 1) as f64,
            "eps={eps}: {down}/{}",
            steps - 1
        );
    }
}

#[test]
fn minimizers_approach_the_hub() {
    let rho = step(200);
    let h = rho.grid().cell_measure();
    let x0 = find_main_hub(&rho, 1.0, 1, 2.0).unwrap().x0[0];
    let mut eps: Vec<f64> = (0..7).map(|k| 0.1 / 2f64.powi(k)).collect();
    eps.push(1e-3);
    let runs = eps_sweep(&rho, &cfg(1.0), &eps).unwrap();
    let dist: Vec<f64> = runs.iter().map(|r| (argmax_x(&r.mu) - x0).abs()).collect();
    for w in dist.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{dist:?}");
    }
    assert!(*dist.last().unwrap() <= 2.0 * h, "{dist:?}");
}

#[test]
fn concentration_at_small_eps() {
    let rho = step(200);
    let runs = eps_sweep(&rho, &cfg(1.0), &[1e-1, 1e-2, 1e-3]).unwrap();
    for r in &runs {
        assert!(r.converged && r.iterations <= 200);
        assert!((r.mu.integrate() - 1.0).abs() < 1e-10);
    }
    let peak = runs[2].mu.max_value();
    assert!(peak > 5.0 * runs[0].mu.max_value());
}

#[test]
fn scaling_one_dimension() {
    let rho = step(200);
    let eps: Vec<f64> = (0..5).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let rep = scaling_probe(&rho, &cfg(1.0), &eps).unwrap();
    assert!((rep.slope - 0.5).abs() < 0.1, "slope {}", rep.slope);
}

#[test]
fn scaling_two_dimensions() {
    let g = Grid::new_2d((-1.0, 1.0), (-1.0, 1.0), (24, 24)).unwrap();
    let rho = DensityField::from_fn(g, |x| (-2.0 * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
    let eps: Vec<f64> = vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    for (p, want) in [(2.0, 0.5), (1.0, 2.0 / 3.0)] {
        let c = SolverConfig::new(1.0, p, 2, RoutingKernel::quadratic());
        let rep = scaling_probe(&rho, &c, &eps).unwrap();
        assert!((rep.slope - want).abs() < 0.15, "p={p}: slope {}", rep.slope);
    }
}

#[test]
#[ignore = "does not hold: the literal iteration concentrates near x=0.42, far from the derived argmax"]
fn paper_literal_and_derived_agree_on_argmax() {
    let rho = step(200);
    let h = rho.grid().cell_measure();
    for eps in [1e-2, 1e-3] {
        let derived = eps_sweep(&rho, &cfg(1.0), &[1e-1, 1e-2, eps]).unwrap().pop().unwrap();
        let mut lit = cfg(eps);
        lit.iteration_mode = IterationMode::PaperLiteral;
        lit.multiplier_mode = MultiplierMode::Renormalize;
        let literal = fixed_point_solve(&rho, &lit).unwrap();
        let gap = (argmax_x(&derived.mu) - argmax_x(&literal.mu)).abs();
        assert!(gap <= 2.0 * h + 1e-12, "eps={eps}: gap {gap}");
    }
}
