use absvie_core::*;

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().fold(Params::new(), |p, (k, v)| p.with(k, *v))
}

fn gen(name: &str, pairs: &[(&str, f64)]) -> GeneratorSpec {
    GeneratorSpec::from_registry(name, params(pairs)).unwrap()
}

struct Setup {
    grid: TimeGrid,
    ensemble: PathEnsemble,
    delays: DelayPair,
}

fn setup(n: usize, paths: usize, seed: u64) -> Setup {
    let grid = build_grid(1.0, 0.25, n).unwrap();
    let ensemble = simulate(&grid, 1, paths, seed).unwrap();
    let delays = constant_delays(&grid, 0.25, 0.0).unwrap();
    Setup {
        grid,
        ensemble,
        delays,
    }
}

fn scenario(
    s: &Setup,
    gens: [GeneratorSpec; 3],
    free: &str,
    shifts: (f64, f64),
) -> ComparisonScenario {
    let psi_bar =
        free_term::build_free_term(&s.grid, &s.ensemble, 1, free, &Params::new()).unwrap();
    let [gen0, gen1, gen_bar] = gens;
    ComparisonScenario {
        gen0,
        gen1,
        gen_bar,
        psi0: psi_bar.shifted(shifts.0),
        psi1: psi_bar.shifted(shifts.1),
        psi_bar,
        delays: s.delays.clone(),
    }
}

#[test]
fn identical_equations_are_ordered_everywhere() {
    let s = setup(8, 1024, 2);
    let g = gen("cond_mean_plus", &[]);
    let sc = scenario(&s, [g.clone(), g.clone(), g], "brownian", (0.0, 0.0));
    let reg = Regressor::new(&s.ensemble, RegressionBasis::polynomial(2));
    let r = compare(&s.grid, &sc, &reg, &CompareOptions::new(&s.grid)).unwrap();
    assert_eq!(r.frac_ordered, 1.0);
    assert_eq!(r.frac_sandwich, 1.0);
}

#[test]
fn shifted_free_terms_shift_the_solution() {
    let s = setup(8, 512, 3);
    let z = GeneratorSpec::zero();
    let sc = scenario(&s, [z.clone(), z.clone(), z], "brownian", (-0.5, 0.5));
    let reg = Regressor::new(&s.ensemble, RegressionBasis::polynomial(2));
    let r = compare(&s.grid, &sc, &reg, &CompareOptions::new(&s.grid)).unwrap();
    for i in 0..=s.grid.steps() {
        for (a, b) in r.lower.y(i, 0).iter().zip(r.upper.y(i, 0)) {
            assert!((b - a - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn first_monotone_step_from_zero() {
    // ψ̄ = 0 and a zero seed give g = E[0] + 1, so Ỹ₁(t) = T - t.
    let s = setup(8, 256, 4);
    let g = gen("cond_mean_plus", &[]);
    let free = FreeData::zeros(&s.grid, 1, 1, 256);
    let problem = Problem {
        grid: &s.grid,
        delays: &s.delays,
        generator: &g,
        free: &free,
    };
    let reg = Regressor::new(&s.ensemble, RegressionBasis::polynomial(2));
    let seed = SolutionField::zeros_populated(&s.grid, 1, 1, 256);
    let mut opts = CompareOptions::new(&s.grid);
    opts.k_max = 1;
    let trace = monotone_iterate(&problem, &reg, &seed, Direction::Upward, 0.0, &opts).unwrap();
    assert_eq!(trace.iterates.len(), 2);
    for (i, row) in trace.iterates[1].chunks(256).enumerate() {
        let expected = 1.0 - s.grid.time(i);
        assert!(row.iter().all(|y| (y - expected).abs() < 1e-12), "node {i}");
    }
    assert!((trace.iterates[1][0] - 1.0).abs() <= 0.02);
    assert_eq!(trace.violations, vec![0.0]);
}

#[test]
fn driver_without_anticipation_stops_after_one_step() {
    let s = setup(8, 256, 5);
    let g = gen("cond_mean_plus", &[("a", 0.0)]);
    let free =
        free_term::build_free_term(&s.grid, &s.ensemble, 1, "brownian", &Params::new()).unwrap();
    let problem = Problem {
        grid: &s.grid,
        delays: &s.delays,
        generator: &g,
        free: &free,
    };
    let reg = Regressor::new(&s.ensemble, RegressionBasis::polynomial(2));
    let seed = SolutionField::zeros_populated(&s.grid, 1, 1, 256);
    let trace = monotone_iterate(
        &problem,
        &reg,
        &seed,
        Direction::Upward,
        0.0,
        &CompareOptions::new(&s.grid),
    )
    .unwrap();
    assert_eq!(trace.iterates.len(), 3);
    assert_eq!(trace.iterates[1], trace.iterates[2]);
    assert_eq!(*trace.cauchy_distances.last().unwrap(), 0.0);
}

#[test]
fn ordering_with_absolute_value_drivers() {
    let s = setup(8, 2048, 6);
    let gens = [
        gen(
            "cond_abs_plus",
            &[("a", -1.0), ("c", -core::f64::consts::LN_2)],
        ),
        gen("cond_abs_plus", &[("a", 1.0), ("c", core::f64::consts::PI)]),
        gen("cond_mean_plus", &[]),
    ];
    let sc = scenario(&s, gens, "brownian", (-0.5, 0.5));
    let reg = Regressor::new(&s.ensemble, RegressionBasis::polynomial(2));
    let opts = CompareOptions::new(&s.grid);
    let r = compare(&s.grid, &sc, &reg, &opts).unwrap();
    assert!(r.frac_ordered >= 0.99 && r.frac_sandwich >= 0.99);
    assert!(r.eps_mc > 0.0);
    for trace in [&r.downward, &r.upward] {
        assert!(trace.worst_violation() <= 0.01);
        let d = &trace.cauchy_distances;
        for k in 3..d.len() {
            if d[k - 1] > 0.0 {
                assert!(d[k] / d[k - 1] <= 0.9, "{d:?}");
            }
        }
    }
    assert!(r.limit_distance_down <= 3.0 * opts.tol);
    assert!(r.limit_distance_up <= 3.0 * opts.tol);
}

#[test]
fn invalid_scenarios_are_rejected() {
    let s = setup(4, 64, 7);
    let reg = Regressor::new(&s.ensemble, RegressionBasis::polynomial(2));
    let opts = CompareOptions::new(&s.grid);
    let g = gen("cond_mean_plus", &[]);
    let crossed = scenario(
        &s,
        [g.clone(), g.clone(), g.clone()],
        "brownian",
        (0.5, -0.5),
    );
    let unsandwiched = scenario(
        &s,
        [gen("cond_mean_plus", &[("c", 2.0)]), g.clone(), g.clone()],
        "brownian",
        (0.0, 0.0),
    );
    let decreasing = scenario(
        &s,
        [
            gen("cond_mean_plus", &[("a", -1.0), ("c", -100.0)]),
            g.clone(),
            gen("cond_mean_plus", &[("a", -1.0)]),
        ],
        "brownian",
        (0.0, 0.0),
    );
    let unreduced = scenario(
        &s,
        [gen("linear", &[("z_ahead", 0.1)]), g.clone(), g],
        "brownian",
        (0.0, 0.0),
    );
    for sc in [crossed, unsandwiched, decreasing, unreduced] {
        let e = compare(&s.grid, &sc, &reg, &opts).unwrap_err();
        assert!(matches!(e, Error::ScenarioInvalid(_)), "{e}");
        assert_eq!(e.name(), "ScenarioInvalid");
    }
}
