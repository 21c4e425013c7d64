use relaxed_control::benchmarks::by_name;
use relaxed_control::{project_pwm, pwm_fidelity_report, run, PwmConfig, RelaxedMixture, SolverConfig, TimeGrid};

fn solved(name: &str, dt: f64, iters: usize) -> (Box<dyn relaxed_control::benchmarks::Benchmark>, RelaxedMixture) {
    let b = by_name(name).unwrap();
    let grid = TimeGrid::new(b.horizon(), dt).unwrap();
    let mu0 = RelaxedMixture::dirac(b.initial_control(grid).unwrap());
    let cfg = SolverConfig { max_iters: iters, ..Default::default() };
    let mode = b.default_mode();
    let mu = run(&*b, mu0, &cfg, mode).unwrap().mu_final;
    (b, mu)
}

#[test]
fn double_tank_cycle_averages_stay_within_one_cell() {
    let (b, mu) = solved("double-tank", 0.01, 100);
    let cfg = PwmConfig::from_seconds(0.5, 0.01).unwrap();
    assert_eq!(cfg.cycle_steps, 50);
    let u = project_pwm(&*b, &mu, &cfg).unwrap();
    let report = pwm_fidelity_report(&*b, &mu, &u, &cfg).unwrap();
    assert!(report.max_cycle_deviation.unwrap() <= 0.02 + 1e-12, "{report:?}");
    assert!(report.delta_cost.abs() <= 0.02 * report.cost_relaxed);
}

#[test]
fn hybrid_projection_gap_is_small() {
    let (b, mu) = solved("hybrid-lqr", 0.01, 20);
    let cfg = PwmConfig::new(12).unwrap();
    let u = project_pwm(&*b, &mu, &cfg).unwrap();
    let report = pwm_fidelity_report(&*b, &mu, &u, &cfg).unwrap();
    assert!(report.max_cycle_deviation.is_none());
    assert!(report.delta_cost.abs() <= 3.5e-3, "{report:?}");
    assert!(u.values().iter().all(|v| [1.0, 2.0, 3.0].contains(&v[0]) && v[1].abs() <= 20.0));
}

#[test]
fn trailing_partial_cycle_is_projected_over_its_length() {
    let (b, mu) = solved("double-tank", 0.1, 10);
    let cfg = PwmConfig::new(7).unwrap();
    let u = project_pwm(&*b, &mu, &cfg).unwrap();
    assert_eq!(u.len(), 100);
    let report = pwm_fidelity_report(&*b, &mu, &u, &cfg).unwrap();
    assert!(report.max_cycle_deviation.unwrap() <= 1.0 / 2.0 + 1e-12);
}
