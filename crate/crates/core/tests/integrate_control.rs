use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carbonlab::control::{
    eval_adjoint_rhs, eval_controlled_rhs, solve_fbs, solve_fbs_from, AdjointState, OcpConfig,
};
use carbonlab::integrate::{integrate_rk4, scenario_sweep};
use carbonlab::model::{compute_bounds, Parameters, State};

const X0: State = State::new(130.0, 0.121, 1003.0, 80.0);

#[test]
fn box_starts_never_clamp() {
    let p = Parameters::default();
    let b = compute_bounds(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x0 = State::new(
            rng.gen_range(0.0..b.c_max),
            rng.gen_range(0.0..b.g_max),
            rng.gen_range(0.0..b.f_max),
            rng.gen_range(0.0..b.n_max),
        );
        let tr = integrate_rk4(&p, x0, 1000.0, 0.05).unwrap();
        assert_eq!(tr.clamp_events, 0);
        assert!(tr
            .states
            .iter()
            .all(|x| x.c >= 0.0 && x.g >= 0.0 && x.f >= 0.0 && x.n >= 0.0));
    }
}

#[test]
fn sweep_trajectories_equal_individual_runs() {
    let p = Parameters::default();
    let values = [0.005, 0.0065, 0.008];
    let runs = scenario_sweep(&p, "phi", &values, X0, 60.0, 0.05, 3).unwrap();
    for (tr, &v) in runs.iter().zip(&values) {
        let mut q = p;
        q.phi = v;
        assert_eq!(tr, &integrate_rk4(&q, X0, 60.0, 0.05).unwrap());
    }
}

fn hamiltonian(p: &Parameters, x: &State, lam: &AdjointState, u: f64, a: f64, b: f64) -> f64 {
    let f = eval_controlled_rhs(p, x, u);
    let l = lam.to_array();
    a * x.c + 0.5 * b * u * u + (0..4).map(|i| l[i] * f[i]).sum::<f64>()
}

#[test]
fn adjoint_is_minus_hamiltonian_gradient() {
    let p = Parameters::default();
    let (a, b) = (1e-4, 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x = State::new(
            rng.gen_range(50.0..300.0),
            rng.gen_range(0.0..30.0),
            rng.gen_range(500.0..11000.0),
            rng.gen_range(10.0..1500.0),
        );
        let lam = AdjointState::from_array([0; 4].map(|_| rng.gen_range(-1.0..1.0)));
        let u = rng.gen_range(0.0..0.008);
        let got = eval_adjoint_rhs(&p, &x, &lam, u, a);
        let base = x.to_array();
        for i in 0..4 {
            let h = 1e-2 * base[i].abs().max(1.0);
            let (mut hi, mut lo) = (base, base);
            hi[i] += h;
            lo[i] -= h;
            let d = (hamiltonian(&p, &State::from_array(hi), &lam, u, a, b)
                - hamiltonian(&p, &State::from_array(lo), &lam, u, a, b))
                / (2.0 * h);
            assert!(
                (got[i] + d).abs() <= 1e-5 * d.abs().max(1e-3),
                "component {i}: {} vs {}",
                got[i],
                -d
            );
        }
    }
}

#[test]
fn relaxed_sweep_objective_does_not_increase() {
    let p = Parameters::default();
    let sol = solve_fbs(&p, X0, &OcpConfig::default()).unwrap();
    assert!(sol.converged);
    for w in sol.objective_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{:?}", sol.objective_history);
    }
    assert!(sol.objective <= sol.objective_history[0]);
}

#[test]
fn converged_control_is_a_fixed_point() {
    let p = Parameters::default();
    let cfg = OcpConfig {
        tol: 1e-9,
        ..OcpConfig::default()
    };
    let sol = solve_fbs(&p, X0, &cfg).unwrap();
    let again = solve_fbs_from(&p, X0, &cfg, Some(&sol.u)).unwrap();
    assert!(again.iterations <= 2, "{}", again.iterations);
    let diff = sol
        .u
        .iter()
        .zip(&again.u)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn control_respects_bounds_and_terminal_condition() {
    let p = Parameters::default();
    let cfg = OcpConfig {
        weight_b: 0.01,
        ..OcpConfig::default()
    };
    let sol = solve_fbs(&p, X0, &cfg).unwrap();
    assert!(sol.u.iter().all(|&u| (0.0..=cfg.u_max).contains(&u)));
    assert!(sol.converged);
    assert!(cfg.u_max - sol.sup_u() <= 2.0 * cfg.tol * (1.0 + cfg.u_max));
    assert_eq!(sol.adjoints.last().unwrap().to_array(), [0.0; 4]);
}
