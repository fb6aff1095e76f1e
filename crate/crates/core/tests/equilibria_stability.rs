use nalgebra::{Matrix3, Matrix4};
use proptest::prelude::*;

use carbonlab::equilibria::{
    all_equilibria, equilibrium_e4, Equilibrium, EquilibriumKind, RootFindOptions,
};
use carbonlab::integrate::integrate_rk4;
use carbonlab::model::{compute_bounds, eval_jacobian, relative_residual, Parameters, State};
use carbonlab::stability::{
    characteristic_cubic, classify_local, eigenvalues_at, lyapunov_global_check, reduced_block,
};

fn scaled(factors: &[f64; 15]) -> Parameters {
    let base = Parameters::default().values();
    let mut v = [0.0; 15];
    for i in 0..15 {
        v[i] = base[i] * factors[i];
    }
    Parameters::from_values(v)
}

fn interior(p: &Parameters) -> Option<Equilibrium> {
    equilibrium_e4(p, &RootFindOptions::default()).ok()
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `det(lambda I - m)` expanded by cofactors.
fn char_poly_at(m: &[[f64; 3]; 3], lambda: f64) -> f64 {
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = if i == j { lambda } else { 0.0 } - m[i][j];
        }
    }
    det3(&a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn found_equilibria_are_fixed_points(f in prop::array::uniform15(0.8f64..1.2)) {
        let p = scaled(&f);
        let g = p.mu / p.epsilon;
        if let Ok(eqs) = all_equilibria(&p, &RootFindOptions::default()) {
            for e in eqs.iter().filter(|e| e.exists) {
                prop_assert!(relative_residual(&p, &e.state) < 1e-9, "{:?}", e);
                prop_assert_eq!(e.state.g, g);
            }
            let e4 = &eqs[3];
            prop_assert!(e4.state.f > 0.0 && e4.state.n > 0.0);
        }
    }

    #[test]
    fn eigenvalues_match_dense_solver(f in prop::array::uniform15(0.8f64..1.2)) {
        let p = scaled(&f);
        if let Some(e) = interior(&p) {
            let ours = eigenvalues_at(&p, &e);
            let j = eval_jacobian(&p, &e.state);
            let m = Matrix4::from_fn(|r, c| j[r][c]);
            let mut theirs: Vec<_> = m.complex_eigenvalues().iter().copied().collect();
            for z in &ours {
                let (k, d) = theirs
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (k, (w - z).norm()))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                prop_assert!(d < 1e-8, "{z} not in {theirs:?}");
                theirs.remove(k);
            }
        }
    }

    #[test]
    fn routh_coefficients_reproduce_characteristic_polynomial(
        f in prop::array::uniform15(0.8f64..1.2),
        lambda in -0.1f64..0.1,
    ) {
        let p = scaled(&f);
        if let Some(e) = interior(&p) {
            let m = reduced_block(&eval_jacobian(&p, &e.state));
            let (a1, a2, a3) = characteristic_cubic(&m);
            let poly = lambda.powi(3) + a1 * lambda.powi(2) + a2 * lambda + a3;
            let direct = char_poly_at(&m, lambda);
            prop_assert!((poly - direct).abs() <= 1e-12 * (1.0 + direct.abs()), "{poly} vs {direct}");
            let trace = Matrix3::from_fn(|r, c| m[r][c]).trace();
            prop_assert!((a1 + trace).abs() < 1e-14);
        }
    }

}

#[test]
fn perturbed_interior_point_relaxes_back() {
    let p = Parameters::default();
    let e = interior(&p).unwrap();
    assert!(classify_local(&p, &e).locally_stable);
    let x0 = State::new(
        e.state.c * 1.01,
        e.state.g * 0.99,
        e.state.f * 1.02,
        e.state.n * 0.98,
    );
    let dist = |x: &State| {
        let d = [
            x.c - e.state.c,
            x.g - e.state.g,
            x.f - e.state.f,
            x.n - e.state.n,
        ];
        let s = e.state.to_array();
        d.iter()
            .zip(&s)
            .map(|(a, b)| (a / b).abs())
            .fold(0.0, f64::max)
    };
    let tr = integrate_rk4(&p, x0, 6000.0, 0.05).unwrap();
    assert!(dist(tr.last()) < 1e-2 * dist(&x0));
}

#[test]
fn saddle_equilibria_are_left() {
    let p = Parameters::default();
    let eqs = all_equilibria(&p, &RootFindOptions::default()).unwrap();
    for e in eqs.iter().filter(|e| e.kind != EquilibriumKind::E4) {
        assert!(!classify_local(&p, e).locally_stable, "{}", e.kind);
        let x0 = State::new(e.state.c, e.state.g, e.state.f + 1.0, e.state.n + 1.0);
        let tr = integrate_rk4(&p, x0, 4000.0, 0.05).unwrap();
        assert!(relative_residual(&p, tr.last()) < 1e-3);
        let x = tr.last();
        assert!(x.f > 1.0 && x.n > 1.0, "{}: {x:?}", e.kind);
    }
}

#[test]
fn lyapunov_certified_case_converges() {
    let mut p = Parameters::default();
    p.eta = 1e-15;
    let e = interior(&p).unwrap();
    let bounds = compute_bounds(&p).unwrap();
    let g = lyapunov_global_check(&p, &e, &bounds);
    assert!(g.certified, "{g:?}");
    for x0 in [
        State::new(1.0, 1.0, 10.0, 1.0),
        State::new(bounds.c_max, bounds.g_max, bounds.f_max, bounds.n_max),
        State::new(50.0, 20.0, 9000.0, 300.0),
    ] {
        let tr = integrate_rk4(&p, x0, 20_000.0, 0.1).unwrap();
        let x = tr.last();
        assert!(
            (x.c - e.state.c).abs() < 1e-3 * e.state.c,
            "{x:?} vs {:?}",
            e.state
        );
        assert!((x.f - e.state.f).abs() < 1e-3 * e.state.f);
        assert!((x.n - e.state.n).abs() < 1e-3 * e.state.n);
    }
}
