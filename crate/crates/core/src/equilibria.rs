//! The four equilibria and their existence conditions.
//!
//! All four share `G = mu / epsilon`. `E1` has no forest or population,
//! `E2` no population, `E3` no forest, and `E4` is the interior point.
//! Closed forms are derived directly from the vector field with the
//! relevant components set to zero; the residual of the full 4-D field is
//! recorded for every point.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::model::{relative_residual, Parameters, State};

/// Residual bound that an existing equilibrium must meet.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    E1,
    E2,
    E3,
    E4,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EquilibriumKind::E1 => "E1",
            EquilibriumKind::E2 => "E2",
            EquilibriumKind::E3 => "E3",
            EquilibriumKind::E4 => "E4",
        };
        f.write_str(s)
    }
}

/// A named inequality `value > 0`, evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub satisfied: bool,
}

impl Condition {
    fn positive(name: &str, value: f64) -> Self {
        Condition {
            name: name.to_string(),
            value,
            satisfied: value > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub state: State,
    pub exists: bool,
    pub conditions: Vec<Condition>,
    pub residual_norm: f64,
}

impl Equilibrium {
    fn new(
        params: &Parameters,
        kind: EquilibriumKind,
        state: State,
        exists: bool,
        conditions: Vec<Condition>,
    ) -> Self {
        Equilibrium {
            kind,
            state,
            exists,
            conditions,
            residual_norm: relative_residual(params, &state),
        }
    }
}

/// `alpha + (beta - epsilon) mu / epsilon`: net emissions at `G*` with no
/// forest and no population.
fn net_emission(pr: &Parameters) -> f64 {
    pr.alpha + (pr.beta - pr.epsilon) * pr.gdp_star()
}

pub fn equilibrium_e1(params: &Parameters) -> Equilibrium {
    let g = params.gdp_star();
    let c = net_emission(params) / params.p;
    Equilibrium::new(
        params,
        EquilibriumKind::E1,
        State::new(c, g, 0.0, 0.0),
        c > 0.0,
        vec![Condition::positive("C1 > 0", c)],
    )
}

/// Positive root of `a C^2 + b C - k = 0` with `a, b > 0` via the
/// cancellation-free form of the quadratic formula.
fn positive_quadratic_root(a: f64, b: f64, k: f64) -> f64 {
    let c = -k;
    if a == 0.0 {
        return k / b;
    }
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { 0.0 };
    r1.max(r2)
}

pub fn equilibrium_e2(params: &Parameters) -> Equilibrium {
    let pr = params;
    let g = pr.gdp_star();
    let quad = pr.eta * pr.eta * pr.sigma * pr.big_k / pr.omega;
    let lin = pr.eta * pr.big_k + pr.p;
    let c = positive_quadratic_root(quad, lin, net_emission(pr));
    let f = pr.big_k * (pr.omega + pr.eta * pr.sigma * c) / pr.omega;
    let cond = pr.alpha * pr.epsilon + pr.mu * (pr.beta - pr.epsilon);
    Equilibrium::new(
        pr,
        EquilibriumKind::E2,
        State::new(c, g, f, 0.0),
        cond > 0.0,
        vec![Condition::positive(
            "alpha*epsilon + mu*(beta - epsilon) > 0",
            cond,
        )],
    )
}

pub fn equilibrium_e3(params: &Parameters) -> Equilibrium {
    let pr = params;
    let g = pr.gdp_star();
    let source = pr.epsilon * (pr.alpha + pr.phi * pr.big_m) + pr.mu * (pr.beta - pr.epsilon);
    let sink = pr.epsilon * (pr.s * pr.p + pr.pi * pr.phi * pr.big_m);
    let c = pr.s * source / sink;
    let n = pr.big_m * (1.0 - pr.pi * c / pr.s);
    Equilibrium::new(
        pr,
        EquilibriumKind::E3,
        State::new(c, g, 0.0, n),
        c > 0.0 && n > 0.0,
        vec![
            Condition::positive("epsilon*(alpha + phi*M) + mu*(beta - epsilon) > 0", source),
            Condition::positive(
                "epsilon*(s*p + pi*phi*M) - [epsilon*(alpha + phi*M) + mu*(beta - epsilon)] > 0",
                sink - source,
            ),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFindOptions {
    pub max_iter: usize,
    /// Stop when the Newton step is below this fraction of the iterate.
    pub step_tol: f64,
    /// Number of cells in the bracketing scan of the fallback.
    pub scan_cells: usize,
}

impl Default for RootFindOptions {
    fn default() -> Self {
        RootFindOptions {
            max_iter: 100,
            step_tol: 1e-14,
            scan_cells: 4000,
        }
    }
}

/// The interior system reduced to (F, N) after eliminating `C`:
///
/// ```text
/// C(F, N) = (alpha + phi N + (beta - epsilon) mu / epsilon) / (p + eta F)
/// a(F, N) = omega - omega F / K - theta N + eta sigma C
/// b(F, N) = s - s N / M + theta nu F - pi C
/// ```
#[derive(Debug, Clone, Copy)]
pub struct InteriorCurves {
    params: Parameters,
    base: f64,
}

impl InteriorCurves {
    pub fn new(params: &Parameters) -> Self {
        InteriorCurves {
            params: *params,
            base: net_emission(params),
        }
    }

    pub fn carbon(&self, f: f64, n: f64) -> f64 {
        let pr = &self.params;
        (self.base + pr.phi * n) / (pr.p + pr.eta * f)
    }

    pub fn residuals(&self, f: f64, n: f64) -> [f64; 2] {
        let pr = &self.params;
        let c = self.carbon(f, n);
        [
            pr.omega - pr.omega * f / pr.big_k - pr.theta * n + pr.eta * pr.sigma * c,
            pr.s - pr.s * n / pr.big_m + pr.theta * pr.nu * f - pr.pi * c,
        ]
    }

    /// Rows are the curves, columns d/dF and d/dN.
    pub fn jacobian(&self, f: f64, n: f64) -> [[f64; 2]; 2] {
        let pr = &self.params;
        let denom = pr.p + pr.eta * f;
        let c = self.carbon(f, n);
        let dc_df = -pr.eta * c / denom;
        let dc_dn = pr.phi / denom;
        [
            [
                -pr.omega / pr.big_k + pr.eta * pr.sigma * dc_df,
                -pr.theta + pr.eta * pr.sigma * dc_dn,
            ],
            [
                pr.theta * pr.nu - pr.pi * dc_df,
                -pr.s / pr.big_m - pr.pi * dc_dn,
            ],
        ]
    }

    /// Slope dN/dF of each curve at (F, N), by implicit differentiation.
    pub fn slopes(&self, f: f64, n: f64) -> [f64; 2] {
        let j = self.jacobian(f, n);
        [-j[0][0] / j[0][1], -j[1][0] / j[1][1]]
    }

    /// Curve a solved for N (it is linear in N); `None` where the N
    /// coefficient vanishes.
    pub fn curve_a_population(&self, f: f64) -> Option<f64> {
        let pr = &self.params;
        let denom = pr.p + pr.eta * f;
        let coeff = pr.theta - pr.eta * pr.sigma * pr.phi / denom;
        if coeff == 0.0 {
            return None;
        }
        Some((pr.omega * (1.0 - f / pr.big_k) + pr.eta * pr.sigma * self.base / denom) / coeff)
    }

    fn scaled_norm(&self, f: f64, n: f64) -> f64 {
        let pr = &self.params;
        let [ra, rb] = self.residuals(f, n);
        (ra / pr.omega).abs().max((rb / pr.s).abs())
    }
}

fn newton(
    curves: &InteriorCurves,
    start: (f64, f64),
    opts: &RootFindOptions,
) -> Option<(f64, f64)> {
    let (mut f, mut n) = start;
    for _ in 0..opts.max_iter {
        let r = curves.residuals(f, n);
        let j = curves.jacobian(f, n);
        let step = solve_dense(vec![j[0].to_vec(), j[1].to_vec()], vec![-r[0], -r[1]])?;
        let current = curves.scaled_norm(f, n);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (tf, tn) = (f + lambda * step[0], n + lambda * step[1]);
            let trial = curves.scaled_norm(tf, tn);
            if trial.is_finite() && (trial < current || trial == 0.0) {
                f = tf;
                n = tn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let small_step = (step[0].abs() <= opts.step_tol * f.abs().max(1.0))
            && (step[1].abs() <= opts.step_tol * n.abs().max(1.0));
        if small_step || (!accepted && current < 1e-15) {
            return Some((f, n));
        }
        if !accepted {
            return None;
        }
    }
    let done = curves.scaled_norm(f, n) < 1e-13;
    done.then_some((f, n))
}

/// Bisection on the population curve b along curve a, parameterized by F.
fn bracket_along_curve_a(curves: &InteriorCurves, opts: &RootFindOptions) -> Option<(f64, f64)> {
    let pr = &curves.params;
    let along = |f: f64| -> Option<f64> {
        let n = curves.curve_a_population(f)?;
        (n >= 0.0).then(|| curves.residuals(f, n)[1])
    };
    // curve a leaves the orthant before F reaches K (omega + eta sigma C) / omega
    let c_hi = (curves.base.abs() + 2.0 * pr.phi * pr.big_m) / pr.p;
    let f_hi = 2.0 * pr.big_k * (1.0 + pr.eta * pr.sigma * c_hi / pr.omega);
    let cells = opts.scan_cells.max(2);
    let width = f_hi / cells as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=cells {
        let f = i as f64 * width;
        let Some(v) = along(f) else {
            prev = None;
            continue;
        };
        if let Some((f0, v0)) = prev {
            if v0 == 0.0 {
                return Some((f0, curves.curve_a_population(f0)?));
            }
            if v0.signum() != v.signum() {
                let (mut lo, mut hi, mut vlo) = (f0, f, v0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let vm = along(mid)?;
                    if vm.signum() == vlo.signum() {
                        lo = mid;
                        vlo = vm;
                    } else {
                        hi = mid;
                    }
                }
                let f = 0.5 * (lo + hi);
                return Some((f, curves.curve_a_population(f)?));
            }
        }
        prev = Some((f, v));
    }
    None
}

/// The interior equilibrium E4, by damped Newton on the two curves with a
/// bracketing fallback. Existence conditions are reported, not enforced.
pub fn equilibrium_e4(params: &Parameters, opts: &RootFindOptions) -> Result<Equilibrium> {
    let pr = params;
    let curves = InteriorCurves::new(pr);
    let e2 = equilibrium_e2(pr);
    let e3 = equilibrium_e3(pr);
    let start = (e2.state.f, e3.state.n.max(1e-6 * pr.big_m));

    let seeded = newton(&curves, start, opts);
    let root = seeded
        .filter(|&(f, n)| f > 0.0 && n > 0.0)
        .or_else(|| {
            bracket_along_curve_a(&curves, opts)
                .and_then(|guess| newton(&curves, guess, opts).or(Some(guess)))
        })
        .or(seeded);
    let (f, n) = root.ok_or_else(|| Error::NoConvergence {
        iterations: opts.max_iter,
        f: start.0,
        n: start.1,
        residual: curves.scaled_norm(start.0, start.1),
    })?;

    let c = curves.carbon(f, n);
    let state = State::new(c, pr.gdp_star(), f, n);
    if !(c > 0.0 && f > 0.0 && n > 0.0) {
        return Err(Error::NegativeComponent(format!(
            "C = {c}, F = {f}, N = {n}"
        )));
    }
    let residual = relative_residual(pr, &state);
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::NoConvergence {
            iterations: opts.max_iter,
            f,
            n,
            residual,
        });
    }

    let eas = pr.epsilon * pr.alpha + pr.mu * (pr.beta - pr.epsilon);
    let lhs21 = pr.epsilon
        * pr.p
        * (pr.s * pr.p + pr.pi * pr.phi * pr.big_m)
        * (pr.epsilon * pr.omega * pr.p + pr.eta * pr.sigma * eas);
    let b_intercept =
        pr.epsilon * (pr.alpha + pr.s * pr.pi * pr.p) + pr.mu * (pr.beta - pr.epsilon);
    let rhs21 =
        pr.epsilon * pr.big_m * (pr.p * pr.theta - pr.eta * pr.sigma * pr.phi) * b_intercept;
    let conditions = vec![
        Condition::positive("N_a > N_b (existence inequality)", lhs21 - rhs21),
        Condition::positive(
            "p*theta - eta*sigma*phi > 0",
            pr.p * pr.theta - pr.eta * pr.sigma * pr.phi,
        ),
        Condition::positive(
            "epsilon*(alpha + s*pi*p) + mu*(beta - epsilon) > 0",
            b_intercept,
        ),
        Condition::positive(
            "-(epsilon*(s*p - alpha) - (beta - epsilon)) > 0",
            -(pr.epsilon * (pr.s * pr.p - pr.alpha) - (pr.beta - pr.epsilon)),
        ),
    ];
    Ok(Equilibrium {
        kind: EquilibriumKind::E4,
        state,
        exists: true,
        conditions,
        residual_norm: residual,
    })
}

/// E1 to E4 in order. E4 failures are returned as errors.
pub fn all_equilibria(params: &Parameters, opts: &RootFindOptions) -> Result<Vec<Equilibrium>> {
    Ok(vec![
        equilibrium_e1(params),
        equilibrium_e2(params),
        equilibrium_e3(params),
        equilibrium_e4(params, opts)?,
    ])
}
