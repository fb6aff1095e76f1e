//! Optimal GDP-funded abatement.
//!
//! The abatement effort `u(t)` replaces the constant rate `epsilon` in the
//! CO2 and GDP equations. The running cost is `A C + (B/2) u^2` over
//! `[0, t_f]`, and candidate controls come from the Pontryagin conditions:
//! adjoints integrated backward from zero terminal data, then
//! `u = clamp((lam1 + lam2) G / B, 0, u_max)`. The forward-backward sweep
//! iterates that map with relaxation.

use crate::error::{Error, Result};
use crate::integrate::{rk4_step, step_count};
use crate::model::{Derivative, Parameters, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcpConfig {
    /// Cost weight on C(t).
    pub weight_a: f64,
    /// Cost weight on u(t)^2 / 2.
    pub weight_b: f64,
    pub u_max: f64,
    pub t_f: f64,
    pub dt: f64,
    /// Fraction of the new candidate mixed into the control each sweep.
    pub relax: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OcpConfig {
    fn default() -> Self {
        OcpConfig {
            weight_a: 0.0001,
            weight_b: 10.0,
            u_max: 0.008,
            t_f: 100.0,
            dt: 0.05,
            relax: 0.5,
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

impl OcpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(what.to_string()));
        if !(self.weight_a >= 0.0) {
            return bad("weight A must be nonnegative");
        }
        if !(self.weight_b > 0.0) {
            return bad("weight B must be positive");
        }
        if !(self.u_max > 0.0) {
            return bad("u_max must be positive");
        }
        if !(self.relax > 0.0 && self.relax <= 1.0) {
            return bad("relax must lie in (0, 1]");
        }
        if !(self.dt > 0.0 && self.t_f >= self.dt) {
            return bad("need dt > 0 and t_f >= dt");
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("need tol > 0 and max_iter >= 1");
        }
        Ok(())
    }
}

/// Costates paired with (C, G, F, N).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjointState {
    pub lam1: f64,
    pub lam2: f64,
    pub lam3: f64,
    pub lam4: f64,
}

impl AdjointState {
    pub fn to_array(self) -> [f64; 4] {
        [self.lam1, self.lam2, self.lam3, self.lam4]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        AdjointState {
            lam1: a[0],
            lam2: a[1],
            lam3: a[2],
            lam4: a[3],
        }
    }
}

pub fn eval_controlled_rhs(params: &Parameters, x: &State, u: f64) -> Derivative {
    let pr = params;
    let State { c, g, f, n } = *x;
    [
        pr.alpha + pr.phi * n + (pr.beta - u) * g - pr.eta * c * f - pr.p * c,
        pr.mu - u * g,
        pr.omega * f * (1.0 - f / pr.big_k) - pr.theta * n * f + pr.eta * pr.sigma * c * f,
        pr.s * n * (1.0 - n / pr.big_m) + pr.theta * pr.nu * n * f - pr.pi * c * n,
    ]
}

/// `-dH/dx` for the Hamiltonian `A C + (B/2) u^2 + lam . f(x, u)`.
pub fn eval_adjoint_rhs(
    params: &Parameters,
    x: &State,
    lam: &AdjointState,
    u: f64,
    weight_a: f64,
) -> [f64; 4] {
    let pr = params;
    let State { c, f, n, .. } = *x;
    let AdjointState {
        lam1,
        lam2,
        lam3,
        lam4,
    } = *lam;
    [
        -weight_a + lam1 * (pr.eta * f + pr.p) - lam3 * pr.eta * pr.sigma * f + lam4 * pr.pi * n,
        lam1 * (u - pr.beta) + lam2 * u,
        lam1 * pr.eta * c
            - lam3 * (pr.omega * (1.0 - 2.0 * f / pr.big_k) - pr.theta * n + pr.eta * pr.sigma * c)
            - lam4 * pr.theta * pr.nu * n,
        -lam1 * pr.phi + lam3 * pr.theta * f
            - lam4 * (pr.s * (1.0 - 2.0 * n / pr.big_m) + pr.theta * pr.nu * f - pr.pi * c),
    ]
}

/// Minimizer of the Hamiltonian over `[0, u_max]`.
pub fn control_law(lam: &AdjointState, g: f64, weight_b: f64, u_max: f64) -> f64 {
    ((lam.lam1 + lam.lam2) * g / weight_b).clamp(0.0, u_max)
}

/// Trapezoidal quadrature of `A C + (B/2) u^2` on the grid `t`.
pub fn objective(
    t: &[f64],
    states: &[State],
    u: &[f64],
    weight_a: f64,
    weight_b: f64,
) -> Result<f64> {
    if t.len() != states.len() || t.len() != u.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} times, {} states, {} controls",
            t.len(),
            states.len(),
            u.len()
        )));
    }
    let integrand: Vec<f64> = states
        .iter()
        .zip(u)
        .map(|(x, &v)| weight_a * x.c + 0.5 * weight_b * v * v)
        .collect();
    Ok(t.windows(2)
        .zip(integrand.windows(2))
        .map(|(tw, y)| 0.5 * (tw[1] - tw[0]) * (y[0] + y[1]))
        .sum())
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

fn lerp_state(a: &State, b: &State, w: f64) -> State {
    State::new(
        lerp(a.c, b.c, w),
        lerp(a.g, b.g, w),
        lerp(a.f, b.f, w),
        lerp(a.n, b.n, w),
    )
}

/// RK4 of the controlled system with `u` linear between grid nodes.
/// Returns `None` on a nonfinite state.
pub fn forward_controlled(
    params: &Parameters,
    x0: State,
    u: &[f64],
    dt: f64,
) -> Option<Vec<State>> {
    let mut states = Vec::with_capacity(u.len());
    states.push(x0);
    let mut x = x0.to_array();
    for k in 0..u.len().saturating_sub(1) {
        let (u0, u1) = (u[k], u[k + 1]);
        x = rk4_step(
            |tau, y| eval_controlled_rhs(params, &State::from_array(*y), lerp(u0, u1, tau / dt)),
            0.0,
            &x,
            dt,
        );
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        states.push(State::from_array(x));
    }
    Some(states)
}

/// Backward RK4 of the adjoint system from `lam(t_f) = 0`, interpolating
/// states and control linearly at the stage times.
pub fn backward_adjoint(
    params: &Parameters,
    states: &[State],
    u: &[f64],
    dt: f64,
    weight_a: f64,
) -> Option<Vec<AdjointState>> {
    let n = states.len();
    let mut lam = vec![AdjointState::default(); n];
    let mut l = [0.0; 4];
    for k in (1..n).rev() {
        let (xa, xb) = (states[k], states[k - 1]);
        let (ua, ub) = (u[k], u[k - 1]);
        l = rk4_step(
            |tau, y| {
                let w = -tau / dt;
                eval_adjoint_rhs(
                    params,
                    &lerp_state(&xa, &xb, w),
                    &AdjointState::from_array(*y),
                    lerp(ua, ub, w),
                    weight_a,
                )
            },
            0.0,
            &l,
            -dt,
        );
        if l.iter().any(|v| !v.is_finite()) {
            return None;
        }
        lam[k - 1] = AdjointState::from_array(l);
    }
    Some(lam)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub states: Vec<State>,
    pub adjoints: Vec<AdjointState>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the control entering each sweep.
    pub objective_history: Vec<f64>,
}

impl OptimalSolution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,C,G,F,N,lam1,lam2,lam3,lam4\n");
        for (((t, u), x), l) in self
            .t
            .iter()
            .zip(&self.u)
            .zip(&self.states)
            .zip(&self.adjoints)
        {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                t, u, x.c, x.g, x.f, x.n, l.lam1, l.lam2, l.lam3, l.lam4
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "J={},iterations={},converged={}",
            self.objective, self.iterations, self.converged
        )
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }
}

pub fn time_grid(t_f: f64, dt: f64) -> Vec<f64> {
    (0..=step_count(t_f, dt)).map(|k| k as f64 * dt).collect()
}

/// One sweep: states and adjoints for `u`, and the unrelaxed candidate.
fn sweep(
    params: &Parameters,
    x0: State,
    u: &[f64],
    cfg: &OcpConfig,
    iteration: usize,
) -> Result<(Vec<State>, Vec<AdjointState>, Vec<f64>)> {
    let states =
        forward_controlled(params, x0, u, cfg.dt).ok_or(Error::NonfiniteSweep { iteration })?;
    let lam = backward_adjoint(params, &states, u, cfg.dt, cfg.weight_a)
        .ok_or(Error::NonfiniteSweep { iteration })?;
    let candidate = states
        .iter()
        .zip(&lam)
        .map(|(x, l)| control_law(l, x.g, cfg.weight_b, cfg.u_max))
        .collect();
    Ok((states, lam, candidate))
}

/// Forward-backward sweep from the initial guess `u = 0`. States, adjoints
/// and objective in the result belong to the returned control.
pub fn solve_fbs(params: &Parameters, x0: State, cfg: &OcpConfig) -> Result<OptimalSolution> {
    solve_fbs_from(params, x0, cfg, None)
}

/// As [`solve_fbs`], starting from `initial` when given.
pub fn solve_fbs_from(
    params: &Parameters,
    x0: State,
    cfg: &OcpConfig,
    initial: Option<&[f64]>,
) -> Result<OptimalSolution> {
    cfg.validate()?;
    if !x0.is_finite() || x0.to_array().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "initial state must be finite and nonnegative (got {x0:?})"
        )));
    }
    let t = time_grid(cfg.t_f, cfg.dt);
    let mut u = match initial {
        Some(guess) if guess.len() == t.len() => {
            guess.iter().map(|v| v.clamp(0.0, cfg.u_max)).collect()
        }
        Some(guess) => {
            return Err(Error::InvalidInput(format!(
                "initial control has {} nodes, grid has {}",
                guess.len(),
                t.len()
            )))
        }
        None => vec![0.0; t.len()],
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iteration in 1..=cfg.max_iter {
        iterations = iteration;
        let (states, _, candidate) = sweep(params, x0, &u, cfg, iteration)?;
        history.push(objective(&t, &states, &u, cfg.weight_a, cfg.weight_b)?);
        let mut change: f64 = 0.0;
        for (ui, ci) in u.iter_mut().zip(&candidate) {
            let next = (cfg.relax * ci + (1.0 - cfg.relax) * *ui).clamp(0.0, cfg.u_max);
            change = change.max((next - *ui).abs());
            *ui = next;
        }
        let scale = 1.0 + u.iter().copied().fold(0.0, f64::max);
        if change < cfg.tol * scale {
            converged = true;
            break;
        }
    }
    let (states, adjoints, _) = sweep(params, x0, &u, cfg, iterations + 1)?;
    let objective = objective(&t, &states, &u, cfg.weight_a, cfg.weight_b)?;
    Ok(OptimalSolution {
        t,
        u,
        states,
        adjoints,
        objective,
        iterations,
        converged,
        objective_history: history,
    })
}

/// Trajectory and cost of a constant control on the same grid.
pub fn constant_control_run(
    params: &Parameters,
    x0: State,
    cfg: &OcpConfig,
    u_const: f64,
) -> Result<(Vec<f64>, Vec<State>, f64)> {
    let t = time_grid(cfg.t_f, cfg.dt);
    let u = vec![u_const; t.len()];
    let states =
        forward_controlled(params, x0, &u, cfg.dt).ok_or(Error::NonfiniteState { step: 0 })?;
    let j = objective(&t, &states, &u, cfg.weight_a, cfg.weight_b)?;
    Ok((t, states, j))
}
