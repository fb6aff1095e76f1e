//! Fixed-step RK4 integration of the model, steady-state search and
//! one-parameter sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{eval_rhs, relative_residual, Parameters, State};

pub const DEFAULT_DT: f64 = 0.05;

/// One classic four-stage step of `dx/dt = rhs(t, x)`.
pub fn rk4_step<F>(rhs: F, t: f64, x: &[f64; 4], dt: f64) -> [f64; 4]
where
    F: Fn(f64, &[f64; 4]) -> [f64; 4],
{
    let axpy = |a: &[f64; 4], k: &[f64; 4], h: f64| -> [f64; 4] {
        [
            a[0] + h * k[0],
            a[1] + h * k[1],
            a[2] + h * k[2],
            a[3] + h * k[3],
        ]
    };
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * dt, &axpy(x, &k1, 0.5 * dt));
    let k3 = rhs(t + 0.5 * dt, &axpy(x, &k2, 0.5 * dt));
    let k4 = rhs(t + dt, &axpy(x, &k3, dt));
    let mut out = *x;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<State>,
    pub params: Parameters,
    /// Component values pushed below zero by a step and reset to zero.
    pub clamp_events: usize,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// `t,C,G,F,N` with shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,C,G,F,N\n");
        for (t, x) in self.t.iter().zip(&self.states) {
            out.push_str(&format!("{},{},{},{},{}\n", t, x.c, x.g, x.f, x.n));
        }
        out
    }
}

/// Number of whole steps of size `dt` that fit in `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    (t_end / dt * (1.0 + 1e-12)).floor() as usize
}

fn check_grid(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "dt must be positive (got {dt})"
        )));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t_end must be at least dt (got t_end = {t_end}, dt = {dt})"
        )));
    }
    Ok(())
}

fn check_start(x0: &State) -> Result<()> {
    if !x0.is_finite() || x0.to_array().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "initial state must be finite and nonnegative (got {x0:?})"
        )));
    }
    Ok(())
}

/// Advances one step and clamps negative components, returning the number clamped.
fn clamped_step(params: &Parameters, x: &State, dt: f64, step: usize) -> Result<(State, usize)> {
    let mut next = rk4_step(
        |_, y| eval_rhs(params, &State::from_array(*y)),
        0.0,
        &x.to_array(),
        dt,
    );
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonfiniteState { step });
    }
    let mut clamped = 0;
    for v in next.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    Ok((State::from_array(next), clamped))
}

/// Integrates on the grid `t_k = k dt` for `k = 0..=floor(t_end / dt)`.
pub fn integrate_rk4(params: &Parameters, x0: State, t_end: f64, dt: f64) -> Result<Trajectory> {
    check_grid(t_end, dt)?;
    check_start(&x0)?;
    let steps = step_count(t_end, dt);
    let mut t = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    t.push(0.0);
    states.push(x0);
    let mut clamp_events = 0;
    let mut x = x0;
    for k in 1..=steps {
        let (next, clamped) = clamped_step(params, &x, dt, k)?;
        clamp_events += clamped;
        x = next;
        t.push(k as f64 * dt);
        states.push(x);
    }
    Ok(Trajectory {
        t,
        states,
        params: *params,
        clamp_events,
    })
}

/// Integrates until the component-relative residual `|f_i| / max(1, |x_i|)`
/// drops below `tol` or `max_t` elapses. Returns the final state and whether
/// the tolerance was met.
pub fn steady_state(
    params: &Parameters,
    x0: State,
    tol: f64,
    max_t: f64,
    dt: f64,
) -> Result<(State, bool)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tol must be positive (got {tol})"
        )));
    }
    check_start(&x0)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt must be positive (got {dt})"
        )));
    }
    let steps = step_count(max_t, dt);
    let mut x = x0;
    for k in 0..steps {
        if relative_residual(params, &x) < tol {
            return Ok((x, true));
        }
        x = clamped_step(params, &x, dt, k + 1)?.0;
    }
    let done = relative_residual(params, &x) < tol;
    Ok((x, done))
}

/// Runs one trajectory per value of `param_name`, everything else held at
/// `params`. Output order follows `values`; `jobs > 1` evaluates in parallel
/// with identical results.
pub fn scenario_sweep(
    params: &Parameters,
    param_name: &str,
    values: &[f64],
    x0: State,
    t_end: f64,
    dt: f64,
    jobs: usize,
) -> Result<Vec<Trajectory>> {
    Parameters::index_of(param_name)?;
    let runs = values
        .iter()
        .map(|&v| {
            let mut p = *params;
            p.set(param_name, v)?;
            p.validate()
        })
        .collect::<Result<Vec<_>>>()?;
    let run = |p: &Parameters| integrate_rk4(p, x0, t_end, dt);
    if jobs <= 1 {
        runs.iter().map(run).collect()
    } else {
        with_pool(jobs, || runs.par_iter().map(run).collect())
    }
}

/// Runs `f` inside a dedicated rayon pool of `jobs` threads.
pub(crate) fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arithmetic() {
        let tr = integrate_rk4(
            &Parameters::default(),
            State::new(130.0, 0.121, 1003.0, 80.0),
            0.05,
            0.05,
        )
        .unwrap();
        assert_eq!(tr.t, vec![0.0, 0.05]);
        assert_eq!(tr.states.len(), 2);
        let tr = integrate_rk4(
            &Parameters::default(),
            State::new(1.0, 1.0, 1.0, 1.0),
            100.0,
            0.1,
        )
        .unwrap();
        assert_eq!(tr.t.len(), 1001);
        assert_eq!(*tr.t.last().unwrap(), 100.0);
    }

    #[test]
    fn first_sample_is_initial_condition() {
        let x0 = State::new(130.0, 0.121, 1003.0, 80.0);
        let tr = integrate_rk4(&Parameters::default(), x0, 10.0, 0.05).unwrap();
        assert_eq!(tr.states[0], x0);
        assert!(tr.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_grid() {
        let p = Parameters::default();
        let x0 = State::new(1.0, 1.0, 1.0, 1.0);
        assert!(integrate_rk4(&p, x0, 1.0, 0.0).is_err());
        assert!(integrate_rk4(&p, x0, 0.01, 0.05).is_err());
        assert!(integrate_rk4(&p, State::new(-1.0, 0.0, 0.0, 0.0), 1.0, 0.1).is_err());
    }

    #[test]
    fn gdp_matches_exact_solution() {
        let p = Parameters::default();
        let g0 = 0.121;
        let tr = integrate_rk4(&p, State::new(130.0, g0, 1003.0, 80.0), 100.0, 0.1).unwrap();
        let gs = p.mu / p.epsilon;
        let exact = gs + (g0 - gs) * (-p.epsilon * 100.0).exp();
        let got = tr.last().g;
        assert!(((got - exact) / exact).abs() < 1e-8, "{got} vs {exact}");
    }

    #[test]
    fn nonfinite_state_is_reported() {
        let mut p = Parameters::default();
        p.big_k = 1e-300;
        let err = integrate_rk4(&p, State::new(1.0, 1.0, 1e10, 1.0), 10.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::NonfiniteState { .. }), "{err}");
    }

    #[test]
    fn clamp_counts_undershoot() {
        // huge death rate on N drives one explicit step far below zero
        let mut p = Parameters::default();
        p.pi = 100.0;
        let tr = integrate_rk4(&p, State::new(130.0, 1.0, 100.0, 50.0), 1.0, 0.5).unwrap();
        assert!(tr.clamp_events > 0);
        assert!(tr.states.iter().all(|x| x.n >= 0.0));
    }

    #[test]
    fn short_horizon_does_not_converge() {
        let (_, ok) = steady_state(
            &Parameters::default(),
            State::new(130.0, 0.121, 1003.0, 80.0),
            1e-12,
            1.0,
            0.05,
        )
        .unwrap();
        assert!(!ok);
    }

    #[test]
    fn unknown_sweep_parameter() {
        let err = scenario_sweep(
            &Parameters::default(),
            "gamma",
            &[1.0],
            State::new(1.0, 1.0, 1.0, 1.0),
            1.0,
            0.1,
            1,
        )
        .unwrap_err()
        .to_string();
        assert!(
            err.contains("unknown parameter 'gamma'") && err.contains("nu"),
            "{err}"
        );
    }

    #[test]
    fn single_baseline_sweep_is_plain_run() {
        let p = Parameters::default();
        let x0 = State::new(130.0, 0.121, 1003.0, 80.0);
        let sweep = scenario_sweep(&p, "phi", &[p.phi], x0, 50.0, 0.05, 1).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0], integrate_rk4(&p, x0, 50.0, 0.05).unwrap());
    }

    #[test]
    fn parallel_sweep_matches_sequential() {
        let p = Parameters::default();
        let x0 = State::new(130.0, 0.121, 1003.0, 80.0);
        let values = [0.005, 0.006, 0.007, 0.008];
        let a = scenario_sweep(&p, "phi", &values, x0, 20.0, 0.05, 1).unwrap();
        let b = scenario_sweep(&p, "phi", &values, x0, 20.0, 0.05, 4).unwrap();
        assert_eq!(a, b);
        for (tr, v) in a.iter().zip(values) {
            assert_eq!(tr.params.phi, v);
        }
    }

    #[test]
    fn sweep_rejects_invalid_value() {
        let p = Parameters::default();
        let x0 = State::new(1.0, 1.0, 1.0, 1.0);
        assert!(scenario_sweep(&p, "mu", &[-1.0], x0, 1.0, 0.1, 1).is_err());
    }
}
