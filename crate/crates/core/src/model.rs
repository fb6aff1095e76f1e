//! The four-compartment CO2 / GDP / forest / population system.
//!
//! ```text
//! dC/dt = alpha + phi N + (beta - epsilon) G - eta C F - p C
//! dG/dt = mu - epsilon G
//! dF/dt = omega F (1 - F/K) - theta N F + eta sigma C F
//! dN/dt = s N (1 - N/M) + theta nu N F - pi C N
//! ```
//!
//! `C` is atmospheric CO2 (ppm), `G` GDP, `F` forest area (million ha) and
//! `N` population (millions).

use crate::error::{Error, Result};

/// Model constants. Field values are not checked on construction; call
/// [`Parameters::validate`] where inputs come from outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Natural CO2 emission rate.
    pub alpha: f64,
    /// Per-capita anthropogenic emission rate.
    pub phi: f64,
    /// GDP-linked emission coefficient.
    pub beta: f64,
    /// GDP-driven abatement rate; also the GDP decay rate.
    pub epsilon: f64,
    /// Natural CO2 decay rate.
    pub p: f64,
    /// CO2 depletion by forest.
    pub eta: f64,
    /// GDP source term.
    pub mu: f64,
    /// Intrinsic forest growth rate.
    pub omega: f64,
    /// Forest carrying capacity.
    pub big_k: f64,
    /// Deforestation coefficient.
    pub theta: f64,
    /// Forest growth from CO2 uptake (multiplies eta).
    pub sigma: f64,
    /// Intrinsic population growth rate.
    pub s: f64,
    /// Population carrying capacity.
    pub big_m: f64,
    /// Population growth from forest (multiplies theta).
    pub nu: f64,
    /// CO2-induced mortality coefficient.
    pub pi: f64,
}

/// Identifiers used by config files, sweeps and reports, in field order.
pub const PARAM_NAMES: [&str; 15] = [
    "alpha", "phi", "beta", "epsilon", "p", "eta", "mu", "omega", "K", "theta", "sigma", "s", "M",
    "nu", "pi_coeff",
];

impl Default for Parameters {
    /// The China 2000-2022 calibration, with eta = 1e-7.
    fn default() -> Self {
        Parameters {
            alpha: 1.68,
            phi: 0.008,
            beta: 0.0003,
            epsilon: 0.0008,
            p: 0.016,
            eta: 0.0000001,
            mu: 0.02145,
            omega: 0.06133,
            big_k: 11000.0,
            theta: 0.0004,
            sigma: 0.01,
            s: 0.00529,
            big_m: 1720.0,
            nu: 0.001,
            pi: 0.00005,
        }
    }
}

impl Parameters {
    pub fn validate(self) -> Result<Self> {
        for (name, value) in PARAM_NAMES.iter().zip(self.values()) {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        Ok(self)
    }

    pub fn values(&self) -> [f64; 15] {
        [
            self.alpha,
            self.phi,
            self.beta,
            self.epsilon,
            self.p,
            self.eta,
            self.mu,
            self.omega,
            self.big_k,
            self.theta,
            self.sigma,
            self.s,
            self.big_m,
            self.nu,
            self.pi,
        ]
    }

    pub fn from_values(v: [f64; 15]) -> Self {
        Parameters {
            alpha: v[0],
            phi: v[1],
            beta: v[2],
            epsilon: v[3],
            p: v[4],
            eta: v[5],
            mu: v[6],
            omega: v[7],
            big_k: v[8],
            theta: v[9],
            sigma: v[10],
            s: v[11],
            big_m: v[12],
            nu: v[13],
            pi: v[14],
        }
    }

    /// Index of a parameter identifier in [`PARAM_NAMES`].
    pub fn index_of(name: &str) -> Result<usize> {
        PARAM_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| Error::UnknownParameter {
                name: name.to_string(),
                valid: PARAM_NAMES.join(", "),
            })
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(self.values()[Self::index_of(name)?])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let mut v = self.values();
        v[Self::index_of(name)?] = value;
        *self = Self::from_values(v);
        Ok(())
    }

    /// Long-run GDP, mu / epsilon.
    pub fn gdp_star(&self) -> f64 {
        self.mu / self.epsilon
    }
}

/// A point (C, G, F, N) of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub c: f64,
    pub g: f64,
    pub f: f64,
    pub n: f64,
}

impl State {
    pub const fn new(c: f64, g: f64, f: f64, n: f64) -> Self {
        State { c, g, f, n }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c, self.g, self.f, self.n]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        State::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Time derivative of a [`State`], ordered (C, G, F, N).
pub type Derivative = [f64; 4];

pub type Jacobian = [[f64; 4]; 4];

pub fn eval_rhs(params: &Parameters, x: &State) -> Derivative {
    let Parameters {
        alpha,
        phi,
        beta,
        epsilon,
        p,
        eta,
        mu,
        omega,
        big_k,
        theta,
        sigma,
        s,
        big_m,
        nu,
        pi,
    } = *params;
    let State { c, g, f, n } = *x;
    [
        alpha + phi * n + (beta - epsilon) * g - eta * c * f - p * c,
        mu - epsilon * g,
        omega * f * (1.0 - f / big_k) - theta * n * f + eta * sigma * c * f,
        s * n * (1.0 - n / big_m) + theta * nu * n * f - pi * c * n,
    ]
}

/// Jacobian of [`eval_rhs`]; rows and columns ordered (C, G, F, N).
pub fn eval_jacobian(params: &Parameters, x: &State) -> Jacobian {
    let pr = params;
    let State { c, f, n, .. } = *x;
    [
        [
            -pr.eta * f - pr.p,
            pr.beta - pr.epsilon,
            -pr.eta * c,
            pr.phi,
        ],
        [0.0, -pr.epsilon, 0.0, 0.0],
        [
            pr.eta * pr.sigma * f,
            0.0,
            pr.omega - 2.0 * pr.omega / pr.big_k * f - pr.theta * n + pr.eta * pr.sigma * c,
            -pr.theta * f,
        ],
        [
            -pr.pi * n,
            0.0,
            pr.nu * pr.theta * n,
            pr.s - 2.0 * pr.s / pr.big_m * n + pr.nu * pr.theta * f - pr.pi * c,
        ],
    ]
}

/// Sup-norm of the vector field scaled per component by `max(1, |x_i|)`.
pub fn relative_residual(params: &Parameters, x: &State) -> f64 {
    let d = eval_rhs(params, x);
    x.to_array()
        .iter()
        .zip(d)
        .map(|(xi, di)| di.abs() / xi.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Upper corner of the attracting box `[0, c_max] x [0, g_max] x [0, f_max] x [0, n_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    pub c_max: f64,
    pub g_max: f64,
    pub f_max: f64,
    pub n_max: f64,
}

impl RegionBounds {
    pub fn as_state(&self) -> State {
        State::new(self.c_max, self.g_max, self.f_max, self.n_max)
    }

    /// Whether `x` lies in the box scaled by `1 + slack`.
    pub fn contains(&self, x: &State, slack: f64) -> bool {
        let hi = self.as_state().to_array();
        x.to_array()
            .iter()
            .zip(hi)
            .all(|(&v, h)| v >= 0.0 && v <= h * (1.0 + slack))
    }
}

/// Solves the coupled bound relations
///
/// ```text
/// c_max = (alpha + phi n_max + (beta - epsilon) g_max) / p
/// f_max = K (omega + eta sigma c_max) / omega
/// n_max = M + (theta nu M / s) f_max
/// ```
///
/// which are affine in each other, so substitution leaves one linear
/// equation in `c_max`.
pub fn compute_bounds(params: &Parameters) -> Result<RegionBounds> {
    let pr = params;
    let g_max = pr.mu / pr.epsilon;
    let n_per_f = pr.theta * pr.nu * pr.big_m / pr.s;
    let f_per_c = pr.big_k * pr.eta * pr.sigma / pr.omega;
    let denom = pr.p - pr.phi * n_per_f * f_per_c;
    if !(denom > 0.0) {
        return Err(Error::UnboundedRegion(format!(
            "linear bound system has non-positive denominator {denom:e}"
        )));
    }
    let numer =
        pr.alpha + pr.phi * (pr.big_m + n_per_f * pr.big_k) + (pr.beta - pr.epsilon) * g_max;
    let c_max = numer / denom;
    if !(c_max > 0.0) || !c_max.is_finite() {
        return Err(Error::UnboundedRegion(format!(
            "emission bound alpha + phi N_max + (beta - epsilon) G_max is not positive (c_max = {c_max})"
        )));
    }
    let f_max = pr.big_k + f_per_c * c_max;
    let n_max = pr.big_m + n_per_f * f_max;
    Ok(RegionBounds {
        c_max,
        g_max,
        f_max,
        n_max,
    })
}
