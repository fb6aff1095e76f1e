//! Local and global stability of the equilibria.
//!
//! The GDP row of the Jacobian is `(0, -epsilon, 0, 0)`, so `-epsilon` is
//! always an eigenvalue and the rest of the spectrum comes from the 3x3
//! block on (C, F, N). Its characteristic cubic is solved in closed form.

use num_complex::Complex64;

use crate::equilibria::{Equilibrium, EquilibriumKind};
use crate::linalg::monic_cubic_roots;
use crate::model::{eval_jacobian, Jacobian, Parameters, RegionBounds};

const BLOCK: [usize; 3] = [0, 2, 3];

/// The Jacobian restricted to (C, F, N).
pub fn reduced_block(j: &Jacobian) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (r, &i) in BLOCK.iter().enumerate() {
        for (c, &k) in BLOCK.iter().enumerate() {
            out[r][c] = j[i][k];
        }
    }
    out
}

/// Coefficients `(A1, A2, A3)` of `psi^3 + A1 psi^2 + A2 psi + A3 = det(psi I - m)`.
pub fn characteristic_cubic(m: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    (-trace, minors, -det)
}

fn sort_by_real(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of the Jacobian at `eq`, ascending by real part.
pub fn eigenvalues_at(params: &Parameters, eq: &Equilibrium) -> [Complex64; 4] {
    let j = eval_jacobian(params, &eq.state);
    let (a1, a2, a3) = characteristic_cubic(&reduced_block(&j));
    let [r1, r2, r3] = monic_cubic_roots(a1, a2, a3);
    let mut out = [Complex64::new(-params.epsilon, 0.0), r1, r2, r3];
    sort_by_real(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl ConditionCheck {
    fn less(name: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            name: name.to_string(),
            lhs,
            rhs,
            satisfied: lhs < rhs,
        }
    }

    fn greater(name: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            name: name.to_string(),
            lhs,
            rhs,
            satisfied: lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthHurwitz {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `A1 A2 - A3`
    pub margin: f64,
}

impl RouthHurwitz {
    pub fn stable(&self) -> bool {
        self.a1 > 0.0 && self.a3 > 0.0 && self.margin > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub equilibrium_kind: EquilibriumKind,
    pub eigenvalues: [Complex64; 4],
    pub locally_stable: bool,
    pub routh: Option<RouthHurwitz>,
    pub condition_checks: Vec<ConditionCheck>,
}

pub fn routh_hurwitz_interior(params: &Parameters, e4: &Equilibrium) -> RouthHurwitz {
    let j = eval_jacobian(params, &e4.state);
    let (a1, a2, a3) = characteristic_cubic(&reduced_block(&j));
    RouthHurwitz {
        a1,
        a2,
        a3,
        margin: a1 * a2 - a3,
    }
}

/// Spectral classification plus the sufficient conditions specific to each
/// equilibrium. The eigenvalues decide `locally_stable`.
pub fn classify_local(params: &Parameters, eq: &Equilibrium) -> StabilityReport {
    let pr = params;
    let eigenvalues = eigenvalues_at(pr, eq);
    let locally_stable = eigenvalues.iter().all(|z| z.re < 0.0);
    let x = eq.state;
    let mut routh = None;
    let condition_checks = match eq.kind {
        EquilibriumKind::E1 => vec![ConditionCheck::greater(
            "F-direction eigenvalue omega + eta*sigma*C1 > 0 (unstable)",
            pr.omega + pr.eta * pr.sigma * x.c,
            0.0,
        )],
        EquilibriumKind::E2 => {
            let diag_f = pr.omega - 2.0 * pr.omega / pr.big_k * x.f + pr.eta * pr.sigma * x.c;
            let damp = pr.eta * x.f + pr.p;
            vec![
                ConditionCheck::less(
                    "N-direction eigenvalue s + nu*theta*F2 - pi*C2 < 0",
                    pr.s + pr.nu * pr.theta * x.f - pr.pi * x.c,
                    0.0,
                ),
                ConditionCheck::less(
                    "omega - 2*omega*F2/K + eta*sigma*C2 < min(eta*F2 + p, sigma*eta^2*F2*C2/(eta*F2 + p))",
                    diag_f,
                    damp.min(pr.sigma * pr.eta * pr.eta * x.f * x.c / damp),
                ),
            ]
        }
        EquilibriumKind::E3 => vec![
            ConditionCheck::less(
                "F-direction eigenvalue omega - theta*N3 + eta*sigma*C3 < 0",
                pr.omega - pr.theta * x.n + pr.eta * pr.sigma * x.c,
                0.0,
            ),
            // reproduced as printed in the source model analysis
            ConditionCheck::less(
                "s - 2*s/M - pi*C3 < min(p, pi*phi*N3/p)",
                pr.s - 2.0 * pr.s / pr.big_m - pr.pi * x.c,
                pr.p.min(pr.pi * pr.phi * x.n / pr.p),
            ),
        ],
        EquilibriumKind::E4 => {
            let rh = routh_hurwitz_interior(pr, eq);
            routh = Some(rh);
            vec![
                ConditionCheck::greater("A1 > 0", rh.a1, 0.0),
                ConditionCheck::greater("A3 > 0", rh.a3, 0.0),
                ConditionCheck::greater("A1*A2 - A3 > 0", rh.margin, 0.0),
            ]
        }
    };
    StabilityReport {
        equilibrium_kind: eq.kind,
        eigenvalues,
        locally_stable,
        routh,
        condition_checks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalStabilityReport {
    /// Weight on the forest term of the Lyapunov function, `nu phi / pi`.
    pub m1: f64,
    /// Weight on the population term, `phi / pi`.
    pub m2: f64,
    /// `(eta K / (m1 omega)) (m1 sigma - C_max)^2`
    pub forest_term: f64,
    /// `(beta - epsilon)^2 / epsilon`
    pub gdp_term: f64,
    pub lhs: f64,
    /// `2 (p + eta F4)`
    pub rhs: f64,
    pub certified: bool,
}

/// Sufficient condition for global stability of E4 inside the attracting box,
/// from the quadratic-plus-logarithmic Lyapunov function.
pub fn lyapunov_global_check(
    params: &Parameters,
    e4: &Equilibrium,
    bounds: &RegionBounds,
) -> GlobalStabilityReport {
    let pr = params;
    let m2 = pr.phi / pr.pi;
    let m1 = pr.nu * m2;
    let forest_term = pr.eta * pr.big_k / (m1 * pr.omega) * (m1 * pr.sigma - bounds.c_max).powi(2);
    let gdp_term = (pr.beta - pr.epsilon).powi(2) / pr.epsilon;
    let lhs = forest_term.max(gdp_term);
    let rhs = 2.0 * (pr.p + pr.eta * e4.state.f);
    GlobalStabilityReport {
        m1,
        m2,
        forest_term,
        gdp_term,
        lhs,
        rhs,
        certified: lhs < rhs,
    }
}
