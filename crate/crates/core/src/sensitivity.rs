//! Global sensitivity analysis: Latin hypercube samples over the parameter
//! intervals and partial rank correlation of each compartment against each
//! parameter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::{integrate_rk4, with_pool};
use crate::linalg::solve_dense;
use crate::model::{Parameters, State, PARAM_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterRange {
    pub name: &'static str,
    pub baseline: f64,
    pub lower: f64,
    pub upper: f64,
}

/// One range per parameter, in [`PARAM_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    pub ranges: Vec<ParameterRange>,
}

impl ParameterSpace {
    /// Baselines and +-10% sampling intervals used by the `gsa` command.
    pub fn standard() -> Self {
        let rows: [(f64, f64, f64); 15] = [
            (1.68, 1.521, 1.848),
            (0.008, 0.0072, 0.0088),
            (0.0003, 0.00027, 0.00033),
            (0.0008, 0.00072, 0.00088),
            (0.016, 0.0144, 0.0176),
            (0.000001, 0.0000009, 0.0000011),
            (0.02145, 0.019305, 0.023595),
            (0.06133, 0.055197, 0.067463),
            (11000.0, 10000.0, 12000.0),
            (0.0004, 0.00036, 0.00044),
            (0.01, 0.009, 0.011),
            (0.00529, 0.004761, 0.005819),
            (1720.0, 1542.0, 1892.0),
            (0.001, 0.0009, 0.0011),
            (0.00005, 0.000045, 0.000055),
        ];
        let ranges = PARAM_NAMES
            .iter()
            .zip(rows)
            .map(|(&name, (baseline, lower, upper))| ParameterRange {
                name,
                baseline,
                lower,
                upper,
            })
            .collect();
        ParameterSpace { ranges }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ranges.len() != PARAM_NAMES.len() {
            return Err(Error::InvalidInput(format!(
                "parameter space needs {} ranges, got {}",
                PARAM_NAMES.len(),
                self.ranges.len()
            )));
        }
        for r in &self.ranges {
            if !(r.lower < r.upper) || !(r.lower <= r.baseline && r.baseline <= r.upper) {
                return Err(Error::InvalidInput(format!(
                    "range for {} must satisfy lower < upper and contain the baseline",
                    r.name
                )));
            }
        }
        Ok(())
    }
}

/// `rows[i][j]` is the value of parameter `j` in sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub rows: Vec<Vec<f64>>,
    pub seed: u64,
    pub space: ParameterSpace,
}

impl SampleMatrix {
    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// One point per equal-width stratum for every parameter, with an
/// independent random permutation per column.
pub fn lhs_sample(space: &ParameterSpace, n: usize, seed: u64) -> Result<SampleMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "LHS needs at least 2 samples, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![Vec::with_capacity(space.ranges.len()); n];
    for range in &space.ranges {
        let width = (range.upper - range.lower) / n as f64;
        let mut column: Vec<f64> = (0..n)
            .map(|k| range.lower + (k as f64 + rng.gen::<f64>()) * width)
            .collect();
        column.shuffle(&mut rng);
        for (row, v) in rows.iter_mut().zip(column) {
            row.push(v);
        }
    }
    Ok(SampleMatrix {
        rows,
        seed,
        space: space.clone(),
    })
}

/// Ranks starting at 1, ties receiving the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

/// Residual of `y` after least-squares regression on `predictors` plus an
/// intercept. All inputs are already centered.
fn regression_residual(y: &[f64], predictors: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let k = predictors.len();
    let mut gram = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for a in 0..k {
        for b in a..k {
            let dot: f64 = predictors[a]
                .iter()
                .zip(predictors[b].iter())
                .map(|(x, z)| x * z)
                .sum();
            gram[a][b] = dot;
            gram[b][a] = dot;
        }
        rhs[a] = predictors[a].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    let coef = solve_dense(gram, rhs)?;
    Some(
        y.iter()
            .enumerate()
            .map(|(i, &yi)| yi - (0..k).map(|a| coef[a] * predictors[a][i]).sum::<f64>())
            .collect(),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let ca = centered(a);
    let cb = centered(b);
    let sab: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
    let saa: f64 = ca.iter().map(|x| x * x).sum();
    let sbb: f64 = cb.iter().map(|x| x * x).sum();
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// PRCC of `outputs` against every column of `samples`.
pub fn prcc(samples: &SampleMatrix, outputs: &[f64]) -> Result<Vec<f64>> {
    let n = samples.n_samples();
    let k = samples.space.ranges.len();
    if outputs.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} outputs for {} samples",
            outputs.len(),
            n
        )));
    }
    if n <= k + 2 {
        return Err(Error::InvalidInput(format!(
            "PRCC needs more than {} samples, got {n}",
            k + 2
        )));
    }
    let mut ranked = Vec::with_capacity(k);
    for j in 0..k {
        let r = centered(&average_ranks(&samples.column(j)));
        if r.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateColumn(j));
        }
        ranked.push(r);
    }
    let y = centered(&average_ranks(outputs));
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateColumn(k));
    }
    (0..k)
        .map(|j| {
            let others: Vec<&Vec<f64>> = (0..k).filter(|&i| i != j).map(|i| &ranked[i]).collect();
            let rx = regression_residual(&ranked[j], &others).ok_or(Error::DegenerateColumn(j))?;
            let ry = regression_residual(&y, &others).ok_or(Error::DegenerateColumn(j))?;
            Ok(pearson(&rx, &ry))
        })
        .collect()
}

pub const COMPARTMENTS: [&str; 4] = ["C", "G", "F", "N"];

#[derive(Debug, Clone, PartialEq)]
pub struct GsaReport {
    /// `prcc[j][c]`: parameter `j` (in [`PARAM_NAMES`] order) against compartment `c` (C, G, F, N).
    pub prcc: Vec<[f64; 4]>,
    pub t_snap: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Samples whose integration failed and were left out.
    pub failed: usize,
}

impl GsaReport {
    pub fn get(&self, param: &str, compartment: &str) -> Option<f64> {
        let j = PARAM_NAMES.iter().position(|&n| n == param)?;
        let c = COMPARTMENTS.iter().position(|&n| n == compartment)?;
        Some(self.prcc[j][c])
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# n_samples={},seed={},t_snap={},failed={}\nparameter,C,G,F,N\n",
            self.n_samples, self.seed, self.t_snap, self.failed
        );
        for (name, row) in PARAM_NAMES.iter().zip(&self.prcc) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                name, row[0], row[1], row[2], row[3]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsaSettings {
    pub n: usize,
    pub t_snap: f64,
    pub x0: State,
    pub dt: f64,
    pub seed: u64,
    pub jobs: usize,
}

/// Samples the space, integrates each sample to `t_snap` and computes the
/// PRCC matrix. Failed integrations are dropped; more than 5% is an error.
pub fn run_gsa(space: &ParameterSpace, settings: &GsaSettings) -> Result<GsaReport> {
    space.validate()?;
    let k = space.ranges.len();
    if settings.n <= k + 2 {
        return Err(Error::InvalidInput(format!(
            "samples must be > {} for PRCC, got {}",
            k + 2,
            settings.n
        )));
    }
    let samples = lhs_sample(space, settings.n, settings.seed)?;
    let eval = |row: &Vec<f64>| -> Option<State> {
        let values: [f64; 15] = row.as_slice().try_into().ok()?;
        let params = Parameters::from_values(values);
        let tr = integrate_rk4(&params, settings.x0, settings.t_snap, settings.dt).ok()?;
        Some(*tr.last())
    };
    let finals: Vec<Option<State>> = if settings.jobs <= 1 {
        samples.rows.iter().map(eval).collect()
    } else {
        with_pool(settings.jobs, || {
            samples.rows.par_iter().map(eval).collect()
        })
    };

    let failed = finals.iter().filter(|f| f.is_none()).count();
    if failed * 20 > settings.n {
        return Err(Error::TooManyFailures {
            failed,
            total: settings.n,
        });
    }
    let kept: Vec<(Vec<f64>, State)> = samples
        .rows
        .iter()
        .zip(&finals)
        .filter_map(|(r, f)| f.map(|s| (r.clone(), s)))
        .collect();
    let subset = SampleMatrix {
        rows: kept.iter().map(|(r, _)| r.clone()).collect(),
        seed: settings.seed,
        space: space.clone(),
    };
    let per_compartment: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            let y: Vec<f64> = kept.iter().map(|(_, s)| s.to_array()[c]).collect();
            prcc(&subset, &y)
        })
        .collect::<Result<_>>()?;
    let prcc = (0..k)
        .map(|j| [0, 1, 2, 3].map(|c| per_compartment[c][j]))
        .collect();
    Ok(GsaReport {
        prcc,
        t_snap: settings.t_snap,
        n_samples: settings.n,
        seed: settings.seed,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stratum(r: &ParameterRange, n: usize, x: f64) -> usize {
        (((x - r.lower) / (r.upper - r.lower) * n as f64).floor() as usize).min(n - 1)
    }

    #[test]
    fn standard_space_is_consistent() {
        ParameterSpace::standard().validate().unwrap();
    }

    #[test]
    fn quartiles_each_hit_once() {
        let space = ParameterSpace::standard();
        for seed in 0..10 {
            let s = lhs_sample(&space, 4, seed).unwrap();
            for (j, r) in space.ranges.iter().enumerate() {
                let mut hits = [0; 4];
                for x in s.column(j) {
                    hits[stratum(r, 4, x)] += 1;
                }
                assert_eq!(hits, [1; 4]);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let space = ParameterSpace::standard();
        assert_eq!(
            lhs_sample(&space, 50, 7).unwrap(),
            lhs_sample(&space, 50, 7).unwrap()
        );
        assert_ne!(
            lhs_sample(&space, 50, 7).unwrap(),
            lhs_sample(&space, 50, 8).unwrap()
        );
    }

    #[test]
    fn column_means_near_midpoints() {
        let space = ParameterSpace::standard();
        let s = lhs_sample(&space, 1000, 3).unwrap();
        for (j, r) in space.ranges.iter().enumerate() {
            let mean = s.column(j).iter().sum::<f64>() / 1000.0;
            let mid = 0.5 * (r.lower + r.upper);
            assert!(((mean - mid) / mid).abs() < 0.02);
        }
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn perfect_copy_gives_one() {
        let space = ParameterSpace::standard();
        let s = lhs_sample(&space, 60, 1).unwrap();
        let y = s.column(4);
        let r = prcc(&s, &y).unwrap();
        assert!((r[4] - 1.0).abs() < 1e-10, "{}", r[4]);
    }

    #[test]
    fn too_few_samples() {
        let space = ParameterSpace::standard();
        let s = lhs_sample(&space, 17, 1).unwrap();
        let err = prcc(&s, &s.column(0)).unwrap_err();
        assert!(err.to_string().contains("more than 17"), "{err}");
    }

    #[test]
    fn constant_output_is_degenerate() {
        let space = ParameterSpace::standard();
        let s = lhs_sample(&space, 40, 1).unwrap();
        assert!(matches!(
            prcc(&s, &[1.0; 40]),
            Err(Error::DegenerateColumn(15))
        ));
    }

    #[test]
    fn gsa_rejects_small_n() {
        let settings = GsaSettings {
            n: 5,
            t_snap: 10.0,
            x0: State::new(130.0, 0.121, 1003.0, 80.0),
            dt: 0.1,
            seed: 1,
            jobs: 1,
        };
        let err = run_gsa(&ParameterSpace::standard(), &settings).unwrap_err();
        assert!(err.to_string().contains("> 17"), "{err}");
    }
}
