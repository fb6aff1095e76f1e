//! Small fixed-size numerics: polynomial roots up to degree three and a
//! pivoted dense solve.

use num_complex::Complex64;

/// Roots of `x^2 + b x + c`.
pub fn monic_quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

fn cubic_eval(a: f64, b: f64, c: f64, x: f64) -> (f64, f64) {
    let value = ((x + a) * x + b) * x + c;
    let slope = (3.0 * x + 2.0 * a) * x + b;
    (value, slope)
}

fn polish(a: f64, b: f64, c: f64, mut x: f64) -> f64 {
    for _ in 0..4 {
        let (v, d) = cubic_eval(a, b, c, x);
        if v == 0.0 || d == 0.0 {
            break;
        }
        let next = x - v / d;
        if cubic_eval(a, b, c, next).0.abs() >= v.abs() {
            break;
        }
        x = next;
    }
    x
}

/// Roots of `x^3 + a x^2 + b x + c`, closed form with Newton polishing of
/// the real roots.
pub fn monic_cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let pp = b - a * a / 3.0;
    let qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * qq * qq + pp * pp * pp / 27.0;

    if disc > 0.0 || pp == 0.0 {
        // one real root, then deflate to a quadratic
        let u = if disc > 0.0 {
            (-0.5 * qq - qq.signum() * disc.sqrt()).cbrt()
        } else {
            (-qq).cbrt()
        };
        let t = if u == 0.0 { 0.0 } else { u - pp / (3.0 * u) };
        let r = polish(a, b, c, t - shift);
        let [z1, z2] = monic_quadratic_roots(a + r, b + (a + r) * r);
        [Complex64::new(r, 0.0), z1, z2]
    } else {
        let m = 2.0 * (-pp / 3.0).sqrt();
        let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = polish(a, b, c, m * (theta - tau * k as f64).cos() - shift);
        }
        roots.map(|r| Complex64::new(r, 0.0))
    }
}

/// Solves `A x = rhs` for square `A` (row-major) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot vanishes.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, target) in lower.iter_mut().enumerate() {
            let row = col + 1 + offset;
            let factor = target[col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (t, p) in target[col..].iter_mut().zip(&pivot_row[col..]) {
                *t -= factor * p;
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / a[row][row];
    }
    Some(x)
}
