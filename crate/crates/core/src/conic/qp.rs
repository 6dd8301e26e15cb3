//! Minimum-norm point of a polyhedron `{x : a_j·x ≥ b_j}` by a primal-dual
//! Mehrotra interior-point method on the normal equations `I + A^T D A`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LeastNormQp {
    pub n: usize,
    /// Rows `(a_j, b_j)` meaning `a_j·x ≥ b_j`.
    pub rows: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, Copy)]
pub struct QpTolerances {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpTolerances {
    fn default() -> Self {
        QpTolerances {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    /// `‖x − A^T z‖` relative to `max(1, ‖x‖)`.
    pub kkt_residual: f64,
}

struct Scaled {
    a: DMatrix<f64>,
    b: DVector<f64>,
    /// Original row index of each kept row and its norm.
    kept: Vec<(usize, f64)>,
    x_scale: f64,
}

fn scale_rows(q: &LeastNormQp) -> Result<Scaled> {
    let mut kept = Vec::new();
    for (j, (a, b)) in q.rows.iter().enumerate() {
        if a.len() != q.n || a.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidInput(format!("bad qp row {j}")));
        }
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            if *b > 0.0 {
                return Err(Error::Infeasible(format!("row {j} reads 0 >= {b}")));
            }
            continue;
        }
        kept.push((j, norm));
    }
    let m = kept.len();
    let mut a = DMatrix::zeros(m, q.n);
    let mut b = DVector::zeros(m);
    for (k, &(j, norm)) in kept.iter().enumerate() {
        for c in 0..q.n {
            a[(k, c)] = q.rows[j].0[c] / norm;
        }
        b[k] = q.rows[j].1 / norm;
    }
    let x_scale = b.amax().max(f64::MIN_POSITIVE);
    let x_scale = if b.amax() > 0.0 { x_scale } else { 1.0 };
    b /= x_scale;
    Ok(Scaled { a, b, kept, x_scale })
}

/// Minimizes `‖x‖²` subject to `a_j·x ≥ b_j`.
pub fn solve_least_norm(q: &LeastNormQp, tols: &QpTolerances) -> Result<QpSolution> {
    if q.n == 0 {
        return Err(Error::InvalidInput("qp dimension must be >= 1".into()));
    }
    let sc = scale_rows(q)?;
    let n = q.n;
    let m = sc.kept.len();
    let finish = |x: DVector<f64>, z: DVector<f64>, status: QpStatus, iterations: usize| {
        let kkt = (&x - sc.a.transpose() * &z).norm() / x.norm().max(1.0);
        let mut multipliers = vec![0.0; q.rows.len()];
        for (k, &(j, norm)) in sc.kept.iter().enumerate() {
            multipliers[j] = z[k] * sc.x_scale / norm;
        }
        QpSolution {
            x: (x * sc.x_scale).as_slice().to_vec(),
            multipliers,
            status,
            iterations,
            kkt_residual: kkt,
        }
    };
    if m == 0 || sc.b.max() <= 0.0 {
        // The origin is feasible.
        return Ok(finish(DVector::zeros(n), DVector::zeros(m), QpStatus::Optimal, 0));
    }
    let a = &sc.a;
    let at = a.transpose();
    let b = &sc.b;
    let mut x = DVector::zeros(n);
    let mut s = DVector::from_fn(m, |k, _| (-b[k]).max(1.0));
    let mut z = DVector::from_element(m, 1.0);
    let mut status = QpStatus::MaxIter;
    let mut iterations = 0;
    for iter in 0..tols.max_iter {
        iterations = iter;
        let rx = &x - &at * &z;
        let rs = a * &x - &s - b;
        let mu = s.dot(&z) / m as f64;
        if rx.amax() <= tols.tol * (1.0 + x.amax()) && rs.amax() <= tols.tol && mu <= tols.tol * tols.tol.sqrt() {
            status = QpStatus::Optimal;
            break;
        }
        // Farkas certificate: A^T z ≈ 0 with b·z > 0.
        let zn = z.sum();
        if zn > 1e8 {
            let zb = &z / zn;
            if (&at * &zb).norm() <= 1e-9 && b.dot(&zb) > 1e-9 {
                status = QpStatus::Infeasible;
                break;
            }
        }
        let d = z.component_div(&s);
        let mut nm = DMatrix::identity(n, n);
        let mut ad = a.clone();
        for k in 0..m {
            ad.row_mut(k).scale_mut(d[k]);
        }
        nm += &at * ad;
        let chol = match Cholesky::new(nm) {
            Some(c) => c,
            None => break,
        };
        let solve = |rc: &DVector<f64>| {
            let rhs = -&rx + &at * (rc.component_div(&s) - d.component_mul(&rs));
            let dx = chol.solve(&rhs);
            let dz = rc.component_div(&s) - d.component_mul(&(a * &dx + &rs));
            let ds = a * &dx + &rs;
            (dx, ds, dz)
        };
        let rc_aff = -s.component_mul(&z);
        let (_, ds_a, dz_a) = solve(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a)).min(1.0);
        let mu_aff = (&s + &ds_a * alpha_aff).dot(&(&z + &dz_a * alpha_aff)) / m as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc = DVector::from_element(m, sigma * mu) - s.component_mul(&z) - ds_a.component_mul(&dz_a);
        let (dx, ds, dz) = solve(&rc);
        let alpha = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        x += &dx * alpha;
        s += &ds * alpha;
        z += &dz * alpha;
    }
    if status == QpStatus::Infeasible {
        return Err(Error::Infeasible("least-norm qp has an empty feasible set".into()));
    }
    if let Some((xp, zp)) = polish(a, b, &x, &s, &z) {
        return Ok(finish(xp, zp, QpStatus::Optimal, iterations));
    }
    if status == QpStatus::MaxIter {
        // Final certificate check before reporting a cap.
        let zn = z.sum();
        let zb = &z / zn.max(f64::MIN_POSITIVE);
        if (&at * &zb).norm() <= 1e-7 && b.dot(&zb) > 1e-7 {
            return Err(Error::Infeasible("least-norm qp has an empty feasible set".into()));
        }
    }
    Ok(finish(x, z, status, iterations))
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(a, d)| -a / d)
        .fold(f64::INFINITY, f64::min)
}

/// Re-solves on the estimated active set, `x = A_J^T λ` with `A_J A_J^T λ = b_J`,
/// accepting the result when it is primal and dual feasible and no worse.
fn polish(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    s: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let m = a.nrows();
    let active: Vec<usize> = (0..m).filter(|&k| z[k] > s[k]).collect();
    if active.is_empty() {
        return None;
    }
    let aj = DMatrix::from_fn(active.len(), a.ncols(), |r, c| a[(active[r], c)]);
    let bj = DVector::from_fn(active.len(), |r, _| b[active[r]]);
    let gram = &aj * aj.transpose();
    let lambda = Cholesky::new(gram)?.solve(&bj);
    if lambda.iter().any(|l| *l < 0.0 || !l.is_finite()) {
        return None;
    }
    let xp = aj.transpose() * &lambda;
    let slack = a * &xp - b;
    if slack.iter().any(|v| *v < -1e-13) {
        return None;
    }
    if xp.norm_squared() > x.norm_squared() * (1.0 + 1e-9) + 1e-24 {
        return None;
    }
    let mut zp = DVector::zeros(m);
    for (r, &k) in active.iter().enumerate() {
        zp[k] = lambda[r];
    }
    Some((xp, zp))
}
