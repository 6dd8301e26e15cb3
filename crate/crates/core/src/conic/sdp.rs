//! Homogeneous self-dual primal-dual interior-point method for
//!
//! ```text
//! min ⟨C, X⟩ + c·x   s.t.  ⟨A_k, X⟩ + a_k·x = b_k,   X ⪰ 0 (Hermitian),  x ≥ 0
//! ```
//!
//! using the HKM search direction and Mehrotra predictor-corrector steps.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{ConstraintSense, SdpMatrix, SdpProblem, SdpSolution, SdpStatus, SdpTolerances, Sense};
use crate::error::{Error, Result};
use crate::numerics::{cmatmul, hermitian_inner, ComplexMatrix, ComplexVector, HermitianMatrix, C64};

const STEP_FRACTION: f64 = 0.99;

struct Row {
    mat: SdpMatrix,
    scale: f64,
    lp: Vec<(usize, f64)>,
    b: f64,
}

struct Data {
    n: usize,
    p: usize,
    rows: Vec<Row>,
    c_mat: SdpMatrix,
    c_fac: f64,
    c_dense: ComplexMatrix,
    c_zero: bool,
    c_lp: Vec<f64>,
    b: Vec<f64>,
    a_lp: DMatrix<f64>,
}

struct Iterate {
    x: ComplexMatrix,
    s: ComplexMatrix,
    xl: Vec<f64>,
    sl: Vec<f64>,
    y: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rp: Vec<f64>,
    rd: ComplexMatrix,
    rd_lp: Vec<f64>,
    rg: f64,
}

struct Factors {
    /// Inverse Cholesky factors `L_X^{-1}`, `L_S^{-1}`.
    lx_inv: ComplexMatrix,
    ls_inv: ComplexMatrix,
    sinv: ComplexMatrix,
}

struct Direction {
    dx: ComplexMatrix,
    ds: ComplexMatrix,
    dxl: Vec<f64>,
    dsl: Vec<f64>,
    dy: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Precomputed quantities that do not depend on the right-hand side.
struct Newton {
    schur: Cholesky<f64, Dyn>,
    u: Vec<f64>,
    /// `W(r_d)`, shared by predictor and corrector.
    wrd: ComplexMatrix,
    dy2: Vec<f64>,
    cwc: f64,
}

/// Solves an SDP with a Hermitian PSD matrix variable and nonnegative scalars.
pub fn solve_sdp(problem: &SdpProblem, tols: &SdpTolerances) -> Result<SdpSolution> {
    let (data, b_scale, n_user) = lower(problem)?;
    let mut sol = run(&data, tols);
    // Undo objective and right-hand-side scaling; `c_fac` carries the sense sign.
    sol.objective_value *= b_scale / data.c_fac;
    sol.dual_value *= b_scale / data.c_fac;
    sol.duality_gap *= b_scale / data.c_fac.abs();
    if sol.status == SdpStatus::Optimal
        && sol.duality_gap > tols.gap * (1.0 + sol.objective_value.abs())
    {
        sol.status = SdpStatus::MaxIter;
    }
    if sol.status != SdpStatus::Infeasible {
        let x = sol.primal_matrix.as_matrix() * C64::new(b_scale, 0.0);
        sol.primal_matrix = HermitianMatrix::from_hermitian_part(&x);
        for v in sol.scalar_values.iter_mut() {
            *v *= b_scale;
        }
    }
    sol.scalar_values.truncate(n_user);
    Ok(sol)
}

fn lower(problem: &SdpProblem) -> Result<(Data, f64, usize)> {
    let n = problem.dim;
    if n == 0 {
        return Err(Error::InvalidInput("sdp dimension must be >= 1".into()));
    }
    if problem.scalar_objective.len() != problem.scalar_vars {
        return Err(Error::InvalidInput("scalar objective length mismatch".into()));
    }
    if !problem.objective.check_dim(n) {
        return Err(Error::InvalidInput("objective matrix has wrong dimension".into()));
    }
    let n_user = problem.scalar_vars;
    let mut p = n_user;
    let mut rows: Vec<Row> = Vec::new();
    for c in &problem.constraints {
        if !c.matrix.check_dim(n) {
            return Err(Error::InvalidInput("constraint matrix has wrong dimension".into()));
        }
        if !(c.rhs - c.offset).is_finite() {
            return Err(Error::InvalidInput("non-finite constraint rhs".into()));
        }
        let mut lp = Vec::new();
        for &(j, a) in &c.scalar_coeffs {
            if j >= n_user || !a.is_finite() {
                return Err(Error::InvalidInput("bad scalar coefficient".into()));
            }
            lp.push((j, a));
        }
        // Row equilibration. Slack coefficients stay at ±1 since the slack
        // variable absorbs the row scale.
        let lp_norm = lp.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        let mat_norm = if c.matrix.is_zero() { 0.0 } else { c.matrix.frobenius_norm() };
        let norm = mat_norm.max(lp_norm);
        let rhs = c.rhs - c.offset;
        if norm == 0.0 {
            let ok = match c.sense {
                ConstraintSense::Ge => rhs <= 0.0,
                ConstraintSense::Le => rhs >= 0.0,
                ConstraintSense::Eq => rhs == 0.0,
            };
            if !ok {
                return Err(Error::Infeasible("constraint with zero coefficients cannot hold".into()));
            }
            continue;
        }
        for (_, a) in lp.iter_mut() {
            *a /= norm;
        }
        match c.sense {
            ConstraintSense::Ge => {
                lp.push((p, -1.0));
                p += 1;
            }
            ConstraintSense::Le => {
                lp.push((p, 1.0));
                p += 1;
            }
            ConstraintSense::Eq => {}
        }
        rows.push(Row {
            mat: c.matrix.clone(),
            scale: 1.0 / norm,
            lp,
            b: rhs / norm,
        });
    }
    if problem.unit_diagonal {
        for j in 0..n {
            rows.push(Row {
                mat: SdpMatrix::Unit(j),
                scale: 1.0,
                lp: Vec::new(),
                b: 1.0,
            });
        }
    }
    let b_max = rows.iter().map(|r| r.b.abs()).fold(0.0, f64::max);
    let b_scale = if b_max > 0.0 { b_max } else { 1.0 };
    for r in rows.iter_mut() {
        r.b /= b_scale;
    }
    let sign = if problem.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let c_norm = if problem.objective.is_zero() { 0.0 } else { problem.objective.frobenius_norm() }
        .max(problem.scalar_objective.iter().map(|a| a.abs()).fold(0.0, f64::max));
    let c_fac = if c_norm > 0.0 { 1.0 / c_norm } else { 1.0 };
    let c_mat = problem.objective.clone();
    let mut c_lp = vec![0.0; p];
    for (j, &a) in problem.scalar_objective.iter().enumerate() {
        c_lp[j] = sign * c_fac * a;
    }
    let c_dense = c_mat.to_dense(n) * C64::new(sign * c_fac, 0.0);
    let b: Vec<f64> = rows.iter().map(|r| r.b).collect();
    let mut a_lp = DMatrix::zeros(rows.len(), p);
    for (k, r) in rows.iter().enumerate() {
        for &(j, a) in &r.lp {
            a_lp[(k, j)] += a;
        }
    }
    let data = Data {
        n,
        p,
        rows,
        c_mat,
        c_fac: sign * c_fac,
        c_zero: problem.objective.is_zero(),
        c_dense,
        c_lp,
        b,
        a_lp,
    };
    Ok((data, b_scale, n_user))
}

impl Data {
    fn m(&self) -> usize {
        self.rows.len()
    }

    fn a_op(&self, x: &ComplexMatrix, xl: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.scale * r.mat.inner(x) + r.lp.iter().map(|&(j, a)| a * xl[j]).sum::<f64>())
            .collect()
    }

    fn at_op(&self, y: &[f64]) -> (ComplexMatrix, Vec<f64>) {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        let mut l = vec![0.0; self.p];
        for (r, &yk) in self.rows.iter().zip(y) {
            if yk != 0.0 {
                r.mat.add_scaled_to(&mut m, yk * r.scale);
            }
            for &(j, a) in &r.lp {
                l[j] += a * yk;
            }
        }
        (m, l)
    }

    fn c_inner(&self, x: &ComplexMatrix, xl: &[f64]) -> f64 {
        self.c_fac * self.c_mat.inner(x) + dot(&self.c_lp, xl)
    }

    fn residuals(&self, it: &Iterate) -> Residuals {
        let ax = self.a_op(&it.x, &it.xl);
        let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b * it.tau - a).collect();
        let (aty, aty_l) = self.at_op(&it.y);
        let rd = &self.c_dense * C64::new(it.tau, 0.0) - aty - &it.s;
        let rd_lp: Vec<f64> = (0..self.p)
            .map(|j| self.c_lp[j] * it.tau - aty_l[j] - it.sl[j])
            .collect();
        let rg = it.kappa + self.c_inner(&it.x, &it.xl) - dot(&self.b, &it.y);
        Residuals { rp, rd, rd_lp, rg }
    }

    /// Schur complement `M_ij = Re tr(A_i X A_j S^{-1}) + Σ_l a_il a_jl x_l/s_l`.
    fn schur(&self, x: &ComplexMatrix, sinv: &ComplexMatrix, xl: &[f64], sl: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let forms: Vec<XaS> = self.rows.iter().map(|r| XaS::new(&r.mat, x, sinv)).collect();
        let mut out = DMatrix::zeros(m, m);
        for j in 0..m {
            for i in 0..=j {
                let v = schur_entry(&self.rows[i].mat, &forms[j], x, sinv)
                    * self.rows[i].scale
                    * self.rows[j].scale;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        if self.p > 0 {
            let d: Vec<f64> = xl.iter().zip(sl).map(|(a, b)| a / b).collect();
            let mut ad = self.a_lp.clone();
            for (j, dj) in d.iter().enumerate() {
                ad.column_mut(j).scale_mut(*dj);
            }
            out += &ad * self.a_lp.transpose();
        }
        out
    }
}

/// Row `j` of the Schur complement in factored form `X A_j S^{-1}`.
enum XaS {
    Zero,
    Unit(usize),
    Factors(Vec<(f64, ComplexVector, ComplexVector)>),
    Full(ComplexMatrix),
}

impl XaS {
    fn new(a: &SdpMatrix, x: &ComplexMatrix, sinv: &ComplexMatrix) -> XaS {
        match a {
            SdpMatrix::Zero => XaS::Zero,
            SdpMatrix::Unit(t) => XaS::Unit(*t),
            SdpMatrix::LowRank(terms) => {
                XaS::Factors(terms.iter().map(|(w, u)| (*w, x * u, sinv * u)).collect())
            }
            SdpMatrix::Dense(h) => XaS::Full(cmatmul(&cmatmul(x, h.as_matrix()), sinv)),
        }
    }
}

fn schur_entry(a: &SdpMatrix, form: &XaS, x: &ComplexMatrix, sinv: &ComplexMatrix) -> f64 {
    // Each case evaluates Re tr(A_i P) for P = Σ w p q^H or the dense P.
    match (a, form) {
        (SdpMatrix::Zero, _) | (_, XaS::Zero) => 0.0,
        (SdpMatrix::Unit(s), XaS::Unit(t)) => {
            let xv = x[(*s, *t)];
            let sv = sinv[(*s, *t)];
            xv.re * sv.re + xv.im * sv.im
        }
        (_, XaS::Unit(t)) => {
            let p = x.column(*t).into_owned();
            let q = sinv.column(*t).into_owned();
            factor_term(a, 1.0, &p, &q)
        }
        (_, XaS::Factors(list)) => list.iter().map(|(w, p, q)| factor_term(a, *w, p, q)).sum(),
        (SdpMatrix::Unit(s), XaS::Full(pm)) => pm[(*s, *s)].re,
        (SdpMatrix::LowRank(terms), XaS::Full(pm)) => terms.iter().map(|(w, u)| w * (u.adjoint() * pm * u)[(0, 0)].re).sum(),
        (SdpMatrix::Dense(h), XaS::Full(pm)) => (h.as_matrix() * pm).trace().re,
    }
}

/// `w · Re(q^H A p)`.
fn factor_term(a: &SdpMatrix, w: f64, p: &ComplexVector, q: &ComplexVector) -> f64 {
    let v = match a {
        SdpMatrix::Zero => 0.0,
        SdpMatrix::Unit(s) => (q[*s].conj() * p[*s]).re,
        SdpMatrix::LowRank(terms) => terms
            .iter()
            .map(|(wa, u)| wa * (q.dotc(u) * u.dotc(p)).re)
            .sum(),
        SdpMatrix::Dense(h) => q.dotc(&(h.as_matrix() * p)).re,
    };
    w * v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sym(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn inverse_cholesky(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let l = Cholesky::new(m.clone())?.unpack();
    let n = l.nrows();
    l.solve_lower_triangular(&ComplexMatrix::identity(n, n))
}

/// `L^{-1} D L^{-H}`, whose smallest eigenvalue bounds the step on `L L^H`.
fn scaled_direction(l_inv: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
    sym(&cmatmul(&cmatmul(l_inv, d), &l_inv.adjoint()))
}

const LANCZOS_STEPS: usize = 24;

/// Smallest eigenvalue of a Hermitian `z`: exact for small sizes, otherwise
/// the smallest Ritz value of a fully reorthogonalized Lanczos run (never
/// below the true value, so callers must verify the resulting step).
fn lambda_min(z: &ComplexMatrix) -> f64 {
    let n = z.nrows();
    if n <= LANCZOS_STEPS {
        return z.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    }
    let mut q = ComplexVector::from_fn(n, |j, _| {
        let t = j as f64;
        C64::new(1.0 + 0.5 * (1.7 * t).sin(), 0.3 * (2.3 * t).cos())
    });
    q /= C64::new(q.norm(), 0.0);
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(LANCZOS_STEPS);
    let mut alpha = Vec::with_capacity(LANCZOS_STEPS);
    let mut beta: Vec<f64> = Vec::with_capacity(LANCZOS_STEPS);
    let scale = z.norm().max(1e-300);
    for _ in 0..LANCZOS_STEPS {
        let mut r = z * &q;
        let a = q.dotc(&r).re;
        alpha.push(a);
        basis.push(q);
        for v in &basis {
            let c = v.dotc(&r);
            r -= v * c;
        }
        let bnorm = r.norm();
        if bnorm <= 1e-12 * scale {
            break;
        }
        beta.push(bnorm);
        q = r / C64::new(bnorm, 0.0);
    }
    let k = alpha.len();
    let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max_step_psd(z: &ComplexMatrix, exact: bool) -> f64 {
    let lmin = if exact {
        z.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        lambda_min(z)
    };
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Whether `I + α z` is positive definite.
fn step_is_interior(z: &ComplexMatrix, alpha: f64) -> bool {
    let n = z.nrows();
    let m = ComplexMatrix::identity(n, n) + z * C64::new(alpha, 0.0);
    Cholesky::new(m).is_some()
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

fn max_step_scalar(x: f64, dx: f64) -> f64 {
    if dx < 0.0 {
        -x / dx
    } else {
        f64::INFINITY
    }
}

impl Factors {
    fn new(it: &Iterate) -> Option<Factors> {
        let lx_inv = inverse_cholesky(&it.x)?;
        let ls_inv = inverse_cholesky(&it.s)?;
        let sinv = sym(&cmatmul(&ls_inv.adjoint(), &ls_inv));
        Some(Factors { lx_inv, ls_inv, sinv })
    }
}

/// `sym(X D S^{-1})`.
fn w_op(x: &ComplexMatrix, sinv: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
    sym(&cmatmul(&cmatmul(x, d), sinv))
}

fn run(data: &Data, tols: &SdpTolerances) -> SdpSolution {
    let n = data.n;
    let p = data.p;
    let m = data.m();
    let nu = (n + p + 1) as f64;
    let mut it = Iterate {
        x: ComplexMatrix::identity(n, n),
        s: ComplexMatrix::identity(n, n),
        xl: vec![1.0; p],
        sl: vec![1.0; p],
        y: vec![0.0; m],
        tau: 1.0,
        kappa: 1.0,
    };
    let b_norm = norm2(&data.b);
    let c_norm = (data.c_dense.norm_squared() + data.c_lp.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut merit_trace = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut small_steps = 0;
    let mut report = Report::default();

    for iter in 0..=tols.max_iter {
        iterations = iter;
        let res = data.residuals(&it);
        let merit = (norm2(&res.rp).powi(2)
            + res.rd.norm_squared()
            + res.rd_lp.iter().map(|v| v * v).sum::<f64>()
            + res.rg * res.rg)
            .sqrt();
        merit_trace.push(merit);

        let pobj = data.c_inner(&it.x, &it.xl) / it.tau;
        let by = dot(&data.b, &it.y);
        let dobj = by / it.tau;
        let pres = norm2(&res.rp) / it.tau / (1.0 + b_norm);
        let dres = (res.rd.norm_squared() + res.rd_lp.iter().map(|v| v * v).sum::<f64>()).sqrt()
            / it.tau
            / (1.0 + c_norm);
        let gap = (pobj - dobj).abs();
        report = Report {
            pobj,
            dobj,
            gap,
            kkt: pres.max(dres),
        };
        if pres <= tols.feasibility && dres <= tols.feasibility && gap <= tols.gap * (1.0 + pobj.abs()) {
            status = SdpStatus::Optimal;
            break;
        }
        if it.tau < it.kappa {
            // Primal infeasibility: b·y > 0 with A^T y + S ≈ 0.
            if by > 0.0 {
                let (aty, aty_l) = data.at_op(&it.y);
                let r = ((aty + &it.s).norm_squared()
                    + aty_l.iter().zip(&it.sl).map(|(a, s)| (a + s).powi(2)).sum::<f64>())
                .sqrt();
                if r <= tols.feasibility * by {
                    status = SdpStatus::Infeasible;
                    break;
                }
            }
            // Dual infeasibility: ⟨C, X⟩ < 0 with A(X) ≈ 0.
            let cx = data.c_inner(&it.x, &it.xl);
            if cx < 0.0 {
                let ax = data.a_op(&it.x, &it.xl);
                if norm2(&ax) <= tols.feasibility * (-cx) {
                    status = SdpStatus::Infeasible;
                    break;
                }
            }
        }
        if iter == tols.max_iter {
            break;
        }
        let f = match Factors::new(&it) {
            Some(f) => f,
            None => break,
        };
        let newton = match prepare(data, &it, &f, &res) {
            Some(nw) => nw,
            None => break,
        };
        let mu = (hermitian_inner(&it.x, &it.s) + dot(&it.xl, &it.sl) + it.tau * it.kappa) / nu;

        // Predictor (affine scaling).
        let rx_aff = -&it.x;
        let rxl_aff: Vec<f64> = it.xl.iter().map(|v| -v).collect();
        let aff = direction(data, &it, &f, &newton, &res, 1.0, &rx_aff, &rxl_aff, -it.tau * it.kappa);
        let a_aff = step_length(&it, &f, &aff, false).alpha.min(1.0);
        let mu_aff = {
            let xa = &it.x + &aff.dx * C64::new(a_aff, 0.0);
            let sa = &it.s + &aff.ds * C64::new(a_aff, 0.0);
            let lp: f64 = (0..p)
                .map(|j| (it.xl[j] + a_aff * aff.dxl[j]) * (it.sl[j] + a_aff * aff.dsl[j]))
                .sum();
            (hermitian_inner(&xa, &sa) + lp + (it.tau + a_aff * aff.dtau) * (it.kappa + a_aff * aff.dkappa)) / nu
        };
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let eta = 1.0 - sigma;

        // Corrector.
        let second = w_op(&aff.dx, &f.sinv, &aff.ds);
        let rx = &f.sinv * C64::new(sigma * mu, 0.0) - &it.x - second;
        let rxl: Vec<f64> = (0..p)
            .map(|j| (sigma * mu - it.xl[j] * it.sl[j] - aff.dxl[j] * aff.dsl[j]) / it.sl[j])
            .collect();
        let rtk = sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
        let dir = direction(data, &it, &f, &newton, &res, eta, &rx, &rxl, rtk);
        let alpha = safe_step(&step_length(&it, &f, &dir, true));
        if !alpha.is_finite() || alpha <= 0.0 {
            break;
        }
        if alpha < 1e-8 {
            small_steps += 1;
            if small_steps >= 3 {
                break;
            }
        } else {
            small_steps = 0;
        }
        let ac = C64::new(alpha, 0.0);
        it.x = sym(&(&it.x + &dir.dx * ac));
        it.s = sym(&(&it.s + &dir.ds * ac));
        for j in 0..p {
            it.xl[j] += alpha * dir.dxl[j];
            it.sl[j] += alpha * dir.dsl[j];
        }
        for k in 0..m {
            it.y[k] += alpha * dir.dy[k];
        }
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;
        if !(it.tau > 0.0 && it.kappa > 0.0) {
            break;
        }
    }

    let inv_tau = if status == SdpStatus::Infeasible { 1.0 } else { 1.0 / it.tau };
    let x = it.x * C64::new(inv_tau, 0.0);
    SdpSolution {
        primal_matrix: HermitianMatrix::from_hermitian_part(&x),
        scalar_values: it.xl.iter().map(|v| v * inv_tau).collect(),
        objective_value: report.pobj,
        dual_value: report.dobj,
        duality_gap: report.gap,
        kkt_residual: report.kkt,
        status,
        iterations,
        merit_trace,
    }
}

#[derive(Default)]
struct Report {
    pobj: f64,
    dobj: f64,
    gap: f64,
    kkt: f64,
}

fn prepare(data: &Data, it: &Iterate, f: &Factors, res: &Residuals) -> Option<Newton> {
    let mut mm = data.schur(&it.x, &f.sinv, &it.xl, &it.sl);
    let mut schur = Cholesky::new(mm.clone());
    if schur.is_none() {
        let bump = 1e-13 * mm.diagonal().amax().max(1e-300);
        for i in 0..mm.nrows() {
            mm[(i, i)] += bump;
        }
        schur = Cholesky::new(mm);
    }
    let schur = schur?;
    let wc = if data.c_zero {
        ComplexMatrix::zeros(data.n, data.n)
    } else {
        w_op(&it.x, &f.sinv, &data.c_dense)
    };
    let wc_lp: Vec<f64> = (0..data.p).map(|j| it.xl[j] * data.c_lp[j] / it.sl[j]).collect();
    let u = data.a_op(&wc, &wc_lp);
    let rhs: Vec<f64> = u.iter().zip(&data.b).map(|(a, b)| a + b).collect();
    let dy2 = schur.solve(&DVector::from_vec(rhs)).as_slice().to_vec();
    let cwc = data.c_inner(&wc, &wc_lp);
    let wrd = w_op(&it.x, &f.sinv, &res.rd);
    Some(Newton {
        schur,
        wrd,
        u,
        dy2,
        cwc,
    })
}

#[allow(clippy::too_many_arguments)]
fn direction(
    data: &Data,
    it: &Iterate,
    f: &Factors,
    nw: &Newton,
    res: &Residuals,
    eta: f64,
    rx: &ComplexMatrix,
    rxl: &[f64],
    rtk: f64,
) -> Direction {
    let p = data.p;
    let ec = C64::new(eta, 0.0);
    let t1 = rx - &nw.wrd * ec;
    let t1_lp: Vec<f64> = (0..p)
        .map(|j| rxl[j] - it.xl[j] * eta * res.rd_lp[j] / it.sl[j])
        .collect();
    let at1 = data.a_op(&t1, &t1_lp);
    let rhs1: Vec<f64> = res.rp.iter().zip(&at1).map(|(r, a)| eta * r - a).collect();
    let dy1 = nw.schur.solve(&DVector::from_vec(rhs1));
    let c0 = data.c_inner(&t1, &t1_lp);
    let bu: Vec<f64> = data.b.iter().zip(&nw.u).map(|(b, u)| b - u).collect();
    let num = eta * res.rg + c0 + rtk / it.tau - dot(&bu, dy1.as_slice());
    let den = dot(&bu, &nw.dy2) + nw.cwc + it.kappa / it.tau;
    let dtau = num / den;
    let dy: Vec<f64> = dy1.iter().zip(&nw.dy2).map(|(a, b)| a + dtau * b).collect();
    let (aty, aty_l) = data.at_op(&dy);
    let ds = &res.rd * ec - aty + &data.c_dense * C64::new(dtau, 0.0);
    let dsl: Vec<f64> = (0..p)
        .map(|j| eta * res.rd_lp[j] - aty_l[j] + data.c_lp[j] * dtau)
        .collect();
    let dx = rx - w_op(&it.x, &f.sinv, &ds);
    let dxl: Vec<f64> = (0..p).map(|j| rxl[j] - it.xl[j] * dsl[j] / it.sl[j]).collect();
    let dkappa = (rtk - it.kappa * dtau) / it.tau;
    Direction {
        dx,
        ds,
        dxl,
        dsl,
        dy,
        dtau,
        dkappa,
    }
}

struct Step {
    alpha: f64,
    zx: ComplexMatrix,
    zs: ComplexMatrix,
}

/// `exact = false` estimates the cone limits, which is enough for the
/// affine-scaling probe.
fn step_length(it: &Iterate, f: &Factors, d: &Direction, exact: bool) -> Step {
    let zx = scaled_direction(&f.lx_inv, &d.dx);
    let zs = scaled_direction(&f.ls_inv, &d.ds);
    let alpha = max_step_psd(&zx, exact)
        .min(max_step_psd(&zs, exact))
        .min(max_step_lp(&it.xl, &d.dxl))
        .min(max_step_lp(&it.sl, &d.dsl))
        .min(max_step_scalar(it.tau, d.dtau))
        .min(max_step_scalar(it.kappa, d.dkappa));
    Step { alpha, zx, zs }
}

/// Damped step that keeps both cones strictly interior.
fn safe_step(step: &Step) -> f64 {
    let mut alpha = (STEP_FRACTION * step.alpha).min(1.0);
    for _ in 0..60 {
        if !alpha.is_finite() || alpha <= 0.0 {
            return alpha;
        }
        if step_is_interior(&step.zx, alpha) && step_is_interior(&step.zs, alpha) {
            return alpha;
        }
        alpha *= 0.8;
    }
    0.0
}
