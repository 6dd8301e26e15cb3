//! Dense interior-point solvers: a complex Hermitian SDP solver with an
//! attached nonnegative orthant, and a least-norm QP with linear inequalities.

mod qp;
mod sdp;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::numerics::{ComplexMatrix, ComplexVector, HermitianMatrix, C64};

pub use qp::{solve_least_norm, LeastNormQp, QpSolution, QpStatus, QpTolerances};
pub use sdp::solve_sdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Ge,
    Le,
    Eq,
}

/// Coefficient matrix of an SDP term, kept in structured form so the
/// solver can exploit it when building the Schur complement.
#[derive(Debug, Clone)]
pub enum SdpMatrix {
    Zero,
    /// `E_jj`, the single diagonal entry `j`.
    Unit(usize),
    /// `Σ_r w_r u_r u_r^H`.
    LowRank(Vec<(f64, ComplexVector)>),
    Dense(HermitianMatrix),
}

impl SdpMatrix {
    pub fn rank_one(u: ComplexVector) -> Self {
        SdpMatrix::LowRank(vec![(1.0, u)])
    }

    pub fn to_dense(&self, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        self.add_scaled_to(&mut m, 1.0);
        m
    }

    pub(crate) fn add_scaled_to(&self, m: &mut ComplexMatrix, s: f64) {
        match self {
            SdpMatrix::Zero => {}
            SdpMatrix::Unit(j) => m[(*j, *j)] += C64::new(s, 0.0),
            SdpMatrix::LowRank(terms) => {
                let n = m.nrows();
                for (w, u) in terms {
                    let ws = w * s;
                    for c in 0..n {
                        let uc = u[c].conj() * ws;
                        for r in 0..n {
                            m[(r, c)] += u[r] * uc;
                        }
                    }
                }
            }
            SdpMatrix::Dense(h) => *m += h.as_matrix() * C64::new(s, 0.0),
        }
    }

    /// `⟨self, x⟩ = Re tr(self · x)` for Hermitian `x`.
    pub fn inner(&self, x: &ComplexMatrix) -> f64 {
        match self {
            SdpMatrix::Zero => 0.0,
            SdpMatrix::Unit(j) => x[(*j, *j)].re,
            SdpMatrix::LowRank(terms) => terms.iter().map(|(w, u)| w * quad(x, u)).sum(),
            SdpMatrix::Dense(h) => crate::numerics::hermitian_inner(h.as_matrix(), x),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            SdpMatrix::Zero => 0.0,
            SdpMatrix::Unit(_) => 1.0,
            SdpMatrix::LowRank(terms) if terms.len() == 1 => terms[0].0.abs() * terms[0].1.norm_squared(),
            SdpMatrix::LowRank(terms) => {
                let n = terms[0].1.len();
                self.to_dense(n).norm()
            }
            SdpMatrix::Dense(h) => h.as_matrix().norm(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SdpMatrix::Zero => true,
            SdpMatrix::LowRank(terms) => terms.iter().all(|(w, u)| *w == 0.0 || u.norm_squared() == 0.0),
            SdpMatrix::Dense(h) => h.as_matrix().iter().all(|z| *z == C64::new(0.0, 0.0)),
            SdpMatrix::Unit(_) => false,
        }
    }

    pub(crate) fn check_dim(&self, n: usize) -> bool {
        match self {
            SdpMatrix::Zero => true,
            SdpMatrix::Unit(j) => *j < n,
            SdpMatrix::LowRank(terms) => terms.iter().all(|(w, u)| u.len() == n && w.is_finite() && u.iter().all(|z| z.re.is_finite() && z.im.is_finite())),
            SdpMatrix::Dense(h) => h.dim() == n,
        }
    }
}

/// `u^H x u`, real for Hermitian `x`.
pub(crate) fn quad(x: &ComplexMatrix, u: &ComplexVector) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for c in 0..n {
        let mut col = C64::new(0.0, 0.0);
        for r in 0..n {
            col += u[r].conj() * x[(r, c)];
        }
        acc += (col * u[c]).re;
    }
    acc
}

/// `⟨A, X⟩ + offset + Σ coeff_j s_j  (sense)  rhs`.
#[derive(Debug, Clone)]
pub struct TraceConstraint {
    pub matrix: SdpMatrix,
    pub offset: f64,
    pub scalar_coeffs: Vec<(usize, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

/// Optimize `⟨C, X⟩ + c·s` over Hermitian `X ⪰ 0` and scalars `s ≥ 0`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dim: usize,
    pub sense: Sense,
    pub objective: SdpMatrix,
    pub scalar_objective: Vec<f64>,
    pub constraints: Vec<TraceConstraint>,
    /// Adds `X_jj = 1` for every `j`.
    pub unit_diagonal: bool,
    pub scalar_vars: usize,
}

impl SdpProblem {
    pub fn new(dim: usize, sense: Sense, objective: SdpMatrix) -> Self {
        SdpProblem {
            dim,
            sense,
            objective,
            scalar_objective: Vec::new(),
            constraints: Vec::new(),
            unit_diagonal: false,
            scalar_vars: 0,
        }
    }

    /// Adds a nonnegative scalar variable and returns its index.
    pub fn add_scalar(&mut self, objective_coeff: f64) -> usize {
        self.scalar_vars += 1;
        self.scalar_objective.push(objective_coeff);
        self.scalar_vars - 1
    }

    pub fn add_constraint(&mut self, matrix: SdpMatrix, scalar_coeffs: Vec<(usize, f64)>, sense: ConstraintSense, rhs: f64) {
        self.constraints.push(TraceConstraint {
            matrix,
            offset: 0.0,
            scalar_coeffs,
            sense,
            rhs,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpTolerances {
    pub gap: f64,
    pub feasibility: f64,
    pub max_iter: usize,
}

impl Default for SdpTolerances {
    fn default() -> Self {
        SdpTolerances {
            gap: 1e-7,
            feasibility: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal_matrix: HermitianMatrix,
    pub scalar_values: Vec<f64>,
    pub objective_value: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
    pub kkt_residual: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Norm of the scaled residual vector at every iterate.
    pub merit_trace: Vec<f64>,
}

/// `[[Re h, −Im h], [Im h, Re h]]`.
pub fn real_embedding(h: &HermitianMatrix) -> DMatrix<f64> {
    let n = h.dim();
    let m = h.as_matrix();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}
