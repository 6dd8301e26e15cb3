//! Shared semidefinite relaxation for the RIS phase step.
//!
//! For fixed `w`, the received amplitude at ME `i` is
//! `Σ_n e^{jθ_n} a_{i,n} + b_i = v^H u_i` with `a_{i,n} = conj(h_{r,i,n}) (H_br w)_n`,
//! `b_i = h_{b,i}^H w`, `u_i = [a_i; b_i]` and `v = [e^{-jθ}; 1]`. Lifting
//! `V = v v^H` turns `|v^H u_i|²` into `tr(u_i u_i^H V)` with unit diagonal.

use crate::channel::{Beamformer, ChannelSet, PhaseVector};
use crate::conic::{solve_sdp, ConstraintSense, SdpMatrix, SdpProblem, SdpStatus, SdpTolerances, Sense};
use crate::error::Result;
use crate::numerics::{eig_hermitian, ComplexVector, RngStream, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PhaseObjective {
    /// Maximize the sum of per-ME slacks `α_i`.
    SumSlack,
    /// Maximize the common slack `g`.
    MinSlack,
}

/// Lifted vectors `u_i = [a_i; b_i]` of length `N + 1`.
pub(crate) fn lifted_vectors(cs: &ChannelSet, w: &Beamformer) -> Vec<ComplexVector> {
    let n = cs.n();
    let hw = &cs.h_br * &w.w;
    (0..cs.k())
        .map(|i| {
            let mut u = ComplexVector::zeros(n + 1);
            for r in 0..n {
                u[r] = cs.h_r[i][r].conj() * hw[r];
            }
            u[n] = cs.h_b[i].dotc(&w.w);
            u
        })
        .collect()
}

/// `min_i |Σ_n e^{jθ_n} a_{i,n} + b_i|²`.
pub(crate) fn min_gain(lifted: &[ComplexVector], coeffs: &[C64]) -> f64 {
    lifted
        .iter()
        .map(|u| {
            let n = coeffs.len();
            let mut acc = u[n];
            for r in 0..n {
                acc += coeffs[r] * u[r];
            }
            acc.norm_sqr()
        })
        .fold(f64::INFINITY, f64::min)
}

pub(crate) enum Relaxation {
    Infeasible,
    Candidates(Vec<PhaseVector>),
}

/// Solves the lifted phase SDP with constraints `tr(u_i u_i^H V) ≥ γσ² + slack`
/// and returns recovered unit-modulus candidates: the principal eigenvector
/// followed by `n_rand` Gaussian randomizations `U Λ^{1/2} r`.
pub(crate) fn relax_and_randomize(
    lifted: &[ComplexVector],
    gamma_sigma2: f64,
    objective: PhaseObjective,
    n_rand: usize,
    rng: &mut RngStream,
) -> Result<Relaxation> {
    let dim = lifted[0].len();
    // Rows are normalized by the largest ‖u_i‖², so the data stays O(1)
    // however the received powers compare with γσ².
    let norm = lifted.iter().map(|u| u.norm_squared()).fold(0.0, f64::max);
    if !(norm > 0.0) || !norm.is_finite() {
        return Ok(Relaxation::Infeasible);
    }
    let scale = 1.0 / norm.sqrt();
    let rhs = gamma_sigma2 / norm;
    let mut p = SdpProblem::new(dim, Sense::Maximize, SdpMatrix::Zero);
    p.unit_diagonal = true;
    match objective {
        PhaseObjective::SumSlack => {
            for u in lifted {
                let a = p.add_scalar(1.0);
                p.add_constraint(SdpMatrix::rank_one(u.scale(scale)), vec![(a, -1.0)], ConstraintSense::Ge, rhs);
            }
        }
        PhaseObjective::MinSlack => {
            let g = p.add_scalar(1.0);
            for u in lifted {
                p.add_constraint(SdpMatrix::rank_one(u.scale(scale)), vec![(g, -1.0)], ConstraintSense::Ge, rhs);
            }
        }
    }
    let sol = solve_sdp(&p, &SdpTolerances::default())?;
    if sol.status == SdpStatus::Infeasible {
        return Ok(Relaxation::Infeasible);
    }
    let eig = eig_hermitian(&sol.primal_matrix)?;
    let mut out = Vec::with_capacity(n_rand + 1);
    out.push(recover(&eig.vectors.column(0).into_owned()));
    let sq: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    for _ in 0..n_rand {
        let mut xi = ComplexVector::zeros(dim);
        for c in 0..dim {
            if sq[c] == 0.0 {
                continue;
            }
            let r = rng.complex_gaussian(1.0) * sq[c];
            for row in 0..dim {
                xi[row] += eig.vectors[(row, c)] * r;
            }
        }
        out.push(recover(&xi));
    }
    Ok(Relaxation::Candidates(out))
}

/// `θ_n = arg(ξ_{N+1}) − arg(ξ_n)`, i.e. `e^{-jθ_n}` is the phase of `ξ_n/ξ_{N+1}`.
fn recover(xi: &ComplexVector) -> PhaseVector {
    let n = xi.len() - 1;
    let ref_arg = xi[n].arg();
    PhaseVector::new((0..n).map(|r| ref_arg - xi[r].arg()).collect())
}

/// Picks the candidate maximizing `min_i |h_i^H(Φ) w|²`.
pub(crate) fn best_candidate(lifted: &[ComplexVector], candidates: Vec<PhaseVector>) -> (PhaseVector, f64) {
    let mut best: Option<(PhaseVector, f64)> = None;
    for c in candidates {
        let v = min_gain(lifted, &c.coefficients());
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((c, v));
        }
    }
    best.expect("at least one candidate")
}
