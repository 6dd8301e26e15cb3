//! Alternating optimization with successive convex approximation for the
//! beamformer and a max-min relaxation for the RIS phases.
//!
//! Writing `h_i^H w = x_i + j y_i` with `r_i = (x_i, y_i)`, the constraint
//! `‖r_i‖² ≥ γσ²` is replaced around `p_i` by the affine minorant
//! `‖p_i‖² + 2 p_i·(r_i − p_i) ≥ γσ²`, giving a least-norm QP in `(Re w, Im w)`.

use std::time::Instant;

use crate::channel::{composite_all, Beamformer, ChannelSet, PhaseVector};
use crate::conic::{solve_least_norm, LeastNormQp, QpStatus, QpTolerances};
use crate::error::{Error, Result};
use crate::numerics::{ComplexVector, RngStream, C64};
use crate::phase::{best_candidate, lifted_vectors, relax_and_randomize, PhaseObjective, Relaxation};
use crate::sdr_opt::{
    compute_f, min_gain, rescale_to_feasible, solve_beamforming_sdr, AlternatingConfig, FStep, PhaseStep, RunStatus,
    SolveReport,
};

/// Linearization points `p_i` of the current inner iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub p: Vec<[f64; 2]>,
    pub d: usize,
}

/// First-order lower bound `‖p‖² + 2 p·(r − p)` of `‖r‖²`.
pub fn sca_minorant(p: [f64; 2], r: [f64; 2]) -> f64 {
    p[0] * p[0] + p[1] * p[1] + 2.0 * (p[0] * (r[0] - p[0]) + p[1] * (r[1] - p[1]))
}

fn amplitude(h: &ComplexVector, w: &ComplexVector) -> [f64; 2] {
    let z = h.dotc(w);
    [z.re, z.im]
}

/// Inner SCA iterations at fixed `Φ`; returns the beamformer and the power
/// of every inner iterate (starting with `init`).
pub fn sca_beamforming_traced(
    cs: &ChannelSet,
    phi: &PhaseVector,
    gamma: f64,
    sigma2: f64,
    init: &Beamformer,
    max_inner: usize,
    tol: f64,
) -> Result<(Beamformer, Vec<f64>)> {
    let hs = composite_all(cs, phi)?;
    sca_on(&hs, gamma * sigma2, init, max_inner, tol)
}

pub fn sca_beamforming(
    cs: &ChannelSet,
    phi: &PhaseVector,
    gamma: f64,
    sigma2: f64,
    init: &Beamformer,
    max_inner: usize,
    tol: f64,
) -> Result<Beamformer> {
    sca_beamforming_traced(cs, phi, gamma, sigma2, init, max_inner, tol).map(|(w, _)| w)
}

fn sca_on(
    hs: &[ComplexVector],
    gamma_sigma2: f64,
    init: &Beamformer,
    max_inner: usize,
    tol: f64,
) -> Result<(Beamformer, Vec<f64>)> {
    let m = init.len();
    if hs.iter().any(|h| h.len() != m) {
        return Err(Error::InvalidInput("beamformer length must equal M".into()));
    }
    let g0 = min_gain(hs, init);
    if g0 < gamma_sigma2 * (1.0 - 1e-9) {
        return Err(Error::InvalidInput(format!(
            "initial beamformer is infeasible (min gain {g0:e} < {gamma_sigma2:e})"
        )));
    }
    let mut w = init.clone();
    let mut trace = vec![w.power()];
    let mut state = ScaState {
        p: hs.iter().map(|h| amplitude(h, &w.w)).collect(),
        d: 0,
    };
    for _ in 0..max_inner {
        let rows = hs
            .iter()
            .zip(&state.p)
            .map(|(h, p)| {
                // 2 p·r(w) ≥ γσ² + ‖p‖², with r(w) linear in [Re w; Im w].
                let mut a = vec![0.0; 2 * m];
                for k in 0..m {
                    let (hr, hi) = (h[k].re, h[k].im);
                    a[k] = 2.0 * (p[0] * hr - p[1] * hi);
                    a[m + k] = 2.0 * (p[0] * hi + p[1] * hr);
                }
                (a, gamma_sigma2 + p[0] * p[0] + p[1] * p[1])
            })
            .collect();
        let sol = solve_least_norm(&LeastNormQp { n: 2 * m, rows }, &QpTolerances::default())?;
        if sol.status == QpStatus::Infeasible {
            return Err(Error::Infeasible("SCA subproblem is infeasible".into()));
        }
        let cand = Beamformer::new(ComplexVector::from_fn(m, |k, _| C64::new(sol.x[k], sol.x[m + k])));
        // Guard against solver round-off: the minorant guarantees feasibility
        // in exact arithmetic, the rescale restores it bit-for-bit.
        let cand = match rescale_to_feasible(hs, &cand, gamma_sigma2) {
            Some(c) if c.power() <= cand.power() => cand,
            Some(c) => c,
            None => break,
        };
        let p_old = w.power();
        let p_new = cand.power();
        if p_new > p_old {
            break;
        }
        w = cand;
        trace.push(p_new);
        state.d += 1;
        state.p = hs.iter().map(|h| amplitude(h, &w.w)).collect();
        if (p_old - p_new) / p_old <= tol {
            break;
        }
    }
    Ok((w, trace))
}

/// Phase step maximizing the common SNR slack; the returned value is
/// `min_i |h_i^H(Φ) w|²` of the best randomized candidate.
pub fn solve_phase_maxmin(
    cs: &ChannelSet,
    w: &Beamformer,
    gamma: f64,
    sigma2: f64,
    n_rand: usize,
    rng: &mut RngStream,
) -> Result<PhaseStep> {
    let lifted = lifted_vectors(cs, w);
    let cands = match relax_and_randomize(&lifted, gamma * sigma2, PhaseObjective::MinSlack, n_rand, rng)? {
        Relaxation::Infeasible => return Ok(PhaseStep::PhaseInfeasible),
        Relaxation::Candidates(c) => c,
    };
    let (phi, gain) = best_candidate(&lifted, cands);
    if gain < gamma * sigma2 {
        return Ok(PhaseStep::PhaseInfeasible);
    }
    Ok(PhaseStep::Accepted { phi, value: gain })
}

/// Alternating SCA optimization. The first feasible beamformer comes from one
/// SDR beamforming solve at the random initial `Φ`.
pub fn alternate_sca(cs: &ChannelSet, cfg: &AlternatingConfig, rng: &mut RngStream) -> Result<SolveReport> {
    let start = Instant::now();
    let gs2 = cfg.gamma * cfg.sigma2;
    let mut phi = PhaseVector::random(cs.n(), rng);
    let mut init = solve_beamforming_sdr(cs, &phi, cfg.gamma, cfg.sigma2, None, cfg.n_rand, rng)?;
    let mut power_trace = Vec::new();
    let mut f_trace = Vec::new();
    let mut status = RunStatus::IterCap;
    let mut w_final: Option<Beamformer> = None;
    let mut phi_final = phi.clone();
    for _ in 0..cfg.max_outer {
        let hs = composite_all(cs, &phi)?;
        let (w, _) = sca_on(&hs, gs2, &init, cfg.max_inner, cfg.inner_tol)?;
        let p = w.power();
        let f_w = compute_f(cs, &phi, &w.direction())?;
        let p_prev = power_trace.last().copied().unwrap_or(f64::INFINITY);
        power_trace.push(p);
        w_final = Some(w.clone());
        phi_final = phi.clone();
        if 1.0 - p / p_prev <= cfg.epsilon || cs.n() == 0 {
            f_trace.push(FStep { after_w: f_w, after_phi: None });
            status = RunStatus::Converged;
            break;
        }
        let current = min_gain(&hs, &w);
        match solve_phase_maxmin(cs, &w, cfg.gamma, cfg.sigma2, cfg.n_rand, rng)? {
            // A phase update that lowers the weakest received power would
            // break the monotone chain of the alternation, so it ends the run.
            PhaseStep::Accepted { value, .. } if value < current => {
                f_trace.push(FStep { after_w: f_w, after_phi: None });
                status = RunStatus::PhaseInfeasible;
                break;
            }
            PhaseStep::PhaseInfeasible => {
                f_trace.push(FStep { after_w: f_w, after_phi: None });
                status = RunStatus::PhaseInfeasible;
                break;
            }
            PhaseStep::Accepted { phi: next, value } => {
                f_trace.push(FStep {
                    after_w: f_w,
                    after_phi: Some(value / p),
                });
                phi = next;
                phi_final = phi.clone();
                let hs_next = composite_all(cs, &phi)?;
                init = rescale_to_feasible(&hs_next, &w, gs2)
                    .ok_or_else(|| Error::Infeasible("phase step zeroed an ME".into()))?;
            }
        }
    }
    let w = w_final.ok_or_else(|| Error::InvalidInput("max_outer must be >= 1".into()))?;
    Ok(SolveReport {
        final_power: w.power(),
        iterations: power_trace.len(),
        power_trace,
        f_trace,
        w,
        phi: phi_final,
        status,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
