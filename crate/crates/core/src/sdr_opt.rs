//! Alternating optimization of the beamformer and RIS phases by semidefinite
//! relaxation with Gaussian randomization.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::{composite_all, ChannelSet, PhaseVector, ScenarioConfig};
use crate::conic::{solve_sdp, ConstraintSense, SdpMatrix, SdpProblem, SdpStatus, SdpTolerances, Sense};
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, ComplexMatrix, ComplexVector, Eigen, HermitianMatrix, RngStream, C64};
use crate::phase::{best_candidate, lifted_vectors, relax_and_randomize, PhaseObjective, Relaxation};

pub use crate::channel::Beamformer;

/// Solver knobs shared by both alternating algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternatingConfig {
    /// Linear SNR target.
    pub gamma: f64,
    /// Noise power in watts.
    pub sigma2: f64,
    /// Outer stop: `1 − P^(q)/P^(q−1) ≤ epsilon`.
    pub epsilon: f64,
    /// Gaussian randomization candidates per relaxation.
    pub n_rand: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub inner_tol: f64,
}

impl AlternatingConfig {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        AlternatingConfig {
            gamma: cfg.gamma(),
            sigma2: cfg.sigma2(),
            epsilon: cfg.epsilon,
            ..Default::default()
        }
    }
}

impl Default for AlternatingConfig {
    fn default() -> Self {
        AlternatingConfig {
            gamma: 1.0,
            sigma2: 1.0,
            epsilon: 1e-4,
            n_rand: 50,
            max_outer: 100,
            max_inner: 30,
            inner_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    PhaseInfeasible,
    IterCap,
}

/// `f` after the beamforming step and, when a phase step followed, after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FStep {
    pub after_w: f64,
    pub after_phi: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub final_power: f64,
    pub power_trace: Vec<f64>,
    pub f_trace: Vec<FStep>,
    pub w: Beamformer,
    pub phi: PhaseVector,
    pub iterations: usize,
    pub status: RunStatus,
    pub wall_time: f64,
}

impl SolveReport {
    /// `min_i SNR_i / γ` for the reported `(w, Φ)`.
    pub fn min_snr_ratio(&self, cs: &ChannelSet, gamma: f64, sigma2: f64) -> Result<f64> {
        let hs = composite_all(cs, &self.phi)?;
        Ok(min_gain(&hs, &self.w) / (gamma * sigma2))
    }
}

/// `f = min_i |h_i^H(Φ) w̄|²` for a unit-norm direction.
pub fn compute_f(cs: &ChannelSet, phi: &PhaseVector, w_dir: &Beamformer) -> Result<f64> {
    let nrm = w_dir.w.norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("direction must have unit norm, got {nrm}")));
    }
    Ok(min_gain(&composite_all(cs, phi)?, w_dir))
}

/// Minimum power `γσ²/f` along a direction with gain `f`.
pub fn power_from_f(f: f64, gamma: f64, sigma2: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::Infeasible(format!("direction gain must be > 0, got {f}")));
    }
    Ok(gamma * sigma2 / f)
}

pub(crate) fn min_gain(hs: &[ComplexVector], w: &Beamformer) -> f64 {
    hs.iter()
        .map(|h| h.dotc(&w.w).norm_sqr())
        .fold(f64::INFINITY, f64::min)
}

/// Smallest rescaling of `w` meeting every SNR constraint with equality for the
/// weakest ME; `None` when some ME receives nothing.
pub(crate) fn rescale_to_feasible(hs: &[ComplexVector], w: &Beamformer, gamma_sigma2: f64) -> Option<Beamformer> {
    let t = min_gain(hs, w);
    if !(t > 0.0) || !t.is_finite() {
        return None;
    }
    Some(w.scaled((gamma_sigma2 / t).sqrt()))
}

/// Beamforming step: relaxes `min ‖w‖²` s.t. `|h_i^H w|² ≥ γσ²` to
/// `min tr X` s.t. `tr(X h_i h_i^H) ≥ γσ²`, then keeps the cheapest of the
/// principal eigenvector, `n_rand` Gaussian candidates and `prev_w`, each
/// rescaled to its minimum feasible power.
pub fn solve_beamforming_sdr(
    cs: &ChannelSet,
    phi: &PhaseVector,
    gamma: f64,
    sigma2: f64,
    prev_w: Option<&Beamformer>,
    n_rand: usize,
    rng: &mut RngStream,
) -> Result<Beamformer> {
    let hs = composite_all(cs, phi)?;
    beamforming_sdr_on(&hs, gamma * sigma2, prev_w, n_rand, rng)
}

pub(crate) fn beamforming_sdr_on(
    hs: &[ComplexVector],
    gamma_sigma2: f64,
    prev_w: Option<&Beamformer>,
    n_rand: usize,
    rng: &mut RngStream,
) -> Result<Beamformer> {
    if let Some(i) = hs.iter().position(|h| h.norm_squared() == 0.0) {
        return Err(Error::Infeasible(format!("ME {i} has an all-zero channel")));
    }
    let m = hs[0].len();
    // Constraints are normalized to unit right-hand side.
    let scale = 1.0 / gamma_sigma2.sqrt();
    let mut p = SdpProblem::new(m, Sense::Minimize, SdpMatrix::Dense(HermitianMatrix::identity(m)));
    for h in hs {
        p.add_constraint(SdpMatrix::rank_one(h.scale(scale)), vec![], ConstraintSense::Ge, 1.0);
    }
    let sol = solve_sdp(&p, &SdpTolerances::default())?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Infeasible("beamforming relaxation is infeasible".into()));
    }
    let eig = eig_hermitian(&sol.primal_matrix)?;
    let mut best: Option<Beamformer> = None;
    let mut consider = |cand: Beamformer| {
        if let Some(w) = rescale_to_feasible(hs, &cand, gamma_sigma2) {
            if best.as_ref().is_none_or(|b| w.power() < b.power()) {
                best = Some(w);
            }
        }
    };
    consider(Beamformer::new(eig.vectors.column(0).into_owned()));
    if let Some(v) = rank_reduce(&eig, hs) {
        consider(Beamformer::new(v));
    }
    let sq: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    for _ in 0..n_rand {
        let mut xi = ComplexVector::zeros(m);
        for c in 0..m {
            if sq[c] == 0.0 {
                continue;
            }
            let r = rng.complex_gaussian(1.0) * sq[c];
            for row in 0..m {
                xi[row] += eig.vectors[(row, c)] * r;
            }
        }
        consider(Beamformer::new(xi));
    }
    if let Some(w) = prev_w {
        consider(w.clone());
    }
    best.ok_or_else(|| Error::Infeasible("no randomized candidate reaches every ME".into()))
}

/// Rank reduction of an optimal `X = V V^H` for `min tr X` s.t.
/// `tr(X h_i h_i^H) ≥ c`: steps along Hermitian `Δ` with
/// `tr(V^H V Δ) = tr(V^H h_i h_i^H V Δ) = 0`, which keeps the objective and
/// every constraint value, until `r² ≤ K + 1`. Returns the factor when it
/// reaches rank one (always the case for `K ≤ 2`).
fn rank_reduce(eig: &Eigen, hs: &[ComplexVector]) -> Option<ComplexVector> {
    let top = eig.values.first().copied()?;
    if !(top > 0.0) {
        return None;
    }
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&c| eig.values[c] > 1e-6 * top).collect();
    let m = eig.vectors.nrows();
    let mut v = ComplexMatrix::from_fn(m, keep.len(), |r, c| eig.vectors[(r, keep[c])] * eig.values[keep[c]].sqrt());
    let k = hs.len();
    while v.ncols() > 1 && v.ncols() * v.ncols() > k + 1 {
        let r = v.ncols();
        let mut grams = vec![v.adjoint() * &v];
        for h in hs {
            let g = v.adjoint() * h;
            grams.push(&g * g.adjoint());
        }
        // tr(B Δ) as a linear functional of Δ's r² real parameters.
        let row = |b: &ComplexMatrix| {
            let mut out = Vec::with_capacity(r * r);
            for i in 0..r {
                out.push(b[(i, i)].re);
            }
            for i in 0..r {
                for j in (i + 1)..r {
                    out.push(2.0 * b[(j, i)].re);
                    out.push(-2.0 * b[(j, i)].im);
                }
            }
            out
        };
        let rows: Vec<Vec<f64>> = grams.iter().map(row).collect();
        let a = DMatrix::from_fn(rows.len(), r * r, |i, j| rows[i][j]);
        let ata = a.transpose() * &a;
        let se = ata.symmetric_eigen();
        let imin = se.eigenvalues.imin();
        let d = se.eigenvectors.column(imin);
        let mut delta = ComplexMatrix::zeros(r, r);
        for i in 0..r {
            delta[(i, i)] = C64::new(d[i], 0.0);
        }
        let mut idx = r;
        for i in 0..r {
            for j in (i + 1)..r {
                delta[(i, j)] = C64::new(d[idx], d[idx + 1]);
                delta[(j, i)] = C64::new(d[idx], -d[idx + 1]);
                idx += 2;
            }
        }
        let de = eig_hermitian(&HermitianMatrix::from_hermitian_part(&delta)).ok()?;
        let lead = if de.values[0].abs() >= de.values[r - 1].abs() { de.values[0] } else { de.values[r - 1] };
        if lead == 0.0 {
            return None;
        }
        // I − Δ/λ is PSD with at least one zero eigenvalue.
        let shrink = ComplexMatrix::identity(r, r) - delta.scale(1.0 / lead);
        let se = eig_hermitian(&HermitianMatrix::from_hermitian_part(&shrink)).ok()?;
        let cols: Vec<usize> = (0..r).filter(|&c| se.values[c] > 1e-10).collect();
        if cols.len() >= r {
            return None;
        }
        let q = ComplexMatrix::from_fn(r, cols.len(), |i, c| se.vectors[(i, cols[c])] * se.values[cols[c]].sqrt());
        v = &v * q;
    }
    (v.ncols() == 1).then(|| v.column(0).into_owned())
}

/// Outcome of a phase step.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseStep {
    Accepted { phi: PhaseVector, value: f64 },
    PhaseInfeasible,
}

/// Phase step maximizing the sum of SNR slacks; the returned value is
/// `f = min_i |h_i^H(Φ) w̄|²` of the best randomized candidate, rejected when
/// below `f_floor`.
pub fn solve_phase_sdr(
    cs: &ChannelSet,
    w: &Beamformer,
    gamma: f64,
    sigma2: f64,
    f_floor: f64,
    n_rand: usize,
    rng: &mut RngStream,
) -> Result<PhaseStep> {
    let lifted = lifted_vectors(cs, w);
    let cands = match relax_and_randomize(&lifted, gamma * sigma2, PhaseObjective::SumSlack, n_rand, rng)? {
        Relaxation::Infeasible => return Ok(PhaseStep::PhaseInfeasible),
        Relaxation::Candidates(c) => c,
    };
    let (phi, gain) = best_candidate(&lifted, cands);
    let f = gain / w.power();
    if f < f_floor {
        return Ok(PhaseStep::PhaseInfeasible);
    }
    Ok(PhaseStep::Accepted { phi, value: f })
}

/// Alternating SDR optimization starting from a uniformly random `Φ`.
pub fn alternate_sdr(cs: &ChannelSet, cfg: &AlternatingConfig, rng: &mut RngStream) -> Result<SolveReport> {
    let start = Instant::now();
    let mut phi = PhaseVector::random(cs.n(), rng);
    let mut prev: Option<Beamformer> = None;
    let mut power_trace = Vec::new();
    let mut f_trace = Vec::new();
    let mut status = RunStatus::IterCap;
    let mut w_final: Option<Beamformer> = None;
    let mut phi_final = phi.clone();
    for _ in 0..cfg.max_outer {
        let w = solve_beamforming_sdr(cs, &phi, cfg.gamma, cfg.sigma2, prev.as_ref(), cfg.n_rand, rng)?;
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
        match solve_phase_sdr(cs, &w, cfg.gamma, cfg.sigma2, f_w, cfg.n_rand, rng)? {
            PhaseStep::PhaseInfeasible => {
                f_trace.push(FStep { after_w: f_w, after_phi: None });
                status = RunStatus::PhaseInfeasible;
                break;
            }
            PhaseStep::Accepted { phi: next, value } => {
                f_trace.push(FStep {
                    after_w: f_w,
                    after_phi: Some(value),
                });
                phi = next;
                phi_final = phi.clone();
            }
        }
        prev = Some(w);
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
