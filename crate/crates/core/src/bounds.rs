//! Lower bounds on the average minimum transmit power.
//!
//! All bounds have the form `γσ² / Q` where `Q` upper-bounds the average
//! best-case channel gain `E|h_i^H(Φ) w̄|²` over unit-norm beams.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RngStream, C64};

/// Variance of a Rayleigh magnitude with unit mean-square, `(2 − π/2)/2`.
const RAYLEIGH_VAR: f64 = (2.0 - PI / 2.0) / 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub sigma2: f64,
    pub beta2_br: f64,
    pub beta2_r: Vec<f64>,
    pub beta2_b: Vec<f64>,
}

impl BoundInputs {
    pub fn from_channel(cs: &ChannelSet, gamma: f64, sigma2: f64) -> Self {
        BoundInputs {
            m: cs.m(),
            n: cs.n(),
            k: cs.k(),
            gamma,
            sigma2,
            beta2_br: cs.beta2_br,
            beta2_r: cs.beta2_r.clone(),
            beta2_b: cs.beta2_b.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::InvalidInput("M and K must be >= 1".into()));
        }
        if self.beta2_r.len() != self.k || self.beta2_b.len() != self.k {
            return Err(Error::InvalidInput("per-ME path losses must have length K".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.gamma) || !positive(self.sigma2) {
            return Err(Error::InvalidInput("gamma and sigma2 must be positive".into()));
        }
        if !self.beta2_b.iter().all(|&v| positive(v)) {
            return Err(Error::InvalidInput("direct path losses must be positive".into()));
        }
        if self.n > 0 && (!positive(self.beta2_br) || !self.beta2_r.iter().all(|&v| positive(v))) {
            return Err(Error::InvalidInput("RIS path losses must be positive".into()));
        }
        Ok(())
    }

    fn gamma_sigma2(&self) -> f64 {
        self.gamma * self.sigma2
    }
}

fn min_over_mes(b: &BoundInputs, q: impl Fn(usize) -> f64) -> f64 {
    (0..b.k).map(q).fold(f64::INFINITY, f64::min)
}

/// Direct-link part `πβ_b²M/4 + β_b²(2 − π/2)/2`.
fn direct_q(beta2_b: f64, m: f64) -> f64 {
    PI * beta2_b * m / 4.0 + beta2_b * RAYLEIGH_VAR
}

/// Bound with optimized phases and every cosine coupling set to one.
pub fn analytical_lb_ris(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let (m, n) = (b.m as f64, b.n as f64);
    let q = min_over_mes(b, |i| {
        let (br, r, d) = (b.beta2_br, b.beta2_r[i], b.beta2_b[i]);
        PI * n * n * br * r * m / 4.0
            + n * r * br * m * RAYLEIGH_VAR
            + n * PI * (r * br * d).sqrt() * m / 2.0
            + direct_q(d, m)
    });
    Ok(b.gamma_sigma2() / q)
}

/// Bound for uniformly random RIS phases.
pub fn analytical_lb_random_phase(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let (m, n) = (b.m as f64, b.n as f64);
    let q = min_over_mes(b, |i| {
        let (br, r, d) = (b.beta2_br, b.beta2_r[i], b.beta2_b[i]);
        n * m * br * r + n.sqrt() * PI * (r * br * d).sqrt() * m / 2.0 + direct_q(d, m)
    });
    Ok(b.gamma_sigma2() / q)
}

/// Bound with direct links only.
pub fn analytical_lb_no_ris(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let q = min_over_mes(b, |i| direct_q(b.beta2_b[i], b.m as f64));
    Ok(b.gamma_sigma2() / q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiAnalyticSearchCfg {
    /// Grid levels per phase difference, used when `M ≤ 3`.
    pub levels: usize,
    /// Uniform random candidates, used when `M > 3`.
    pub random_search_budget: usize,
    /// Direct-channel phase realizations averaged over.
    pub realizations: usize,
}

impl Default for SemiAnalyticSearchCfg {
    fn default() -> Self {
        SemiAnalyticSearchCfg {
            levels: 500,
            random_search_budget: 20_000,
            realizations: 200,
        }
    }
}

impl SemiAnalyticSearchCfg {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 || self.random_search_budget < 1 || self.realizations < 1 {
            return Err(Error::InvalidInput(
                "need levels >= 2, random_search_budget >= 1 and realizations >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-candidate RIS sums `Σ_n |C_n|` and `Σ_n |C_n|²` with `|C_n|²` bounded
/// by `β_br²·|Σ_m e^{j(∠H_{n,m} + ψ_m)}|²/M`.
struct Candidate {
    rot: Vec<C64>,
    sum_root: f64,
    sum_sq: f64,
}

fn candidate(b: &BoundInputs, los_phase: &ComplexMatrix, psi: &[f64]) -> Candidate {
    let m = b.m as f64;
    let rot: Vec<C64> = psi.iter().map(|&p| C64::from_polar(1.0, p)).collect();
    let mut sum_root = 0.0;
    let mut sum_sq = 0.0;
    for r in 0..b.n {
        let mut acc = C64::new(0.0, 0.0);
        for (c, e) in rot.iter().enumerate() {
            acc += los_phase[(r, c)] * e;
        }
        let s = b.beta2_br * acc.norm_sqr() / m;
        sum_sq += s;
        sum_root += s.sqrt();
    }
    Candidate { rot, sum_root, sum_sq }
}

/// `min_i f_i` for one candidate; `direct[i][m]` is the unit phasor of the
/// coefficient of `w_m` in ME `i`'s direct amplitude.
fn min_f(b: &BoundInputs, cand: &Candidate, direct: &[Vec<C64>]) -> f64 {
    let m = b.m as f64;
    min_over_mes(b, |i| {
        let (r, d) = (b.beta2_r[i], b.beta2_b[i]);
        let mut acc = C64::new(0.0, 0.0);
        for (e, h) in cand.rot.iter().zip(&direct[i]) {
            acc += e * h;
        }
        let fb = acc.norm_sqr() / m;
        cand.sum_root * cand.sum_root * r * PI / 4.0
            + r * RAYLEIGH_VAR * cand.sum_sq
            + d * PI / 4.0 * fb
            + d * RAYLEIGH_VAR
            + 2.0 * cand.sum_root * PI * (r * d).sqrt() * m.sqrt() / 4.0
    })
}

/// `min_i f_i` at beam phases `psi` for given direct-channel phases
/// (`direct_phases[i][m]`, the angle of the coefficient of `w_m`).
pub fn semi_analytical_objective(
    b: &BoundInputs,
    los: &ComplexMatrix,
    psi: &[f64],
    direct_phases: &[Vec<f64>],
) -> Result<f64> {
    b.validate()?;
    check_shapes(b, los)?;
    if psi.len() != b.m || direct_phases.len() != b.k || direct_phases.iter().any(|p| p.len() != b.m) {
        return Err(Error::InvalidInput("phase vectors must have length M (K of them for direct)".into()));
    }
    let cand = candidate(b, &unit_phasors(los), psi);
    Ok(min_f(b, &cand, &phasors(direct_phases)))
}

fn check_shapes(b: &BoundInputs, los: &ComplexMatrix) -> Result<()> {
    if los.nrows() != b.n || los.ncols() != b.m {
        return Err(Error::InvalidInput(format!(
            "LoS matrix must be {}x{}, got {}x{}",
            b.n,
            b.m,
            los.nrows(),
            los.ncols()
        )));
    }
    Ok(())
}

fn unit_phasors(los: &ComplexMatrix) -> ComplexMatrix {
    los.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) })
}

fn phasors(phases: &[Vec<f64>]) -> Vec<Vec<C64>> {
    phases
        .iter()
        .map(|p| p.iter().map(|&a| C64::from_polar(1.0, a)).collect())
        .collect()
}

/// Candidate beam phases: `ψ_1 = 0` and the remaining `M − 1` on a uniform
/// grid when `M ≤ 3`, uniformly random otherwise.
fn search_points(m: usize, cfg: &SemiAnalyticSearchCfg, rng: &mut RngStream) -> Vec<Vec<f64>> {
    if m == 1 {
        return vec![vec![0.0]];
    }
    if m <= 3 {
        let step = 2.0 * PI / cfg.levels as f64;
        let total = cfg.levels.pow((m - 1) as u32);
        (0..total)
            .map(|mut idx| {
                let mut psi = vec![0.0; m];
                for p in psi.iter_mut().skip(1) {
                    *p = (idx % cfg.levels) as f64 * step;
                    idx /= cfg.levels;
                }
                psi
            })
            .collect()
    } else {
        (0..cfg.random_search_budget)
            .map(|_| {
                let mut psi = vec![0.0; m];
                for p in psi.iter_mut().skip(1) {
                    *p = rng.uniform(0.0, 2.0 * PI);
                }
                psi
            })
            .collect()
    }
}

/// Semi-analytical bound: per direct-phase realization, maximizes `min_i f_i`
/// over the beam phase differences, then divides `γσ²` by the average maximum.
pub fn semi_analytical_lb_ris(
    b: &BoundInputs,
    cfg: &SemiAnalyticSearchCfg,
    los: &ComplexMatrix,
    rng: &mut RngStream,
) -> Result<f64> {
    b.validate()?;
    cfg.validate()?;
    check_shapes(b, los)?;
    let lp = unit_phasors(los);
    let cands: Vec<Candidate> = search_points(b.m, cfg, rng)
        .par_iter()
        .map(|psi| candidate(b, &lp, psi))
        .collect();
    let draws: Vec<Vec<Vec<f64>>> = (0..cfg.realizations)
        .map(|_| {
            (0..b.k)
                .map(|_| (0..b.m).map(|_| rng.uniform(0.0, 2.0 * PI)).collect())
                .collect()
        })
        .collect();
    let total: f64 = draws
        .par_iter()
        .map(|d| {
            let direct = phasors(d);
            cands
                .iter()
                .map(|c| min_f(b, c, &direct))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(b.gamma_sigma2() / (total / cfg.realizations as f64))
}
