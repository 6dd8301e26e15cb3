//! Reference schemes: beamforming without the RIS and with random RIS phases.

use std::time::Instant;

use nalgebra::Cholesky;

use crate::channel::{composite_all, Beamformer, ChannelSet, PhaseVector};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector, RngStream, C64};
use crate::sdr_opt::{beamforming_sdr_on, AlternatingConfig, FStep, RunStatus, SolveReport};

/// Gram matrix `G = H H^H` of the stacked rows `h_i^H`.
fn gram(hs: &[ComplexVector]) -> ComplexMatrix {
    let k = hs.len();
    ComplexMatrix::from_fn(k, k, |i, j| hs[i].dotc(&hs[j]))
}

fn gram_cholesky(hs: &[ComplexVector]) -> Option<Cholesky<C64, nalgebra::Dyn>> {
    let m = hs.first()?.len();
    if hs.len() > m {
        return None;
    }
    let g = gram(hs);
    let scale = (0..g.nrows()).map(|i| g[(i, i)].re).fold(0.0, f64::max);
    let ch = Cholesky::new(g)?;
    let l = ch.l_dirty();
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * scale) {
        return None;
    }
    Some(ch)
}

/// ZF power `Σ_i w_i (G^{-1})_ii` with per-ME weights `w_i = σ_i²γ_i`.
pub fn zf_power_weighted(cs: &ChannelSet, weights: &[f64]) -> Result<f64> {
    if weights.len() != cs.k() {
        return Err(Error::InvalidInput("one weight per ME required".into()));
    }
    let ch = gram_cholesky(&cs.h_b)
        .ok_or_else(|| Error::Infeasible("direct channels are rank deficient (or K > M)".into()))?;
    let inv = ch.inverse();
    Ok(weights.iter().enumerate().map(|(i, w)| w * inv[(i, i)].re).sum())
}

pub fn zf_power(cs: &ChannelSet, gamma: f64, sigma2: f64) -> Result<f64> {
    zf_power_weighted(cs, &vec![gamma * sigma2; cs.k()])
}

/// Broadcast beam `w = H^H G^{-1} s` with `|s_i|² = γσ²`. The phases of `s`
/// are fixed one at a time so that each cross term of `s^H G^{-1} s` is
/// non-positive, which keeps the power at or below the ZF value.
pub(crate) fn zf_broadcast_beam(hs: &[ComplexVector], gamma_sigma2: f64) -> Option<Beamformer> {
    let ch = gram_cholesky(hs)?;
    let a = ch.inverse();
    let k = hs.len();
    let amp = gamma_sigma2.sqrt();
    let mut s = ComplexVector::zeros(k);
    for i in 0..k {
        let mut t = C64::new(0.0, 0.0);
        for j in 0..i {
            t += a[(i, j)] * s[j];
        }
        s[i] = if t.norm() > 0.0 { -t / t.norm() * amp } else { C64::new(amp, 0.0) };
    }
    let x = &a * &s;
    let mut w = ComplexVector::zeros(hs[0].len());
    for (h, xi) in hs.iter().zip(x.iter()) {
        w += h * *xi;
    }
    Some(Beamformer::new(w))
}

fn single_step_report(w: Beamformer, phi: PhaseVector, hs: &[ComplexVector], start: Instant) -> SolveReport {
    let p = w.power();
    let dir = w.direction();
    let f = hs.iter().map(|h| h.dotc(&dir.w).norm_sqr()).fold(f64::INFINITY, f64::min);
    SolveReport {
        final_power: p,
        power_trace: vec![p],
        f_trace: vec![FStep { after_w: f, after_phi: None }],
        w,
        phi,
        iterations: 1,
        status: RunStatus::Converged,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Beamforming relaxation on the direct links only. The report's `phi` is
/// empty: it describes `cs.without_ris()`.
pub fn mmse_no_ris(cs: &ChannelSet, gamma: f64, sigma2: f64, n_rand: usize, rng: &mut RngStream) -> Result<SolveReport> {
    let start = Instant::now();
    let direct = cs.without_ris();
    let hs = composite_all(&direct, &PhaseVector::zeros(0))?;
    let zf = zf_broadcast_beam(&hs, gamma * sigma2);
    let w = beamforming_sdr_on(&hs, gamma * sigma2, zf.as_ref(), n_rand, rng)?;
    Ok(single_step_report(w, PhaseVector::zeros(0), &hs, start))
}

/// Uniformly random phases followed by a single beamforming solve.
pub fn random_phase_ris(cs: &ChannelSet, gamma: f64, sigma2: f64, rng: &mut RngStream) -> Result<SolveReport> {
    let start = Instant::now();
    let phi = PhaseVector::random(cs.n(), rng);
    let hs = composite_all(cs, &phi)?;
    let zf = zf_broadcast_beam(&hs, gamma * sigma2);
    let n_rand = AlternatingConfig::default().n_rand;
    let w = beamforming_sdr_on(&hs, gamma * sigma2, zf.as_ref(), n_rand, rng)?;
    Ok(single_step_report(w, phi, &hs, start))
}
