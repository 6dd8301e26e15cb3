//! Scenario configuration, channel realizations and composite downlink
//! channels `h_i^H(Φ) = h_{r,i}^H Φ H_br + h_{b,i}^H`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, dbm_to_watts, stream_id, ComplexMatrix, ComplexVector, RngStream, C64};

/// Stream kinds used to derive independent random streams from one seed.
pub mod streams {
    pub const LOS: u8 = 1;
    pub const POSITIONS: u8 = 2;
    pub const DIRECT: u8 = 3;
    pub const REFLECT: u8 = 4;
    pub const METHOD: u8 = 5;
    pub const BOUND: u8 = 6;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub gamma_db: f64,
    pub sigma2_dbm: f64,
    pub bs_pos: [f64; 3],
    pub ris_pos: [f64; 3],
    pub me_radius: f64,
    pub alpha_br: f64,
    pub alpha_rm: f64,
    pub alpha_bm: f64,
    pub ref_loss_db: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            m: 10,
            n: 50,
            k: 1,
            gamma_db: 1.0,
            sigma2_dbm: -30.0,
            bs_pos: [0.0, 0.0, 0.0],
            ris_pos: [0.0, 50.0, 0.0],
            me_radius: 3.0,
            alpha_br: 2.0,
            alpha_rm: 2.8,
            alpha_bm: 3.5,
            ref_loss_db: -30.0,
            epsilon: 1e-4,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.m < 1 || self.k < 1 {
            return bad("M and K must be >= 1");
        }
        if !self.gamma_db.is_finite() || !self.sigma2_dbm.is_finite() {
            return bad("gamma_db and sigma2_dbm must be finite");
        }
        if !(self.alpha_br > 0.0 && self.alpha_rm > 0.0 && self.alpha_bm > 0.0) {
            return bad("path-loss exponents must be > 0");
        }
        if !(self.me_radius > 0.0) {
            return bad("me_radius must be > 0");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must be in (0, 1)");
        }
        if !self.ref_loss_db.is_finite() {
            return bad("ref_loss_db must be finite");
        }
        if distance(self.bs_pos, self.ris_pos) <= 0.0 {
            return bad("BS and RIS must not coincide");
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    pub fn sigma2(&self) -> f64 {
        dbm_to_watts(self.sigma2_dbm)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ScenarioConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

/// Unit-modulus RIS reflection coefficients `e^{jθ_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    pub theta: Vec<f64>,
}

impl PhaseVector {
    /// Wraps every angle into `[0, 2π)`.
    pub fn new(theta: Vec<f64>) -> Self {
        PhaseVector {
            theta: theta.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector { theta: vec![0.0; n] }
    }

    pub fn random(n: usize, rng: &mut RngStream) -> Self {
        PhaseVector {
            theta: (0..n).map(|_| rng.uniform(0.0, 2.0 * PI)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn coefficients(&self) -> Vec<C64> {
        self.theta.iter().map(|t| C64::from_polar(1.0, *t)).collect()
    }
}

pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Transmit beamforming vector; the transmit power is `‖w‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformer {
    pub w: ComplexVector,
}

impl Beamformer {
    pub fn new(w: ComplexVector) -> Self {
        Beamformer { w }
    }

    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }

    /// Unit-norm direction `w/‖w‖`.
    pub fn direction(&self) -> Beamformer {
        let n = self.w.norm();
        Beamformer {
            w: self.w.unscale(n),
        }
    }

    pub fn scaled(&self, s: f64) -> Beamformer {
        Beamformer {
            w: self.w.scale(s),
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// One realization of all links plus their path-loss powers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS→RIS LoS channel, `N × M`.
    pub h_br: ComplexMatrix,
    /// RIS→ME channels, `K` vectors of length `N`.
    pub h_r: Vec<ComplexVector>,
    /// BS→ME direct channels, `K` vectors of length `M`.
    pub h_b: Vec<ComplexVector>,
    pub beta2_br: f64,
    pub beta2_r: Vec<f64>,
    pub beta2_b: Vec<f64>,
}

impl ChannelSet {
    /// Builds a channel set from explicit links; checks dimensions only.
    pub fn from_parts(h_br: ComplexMatrix, h_r: Vec<ComplexVector>, h_b: Vec<ComplexVector>) -> Result<Self> {
        let n = h_br.nrows();
        let m = h_br.ncols();
        if h_r.len() != h_b.len() || h_b.is_empty() {
            return Err(Error::InvalidInput("h_r and h_b must have K >= 1 entries".into()));
        }
        if h_b.iter().any(|h| h.len() != m) && n > 0 {
            return Err(Error::InvalidInput("direct channels must have length M".into()));
        }
        if h_r.iter().any(|h| h.len() != n) {
            return Err(Error::InvalidInput("reflected channels must have length N".into()));
        }
        let k = h_b.len();
        let m = h_b[0].len();
        if h_b.iter().any(|h| h.len() != m) {
            return Err(Error::InvalidInput("direct channels must share length M".into()));
        }
        let h_br = if n == 0 { ComplexMatrix::zeros(0, m) } else { h_br };
        Ok(ChannelSet {
            h_br,
            h_r,
            h_b,
            beta2_br: 0.0,
            beta2_r: vec![0.0; k],
            beta2_b: vec![0.0; k],
        })
    }

    /// Draws the realization for Monte Carlo trial `trial`.
    ///
    /// LoS angles depend on the seed only; ME positions and Rayleigh links on
    /// `(seed, trial)`, with per-ME streams so that a realization for a larger
    /// `N`, `M` or `K` extends the smaller one.
    pub fn generate(cfg: &ScenarioConfig, trial: u64) -> Result<Self> {
        cfg.validate()?;
        let (m, n, k) = (cfg.m, cfg.n, cfg.k);
        let beta2_br = path_loss(distance(cfg.bs_pos, cfg.ris_pos), cfg.alpha_br, cfg.ref_loss_db)?;
        let mut los_rng = RngStream::new(cfg.seed, stream_id(streams::LOS, 0, 0));
        let h_br = los_bs_ris(m, n, 1.0, 0.5, 0.5, &mut los_rng, beta2_br);
        let mut pos_rng = RngStream::new(cfg.seed, stream_id(streams::POSITIONS, trial, 0));
        let positions: Vec<[f64; 3]> = (0..k).map(|_| me_position(cfg, &mut pos_rng)).collect();
        let mut h_r = Vec::with_capacity(k);
        let mut h_b = Vec::with_capacity(k);
        let mut beta2_r = Vec::with_capacity(k);
        let mut beta2_b = Vec::with_capacity(k);
        for (i, pos) in positions.iter().enumerate() {
            let b2r = path_loss(distance(cfg.ris_pos, *pos), cfg.alpha_rm, cfg.ref_loss_db)?;
            let b2b = path_loss(distance(cfg.bs_pos, *pos), cfg.alpha_bm, cfg.ref_loss_db)?;
            let mut rr = RngStream::new(cfg.seed, stream_id(streams::REFLECT, trial, i as u64));
            let mut rb = RngStream::new(cfg.seed, stream_id(streams::DIRECT, trial, i as u64));
            h_r.push(rayleigh_vector(n, b2r, &mut rr));
            h_b.push(rayleigh_vector(m, b2b, &mut rb));
            beta2_r.push(b2r);
            beta2_b.push(b2b);
        }
        Ok(ChannelSet {
            h_br,
            h_r,
            h_b,
            beta2_br,
            beta2_r,
            beta2_b,
        })
    }

    pub fn m(&self) -> usize {
        self.h_b[0].len()
    }

    pub fn n(&self) -> usize {
        self.h_br.nrows()
    }

    pub fn k(&self) -> usize {
        self.h_b.len()
    }

    /// Same direct links with the RIS removed (`N = 0`).
    pub fn without_ris(&self) -> ChannelSet {
        ChannelSet {
            h_br: ComplexMatrix::zeros(0, self.m()),
            h_r: vec![ComplexVector::zeros(0); self.k()],
            h_b: self.h_b.clone(),
            beta2_br: self.beta2_br,
            beta2_r: self.beta2_r.clone(),
            beta2_b: self.beta2_b.clone(),
        }
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Uniform draw in the half-disk of radius `me_radius` around the RIS on the
/// side facing the BS.
fn me_position(cfg: &ScenarioConfig, rng: &mut RngStream) -> [f64; 3] {
    let r = cfg.me_radius * (1.0 - rng.uniform(0.0, 1.0)).sqrt();
    let ang = rng.uniform(PI, 2.0 * PI);
    // Rotate so the half-disk opens toward the BS, whatever the geometry.
    let dx = cfg.bs_pos[0] - cfg.ris_pos[0];
    let dy = cfg.bs_pos[1] - cfg.ris_pos[1];
    let base = dy.atan2(dx) - 1.5 * PI;
    let a = ang + base;
    [cfg.ris_pos[0] + r * a.cos(), cfg.ris_pos[1] + r * a.sin(), cfg.ris_pos[2]]
}

/// Linear power gain `10^(ref_loss_db/10) · d^{−α}`.
pub fn path_loss(d: f64, alpha: f64, ref_loss_db: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("distance must be > 0, got {d}")));
    }
    Ok(db_to_linear(ref_loss_db) * d.powf(-alpha))
}

/// Full-rank BS→RIS LoS channel (`N × M`). Per RIS element, the azimuth is
/// uniform on `[0, 2π)` and the elevation uniform on `[0, π)`; departure and
/// arrival angles are tied by `φ₂ = π + φ₁`, `θ₂ = π − θ₁`.
pub fn los_bs_ris(
    m: usize,
    n: usize,
    wavelength: f64,
    d_bs: f64,
    d_ris: f64,
    rng: &mut RngStream,
    beta2_br: f64,
) -> ComplexMatrix {
    let amp = beta2_br.sqrt();
    let k0 = 2.0 * PI / wavelength;
    let mut h = ComplexMatrix::zeros(n, m);
    for r in 0..n {
        let phi1 = rng.uniform(0.0, 2.0 * PI);
        let theta1 = rng.uniform(0.0, PI);
        let phi2 = PI + phi1;
        let theta2 = PI - theta1;
        for c in 0..m {
            let ph = k0
                * (d_bs * c as f64 * phi1.sin() * theta1.sin()
                    + d_ris * r as f64 * phi2.sin() * theta2.sin());
            h[(r, c)] = C64::from_polar(amp, ph);
        }
    }
    h
}

/// I.i.d. CN(0, β²) vector.
pub fn rayleigh_vector(len: usize, beta2: f64, rng: &mut RngStream) -> ComplexVector {
    ComplexVector::from_fn(len, |_, _| rng.complex_gaussian(beta2))
}

/// `h_i(Φ)`, the conjugate transpose of `h_{r,i}^H Φ H_br + h_{b,i}^H`, so that
/// the received amplitude is `h_i(Φ)^H w`.
pub fn composite_channel(cs: &ChannelSet, phi: &PhaseVector, i: usize) -> Result<ComplexVector> {
    if i >= cs.k() {
        return Err(Error::InvalidInput(format!("ME index {i} out of range (K = {})", cs.k())));
    }
    if phi.len() != cs.n() {
        return Err(Error::InvalidInput(format!(
            "phase vector has length {}, expected N = {}",
            phi.len(),
            cs.n()
        )));
    }
    Ok(composite_unchecked(cs, &phi.coefficients(), i))
}

pub(crate) fn composite_unchecked(cs: &ChannelSet, coeffs: &[C64], i: usize) -> ComplexVector {
    let m = cs.m();
    let hr = &cs.h_r[i];
    let mut row = ComplexVector::zeros(m);
    for (n, c) in coeffs.iter().enumerate() {
        let g = hr[n].conj() * c;
        for col in 0..m {
            row[col] += g * cs.h_br[(n, col)];
        }
    }
    // row holds h_i^H(Φ) as entries; return its conjugate.
    ComplexVector::from_fn(m, |r, _| row[r].conj() + cs.h_b[i][r])
}

/// All composite channels for a phase configuration.
pub fn composite_all(cs: &ChannelSet, phi: &PhaseVector) -> Result<Vec<ComplexVector>> {
    (0..cs.k()).map(|i| composite_channel(cs, phi, i)).collect()
}

/// `|h_i^H(Φ) w|² / σ²`.
pub fn snr(cs: &ChannelSet, phi: &PhaseVector, w: &Beamformer, i: usize, sigma2: f64) -> Result<f64> {
    if w.len() != cs.m() {
        return Err(Error::InvalidInput("beamformer length must equal M".into()));
    }
    let h = composite_channel(cs, phi, i)?;
    Ok(h.dotc(&w.w).norm_sqr() / sigma2)
}
