use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ComplexVector, C64};
use crate::error::{Error, Result};

/// Seeded random stream. Identical `(seed, stream)` pairs reproduce identical
/// draws; distinct stream ids are independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// One CN(0, variance) draw.
    pub fn complex_gaussian(&mut self, variance: f64) -> C64 {
        let s = (variance / 2.0).sqrt();
        let re = self.standard_normal();
        let im = self.standard_normal();
        C64::new(s * re, s * im)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Packs a stream id from a kind tag and two indices.
pub fn stream_id(kind: u8, a: u64, b: u64) -> u64 {
    ((kind as u64) << 56) | ((a & 0xff_ffff_ffff) << 16) | (b & 0xffff)
}

/// `n` i.i.d. circularly-symmetric complex Gaussian entries with the given
/// per-entry variance.
pub fn sample_complex_gaussian(n: usize, variance: f64, rng: &mut RngStream) -> Result<ComplexVector> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidInput(format!("variance must be >= 0, got {variance}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("sample length must be >= 1".into()));
    }
    Ok(ComplexVector::from_fn(n, |_, _| rng.complex_gaussian(variance)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_and_independence_of_streams() {
        let a = sample_complex_gaussian(16, 1.0, &mut RngStream::new(7, 3)).unwrap();
        let b = sample_complex_gaussian(16, 1.0, &mut RngStream::new(7, 3)).unwrap();
        let c = sample_complex_gaussian(16, 1.0, &mut RngStream::new(7, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_variance_and_errors() {
        let z = sample_complex_gaussian(5, 0.0, &mut RngStream::new(1, 0)).unwrap();
        assert!(z.iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert!(sample_complex_gaussian(5, -1.0, &mut RngStream::new(1, 0)).is_err());
        assert!(sample_complex_gaussian(0, 1.0, &mut RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn stream_ids_do_not_collide() {
        assert_ne!(stream_id(1, 2, 3), stream_id(2, 2, 3));
        assert_ne!(stream_id(1, 2, 3), stream_id(1, 3, 3));
        assert_ne!(stream_id(1, 2, 3), stream_id(1, 2, 4));
    }
}
