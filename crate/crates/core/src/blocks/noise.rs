use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-mean Gaussian measurement noise held for `sample_time` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub enabled: bool,
    /// deg².
    pub variance: f64,
    pub sample_time: f64,
    /// Overrides the scenario seed when set.
    pub seed: Option<u64>,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            enabled: true,
            variance: 0.1,
            sample_time: 0.01,
            seed: None,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::config(format!("noise.variance must be >= 0, got {}", self.variance)));
        }
        if !(self.sample_time.is_finite() && self.sample_time > 0.0) {
            return Err(Error::config(format!(
                "noise.sample_time must be > 0, got {}",
                self.sample_time
            )));
        }
        Ok(())
    }
}

/// Zero-order-hold white noise generator.
///
/// Hold `k` covers `[k·h, (k+1)·h)` and its value is the `k`-th draw of the
/// seeded stream, so the value at a given time does not depend on how
/// often the source is sampled.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    params: NoiseParams,
    seed: u64,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    hold: Option<u64>,
    value: f64,
}

impl NoiseSource {
    pub fn new(params: &NoiseParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let seed = params.seed.unwrap_or(seed);
        let normal = Normal::new(0.0, params.variance.sqrt())
            .map_err(|e| Error::config(format!("noise distribution: {e}")))?;
        Ok(Self {
            params: *params,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal,
            hold: None,
            value: 0.0,
        })
    }

    /// Noise value at time `t` (s). Sampling is cheapest for non-decreasing
    /// `t`; going back in time replays the stream from the seed.
    pub fn sample(&mut self, t: f64) -> f64 {
        if !self.params.enabled || self.params.variance == 0.0 {
            return 0.0;
        }
        let ratio = t.max(0.0) / self.params.sample_time;
        // Absorb rounding so that t = k·h lands in hold k.
        let index = (ratio + 1e-9 * ratio.max(1.0)).floor() as u64;
        if matches!(self.hold, Some(h) if h > index) {
            self.rng = ChaCha8Rng::seed_from_u64(self.seed);
            self.hold = None;
        }
        while self.hold.is_none_or(|h| h < index) {
            self.value = self.normal.sample(&mut self.rng);
            self.hold = Some(self.hold.map_or(0, |h| h + 1));
        }
        self.value
    }
}

/// Free-function form of [`NoiseSource::sample`].
pub fn noise_sample(source: &mut NoiseSource, t: f64) -> f64 {
    source.sample(t)
}
