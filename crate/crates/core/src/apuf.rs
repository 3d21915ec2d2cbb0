//! Additive-delay arbiter PUF.
//!
//! The delay difference at the arbiter is linear in the parity transform of
//! the challenge: `delta = w . phi(c) + noise + (adjust_low - adjust_up) * delta_unit`.
//! A positive difference latches 1; zero and below latch 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Width of a challenge is fixed by the register that produced it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Challenge {
    bits: u64,
    width: u32,
}

impl Challenge {
    /// Bit `i` of `bits` is `C_i`.
    pub fn new(bits: u64, width: u32) -> Result<Self> {
        if width == 0 || width > 64 || (width < 64 && bits >> width != 0) {
            return Err(Error::WidthMismatch {
                expected: width as usize,
                got: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(Challenge { bits, width })
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn bit(self, i: u32) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn to_binary(self) -> String {
        format!("{:0w$b}", self.bits, w = self.width as usize)
    }
}

/// `phi_i = prod_{j >= i} (1 - 2 c_j)` for `i < N`, and `phi_N = 1`.
pub fn parity_features(challenge: Challenge) -> Vec<f64> {
    let n = challenge.width as usize;
    let mut phi = vec![1.0; n + 1];
    let mut sign = 1.0;
    for i in (0..n).rev() {
        if challenge.bit(i as u32) {
            sign = -sign;
        }
        phi[i] = sign;
    }
    phi
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ApufInstance {
    pub n_stages: usize,
    pub rng_seed: u64,
    pub sigma_noise: f64,
    pub delta_unit: f64,
    pub adjust_up: u32,
    pub adjust_low: u32,
    pub weights: Vec<f64>,
}

pub const DEFAULT_DELTA_UNIT: f64 = 0.05;

/// Draws `n_stages + 1` weights i.i.d. N(0, 1) from `rng_seed`.
pub fn sample_instance(n_stages: usize, rng_seed: u64, sigma_noise: f64, delta_unit: f64) -> ApufInstance {
    assert!(n_stages >= 1, "an arbiter PUF needs at least one stage");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let weights = (0..=n_stages).map(|_| rng.sample(StandardNormal)).collect();
    ApufInstance {
        n_stages,
        rng_seed,
        sigma_noise,
        delta_unit,
        adjust_up: 0,
        adjust_low: 0,
        weights,
    }
}

impl ApufInstance {
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.n_stages + 1 {
            return Err(Error::WidthMismatch {
                expected: self.n_stages + 1,
                got: self.weights.len(),
            });
        }
        if self.sigma_noise.is_nan() || self.sigma_noise < 0.0 || self.delta_unit.is_nan() || self.delta_unit <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma_noise {} and delta_unit {} must be >= 0 and > 0",
                self.sigma_noise, self.delta_unit
            )));
        }
        Ok(())
    }

    /// Constant routing bias, folded into the always-on feature weight.
    pub fn with_bias(mut self, bias: f64) -> Self {
        self.weights[self.n_stages] += bias;
        self
    }

    fn check_width(&self, challenge: Challenge) -> Result<()> {
        if challenge.width as usize != self.n_stages {
            return Err(Error::WidthMismatch {
                expected: self.n_stages,
                got: challenge.width as usize,
            });
        }
        Ok(())
    }

    pub fn compensation(&self) -> f64 {
        (self.adjust_low as f64 - self.adjust_up as f64) * self.delta_unit
    }

    /// Noiseless delay difference, compensation included.
    pub fn delay_difference(&self, challenge: Challenge) -> Result<f64> {
        self.check_width(challenge)?;
        let mut sign = 1.0;
        let mut acc = self.weights[self.n_stages];
        for i in (0..self.n_stages).rev() {
            if challenge.bit(i as u32) {
                sign = -sign;
            }
            acc += self.weights[i] * sign;
        }
        Ok(acc + self.compensation())
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_noise == 0.0 {
            0.0
        } else {
            self.sigma_noise * rng.sample::<f64, _>(StandardNormal)
        }
    }

    /// One noisy evaluation with a fresh draw from `rng`.
    pub fn evaluate<R: Rng + ?Sized>(&self, challenge: Challenge, rng: &mut R) -> Result<bool> {
        let noise = self.draw_noise(rng);
        evaluate_raw(self, challenge, noise)
    }
}

pub fn evaluate_raw(instance: &ApufInstance, challenge: Challenge, noise_draw: f64) -> Result<bool> {
    Ok(instance.delay_difference(challenge)? + noise_draw > 0.0)
}

/// `P(bit = 1)` under Gaussian noise. With `sigma_noise = 0` this is the
/// indicator of a positive noiseless difference.
pub fn response_probability_one(instance: &ApufInstance, challenge: Challenge) -> Result<f64> {
    let mu = instance.delay_difference(challenge)?;
    if instance.sigma_noise == 0.0 {
        return Ok(if mu > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(standard_normal_cdf(mu / instance.sigma_noise))
}

pub(crate) fn standard_normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Noise level at which a challenge with noiseless margin `|delta|` flips
/// with probability `error`.
pub fn sigma_for_error(margin: f64, error: f64) -> f64 {
    margin.abs() / Normal::standard().inverse_cdf(1.0 - error)
}
