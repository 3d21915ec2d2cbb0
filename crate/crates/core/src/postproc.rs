//! Post-processing: system initialization (randomness adjustment), the
//! temporal-majority voter and XOR folding.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apuf::{ApufInstance, Challenge};
use crate::error::{Error, Result};
use crate::seed::mix_seed;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AdjustParams {
    pub pulse_count: u32,
    pub window_halfwidth: u32,
    pub max_rounds: u32,
    pub rng_seed: u64,
}

impl Default for AdjustParams {
    fn default() -> Self {
        AdjustParams {
            pulse_count: 96,
            window_halfwidth: 6,
            max_rounds: 1000,
            rng_seed: 0,
        }
    }
}

impl AdjustParams {
    pub fn with_seed(rng_seed: u64) -> Self {
        AdjustParams {
            rng_seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulse_count == 0 || !self.pulse_count.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "pulse_count {} must be even and positive",
                self.pulse_count
            )));
        }
        if self.window_halfwidth == 0 || self.window_halfwidth >= self.pulse_count / 2 {
            return Err(Error::InvalidConfig(format!(
                "window_halfwidth {} must lie in (0, {})",
                self.window_halfwidth,
                self.pulse_count / 2
            )));
        }
        Ok(())
    }

    /// Exclusive accept band on the zero count.
    pub fn band(&self) -> (u32, u32) {
        let mid = self.pulse_count / 2;
        (mid - self.window_halfwidth, mid + self.window_halfwidth)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AdjustReport {
    pub rounds_used: u32,
    pub final_zero_count: u32,
    pub adjust_up: u32,
    pub adjust_low: u32,
    pub f_ready: bool,
}

impl fmt::Display for AdjustReport {
    /// Log record: `rounds zeros up low ready`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.rounds_used, self.final_zero_count, self.adjust_up, self.adjust_low, self.f_ready as u8
        )
    }
}

impl FromStr for AdjustReport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<u32> = s
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| Error::Parse(format!("bad adjust record {s:?}"))))
            .collect::<Result<_>>()?;
        match fields[..] {
            [rounds_used, final_zero_count, adjust_up, adjust_low, ready @ (0 | 1)] => Ok(AdjustReport {
                rounds_used,
                final_zero_count,
                adjust_up,
                adjust_low,
                f_ready: ready == 1,
            }),
            _ => Err(Error::Parse(format!("bad adjust record {s:?}"))),
        }
    }
}

/// The pulse stream of a round is keyed by the seed and the current
/// compensation counters, so a converged instance replays its final round.
fn round_seed(seed: u64, instance: &ApufInstance) -> u64 {
    mix_seed(seed, (instance.adjust_up as u64) << 32 | instance.adjust_low as u64)
}

/// Successive-approximation compensation of the arbiter's path skew.
///
/// Each round clocks `pulse_count` fresh random challenges and counts the
/// zeros. A count strictly inside the band stops the loop with the counters
/// left as they are; too few zeros adds a unit to the upper path, too many
/// adds one to the lower path.
pub fn randomness_adjust(instance: &mut ApufInstance, params: &AdjustParams) -> Result<AdjustReport> {
    params.validate()?;
    instance.validate()?;
    let (low, high) = params.band();
    let width = instance.n_stages as u32;
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };

    for round in 1..=params.max_rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(round_seed(params.rng_seed, instance));
        let mut zeros = 0;
        for _ in 0..params.pulse_count {
            let challenge = Challenge::new(rng.random::<u64>() & mask, width)?;
            if !instance.evaluate(challenge, &mut rng)? {
                zeros += 1;
            }
        }
        if zeros > low && zeros < high {
            return Ok(AdjustReport {
                rounds_used: round,
                final_zero_count: zeros,
                adjust_up: instance.adjust_up,
                adjust_low: instance.adjust_low,
                f_ready: true,
            });
        }
        if zeros <= low {
            instance.adjust_up += 1;
        } else {
            instance.adjust_low += 1;
        }
    }
    Err(Error::NoConvergence(params.max_rounds))
}

pub fn majority(bits: &[bool]) -> Result<bool> {
    if bits.len().is_multiple_of(2) {
        return Err(Error::EvenVoterWidth(bits.len() as u32));
    }
    let ones = bits.iter().filter(|&&b| b).count();
    Ok(ones * 2 > bits.len())
}

/// Majority over `voter_t` independent noisy evaluations.
pub fn vote<R: Rng + ?Sized>(instance: &ApufInstance, challenge: Challenge, voter_t: u32, rng: &mut R) -> Result<bool> {
    if voter_t.is_multiple_of(2) {
        return Err(Error::EvenVoterWidth(voter_t));
    }
    if instance.sigma_noise == 0.0 {
        return instance.evaluate(challenge, rng);
    }
    let mut ones = 0;
    for _ in 0..voter_t {
        if instance.evaluate(challenge, rng)? {
            ones += 1;
        }
    }
    Ok(ones * 2 > voter_t)
}

pub fn xor_fold(bits: &[bool]) -> Result<bool> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(bits.iter().fold(false, |acc, &b| acc ^ b))
}
