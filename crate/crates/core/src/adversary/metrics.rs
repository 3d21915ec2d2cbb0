//! Uniformity, reliability and uniqueness over a challenge sample.
//! All three are ratios of integer bit counts.

use rand::Rng;

use crate::apuf::{ApufInstance, Challenge};
use crate::bits::BitString;
use crate::device::PufDevice;
use crate::error::{Error, Result};
use crate::obfuscator::Mode;
use crate::report::Record;

pub const MIN_SAMPLE: usize = 1000;

/// Something that answers a challenge with a bit string.
pub trait ResponseSource {
    fn stages(&self) -> usize;
    fn response<R: Rng + ?Sized>(&self, challenge: u64, rng: &mut R) -> Result<BitString>;
}

/// A bare lane: one noisy evaluation, no voter.
impl ResponseSource for ApufInstance {
    fn stages(&self) -> usize {
        self.n_stages
    }

    fn response<R: Rng + ?Sized>(&self, challenge: u64, rng: &mut R) -> Result<BitString> {
        let c = Challenge::new(challenge, self.n_stages as u32)?;
        Ok(BitString::new(vec![self.evaluate(c, rng)?]))
    }
}

/// The full tag output in original mode.
impl ResponseSource for PufDevice {
    fn stages(&self) -> usize {
        self.config.stages
    }

    fn response<R: Rng + ?Sized>(&self, challenge: u64, rng: &mut R) -> Result<BitString> {
        self.respond(challenge, Mode::Original, rng)
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PufMetrics {
    pub sources: usize,
    pub challenges: usize,
    pub repeats: usize,
    pub uniformity: f64,
    pub reliability: f64,
    /// `None` with fewer than two sources.
    pub uniqueness: Option<f64>,
}

impl Record for PufMetrics {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("sources", self.sources.to_string()),
            ("challenges", self.challenges.to_string()),
            ("repeats", self.repeats.to_string()),
            ("uniformity", format!("{:.6}", self.uniformity)),
            ("reliability", format!("{:.6}", self.reliability)),
            (
                "uniqueness",
                self.uniqueness.map_or_else(|| "na".to_string(), |u| format!("{u:.6}")),
            ),
        ]
    }
}

/// The first evaluation of each challenge is the reference response; it
/// feeds uniformity and uniqueness. `repeats` further evaluations are
/// compared against it for reliability.
pub fn puf_metrics<S: ResponseSource, R: Rng + ?Sized>(
    sources: &[S],
    challenges: &[u64],
    repeats: usize,
    rng: &mut R,
) -> Result<PufMetrics> {
    if challenges.len() < MIN_SAMPLE {
        return Err(Error::InsufficientSample {
            got: challenges.len(),
            min: MIN_SAMPLE,
        });
    }
    if sources.is_empty() {
        return Err(Error::EmptyInput);
    }
    if repeats == 0 {
        return Err(Error::InvalidConfig("need at least one repeat for reliability".into()));
    }

    let mut ones = 0u64;
    let mut total = 0u64;
    let mut intra = 0u64;
    let mut intra_total = 0u64;
    let mut references: Vec<Vec<BitString>> = Vec::with_capacity(sources.len());
    for s in sources {
        let mut refs = Vec::with_capacity(challenges.len());
        for &c in challenges {
            let r = s.response(c, rng)?;
            ones += r.count_ones() as u64;
            total += r.len() as u64;
            for _ in 0..repeats {
                intra += r.hamming_distance(&s.response(c, rng)?)? as u64;
                intra_total += r.len() as u64;
            }
            refs.push(r);
        }
        references.push(refs);
    }

    let uniqueness = if sources.len() < 2 {
        None
    } else {
        let mut inter = 0u64;
        let mut inter_total = 0u64;
        for i in 0..references.len() {
            for j in i + 1..references.len() {
                for (a, b) in references[i].iter().zip(&references[j]) {
                    inter += a.hamming_distance(b)? as u64;
                    inter_total += a.len() as u64;
                }
            }
        }
        Some(inter as f64 / inter_total as f64)
    };

    Ok(PufMetrics {
        sources: sources.len(),
        challenges: challenges.len(),
        repeats,
        uniformity: ones as f64 / total as f64,
        reliability: 1.0 - intra as f64 / intra_total as f64,
        uniqueness,
    })
}
