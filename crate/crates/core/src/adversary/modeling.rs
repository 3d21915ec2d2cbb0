//! Linear modeling attack: logistic regression over the parity features.
//! The attacker only ever sees `CrpRecord`s.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apuf::{parity_features, ApufInstance, Challenge};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::obfuscator::{generate_response, DualLfsrSpec, Mode};
use crate::postproc::vote;
use crate::report::Record;
use crate::seed::mix_seed;

/// Which response the oracle hands out for each external challenge.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CrpKind {
    /// Raw APUF bit for the challenge itself.
    Naked,
    /// Final lane bit under a fixed selection mode.
    Obfuscated(Mode),
    /// Final lane bit with the mode drawn per challenge, as an attacker
    /// blind to `t` would see it.
    MixedParity,
}

impl FromStr for CrpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naked" => Ok(CrpKind::Naked),
            "obfuscated" | "m1" => Ok(CrpKind::Obfuscated(Mode::Original)),
            "m0" => Ok(CrpKind::Obfuscated(Mode::Swapped)),
            "mixed" => Ok(CrpKind::MixedParity),
            other => Err(Error::Parse(format!("unknown CRP kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CrpRecord {
    pub challenge: Challenge,
    pub label: bool,
}

impl fmt::Display for CrpRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = BitString::from_u64(self.challenge.bits(), self.challenge.width() as usize).to_hex();
        write!(f, "{hex} {}", self.label as u8)
    }
}

impl CrpRecord {
    pub fn parse(line: &str, width: u32) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let (Some(hex), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("expected `challenge_hex label`, got {line:?}")));
        };
        let bits = BitString::from_hex(hex, width as usize)?;
        let label = match label {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("label must be 0 or 1, got {other:?}"))),
        };
        Ok(CrpRecord {
            challenge: Challenge::new(
                bits.to_u64().ok_or(Error::WidthMismatch {
                    expected: 64,
                    got: bits.len(),
                })?,
                width,
            )?,
            label,
        })
    }
}

pub fn dataset_to_text(records: &[CrpRecord]) -> String {
    records.iter().map(|r| format!("{r}\n")).collect()
}

/// Blank lines and `#` comments are skipped.
pub fn dataset_from_text(text: &str, width: u32) -> Result<Vec<CrpRecord>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| CrpRecord::parse(l, width))
        .collect()
}

fn random_challenges(width: u32, count: usize, seed: u64) -> Vec<Challenge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    (0..count)
        .map(|_| Challenge::new(rng.random_range(1..=max), width).expect("in range"))
        .collect()
}

/// Uniform nonzero challenges labelled by the lane's voted naked bit.
pub fn collect_naked_crps(lane: &ApufInstance, count: usize, voter_t: u32, seed: u64) -> Result<Vec<CrpRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    random_challenges(lane.n_stages as u32, count, seed)
        .into_iter()
        .map(|challenge| {
            Ok(CrpRecord {
                challenge,
                label: vote(lane, challenge, voter_t, &mut rng)?,
            })
        })
        .collect()
}

/// External challenge to final lane bit. `mode = None` draws the mode per
/// record.
pub fn collect_obfuscated_crps(
    pair: &DualLfsrSpec,
    lane: &ApufInstance,
    mode: Option<Mode>,
    count: usize,
    voter_t: u32,
    seed: u64,
) -> Result<Vec<CrpRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    random_challenges(lane.n_stages as u32, count, seed)
        .into_iter()
        .map(|challenge| {
            let m = mode.unwrap_or_else(|| Mode::from_bit(rng.random()));
            Ok(CrpRecord {
                challenge,
                label: generate_response(pair, lane, challenge.bits(), m, voter_t, &mut rng)?,
            })
        })
        .collect()
}

pub fn collect_crps(
    kind: CrpKind,
    pair: &DualLfsrSpec,
    lane: &ApufInstance,
    count: usize,
    voter_t: u32,
    seed: u64,
) -> Result<Vec<CrpRecord>> {
    match kind {
        CrpKind::Naked => collect_naked_crps(lane, count, voter_t, seed),
        CrpKind::Obfuscated(m) => collect_obfuscated_crps(pair, lane, Some(m), count, voter_t, seed),
        CrpKind::MixedParity => collect_obfuscated_crps(pair, lane, None, count, voter_t, seed),
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TrainParams {
    /// Fraction of records used for training; the rest is holdout.
    pub split: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            split: 0.8,
            epochs: 60,
            learning_rate: 0.5,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidConfig(format!("split {} must lie in (0,1)", self.split)));
        }
        if self.batch_size == 0 || self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "batch size and learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct LinearAttackModel {
    /// One weight per parity feature, `N + 1` in total.
    pub weights: Vec<f64>,
    pub train_size: usize,
    pub test_size: usize,
    pub train_accuracy: f64,
    pub holdout_accuracy: f64,
}

impl LinearAttackModel {
    pub fn predict(&self, challenge: Challenge) -> bool {
        dot(&self.weights, &parity_features(challenge)) > 0.0
    }

    pub fn accuracy(&self, records: &[CrpRecord]) -> f64 {
        if records.is_empty() {
            return 0.0;
        }
        let hits = records.iter().filter(|r| self.predict(r.challenge) == r.label).count();
        hits as f64 / records.len() as f64
    }
}

impl Record for LinearAttackModel {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("train_size", self.train_size.to_string()),
            ("test_size", self.test_size.to_string()),
            ("train_accuracy", format!("{:.6}", self.train_accuracy)),
            ("holdout_accuracy", format!("{:.6}", self.holdout_accuracy)),
        ]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Minibatch gradient descent on the logistic loss. The first
/// `split * len` records train, the rest are held out.
pub fn train_linear_attack(crps: &[CrpRecord], params: &TrainParams) -> Result<LinearAttackModel> {
    params.validate()?;
    if crps.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = crps[0].challenge.width();
    if let Some(r) = crps.iter().find(|r| r.challenge.width() != width) {
        return Err(Error::WidthMismatch {
            expected: width as usize,
            got: r.challenge.width() as usize,
        });
    }
    let train_size = ((crps.len() as f64 * params.split).round() as usize).clamp(1, crps.len());
    let (train, test) = crps.split_at(train_size);

    let dim = width as usize + 1;
    let features: Vec<Vec<f64>> = train.iter().map(|r| parity_features(r.challenge)).collect();
    let labels: Vec<f64> = train.iter().map(|r| r.label as u8 as f64).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut weights = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        // 1/sqrt decay keeps late epochs from bouncing around the separator.
        let lr = params.learning_rate / (1.0 + epoch as f64).sqrt();
        for batch in order.chunks(params.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let err = sigmoid(dot(&weights, &features[i])) - labels[i];
                for (g, x) in grad.iter_mut().zip(&features[i]) {
                    *g += err * x;
                }
            }
            let scale = lr / batch.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= scale * g;
            }
        }
    }

    let mut model = LinearAttackModel {
        weights,
        train_size: train.len(),
        test_size: test.len(),
        train_accuracy: 0.0,
        holdout_accuracy: 0.0,
    };
    model.train_accuracy = model.accuracy(train);
    model.holdout_accuracy = model.accuracy(test);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apuf::sample_instance;

    #[test]
    fn dataset_round_trip() {
        let lane = sample_instance(12, 4, 0.0, 0.05);
        let crps = collect_naked_crps(&lane, 50, 1, 9).unwrap();
        let text = dataset_to_text(&crps);
        assert_eq!(text.lines().next().unwrap().len(), 5);
        assert_eq!(dataset_from_text(&text, 12).unwrap(), crps);
        assert!(dataset_from_text("fff 2\n", 12).is_err());
        assert!(dataset_from_text("fff\n", 12).is_err());
    }

    #[test]
    fn empty_dataset() {
        assert!(matches!(
            train_linear_attack(&[], &TrainParams::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn deterministic() {
        let lane = sample_instance(16, 2, 0.0, 0.05);
        let crps = collect_naked_crps(&lane, 2000, 1, 3).unwrap();
        let p = TrainParams {
            epochs: 5,
            ..Default::default()
        };
        assert_eq!(
            train_linear_attack(&crps, &p).unwrap(),
            train_linear_attack(&crps, &p).unwrap()
        );
    }

    #[test]
    fn learns_naked_lane() {
        let lane = sample_instance(16, 5, 0.0, 0.05);
        let crps = collect_naked_crps(&lane, 5000, 1, 11).unwrap();
        let m = train_linear_attack(
            &crps,
            &TrainParams {
                epochs: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(m.holdout_accuracy >= 0.95, "{m:?}");
    }

    #[test]
    fn coin_flips_stay_near_half() {
        let lane = sample_instance(16, 5, 0.0, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let crps: Vec<_> = collect_naked_crps(&lane, 5000, 1, 11)
            .unwrap()
            .into_iter()
            .map(|r| CrpRecord {
                label: rng.random(),
                ..r
            })
            .collect();
        let m = train_linear_attack(
            &crps,
            &TrainParams {
                epochs: 10,
                ..Default::default()
            },
        )
        .unwrap();
        // 1000 holdout records: 3 sigma is about 0.047
        assert!((m.holdout_accuracy - 0.5).abs() < 0.05, "{m:?}");
    }
}
