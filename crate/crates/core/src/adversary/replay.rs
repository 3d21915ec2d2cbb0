//! Replay man-in-the-middle: record challenge/response payloads off the
//! carrier, then impersonate the tag by answering from the recording.
//! The attacker keys its store by payload content only; tick gaps are not
//! recorded.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::protocol::{run_authentication, Channel, Frame, FrameKind, TagEndpoint};
use crate::report::Record;
use crate::server::{ServerRegistry, Session, SessionGenerator};

#[derive(Clone, Default, Debug)]
pub struct ReplayAttacker {
    pub store: HashMap<BitString, BitString>,
}

impl ReplayAttacker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pairs every challenge frame with the response frame right after it.
    pub fn eavesdrop(&mut self, frames: &[Frame]) {
        for w in frames.windows(2) {
            if w[0].kind == FrameKind::Challenge && w[1].kind == FrameKind::Response {
                self.store.insert(w[0].payload.clone(), w[1].payload.clone());
            }
        }
    }

    pub fn knows(&self, challenge: &BitString) -> bool {
        self.store.contains_key(challenge)
    }
}

impl TagEndpoint for ReplayAttacker {
    fn power_up(&mut self) {}

    fn on_challenge(&mut self, frame: &Frame) -> Result<Option<BitString>> {
        Ok(self.store.get(&frame.payload).cloned())
    }
}

/// How the server picks `t` in replayed sessions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IntervalPolicy {
    /// Uniform over the registry's range.
    Random,
    /// Uniform over the values whose parity matches the recorded `t`.
    ForceMatch,
    /// Uniform over the values whose parity differs from the recorded `t`.
    ForceFlip,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ReplayScenario {
    /// The eavesdropped honest session.
    pub recorded: Session,
    /// Server reissues the recorded `C1`, `C2` instead of fresh ones.
    pub reuse_challenges: bool,
    pub interval: IntervalPolicy,
    pub sessions: usize,
    pub seed: u64,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReplaySessionLog {
    pub session: Session,
    pub parity_match: bool,
    pub hit_c1: bool,
    pub hit_c2: bool,
    pub d1: bool,
    pub d2: bool,
    pub pass: bool,
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct AttackReport {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub match_trials: usize,
    pub match_successes: usize,
    pub mismatch_trials: usize,
    pub mismatch_successes: usize,
    pub logs: Vec<ReplaySessionLog>,
}

impl AttackReport {
    fn push(&mut self, log: ReplaySessionLog) {
        self.trials += 1;
        self.successes += log.pass as usize;
        if log.parity_match {
            self.match_trials += 1;
            self.match_successes += log.pass as usize;
        } else {
            self.mismatch_trials += 1;
            self.mismatch_successes += log.pass as usize;
        }
        self.success_rate = self.successes as f64 / self.trials as f64;
        self.logs.push(log);
    }

    /// Merges reports from independent trial batches.
    pub fn merge(mut self, other: AttackReport) -> AttackReport {
        for log in other.logs {
            self.push(log);
        }
        self
    }
}

impl Record for AttackReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("trials", self.trials.to_string()),
            ("successes", self.successes.to_string()),
            ("success_rate", format!("{:.6}", self.success_rate)),
            ("parity_match_trials", self.match_trials.to_string()),
            ("parity_match_successes", self.match_successes.to_string()),
            ("parity_mismatch_trials", self.mismatch_trials.to_string()),
            ("parity_mismatch_successes", self.mismatch_successes.to_string()),
        ]
    }
}

fn draw_interval(
    gen: &mut SessionGenerator,
    rng: &mut ChaCha8Rng,
    range: (u64, u64),
    recorded: u64,
    policy: IntervalPolicy,
) -> Result<u64> {
    let want = match policy {
        IntervalPolicy::Random => return Ok(gen.interval()),
        IntervalPolicy::ForceMatch => recorded % 2,
        IntervalPolicy::ForceFlip => 1 - recorded % 2,
    };
    let options: Vec<u64> = (range.0..=range.1).filter(|t| t % 2 == want && *t >= 2).collect();
    if options.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "t range {range:?} has no value of parity {want}"
        )));
    }
    Ok(options[rng.random_range(0..options.len())])
}

/// Plays the attacker against the server for `scenario.sessions` sessions.
/// An unknown challenge leaves the attacker silent, which the server reads
/// as a timeout.
pub fn replay_attack(
    attacker: &ReplayAttacker,
    registry: &ServerRegistry,
    scenario: &ReplayScenario,
) -> Result<AttackReport> {
    if attacker.store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let mut gen = SessionGenerator::new(registry.stages, registry.t_range, scenario.seed)?;
    let mut pick = ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x5eed);
    let mut tag = attacker.clone();
    let mut channel = Channel::new();
    let mut report = AttackReport::default();
    for _ in 0..scenario.sessions {
        let t = draw_interval(
            &mut gen,
            &mut pick,
            registry.t_range,
            scenario.recorded.t,
            scenario.interval,
        )?;
        let session = if scenario.reuse_challenges {
            Session { t, ..scenario.recorded }
        } else {
            Session {
                c1: gen.challenge(),
                c2: gen.challenge(),
                t,
            }
        };
        let r = run_authentication(registry, &mut tag, &mut channel, session)?;
        let hit = |c: u64| attacker.knows(&BitString::from_u64(c, registry.stages));
        report.push(ReplaySessionLog {
            session,
            parity_match: t % 2 == scenario.recorded.t % 2,
            hit_c1: hit(session.c1),
            hit_c2: hit(session.c2),
            d1: r.d1,
            d2: r.d2,
            pass: r.pass,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_pair(c: u64, r: u64) -> [Frame; 2] {
        [
            Frame::challenge(c, BitString::from_u64(c, 8)),
            Frame::response(c + 1, BitString::from_u64(r, 4)),
        ]
    }

    #[test]
    fn eavesdrop_pairs_frames() {
        let mut a = ReplayAttacker::new();
        let mut frames = Vec::new();
        frames.extend(frame_pair(10, 3));
        frames.extend(frame_pair(20, 5));
        a.eavesdrop(&frames);
        assert_eq!(a.store.len(), 2);
        a.eavesdrop(&frame_pair(10, 9));
        assert_eq!(a.store.len(), 2);
        assert_eq!(a.store[&BitString::from_u64(10, 8)], BitString::from_u64(9, 4));
        a.eavesdrop(&[]);
        assert_eq!(a.store.len(), 2);
    }

    #[test]
    fn unknown_challenge_gets_silence() {
        let mut a = ReplayAttacker::new();
        a.eavesdrop(&frame_pair(10, 3));
        let reply = a
            .on_challenge(&Frame::challenge(50, BitString::from_u64(11, 8)))
            .unwrap();
        assert_eq!(reply, None);
        let reply = a
            .on_challenge(&Frame::challenge(51, BitString::from_u64(10, 8)))
            .unwrap();
        assert_eq!(reply, Some(BitString::from_u64(3, 4)));
    }
}
