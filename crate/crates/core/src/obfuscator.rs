//! Dual-LFSR time-variant challenge obfuscation.
//!
//! Both registers are seeded with the external challenge and clocked
//! together. Each round the real challenge is taken from one of them,
//! chosen by the previous round's voted response and the mode bit:
//!
//! | mode               | prev = 0 | prev = 1 |
//! |--------------------|----------|----------|
//! | original (t odd)   | LFSR1    | LFSR2    |
//! | swapped (t even)   | LFSR2    | LFSR1    |
//!
//! The final response bit is the XOR of the per-round responses.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apuf::{ApufInstance, Challenge};
use crate::error::{Error, Result};
use crate::lfsr::{is_m_sequence, make_lfsr, LfsrSpec, LfsrState};
use crate::postproc::{vote, xor_fold};

pub const DEFAULT_ROUNDS: usize = 5;

/// Selection mode `M`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Mode {
    /// `M = 1`, odd interval.
    Original,
    /// `M = 0`, even interval.
    Swapped,
}

impl Mode {
    pub fn from_interval(t: u64) -> Mode {
        if t % 2 == 1 {
            Mode::Original
        } else {
            Mode::Swapped
        }
    }

    pub fn from_bit(bit: bool) -> Mode {
        if bit {
            Mode::Original
        } else {
            Mode::Swapped
        }
    }

    pub fn bit(self) -> bool {
        self == Mode::Original
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LfsrChoice {
    First,
    Second,
}

impl LfsrChoice {
    fn select(prev_response: bool, mode: Mode) -> LfsrChoice {
        if prev_response != mode.bit() {
            LfsrChoice::First
        } else {
            LfsrChoice::Second
        }
    }

    pub fn index(self) -> u8 {
        match self {
            LfsrChoice::First => 1,
            LfsrChoice::Second => 2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawDualSpec", into = "RawDualSpec")]
pub struct DualLfsrSpec {
    first: LfsrSpec,
    second: LfsrSpec,
    rounds_per_response: usize,
}

#[derive(Serialize, Deserialize)]
struct RawDualSpec {
    first: LfsrSpec,
    second: LfsrSpec,
    rounds: usize,
}

impl TryFrom<RawDualSpec> for DualLfsrSpec {
    type Error = Error;

    fn try_from(raw: RawDualSpec) -> Result<Self> {
        DualLfsrSpec::new(raw.first, raw.second, raw.rounds)
    }
}

impl From<DualLfsrSpec> for RawDualSpec {
    fn from(spec: DualLfsrSpec) -> Self {
        RawDualSpec {
            first: spec.first,
            second: spec.second,
            rounds: spec.rounds_per_response,
        }
    }
}

impl DualLfsrSpec {
    pub fn new(first: LfsrSpec, second: LfsrSpec, rounds_per_response: usize) -> Result<Self> {
        if first.order() != second.order() {
            return Err(Error::InvalidConfig(format!(
                "LFSR orders differ: {} vs {}",
                first.order(),
                second.order()
            )));
        }
        if first == second {
            return Err(Error::InvalidConfig(format!("both LFSRs use {first}")));
        }
        for spec in [first, second] {
            if !is_m_sequence(spec) {
                return Err(Error::InvalidConfig(format!("{spec} does not generate an m-sequence")));
            }
        }
        if rounds_per_response == 0 {
            return Err(Error::InvalidConfig("rounds_per_response must be positive".into()));
        }
        Ok(DualLfsrSpec {
            first,
            second,
            rounds_per_response,
        })
    }

    pub fn first(&self) -> LfsrSpec {
        self.first
    }

    pub fn second(&self) -> LfsrSpec {
        self.second
    }

    pub fn order(&self) -> u32 {
        self.first.order()
    }

    pub fn rounds_per_response(&self) -> usize {
        self.rounds_per_response
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ObfuscatorState {
    pub state1: LfsrState,
    pub state2: LfsrState,
    pub round: usize,
    pub prev_response: bool,
    pub mode: Mode,
}

pub fn seed_obfuscator(spec: &DualLfsrSpec, external_challenge: u64, mode: Mode) -> Result<ObfuscatorState> {
    Ok(ObfuscatorState {
        state1: make_lfsr(spec.first, external_challenge)?,
        state2: make_lfsr(spec.second, external_challenge)?,
        round: 0,
        prev_response: false,
        mode,
    })
}

impl ObfuscatorState {
    /// Clocks both registers and returns the selected post-shift state.
    /// `prev_response` is left for the caller to update.
    pub fn next_real_challenge(&self) -> (Challenge, LfsrChoice, ObfuscatorState) {
        let mut next = *self;
        next.state1.advance();
        next.state2.advance();
        next.round += 1;
        let choice = LfsrChoice::select(self.prev_response, self.mode);
        let bits = match choice {
            LfsrChoice::First => next.state1.bits(),
            LfsrChoice::Second => next.state2.bits(),
        };
        let width = next.state1.spec().order();
        (
            Challenge::new(bits, width).expect("register fits its order"),
            choice,
            next,
        )
    }
}

/// One row of the trace dump: `round M prev chosen_lfsr challenge_bits`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TraceRow {
    pub round: usize,
    pub mode: Mode,
    pub prev_response: bool,
    pub chosen: LfsrChoice,
    pub challenge: Challenge,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.round,
            self.mode.bit() as u8,
            self.prev_response as u8,
            self.chosen.index(),
            self.challenge.to_binary()
        )
    }
}

/// Runs the response scheme with `round_response` producing each round's
/// (voted) bit. Returns the folded bit and the per-round trace.
pub fn run_rounds<F>(
    spec: &DualLfsrSpec,
    external_challenge: u64,
    mode: Mode,
    mut round_response: F,
) -> Result<(bool, Vec<TraceRow>)>
where
    F: FnMut(Challenge) -> Result<bool>,
{
    let mut state = seed_obfuscator(spec, external_challenge, mode)?;
    let mut trace = Vec::with_capacity(spec.rounds_per_response);
    let mut bits = Vec::with_capacity(spec.rounds_per_response);
    for _ in 0..spec.rounds_per_response {
        let (challenge, chosen, mut next) = state.next_real_challenge();
        trace.push(TraceRow {
            round: next.round,
            mode,
            prev_response: state.prev_response,
            chosen,
            challenge,
        });
        let r = round_response(challenge)?;
        bits.push(r);
        next.prev_response = r;
        state = next;
    }
    Ok((xor_fold(&bits)?, trace))
}

/// Final response bit of one dual-LFSR lane.
pub fn generate_response<R: Rng + ?Sized>(
    spec: &DualLfsrSpec,
    apuf: &ApufInstance,
    external_challenge: u64,
    mode: Mode,
    voter_t: u32,
    rng: &mut R,
) -> Result<bool> {
    if apuf.n_stages != spec.order() as usize {
        return Err(Error::WidthMismatch {
            expected: spec.order() as usize,
            got: apuf.n_stages,
        });
    }
    run_rounds(spec, external_challenge, mode, |c| vote(apuf, c, voter_t, rng)).map(|(bit, _)| bit)
}

/// The challenges the selection rule emits for a given response history.
pub fn challenge_trace(
    spec: &DualLfsrSpec,
    external_challenge: u64,
    mode: Mode,
    response_bits: &[bool],
) -> Result<Vec<TraceRow>> {
    if response_bits.len() != spec.rounds_per_response {
        return Err(Error::WidthMismatch {
            expected: spec.rounds_per_response,
            got: response_bits.len(),
        });
    }
    let mut it = response_bits.iter();
    run_rounds(spec, external_challenge, mode, |_| Ok(*it.next().unwrap())).map(|(_, trace)| trace)
}
