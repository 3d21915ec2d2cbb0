//! Galois LFSR engine and sequence analysis.
//!
//! A characteristic polynomial `g_0 + g_1 x + ... + g_n x^n` is stored as
//! the integer mask with bit `i = g_i`. Register contents `D_n..D_1` are
//! stored with bit `i - 1 = D_i`, so `0b001` means `D_1 = 1`.
//!
//! One clock of the Galois register takes the feedback bit `b = D_1`, loads
//! `D_n' = b` and sets `D_i' = D_{i+1} ^ (g_i & b)` for the lower stages.

mod classify;
mod parse;
mod primitive;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classify::{classify, Cycle, SequenceClassification, MAX_CLASSIFY_ORDER};
pub use parse::parse_poly;
pub use primitive::{
    find_primitive, is_m_sequence, is_primitive_algebraic, pair_from_list, pick_lfsr_pair, primitive_list,
    MAX_ALGEBRAIC_ORDER, MAX_SEARCH_ORDER,
};

/// Largest register width representable in a `u64` mask.
pub const MAX_ORDER: u32 = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct LfsrSpec {
    mask: u64,
}

impl LfsrSpec {
    pub fn new(mask: u64) -> Result<Self> {
        if mask & 1 == 0 || mask < 0b100 {
            return Err(Error::MalformedPolynomial(mask));
        }
        let order = 63 - mask.leading_zeros();
        if order > MAX_ORDER {
            return Err(Error::OrderTooLarge { order, max: MAX_ORDER });
        }
        Ok(LfsrSpec { mask })
    }

    /// Builds a spec of an expected order; a mask whose top coefficient is
    /// clear would silently describe a lower-order register.
    pub fn with_order(order: u32, mask: u64) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) || mask >> order != 1 {
            return Err(Error::MalformedPolynomial(mask));
        }
        Self::new(mask)
    }

    pub fn mask(self) -> u64 {
        self.mask
    }

    pub fn order(self) -> u32 {
        63 - self.mask.leading_zeros()
    }

    pub fn coeff(self, i: u32) -> bool {
        (self.mask >> i) & 1 == 1
    }

    /// Mask of all register positions.
    pub fn state_mask(self) -> u64 {
        (1u64 << self.order()) - 1
    }

    pub(crate) fn next_bits(self, bits: u64) -> u64 {
        let feedback = bits & 1;
        (bits >> 1) ^ ((self.mask >> 1) & feedback.wrapping_neg())
    }

    /// Human form, highest power first, e.g. `x^3+x+1`.
    pub fn to_human(self) -> String {
        (0..=self.order())
            .rev()
            .filter(|&i| self.coeff(i))
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl TryFrom<u64> for LfsrSpec {
    type Error = Error;

    fn try_from(mask: u64) -> Result<Self> {
        LfsrSpec::new(mask)
    }
}

impl From<LfsrSpec> for u64 {
    fn from(spec: LfsrSpec) -> u64 {
        spec.mask
    }
}

impl fmt::Display for LfsrSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.mask)
    }
}

impl fmt::Debug for LfsrSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LfsrSpec({:#b})", self.mask)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct LfsrState {
    spec: LfsrSpec,
    bits: u64,
}

/// Loads `seed` into a register built from `spec`. No shift happens.
pub fn make_lfsr(spec: LfsrSpec, seed: u64) -> Result<LfsrState> {
    if seed == 0 {
        return Err(Error::ZeroSeed);
    }
    LfsrState::with_bits(spec, seed)
}

impl LfsrState {
    /// Like [`make_lfsr`] but admits the all-zero state, for analysis.
    pub fn with_bits(spec: LfsrSpec, bits: u64) -> Result<Self> {
        if bits & !spec.state_mask() != 0 {
            return Err(Error::WidthMismatch {
                expected: spec.order() as usize,
                got: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(LfsrState { spec, bits })
    }

    pub fn spec(&self) -> LfsrSpec {
        self.spec
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn step(&self) -> LfsrState {
        LfsrState {
            spec: self.spec,
            bits: self.spec.next_bits(self.bits),
        }
    }

    pub fn advance(&mut self) {
        self.bits = self.spec.next_bits(self.bits);
    }

    /// Register rendered `D_n..D_1`.
    pub fn to_binary(&self) -> String {
        format!("{:0width$b}", self.bits, width = self.spec.order() as usize)
    }
}

pub fn step(state: &LfsrState) -> LfsrState {
    state.step()
}

/// Smallest `p >= 1` with `step^p(seed) = seed`, by iteration.
pub fn period(spec: LfsrSpec, seed: u64) -> Result<u64> {
    let start = make_lfsr(spec, seed)?.bits;
    let mut bits = spec.next_bits(start);
    let mut p = 1u64;
    while bits != start {
        bits = spec.next_bits(bits);
        p += 1;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mask: u64) -> LfsrSpec {
        LfsrSpec::new(mask).unwrap()
    }

    #[test]
    fn constructor_keeps_seed() {
        let s = make_lfsr(spec(0b1011), 0b001).unwrap();
        assert_eq!(s.bits(), 0b001);
        assert_eq!(s.to_binary(), "001");
    }

    #[test]
    fn zero_seed_rejected() {
        assert!(matches!(make_lfsr(spec(0b1011), 0), Err(Error::ZeroSeed)));
        assert!(matches!(period(spec(0b1011), 0), Err(Error::ZeroSeed)));
    }

    #[test]
    fn degenerate_masks_rejected() {
        assert!(matches!(
            LfsrSpec::with_order(3, 0b0011),
            Err(Error::MalformedPolynomial(_))
        ));
        assert!(matches!(LfsrSpec::new(0b1010), Err(Error::MalformedPolynomial(_))));
        assert!(LfsrSpec::new(0b1).is_err());
    }

    #[test]
    fn seed_wider_than_register_rejected() {
        assert!(make_lfsr(spec(0b1011), 0b1000).is_err());
    }

    #[test]
    fn first_shift_under_x3_x_1() {
        let s = make_lfsr(spec(0b1011), 0b001).unwrap();
        assert_eq!(step(&s).to_binary(), "101");
    }

    #[test]
    fn seven_cycle_under_x3_x_1() {
        let mut s = make_lfsr(spec(0b1011), 0b001).unwrap();
        let mut seen = Vec::new();
        for _ in 0..7 {
            s.advance();
            seen.push(s.to_binary());
        }
        assert_eq!(seen, ["101", "111", "110", "011", "100", "010", "001"]);
    }

    #[test]
    fn first_shift_under_x3_x2_1() {
        let s = make_lfsr(spec(0b1101), 0b001).unwrap();
        assert_eq!(s.step().to_binary(), "110");
    }

    #[test]
    fn periods_of_order_three() {
        assert_eq!(period(spec(0b1011), 1).unwrap(), 7);
        assert_eq!(period(spec(0b1101), 1).unwrap(), 7);
        assert!(period(spec(0b1111), 1).unwrap() < 7);
    }

    #[test]
    fn zero_is_fixed_point() {
        for mask in [0b1011u64, 0b1101, 0b1111, 0b1001] {
            let z = LfsrState::with_bits(spec(mask), 0).unwrap();
            assert_eq!(z.step().bits(), 0);
        }
    }

    #[test]
    fn human_form() {
        assert_eq!(spec(0b1011).to_human(), "x^3+x+1");
        assert_eq!(spec(0b11001).to_human(), "x^4+x^3+1");
        assert_eq!(spec(0b1011).to_string(), "0b1011");
    }
}
