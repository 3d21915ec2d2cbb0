use crate::error::{Error, Result};

use super::LfsrSpec;

/// Parses `0b1011`, `0xb`, `11`, or the human form `x^3+x+1`.
pub fn parse_poly(text: &str) -> Result<LfsrSpec> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("unrecognized polynomial {text:?}"));
    let mask = if let Some(bin) = t.strip_prefix("0b") {
        u64::from_str_radix(bin, 2).map_err(|_| bad())?
    } else if let Some(hex) = t.strip_prefix("0x") {
        u64::from_str_radix(hex, 16).map_err(|_| bad())?
    } else if t.contains('x') {
        let mut mask = 0u64;
        for term in t.split('+') {
            let power = match term {
                "1" => 0,
                "x" => 1,
                _ => term
                    .strip_prefix("x^")
                    .and_then(|p| p.parse::<u32>().ok())
                    .filter(|&p| p < 64)
                    .ok_or_else(bad)?,
            };
            if mask >> power & 1 == 1 {
                return Err(bad());
            }
            mask |= 1 << power;
        }
        mask
    } else {
        t.parse::<u64>().map_err(|_| bad())?
    };
    LfsrSpec::new(mask)
}
