//! Primitive-polynomial discovery.
//!
//! Small orders are decided by iterating the register until it closes its
//! cycle. Larger orders use the multiplicative order of `x` modulo `p(x)`:
//! `p` is primitive iff `x^(2^n-1) = 1` and `x^((2^n-1)/q) != 1` for every
//! prime `q` dividing `2^n - 1`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

use super::{period, LfsrSpec};

/// Exhaustive search bound for [`find_primitive`].
pub const MAX_SEARCH_ORDER: u32 = 20;
/// Bound for the algebraic test (trial-division factoring of `2^n - 1`).
pub const MAX_ALGEBRAIC_ORDER: u32 = 48;
/// Orders up to this are decided by brute-force period.
const BRUTE_FORCE_ORDER: u32 = 12;
/// Primitive polynomials collected per order above the exhaustive bound.
const LARGE_ORDER_POOL: usize = 16;

pub fn is_m_sequence(spec: LfsrSpec) -> bool {
    if spec.order() <= BRUTE_FORCE_ORDER {
        period(spec, 1).map(|p| p == spec.state_mask()).unwrap_or(false)
    } else {
        is_primitive_algebraic(spec).unwrap_or(false)
    }
}

fn mulmod(mut a: u64, mut b: u64, poly: u64, order: u32) -> u64 {
    let top = 1u64 << order;
    let mut r = 0;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    r
}

fn powmod_x(mut exp: u64, poly: u64, order: u32) -> u64 {
    let mut base = 0b10u64;
    let mut acc = 1u64;
    while exp != 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, poly, order);
        }
        base = mulmod(base, base, poly, order);
        exp >>= 1;
    }
    acc
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn mersenne_factors(order: u32) -> Vec<u64> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<u64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap();
    map.entry(order)
        .or_insert_with(|| prime_factors((1u64 << order) - 1))
        .clone()
}

/// Order-of-`x` primitivity test.
pub fn is_primitive_algebraic(spec: LfsrSpec) -> Result<bool> {
    let order = spec.order();
    if order > MAX_ALGEBRAIC_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ALGEBRAIC_ORDER,
        });
    }
    let poly = spec.mask();
    let group = (1u64 << order) - 1;
    if powmod_x(group, poly, order) != 1 {
        return Ok(false);
    }
    Ok(mersenne_factors(order)
        .into_iter()
        .all(|q| powmod_x(group / q, poly, order) != 1))
}

fn candidates(order: u32) -> impl Iterator<Item = LfsrSpec> {
    let high = 1u64 << order;
    (0..1u64 << (order - 1)).map(move |mid| LfsrSpec::new(high | (mid << 1) | 1).unwrap())
}

/// All primitive polynomials of `order`, ascending by mask.
pub fn find_primitive(order: u32) -> Result<Vec<LfsrSpec>> {
    if order > MAX_SEARCH_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_SEARCH_ORDER,
        });
    }
    if order < 2 {
        return Err(Error::InvalidConfig(format!("order {order} is below 2")));
    }
    Ok(candidates(order).filter(|&s| is_m_sequence(s)).collect())
}

/// The list pairs are drawn from: every primitive up to the exhaustive
/// bound, the smallest few above it.
pub fn primitive_list(order: u32) -> Result<Vec<LfsrSpec>> {
    if order <= MAX_SEARCH_ORDER {
        return find_primitive(order);
    }
    if order > MAX_ALGEBRAIC_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ALGEBRAIC_ORDER,
        });
    }
    Ok(candidates(order)
        .filter(|&s| is_primitive_algebraic(s).unwrap_or(false))
        .take(LARGE_ORDER_POOL)
        .collect())
}

/// Ordered pair `index mod m(m-1)` in lexicographic order of
/// `(i, j), i != j` over `list`.
pub fn pair_from_list(list: &[LfsrSpec], index: usize) -> Option<(LfsrSpec, LfsrSpec)> {
    let m = list.len();
    if m < 2 {
        return None;
    }
    let idx = index % (m * (m - 1));
    let i = idx / (m - 1);
    let mut j = idx % (m - 1);
    if j >= i {
        j += 1;
    }
    Some((list[i], list[j]))
}

pub fn pick_lfsr_pair(order: u32, instance_index: usize) -> Result<(LfsrSpec, LfsrSpec)> {
    let list = primitive_list(order)?;
    pair_from_list(&list, instance_index).ok_or(Error::InsufficientPrimitives(order))
}
