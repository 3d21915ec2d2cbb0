use crate::error::{Error, Result};

use super::LfsrSpec;

pub const MAX_CLASSIFY_ORDER: u32 = 24;

/// One cycle of the state-transition graph, identified by its smallest state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Cycle {
    pub start: u64,
    pub len: u64,
}

impl Cycle {
    /// States in traversal order, beginning at `start`.
    pub fn states(&self, spec: LfsrSpec) -> impl Iterator<Item = u64> + '_ {
        let mut bits = self.start;
        (0..self.len).map(move |_| {
            let cur = bits;
            bits = spec.next_bits(bits);
            cur
        })
    }
}

/// Useless / useful / additional partition of all `2^n` register states.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SequenceClassification {
    pub spec: LfsrSpec,
    pub useless: Vec<u64>,
    pub useful: Vec<Cycle>,
    pub additional: Vec<Cycle>,
    pub useful_count: u64,
}

impl SequenceClassification {
    pub fn additional_count(&self) -> u64 {
        self.additional.iter().map(|c| c.len).sum()
    }

    pub fn total(&self) -> u64 {
        self.useless.len() as u64 + self.useful_count + self.additional_count()
    }

    pub fn useful_states(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .useful
            .iter()
            .flat_map(|c| c.states(self.spec).collect::<Vec<_>>())
            .collect();
        v.sort_unstable();
        v
    }
}

/// Decomposes the functional graph of `spec` into cycles. Every cycle of
/// maximal length is useful; shorter nonzero cycles are additional; the
/// all-zero state and any state off a cycle are useless.
pub fn classify(spec: LfsrSpec) -> Result<SequenceClassification> {
    let order = spec.order();
    if order > MAX_CLASSIFY_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_CLASSIFY_ORDER,
        });
    }
    let size = 1usize << order;
    // 0 = unseen, 1 = on current walk, 2 = done
    let mut color = vec![0u8; size];
    let mut on_cycle = vec![false; size];
    let mut cycles = Vec::new();
    let mut walk = Vec::new();

    color[0] = 2;
    for start in 1..size {
        if color[start] != 0 {
            continue;
        }
        walk.clear();
        let mut s = start;
        while color[s] == 0 {
            color[s] = 1;
            walk.push(s);
            s = spec.next_bits(s as u64) as usize;
        }
        if color[s] == 1 {
            let pos = walk.iter().position(|&w| w == s).unwrap();
            let members = &walk[pos..];
            for &m in members {
                on_cycle[m] = true;
            }
            cycles.push(Cycle {
                start: *members.iter().min().unwrap() as u64,
                len: members.len() as u64,
            });
        }
        for &w in &walk {
            color[w] = 2;
        }
    }

    let max_len = cycles.iter().map(|c| c.len).max().unwrap_or(0);
    let (mut useful, mut additional): (Vec<_>, Vec<_>) = cycles.into_iter().partition(|c| c.len == max_len);
    useful.sort_by_key(|c| c.start);
    additional.sort_by_key(|c| c.start);

    let useless = std::iter::once(0u64)
        .chain((1..size).filter(|&s| !on_cycle[s]).map(|s| s as u64))
        .collect();
    let useful_count = useful.iter().map(|c| c.len).sum();
    Ok(SequenceClassification {
        spec,
        useless,
        useful,
        additional,
        useful_count,
    })
}
