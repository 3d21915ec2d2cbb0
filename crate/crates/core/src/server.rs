//! The reader/server end: enrolled lane models, mirrored dual-LFSR
//! prediction, session generation and the thresholded comparator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apuf::{evaluate_raw, ApufInstance, Challenge};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::obfuscator::{run_rounds, DualLfsrSpec, Mode};
use crate::persist::write_atomic;

/// Largest width for which a full naked-CRP table is kept.
pub const MAX_TABLE_STAGES: usize = 20;
pub const DEFAULT_T_RANGE: (u64, u64) = (2, 17);

/// Naked responses of all lanes for every nonzero challenge.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct NakedCrpTable {
    stages: usize,
    lanes: usize,
    entries: Vec<Option<BitString>>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    stages: usize,
    lanes: usize,
    records: Vec<String>,
}

impl TryFrom<RawTable> for NakedCrpTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        NakedCrpTable::from_lines(&raw.records.join("\n"), raw.stages, raw.lanes)
    }
}

impl From<NakedCrpTable> for RawTable {
    fn from(t: NakedCrpTable) -> Self {
        RawTable {
            stages: t.stages,
            lanes: t.lanes,
            records: t.records().collect(),
        }
    }
}

impl NakedCrpTable {
    pub fn new(stages: usize, lanes: usize) -> Result<Self> {
        if stages == 0 || stages > MAX_TABLE_STAGES {
            return Err(Error::InvalidConfig(format!(
                "table mode needs 1 <= N <= {MAX_TABLE_STAGES}, got {stages}"
            )));
        }
        Ok(NakedCrpTable {
            stages,
            lanes,
            entries: vec![None; 1 << stages],
        })
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn insert(&mut self, challenge: u64, response: BitString) -> Result<()> {
        Challenge::new(challenge, self.stages as u32)?;
        if response.len() != self.lanes {
            return Err(Error::WidthMismatch {
                expected: self.lanes,
                got: response.len(),
            });
        }
        self.entries[challenge as usize] = Some(response);
        Ok(())
    }

    pub fn get(&self, challenge: u64) -> Option<&BitString> {
        self.entries.get(challenge as usize).and_then(Option::as_ref)
    }

    /// Every nonzero challenge has an entry.
    pub fn check_complete(&self) -> Result<()> {
        match (1..self.entries.len()).find(|&c| self.entries[c].is_none()) {
            Some(c) => Err(Error::IncompleteTable(c as u64)),
            None => Ok(()),
        }
    }

    /// `challenge_hex response_hex` per stored entry, ascending.
    pub fn records(&self) -> impl Iterator<Item = String> + '_ {
        self.entries.iter().enumerate().filter_map(move |(c, e)| {
            e.as_ref()
                .map(|r| format!("{} {}", BitString::from_u64(c as u64, self.stages).to_hex(), r.to_hex()))
        })
    }

    pub fn to_lines(&self) -> String {
        self.records().map(|r| r + "\n").collect()
    }

    pub fn from_lines(text: &str, stages: usize, lanes: usize) -> Result<Self> {
        let mut table = NakedCrpTable::new(stages, lanes)?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (c, r) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad CRP record {line:?}")))?;
            let c = BitString::from_hex(c.trim(), stages)?.to_u64().expect("stages <= 20");
            table.insert(c, BitString::from_hex(r.trim(), lanes)?)?;
        }
        Ok(table)
    }
}

/// What the trusted third party hands the server.
#[derive(Clone, PartialEq, Debug)]
pub enum Enrollment {
    Table(NakedCrpTable),
    Model(Vec<ApufInstance>),
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LaneModels {
    Table { table: NakedCrpTable },
    Model { lanes: Vec<ApufInstance> },
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ServerRegistry {
    pub stages: usize,
    pub tau: usize,
    pub t_range: (u64, u64),
    pub rng_seed: u64,
    pub lane_pairs: Vec<DualLfsrSpec>,
    pub models: LaneModels,
}

pub fn register_from_ttp(
    enrollment: Enrollment,
    lane_pairs: Vec<DualLfsrSpec>,
    tau: usize,
    t_range: (u64, u64),
    rng_seed: u64,
) -> Result<ServerRegistry> {
    let stages = lane_pairs
        .first()
        .map(|p| p.order() as usize)
        .ok_or_else(|| Error::InvalidConfig("no lanes".into()))?;
    let models = match enrollment {
        Enrollment::Table(table) => {
            table.check_complete()?;
            LaneModels::Table { table }
        }
        Enrollment::Model(lanes) => LaneModels::Model { lanes },
    };
    let registry = ServerRegistry {
        stages,
        tau,
        t_range,
        rng_seed,
        lane_pairs,
        models,
    };
    registry.validate()?;
    Ok(registry)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Session {
    pub c1: u64,
    pub c2: u64,
    pub t: u64,
}

/// Seeded session stream (`C1`, `C2` uniform nonzero, `t` uniform in range).
pub struct SessionGenerator {
    rng: ChaCha8Rng,
    max_challenge: u64,
    t_range: (u64, u64),
}

impl SessionGenerator {
    pub fn new(stages: usize, t_range: (u64, u64), rng_seed: u64) -> Result<Self> {
        if t_range.0 < 1 || t_range.1 < t_range.0 {
            return Err(Error::InvalidConfig(format!("bad t range {t_range:?}")));
        }
        Ok(SessionGenerator {
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            max_challenge: if stages == 64 { u64::MAX } else { (1 << stages) - 1 },
            t_range,
        })
    }

    pub fn challenge(&mut self) -> u64 {
        self.rng.random_range(1..=self.max_challenge)
    }

    pub fn interval(&mut self) -> u64 {
        self.rng.random_range(self.t_range.0..=self.t_range.1)
    }

    pub fn next_session(&mut self) -> Session {
        let c1 = self.challenge();
        let c2 = self.challenge();
        let t = self.interval();
        Session { c1, c2, t }
    }
}

impl Iterator for SessionGenerator {
    type Item = Session;

    fn next(&mut self) -> Option<Session> {
        Some(self.next_session())
    }
}

/// Accept iff the Hamming distance is at most `tau`.
pub fn compare(expected: &BitString, received: &BitString, tau: usize) -> Result<bool> {
    Ok(expected.hamming_distance(received)? <= tau)
}

impl ServerRegistry {
    pub fn lane_count(&self) -> usize {
        self.lane_pairs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.lane_count();
        if self.tau >= k {
            return Err(Error::InvalidConfig(format!("tau {} must be below k {k}", self.tau)));
        }
        if self.t_range.0 < 1 || self.t_range.1 < self.t_range.0 {
            return Err(Error::InvalidConfig(format!("bad t range {:?}", self.t_range)));
        }
        if self.lane_pairs.iter().any(|p| p.order() as usize != self.stages) {
            return Err(Error::InvalidConfig("lane pair orders differ".into()));
        }
        match &self.models {
            LaneModels::Table { table } => {
                if table.stages() != self.stages || table.lanes() != k {
                    return Err(Error::WidthMismatch {
                        expected: k,
                        got: table.lanes(),
                    });
                }
            }
            LaneModels::Model { lanes } => {
                if lanes.len() != k {
                    return Err(Error::WidthMismatch {
                        expected: k,
                        got: lanes.len(),
                    });
                }
                for lane in lanes {
                    lane.validate()?;
                    if lane.n_stages != self.stages {
                        return Err(Error::WidthMismatch {
                            expected: self.stages,
                            got: lane.n_stages,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn session_generator(&self) -> Result<SessionGenerator> {
        SessionGenerator::new(self.stages, self.t_range, self.rng_seed)
    }

    /// `R_m`: the device's scheme replayed over noiseless naked responses.
    pub fn predict_response(&self, challenge: u64, mode: Mode) -> Result<BitString> {
        if challenge == 0 {
            return Err(Error::ZeroSeed);
        }
        Challenge::new(challenge, self.stages as u32)?;
        (0..self.lane_count())
            .map(|lane| {
                let pair = &self.lane_pairs[lane];
                let (bit, _) = run_rounds(pair, challenge, mode, |c| self.naked_bit(lane, c))?;
                Ok(bit)
            })
            .collect()
    }

    fn naked_bit(&self, lane: usize, challenge: Challenge) -> Result<bool> {
        match &self.models {
            LaneModels::Table { table } => table
                .get(challenge.bits())
                .map(|r| r.get(lane))
                .ok_or(Error::MissingEntry(challenge.bits())),
            LaneModels::Model { lanes } => evaluate_raw(&lanes[lane], challenge, 0.0),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let registry: ServerRegistry = toml::from_str(text)?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_toml()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_device, DeviceConfig};

    fn small_device() -> crate::device::PufDevice {
        build_device(DeviceConfig::new(6, 8, 5).unwrap()).unwrap()
    }

    fn full_table(device: &crate::device::PufDevice) -> NakedCrpTable {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut table = NakedCrpTable::new(device.stages(), device.lane_count()).unwrap();
        for c in 1..(1u64 << device.stages()) {
            table.insert(c, device.raw_crp_query(c, &mut rng).unwrap()).unwrap();
        }
        table
    }

    #[test]
    fn table_mode_registry() {
        let d = small_device();
        let table = full_table(&d);
        assert_eq!(table.records().count(), 255);
        let reg = register_from_ttp(
            Enrollment::Table(table),
            d.config.lane_pairs.clone(),
            0,
            DEFAULT_T_RANGE,
            1,
        )
        .unwrap();
        assert!(matches!(reg.models, LaneModels::Table { .. }));
    }

    #[test]
    fn incomplete_table_rejected() {
        let d = small_device();
        let mut table = full_table(&d);
        table.entries[77] = None;
        let err = register_from_ttp(
            Enrollment::Table(table),
            d.config.lane_pairs.clone(),
            0,
            DEFAULT_T_RANGE,
            1,
        );
        assert!(matches!(err, Err(Error::IncompleteTable(77))));
    }

    #[test]
    fn table_and_model_agree() {
        let d = small_device();
        let table = register_from_ttp(
            Enrollment::Table(full_table(&d)),
            d.config.lane_pairs.clone(),
            0,
            DEFAULT_T_RANGE,
            1,
        )
        .unwrap();
        let model = register_from_ttp(
            Enrollment::Model(d.lanes.clone()),
            d.config.lane_pairs.clone(),
            0,
            DEFAULT_T_RANGE,
            1,
        )
        .unwrap();
        for c in 1..256 {
            for m in [Mode::Original, Mode::Swapped] {
                assert_eq!(
                    table.predict_response(c, m).unwrap(),
                    model.predict_response(c, m).unwrap()
                );
            }
        }
        assert!(matches!(
            model.predict_response(0, Mode::Original),
            Err(Error::ZeroSeed)
        ));
    }

    #[test]
    fn table_file_round_trip() {
        let d = small_device();
        let table = full_table(&d);
        let text = table.to_lines();
        assert!(text.starts_with("01 "));
        assert_eq!(NakedCrpTable::from_lines(&text, 8, 6).unwrap(), table);
    }

    #[test]
    fn registry_toml_round_trip() {
        let d = small_device();
        for enrollment in [Enrollment::Table(full_table(&d)), Enrollment::Model(d.lanes.clone())] {
            let reg = register_from_ttp(enrollment, d.config.lane_pairs.clone(), 1, (3, 9), 44).unwrap();
            assert_eq!(ServerRegistry::from_toml(&reg.to_toml().unwrap()).unwrap(), reg);
        }
    }

    #[test]
    fn tau_must_be_below_k() {
        let d = small_device();
        assert!(register_from_ttp(
            Enrollment::Model(d.lanes.clone()),
            d.config.lane_pairs.clone(),
            6,
            DEFAULT_T_RANGE,
            1
        )
        .is_err());
    }

    #[test]
    fn comparator_boundary() {
        let a = BitString::from_u64(0b1011_0110, 8);
        assert!(compare(&a, &a, 0).unwrap());
        let b = BitString::from_u64(0b1011_1001, 8);
        let hd = a.hamming_distance(&b).unwrap();
        assert!(compare(&a, &b, hd).unwrap());
        assert!(!compare(&a, &b, hd - 1).unwrap());
        assert!(compare(&a, &BitString::zeros(7), 3).is_err());
    }

    #[test]
    fn session_stream() {
        let mut a = SessionGenerator::new(16, (1, 16), 9).unwrap();
        let mut b = SessionGenerator::new(16, (1, 16), 9).unwrap();
        let sa: Vec<Session> = (&mut a).take(50).collect();
        let sb: Vec<Session> = (&mut b).take(50).collect();
        assert_eq!(sa, sb);
        for s in a.take(5000) {
            assert!(s.c1 != 0 && s.c2 != 0 && s.c1 < 1 << 16 && s.c2 < 1 << 16);
            assert!((1..=16).contains(&s.t));
        }
        assert!(SessionGenerator::new(16, (0, 4), 0).is_err());
        assert!(SessionGenerator::new(16, (5, 4), 0).is_err());
    }

    #[test]
    fn interval_parity_is_balanced() {
        // 3 sigma binomial band around 5000 of 10000.
        let mut g = SessionGenerator::new(16, (1, 16), 2024).unwrap();
        let odd = (0..10_000).filter(|_| g.interval() % 2 == 1).count() as f64;
        assert!((odd - 5000.0).abs() <= 3.0 * 50.0, "odd = {odd}");
    }
}
