//! The tag: challenge preprocessor, `k` parallel APUF + dual-LFSR lanes,
//! the disposable raw-CRP interface and parallel-to-serial assembly.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apuf::{sample_instance, ApufInstance, Challenge, DEFAULT_DELTA_UNIT};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::lfsr::{pair_from_list, primitive_list};
use crate::obfuscator::{generate_response, DualLfsrSpec, Mode, DEFAULT_ROUNDS};
use crate::persist::write_atomic;
use crate::postproc::{randomness_adjust, vote, AdjustParams, AdjustReport};
use crate::protocol::{Frame, FrameKind};
use crate::seed::mix_seed;

pub const DEFAULT_VOTER_T: u32 = 5;

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct DeviceConfig {
    /// Parallel lanes `k`.
    pub lanes: usize,
    /// Challenge width `N` (LFSR order and APUF stages).
    pub stages: usize,
    pub voter_t: u32,
    pub sigma_noise: f64,
    pub delta_unit: f64,
    /// Constant skew added to every lane before initialization.
    pub bias: f64,
    pub device_seed: u64,
    pub lane_pairs: Vec<DualLfsrSpec>,
}

impl DeviceConfig {
    /// Defaults: `T = 5`, noiseless, 5 rounds per response, lane `i` gets
    /// the `i`-th ordered primitive pair of order `stages`.
    pub fn new(lanes: usize, stages: usize, device_seed: u64) -> Result<Self> {
        let mut cfg = DeviceConfig {
            lanes,
            stages,
            voter_t: DEFAULT_VOTER_T,
            sigma_noise: 0.0,
            delta_unit: DEFAULT_DELTA_UNIT,
            bias: 0.0,
            device_seed,
            lane_pairs: Vec::new(),
        };
        cfg.assign_pairs(DEFAULT_ROUNDS)?;
        Ok(cfg)
    }

    pub fn assign_pairs(&mut self, rounds_per_response: usize) -> Result<()> {
        if self.lanes == 0 || self.stages < 2 {
            return Err(Error::InvalidConfig(format!(
                "need k >= 1 lanes and N >= 2 stages, got k={} N={}",
                self.lanes, self.stages
            )));
        }
        let order = self.stages as u32;
        let list = primitive_list(order)?;
        self.lane_pairs = (0..self.lanes)
            .map(|i| {
                let (a, b) = pair_from_list(&list, i).ok_or(Error::InsufficientPrimitives(order))?;
                DualLfsrSpec::new(a, b, rounds_per_response)
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn with_sigma(mut self, sigma_noise: f64) -> Self {
        self.sigma_noise = sigma_noise;
        self
    }

    pub fn with_voter_t(mut self, voter_t: u32) -> Self {
        self.voter_t = voter_t;
        self
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 || self.lane_pairs.len() != self.lanes {
            return Err(Error::InvalidConfig(format!(
                "{} lane pairs for k={}",
                self.lane_pairs.len(),
                self.lanes
            )));
        }
        if let Some(p) = self.lane_pairs.iter().find(|p| p.order() as usize != self.stages) {
            return Err(Error::WidthMismatch {
                expected: self.stages,
                got: p.order() as usize,
            });
        }
        if self.voter_t.is_multiple_of(2) {
            return Err(Error::EvenVoterWidth(self.voter_t));
        }
        if self.sigma_noise.is_nan() || self.sigma_noise < 0.0 || self.delta_unit.is_nan() || self.delta_unit <= 0.0 {
            return Err(Error::InvalidConfig("sigma must be >= 0 and delta_unit > 0".into()));
        }
        Ok(())
    }

    fn lane_seed(&self, lane: usize) -> u64 {
        mix_seed(self.device_seed, 2 * lane as u64)
    }

    fn adjust_seed(&self, lane: usize) -> u64 {
        mix_seed(self.device_seed, 2 * lane as u64 + 1)
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct PufDevice {
    pub config: DeviceConfig,
    pub fused: bool,
    pub last_challenge_tick: Option<u64>,
    pub lanes: Vec<ApufInstance>,
}

/// Samples every lane from the device seed and runs system initialization
/// on each.
pub fn build_device(config: DeviceConfig) -> Result<PufDevice> {
    build_device_with_reports(config).map(|(d, _)| d)
}

pub fn build_device_with_reports(config: DeviceConfig) -> Result<(PufDevice, Vec<AdjustReport>)> {
    config.validate()?;
    let mut lanes = Vec::with_capacity(config.lanes);
    let mut reports = Vec::with_capacity(config.lanes);
    for i in 0..config.lanes {
        let mut lane = sample_instance(
            config.stages,
            config.lane_seed(i),
            config.sigma_noise,
            config.delta_unit,
        )
        .with_bias(config.bias);
        reports.push(randomness_adjust(
            &mut lane,
            &AdjustParams::with_seed(config.adjust_seed(i)),
        )?);
        lanes.push(lane);
    }
    let device = PufDevice {
        config,
        fused: false,
        last_challenge_tick: None,
        lanes,
    };
    Ok((device, reports))
}

impl PufDevice {
    pub fn stages(&self) -> usize {
        self.config.stages
    }

    pub fn lane_count(&self) -> usize {
        self.config.lanes
    }

    fn check_challenge(&self, challenge: u64) -> Result<()> {
        Challenge::new(challenge, self.config.stages as u32).map(|_| ())
    }

    /// Interval and mode from the two challenge frames of a session.
    pub fn preprocess(&self, frame_c1: &Frame, frame_c2: &Frame) -> Result<(u64, u64, Mode)> {
        for f in [frame_c1, frame_c2] {
            if f.kind != FrameKind::Challenge || f.payload.len() != self.config.stages {
                return Err(Error::WidthMismatch {
                    expected: self.config.stages,
                    got: f.payload.len(),
                });
            }
        }
        if frame_c2.tick <= frame_c1.tick {
            return Err(Error::NonMonotonicTicks {
                prev: frame_c1.tick,
                next: frame_c2.tick,
            });
        }
        let t = frame_c2.tick - frame_c1.tick;
        let challenge = frame_c2.challenge_value().expect("width checked");
        Ok((challenge, t, Mode::from_interval(t)))
    }

    /// Naked responses through the disposable interface.
    pub fn raw_crp_query<R: Rng + ?Sized>(&self, challenge: u64, rng: &mut R) -> Result<BitString> {
        if self.fused {
            return Err(Error::InterfaceFused);
        }
        self.check_challenge(challenge)?;
        let c = Challenge::new(challenge, self.config.stages as u32)?;
        self.lanes
            .iter()
            .map(|lane| vote(lane, c, self.config.voter_t, rng))
            .collect()
    }

    pub fn fuse(&mut self) {
        self.fused = true;
    }

    /// Obfuscated `k`-bit response, lane 1 first.
    pub fn respond<R: Rng + ?Sized>(&self, challenge: u64, mode: Mode, rng: &mut R) -> Result<BitString> {
        if challenge == 0 {
            return Err(Error::ZeroSeed);
        }
        self.check_challenge(challenge)?;
        self.config
            .lane_pairs
            .iter()
            .zip(&self.lanes)
            .map(|(pair, lane)| generate_response(pair, lane, challenge, mode, self.config.voter_t, rng))
            .collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let device: PufDevice = toml::from_str(text)?;
        device.config.validate()?;
        if device.lanes.len() != device.config.lanes {
            return Err(Error::InvalidConfig(format!(
                "{} lanes stored for k={}",
                device.lanes.len(),
                device.config.lanes
            )));
        }
        for lane in &device.lanes {
            lane.validate()?;
            if lane.n_stages != device.config.stages {
                return Err(Error::WidthMismatch {
                    expected: device.config.stages,
                    got: lane.n_stages,
                });
            }
        }
        Ok(device)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_toml()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
