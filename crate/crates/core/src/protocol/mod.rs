//! Registration and two-time authentication over a tick-based channel.
//!
//! A session puts `C1` on the carrier at tick `s` and `C2` at tick `s + t`.
//! The tag answers each challenge one tick later. The interval `t` is never
//! written in a frame: the tag recovers it from the arrival ticks and uses
//! its parity as the selection mode for `C2`. `C1` is always answered in
//! the original mode. A missing or failing first response ends the session
//! before `C2` is sent.

mod channel;
mod frame;

use rand::Rng;

pub use channel::{channel_transmit, Channel, Eavesdropper, Intercept, Interceptor, Suppressor};
pub use frame::{Direction, Frame, FrameKind, Transcript};

use crate::bits::BitString;
use crate::device::PufDevice;
use crate::error::{Error, Result};
use crate::obfuscator::Mode;
use crate::server::{compare, register_from_ttp, Enrollment, NakedCrpTable, ServerRegistry, Session};

/// Anything that can sit at the tag end of the carrier.
pub trait TagEndpoint {
    /// Entering the reader field starts a fresh session.
    fn power_up(&mut self);
    /// Payload to send back, or `None` to stay silent.
    fn on_challenge(&mut self, frame: &Frame) -> Result<Option<BitString>>;
}

/// A genuine device answering with its obfuscated response.
pub struct HonestTag<'a, R> {
    device: &'a mut PufDevice,
    rng: R,
    first: Option<Frame>,
}

impl<'a, R: Rng> HonestTag<'a, R> {
    pub fn new(device: &'a mut PufDevice, rng: R) -> Self {
        HonestTag {
            device,
            rng,
            first: None,
        }
    }
}

impl<R: Rng> TagEndpoint for HonestTag<'_, R> {
    fn power_up(&mut self) {
        self.first = None;
        self.device.last_challenge_tick = None;
    }

    fn on_challenge(&mut self, frame: &Frame) -> Result<Option<BitString>> {
        let (challenge, mode) = match self.first.take() {
            None => {
                if frame.payload.len() != self.device.stages() {
                    return Err(Error::WidthMismatch {
                        expected: self.device.stages(),
                        got: frame.payload.len(),
                    });
                }
                let c = frame.challenge_value().expect("width checked");
                self.first = Some(frame.clone());
                self.device.last_challenge_tick = Some(frame.tick);
                (c, Mode::Original)
            }
            Some(c1) => {
                let (c, _t, mode) = self.device.preprocess(&c1, frame)?;
                self.device.last_challenge_tick = None;
                (c, mode)
            }
        };
        self.device.respond(challenge, mode, &mut self.rng).map(Some)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AuthResult {
    pub d1: bool,
    pub d2: bool,
    pub pass: bool,
    pub t: u64,
    /// Frames delivered during this session.
    pub transcript: Vec<Frame>,
}

impl AuthResult {
    /// `d1 d2 pass`
    pub fn summary_line(&self) -> String {
        format!("{} {} {}", self.d1 as u8, self.d2 as u8, self.pass as u8)
    }
}

/// One request/response leg. Returns the decision bit.
fn exchange<T: TagEndpoint + ?Sized>(
    registry: &ServerRegistry,
    tag: &mut T,
    channel: &mut Channel<'_>,
    tick: u64,
    challenge: u64,
    mode: Mode,
) -> Result<bool> {
    let frame = Frame::challenge(tick, BitString::from_u64(challenge, registry.stages));
    let Some(arrived) = channel.transmit(frame)? else {
        return Ok(false);
    };
    let Some(payload) = tag.on_challenge(&arrived)? else {
        return Ok(false);
    };
    let Some(reply) = channel.transmit(Frame::response(tick + 1, payload))? else {
        return Ok(false);
    };
    if reply.kind != FrameKind::Response || reply.payload.len() != registry.lane_count() {
        return Ok(false);
    }
    let expected = registry.predict_response(challenge, mode)?;
    compare(&expected, &reply.payload, registry.tau)
}

/// Runs one two-time authentication for a given session plan.
pub fn run_authentication<T: TagEndpoint + ?Sized>(
    registry: &ServerRegistry,
    tag: &mut T,
    channel: &mut Channel<'_>,
    session: Session,
) -> Result<AuthResult> {
    if session.t < 2 {
        return Err(Error::TickGapTooSmall(session.t));
    }
    tag.power_up();
    let start = channel.next_tick();
    let first_frame = channel.delivered().len();

    let d1 = exchange(registry, tag, channel, start, session.c1, Mode::Original)?;
    let d2 = d1
        && exchange(
            registry,
            tag,
            channel,
            start + session.t,
            session.c2,
            Mode::from_interval(session.t),
        )?;
    Ok(AuthResult {
        d1,
        d2,
        pass: d1 && d2,
        t: session.t,
        transcript: channel.delivered()[first_frame..].to_vec(),
    })
}

/// How the trusted third party enrolls lanes with the server.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnrollmentPolicy {
    /// Full naked table for `N <= 12`, parameter transfer above.
    Auto,
    FullTable,
    Parameters,
}

pub const FULL_TABLE_MAX_STAGES: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RegistrationParams {
    pub policy: EnrollmentPolicy,
    pub tau: usize,
    pub t_range: (u64, u64),
    pub rng_seed: u64,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        RegistrationParams {
            policy: EnrollmentPolicy::Auto,
            tau: 0,
            t_range: crate::server::DEFAULT_T_RANGE,
            rng_seed: 0,
        }
    }
}

/// Harvests naked CRPs (or lane parameters) through the disposable
/// interface, fuses it and provisions the server.
pub fn run_registration<R: Rng + ?Sized>(
    device: &mut PufDevice,
    params: &RegistrationParams,
    rng: &mut R,
) -> Result<ServerRegistry> {
    if device.fused {
        return Err(Error::InterfaceFused);
    }
    let full = match params.policy {
        EnrollmentPolicy::Auto => device.stages() <= FULL_TABLE_MAX_STAGES,
        EnrollmentPolicy::FullTable => true,
        EnrollmentPolicy::Parameters => false,
    };
    let enrollment = if full {
        let mut table = NakedCrpTable::new(device.stages(), device.lane_count())?;
        for c in 1..(1u64 << device.stages()) {
            table.insert(c, device.raw_crp_query(c, rng)?)?;
        }
        Enrollment::Table(table)
    } else {
        Enrollment::Model(device.lanes.clone())
    };
    device.fuse();
    register_from_ttp(
        enrollment,
        device.config.lane_pairs.clone(),
        params.tau,
        params.t_range,
        params.rng_seed,
    )
}
