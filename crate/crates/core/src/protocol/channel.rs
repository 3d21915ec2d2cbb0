use crate::error::{Error, Result};

use super::Frame;

/// What an interceptor does with a frame in flight.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Intercept {
    Pass,
    Drop,
    Replace(Frame),
}

/// A tap on the carrier. Interceptors see frames in registration order,
/// each one the output of the previous.
pub trait Interceptor {
    fn on_frame(&mut self, frame: &Frame) -> Intercept;
}

/// Passive tap that keeps every frame it sees.
#[derive(Default, Debug)]
pub struct Eavesdropper {
    pub frames: Vec<Frame>,
}

impl Interceptor for Eavesdropper {
    fn on_frame(&mut self, frame: &Frame) -> Intercept {
        self.frames.push(frame.clone());
        Intercept::Pass
    }
}

/// Drops every frame matching the predicate.
pub struct Suppressor<F>(pub F);

impl<F: FnMut(&Frame) -> bool> Interceptor for Suppressor<F> {
    fn on_frame(&mut self, frame: &Frame) -> Intercept {
        if (self.0)(frame) {
            Intercept::Drop
        } else {
            Intercept::Pass
        }
    }
}

/// Tick-ordered lossless carrier between one reader and one tag.
#[derive(Default)]
pub struct Channel<'a> {
    last_tick: Option<u64>,
    delivered: Vec<Frame>,
    interceptors: Vec<&'a mut dyn Interceptor>,
}

impl<'a> Channel<'a> {
    pub fn new() -> Self {
        Channel::default()
    }

    pub fn with_interceptor(mut self, interceptor: &'a mut dyn Interceptor) -> Self {
        self.interceptors.push(interceptor);
        self
    }

    /// First tick not yet used.
    pub fn next_tick(&self) -> u64 {
        self.last_tick.map_or(0, |t| t + 1)
    }

    /// Frames as they reached the far end.
    pub fn delivered(&self) -> &[Frame] {
        &self.delivered
    }

    /// Sends `frame`; returns what the far end receives, if anything.
    pub fn transmit(&mut self, frame: Frame) -> Result<Option<Frame>> {
        if let Some(prev) = self.last_tick {
            if frame.tick <= prev {
                return Err(Error::NonMonotonicTicks { prev, next: frame.tick });
            }
        }
        self.last_tick = Some(frame.tick);
        let mut current = frame;
        for tap in self.interceptors.iter_mut() {
            match tap.on_frame(&current) {
                Intercept::Pass => {}
                Intercept::Drop => return Ok(None),
                Intercept::Replace(f) => current = f,
            }
        }
        self.delivered.push(current.clone());
        Ok(Some(current))
    }
}

pub fn channel_transmit(channel: &mut Channel<'_>, frame: Frame) -> Result<Option<Frame>> {
    channel.transmit(frame)
}
