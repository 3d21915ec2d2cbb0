use std::fmt;
use std::str::FromStr;

use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Direction {
    ReaderToTag,
    TagToReader,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::ReaderToTag => "R2T",
            Direction::TagToReader => "T2R",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R2T" => Ok(Direction::ReaderToTag),
            "T2R" => Ok(Direction::TagToReader),
            _ => Err(Error::Parse(format!("unknown direction {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum FrameKind {
    Challenge,
    Response,
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameKind::Challenge => "CHALLENGE",
            FrameKind::Response => "RESPONSE",
        })
    }
}

impl FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CHALLENGE" => Ok(FrameKind::Challenge),
            "RESPONSE" => Ok(FrameKind::Response),
            _ => Err(Error::Parse(format!("unknown frame kind {s:?}"))),
        }
    }
}

/// One transmission on the simulated carrier. `tick` is logical time.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Frame {
    pub tick: u64,
    pub direction: Direction,
    pub kind: FrameKind,
    pub payload: BitString,
}

impl Frame {
    pub fn challenge(tick: u64, payload: BitString) -> Frame {
        Frame {
            tick,
            direction: Direction::ReaderToTag,
            kind: FrameKind::Challenge,
            payload,
        }
    }

    pub fn response(tick: u64, payload: BitString) -> Frame {
        Frame {
            tick,
            direction: Direction::TagToReader,
            kind: FrameKind::Response,
            payload,
        }
    }

    /// Challenge payload as an integer, bit `i` = `C_i`.
    pub fn challenge_value(&self) -> Option<u64> {
        self.payload.to_u64()
    }
}

impl fmt::Display for Frame {
    /// `tick dir kind payload_hex`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.tick,
            self.direction,
            self.kind,
            self.payload.to_hex()
        )
    }
}

/// A frame log; challenge payloads are `stages` bits, responses `lanes` bits.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Transcript {
    pub stages: usize,
    pub lanes: usize,
    pub frames: Vec<Frame>,
}

impl Transcript {
    pub fn new(stages: usize, lanes: usize) -> Self {
        Transcript {
            stages,
            lanes,
            frames: Vec::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# n={} k={}\n", self.stages, self.lanes);
        for frame in &self.frames {
            out.push_str(&frame.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty transcript".into()))?;
        let dims: Vec<usize> = header
            .trim_start_matches('#')
            .split_whitespace()
            .map(|kv| {
                kv.split_once('=')
                    .and_then(|(_, v)| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad transcript header {header:?}")))
            })
            .collect::<Result<_>>()?;
        let [stages, lanes] = dims[..] else {
            return Err(Error::Parse(format!("bad transcript header {header:?}")));
        };
        let mut transcript = Transcript::new(stages, lanes);
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [tick, dir, kind, payload] = parts[..] else {
                return Err(Error::Parse(format!("bad frame line {line:?}")));
            };
            let kind: FrameKind = kind.parse()?;
            let width = match kind {
                FrameKind::Challenge => stages,
                FrameKind::Response => lanes,
            };
            transcript.frames.push(Frame {
                tick: tick.parse().map_err(|_| Error::Parse(format!("bad tick {tick:?}")))?,
                direction: dir.parse()?,
                kind,
                payload: BitString::from_hex(payload, width)?,
            });
        }
        Ok(transcript)
    }
}
