//! Binary and CSV serialization of event streams.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! magic            8 bytes  "AFCEVTS\0"
//! version          u16
//! config digest    32 bytes (SHA-256)
//! seed             u64
//! duration         u64 ps
//! lock period      u64 ps
//! measure period   u64 ps
//! trial length     u64 ps
//! mode duration    u64 ps
//! modes per trial  u32
//! readout delay    u64 ps
//! window           u64 ps
//! herald port      u8 (0 plus, 1 minus)
//! phase count      u32, then that many f64 radians
//! record count     u64
//! records          u64 time ps, u8 channel, u32 trial, u16 mode
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::HeraldPort;
use crate::error::{Error, Result, StreamErrorKind};

pub const MAGIC: &[u8; 8] = b"AFCEVTS\0";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    HeraldPlus = 0,
    HeraldMinus = 1,
    Readout1 = 2,
    Readout2 = 3,
}

impl Channel {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::HeraldPlus),
            1 => Some(Self::HeraldMinus),
            2 => Some(Self::Readout1),
            3 => Some(Self::Readout2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::HeraldPlus => "herald_plus",
            Self::HeraldMinus => "herald_minus",
            Self::Readout1 => "readout_1",
            Self::Readout2 => "readout_2",
        }
    }

    pub fn herald(port: HeraldPort) -> Self {
        match port {
            HeraldPort::Plus => Self::HeraldPlus,
            HeraldPort::Minus => Self::HeraldMinus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_ps: u64,
    pub channel: Channel,
    pub trial_index: u32,
    pub mode_index: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub version: u16,
    #[serde(with = "hex_digest")]
    pub config_digest: [u8; 32],
    pub seed: u64,
    pub duration_ps: u64,
    pub lock_period_ps: u64,
    pub measure_period_ps: u64,
    pub trial_length_ps: u64,
    pub mode_duration_ps: u64,
    pub modes_per_trial: u32,
    pub readout_delay_ps: u64,
    pub coincidence_window_ps: u64,
    pub herald_port: HeraldPort,
    pub fringe_phases: Vec<f64>,
}

impl StreamHeader {
    pub fn cycle_period_ps(&self) -> u64 {
        self.lock_period_ps + self.measure_period_ps
    }

    pub fn duration(&self) -> f64 {
        self.duration_ps as f64 * 1e-12
    }
}

mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.try_into().map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub header: StreamHeader,
    pub records: Vec<EventRecord>,
}

impl EventStream {
    pub fn check_order(&self) -> Result<()> {
        if self.records.windows(2).any(|w| w[1].time_ps < w[0].time_ps) {
            return Err(Error::stream(StreamErrorKind::NonMonotonic, "non-monotonic timestamps"));
        }
        Ok(())
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.records.iter().filter(|r| r.channel == channel).count()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        self.check_order()?;
        let h = &self.header;
        let mut buf = Vec::with_capacity(128 + 15 * self.records.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&h.version.to_le_bytes());
        buf.extend_from_slice(&h.config_digest);
        for v in [h.seed, h.duration_ps, h.lock_period_ps, h.measure_period_ps, h.trial_length_ps, h.mode_duration_ps] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&h.modes_per_trial.to_le_bytes());
        buf.extend_from_slice(&h.readout_delay_ps.to_le_bytes());
        buf.extend_from_slice(&h.coincidence_window_ps.to_le_bytes());
        buf.push(match h.herald_port {
            HeraldPort::Plus => 0,
            HeraldPort::Minus => 1,
        });
        buf.extend_from_slice(&(h.fringe_phases.len() as u32).to_le_bytes());
        for p in &h.fringe_phases {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        buf.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for r in &self.records {
            buf.extend_from_slice(&r.time_ps.to_le_bytes());
            buf.push(r.channel as u8);
            buf.extend_from_slice(&r.trial_index.to_le_bytes());
            buf.extend_from_slice(&r.mode_index.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut c = Cursor { bytes: &bytes, pos: 0 };
        if c.take(8)? != MAGIC {
            return Err(Error::stream(StreamErrorKind::BadMagic, "not an event stream (bad magic)"));
        }
        let version = c.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::stream(
                StreamErrorKind::VersionMismatch,
                format!("format version mismatch: file {version}, supported {FORMAT_VERSION}"),
            ));
        }
        let config_digest: [u8; 32] = c.take(32)?.try_into().expect("32 bytes");
        let seed = c.u64()?;
        let duration_ps = c.u64()?;
        let lock_period_ps = c.u64()?;
        let measure_period_ps = c.u64()?;
        let trial_length_ps = c.u64()?;
        let mode_duration_ps = c.u64()?;
        let modes_per_trial = c.u32()?;
        let readout_delay_ps = c.u64()?;
        let coincidence_window_ps = c.u64()?;
        let herald_port = match c.take(1)?[0] {
            0 => HeraldPort::Plus,
            1 => HeraldPort::Minus,
            v => return Err(Error::stream(StreamErrorKind::Malformed, format!("malformed header: herald port {v}"))),
        };
        let n_phases = c.u32()? as usize;
        let fringe_phases = (0..n_phases).map(|_| c.u64().map(f64::from_bits)).collect::<Result<_>>()?;
        let n = c.u64()? as usize;
        if (bytes.len() - c.pos) / 15 < n {
            return Err(Error::stream(StreamErrorKind::UnexpectedEnd, "unexpected end of stream"));
        }
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let time_ps = c.u64()?;
            let ch = c.take(1)?[0];
            let channel = Channel::from_u8(ch)
                .ok_or_else(|| Error::stream(StreamErrorKind::Malformed, format!("malformed record: channel {ch}")))?;
            records.push(EventRecord { time_ps, channel, trial_index: c.u32()?, mode_index: c.u16()? });
        }
        if c.pos != bytes.len() {
            return Err(Error::stream(StreamErrorKind::Malformed, "trailing bytes after last record"));
        }
        let stream = Self {
            header: StreamHeader {
                version,
                config_digest,
                seed,
                duration_ps,
                lock_period_ps,
                measure_period_ps,
                trial_length_ps,
                mode_duration_ps,
                modes_per_trial,
                readout_delay_ps,
                coincidence_window_ps,
                herald_port,
                fringe_phases,
            },
            records,
        };
        stream.check_order()?;
        Ok(stream)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_ps,channel,trial,mode\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{}\n", r.time_ps, r.channel.name(), r.trial_index, r.mode_index));
        }
        s
    }
}

pub fn write_stream(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    stream.write_to(std::io::BufWriter::new(f))
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<EventStream> {
    let f = std::fs::File::open(path)?;
    EventStream::read_from(std::io::BufReader::new(f))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::stream(StreamErrorKind::UnexpectedEnd, "unexpected end of stream"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
