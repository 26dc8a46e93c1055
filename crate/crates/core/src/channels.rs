//! Memoryless point-to-point channels and multiple-access channels.
//!
//! Symbols are `u8`. Binary channels take inputs in `{0, 1}`; the erasure
//! channel outputs [`ERASURE`] for erased positions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binary_entropy, blahut_arimoto};

/// Output symbol used by the erasure channel.
pub const ERASURE: u8 = 2;

/// Row-sum tolerance for transition tables.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Stopping tolerance for table-channel capacity.
pub const CAPACITY_TOLERANCE: f64 = 1e-9;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded, splittable random stream.
///
/// `split` derives an independent child stream from `(seed, stream, label)`
/// without consuming randomness from the parent, so parallel trials can be
/// given disjoint streams deterministically.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn split(&self, label: u64) -> RngStream {
        let child = splitmix(self.stream ^ splitmix(label.wrapping_add(1)));
        RngStream::with_stream(splitmix(self.seed ^ child), child)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PointChannel {
    Bsc { p: f64 },
    Bec { epsilon: f64 },
    Table { transition: Vec<Vec<f64>>, capacity: f64 },
}

impl PointChannel {
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Domain {
                value: p,
                domain: "[0, 1/2]",
            });
        }
        Ok(PointChannel::Bsc { p })
    }

    pub fn bec(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain {
                value: epsilon,
                domain: "[0, 1]",
            });
        }
        Ok(PointChannel::Bec { epsilon })
    }

    /// Channel given by a row-stochastic `|X| × |Y|` matrix.
    pub fn table(transition: Vec<Vec<f64>>) -> Result<Self> {
        let width = transition.first().map_or(0, Vec::len);
        if transition.is_empty() || width == 0 || transition.len() > 256 || width > 256 {
            return Err(Error::Config("transition table must be non-empty and at most 256×256".into()));
        }
        for row in &transition {
            if row.len() != width {
                return Err(Error::LengthMismatch {
                    expected: width,
                    actual: row.len(),
                });
            }
            if row.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
                return Err(Error::Config("transition probabilities must lie in [0, 1]".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Config(format!("transition row sums to {sum}")));
            }
        }
        let (capacity, _) = blahut_arimoto(&transition, CAPACITY_TOLERANCE);
        Ok(PointChannel::Table {
            transition,
            capacity,
        })
    }

    pub fn capacity(&self) -> f64 {
        match self {
            PointChannel::Bsc { p } => 1.0 - binary_entropy(*p).expect("validated"),
            PointChannel::Bec { epsilon } => 1.0 - epsilon,
            PointChannel::Table { capacity, .. } => *capacity,
        }
    }

    pub fn input_alphabet(&self) -> usize {
        match self {
            PointChannel::Table { transition, .. } => transition.len(),
            _ => 2,
        }
    }

    /// A channel whose output always equals its input.
    pub fn is_identity(&self) -> bool {
        match self {
            PointChannel::Bsc { p } => *p == 0.0,
            PointChannel::Bec { epsilon } => *epsilon == 0.0,
            PointChannel::Table { transition, .. } => {
                transition.len() <= transition[0].len()
                    && transition
                        .iter()
                        .enumerate()
                        .all(|(x, row)| row[x] == 1.0)
            }
        }
    }

    pub fn transmit<R: RngCore + ?Sized>(&self, x: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        let alphabet = self.input_alphabet();
        if let Some(&symbol) = x.iter().find(|&&s| s as usize >= alphabet) {
            return Err(Error::Alphabet { symbol, alphabet });
        }
        Ok(match self {
            PointChannel::Bsc { p } => x.iter().map(|&b| b ^ rng.gen_bool(*p) as u8).collect(),
            PointChannel::Bec { epsilon } => x
                .iter()
                .map(|&b| if rng.gen_bool(*epsilon) { ERASURE } else { b })
                .collect(),
            PointChannel::Table { transition, .. } => x
                .iter()
                .map(|&s| sample_row(&transition[s as usize], rng))
                .collect(),
        })
    }
}

fn sample_row<R: RngCore + ?Sized>(row: &[f64], rng: &mut R) -> u8 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (y, &q) in row.iter().enumerate() {
        acc += q;
        if u < acc {
            return y as u8;
        }
    }
    // round-off: last symbol with positive mass
    row.iter().rposition(|&q| q > 0.0).unwrap_or(0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MacKind {
    /// `y = x_1 ⊕ … ⊕ x_N ⊕ z`, `z ~ Bernoulli(p)`.
    Additive { p: f64 },
    Conjunction,
    Disjunction,
    /// One input chosen uniformly per session.
    SelectionFixed,
    /// A fresh input chosen uniformly at every channel use.
    SelectionPerUse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacChannel {
    kind: MacKind,
    inputs: usize,
}

impl MacChannel {
    pub fn new(kind: MacKind, inputs: usize) -> Result<Self> {
        if inputs == 0 {
            return Err(Error::Config("a MAC needs at least one input".into()));
        }
        if let MacKind::Additive { p } = kind {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::Domain {
                    value: p,
                    domain: "[0, 1/2)",
                });
            }
        }
        Ok(Self { kind, inputs })
    }

    pub fn kind(&self) -> MacKind {
        self.kind
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Selected input per channel use for the selection channels, `None`
    /// for the others.
    pub fn draw_selection<R: RngCore + ?Sized>(&self, uses: usize, rng: &mut R) -> Option<Vec<usize>> {
        match self.kind {
            MacKind::SelectionFixed => {
                let n = rng.gen_range(0..self.inputs);
                Some(vec![n; uses])
            }
            MacKind::SelectionPerUse => Some((0..uses).map(|_| rng.gen_range(0..self.inputs)).collect()),
            _ => None,
        }
    }

    pub fn transmit<R: RngCore + ?Sized>(&self, inputs: &[Vec<u8>], rng: &mut R) -> Result<Vec<u8>> {
        if inputs.len() != self.inputs {
            return Err(Error::LengthMismatch {
                expected: self.inputs,
                actual: inputs.len(),
            });
        }
        let t = inputs[0].len();
        for x in inputs {
            if x.len() != t {
                return Err(Error::LengthMismatch {
                    expected: t,
                    actual: x.len(),
                });
            }
            if let Some(&symbol) = x.iter().find(|&&s| s > 1) {
                return Err(Error::Alphabet { symbol, alphabet: 2 });
            }
        }
        let column = |eta: usize| inputs.iter().map(move |x| x[eta]);
        Ok(match self.kind {
            MacKind::Additive { p } => (0..t)
                .map(|eta| column(eta).fold(0, |a, b| a ^ b) ^ rng.gen_bool(p) as u8)
                .collect(),
            MacKind::Conjunction => (0..t).map(|eta| column(eta).fold(1, |a, b| a & b)).collect(),
            MacKind::Disjunction => (0..t).map(|eta| column(eta).fold(0, |a, b| a | b)).collect(),
            MacKind::SelectionFixed | MacKind::SelectionPerUse => {
                let picks = self.draw_selection(t, rng).expect("selection channel");
                picks.iter().enumerate().map(|(eta, &n)| inputs[n][eta]).collect()
            }
        })
    }
}

/// A parsed channel descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChannelSpec {
    Point(PointChannel),
    Mac(MacKind),
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let number = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(s.to_string()));
        match parts.as_slice() {
            ["bsc", p] => Ok(ChannelSpec::Point(PointChannel::bsc(number(p)?)?)),
            ["bec", e] => Ok(ChannelSpec::Point(PointChannel::bec(number(e)?)?)),
            ["mac", "add", p] => {
                let p = number(p)?;
                MacChannel::new(MacKind::Additive { p }, 1)?;
                Ok(ChannelSpec::Mac(MacKind::Additive { p }))
            }
            ["mac", "and"] => Ok(ChannelSpec::Mac(MacKind::Conjunction)),
            ["mac", "or"] => Ok(ChannelSpec::Mac(MacKind::Disjunction)),
            ["mac", "sel"] => Ok(ChannelSpec::Mac(MacKind::SelectionFixed)),
            ["mac", "selp"] => Ok(ChannelSpec::Mac(MacKind::SelectionPerUse)),
            _ => Err(Error::Parse(s.to_string())),
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Point(PointChannel::Bsc { p }) => write!(f, "bsc:{p}"),
            ChannelSpec::Point(PointChannel::Bec { epsilon }) => write!(f, "bec:{epsilon}"),
            ChannelSpec::Point(PointChannel::Table { .. }) => write!(f, "table"),
            ChannelSpec::Mac(MacKind::Additive { p }) => write!(f, "mac:add:{p}"),
            ChannelSpec::Mac(MacKind::Conjunction) => write!(f, "mac:and"),
            ChannelSpec::Mac(MacKind::Disjunction) => write!(f, "mac:or"),
            ChannelSpec::Mac(MacKind::SelectionFixed) => write!(f, "mac:sel"),
            ChannelSpec::Mac(MacKind::SelectionPerUse) => write!(f, "mac:selp"),
        }
    }
}

/// Parses a comma-separated list of point-channel descriptors.
pub fn parse_point_channels(list: &str) -> Result<Vec<PointChannel>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.parse::<ChannelSpec>()? {
            ChannelSpec::Point(ch) => Ok(ch),
            ChannelSpec::Mac(_) => Err(Error::Parse(s.to_string())),
        })
        .collect()
}
