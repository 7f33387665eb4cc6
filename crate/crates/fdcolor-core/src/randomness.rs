//! Splittable per-vertex randomness.
//!
//! Every construction in this crate consumes iid uniform labels attached to
//! vertices. We realize them as keyed derivations from one master seed: the
//! value at `(vertex, tag, index)` is a pure hash of the key, so identical
//! keys always reproduce the same value and distinct keys give independent
//! streams. Rather than splitting binary digits of a single uniform label,
//! the same splitting contract is met by keying, which keeps replays exact.

use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::VertexId;

/// splitmix64 finalizer; a bijection on u64 with good avalanche behavior.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_tag(tag: &str) -> u64 {
    // FNV-1a, then one mix round to spread short tags.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in tag.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandomnessError {
    ZeroSidedChoice,
    TooManyNeighbors { neighbors: usize, range: usize },
}

impl core::fmt::Display for RandomnessError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RandomnessError::ZeroSidedChoice => write!(f, "uniform_choice needs m >= 1"),
            RandomnessError::TooManyNeighbors { neighbors, range } => {
                write!(f, "cannot injectively map {neighbors} neighbors into 1..={range}")
            }
        }
    }
}

/// Stateless source of per-vertex tagged uniform streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexRandomness {
    master_seed: u64,
}

impl VertexRandomness {
    pub fn new(master_seed: u64) -> Self {
        VertexRandomness { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Independent source for a derived trial; used to fan out Monte Carlo
    /// repetitions from one master seed.
    pub fn derive_trial(&self, trial: u64) -> VertexRandomness {
        VertexRandomness {
            master_seed: mix64(self.master_seed ^ mix64(trial ^ 0x7472_6961_6c5f_6964)),
        }
    }

    #[inline]
    fn raw(&self, v: VertexId, tag_hash: u64, index: u64, attempt: u64) -> u64 {
        let mut h = self.master_seed ^ 0x5bd1_e995_97f4_a7c1;
        h = mix64(h ^ tag_hash);
        h = mix64(h ^ (v as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h = mix64(h ^ index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        if attempt != 0 {
            h = mix64(h ^ attempt.wrapping_mul(0x94d0_49bb_1331_11eb));
        }
        h
    }

    /// 64-bit word of the stream at `(vertex, tag, index)`.
    pub fn word(&self, v: VertexId, tag: &str, index: u64) -> u64 {
        self.raw(v, hash_tag(tag), index, 0)
    }

    /// Uniform value in `[0, 1)` with 53-bit resolution.
    pub fn uniform(&self, v: VertexId, tag: &str, index: u64) -> f64 {
        let w = self.word(v, tag, index);
        (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..m`, unbiased via rejection on the 64-bit word.
    pub fn uniform_choice(&self, v: VertexId, tag: &str, index: u64, m: u64) -> Result<u64, RandomnessError> {
        if m == 0 {
            return Err(RandomnessError::ZeroSidedChoice);
        }
        if m == 1 {
            return Ok(0);
        }
        let tag_hash = hash_tag(tag);
        let zone = u64::MAX - (u64::MAX % m);
        let mut attempt = 0u64;
        loop {
            let w = self.raw(v, tag_hash, index, attempt);
            if w < zone {
                return Ok(w % m);
            }
            attempt += 1;
        }
    }

    /// Uniform injection from `neighbors` into `1..=range`, drawn at vertex
    /// `v`. Returned labels are aligned with the input neighbor order.
    pub fn random_injection(
        &self,
        v: VertexId,
        tag: &str,
        neighbors: &[VertexId],
        range: usize,
    ) -> Result<Vec<u8>, RandomnessError> {
        if neighbors.len() > range {
            return Err(RandomnessError::TooManyNeighbors { neighbors: neighbors.len(), range });
        }
        let mut pool: Vec<u8> = (1..=range as u8).collect();
        let mut out = Vec::with_capacity(neighbors.len());
        for (step, _) in neighbors.iter().enumerate() {
            let pick = self.uniform_choice(v, tag, step as u64, pool.len() as u64)? as usize;
            out.push(pool.remove(pick));
        }
        Ok(out)
    }
}

/// Sequential draw cursor over the streams of a fixed vertex list.
///
/// Line samplers consume one stream per component; the `t`-th draw comes from
/// the stream of the `t mod L`-th component vertex, so the sampled coloring
/// is a function of the component's own labels only.
pub struct ComponentStream<'a, R: VertexStreams + ?Sized> {
    rng: &'a R,
    vertices: &'a [VertexId],
    tag: &'a str,
    counter: u64,
}

impl<'a, R: VertexStreams + ?Sized> ComponentStream<'a, R> {
    pub fn new(rng: &'a R, vertices: &'a [VertexId], tag: &'a str) -> Self {
        debug_assert!(!vertices.is_empty());
        ComponentStream { rng, vertices, tag, counter: 0 }
    }

    pub fn next_choice(&mut self, m: u64) -> u64 {
        let len = self.vertices.len() as u64;
        let v = self.vertices[(self.counter % len) as usize];
        let index = self.counter / len;
        self.counter += 1;
        self.rng
            .uniform_choice(v, self.tag, index, m)
            .expect("m >= 1 by construction")
    }
}

/// Randomness view used by perturbation tests: vertices in `reseeded` draw
/// from an alternative master seed, everything else is untouched.
#[derive(Debug, Clone)]
pub struct PerturbedRandomness {
    base: VertexRandomness,
    alt: VertexRandomness,
    reseeded: Vec<bool>,
}

impl PerturbedRandomness {
    pub fn new(base: VertexRandomness, salt: u64, reseeded: Vec<bool>) -> Self {
        let alt = VertexRandomness::new(mix64(base.master_seed() ^ mix64(salt ^ 0x70657274)));
        PerturbedRandomness { base, alt, reseeded }
    }

    fn source(&self, v: VertexId) -> &VertexRandomness {
        if self.reseeded.get(v).copied().unwrap_or(false) {
            &self.alt
        } else {
            &self.base
        }
    }
}

/// What the pipeline actually consumes: any per-vertex keyed stream source.
pub trait VertexStreams {
    fn word(&self, v: VertexId, tag: &str, index: u64) -> u64;
    fn uniform(&self, v: VertexId, tag: &str, index: u64) -> f64;
    fn uniform_choice(&self, v: VertexId, tag: &str, index: u64, m: u64) -> Result<u64, RandomnessError>;
    fn random_injection(
        &self,
        v: VertexId,
        tag: &str,
        neighbors: &[VertexId],
        range: usize,
    ) -> Result<Vec<u8>, RandomnessError>;
}

impl VertexStreams for VertexRandomness {
    fn word(&self, v: VertexId, tag: &str, index: u64) -> u64 {
        VertexRandomness::word(self, v, tag, index)
    }
    fn uniform(&self, v: VertexId, tag: &str, index: u64) -> f64 {
        VertexRandomness::uniform(self, v, tag, index)
    }
    fn uniform_choice(&self, v: VertexId, tag: &str, index: u64, m: u64) -> Result<u64, RandomnessError> {
        VertexRandomness::uniform_choice(self, v, tag, index, m)
    }
    fn random_injection(
        &self,
        v: VertexId,
        tag: &str,
        neighbors: &[VertexId],
        range: usize,
    ) -> Result<Vec<u8>, RandomnessError> {
        VertexRandomness::random_injection(self, v, tag, neighbors, range)
    }
}

impl VertexStreams for PerturbedRandomness {
    fn word(&self, v: VertexId, tag: &str, index: u64) -> u64 {
        self.source(v).word(v, tag, index)
    }
    fn uniform(&self, v: VertexId, tag: &str, index: u64) -> f64 {
        self.source(v).uniform(v, tag, index)
    }
    fn uniform_choice(&self, v: VertexId, tag: &str, index: u64, m: u64) -> Result<u64, RandomnessError> {
        self.source(v).uniform_choice(v, tag, index, m)
    }
    fn random_injection(
        &self,
        v: VertexId,
        tag: &str,
        neighbors: &[VertexId],
        range: usize,
    ) -> Result<Vec<u8>, RandomnessError> {
        self.source(v).random_injection(v, tag, neighbors, range)
    }
}

/// Builds the tag string for a level-scoped stream, e.g. `ins/3/2`.
pub fn level_tag(base: &str, level: usize, label: u8) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    let _ = write!(s, "{base}/{level}/{label}");
    s
}
