//! Insertion colorings of finite directed paths and cycles.
//!
//! A coloring of a line of `n` positions is built by inserting symbols one at
//! a time, each at a uniformly random position with a uniformly random color,
//! restarting the whole run whenever an inserted symbol equals a current
//! neighbor. The conditioned law gives weight `W(x)` = number of insertion
//! orders that build `x` without conflict, computable by the deletion
//! recursion `W(x) = sum over removable last positions of W(x minus i)`.
//!
//! For paths the conditioned process admits a restart-free equivalent: the
//! probability of completing the remaining insertions from any proper word
//! depends only on the word's length (end slots admit `q-1` colors, interior
//! slots `q-2`, regardless of content), so conditioning on overall success
//! reduces to conditioning each step, i.e. drawing uniformly from the valid
//! (slot, color) pairs. `sample_line` uses that for paths and plain rejection
//! for cycles, where arc endpoints may repeat colors and the equivalence
//! breaks down.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::randomness::ComponentStream;

/// Default cap on the oracle's line length; the state space is `q^n`.
pub const DEFAULT_ORACLE_CAP: usize = 9;

/// Restart budget for the rejection sampler.
pub const DEFAULT_RETRY_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Topology {
    Path,
    Cycle,
}

impl core::fmt::Display for Topology {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Topology::Path => write!(f, "path"),
            Topology::Cycle => write!(f, "cycle"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineError {
    BadParameter(String),
    OverCap { n: usize, cap: usize },
    OutsideOracleDomain(String),
    RetryCapReached { restarts: u64 },
}

impl core::fmt::Display for LineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LineError::BadParameter(m) => write!(f, "{m}"),
            LineError::OverCap { n, cap } => write!(f, "line length {n} exceeds oracle cap {cap}"),
            LineError::OutsideOracleDomain(m) => write!(f, "{m}"),
            LineError::RetryCapReached { restarts } => {
                write!(f, "insertion sampler aborted after {restarts} restarts")
            }
        }
    }
}

/// A proper coloring of a path or cycle; symbols are `0..q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineColoring {
    pub topology: Topology,
    pub q: u8,
    pub colors: Vec<u8>,
}

impl LineColoring {
    pub fn is_proper(&self) -> bool {
        is_proper(self.topology, &self.colors)
    }
}

pub fn is_proper(topology: Topology, colors: &[u8]) -> bool {
    let n = colors.len();
    match topology {
        Topology::Path => (1..n).all(|i| colors[i] != colors[i - 1]),
        Topology::Cycle => {
            if n <= 1 {
                true
            } else if n == 2 {
                colors[0] != colors[1]
            } else {
                (0..n).all(|i| colors[i] != colors[(i + 1) % n])
            }
        }
    }
}

fn check_line_params(topology: Topology, n: usize, q: u8) -> Result<(), LineError> {
    if n == 0 {
        return Err(LineError::BadParameter("line length must be at least 1".into()));
    }
    if !(2..=8).contains(&q) {
        return Err(LineError::BadParameter(format!("color count q={q} unsupported")));
    }
    if topology == Topology::Cycle && n < 3 {
        return Err(LineError::OutsideOracleDomain(format!(
            "cycles of length {n} are handled by edge deletion, not the insertion measure"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact distribution
// ---------------------------------------------------------------------------

/// Exact insertion-measure distribution: integer weight `W(x)` per sequence,
/// probability `W(x) / total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactLineDistribution {
    pub topology: Topology,
    pub n: usize,
    pub q: u8,
    support: BTreeMap<Vec<u8>, u64>,
    total: u64,
}

pub fn exact_line_distribution(topology: Topology, n: usize, q: u8) -> Result<ExactLineDistribution, LineError> {
    exact_line_distribution_with_cap(topology, n, q, DEFAULT_ORACLE_CAP)
}

pub fn exact_line_distribution_with_cap(
    topology: Topology,
    n: usize,
    q: u8,
    cap: usize,
) -> Result<ExactLineDistribution, LineError> {
    check_line_params(topology, n, q)?;
    if n > cap {
        return Err(LineError::OverCap { n, cap });
    }
    let support = match topology {
        Topology::Path => path_weights(n, q),
        Topology::Cycle => cycle_weights(n, q),
    };
    let total: u64 = support.values().sum();
    debug_assert!(total > 0);
    Ok(ExactLineDistribution { topology, n, q, support, total })
}

/// Forward build of all path weights: each valid insertion into a weighted
/// word contributes that word's weight to the longer word.
fn path_weights(n: usize, q: u8) -> BTreeMap<Vec<u8>, u64> {
    let mut words: BTreeMap<Vec<u8>, u64> = (0..q).map(|c| (alloc::vec![c], 1u64)).collect();
    for _ in 2..=n {
        let mut next: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for (word, w) in &words {
            let len = word.len();
            for slot in 0..=len {
                for c in 0..q {
                    if slot > 0 && word[slot - 1] == c {
                        continue;
                    }
                    if slot < len && word[slot] == c {
                        continue;
                    }
                    let mut grown = Vec::with_capacity(len + 1);
                    grown.extend_from_slice(&word[..slot]);
                    grown.push(c);
                    grown.extend_from_slice(&word[slot..]);
                    *next.entry(grown).or_insert(0) += w;
                }
            }
        }
        words = next;
    }
    words
}

fn cycle_weights(n: usize, q: u8) -> BTreeMap<Vec<u8>, u64> {
    let mut memo: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    let mut out = BTreeMap::new();
    let mut seq = alloc::vec![0u8; n];
    loop {
        if is_proper(Topology::Cycle, &seq) {
            let w = cyclic_weight(&seq, &mut memo);
            if w > 0 {
                out.insert(seq.clone(), w);
            }
        }
        // odometer over q^n sequences
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            seq[i] += 1;
            if seq[i] < q {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

/// Lexicographically minimal rotation; the insertion weight of a cyclic word
/// is rotation-invariant, so this is a sound memo key.
fn canonical_rotation(seq: &[u8]) -> Vec<u8> {
    let n = seq.len();
    let mut best: Option<Vec<u8>> = None;
    for s in 0..n {
        let rot: Vec<u8> = (0..n).map(|i| seq[(s + i) % n]).collect();
        if best.as_ref().is_none_or(|b| rot < *b) {
            best = Some(rot);
        }
    }
    best.unwrap()
}

/// Deletion recursion for cyclic words: sum over positions that differ from
/// both current cyclic neighbors of the weight of the word with the position
/// removed. A single-symbol state imposes no constraint; a two-symbol state
/// imposes its one adjacency once.
fn cyclic_weight(seq: &[u8], memo: &mut BTreeMap<Vec<u8>, u64>) -> u64 {
    let n = seq.len();
    if n == 1 {
        return 1;
    }
    let key = canonical_rotation(seq);
    if let Some(&w) = memo.get(&key) {
        return w;
    }
    let mut total = 0u64;
    for i in 0..n {
        let prev = seq[(i + n - 1) % n];
        let next = seq[(i + 1) % n];
        if seq[i] != prev && seq[i] != next {
            let mut rest = Vec::with_capacity(n - 1);
            rest.extend_from_slice(&seq[..i]);
            rest.extend_from_slice(&seq[i + 1..]);
            total += cyclic_weight(&rest, memo);
        }
    }
    memo.insert(key, total);
    total
}

impl ExactLineDistribution {
    pub fn weight(&self, seq: &[u8]) -> u64 {
        self.support.get(seq).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support(&self) -> impl Iterator<Item = (&Vec<u8>, u64)> {
        self.support.iter().map(|(k, &v)| (k, v))
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn prob(&self, seq: &[u8]) -> BigRational {
        BigRational::new(BigInt::from(self.weight(seq)), BigInt::from(self.total))
    }

    /// Integer-weight marginal on a subset of positions (ascending), with the
    /// same total as the full distribution.
    pub fn marginal(&self, positions: &[usize]) -> BTreeMap<Vec<u8>, u64> {
        let mut out: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for (seq, w) in &self.support {
            let key: Vec<u8> = positions.iter().map(|&p| seq[p]).collect();
            *out.entry(key).or_insert(0) += w;
        }
        out
    }

    /// Path distribution with one endpoint summed out. Used to check the
    /// consistency property that justifies coloring finite paths directly.
    pub fn marginalize_endpoint(&self, last: bool) -> Result<ExactLineDistribution, LineError> {
        if self.topology != Topology::Path {
            return Err(LineError::BadParameter("endpoint marginalization applies to paths".into()));
        }
        if self.n < 2 {
            return Err(LineError::BadParameter("nothing to marginalize on a 1-path".into()));
        }
        let mut support: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for (seq, w) in &self.support {
            let key: Vec<u8> = if last {
                seq[..self.n - 1].to_vec()
            } else {
                seq[1..].to_vec()
            };
            *support.entry(key).or_insert(0) += w;
        }
        let total = self.total;
        Ok(ExactLineDistribution { topology: Topology::Path, n: self.n - 1, q: self.q, support, total })
    }

    /// Exact equality of the normalized laws (weights may use different
    /// totals).
    pub fn same_law(&self, other: &ExactLineDistribution) -> bool {
        let keys: alloc::collections::BTreeSet<&Vec<u8>> =
            self.support.keys().chain(other.support.keys()).collect();
        for key in keys {
            let a = self.weight(key) as u128 * other.total as u128;
            let b = other.weight(key) as u128 * self.total as u128;
            if a != b {
                return false;
            }
        }
        true
    }

    /// Oracle dump: one `sequence numerator/denominator` line per support
    /// element, lexicographic order, symbols printed 1-based.
    pub fn dump(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        for (seq, w) in &self.support {
            for c in seq {
                let _ = write!(s, "{}", c + 1);
            }
            let g = gcd_u64(*w, self.total);
            let _ = writeln!(s, " {}/{}", w / g, self.total / g);
        }
        s
    }

    pub fn check_k_dependence(&self, k: usize) -> LineDependenceReport {
        check_k_dependence_line(self, k)
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Result of exhaustively testing `A (perp) B` for all index-set pairs at
/// separation greater than `k`.
#[derive(Debug, Clone)]
pub struct LineDependenceReport {
    pub k: usize,
    pub pairs_checked: usize,
    pub max_discrepancy: BigRational,
    pub worst_pair: Option<(Vec<usize>, Vec<usize>)>,
    pub holds: bool,
}

fn separation(topology: Topology, n: usize, a: &[usize], b: &[usize]) -> usize {
    let mut best = usize::MAX;
    for &x in a {
        for &y in b {
            let d = x.abs_diff(y);
            let d = match topology {
                Topology::Path => d,
                Topology::Cycle => d.min(n - d),
            };
            best = best.min(d);
        }
    }
    best
}

/// Checks every disjoint pair of nonempty index sets at separation `> k`:
/// the joint marginal must equal the product of marginals exactly. Returns
/// the largest absolute discrepancy encountered.
pub fn check_k_dependence_line(dist: &ExactLineDistribution, k: usize) -> LineDependenceReport {
    let n = dist.n;
    let q = dist.q as usize;
    let total = dist.total as u128;
    let support: Vec<(&Vec<u8>, u64)> = dist.support().collect();

    let mut pairs_checked = 0usize;
    let mut max_num: u128 = 0;
    let mut worst_pair = None;

    // Ternary odometer: 0 = neither, 1 = in A, 2 = in B.
    let mut assign = alloc::vec![0u8; n];
    'outer: loop {
        let a: Vec<usize> = (0..n).filter(|&i| assign[i] == 1).collect();
        let b: Vec<usize> = (0..n).filter(|&i| assign[i] == 2).collect();
        // Each unordered pair once: the smallest selected index sits in A.
        let dominated = match (a.first(), b.first()) {
            (Some(&fa), Some(&fb)) => fa < fb,
            _ => false,
        };
        if dominated && separation(dist.topology, n, &a, &b) > k {
            pairs_checked += 1;
            let size_a = q.pow(a.len() as u32);
            let size_b = q.pow(b.len() as u32);
            let mut joint = alloc::vec![0u64; size_a * size_b];
            let mut wa = alloc::vec![0u64; size_a];
            let mut wb = alloc::vec![0u64; size_b];
            for (seq, w) in &support {
                let ia: usize = a.iter().enumerate().map(|(j, &p)| seq[p] as usize * q.pow(j as u32)).sum();
                let ib: usize = b.iter().enumerate().map(|(j, &p)| seq[p] as usize * q.pow(j as u32)).sum();
                joint[ia + ib * size_a] += w;
                wa[ia] += w;
                wb[ib] += w;
            }
            for ia in 0..size_a {
                for ib in 0..size_b {
                    let lhs = joint[ia + ib * size_a] as u128 * total;
                    let rhs = wa[ia] as u128 * wb[ib] as u128;
                    let diff = lhs.abs_diff(rhs);
                    if diff > max_num {
                        max_num = diff;
                        worst_pair = Some((a.clone(), b.clone()));
                    }
                }
            }
        }
        // advance odometer
        let mut i = 0;
        loop {
            if i == n {
                break 'outer;
            }
            assign[i] += 1;
            if assign[i] < 3 {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }

    let denom = BigInt::from(total) * BigInt::from(total);
    let max_discrepancy = BigRational::new(BigInt::from(max_num), denom);
    LineDependenceReport {
        k,
        pairs_checked,
        holds: max_num == 0,
        max_discrepancy,
        worst_pair,
    }
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Samples the insertion measure. Paths use the exact restart-free form;
/// cycles use whole-run rejection with a restart cap.
pub fn sample_line<R: crate::randomness::VertexStreams + ?Sized>(
    topology: Topology,
    n: usize,
    q: u8,
    stream: &mut ComponentStream<'_, R>,
) -> Result<LineColoring, LineError> {
    check_line_params(topology, n, q)?;
    match topology {
        Topology::Path => Ok(sample_path_conditioned(n, q, stream)),
        Topology::Cycle => sample_rejection(topology, n, q, stream, DEFAULT_RETRY_CAP),
    }
}

/// Path sampler: each step inserts at a uniformly random (slot, color) pair
/// among the currently valid ones, which equals the rejection law exactly.
fn sample_path_conditioned<R: crate::randomness::VertexStreams + ?Sized>(
    n: usize,
    q: u8,
    stream: &mut ComponentStream<'_, R>,
) -> LineColoring {
    let q_us = q as u64;
    let mut word: Vec<u8> = Vec::with_capacity(n);
    word.push(stream.next_choice(q_us) as u8);
    while word.len() < n {
        let len = word.len();
        let total = 2 * (q_us - 1) + (len as u64 - 1) * (q_us - 2);
        let mut r = stream.next_choice(total);
        let mut placed = false;
        for slot in 0..=len {
            let valid = if slot == 0 || slot == len { q_us - 1 } else { q_us - 2 };
            if r < valid {
                let mut c = 0u8;
                let mut remaining = r;
                loop {
                    let forbidden = (slot > 0 && word[slot - 1] == c) || (slot < len && word[slot] == c);
                    if !forbidden {
                        if remaining == 0 {
                            break;
                        }
                        remaining -= 1;
                    }
                    c += 1;
                }
                word.insert(slot, c);
                placed = true;
                break;
            }
            r -= valid;
        }
        debug_assert!(placed);
    }
    LineColoring { topology: Topology::Path, q, colors: word }
}

/// Reference realization: reveal positions in uniformly random order with
/// iid uniform colors, restarting the run whenever a revealed symbol matches
/// its nearest already-revealed neighbor on either side.
pub fn sample_line_rejection<R: crate::randomness::VertexStreams + ?Sized>(
    topology: Topology,
    n: usize,
    q: u8,
    stream: &mut ComponentStream<'_, R>,
    retry_cap: u64,
) -> Result<LineColoring, LineError> {
    check_line_params(topology, n, q)?;
    sample_rejection(topology, n, q, stream, retry_cap)
}

fn sample_rejection<R: crate::randomness::VertexStreams + ?Sized>(
    topology: Topology,
    n: usize,
    q: u8,
    stream: &mut ComponentStream<'_, R>,
    retry_cap: u64,
) -> Result<LineColoring, LineError> {
    let q_us = q as u64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut colors = alloc::vec![0u8; n];
    let mut revealed = alloc::vec![false; n];
    for restarts in 0..retry_cap {
        for i in 0..n {
            order[i] = i;
        }
        for i in (1..n).rev() {
            let j = stream.next_choice(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        revealed.iter_mut().for_each(|r| *r = false);
        let mut ok = true;
        for &pos in &order {
            let c = stream.next_choice(q_us) as u8;
            let left = nearest_revealed(topology, n, &revealed, pos, false);
            let right = nearest_revealed(topology, n, &revealed, pos, true);
            if left.map(|p| colors[p] == c).unwrap_or(false)
                || right.map(|p| colors[p] == c).unwrap_or(false)
            {
                ok = false;
                break;
            }
            colors[pos] = c;
            revealed[pos] = true;
        }
        if ok {
            let _ = restarts;
            return Ok(LineColoring { topology, q, colors });
        }
    }
    Err(LineError::RetryCapReached { restarts: retry_cap })
}

fn nearest_revealed(
    topology: Topology,
    n: usize,
    revealed: &[bool],
    pos: usize,
    forward: bool,
) -> Option<usize> {
    match topology {
        Topology::Path => {
            if forward {
                (pos + 1..n).find(|&p| revealed[p])
            } else {
                (0..pos).rev().find(|&p| revealed[p])
            }
        }
        Topology::Cycle => {
            let mut p = pos;
            for _ in 1..n {
                p = if forward { (p + 1) % n } else { (p + n - 1) % n };
                if revealed[p] {
                    return Some(p);
                }
            }
            None
        }
    }
}
