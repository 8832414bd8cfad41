//! Ranking by sampling attribute values.
//!
//! A node estimates its normalized rank as `l / g`: the fraction of the
//! attribute values it has encountered that are lower than or equal to its
//! own. Each active step scans the freshly refreshed view, then sends its own
//! attribute to two neighbours: the one whose advertised rank estimate lies
//! closest to an interior slice boundary, and a random one. Receivers count
//! the value and never reply.
//!
//! The boundary recipient is chosen by its own estimate alone, so which
//! neighbour gets the extra sample does not depend on the sender's rank and
//! the sample stays uniform from the receiver's point of view.
//!
//! The windowed variant keeps only the last `W` comparison bits.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::analysis::{z_critical, BoundError};
use crate::model::{NodeId, SliceSpec, View};

/// Default sliding-window capacity in bits.
pub const DEFAULT_WINDOW_BITS: usize = 10_000;

/// Fixed-capacity FIFO of bits stored packed, 64 to a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitWindow {
    words: Vec<u64>,
    capacity: usize,
    head: usize,
    len: usize,
    ones: usize,
}

impl BitWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            words: vec![0; capacity.div_ceil(64)],
            capacity,
            head: 0,
            len: 0,
            ones: 0,
        }
    }

    fn bit(&self, pos: usize) -> bool {
        self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    fn set(&mut self, pos: usize, bit: bool) {
        let mask = 1u64 << (pos % 64);
        if bit {
            self.words[pos / 64] |= mask;
        } else {
            self.words[pos / 64] &= !mask;
        }
    }

    /// Appends a bit, evicting and returning the oldest one when full.
    pub fn push(&mut self, bit: bool) -> Option<bool> {
        let evicted = if self.len == self.capacity {
            let old = self.bit(self.head);
            if old {
                self.ones -= 1;
            }
            self.set(self.head, bit);
            self.head = (self.head + 1) % self.capacity;
            Some(old)
        } else {
            let pos = (self.head + self.len) % self.capacity;
            self.set(pos, bit);
            self.len += 1;
            None
        };
        if bit {
            self.ones += 1;
        }
        evicted
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Bytes needed to hold `capacity` bits.
    pub fn storage_bytes(&self) -> usize {
        self.capacity.div_ceil(8)
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit((self.head + i) % self.capacity))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tally {
    Cumulative { lower: u64, seen: u64 },
    Window(BitWindow),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingState {
    tally: Tally,
    slice_estimate: Option<usize>,
}

impl Default for RankingState {
    fn default() -> Self {
        Self::new()
    }
}

impl RankingState {
    pub fn new() -> Self {
        Self {
            tally: Tally::Cumulative { lower: 0, seen: 0 },
            slice_estimate: None,
        }
    }

    pub fn windowed(capacity: usize) -> Self {
        Self {
            tally: Tally::Window(BitWindow::new(capacity)),
            slice_estimate: None,
        }
    }

    pub fn window(&self) -> Option<&BitWindow> {
        match &self.tally {
            Tally::Window(w) => Some(w),
            Tally::Cumulative { .. } => None,
        }
    }

    /// Counter of observed values lower than or equal to the own attribute.
    pub fn lower(&self) -> u64 {
        match &self.tally {
            Tally::Cumulative { lower, .. } => *lower,
            Tally::Window(w) => w.ones() as u64,
        }
    }

    /// Counter of observed values.
    pub fn seen(&self) -> u64 {
        match &self.tally {
            Tally::Cumulative { seen, .. } => *seen,
            Tally::Window(w) => w.len() as u64,
        }
    }

    pub fn rank_estimate(&self) -> Option<f64> {
        let seen = self.seen();
        (seen > 0).then(|| self.lower() as f64 / seen as f64)
    }

    pub fn slice_estimate(&self) -> Option<usize> {
        self.slice_estimate
    }

    /// Records one comparison bit and refreshes the estimates.
    pub fn observe(&mut self, lower_or_equal: bool, spec: &SliceSpec) {
        match &mut self.tally {
            Tally::Cumulative { lower, seen } => {
                *seen += 1;
                if lower_or_equal {
                    *lower += 1;
                }
            }
            Tally::Window(w) => {
                w.push(lower_or_equal);
            }
        }
        self.slice_estimate = self.rank_estimate().map(|r| spec.slice_of_clamped(r));
    }

    /// Records an observed attribute value.
    pub fn record(&mut self, own_attr: f64, other_attr: f64, spec: &SliceSpec) {
        self.observe(other_attr <= own_attr, spec);
    }
}

/// The two recipients of a node's update messages. They may coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateTargets {
    pub boundary: NodeId,
    pub random: NodeId,
}

/// Active step: count every neighbour, then pick the update recipients.
/// `None` for an empty view.
pub fn active_step(
    state: &mut RankingState,
    own_attr: f64,
    view: &View,
    spec: &SliceSpec,
    rng: &mut impl Rng,
) -> Option<UpdateTargets> {
    if view.is_empty() {
        return None;
    }
    for e in view.entries() {
        state.record(own_attr, e.attr, spec);
    }
    let dist = |value: Option<f64>| {
        value
            .and_then(|v| spec.nearest_interior_boundary(v).map(|b| (v - b).abs()))
            .unwrap_or(f64::INFINITY)
    };
    let boundary = view
        .entries()
        .iter()
        .min_by(|x, y| {
            dist(x.value)
                .total_cmp(&dist(y.value))
                .then(x.id.cmp(&y.id))
        })
        .map(|e| e.id)?;
    let random = view.entries().choose(rng).map(|e| e.id)?;
    Some(UpdateTargets { boundary, random })
}

/// Passive side: an update carrying the sender's attribute.
pub fn receive(state: &mut RankingState, own_attr: f64, sender_attr: f64, spec: &SliceSpec) {
    state.record(own_attr, sender_attr, spec);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSize {
    pub samples: u64,
    pub z: f64,
    /// The normal approximation behind the count assumes more than 30
    /// samples.
    pub below_normal_regime: bool,
}

/// Messages a node with estimate `p_hat`, at distance `d` from the nearest
/// slice boundary, must receive for its Wald interval at level `1 - alpha`
/// to fit inside its slice: `ceil((Z_{alpha/2} sqrt(p_hat (1 - p_hat)) / d)^2)`.
pub fn required_samples(p_hat: f64, d: f64, alpha: f64) -> Result<SampleSize, BoundError> {
    let domain = |name, value, domain| BoundError::Domain {
        name,
        value,
        domain,
    };
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(domain("p_hat", p_hat, "(0, 1)"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("alpha", alpha, "(0, 1)"));
    }
    if d == 0.0 {
        return Err(BoundError::OnBoundary);
    }
    if !(d > 0.0) {
        return Err(domain("d", d, "d > 0"));
    }
    let z = z_critical(alpha);
    let k = (z * (p_hat * (1.0 - p_hat)).sqrt() / d).powi(2).ceil() as u64;
    Ok(SampleSize {
        samples: k,
        z,
        below_normal_regime: k <= 30,
    })
}
