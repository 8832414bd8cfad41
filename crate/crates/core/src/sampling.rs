//! Peer sampling: a full-view Cyclon variant and an idealized uniform oracle.
//!
//! The Cyclon exchange is split into its three message-handling halves so the
//! engine can route between nodes it owns:
//!
//! 1. [`prepare_exchange`] on the initiator: age every entry, pick the oldest
//!    neighbour and build the request (whole view minus the partner's entry,
//!    plus a fresh self-entry);
//! 2. [`answer_exchange`] on the partner: reply with its own view and merge
//!    the request;
//! 3. [`complete_exchange`] on the initiator: merge the reply.
//!
//! Merging drops self-pointers, keeps the fresher of two entries with the
//! same id, and truncates back to capacity keeping the youngest entries.

use rand::seq::index;
use rand::Rng;

use crate::model::{NodeId, View, ViewEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Full-view exchange with the oldest neighbour, every cycle.
    Cyclon,
    /// `c` distinct live nodes drawn uniformly every cycle.
    Uniform,
}

impl SamplingMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::Cyclon => "cyclon",
            SamplingMode::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeRequest {
    pub partner: NodeId,
    pub entries: Vec<ViewEntry>,
}

pub fn prepare_exchange(
    view: &mut View,
    own: ViewEntry,
    rng: &mut impl Rng,
) -> Option<ExchangeRequest> {
    view.increment_ages();
    let partner = view.oldest(rng)?.id;
    let mut entries: Vec<ViewEntry> = view
        .entries()
        .iter()
        .filter(|e| e.id != partner)
        .copied()
        .collect();
    entries.push(ViewEntry { age: 0, ..own });
    Some(ExchangeRequest { partner, entries })
}

/// Passive side. Returns the reply, which is the view as it was on receipt
/// without any pointer back to the requester.
pub fn answer_exchange(
    view: &mut View,
    owner: NodeId,
    requester: NodeId,
    request: &[ViewEntry],
    rng: &mut impl Rng,
) -> Vec<ViewEntry> {
    let reply = view
        .entries()
        .iter()
        .filter(|e| e.id != requester)
        .copied()
        .collect();
    view.merge(owner, request.iter().copied(), Some(requester), rng);
    reply
}

pub fn complete_exchange(view: &mut View, owner: NodeId, reply: &[ViewEntry], rng: &mut impl Rng) {
    view.merge(owner, reply.iter().copied(), None, rng);
}

/// The partner has left: drop its entry, no view change otherwise.
pub fn abort_exchange(view: &mut View, partner: NodeId) {
    view.remove(partner);
}

/// Runs a whole exchange between two views held by the caller.
pub fn exchange(
    initiator: (NodeId, &mut View),
    own: ViewEntry,
    partner: (NodeId, &mut View),
    rng: &mut impl Rng,
) -> Option<NodeId> {
    let (init_id, init_view) = initiator;
    let request = prepare_exchange(init_view, own, rng)?;
    let (partner_id, partner_view) = partner;
    assert_eq!(
        request.partner, partner_id,
        "exchange routed to the wrong partner"
    );
    let reply = answer_exchange(partner_view, partner_id, init_id, &request.entries, rng);
    complete_exchange(init_view, init_id, &reply, rng);
    Some(partner_id)
}

/// Positions of `c` distinct members of a live set of size `live`, excluding
/// position `owner`, uniform without replacement. Returns every other
/// position when the live set is too small.
pub fn uniform_sample(live: usize, owner: usize, c: usize, rng: &mut impl Rng) -> Vec<usize> {
    let others = live.saturating_sub(1);
    let amount = c.min(others);
    index::sample(rng, others, amount)
        .into_iter()
        .map(|i| if i >= owner { i + 1 } else { i })
        .collect()
}

/// A uniform view over a directory of fresh entries for every live node.
pub fn uniform_view(owner: usize, directory: &[ViewEntry], c: usize, rng: &mut impl Rng) -> View {
    let owner_id = directory[owner].id;
    let picks = uniform_sample(directory.len(), owner, c, rng);
    View::from_entries(owner_id, c, picks.into_iter().map(|p| directory[p]))
}
