//! Ordering by exchange of random values: `JK` and the gain-maximizing
//! `mod-JK` partner choice.
//!
//! Every node holds a random value in `(0, 1]`. Two nodes whose random
//! values are ordered opposite to their attribute values swap them; once the
//! random sequence mirrors the attribute sequence each node reads its slice
//! off its random value.

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{sequence_ranks, NodeId, SliceSpec, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingVariant {
    /// A uniformly random misplaced neighbour, or any neighbour if none is
    /// misplaced.
    Jk,
    /// The neighbour maximizing the local disorder reduction.
    ModJk,
}

#[derive(Debug, Error, PartialEq)]
pub enum OrderingError {
    #[error("{0} is not in the view")]
    NotInView(NodeId),
}

/// What a node knows about itself when choosing a partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalNode {
    pub id: NodeId,
    pub attr: f64,
    pub rvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingState {
    pub rvalue: f64,
    pub slice_estimate: Option<usize>,
}

impl OrderingState {
    pub fn new(rvalue: f64) -> Self {
        Self {
            rvalue,
            slice_estimate: None,
        }
    }

    fn settle(&mut self, spec: &SliceSpec) {
        self.slice_estimate = Some(spec.slice_of_clamped(self.rvalue));
    }
}

/// `(a_j - a_i)(r_j - r_i) < 0`: attribute and random orders disagree.
pub fn is_misplaced(a_i: f64, r_i: f64, a_j: f64, r_j: f64) -> bool {
    (a_j - a_i) * (r_j - r_i) < 0.0
}

/// 1-based indices of a node and its neighbours in the local attribute and
/// random sequences. Position 0 is the owner, then the view in its order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalIndices {
    pub ids: Vec<NodeId>,
    pub attr_index: Vec<usize>,
    pub value_index: Vec<usize>,
}

pub fn local_indices(own: LocalNode, view: &View) -> LocalIndices {
    let mut ids = Vec::with_capacity(view.len() + 1);
    let mut attrs = Vec::with_capacity(view.len() + 1);
    let mut values = Vec::with_capacity(view.len() + 1);
    ids.push(own.id);
    attrs.push((own.attr, own.id));
    values.push((own.rvalue, own.id));
    for e in view.entries() {
        ids.push(e.id);
        attrs.push((e.attr, e.id));
        values.push((e.value.unwrap_or(0.0), e.id));
    }
    LocalIndices {
        ids,
        attr_index: sequence_ranks(&attrs),
        value_index: sequence_ranks(&values),
    }
}

impl LocalIndices {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// Local disorder: mean squared gap between local attribute and random
    /// indices over the owner and its view.
    pub fn ldm(&self) -> f64 {
        let sum: usize = self
            .attr_index
            .iter()
            .zip(&self.value_index)
            .map(|(&a, &r)| a.abs_diff(r).pow(2))
            .sum();
        sum as f64 / self.len() as f64
    }

    /// Disorder reduction if the owner swapped random values with the member
    /// at `pos`.
    pub fn gain(&self, pos: usize) -> f64 {
        let sq = |a: usize, r: usize| (a as f64 - r as f64).powi(2);
        let (ai, ri) = (self.attr_index[0], self.value_index[0]);
        let (aj, rj) = (self.attr_index[pos], self.value_index[pos]);
        (sq(ai, ri) + sq(aj, rj) - sq(ai, rj) - sq(aj, ri)) / self.len() as f64
    }

    /// `la_i * lr_j + la_j * lr_i - la_j * lr_j`: orders neighbours exactly
    /// like [`gain`](Self::gain), shifted by `la_i * lr_i` and scaled by
    /// `(c + 1) / 2`.
    pub fn gain_score(&self, pos: usize) -> i64 {
        let (ai, ri) = (self.attr_index[0] as i64, self.value_index[0] as i64);
        let (aj, rj) = (self.attr_index[pos] as i64, self.value_index[pos] as i64);
        ai * rj + aj * ri - aj * rj
    }
}

/// Gain of swapping with neighbour `j`.
pub fn gain(own: LocalNode, view: &View, j: NodeId) -> Result<f64, OrderingError> {
    let idx = local_indices(own, view);
    match idx.position(j) {
        Some(pos) if pos > 0 => Ok(idx.gain(pos)),
        _ => Err(OrderingError::NotInView(j)),
    }
}

/// Picks the neighbour to send a swap request to.
///
/// `ModJk` scans the view in order keeping the last neighbour whose score is
/// at least the running maximum, which starts at 0; it returns `None` when
/// every score is negative. `Jk` always returns a neighbour of a non-empty
/// view.
pub fn select_partner(
    variant: OrderingVariant,
    own: LocalNode,
    view: &View,
    rng: &mut impl Rng,
) -> Option<NodeId> {
    if view.is_empty() {
        return None;
    }
    match variant {
        OrderingVariant::Jk => {
            let misplaced: Vec<NodeId> = view
                .entries()
                .iter()
                .filter(|e| {
                    e.value
                        .is_some_and(|r| is_misplaced(own.attr, own.rvalue, e.attr, r))
                })
                .map(|e| e.id)
                .collect();
            if misplaced.is_empty() {
                view.entries().choose(rng).map(|e| e.id)
            } else {
                misplaced.choose(rng).copied()
            }
        }
        OrderingVariant::ModJk => {
            let idx = local_indices(own, view);
            let mut best = 0i64;
            let mut chosen = None;
            for pos in 1..idx.len() {
                let score = idx.gain_score(pos);
                if score >= best {
                    best = score;
                    chosen = Some(idx.ids[pos]);
                }
            }
            chosen
        }
    }
}

/// Receiver's answer to a swap request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ack {
    /// The receiver's random value before it handled the request.
    pub rvalue: f64,
    pub adopted: bool,
}

/// Passive side: reply with the current value, then adopt the requester's
/// value if the pair is misplaced by the receiver's own reckoning.
pub fn handle_request(
    state: &mut OrderingState,
    own_attr: f64,
    req_attr: f64,
    req_rvalue: f64,
    spec: &SliceSpec,
) -> Ack {
    let ack = state.rvalue;
    let adopted = is_misplaced(own_attr, state.rvalue, req_attr, req_rvalue);
    if adopted {
        state.rvalue = req_rvalue;
    }
    state.settle(spec);
    Ack {
        rvalue: ack,
        adopted,
    }
}

/// Active side on receipt of the reply. `partner_attr` is the constant
/// attribute the initiator already has in its view.
pub fn handle_ack(
    state: &mut OrderingState,
    own_attr: f64,
    partner_attr: f64,
    ack_rvalue: f64,
    spec: &SliceSpec,
) -> bool {
    let adopted = is_misplaced(own_attr, state.rvalue, partner_attr, ack_rvalue);
    if adopted {
        state.rvalue = ack_rvalue;
    }
    state.settle(spec);
    adopted
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapOutcome {
    Swapped,
    NoOp,
}

/// One request/reply exchange delivered without interference.
pub fn swap_step(
    initiator: (&mut OrderingState, f64),
    responder: (&mut OrderingState, f64),
    spec: &SliceSpec,
) -> SwapOutcome {
    let (init, a_i) = initiator;
    let (resp, a_j) = responder;
    let r_i = init.rvalue;
    let ack = handle_request(resp, a_j, a_i, r_i, spec);
    let adopted = handle_ack(init, a_i, a_j, ack.rvalue, spec);
    if ack.adopted || adopted {
        SwapOutcome::Swapped
    } else {
        SwapOutcome::NoOp
    }
}
