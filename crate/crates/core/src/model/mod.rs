//! Domain types shared by every protocol: node identities, the total order
//! over attribute values, slice partitions and neighbour views.

mod slice;
mod view;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub use slice::{SliceError, SliceSpec};
pub use view::{View, ViewEntry};

/// Identity of a node. Ids are handed out by a monotone counter and never
/// reused within a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("duplicate node id {0} in population")]
    DuplicateId(NodeId),
}

/// The total order over nodes: by value, ties broken by id.
///
/// Used for the attribute sequence and, identically, for the sequence of
/// random values (where ties only arise from finite float precision).
pub fn value_order(a: (f64, NodeId), b: (f64, NodeId)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// 1-based positions of each key in the [`value_order`] sequence, aligned
/// with the input slice.
pub fn sequence_ranks(keys: &[(f64, NodeId)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_unstable_by(|&x, &y| value_order(keys[x], keys[y]));
    let mut ranks = vec![0; keys.len()];
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

/// Attribute-based rank of every node: its index in the attribute sequence.
pub fn attribute_rank(population: &[(NodeId, f64)]) -> Result<HashMap<NodeId, usize>, RankError> {
    let mut seen = HashSet::with_capacity(population.len());
    for &(id, _) in population {
        if !seen.insert(id) {
            return Err(RankError::DuplicateId(id));
        }
    }
    let keys: Vec<(f64, NodeId)> = population.iter().map(|&(id, a)| (a, id)).collect();
    let ranks = sequence_ranks(&keys);
    Ok(population
        .iter()
        .zip(ranks)
        .map(|(&(id, _), r)| (id, r))
        .collect())
}
