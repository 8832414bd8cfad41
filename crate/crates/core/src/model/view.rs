use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::NodeId;

/// A neighbour record.
///
/// `value` is what the neighbour advertised when the entry was created: its
/// random value for the ordering protocols, its rank estimate for the
/// ranking protocol (`None` until it has observed anything). The value is
/// only refreshed when the owner hears from the neighbour directly, so it
/// may be stale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewEntry {
    pub id: NodeId,
    pub age: u32,
    pub attr: f64,
    pub value: Option<f64>,
}

impl ViewEntry {
    pub fn fresh(id: NodeId, attr: f64, value: Option<f64>) -> Self {
        Self {
            id,
            age: 0,
            attr,
            value,
        }
    }
}

/// Bounded set of neighbour entries, no duplicate ids, never the owner.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    entries: Vec<ViewEntry>,
    capacity: usize,
}

impl View {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::with_capacity(capacity),
            capacity,
        }
    }

    /// Builds a view from entries, dropping the owner and duplicate ids
    /// (the fresher entry wins) and truncating to the freshest `capacity`
    /// entries, earlier entries first among equal ages.
    pub fn from_entries(
        owner: NodeId,
        capacity: usize,
        entries: impl IntoIterator<Item = ViewEntry>,
    ) -> Self {
        let mut view = Self::new(capacity);
        view.absorb(owner, entries);
        view.truncate(None);
        view
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ViewEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn get(&self, id: NodeId) -> Option<&ViewEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Records a newer advertised value for `id` without touching its age.
    pub fn set_value(&mut self, id: NodeId, value: Option<f64>) -> bool {
        match self.entries.iter_mut().find(|e| e.id == id) {
            Some(e) => {
                e.value = value;
                true
            }
            None => false,
        }
    }

    pub fn remove(&mut self, id: NodeId) -> Option<ViewEntry> {
        let pos = self.entries.iter().position(|e| e.id == id)?;
        Some(self.entries.remove(pos))
    }

    pub fn increment_ages(&mut self) {
        for e in &mut self.entries {
            e.age = e.age.saturating_add(1);
        }
    }

    /// The entry with the greatest age, ties broken uniformly at random.
    pub fn oldest(&self, rng: &mut impl Rng) -> Option<&ViewEntry> {
        let max = self.entries.iter().map(|e| e.age).max()?;
        let oldest: Vec<&ViewEntry> = self.entries.iter().filter(|e| e.age == max).collect();
        oldest.choose(rng).copied()
    }

    /// Merges `incoming` into the view. Self-pointers are dropped; on a
    /// duplicate id the entry with the smaller age is kept. The result is
    /// truncated to capacity keeping the freshest entries, with `pinned`
    /// always retained if present and equal ages ordered at random.
    pub fn merge(
        &mut self,
        owner: NodeId,
        incoming: impl IntoIterator<Item = ViewEntry>,
        pinned: Option<NodeId>,
        rng: &mut impl Rng,
    ) {
        self.absorb(owner, incoming);
        if self.entries.len() > self.capacity {
            self.entries.shuffle(rng);
            self.truncate(pinned);
        }
    }

    fn absorb(&mut self, owner: NodeId, incoming: impl IntoIterator<Item = ViewEntry>) {
        for entry in incoming {
            if entry.id == owner {
                continue;
            }
            match self.entries.iter_mut().find(|e| e.id == entry.id) {
                Some(existing) => {
                    if entry.age < existing.age {
                        *existing = entry;
                    }
                }
                None => self.entries.push(entry),
            }
        }
    }

    /// Stable: equal ages keep their current relative order.
    fn truncate(&mut self, pinned: Option<NodeId>) {
        if self.entries.len() <= self.capacity {
            return;
        }
        let is_pinned = |e: &ViewEntry| Some(e.id) == pinned;
        self.entries
            .sort_by(|a, b| is_pinned(b).cmp(&is_pinned(a)).then(a.age.cmp(&b.age)));
        self.entries.truncate(self.capacity);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::engine_rng;

    fn e(id: u64, age: u32) -> ViewEntry {
        ViewEntry {
            id: NodeId(id),
            age,
            attr: id as f64,
            value: Some(0.5),
        }
    }

    #[test]
    fn oldest_prefers_max_age_and_splits_ties() {
        let v = View::from_entries(NodeId(0), 4, [e(3, 5), e(2, 2), e(1, 5)]);
        let mut rng = engine_rng(1);
        let mut seen = [0usize; 4];
        for _ in 0..400 {
            seen[v.oldest(&mut rng).unwrap().id.0 as usize] += 1;
        }
        assert_eq!(seen[2], 0);
        assert!(seen[1] > 150 && seen[3] > 150, "{seen:?}");
        assert!(View::new(2).oldest(&mut rng).is_none());
    }

    #[test]
    fn merge_drops_owner_and_keeps_fresher_duplicate() {
        let mut v = View::from_entries(NodeId(0), 4, [e(1, 7), e(2, 1)]);
        v.merge(
            NodeId(0),
            [e(0, 0), e(1, 3), e(2, 9)],
            None,
            &mut engine_rng(0),
        );
        assert!(!v.contains(NodeId(0)));
        assert_eq!(v.get(NodeId(1)).unwrap().age, 3);
        assert_eq!(v.get(NodeId(2)).unwrap().age, 1);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn truncation_keeps_freshest_and_pinned() {
        let mut rng = engine_rng(2);
        let mut second = [0usize; 5];
        for _ in 0..200 {
            let mut v = View::new(2);
            v.merge(
                NodeId(0),
                [e(1, 0), e(2, 0), e(3, 0), e(4, 4)],
                Some(NodeId(3)),
                &mut rng,
            );
            let ids: Vec<_> = v.ids().collect();
            assert_eq!(ids[0], NodeId(3));
            second[ids[1].0 as usize] += 1;
        }
        // the stale entry 4 never survives; fresh 1 and 2 share the slot
        assert_eq!(second[4], 0);
        assert!(second[1] > 60 && second[2] > 60, "{second:?}");
    }

    #[test]
    fn from_entries_keeps_freshest_in_order() {
        let v = View::from_entries(NodeId(0), 2, [e(5, 3), e(6, 1), e(7, 1)]);
        assert_eq!(v.ids().collect::<Vec<_>>(), vec![NodeId(6), NodeId(7)]);
    }
}
