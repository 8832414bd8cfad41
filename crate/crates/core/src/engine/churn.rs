use std::collections::HashSet;

use rand::seq::index;

use crate::model::NodeId;
use crate::rng::{node_rng, unit_interval};

use super::{Correlation, SimError, Simulation};

/// Nodes that left and joined in one churn event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChurnEvent {
    pub left: Vec<NodeId>,
    pub joined: Vec<NodeId>,
}

impl Simulation {
    /// Applies the configured churn event for the current cycle.
    pub(super) fn churn(&mut self) -> Result<ChurnEvent, SimError> {
        let n = self.nodes.len();
        let schedule = self.config.churn;
        let leave = (schedule.leave_rate * n as f64).floor() as usize;
        let join = (schedule.join_rate * n as f64).floor() as usize;
        let leaving: Vec<NodeId> = match schedule.correlation {
            Correlation::Attribute => {
                let mut by_attr: Vec<(f64, NodeId)> =
                    self.nodes.iter().map(|n| (n.attr, n.id)).collect();
                by_attr.sort_by(|a, b| crate::model::value_order(*a, *b));
                by_attr.into_iter().take(leave).map(|(_, id)| id).collect()
            }
            Correlation::Uniform => index::sample(&mut self.rng, n, leave.min(n))
                .into_iter()
                .map(|p| self.nodes[p].id)
                .collect(),
        };
        self.check_population(n - leaving.len() + join)?;
        self.remove_nodes(&leaving);
        let joined = (0..join)
            .map(|_| {
                let mut rng = node_rng(self.config.seed, self.next_id);
                let attr = match schedule.correlation {
                    Correlation::Attribute => {
                        let top = self.nodes.iter().map(|n| n.attr).fold(f64::MIN, f64::max);
                        top + unit_interval(&mut rng) / self.config.n as f64
                    }
                    Correlation::Uniform => self.config.attr_dist.sample(&mut rng),
                };
                self.spawn(attr, rng)
            })
            .collect();
        Ok(ChurnEvent {
            left: leaving,
            joined,
        })
    }

    fn check_population(&self, live: usize) -> Result<(), SimError> {
        if live <= self.config.c {
            return Err(SimError::PopulationCollapse {
                cycle: self.cycle,
                live,
                c: self.config.c,
            });
        }
        Ok(())
    }

    /// Removes nodes by id. Views elsewhere keep their now dangling entries.
    /// Returns how many were live.
    pub fn remove_nodes(&mut self, ids: &[NodeId]) -> usize {
        let gone: HashSet<NodeId> = ids.iter().copied().collect();
        let before = self.nodes.len();
        self.nodes.retain(|n| !gone.contains(&n.id));
        self.reindex();
        before - self.nodes.len()
    }

    /// Adds a node with the given attribute, fresh protocol state and a
    /// bootstrap view of uniformly chosen live nodes.
    pub fn join_node(&mut self, attr: f64) -> NodeId {
        let rng = node_rng(self.config.seed, self.next_id);
        self.spawn(attr, rng)
    }

    fn spawn(&mut self, attr: f64, rng: crate::rng::SimRng) -> NodeId {
        let id = self.push_node(attr, rng);
        self.bootstrap(self.nodes.len() - 1);
        id
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ChurnSchedule, Protocol, SimConfig};
    use super::*;

    #[test]
    fn correlated_churn_replaces_lowest_with_new_maximum() {
        let mut c = SimConfig::new(Protocol::Jk, 100, 5, 4, 1, 9);
        c.churn = ChurnSchedule::correlated(0.05, 1, None);
        let mut sim = Simulation::new(c).unwrap();
        let mut attrs: Vec<(f64, NodeId)> = sim
            .node_ids()
            .map(|id| (sim.attr_of(id).unwrap(), id))
            .collect();
        attrs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let top = attrs.last().unwrap().0;
        let event = sim.churn().unwrap();
        let expected: Vec<NodeId> = attrs.iter().take(5).map(|a| a.1).collect();
        assert_eq!(event.left, expected);
        assert_eq!(event.joined.len(), 5);
        assert_eq!(sim.live(), 100);
        for id in &event.joined {
            assert!(sim.attr_of(*id).unwrap() > top);
            assert_eq!(sim.view_of(*id).unwrap().len(), 5);
        }
    }

    #[test]
    fn collapse_is_reported() {
        let mut c = SimConfig::new(Protocol::Ranking, 10, 5, 2, 1, 0);
        c.churn.leave_rate = 0.5;
        let mut sim = Simulation::new(c).unwrap();
        assert!(matches!(
            sim.churn(),
            Err(SimError::PopulationCollapse { live: 5, .. })
        ));
    }

    #[test]
    fn joiner_ids_are_fresh() {
        let mut sim = Simulation::new(SimConfig::new(Protocol::Jk, 10, 3, 2, 1, 0)).unwrap();
        sim.remove_nodes(&[NodeId(9)]);
        assert_eq!(sim.join_node(0.5), NodeId(10));
    }
}
