//! Cycle-driven simulation of a population running one slicing protocol over
//! a peer sampling layer.

mod churn;
mod config;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::metrics::{
    population_gdm, population_sdm, sorted_assignment_sdm, CycleMetrics, Observed,
};
use crate::model::{NodeId, View, ViewEntry};
use crate::ordering::{
    handle_ack, handle_request, is_misplaced, select_partner, LocalNode, OrderingState,
    OrderingVariant,
};
use crate::ranking::{active_step, receive, RankingState};
use crate::rng::{engine_rng, node_rng, unit_interval, SimRng};
use crate::sampling::{
    abort_exchange, answer_exchange, complete_exchange, prepare_exchange, uniform_sample,
    SamplingMode,
};

pub use churn::ChurnEvent;

const GONE: usize = usize::MAX;
pub use config::{AttrDist, ChurnSchedule, Concurrency, Correlation, Protocol, SimConfig};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("churn at cycle {cycle} would leave {live} live nodes with view size {c}")]
    PopulationCollapse { cycle: u64, live: usize, c: usize },
}

#[derive(Debug, Clone)]
enum ProtocolState {
    Ordering(OrderingState),
    Ranking(RankingState),
}

#[derive(Debug, Clone)]
struct Node {
    id: NodeId,
    attr: f64,
    view: View,
    state: ProtocolState,
    rng: SimRng,
}

impl Node {
    /// The value this node advertises in view entries.
    fn advertised(&self) -> Option<f64> {
        match &self.state {
            ProtocolState::Ordering(s) => Some(s.rvalue),
            ProtocolState::Ranking(s) => s.rank_estimate(),
        }
    }

    fn entry(&self) -> ViewEntry {
        ViewEntry::fresh(self.id, self.attr, self.advertised())
    }
}

/// A protocol message. Swap requests are evaluated on both ends' values at
/// delivery; `expected` records whether the sender's view promised a swap.
#[derive(Debug, Clone, Copy)]
enum Message {
    SwapRequest {
        from: NodeId,
        to: NodeId,
        partner_attr: f64,
        expected: bool,
    },
    Update {
        from: NodeId,
        to: NodeId,
        attr: f64,
    },
}

/// State of one node as seen by the observer.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSnapshot {
    pub id: NodeId,
    pub attr: f64,
    pub rvalue: Option<f64>,
    pub rank_estimate: Option<f64>,
    pub slice_estimate: Option<usize>,
    pub view: Vec<NodeId>,
}

pub struct Simulation {
    config: SimConfig,
    nodes: Vec<Node>,
    /// Position in `nodes` by id; ids are dense, departed ids map to `GONE`.
    index: Vec<usize>,
    next_id: u64,
    cycle: u64,
    rng: SimRng,
    messages: u64,
    unsuccessful: u64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut sim = Self {
            nodes: Vec::with_capacity(config.n),
            index: Vec::with_capacity(config.n),
            next_id: 0,
            cycle: 0,
            rng: engine_rng(config.seed),
            messages: 0,
            unsuccessful: 0,
            config,
        };
        for _ in 0..sim.config.n {
            let mut rng = node_rng(sim.config.seed, sim.next_id);
            let attr = sim.config.attr_dist.sample(&mut rng);
            sim.push_node(attr, rng);
        }
        for pos in 0..sim.nodes.len() {
            sim.bootstrap(pos);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Number of completed cycles.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn live(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn view_of(&self, id: NodeId) -> Option<&View> {
        self.pos(id).map(|p| &self.nodes[p].view)
    }

    pub fn attr_of(&self, id: NodeId) -> Option<f64> {
        self.pos(id).map(|p| self.nodes[p].attr)
    }

    pub fn observed(&self) -> Vec<Observed> {
        self.nodes
            .iter()
            .map(|n| match &n.state {
                ProtocolState::Ordering(s) => Observed {
                    id: n.id,
                    attr: n.attr,
                    rvalue: Some(s.rvalue),
                    slice_estimate: Some(
                        s.slice_estimate
                            .unwrap_or_else(|| self.config.slices.slice_of_clamped(s.rvalue)),
                    ),
                },
                ProtocolState::Ranking(s) => Observed {
                    id: n.id,
                    attr: n.attr,
                    rvalue: None,
                    slice_estimate: s.slice_estimate(),
                },
            })
            .collect()
    }

    pub fn snapshot(&self) -> Vec<NodeSnapshot> {
        self.nodes
            .iter()
            .zip(self.observed())
            .map(|(n, o)| NodeSnapshot {
                id: n.id,
                attr: n.attr,
                rvalue: o.rvalue,
                rank_estimate: match &n.state {
                    ProtocolState::Ranking(s) => s.rank_estimate(),
                    ProtocolState::Ordering(_) => None,
                },
                slice_estimate: o.slice_estimate,
                view: n.view.ids().collect(),
            })
            .collect()
    }

    /// Metrics of the current state, attributed to the current cycle.
    pub fn measure(&self) -> CycleMetrics {
        let population = self.observed();
        CycleMetrics {
            cycle: self.cycle,
            gdm: population_gdm(&population).expect("population is never empty"),
            sdm: population_sdm(&population, &self.config.slices, self.config.unset_slice),
            messages_sent: self.messages,
            unsuccessful_swaps: self.unsuccessful,
            live_nodes: self.nodes.len(),
        }
    }

    /// Slice disorder left if the current random values were perfectly sorted.
    pub fn ordering_floor(&self) -> Option<f64> {
        sorted_assignment_sdm(&self.observed(), &self.config.slices)
    }

    /// Runs one cycle and returns its metrics.
    pub fn step(&mut self) -> Result<CycleMetrics, SimError> {
        self.cycle += 1;
        self.messages = 0;
        self.unsuccessful = 0;
        if self.config.churn.fires(self.cycle) {
            self.churn()?;
        }
        let pre_cycle: Vec<Option<f64>> = match self.config.concurrency {
            Concurrency::None => Vec::new(),
            _ => self.advertised_by_id(),
        };
        let mut order: Vec<NodeId> = self.node_ids().collect();
        order.shuffle(&mut self.rng);
        let mut deferred = Vec::new();
        for id in order {
            let pos = self.pos(id).expect("ordered ids are live");
            if !self.is_active(id) {
                continue;
            }
            self.refresh_view(pos);
            let overlapping = self.overlaps();
            if overlapping {
                self.sync_view_values(pos, |_, id| pre_cycle.get(id.0 as usize).copied().flatten());
            } else {
                self.sync_view_values(pos, |sim, id| {
                    sim.pos(id).and_then(|p| sim.nodes[p].advertised())
                });
            }
            for msg in self.protocol_step(pos) {
                self.messages += 1;
                if overlapping {
                    deferred.push(msg);
                } else {
                    self.deliver(msg);
                }
            }
        }
        deferred.shuffle(&mut self.rng);
        for msg in deferred {
            self.deliver(msg);
        }
        Ok(self.measure())
    }

    fn is_active(&self, id: NodeId) -> bool {
        self.config.period == 1 || (self.cycle + id.0).is_multiple_of(self.config.period)
    }

    fn push_node(&mut self, attr: f64, mut rng: SimRng) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let state = match self.config.protocol {
            Protocol::Jk | Protocol::ModJk => {
                ProtocolState::Ordering(OrderingState::new(unit_interval(&mut rng)))
            }
            Protocol::Ranking => ProtocolState::Ranking(RankingState::new()),
            Protocol::RankingWindow(bits) => ProtocolState::Ranking(RankingState::windowed(bits)),
        };
        self.index.push(self.nodes.len());
        self.nodes.push(Node {
            id,
            attr,
            view: View::new(self.config.c),
            state,
            rng,
        });
        id
    }

    /// Fills the view of the node at `pos` with `c` uniformly chosen live nodes.
    fn bootstrap(&mut self, pos: usize) {
        let c = self.config.c;
        let picks = uniform_sample(self.nodes.len(), pos, c, &mut self.nodes[pos].rng);
        let owner = self.nodes[pos].id;
        let entries: Vec<ViewEntry> = picks.into_iter().map(|p| self.nodes[p].entry()).collect();
        self.nodes[pos].view = View::from_entries(owner, c, entries);
    }

    fn refresh_view(&mut self, pos: usize) {
        match self.config.sampling {
            SamplingMode::Uniform => self.bootstrap(pos),
            SamplingMode::Cyclon => {
                let own = self.nodes[pos].entry();
                let node = &mut self.nodes[pos];
                let Some(request) = prepare_exchange(&mut node.view, own, &mut node.rng) else {
                    return;
                };
                self.messages += 1;
                match self.pos(request.partner) {
                    None => abort_exchange(&mut self.nodes[pos].view, request.partner),
                    Some(p) => {
                        let partner = &mut self.nodes[p];
                        let reply = answer_exchange(
                            &mut partner.view,
                            partner.id,
                            own.id,
                            &request.entries,
                            &mut partner.rng,
                        );
                        self.messages += 1;
                        let node = &mut self.nodes[pos];
                        complete_exchange(&mut node.view, own.id, &reply, &mut node.rng);
                    }
                }
            }
        }
    }

    /// Advertised values of live nodes, indexed by id.
    fn advertised_by_id(&self) -> Vec<Option<f64>> {
        let mut values = vec![None; self.index.len()];
        for n in &self.nodes {
            values[n.id.0 as usize] = n.advertised();
        }
        values
    }

    /// Overwrites the values in a node's view with what `source` reports for
    /// live neighbours. Entries of departed nodes keep their last value.
    fn sync_view_values(&mut self, pos: usize, source: impl Fn(&Self, NodeId) -> Option<f64>) {
        let updates: Vec<(NodeId, Option<f64>)> = self.nodes[pos]
            .view
            .ids()
            .filter(|&id| self.pos(id).is_some())
            .map(|id| (id, source(self, id)))
            .collect();
        let view = &mut self.nodes[pos].view;
        for (id, value) in updates {
            view.set_value(id, value);
        }
    }

    fn overlaps(&mut self) -> bool {
        match self.config.concurrency {
            Concurrency::None => false,
            Concurrency::Full => true,
            Concurrency::Half => self.rng.random_bool(0.5),
        }
    }

    /// The active step of the node at `pos`; returns the messages it sends.
    fn protocol_step(&mut self, pos: usize) -> Vec<Message> {
        let spec = &self.config.slices;
        let node = &mut self.nodes[pos];
        match &mut node.state {
            ProtocolState::Ordering(state) => {
                let variant = match self.config.protocol {
                    Protocol::ModJk => OrderingVariant::ModJk,
                    _ => OrderingVariant::Jk,
                };
                let own = LocalNode {
                    id: node.id,
                    attr: node.attr,
                    rvalue: state.rvalue,
                };
                let Some(to) = select_partner(variant, own, &node.view, &mut node.rng) else {
                    return Vec::new();
                };
                let partner = *node.view.get(to).expect("partner comes from the view");
                let expected = partner
                    .value
                    .is_some_and(|r| is_misplaced(own.attr, own.rvalue, partner.attr, r));
                vec![Message::SwapRequest {
                    from: own.id,
                    to,
                    partner_attr: partner.attr,
                    expected,
                }]
            }
            ProtocolState::Ranking(state) => {
                let Some(targets) = active_step(state, node.attr, &node.view, spec, &mut node.rng)
                else {
                    return Vec::new();
                };
                let (from, attr) = (node.id, node.attr);
                [targets.boundary, targets.random]
                    .map(|to| Message::Update { from, to, attr })
                    .to_vec()
            }
        }
    }

    /// Sender-side handling of a message to a departed node.
    fn undeliverable(&mut self, from: NodeId, to: NodeId) {
        if let Some(p) = self.pos(from) {
            self.nodes[p].view.remove(to);
        }
    }

    fn deliver(&mut self, msg: Message) {
        let spec = &self.config.slices;
        match msg {
            Message::SwapRequest {
                from,
                to,
                partner_attr,
                expected,
            } => {
                let Some(p) = self.pos(to) else {
                    self.unsuccessful += 1;
                    self.undeliverable(from, to);
                    return;
                };
                let s = self.pos(from).expect("senders stay live within a cycle");
                let (attr, rvalue) = match &self.nodes[s].state {
                    ProtocolState::Ordering(st) => (self.nodes[s].attr, st.rvalue),
                    ProtocolState::Ranking(_) => unreachable!("one protocol per population"),
                };
                let responder = &mut self.nodes[p];
                let ProtocolState::Ordering(state) = &mut responder.state else {
                    unreachable!("one protocol per population");
                };
                let ack = handle_request(state, responder.attr, attr, rvalue, spec);
                if expected && !ack.adopted {
                    self.unsuccessful += 1;
                }
                self.messages += 1;
                let initiator = &mut self.nodes[s];
                let ProtocolState::Ordering(state) = &mut initiator.state else {
                    unreachable!("one protocol per population");
                };
                handle_ack(state, initiator.attr, partner_attr, ack.rvalue, spec);
            }
            Message::Update { from, to, attr } => {
                let Some(p) = self.pos(to) else {
                    self.undeliverable(from, to);
                    return;
                };
                let receiver = &mut self.nodes[p];
                let ProtocolState::Ranking(state) = &mut receiver.state else {
                    unreachable!("one protocol per population");
                };
                receive(state, receiver.attr, attr, spec);
            }
        }
    }

    fn reindex(&mut self) {
        self.index.fill(GONE);
        for (p, n) in self.nodes.iter().enumerate() {
            self.index[n.id.0 as usize] = p;
        }
    }

    fn pos(&self, id: NodeId) -> Option<usize> {
        match self.index.get(id.0 as usize) {
            Some(&p) if p != GONE => Some(p),
            _ => None,
        }
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: SimConfig,
    pub metrics: Vec<CycleMetrics>,
    pub initial: Vec<NodeSnapshot>,
    pub final_state: Vec<NodeSnapshot>,
    /// Slice disorder of the initial random values perfectly sorted; `None`
    /// for ranking protocols.
    pub ordering_floor: Option<f64>,
}

impl RunOutput {
    pub fn final_sdm(&self) -> f64 {
        self.metrics.last().map_or(f64::NAN, |m| m.sdm)
    }

    /// First cycle whose slice disorder is at or below `threshold`.
    pub fn cycles_to(&self, threshold: f64) -> Option<u64> {
        self.metrics
            .iter()
            .find(|m| m.sdm <= threshold)
            .map(|m| m.cycle)
    }
}

pub fn run(config: SimConfig) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(config)?;
    let initial = sim.snapshot();
    let ordering_floor = sim.ordering_floor();
    let mut metrics = Vec::with_capacity(sim.config.cycles as usize);
    for _ in 0..sim.config.cycles {
        metrics.push(sim.step()?);
    }
    Ok(RunOutput {
        final_state: sim.snapshot(),
        config: sim.config,
        metrics,
        initial,
        ordering_floor,
    })
}
