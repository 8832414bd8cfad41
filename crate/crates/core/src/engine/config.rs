use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};

use crate::metrics::UnsetSlice;
use crate::model::SliceSpec;
use crate::ranking::DEFAULT_WINDOW_BITS;
use crate::sampling::SamplingMode;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Jk,
    ModJk,
    Ranking,
    /// Ranking over the last `bits` observations.
    RankingWindow(usize),
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Jk => "jk",
            Protocol::ModJk => "mod-jk",
            Protocol::Ranking => "ranking",
            Protocol::RankingWindow(_) => "ranking-window",
        }
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, Protocol::Jk | Protocol::ModJk)
    }

    pub fn parse(name: &str, window: Option<usize>) -> Option<Self> {
        Some(match name {
            "jk" => Protocol::Jk,
            "mod-jk" | "modjk" => Protocol::ModJk,
            "ranking" => Protocol::Ranking,
            "ranking-window" => Protocol::RankingWindow(window.unwrap_or(DEFAULT_WINDOW_BITS)),
            _ => return None,
        })
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which messages overlap with others in the same cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    /// Every exchange completes before the next node acts.
    None,
    /// Each message overlaps with probability 1/2.
    Half,
    /// Every message overlaps.
    Full,
}

impl Concurrency {
    pub fn name(self) -> &'static str {
        match self {
            Concurrency::None => "none",
            Concurrency::Half => "half",
            Concurrency::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlation {
    /// Lowest attributes leave; joiners exceed every live attribute.
    Attribute,
    /// Random nodes leave; joiners draw from the attribute distribution.
    Uniform,
}

impl Correlation {
    pub fn name(self) -> &'static str {
        match self {
            Correlation::Attribute => "attribute",
            Correlation::Uniform => "uniform",
        }
    }
}

/// Churn events fire at cycles `first, first + period, ...` up to `last`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnSchedule {
    pub leave_rate: f64,
    pub join_rate: f64,
    pub period: u64,
    pub first: u64,
    pub last: Option<u64>,
    pub correlation: Correlation,
}

impl ChurnSchedule {
    pub fn none() -> Self {
        Self {
            leave_rate: 0.0,
            join_rate: 0.0,
            period: 1,
            first: 1,
            last: None,
            correlation: Correlation::Attribute,
        }
    }

    /// `rate` of the nodes leave and join every `period` cycles from cycle 1
    /// through `last`.
    pub fn correlated(rate: f64, period: u64, last: Option<u64>) -> Self {
        Self {
            leave_rate: rate,
            join_rate: rate,
            period,
            first: 1,
            last,
            correlation: Correlation::Attribute,
        }
    }

    pub fn is_active(&self) -> bool {
        self.leave_rate > 0.0 || self.join_rate > 0.0
    }

    pub fn fires(&self, cycle: u64) -> bool {
        self.is_active()
            && cycle >= self.first
            && self.last.is_none_or(|last| cycle <= last)
            && (cycle - self.first).is_multiple_of(self.period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttrDist {
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    Pareto { scale: f64, shape: f64 },
}

impl Default for AttrDist {
    fn default() -> Self {
        AttrDist::Uniform {
            low: 0.0,
            high: 1.0,
        }
    }
}

impl AttrDist {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            AttrDist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            AttrDist::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            AttrDist::Pareto { scale, shape } => Pareto::new(scale, shape)
                .expect("validated parameters")
                .sample(rng),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            AttrDist::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            AttrDist::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            AttrDist::Pareto { scale, shape } => scale > 0.0 && shape > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid attribute distribution {self}"))
        }
    }
}

impl fmt::Display for AttrDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrDist::Uniform { low, high } => write!(f, "uniform:{low}:{high}"),
            AttrDist::Exponential { rate } => write!(f, "exponential:{rate}"),
            AttrDist::Pareto { scale, shape } => write!(f, "pareto:{scale}:{shape}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// View size.
    pub c: usize,
    pub slices: SliceSpec,
    pub protocol: Protocol,
    pub sampling: SamplingMode,
    pub cycles: u64,
    pub concurrency: Concurrency,
    pub churn: ChurnSchedule,
    pub attr_dist: AttrDist,
    pub seed: u64,
    /// Cycles between two activations of a node.
    pub period: u64,
    pub unset_slice: UnsetSlice,
}

impl SimConfig {
    /// Static network, Cyclon sampling, no overlap, uniform attributes.
    pub fn new(
        protocol: Protocol,
        n: usize,
        c: usize,
        slices: usize,
        cycles: u64,
        seed: u64,
    ) -> Self {
        Self {
            n,
            c,
            slices: SliceSpec::equal(slices.max(1)).expect("at least one slice"),
            protocol,
            sampling: SamplingMode::Cyclon,
            cycles,
            concurrency: Concurrency::None,
            churn: ChurnSchedule::none(),
            attr_dist: AttrDist::default(),
            seed,
            period: 1,
            unset_slice: UnsetSlice::FirstSlice,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.c < 1 {
            return invalid("view size c must be at least 1".into());
        }
        if self.n <= self.c {
            return invalid(format!(
                "n = {} must exceed the view size c = {}",
                self.n, self.c
            ));
        }
        if self.cycles < 1 {
            return invalid("cycles must be at least 1".into());
        }
        if self.period < 1 {
            return invalid("period must be at least 1".into());
        }
        if let Protocol::RankingWindow(0) = self.protocol {
            return invalid("window capacity must be positive".into());
        }
        let rates = [self.churn.leave_rate, self.churn.join_rate];
        if rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return invalid("churn rates must lie in [0, 1)".into());
        }
        if self.churn.period < 1 || self.churn.first < 1 {
            return invalid("churn period and first cycle must be at least 1".into());
        }
        self.attr_dist.validate().map_err(SimError::InvalidConfig)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_windows() {
        let burst = ChurnSchedule::correlated(0.001, 1, Some(200));
        assert!(burst.fires(1) && burst.fires(200));
        assert!(!burst.fires(201));
        let regular = ChurnSchedule::correlated(0.001, 10, None);
        assert!(regular.fires(1) && regular.fires(11) && regular.fires(991));
        assert!(!regular.fires(10));
        assert!(!ChurnSchedule::none().fires(1));
    }

    #[test]
    fn validation() {
        let ok = SimConfig::new(Protocol::Jk, 10, 3, 2, 5, 0);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.n = 3;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.cycles = 0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.churn.leave_rate = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.attr_dist = AttrDist::Exponential { rate: -1.0 };
        assert!(bad.validate().is_err());
    }
}
