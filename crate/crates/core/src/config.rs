//! Flat `key = value` experiment files. Lines starting with `#` and blank
//! lines are ignored; a `#` after a value starts a trailing comment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{
    AttrDist, ChurnSchedule, Concurrency, Correlation, Protocol, SimConfig, SimError,
};
use crate::metrics::UnsetSlice;
use crate::model::SliceSpec;
use crate::sampling::SamplingMode;

pub const KEYS: &[&str] = &[
    "protocol",
    "n",
    "c",
    "slices",
    "cycles",
    "concurrency",
    "sampling",
    "seed",
    "window",
    "churn_leave",
    "churn_join",
    "churn_period",
    "churn_first",
    "churn_last",
    "churn_correlation",
    "attr_dist",
    "period",
    "sdm_threshold",
    "unset_slice",
];

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(l) => write!(f, "line {l}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { key: String, at: Origin },
    #[error("{at}: key `{key}` is set twice")]
    Duplicate { key: String, at: Origin },
    #[error("{at}: invalid value `{value}` for `{key}`: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
        at: Origin,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, Origin)>,
}

/// A validated experiment: simulation parameters plus reporting options.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub sim: SimConfig,
    pub sdm_threshold: Option<f64>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            }
            let at = Origin::Line(line);
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    at,
                });
            }
            if map.entries.contains_key(key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_string(),
                    at,
                });
            }
            map.entries.insert(key.to_string(), (value.to_string(), at));
        }
        Ok(map)
    }

    /// Sets a key from the command line, overriding any file value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                at: Origin::Flag,
            });
        }
        self.entries
            .insert(key.to_string(), (value.into(), Origin::Flag));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        let (value, at) = self.entries[key].clone();
        ConfigError::Invalid {
            key: key.to_string(),
            value,
            reason: reason.into(),
            at,
        }
    }

    fn number<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| self.invalid(key, e.to_string())))
            .transpose()
    }

    /// Builds the experiment, filling unset keys with defaults: 1000 nodes,
    /// view size 20, 10 slices, 100 cycles, Cyclon sampling, no overlap, no
    /// churn, uniform attributes, seed 0.
    pub fn build(&self) -> Result<RunSettings, ConfigError> {
        let window = self.number::<usize>("window")?;
        let protocol = match self.get("protocol") {
            None => Protocol::ModJk,
            Some(name) => Protocol::parse(name, window).ok_or_else(|| {
                self.invalid("protocol", "expected jk, mod-jk, ranking or ranking-window")
            })?,
        };
        let slices = self.number::<usize>("slices")?.unwrap_or(10);
        let mut sim = SimConfig::new(
            protocol,
            self.number("n")?.unwrap_or(1000),
            self.number("c")?.unwrap_or(20),
            1,
            self.number("cycles")?.unwrap_or(100),
            self.number("seed")?.unwrap_or(0),
        );
        sim.slices = SliceSpec::equal(slices).map_err(|e| self.invalid("slices", e.to_string()))?;
        if let Some(v) = self.get("concurrency") {
            sim.concurrency = match v {
                "none" => Concurrency::None,
                "half" => Concurrency::Half,
                "full" => Concurrency::Full,
                _ => return Err(self.invalid("concurrency", "expected none, half or full")),
            };
        }
        if let Some(v) = self.get("sampling") {
            sim.sampling = match v {
                "cyclon" => SamplingMode::Cyclon,
                "uniform" => SamplingMode::Uniform,
                _ => return Err(self.invalid("sampling", "expected cyclon or uniform")),
            };
        }
        if let Some(v) = self.get("unset_slice") {
            sim.unset_slice = match v {
                "first" => UnsetSlice::FirstSlice,
                "exclude" => UnsetSlice::Exclude,
                _ => return Err(self.invalid("unset_slice", "expected first or exclude")),
            };
        }
        if let Some(v) = self.get("attr_dist") {
            sim.attr_dist = parse_attr_dist(v).ok_or_else(|| {
                self.invalid(
                    "attr_dist",
                    "expected uniform[:low:high], exponential:rate or pareto:scale:shape",
                )
            })?;
        }
        sim.period = self.number("period")?.unwrap_or(1);
        sim.churn = self.churn()?;
        let sdm_threshold = self.number("sdm_threshold")?;
        sim.validate()?;
        Ok(RunSettings { sim, sdm_threshold })
    }

    fn churn(&self) -> Result<ChurnSchedule, ConfigError> {
        let mut churn = ChurnSchedule::none();
        churn.leave_rate = self.number("churn_leave")?.unwrap_or(0.0);
        churn.join_rate = self.number("churn_join")?.unwrap_or(0.0);
        churn.period = self.number("churn_period")?.unwrap_or(1);
        churn.first = self.number("churn_first")?.unwrap_or(1);
        churn.last = match self.get("churn_last") {
            None | Some("none") => None,
            Some(_) => self.number("churn_last")?,
        };
        if let Some(v) = self.get("churn_correlation") {
            churn.correlation = match v {
                "attribute" => Correlation::Attribute,
                "uniform" => Correlation::Uniform,
                _ => return Err(self.invalid("churn_correlation", "expected attribute or uniform")),
            };
        }
        Ok(churn)
    }
}

fn parse_attr_dist(text: &str) -> Option<AttrDist> {
    let mut parts = text.split(':');
    let kind = parts.next()?;
    let params: Vec<f64> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
    match (kind, params.as_slice()) {
        ("uniform", []) => Some(AttrDist::default()),
        ("uniform", &[low, high]) => Some(AttrDist::Uniform { low, high }),
        ("exponential", &[rate]) => Some(AttrDist::Exponential { rate }),
        ("pareto", &[scale, shape]) => Some(AttrDist::Pareto { scale, shape }),
        _ => None,
    }
}

/// Renders a configuration back into the file format.
pub fn echo(settings: &RunSettings) -> String {
    let sim = &settings.sim;
    let mut out = String::new();
    let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    put("protocol", sim.protocol.name().to_string());
    if let Protocol::RankingWindow(bits) = sim.protocol {
        put("window", bits.to_string());
    }
    put("n", sim.n.to_string());
    put("c", sim.c.to_string());
    put("slices", sim.slices.len().to_string());
    put("cycles", sim.cycles.to_string());
    put("concurrency", sim.concurrency.name().to_string());
    put("sampling", sim.sampling.name().to_string());
    put("seed", sim.seed.to_string());
    put("churn_leave", sim.churn.leave_rate.to_string());
    put("churn_join", sim.churn.join_rate.to_string());
    put("churn_period", sim.churn.period.to_string());
    put("churn_first", sim.churn.first.to_string());
    put(
        "churn_last",
        sim.churn.last.map_or("none".to_string(), |l| l.to_string()),
    );
    put(
        "churn_correlation",
        sim.churn.correlation.name().to_string(),
    );
    put("attr_dist", sim.attr_dist.to_string());
    put("period", sim.period.to_string());
    put("unset_slice", sim.unset_slice.name().to_string());
    if let Some(t) = settings.sdm_threshold {
        put("sdm_threshold", t.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_defaults() {
        let text = "# experiment\nprotocol = ranking # trailing\n\nn = 200\nc=10\n";
        let settings = ConfigMap::parse(text).unwrap().build().unwrap();
        assert_eq!(settings.sim.protocol, Protocol::Ranking);
        assert_eq!(settings.sim.n, 200);
        assert_eq!(settings.sim.c, 10);
        assert_eq!(settings.sim.slices.len(), 10);
        assert_eq!(settings.sdm_threshold, None);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = ConfigMap::parse("n = 10\nbogus line\n").unwrap_err();
        assert_eq!(
            err.to_string(),
            "line 2: expected `key = value`, found `bogus line`"
        );
        let err = ConfigMap::parse("n = 10\n\nfoo = 1\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: unknown key `foo`");
        let err = ConfigMap::parse("c = 4\nn = ten\n")
            .unwrap()
            .build()
            .unwrap_err();
        assert!(err
            .to_string()
            .starts_with("line 2: invalid value `ten` for `n`"));
        let err = ConfigMap::parse("n = 1\nn = 2\n").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::Duplicate {
                at: Origin::Line(2),
                ..
            }
        ));
    }

    #[test]
    fn flags_override_file() {
        let mut map = ConfigMap::parse("n = 100\nc = 5\n").unwrap();
        map.set("n", "300").unwrap();
        assert_eq!(map.build().unwrap().sim.n, 300);
        assert!(map.set("nope", "1").is_err());
    }

    #[test]
    fn semantic_errors_surface() {
        let err = ConfigMap::parse("n = 5\nc = 5\n")
            .unwrap()
            .build()
            .unwrap_err();
        assert!(matches!(err, ConfigError::Sim(SimError::InvalidConfig(_))));
    }

    #[test]
    fn echo_round_trips() {
        let text = "protocol = ranking-window\nwindow = 500\nn = 50\nc = 5\nslices = 4\n\
                    cycles = 7\nconcurrency = half\nsampling = uniform\nseed = 9\n\
                    churn_leave = 0.01\nchurn_join = 0.02\nchurn_period = 10\nchurn_last = 40\n\
                    churn_correlation = uniform\nattr_dist = pareto:1:2.5\nperiod = 2\n\
                    unset_slice = exclude\nsdm_threshold = 3.5\n";
        let settings = ConfigMap::parse(text).unwrap().build().unwrap();
        let again = ConfigMap::parse(&echo(&settings)).unwrap().build().unwrap();
        assert_eq!(settings, again);
    }
}
