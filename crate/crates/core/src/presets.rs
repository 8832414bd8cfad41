//! Named experiments at desk scale. Every preset runs 1000 nodes where the
//! reference experiments use 10 000 (scaling factor 10 on n); view size,
//! slice count and churn rates are kept, and the sliding window shrinks with
//! n from 10 000 to 1000 observations. The ordering experiments use Cyclon
//! views of 20 entries; the ranking experiments draw 10 uniform neighbours
//! per cycle unless a run says otherwise.

use crate::config::{ConfigError, ConfigMap};

/// One run of a preset, labelled for output file names.
#[derive(Debug, Clone)]
pub struct PresetRun {
    pub label: &'static str,
    pub config: ConfigMap,
}

const BASE: &str = "n = 1000\nslices = 100\nseed = 1\n";
const ORDERING: &str = "c = 20\nsampling = cyclon\n";
const RANKING: &str = "c = 10\nsampling = uniform\n";

const PRESETS: &[(&str, &str, &[(&str, &str)])] = &[
    (
        "fig4a-desk",
        "mod-JK global versus slice disorder, 300 cycles",
        &[("mod-jk", "protocol = mod-jk\ncycles = 300\n")],
    ),
    (
        "fig4b-desk",
        "JK versus mod-JK from the same initial values, 300 cycles",
        &[
            ("jk", "protocol = jk\ncycles = 300\n"),
            ("mod-jk", "protocol = mod-jk\ncycles = 300\n"),
        ],
    ),
    (
        "fig4d-desk",
        "mod-JK without, with half and with full message overlap, 300 cycles",
        &[
            (
                "none",
                "protocol = mod-jk\ncycles = 300\nconcurrency = none\n",
            ),
            (
                "half",
                "protocol = mod-jk\ncycles = 300\nconcurrency = half\n",
            ),
            (
                "full",
                "protocol = mod-jk\ncycles = 300\nconcurrency = full\n",
            ),
        ],
    ),
    (
        "fig5a-desk",
        "ordering versus ranking in a static network, 2000 cycles",
        &[
            ("ordering", "protocol = mod-jk\ncycles = 2000\n"),
            ("ranking", "protocol = ranking\ncycles = 2000\n"),
        ],
    ),
    (
        "fig5b-desk",
        "ranking over uniform sampling versus Cyclon views of 10, 1000 cycles",
        &[
            ("uniform", "protocol = ranking\ncycles = 1000\n"),
            (
                "views",
                "protocol = ranking\ncycles = 1000\nsampling = cyclon\n",
            ),
        ],
    ),
    (
        "fig5c-desk",
        "0.1% correlated churn per cycle during the first 200 cycles, 2000 cycles",
        &[
            ("ordering", "protocol = mod-jk\ncycles = 2000\n"),
            ("ranking", "protocol = ranking\ncycles = 2000\n"),
        ],
    ),
    (
        "fig5d-desk",
        "0.1% correlated churn every 10 cycles, 1000 cycles",
        &[
            ("ordering", "protocol = mod-jk\ncycles = 1000\n"),
            ("ranking", "protocol = ranking\ncycles = 1000\n"),
            (
                "ranking-window",
                "protocol = ranking-window\nwindow = 1000\ncycles = 1000\n",
            ),
        ],
    ),
];

const CHURN_BURST: &str =
    "churn_leave = 0.001\nchurn_join = 0.001\nchurn_period = 1\nchurn_last = 200\n";
const CHURN_REGULAR: &str = "churn_leave = 0.001\nchurn_join = 0.001\nchurn_period = 10\n";

pub fn names() -> impl Iterator<Item = (&'static str, &'static str)> {
    PRESETS.iter().map(|(name, about, _)| (*name, *about))
}

/// The runs of preset `name`, or `None` if no such preset exists.
pub fn preset(name: &str) -> Option<Vec<PresetRun>> {
    let (_, _, runs) = PRESETS.iter().find(|(n, _, _)| *n == name)?;
    let churn = match name {
        "fig5c-desk" => CHURN_BURST,
        "fig5d-desk" => CHURN_REGULAR,
        _ => "",
    };
    let setup = if name.starts_with("fig4") {
        ORDERING
    } else {
        RANKING
    };
    Some(
        runs.iter()
            .map(|(label, body)| {
                // a run that sets a key itself keeps its own value
                let key = |l: &str| l.split('=').next().unwrap_or(l).trim().to_string();
                let own: Vec<String> = body.lines().map(key).collect();
                let setup: String = setup
                    .lines()
                    .filter(|l| !own.contains(&key(l)))
                    .map(|l| format!("{l}\n"))
                    .collect();
                PresetRun {
                    label,
                    config: ConfigMap::parse(&format!("{BASE}{setup}{churn}{body}"))
                        .expect("presets are well formed"),
                }
            })
            .collect(),
    )
}

/// Builds every run of a preset, checking the result.
pub fn validate(name: &str) -> Result<(), ConfigError> {
    for run in preset(name).unwrap_or_default() {
        run.config.build()?;
    }
    Ok(())
}
