use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use slicekit::analysis::{
    chernoff_tail_frequency, interval_coverage_frequency, perfect_split_probability,
    required_samples, slice_population_bound,
};
use slicekit::config::{ConfigError, ConfigMap, RunSettings};
use slicekit::report::{summary, write_csv};
use slicekit::rng::engine_rng;
use slicekit::{presets, run};

const USAGE: u8 = 2;
const RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "slicekit",
    version,
    about = "Distributed slicing simulator and bounds calculator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulations and write per-cycle CSV plus a summary per run.
    Run(RunArgs),
    /// Evaluate closed-form bounds.
    Bounds {
        #[command(subcommand)]
        which: Bounds,
    },
    /// List the available presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file in `key = value` format.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named desk-scale experiment; see `slicekit presets`.
    #[arg(long)]
    preset: Option<String>,
    /// Seed range `a..b` (exclusive) or `a..=b`; overrides `seed`.
    #[arg(long)]
    seeds: Option<String>,
    /// Runs executed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory [default: $SLICEKIT_OUT_DIR or ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    slices: Option<String>,
    #[arg(long)]
    cycles: Option<String>,
    #[arg(long)]
    concurrency: Option<String>,
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    churn_leave: Option<String>,
    #[arg(long)]
    churn_join: Option<String>,
    #[arg(long)]
    churn_period: Option<String>,
    #[arg(long)]
    churn_first: Option<String>,
    #[arg(long)]
    churn_last: Option<String>,
    #[arg(long)]
    churn_correlation: Option<String>,
    #[arg(long)]
    attr_dist: Option<String>,
    #[arg(long)]
    period: Option<String>,
    #[arg(long)]
    sdm_threshold: Option<String>,
    #[arg(long)]
    unset_slice: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let fields = [
            ("protocol", &self.protocol),
            ("n", &self.n),
            ("c", &self.c),
            ("slices", &self.slices),
            ("cycles", &self.cycles),
            ("concurrency", &self.concurrency),
            ("sampling", &self.sampling),
            ("seed", &self.seed),
            ("window", &self.window),
            ("churn_leave", &self.churn_leave),
            ("churn_join", &self.churn_join),
            ("churn_period", &self.churn_period),
            ("churn_first", &self.churn_first),
            ("churn_last", &self.churn_last),
            ("churn_correlation", &self.churn_correlation),
            ("attr_dist", &self.attr_dist),
            ("period", &self.period),
            ("sdm_threshold", &self.sdm_threshold),
            ("unset_slice", &self.unset_slice),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Subcommand)]
enum Bounds {
    /// Concentration of the number of nodes in a slice of length p.
    Lemma {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        mc: MonteCarlo,
    },
    /// Samples needed for a rank estimate to settle in its slice.
    Samples {
        #[arg(long)]
        p_hat: f64,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        mc: MonteCarlo,
    },
    /// Probability that n uniform values split evenly over two halves.
    Split {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        mc: MonteCarlo,
    },
}

#[derive(Args)]
struct MonteCarlo {
    /// Compare against a Monte-Carlo estimate.
    #[arg(long)]
    validate: bool,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: RUNTIME,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Bounds { which } => cmd_bounds(which),
        Command::Presets => {
            for (name, about) in presets::names() {
                println!("{name:<12} {about}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_seeds(text: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..=") {
        let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return Some((a..=b).collect());
    }
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return Some((a..b).collect());
    }
    text.trim().parse().ok().map(|s| vec![s])
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            ConfigMap::parse(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => ConfigMap::default(),
    };
    let runs: Vec<(String, ConfigMap)> = match &args.preset {
        Some(name) => presets::preset(name)
            .ok_or_else(|| Failure::usage(format!("unknown preset `{name}`")))?
            .into_iter()
            .map(|r| {
                let mut map = r.config;
                for &k in slicekit::config::KEYS {
                    if let Some(v) = base.get(k) {
                        map.set(k, v).expect("keys were checked when parsed");
                    }
                }
                (format!("{name}-{}", r.label), map)
            })
            .collect(),
        None => vec![(String::new(), base)],
    };
    let seeds = match &args.seeds {
        Some(text) => Some(
            parse_seeds(text)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Failure::usage(format!("invalid seed range `{text}`")))?,
        ),
        None => None,
    };
    let mut jobs: Vec<(String, RunSettings)> = Vec::new();
    for (label, mut map) in runs {
        for (k, v) in args.overrides() {
            map.set(k, v.as_str())?;
        }
        let settings = map.build()?;
        let label = if label.is_empty() {
            settings.sim.protocol.name().to_string()
        } else {
            label
        };
        match &seeds {
            None => jobs.push((label, settings)),
            Some(seeds) => {
                for &seed in seeds {
                    let mut s = settings.clone();
                    s.sim.seed = seed;
                    jobs.push((label.clone(), s));
                }
            }
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os("SLICEKIT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let results: Vec<Result<String, Failure>> = pool.install(|| {
        jobs.par_iter()
            .map(|(label, s)| execute(&out, label, s))
            .collect()
    });
    for r in results {
        println!("{}", r?);
    }
    Ok(())
}

fn execute(out: &Path, label: &str, settings: &RunSettings) -> Result<String, Failure> {
    let output = run(settings.sim.clone()).map_err(|e| Failure::runtime(e.to_string()))?;
    let stem = format!("{label}-seed{}", settings.sim.seed);
    let csv_path = out.join(format!("{stem}.csv"));
    let write_err = |p: &Path, e: std::io::Error| Failure::runtime(format!("{}: {e}", p.display()));
    let mut file = fs::File::create(&csv_path).map_err(|e| write_err(&csv_path, e))?;
    write_csv(&mut file, settings.sim.protocol, &output.metrics)
        .map_err(|e| write_err(&csv_path, e))?;
    let summary_path = out.join(format!("{stem}.summary.txt"));
    fs::write(&summary_path, summary(settings, &output))
        .map_err(|e| write_err(&summary_path, e))?;
    Ok(format!(
        "{stem}: final sdm {} -> {}",
        output.final_sdm(),
        csv_path.display()
    ))
}

fn cmd_bounds(which: Bounds) -> Result<(), Failure> {
    let err = |e: slicekit::analysis::BoundError| Failure::usage(e.to_string());
    match which {
        Bounds::Lemma { n, p, beta, mc } => {
            let b = slice_population_bound(p, beta, n).map_err(err)?;
            println!("n        {n}");
            println!("p        {p}");
            println!("beta     {beta}");
            println!("epsilon  {:.6e}", b.epsilon);
            println!("interval [{}, {}]", b.lower, b.upper);
            if mc.validate {
                let freq = chernoff_tail_frequency(n, p, beta, mc.trials, &mut engine_rng(mc.seed))
                    .map_err(err)?;
                println!("observed {:.6e} over {} trials", freq.outside, mc.trials);
                println!("holds    {}", freq.outside <= b.epsilon);
            }
        }
        Bounds::Samples {
            p_hat,
            d,
            alpha,
            mc,
        } => {
            let s = required_samples(p_hat, d, alpha).map_err(err)?;
            println!("p_hat    {p_hat}");
            println!("d        {d}");
            println!("alpha    {alpha}");
            println!("z        {}", s.z);
            println!("k        {}", s.samples);
            if s.below_normal_regime {
                println!("note     k <= 30: the normal approximation is unreliable");
            }
            if mc.validate {
                let cover = interval_coverage_frequency(
                    p_hat,
                    d,
                    s.samples,
                    mc.trials,
                    &mut engine_rng(mc.seed),
                )
                .map_err(err)?;
                println!(
                    "coverage {cover:.4} over {} trials (target {})",
                    mc.trials,
                    1.0 - alpha
                );
            }
        }
        Bounds::Split { n, mc } => {
            let s = perfect_split_probability(n).map_err(err)?;
            println!("n        {n}");
            println!("exact    {:.4}", s.exact);
            println!("bound    {:.4}", s.bound);
            if mc.validate {
                let mut rng = engine_rng(mc.seed);
                let hits = (0..mc.trials)
                    .filter(|_| {
                        let low = (0..n)
                            .filter(|_| rand::Rng::random_bool(&mut rng, 0.5))
                            .count();
                        2 * low as u64 == n
                    })
                    .count();
                println!(
                    "observed {:.4} over {} trials",
                    hits as f64 / mc.trials as f64,
                    mc.trials
                );
            }
        }
    }
    Ok(())
}
