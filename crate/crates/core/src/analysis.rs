//! Closed-form bounds on slice accuracy and their Monte-Carlo validators.
//!
//! * how far the number of uniform random values falling into a slice can
//!   stray from its mean (a Chernoff tail bound);
//! * the probability that `n` uniform values split exactly in half;
//! * the number of samples a ranking node needs before its Wald interval
//!   fits inside one slice ([`required_samples`], defined in `ranking`).

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::model::SliceSpec;

pub use crate::ranking::{required_samples, SampleSize};

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("estimate lies on a slice boundary: no finite sample count suffices")]
    OnBoundary,
}

fn check(name: &'static str, value: f64, ok: bool, domain: &'static str) -> Result<(), BoundError> {
    if ok {
        Ok(())
    } else {
        Err(BoundError::Domain {
            name,
            value,
            domain,
        })
    }
}

// Wichura, algorithm AS 241 (PPND16): rational approximations in three
// regions, relative accuracy about 1e-16.
#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_854_561,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Inverse of the standard normal CDF, `p` in `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Two-sided critical value `Z_{alpha/2} = Phi^-1(1 - alpha/2)`.
pub fn z_critical(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

/// Chernoff bound on how many of `n` uniform values land in a slice of
/// length `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationBound {
    /// Upper bound on `Pr[|X - np| >= beta * np]`.
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn slice_population_bound(p: f64, beta: f64, n: u64) -> Result<PopulationBound, BoundError> {
    check("p", p, p > 0.0 && p <= 1.0, "(0, 1]")?;
    check("beta", beta, beta > 0.0 && beta <= 1.0, "(0, 1]")?;
    check("n", n as f64, n >= 1, "n >= 1")?;
    let mean = n as f64 * p;
    Ok(PopulationBound {
        epsilon: 2.0 * (-beta * beta * mean / 3.0).exp(),
        lower: (1.0 - beta) * mean,
        upper: (1.0 + beta) * mean,
    })
}

/// Smallest slice length for which the bound above is at most `epsilon`.
pub fn min_slice_length(epsilon: f64, beta: f64, n: u64) -> Result<f64, BoundError> {
    check("epsilon", epsilon, epsilon > 0.0 && epsilon < 2.0, "(0, 2)")?;
    check("beta", beta, beta > 0.0 && beta <= 1.0, "(0, 1]")?;
    check("n", n as f64, n >= 1, "n >= 1")?;
    Ok(3.0 / (beta * beta * n as f64) * (2.0 / epsilon).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitProbability {
    /// `C(n, n/2) / 2^n`; 0 for odd `n`.
    pub exact: f64,
    /// `sqrt(2 / (n pi))`.
    pub bound: f64,
}

/// Probability that `n` uniform values fall exactly half below 1/2.
pub fn perfect_split_probability(n: u64) -> Result<SplitProbability, BoundError> {
    check("n", n as f64, n >= 1, "n >= 1")?;
    let bound = (2.0 / (n as f64 * std::f64::consts::PI)).sqrt();
    if n % 2 == 1 {
        return Ok(SplitProbability { exact: 0.0, bound });
    }
    let half = n / 2;
    // ln C(n, n/2) = sum_{k=1}^{n/2} ln((n/2 + k) / k)
    let log_binom: f64 = (1..=half)
        .map(|k| ((half + k) as f64 / k as f64).ln())
        .sum();
    let exact = (log_binom - n as f64 * std::f64::consts::LN_2).exp();
    Ok(SplitProbability { exact, bound })
}

/// Empirical tail frequencies of `X ~ Binomial(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFrequency {
    /// `X` outside the closed interval `[(1-beta)np, (1+beta)np]`.
    pub outside: f64,
    /// `|X - np| >= beta * np`.
    pub at_least: f64,
}

pub fn chernoff_tail_frequency(
    n: u64,
    p: f64,
    beta: f64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<TailFrequency, BoundError> {
    let bound = slice_population_bound(p, beta, n)?;
    let dist = Binomial::new(n, p).map_err(|_| BoundError::Domain {
        name: "p",
        value: p,
        domain: "[0, 1]",
    })?;
    let mean = n as f64 * p;
    let (mut outside, mut at_least) = (0u64, 0u64);
    for _ in 0..trials {
        let x = dist.sample(rng) as f64;
        if x < bound.lower || x > bound.upper {
            outside += 1;
        }
        if (x - mean).abs() >= beta * mean {
            at_least += 1;
        }
    }
    Ok(TailFrequency {
        outside: outside as f64 / trials as f64,
        at_least: at_least as f64 / trials as f64,
    })
}

/// Fraction of trials in which the proportion of "lower or equal" outcomes
/// among `samples` comparisons lies within `d` of the true rank `p`.
pub fn interval_coverage_frequency(
    p: f64,
    d: f64,
    samples: u64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<f64, BoundError> {
    check("p", p, (0.0..=1.0).contains(&p), "[0, 1]")?;
    check("samples", samples as f64, samples >= 1, "samples >= 1")?;
    let dist = Binomial::new(samples, p).map_err(|_| BoundError::Domain {
        name: "p",
        value: p,
        domain: "[0, 1]",
    })?;
    let hits = (0..trials)
        .filter(|_| (dist.sample(rng) as f64 / samples as f64 - p).abs() <= d)
        .count();
    Ok(hits as f64 / trials as f64)
}

/// Fraction of trials in which a node of true normalized rank `p` that sees
/// `samples` independent comparisons (each "lower or equal" with probability
/// `p`) lands its estimate in the same slice as `p`.
pub fn slice_coverage_frequency(
    p: f64,
    samples: u64,
    spec: &SliceSpec,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<f64, BoundError> {
    check("p", p, p > 0.0 && p <= 1.0, "(0, 1]")?;
    check("samples", samples as f64, samples >= 1, "samples >= 1")?;
    let truth = spec.slice_of_clamped(p);
    let dist = Binomial::new(samples, p).map_err(|_| BoundError::Domain {
        name: "p",
        value: p,
        domain: "[0, 1]",
    })?;
    let hits = (0..trials)
        .filter(|_| {
            let lower = dist.sample(rng);
            spec.slice_of_clamped(lower as f64 / samples as f64) == truth
        })
        .count();
    Ok(hits as f64 / trials as f64)
}
