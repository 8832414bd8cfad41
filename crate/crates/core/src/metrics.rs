//! Disorder measures computed by an omniscient observer.

use thiserror::Error;

use crate::model::{sequence_ranks, NodeId, SliceSpec, View};
use crate::ordering::{local_indices, LocalNode};

/// One row of the per-cycle output.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMetrics {
    pub cycle: u64,
    /// Global disorder; absent for the ranking protocol.
    pub gdm: Option<f64>,
    pub sdm: f64,
    pub messages_sent: u64,
    pub unsuccessful_swaps: u64,
    pub live_nodes: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("disorder of an empty population is undefined")]
    EmptyPopulation,
    #[error("rank sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// How nodes that have not settled on a slice yet enter the slice disorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnsetSlice {
    /// Counted as if they believed they were in slice 1.
    #[default]
    FirstSlice,
    /// Left out of the sum.
    Exclude,
}

impl UnsetSlice {
    pub fn name(self) -> &'static str {
        match self {
            UnsetSlice::FirstSlice => "first",
            UnsetSlice::Exclude => "exclude",
        }
    }
}

/// `(1/n) * sum (alpha_i - rho_i)^2` over aligned rank sequences.
pub fn gdm(attr_ranks: &[usize], random_ranks: &[usize]) -> Result<f64, MetricsError> {
    if attr_ranks.len() != random_ranks.len() {
        return Err(MetricsError::LengthMismatch(
            attr_ranks.len(),
            random_ranks.len(),
        ));
    }
    if attr_ranks.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    let sum: usize = attr_ranks
        .iter()
        .zip(random_ranks)
        .map(|(&a, &r)| a.abs_diff(r).pow(2))
        .sum();
    Ok(sum as f64 / attr_ranks.len() as f64)
}

/// A live node as seen by the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observed {
    pub id: NodeId,
    pub attr: f64,
    /// Current random value (ordering protocols only).
    pub rvalue: Option<f64>,
    pub slice_estimate: Option<usize>,
}

/// Global disorder of a population running an ordering protocol.
pub fn population_gdm(population: &[Observed]) -> Result<Option<f64>, MetricsError> {
    let Some(values) = population
        .iter()
        .map(|o| o.rvalue.map(|r| (r, o.id)))
        .collect::<Option<Vec<_>>>()
    else {
        return Ok(None);
    };
    let attrs: Vec<(f64, NodeId)> = population.iter().map(|o| (o.attr, o.id)).collect();
    gdm(&sequence_ranks(&attrs), &sequence_ranks(&values)).map(Some)
}

/// The slice each node truly belongs to, aligned with `population`.
pub fn true_slices(population: &[Observed], spec: &SliceSpec) -> Vec<usize> {
    let attrs: Vec<(f64, NodeId)> = population.iter().map(|o| (o.attr, o.id)).collect();
    let n = population.len() as f64;
    sequence_ranks(&attrs)
        .into_iter()
        .map(|alpha| spec.slice_of_clamped(alpha as f64 / n))
        .collect()
}

/// Slice disorder: width-normalized distance between each node's true slice
/// and the slice it believes it is in.
pub fn sdm(
    spec: &SliceSpec,
    true_slices: &[usize],
    estimates: &[Option<usize>],
    unset: UnsetSlice,
) -> f64 {
    true_slices
        .iter()
        .zip(estimates)
        .filter_map(|(&t, &e)| match (e, unset) {
            (Some(e), _) => Some(spec.slice_distance(t, e)),
            (None, UnsetSlice::FirstSlice) => Some(spec.slice_distance(t, 1)),
            (None, UnsetSlice::Exclude) => None,
        })
        .sum()
}

pub fn population_sdm(population: &[Observed], spec: &SliceSpec, unset: UnsetSlice) -> f64 {
    let truth = true_slices(population, spec);
    let estimates: Vec<Option<usize>> = population.iter().map(|o| o.slice_estimate).collect();
    sdm(spec, &truth, &estimates, unset)
}

/// Slice disorder left once the current random values are perfectly sorted
/// along the attributes: the floor the ordering protocols converge to when
/// no value is lost or duplicated.
pub fn sorted_assignment_sdm(population: &[Observed], spec: &SliceSpec) -> Option<f64> {
    let mut values: Vec<f64> = population.iter().map(|o| o.rvalue).collect::<Option<_>>()?;
    values.sort_by(f64::total_cmp);
    let attrs: Vec<(f64, NodeId)> = population.iter().map(|o| (o.attr, o.id)).collect();
    let ranks = sequence_ranks(&attrs);
    let truth = true_slices(population, spec);
    let estimates: Vec<Option<usize>> = ranks
        .iter()
        .map(|&alpha| Some(spec.slice_of_clamped(values[alpha - 1])))
        .collect();
    Some(sdm(spec, &truth, &estimates, UnsetSlice::FirstSlice))
}

/// Local disorder of a node over its view and itself.
pub fn ldm(own: LocalNode, view: &View) -> f64 {
    local_indices(own, view).ldm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ViewEntry;

    #[test]
    fn gdm_basic_cases() {
        assert_eq!(gdm(&[1, 2, 3], &[1, 2, 3]), Ok(0.0));
        assert_eq!(gdm(&[1, 2], &[2, 1]), Ok(1.0));
        assert_eq!(gdm(&[], &[]), Err(MetricsError::EmptyPopulation));
        assert_eq!(gdm(&[1], &[1, 2]), Err(MetricsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn sdm_distance_example() {
        let spec = SliceSpec::equal(3).unwrap();
        assert_eq!(sdm(&spec, &[1], &[Some(3)], UnsetSlice::FirstSlice), 2.0);
        assert_eq!(
            sdm(
                &spec,
                &[1, 2, 3],
                &[Some(1), Some(2), Some(3)],
                UnsetSlice::FirstSlice
            ),
            0.0
        );
    }

    #[test]
    fn sdm_single_off_by_one_node() {
        // n = 10, 2 slices: ranks 1..5 in slice 1, 6..10 in slice 2
        let spec = SliceSpec::equal(2).unwrap();
        let population: Vec<Observed> = (1..=10)
            .map(|k| Observed {
                id: NodeId(k),
                attr: k as f64,
                rvalue: None,
                slice_estimate: Some(if k <= 5 { 1 } else { 2 }),
            })
            .collect();
        assert_eq!(
            population_sdm(&population, &spec, UnsetSlice::FirstSlice),
            0.0
        );
        let mut off = population.clone();
        off[4].slice_estimate = Some(2);
        assert_eq!(population_sdm(&off, &spec, UnsetSlice::FirstSlice), 1.0);
    }

    #[test]
    fn unset_estimates() {
        let spec = SliceSpec::equal(4).unwrap();
        assert_eq!(sdm(&spec, &[3], &[None], UnsetSlice::FirstSlice), 2.0);
        assert_eq!(sdm(&spec, &[3], &[None], UnsetSlice::Exclude), 0.0);
    }

    #[test]
    fn gdm_absent_without_random_values() {
        let pop = [Observed {
            id: NodeId(1),
            attr: 1.0,
            rvalue: None,
            slice_estimate: None,
        }];
        assert_eq!(population_gdm(&pop), Ok(None));
    }

    #[test]
    fn sorted_floor_of_uneven_values() {
        // two nodes, two slices, values 0.1 and 0.4: after sorting both sit in slice 1
        let spec = SliceSpec::equal(2).unwrap();
        let pop = [
            Observed {
                id: NodeId(1),
                attr: 9.0,
                rvalue: Some(0.1),
                slice_estimate: None,
            },
            Observed {
                id: NodeId(2),
                attr: 3.0,
                rvalue: Some(0.4),
                slice_estimate: None,
            },
        ];
        assert_eq!(sorted_assignment_sdm(&pop, &spec), Some(1.0));
    }

    #[test]
    fn ldm_examples() {
        let own = LocalNode {
            id: NodeId(0),
            attr: 1.0,
            rvalue: 0.1,
        };
        let e = |id: u64, attr: f64, r: f64| ViewEntry {
            id: NodeId(id),
            age: 0,
            attr,
            value: Some(r),
        };
        let ordered = View::from_entries(NodeId(0), 2, [e(1, 2.0, 0.2), e(2, 3.0, 0.3)]);
        assert_eq!(ldm(own, &ordered), 0.0);
        let transposed = View::from_entries(NodeId(0), 2, [e(1, 2.0, 0.3), e(2, 3.0, 0.2)]);
        assert!((ldm(own, &transposed) - 2.0 / 3.0).abs() < 1e-12);
    }
}
