use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SliceError {
    #[error("value {0} lies outside (0, 1]")]
    OutOfDomain(f64),
    #[error("a slice partition needs at least one slice")]
    Empty,
    #[error("boundaries must start at 0, end at 1 and strictly increase")]
    BadBoundaries,
}

/// A partition of `(0, 1]` into adjacent half-open slices
/// `(b[k-1], b[k]]`, numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    boundaries: Vec<f64>,
    equal_width: bool,
}

impl SliceSpec {
    /// `count` slices of width `1/count`.
    pub fn equal(count: usize) -> Result<Self, SliceError> {
        if count == 0 {
            return Err(SliceError::Empty);
        }
        let boundaries = (0..=count).map(|k| k as f64 / count as f64).collect();
        Ok(Self {
            boundaries,
            equal_width: true,
        })
    }

    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self, SliceError> {
        if boundaries.len() < 2 {
            return Err(SliceError::Empty);
        }
        let well_formed = boundaries[0] == 0.0
            && *boundaries.last().unwrap() == 1.0
            && boundaries.windows(2).all(|w| w[0] < w[1]);
        if !well_formed {
            return Err(SliceError::BadBoundaries);
        }
        Ok(Self {
            boundaries,
            equal_width: false,
        })
    }

    /// Number of slices.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Boundaries other than 0 and 1.
    pub fn interior_boundaries(&self) -> &[f64] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    pub fn is_equal_width(&self) -> bool {
        self.equal_width
    }

    /// `(lower, upper)` of slice `k` (1-based).
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (self.boundaries[k - 1], self.boundaries[k])
    }

    /// The slice `k` with `b[k-1] < x <= b[k]`.
    pub fn slice_of(&self, x: f64) -> Result<usize, SliceError> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(SliceError::OutOfDomain(x));
        }
        Ok(self.boundaries.partition_point(|&b| b < x))
    }

    /// Like [`slice_of`](Self::slice_of) but maps `x <= 0` to the first slice
    /// and `x > 1` to the last. Rank estimates can legitimately be 0.
    pub fn slice_of_clamped(&self, x: f64) -> usize {
        if x <= 0.0 || x.is_nan() {
            1
        } else if x > 1.0 {
            self.len()
        } else {
            self.boundaries.partition_point(|&b| b < x)
        }
    }

    /// The interior boundary nearest to `x`, ties towards the lower one.
    /// `None` for a single-slice partition.
    pub fn nearest_interior_boundary(&self, x: f64) -> Option<f64> {
        let interior = self.interior_boundaries();
        if interior.is_empty() {
            return None;
        }
        let pos = interior.partition_point(|&b| b < x);
        let below = pos.checked_sub(1).map(|i| interior[i]);
        let above = interior.get(pos).copied();
        match (below, above) {
            (Some(lo), Some(hi)) => Some(if x - lo <= hi - x { lo } else { hi }),
            (Some(b), None) | (None, Some(b)) => Some(b),
            (None, None) => None,
        }
    }

    /// Width-normalized distance between the midpoints of the true slice and
    /// an estimated slice. Equal-width partitions give `|true - estimate|`
    /// exactly.
    pub fn slice_distance(&self, true_slice: usize, estimated: usize) -> f64 {
        if self.equal_width {
            return true_slice.abs_diff(estimated) as f64;
        }
        let (l, u) = self.bounds(true_slice);
        let (le, ue) = self.bounds(estimated);
        ((u + l) / 2.0 - (ue + le) / 2.0).abs() / (u - l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn upper_boundary_is_inclusive() {
        let s = SliceSpec::equal(2).unwrap();
        assert_eq!(s.slice_of(1.0), Ok(2));
        assert_eq!(s.slice_of(0.5), Ok(1));
    }

    #[test]
    fn hundred_slices_interior_point() {
        let s = SliceSpec::equal(100).unwrap();
        assert_eq!(s.slice_of(0.803), Ok(81));
        // linear scan over the boundaries
        let b = s.boundaries();
        let k = (1..b.len())
            .find(|&k| b[k - 1] < 0.803 && 0.803 <= b[k])
            .unwrap();
        assert_eq!(k, 81);
    }

    #[test]
    fn domain_is_half_open() {
        let s = SliceSpec::equal(4).unwrap();
        assert_eq!(s.slice_of(0.0), Err(SliceError::OutOfDomain(0.0)));
        assert!(s.slice_of(1.0000001).is_err());
        assert!(s.slice_of(-0.3).is_err());
        assert!(s.slice_of(f64::NAN).is_err());
        assert_eq!(s.slice_of_clamped(0.0), 1);
        assert_eq!(s.slice_of_clamped(2.0), 4);
    }

    #[test]
    fn boundaries_are_validated() {
        assert_eq!(SliceSpec::equal(0), Err(SliceError::Empty));
        assert!(SliceSpec::from_boundaries(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(SliceSpec::from_boundaries(vec![0.1, 1.0]).is_err());
        let s = SliceSpec::from_boundaries(vec![0.0, 0.2, 1.0]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.slice_of(0.2), Ok(1));
        assert_eq!(s.slice_of(0.21), Ok(2));
    }

    #[test]
    fn nearest_boundary_skips_zero_and_one() {
        let s = SliceSpec::equal(4).unwrap();
        assert_eq!(s.nearest_interior_boundary(0.01), Some(0.25));
        assert_eq!(s.nearest_interior_boundary(0.99), Some(0.75));
        assert_eq!(s.nearest_interior_boundary(0.6), Some(0.5));
        assert_eq!(
            SliceSpec::equal(1).unwrap().nearest_interior_boundary(0.3),
            None
        );
    }

    #[test]
    fn unequal_widths_distance() {
        let s = SliceSpec::from_boundaries(vec![0.0, 0.2, 0.6, 1.0]).unwrap();
        // midpoints 0.1, 0.4, 0.8
        assert!((s.slice_distance(1, 2) - 0.3 / 0.2).abs() < 1e-12);
        assert!((s.slice_distance(2, 1) - 0.3 / 0.4).abs() < 1e-12);
        assert_eq!(s.slice_distance(3, 3), 0.0);
    }

    proptest! {
        #[test]
        fn monotone(x in 1e-9f64..=1.0, y in 1e-9f64..=1.0, m in 1usize..300) {
            let s = SliceSpec::equal(m).unwrap();
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(s.slice_of(lo).unwrap() <= s.slice_of(hi).unwrap());
        }

        #[test]
        fn equal_width_matches_ceiling(x in 1e-9f64..=1.0, m in 1usize..300) {
            let xm = x * m as f64;
            // away from boundaries, float rounding of x*m cannot cross an integer
            prop_assume!((xm - xm.round()).abs() > 1e-9);
            let s = SliceSpec::equal(m).unwrap();
            prop_assert_eq!(s.slice_of(x).unwrap(), xm.ceil() as usize);
        }
    }
}
