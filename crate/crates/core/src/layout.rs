//! Segmented-waveguide layout: segments, feed points, and antenna positions.

use crate::scenario::ModelError;

/// One segmented waveguide: `n_segments` segments of length `segment_len`,
/// each with a feed point at its left end and one pinching antenna (PA)
/// somewhere inside it.
///
/// Segment `i` (0-based) covers `[i·L, (i+1)·L]` and its feed point sits at
/// `i·L`. The PA x-coordinates are the optimization variables everywhere in
/// this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct SwanLayout {
    n_segments: usize,
    segment_len: f64,
    feed_x: Vec<f64>,
    pa_x: Vec<f64>,
}

impl SwanLayout {
    /// Builds a layout from explicit PA positions, checking segment bounds.
    pub fn new(segment_len: f64, pa_x: Vec<f64>) -> Result<Self, ModelError> {
        if !(segment_len > 0.0) {
            return Err(ModelError::InvalidScenario(format!(
                "segment length must be positive, got {segment_len}"
            )));
        }
        if pa_x.is_empty() {
            return Err(ModelError::InvalidScenario("layout needs at least one segment".into()));
        }
        let n = pa_x.len();
        let feed_x: Vec<f64> = (0..n).map(|i| i as f64 * segment_len).collect();
        let layout = Self { n_segments: n, segment_len, feed_x, pa_x };
        for i in 0..n {
            let (lo, hi) = layout.segment_bounds(i);
            let x = layout.pa_x[i];
            if !x.is_finite() || x < lo - 1e-12 || x > hi + 1e-12 {
                return Err(ModelError::InvalidScenario(format!(
                    "PA {i} at x = {x} outside its segment [{lo}, {hi}]"
                )));
            }
        }
        Ok(layout)
    }

    /// A layout with every PA at its segment midpoint.
    pub fn midpoints(n_segments: usize, segment_len: f64) -> Self {
        let pa_x = (0..n_segments)
            .map(|i| (i as f64 + 0.5) * segment_len)
            .collect();
        Self::new(segment_len, pa_x).expect("midpoint layout is always in bounds")
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn segment_len(&self) -> f64 {
        self.segment_len
    }

    /// Total waveguide span `n_segments · segment_len`.
    pub fn span(&self) -> f64 {
        self.n_segments as f64 * self.segment_len
    }

    /// Feed-point x-coordinate of segment `i` (its left end).
    pub fn feed_x(&self, i: usize) -> f64 {
        self.feed_x[i]
    }

    pub fn feeds(&self) -> &[f64] {
        &self.feed_x
    }

    pub fn pa_x(&self) -> &[f64] {
        &self.pa_x
    }

    pub fn set_pa_x(&mut self, i: usize, x: f64) {
        self.pa_x[i] = x;
    }

    /// `[lo, hi]` covered by segment `i`.
    pub fn segment_bounds(&self, i: usize) -> (f64, f64) {
        (self.feed_x[i], self.feed_x[i] + self.segment_len)
    }

    /// Index of the segment containing coordinate `x` (ceiling rule, clamped
    /// to the valid range so boundary and slightly-outside points resolve to
    /// the nearest segment).
    pub fn segment_of(&self, x: f64) -> usize {
        let idx = ((x - self.feed_x[0]) / self.segment_len).ceil() as isize - 1;
        idx.clamp(0, self.n_segments as isize - 1) as usize
    }

    /// Whether all PAs are inside their segments and pairwise separated by at
    /// least `delta_min`.
    pub fn is_feasible(&self, delta_min: f64) -> bool {
        self.check_positions(&self.pa_x, delta_min)
    }

    /// Feasibility check for a candidate position vector with this layout's
    /// segment structure.
    pub fn check_positions(&self, pa_x: &[f64], delta_min: f64) -> bool {
        if pa_x.len() != self.n_segments {
            return false;
        }
        for (i, &x) in pa_x.iter().enumerate() {
            let (lo, hi) = self.segment_bounds(i);
            if !x.is_finite() || x < lo - 1e-9 || x > hi + 1e-9 {
                return false;
            }
        }
        // Positions are ordered by segment, so adjacent pairs are the binding ones,
        // but check all pairs to honor the definition.
        for i in 0..pa_x.len() {
            for j in (i + 1)..pa_x.len() {
                if (pa_x[i] - pa_x[j]).abs() < delta_min - 1e-9 {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the PA positions wholesale (lengths must match).
    pub fn with_positions(&self, pa_x: Vec<f64>) -> Result<Self, ModelError> {
        if pa_x.len() != self.n_segments {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_segments,
                got: pa_x.len(),
            });
        }
        Self::new(self.segment_len, pa_x)
    }
}
