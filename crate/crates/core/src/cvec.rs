//! Ordered complex coefficient vectors (channels, beamformers, combiners).

use num_complex::Complex64;

use crate::scenario::ModelError;

/// A complex vector with one entry per waveguide segment.
///
/// Used for cascaded channel vectors and for beamforming/combining weights.
/// Entries are kept finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    entries: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::InvalidScenario("empty complex vector".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ModelError::InvalidScenario("non-finite complex entry".into()));
        }
        Ok(Self { entries })
    }

    /// A one-hot selection vector of length `n` with a 1 at `index`.
    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); n];
        entries[index] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Sum of all entries.
    pub fn sum(&self) -> Complex64 {
        self.entries.iter().sum()
    }

    /// Squared Euclidean norm Σ |a_i|².
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Bilinear product Σ a_i b_i (no conjugation; pairs a transposed channel
    /// with a weight vector).
    pub fn dot_t(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Hermitian inner product Σ conj(a_i) b_i.
    pub fn dot_h(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Entry-wise conjugate.
    pub fn conj(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Scales every entry by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Returns this vector normalized to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self, ModelError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(ModelError::InvalidScenario("cannot normalize the zero vector".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// a + factor · b, entry-wise.
    pub fn axpy(&self, factor: Complex64, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}
