//! Synthetic point-cloud pose dataset.
//!
//! A canonical point set `Z` is drawn once per seed; each sample is a Haar
//! rotation `R` with input `R·Z` flattened point by point.

use rand::Rng;

use rotgrad_core::lin::{eig_sym, Mat3, Vec3};
use rotgrad_core::so3::sample_uniform_rotation;
use rotgrad_core::{Real, Rotation};

use crate::config::TEST_FRACTION;
use crate::error::{HarnessError, Result};
use crate::rng::{stream, Stream};

/// Smallest-to-largest scatter eigenvalue ratio below which a point set
/// counts as coplanar.
const MIN_SPREAD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset<T> {
    pub points: Vec<Vec3<T>>,
    pub rotations: Vec<Rotation<T>>,
    inputs: Vec<T>,
    n_train: usize,
}

/// `K` points with coordinates uniform in `[−1, 1]`, redrawn until not coplanar.
pub fn canonical_points<T: Real, R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Vec<Vec3<T>>> {
    if k < 4 {
        return Err(HarnessError::Config(format!("need at least 4 points, got {k}")));
    }
    for _ in 0..100 {
        let pts: Vec<Vec3<T>> = (0..k)
            .map(|_| Vec3::from_fn(|_| T::c(rng.random_range(-1.0..1.0))))
            .collect();
        if spread(&pts) > T::c(MIN_SPREAD) {
            return Ok(pts);
        }
    }
    Err(HarnessError::Numeric("could not draw a non-coplanar point set".into()))
}

fn spread<T: Real>(pts: &[Vec3<T>]) -> T {
    let n = T::c(pts.len() as f64);
    let mean = pts.iter().fold(Vec3::zeros(), |a, p| a + *p) / n;
    let mut scatter = Mat3::zeros();
    for p in pts {
        let d = *p - mean;
        scatter += Mat3::outer(&d, &d);
    }
    match eig_sym(&scatter) {
        Ok(e) if e.values[2] > T::zero() => e.values[0] / e.values[2],
        _ => T::zero(),
    }
}

impl<T: Real> SyntheticDataset<T> {
    pub fn generate(n_points: usize, n_rotations: usize, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, Stream::Dataset);
        let points = canonical_points(n_points, &mut rng)?;
        let rotations: Vec<Rotation<T>> = (0..n_rotations).map(|_| sample_uniform_rotation(&mut rng)).collect();
        let n_test = (n_rotations as f64 * TEST_FRACTION).round() as usize;
        if n_test == 0 || n_test >= n_rotations {
            return Err(HarnessError::Config(format!("{n_rotations} rotations leave no train or test split")));
        }
        let mut inputs = Vec::with_capacity(n_rotations * 3 * n_points);
        for r in &rotations {
            for p in &points {
                inputs.extend_from_slice(&r.rotate(p).0);
            }
        }
        Ok(Self {
            points,
            rotations,
            inputs,
            n_train: n_rotations - n_test,
        })
    }

    pub fn input_dim(&self) -> usize {
        3 * self.points.len()
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    /// Indices of the held-out split, the last 20% of samples.
    pub fn test_indices(&self) -> std::ops::Range<usize> {
        self.n_train..self.len()
    }

    pub fn input(&self, i: usize) -> &[T] {
        let d = self.input_dim();
        &self.inputs[i * d..(i + 1) * d]
    }

    /// Inputs of the given samples, batch-major.
    pub fn gather(&self, idx: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(idx.len() * self.input_dim());
        for &i in idx {
            out.extend_from_slice(self.input(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_shaped() {
        let a = SyntheticDataset::<f64>::generate(16, 50, 3).unwrap();
        let b = SyntheticDataset::<f64>::generate(16, 50, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.input_dim(), 48);
        assert_eq!(a.n_train(), 40);
        assert_eq!(a.test_indices(), 40..50);
        let r = a.rotations[7];
        let p = r.rotate(&a.points[2]);
        assert_eq!(&a.input(7)[6..9], &p.0);
        assert_ne!(a, SyntheticDataset::<f64>::generate(16, 50, 4).unwrap());
    }

    #[test]
    fn rejects_tiny_sets() {
        assert!(SyntheticDataset::<f64>::generate(3, 50, 0).is_err());
        assert!(SyntheticDataset::<f64>::generate(16, 2, 0).is_err());
    }

    #[test]
    fn coplanar_sets_have_no_spread() {
        let flat: Vec<Vec3<f64>> = (0..8).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(spread(&flat) < 1e-12);
    }
}
