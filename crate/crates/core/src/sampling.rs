//! Seeded sampling of coordinate boxes and prolongation vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lo, hi]` per coordinate. Empty for a zero-dimensional base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordBox {
    pub bounds: Vec<[f64; 2]>,
}

impl CoordBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Schema {
                    field: format!("box[{i}]"),
                    reason: format!("need finite lo < hi, got [{lo}, {hi}]"),
                });
            }
        }
        Ok(Self { bounds })
    }

    /// The same interval repeated `dim` times.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            bounds: vec![[lo, hi]; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.bounds.iter().zip(p).all(|([lo, hi], v)| *lo <= *v && *v <= *hi)
    }

    /// Cartesian product, `self` first.
    pub fn product(&self, other: &CoordBox) -> CoordBox {
        let mut bounds = self.bounds.clone();
        bounds.extend_from_slice(&other.bounds);
        CoordBox { bounds }
    }
}

/// Deterministic sampler; every random draw in the crate goes through one of these.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    seed: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point_in(&mut self, b: &CoordBox) -> Vec<f64> {
        b.bounds
            .iter()
            .map(|[lo, hi]| self.rng.random_range(*lo..*hi))
            .collect()
    }

    pub fn points_in(&mut self, b: &CoordBox, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.point_in(b)).collect()
    }

    /// Vector with entries uniform in `[-1, 1)`.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.rng.random_range(-1.0..1.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let b = CoordBox::new(vec![[-1.0, 1.0], [0.0, 2.0]]).unwrap();
        let a = Sampler::new(7).points_in(&b, 5);
        let c = Sampler::new(7).points_in(&b, 5);
        assert_eq!(a, c);
        assert!(a.iter().all(|p| b.contains(p)));
        assert_ne!(a, Sampler::new(8).points_in(&b, 5));
    }

    #[test]
    fn degenerate_boxes_rejected() {
        assert!(CoordBox::new(vec![[1.0, 1.0]]).is_err());
        assert!(CoordBox::new(vec![[0.0, f64::NAN]]).is_err());
        assert!(CoordBox::new(vec![]).is_ok());
    }

    #[test]
    fn zero_dimensional_box_yields_empty_points() {
        let pts = Sampler::new(1).points_in(&CoordBox::cube(0, 0.0, 1.0), 3);
        assert_eq!(pts, vec![Vec::<f64>::new(); 3]);
    }
}
