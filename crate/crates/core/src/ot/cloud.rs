use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Weighted point cloud approximating a normalized density.
///
/// Points are stored contiguously, `dim` coordinates per particle. Coincident
/// points are allowed and never merged: particle indices are identities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> ParticleCloud<T> {
    /// Builds a validated cloud from flat coordinates.
    pub fn new(dim: usize, points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be positive".into()));
        }
        if weights.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if points.len() != dim * weights.len() {
            return Err(Error::LengthMismatch {
                expected: dim * weights.len(),
                actual: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "coordinate {} of particle {} is not finite",
                i % dim,
                i / dim
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "weight of particle {i} is not a positive finite number"
            )));
        }
        let sum: T = weights.iter().copied().sum();
        let tol = T::TOLERANCES.normalization;
        if (sum.to_f64_lossy() - 1.0).abs() > tol {
            return Err(Error::NotNormalized {
                sum: sum.to_f64_lossy(),
                tolerance: tol,
            });
        }
        Ok(Self { dim, points, weights })
    }

    /// Builds a cloud from one vector per particle.
    pub fn from_rows(rows: &[Vec<T>], weights: Vec<T>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyCloud)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        Self::new(dim, rows.concat(), weights)
    }

    /// Equal-weight cloud, every particle carrying mass `1/n`.
    pub fn uniform(dim: usize, points: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be positive".into()));
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        let w = T::one() / T::from_usize_lossy(n);
        Self::new(dim, points, vec![w; n])
    }

    /// A single unit point mass.
    pub fn dirac(point: Vec<T>) -> Result<Self> {
        let dim = point.len();
        Self::new(dim, point, vec![T::one()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.points.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// True when every particle carries the same mass.
    pub fn is_equal_weight(&self) -> bool {
        let first = self.weights[0];
        let tol = T::lit(T::TOLERANCES.weight_equality);
        self.weights.iter().all(|&w| (w - first).abs() <= tol * first)
    }

    /// Same weights, new positions. Positions must have the same layout.
    pub fn with_points(&self, points: Vec<T>) -> Result<Self> {
        if points.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "coordinate {} of particle {} is not finite",
                i % self.dim,
                i / self.dim
            )));
        }
        Ok(Self {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
        })
    }

    /// Applies `f` to every coordinate vector.
    pub fn map_points<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        let mut out = Vec::with_capacity(self.points.len());
        for p in self.points.chunks_exact(self.dim) {
            let q = f(p);
            if q.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    left: self.dim,
                    right: q.len(),
                });
            }
            out.extend(q);
        }
        self.with_points(out)
    }

    /// Expectation of `psi` under the cloud.
    pub fn integrate<F>(&self, mut psi: F) -> T
    where
        F: FnMut(&[T]) -> T,
    {
        self.iter().fold(T::zero(), |acc, (p, w)| acc + w * psi(p))
    }

    pub fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}
