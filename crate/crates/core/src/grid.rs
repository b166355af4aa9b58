//! Uniform discretizations of `L²(R)` and of the dual box in `C²`.

use crate::error::{Error, Result};
use crate::group::DualVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// `n` nodes on `[-T, T]` including both ends, trapezoid weights.
    Closed,
    /// `n` nodes on `[-T, T)`, uniform weights; shifts wrap around.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    half_width: f64,
    kind: GridKind,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn closed(half_width: f64, n: usize) -> Result<Self> {
        Self::new(half_width, n, GridKind::Closed)
    }

    pub fn periodic(half_width: f64, n: usize) -> Result<Self> {
        Self::new(half_width, n, GridKind::Periodic)
    }

    pub fn new(half_width: f64, n: usize, kind: GridKind) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) || n < 2 {
            return Err(Error::Domain(format!("time grid needs T > 0 and n >= 2, got T = {half_width}, n = {n}")));
        }
        let (h, weights) = match kind {
            GridKind::Closed => {
                let h = 2.0 * half_width / (n - 1) as f64;
                let mut w = vec![h; n];
                w[0] = 0.5 * h;
                w[n - 1] = 0.5 * h;
                (h, w)
            }
            GridKind::Periodic => {
                let h = 2.0 * half_width / n as f64;
                (h, vec![h; n])
            }
        };
        let points = (0..n).map(|i| -half_width + i as f64 * h).collect();
        Ok(Self { half_width, kind, points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn spacing(&self) -> f64 {
        self.points[1] - self.points[0]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted `L²` norm of a grid function.
    pub fn norm(&self, values: &[num_complex::Complex64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Number of grid steps equal to `shift`, if it is grid-aligned.
    pub fn aligned_steps(&self, shift: f64) -> Option<i64> {
        let k = shift / self.spacing();
        let r = k.round();
        ((k - r).abs() < 1e-9).then_some(r as i64)
    }
}

/// Samples of the dual variable `ℓ ∈ C² ≅ R⁴` with 4-dimensional cell weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGrid {
    half_width: f64,
    points: Vec<DualVector>,
    weights: Vec<f64>,
}

impl DualGrid {
    /// Tensor trapezoid grid with `k` nodes per real axis on `[-L, L]⁴`.
    /// `k = 1` gives the single point `ℓ = 0`.
    pub fn uniform(half_width: f64, k: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width >= 0.0) || k == 0 {
            return Err(Error::Domain(format!("dual grid needs L >= 0 and k >= 1, got L = {half_width}, k = {k}")));
        }
        let axis: Vec<(f64, f64)> = if k == 1 {
            vec![(0.0, 1.0)]
        } else {
            let h = 2.0 * half_width / (k - 1) as f64;
            (0..k)
                .map(|i| {
                    let w = if i == 0 || i == k - 1 { 0.5 * h } else { h };
                    (-half_width + i as f64 * h, w)
                })
                .collect()
        };
        let mut points = Vec::with_capacity(k.pow(4));
        let mut weights = Vec::with_capacity(k.pow(4));
        for a in &axis {
            for b in &axis {
                for c in &axis {
                    for d in &axis {
                        points.push(DualVector::from_reals([a.0, b.0, c.0, d.0]));
                        weights.push(a.1 * b.1 * c.1 * d.1);
                    }
                }
            }
        }
        Ok(Self { half_width, points, weights })
    }

    /// Explicit sample list with unit weights.
    pub fn from_points(points: Vec<DualVector>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|l| !l.is_finite()) {
            return Err(Error::Domain("dual grid needs at least one finite point".into()));
        }
        let half_width = points
            .iter()
            .flat_map(|l| l.reals())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let weights = vec![1.0; points.len()];
        Ok(Self { half_width, points, weights })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> &[DualVector] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
