//! Scene grids, circular transducer rings, and the angular-sampling check.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// A square imaging grid centered on the origin at height `z0`.
///
/// Pixel coordinates are linearly spaced over `[-extent/2, +extent/2]`
/// on both axes; index `i` maps to coordinate `coord(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGrid {
    /// Pixels per side.
    pub n: usize,
    /// Physical side length in meters.
    pub extent: f64,
    /// Imaging-plane height in meters.
    pub z0: f64,
}

impl SceneGrid {
    /// Distance between adjacent pixels.
    pub fn pitch(&self) -> f64 {
        self.extent / (self.n - 1) as f64
    }

    /// Coordinate of pixel index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent / 2.0 + i as f64 * self.pitch()
    }

    /// All axis coordinates.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Index of the pixel used as the scene center (exact origin for odd
    /// `n`, half a pitch off for even `n`).
    pub fn center_index(&self) -> usize {
        self.n / 2
    }

    /// Planar radius of the farthest pixel (grid corner).
    pub fn corner_radius(&self) -> f64 {
        self.extent / 2.0 * std::f64::consts::SQRT_2
    }
}

/// Uniformly spaced transducer positions on a circle around the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerRing {
    /// Circle radius in meters.
    pub radius: f64,
    /// Transducer height (z) in meters.
    pub height: f64,
    /// Strictly increasing angles in `[0, 2*pi)`.
    pub angles: Vec<f64>,
}

impl TransducerRing {
    /// Cartesian position of the transducer at `angles[i]`.
    pub fn position(&self, i: usize) -> [f64; 3] {
        let th = self.angles[i];
        [self.radius * th.cos(), self.radius * th.sin(), self.height]
    }

    /// All transducer positions.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.angles.len()).map(|i| self.position(i)).collect()
    }

    /// Angular spacing between consecutive transducers (full circle for a
    /// single one).
    pub fn delta_theta(&self) -> f64 {
        2.0 * PI / self.angles.len() as f64
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Result of the angular-sampling criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingCheck {
    /// Whether the ring's spacing satisfies the bound (inclusive).
    pub satisfied: bool,
    /// Maximum admissible spacing `lambda_min / (4 * r_scene)` in radians.
    pub max_dtheta: f64,
}

/// Build a centered square grid with `n` pixels per side.
pub fn build_grid(n: usize, extent: f64, z0: f64) -> Result<SceneGrid> {
    if n < 2 {
        return Err(invalid(format!("grid needs at least 2 pixels per side, got {n}")));
    }
    if !(extent > 0.0) {
        return Err(invalid(format!("grid extent must be positive, got {extent}")));
    }
    Ok(SceneGrid { n, extent, z0 })
}

/// Build a ring of `n_angles` transducers uniformly spaced on a circle.
pub fn build_ring(radius: f64, height: f64, n_angles: usize) -> Result<TransducerRing> {
    if n_angles == 0 {
        return Err(invalid("ring needs at least one transducer"));
    }
    if !(radius > 0.0) {
        return Err(invalid(format!("ring radius must be positive, got {radius}")));
    }
    let angles = (0..n_angles)
        .map(|i| 2.0 * PI * i as f64 / n_angles as f64)
        .collect();
    Ok(TransducerRing {
        radius,
        height,
        angles,
    })
}

/// Check the angular sampling criterion `dtheta <= lambda_min / (4 r')`.
///
/// Advisory only: callers are expected to warn, not reject, when the bound
/// is violated.
pub fn check_sampling(ring: &TransducerRing, lambda_min: f64, r_scene: f64) -> SamplingCheck {
    let max_dtheta = lambda_min / (4.0 * r_scene);
    SamplingCheck {
        satisfied: ring.delta_theta() <= max_dtheta,
        max_dtheta,
    }
}
