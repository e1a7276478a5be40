//! Forward point-scattering measurement synthesis.
//!
//! Each transducer transmits the chirp and records the superposition of
//! per-scatterer echoes delayed by the two-way time of flight. Delays are
//! realized in the frequency domain so sub-sample (fractional) delays are
//! exact up to band-limited interpolation. A scatterer's phase shift is
//! applied as a rotation of the echo's analytic carrier: positive-frequency
//! content is multiplied by `exp(j*phi)` and the mirrored negative bins by
//! `exp(-j*phi)`, which keeps the ping real while rotating its analytic
//! signal by exactly `exp(j*phi)`. DC and Nyquist bins are excluded from
//! the synthesis band since neither can carry such a rotation.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fft::{fft_in_place, ifft_in_place};
use crate::geometry::{SceneGrid, TransducerRing};
use crate::signal::Waveform;

/// A grid of scatterer amplitudes with an optional per-scatterer phase map.
#[derive(Debug, Clone)]
pub struct ScatterScene {
    pub grid: SceneGrid,
    /// Non-negative scattering coefficients, shape `n x n`.
    pub sigma: Array2<f64>,
    /// Optional phase shift in radians, same shape as `sigma`.
    pub phase: Option<Array2<f64>>,
}

impl ScatterScene {
    pub fn new(grid: SceneGrid, sigma: Array2<f64>) -> Result<Self> {
        if sigma.dim() != (grid.n, grid.n) {
            return Err(invalid(format!(
                "sigma shape {:?} does not match grid {}x{}",
                sigma.dim(),
                grid.n,
                grid.n
            )));
        }
        if sigma.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(invalid("sigma must be finite and non-negative"));
        }
        Ok(Self {
            grid,
            sigma,
            phase: None,
        })
    }

    pub fn with_phase(mut self, phase: Array2<f64>) -> Result<Self> {
        if phase.dim() != self.sigma.dim() {
            return Err(invalid("phase map shape must match sigma"));
        }
        self.phase = Some(phase);
        Ok(self)
    }

    /// Flatten to point scatterers at pixel coordinates, skipping zero
    /// amplitudes.
    pub fn to_points(&self) -> Vec<PointScatterer> {
        let mut points = Vec::new();
        for i in 0..self.grid.n {
            let y = self.grid.coord(i);
            for j in 0..self.grid.n {
                let a = self.sigma[[i, j]];
                if a == 0.0 {
                    continue;
                }
                let x = self.grid.coord(j);
                let phi = self.phase.as_ref().map_or(0.0, |p| p[[i, j]]);
                points.push(PointScatterer {
                    position: [x, y, self.grid.z0],
                    amplitude: a,
                    phase: phi,
                });
            }
        }
        points
    }
}

/// A single point scatterer at an arbitrary position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScatterer {
    pub position: [f64; 3],
    pub amplitude: f64,
    /// Carrier phase shift imparted on the echo, radians.
    pub phase: f64,
}

/// Per-angle real backscatter time series plus the recording geometry.
#[derive(Debug, Clone)]
pub struct PingSet {
    /// Shape `n_angles x n_t`, one row per ring angle.
    pub pings: Array2<f64>,
    pub fs: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
    pub ring: TransducerRing,
}

/// Simulate measurements for a gridded scene.
///
/// Additive noise is i.i.d. Gaussian with variance `noise_eta`, drawn from
/// an independent counter-based stream per angle so results do not depend
/// on scheduling.
pub fn simulate(
    scene: &ScatterScene,
    ring: &TransducerRing,
    w: &Waveform,
    c: f64,
    noise_eta: f64,
    seed: u64,
) -> Result<PingSet> {
    simulate_points(&scene.to_points(), &scene.grid, ring, w, c, noise_eta, seed)
}

/// Simulate measurements for explicit point scatterers.
///
/// The time window is sized from the grid bounds (and any points outside
/// them) so no echo is truncated; `grid` only fixes the window here.
pub fn simulate_points(
    points: &[PointScatterer],
    grid: &SceneGrid,
    ring: &TransducerRing,
    w: &Waveform,
    c: f64,
    noise_eta: f64,
    seed: u64,
) -> Result<PingSet> {
    if !(c > 0.0) {
        return Err(invalid(format!("sound speed must be positive, got {c}")));
    }
    if noise_eta < 0.0 {
        return Err(invalid(format!("noise variance must be non-negative, got {noise_eta}")));
    }
    if w.fs <= 0.0 || w.samples.is_empty() {
        return Err(invalid("waveform must contain samples at a positive rate"));
    }

    let fs = w.fs;
    let (slant_min, slant_max) = slant_bounds(grid, points, ring);
    let tau_min = 2.0 * slant_min / c;
    let tau_max = 2.0 * slant_max / c;
    // One pulse of margin before the earliest echo, two after the latest.
    let t0 = tau_min - w.duration;
    let t_end = tau_max + 2.0 * w.duration;
    let mut n_t = ((t_end - t0) * fs).ceil() as usize;
    if n_t % 2 == 1 {
        n_t += 1;
    }
    let half = n_t / 2;

    // Spectrum of the zero-padded transmit pulse.
    let mut w_spec: Vec<Complex64> = w
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::default()))
        .take(n_t)
        .collect();
    fft_in_place(&mut w_spec);

    let positions = ring.positions();
    let rows: Vec<Vec<f64>> = (0..positions.len())
        .into_par_iter()
        .map(|angle_idx| {
            simulate_row(
                &positions[angle_idx],
                points,
                &w_spec,
                fs,
                t0,
                c,
                n_t,
                half,
                noise_eta,
                mix_seed(seed, angle_idx as u64),
            )
        })
        .collect();

    let mut pings = Array2::zeros((positions.len(), n_t));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            pings[[i, j]] = v;
        }
    }
    Ok(PingSet {
        pings,
        fs,
        t0,
        ring: ring.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate_row(
    transducer: &[f64; 3],
    points: &[PointScatterer],
    w_spec: &[Complex64],
    fs: f64,
    t0: f64,
    c: f64,
    n_t: usize,
    half: usize,
    noise_eta: f64,
    noise_seed: u64,
) -> Vec<f64> {
    let mut spec = vec![Complex64::default(); n_t];
    let df = fs / n_t as f64;
    for p in points {
        let dx = transducer[0] - p.position[0];
        let dy = transducer[1] - p.position[1];
        let dz = transducer[2] - p.position[2];
        let tau_rel = 2.0 * (dx * dx + dy * dy + dz * dz).sqrt() / c - t0;
        let rot = Complex64::from_polar(p.amplitude, p.phase);
        // Accumulate amplitude * W(f) * exp(-j 2 pi f tau) * exp(j phi) on
        // the strictly positive bins; the delay phasor advances by a
        // constant step per bin. DC and Nyquist stay zero: a real signal
        // cannot carry a carrier rotation there, and the chirp has no
        // energy at either beyond spectral leakage.
        let step = Complex64::from_polar(1.0, -2.0 * PI * df * tau_rel);
        let mut delay = Complex64::new(1.0, 0.0);
        for k in 1..half {
            delay *= step;
            spec[k] += w_spec[k] * rot * delay;
        }
    }
    for k in 1..half {
        spec[n_t - k] = spec[k].conj();
    }
    ifft_in_place(&mut spec);
    let mut row: Vec<f64> = spec.iter().map(|v| v.re).collect();

    if noise_eta > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = Normal::new(0.0, noise_eta.sqrt()).expect("valid std dev");
        for v in row.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    row
}

fn slant_bounds(grid: &SceneGrid, points: &[PointScatterer], ring: &TransducerRing) -> (f64, f64) {
    let dz_grid = ring.height - grid.z0;
    let rp = grid.corner_radius();
    let near = (ring.radius - rp).max(0.0);
    let mut min = (near * near + dz_grid * dz_grid).sqrt();
    let mut max = ((ring.radius + rp).powi(2) + dz_grid * dz_grid).sqrt();
    for p in points {
        let prad = (p.position[0].powi(2) + p.position[1].powi(2)).sqrt();
        let dz = ring.height - p.position[2];
        let lo = ((ring.radius - prad).max(0.0).powi(2) + dz * dz).sqrt();
        let hi = ((ring.radius + prad).powi(2) + dz * dz).sqrt();
        min = min.min(lo);
        max = max.max(hi);
    }
    (min, max)
}

/// Assign the four-quadrant phase layout: top-right and bottom-left
/// quadrants carry phase 0 (strictly real echoes), top-left and
/// bottom-right carry pi/2 (strictly imaginary echoes).
pub fn apply_phase_quadrants(scene: &ScatterScene) -> ScatterScene {
    let n = scene.grid.n;
    let half = n / 2;
    let phase = Array2::from_shape_fn((n, n), |(i, j)| {
        if (i < half) == (j < half) {
            PI / 2.0
        } else {
            0.0
        }
    });
    ScatterScene {
        grid: scene.grid.clone(),
        sigma: scene.sigma.clone(),
        phase: Some(phase),
    }
}

/// Assign i.i.d. uniform `[0, 2*pi)` phase to every scatterer.
pub fn apply_random_phase(scene: &ScatterScene, seed: u64) -> ScatterScene {
    let n = scene.grid.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phase = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            phase[[i, j]] = rng.random::<f64>() * 2.0 * PI;
        }
    }
    ScatterScene {
        grid: scene.grid.clone(),
        sigma: scene.sigma.clone(),
        phase: Some(phase),
    }
}

/// Invert the waveform PSNR definition `PSNR = 10 log10(1/sqrt(eta))^2`
/// to the noise variance `eta`.
pub fn noise_variance_for_psnr(psnr_db: f64) -> f64 {
    10f64.powf(-psnr_db / 10.0)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent per-stream seed from a run seed.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}
