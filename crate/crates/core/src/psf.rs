//! Point spread function simulation and analytic spectrum models.
//!
//! The simulated PSF is the DAS image of a unit point scatterer run
//! through the full measurement pipeline. The analytic models describe the
//! centered PSF spectrum (a Gaussian ring in radial frequency) and the
//! phase ramp that translates it off-center.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::beamformer::{analytic_pings, das, ComplexImage};
use crate::error::{invalid, Result};
use crate::fft::ifft2;
use crate::geometry::{SceneGrid, TransducerRing};
use crate::signal::Waveform;
use crate::simulator::{simulate_points, PointScatterer};

/// A simulated PSF: the complex DAS image of a unit scatterer plus the
/// waveform band it was produced with.
#[derive(Debug, Clone)]
pub struct Psf {
    pub image: ComplexImage,
    pub f_start: f64,
    pub f_stop: f64,
    /// Pixel indices (row, col) of the scatterer position.
    pub center: (usize, usize),
}

impl Psf {
    /// Ratio of peak imaginary to peak real magnitude.
    pub fn imag_real_ratio(&self) -> f64 {
        let max_re = self.image.data.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        let max_im = self.image.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        max_im / max_re
    }

    /// Fraction of total energy carried by the imaginary part.
    pub fn imag_energy_fraction(&self) -> f64 {
        let im: f64 = self.image.data.iter().map(|v| v.im * v.im).sum();
        let total: f64 = self.image.data.iter().map(|v| v.norm_sqr()).sum();
        im / total
    }
}

/// Free parameters of the analytic centered-PSF spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPsfParams {
    /// Spectral-width parameter.
    pub a0: f64,
    /// Amplitude parameter.
    pub sigma_w: f64,
    /// Wavenumber `2*pi/lambda`.
    pub k: f64,
}

/// Simulate the centered PSF: a unit scatterer at the grid's center pixel,
/// noiseless, through simulate -> match filter -> analytic signal -> DAS.
pub fn simulate_psf(
    ring: &TransducerRing,
    grid: &SceneGrid,
    w: &Waveform,
    c: f64,
) -> Result<Psf> {
    let ci = grid.center_index();
    let xy = grid.coord(ci);
    psf_at(ring, grid, w, c, [xy, xy, grid.z0], (ci, ci))
}

/// Simulate the PSF of a scatterer at an arbitrary position (which may sit
/// off the imaging plane).
pub fn simulate_offcenter_psf(
    ring: &TransducerRing,
    grid: &SceneGrid,
    w: &Waveform,
    c: f64,
    position: [f64; 3],
) -> Result<Psf> {
    let half = grid.extent / 2.0;
    if position[0].abs() > half || position[1].abs() > half {
        return Err(invalid(format!(
            "scatterer ({}, {}) outside grid extent {}",
            position[0], position[1], grid.extent
        )));
    }
    let planar = (position[0].powi(2) + position[1].powi(2)).sqrt();
    if planar >= ring.radius {
        return Err(invalid("scatterer position outside ring interior"));
    }
    let center = (nearest_index(grid, position[1]), nearest_index(grid, position[0]));
    psf_at(ring, grid, w, c, position, center)
}

fn nearest_index(grid: &SceneGrid, coord: f64) -> usize {
    let idx = ((coord + grid.extent / 2.0) / grid.pitch()).round();
    (idx.max(0.0) as usize).min(grid.n - 1)
}

fn psf_at(
    ring: &TransducerRing,
    grid: &SceneGrid,
    w: &Waveform,
    c: f64,
    position: [f64; 3],
    center: (usize, usize),
) -> Result<Psf> {
    let point = PointScatterer {
        position,
        amplitude: 1.0,
        phase: 0.0,
    };
    let raw = simulate_points(&[point], grid, ring, w, c, 0.0, 0)?;
    let analytic = analytic_pings(&raw, w)?;
    let image = das(&analytic, grid, c)?;
    Ok(Psf {
        image,
        f_start: w.f_start,
        f_stop: w.f_stop,
        center,
    })
}

/// Analytic spectrum of the centered PSF at radial frequency `rho`
/// (cycles/m): `pi^2 sqrt(2) (a0 sigma / k) exp[-2 a0^2 (k - pi rho)^2]`.
pub fn centered_psf_spectrum(rho: f64, params: &AnalyticPsfParams) -> f64 {
    let d = params.k - PI * rho;
    PI * PI * 2f64.sqrt() * params.a0 * params.sigma_w / params.k
        * (-2.0 * params.a0 * params.a0 * d * d).exp()
}

/// Phase factor relating the off-center PSF spectrum to the centered one:
/// `exp(j 2 pi rho R cos(theta0 - phi))` for an offset at polar
/// coordinates `(R, theta0)` and spectral coordinates `(rho, phi)`.
pub fn general_psf_phase(rho: f64, phi: f64, r_offset: f64, theta0: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rho * r_offset * (theta0 - phi).cos())
}

/// Translate a centered PSF by `(R, theta0)` by applying the general-PSF
/// phase ramp across its spectrum.
///
/// The ramp is evaluated at the antipodal spectral angle `phi + pi`, which
/// converts the model's polar Fourier convention to this crate's DFT sign
/// so the image moves by `+(R cos(theta0), R sin(theta0))`.
pub fn translate_via_spectrum(psf: &Psf, r_offset: f64, theta0: f64) -> ComplexImage {
    let n = psf.image.grid.n;
    let pitch = psf.image.grid.pitch();
    let mut spec = crate::fft::fft2(&psf.image.data);
    for u in 0..n {
        let fy = freq_cycles(u, n, pitch);
        for v in 0..n {
            let fx = freq_cycles(v, n, pitch);
            let rho = (fx * fx + fy * fy).sqrt();
            let phi = fy.atan2(fx);
            spec[[u, v]] *= general_psf_phase(rho, phi + PI, r_offset, theta0);
        }
    }
    ComplexImage {
        data: ifft2(&spec),
        grid: psf.image.grid.clone(),
    }
}

/// Spatial frequency (cycles/m) of DFT bin `i` for `n` samples at `pitch`
/// meters apart.
pub fn freq_cycles(i: usize, n: usize, pitch: f64) -> f64 {
    let k = if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    k / (n as f64 * pitch)
}

/// Interpolated width of the main lobe at `fraction` of the peak
/// magnitude, in pixels, measured along the row through the peak.
pub fn main_lobe_width(psf: &Psf, fraction: f64) -> f64 {
    let (ci, cj) = psf.center;
    let n = psf.image.grid.n;
    let profile: Vec<f64> = (0..n).map(|j| psf.image.data[[ci, j]].norm()).collect();
    let peak = profile[cj];
    let thr = fraction * peak;
    let mut right = (n - 1 - cj) as f64;
    for j in cj + 1..n {
        if profile[j] < thr {
            let prev = profile[j - 1];
            right = (j - 1 - cj) as f64 + (prev - thr) / (prev - profile[j]);
            break;
        }
    }
    let mut left = cj as f64;
    for j in (0..cj).rev() {
        if profile[j] < thr {
            let prev = profile[j + 1];
            left = (cj - j - 1) as f64 + (prev - thr) / (prev - profile[j]);
            break;
        }
    }
    left + right
}

/// -6 dB main-lobe width in pixels.
pub fn main_lobe_width_db6(psf: &Psf) -> f64 {
    main_lobe_width(psf, 10f64.powf(-6.0 / 20.0))
}

/// Fit the analytic spectrum parameters to a simulated PSF by least
/// squares on the log radial spectrum near its peak.
pub fn fit_analytic_params(psf: &Psf) -> AnalyticPsfParams {
    let n = psf.image.grid.n;
    let pitch = psf.image.grid.pitch();
    // Shift the PSF center to the origin so the spectrum is smooth.
    let kernel = shift_center_to_origin(&psf.image.data, psf.center);
    let spec = crate::fft::fft2(&kernel);

    // Radial average of |spectrum|.
    let n_bins = n / 2;
    let df = 1.0 / (n as f64 * pitch);
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for u in 0..n {
        let fy = freq_cycles(u, n, pitch);
        for v in 0..n {
            let fx = freq_cycles(v, n, pitch);
            let rho = (fx * fx + fy * fy).sqrt();
            let bin = (rho / df).round() as usize;
            if bin < n_bins {
                sums[bin] += spec[[u, v]].norm();
                counts[bin] += 1;
            }
        }
    }
    let radial: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();

    let peak_bin = radial
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let peak_val = radial[peak_bin];
    let k = PI * peak_bin as f64 * df;

    // ln S = ln C - 2 a0^2 (k - pi rho)^2: linear regression of ln S on
    // the squared detuning over bins above 30% of the peak.
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut m = 0.0;
    for (bin, &val) in radial.iter().enumerate() {
        if val < 0.3 * peak_val || val <= 0.0 {
            continue;
        }
        let x = (k - PI * bin as f64 * df).powi(2);
        let y = val.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let a0 = (-slope / 2.0).max(0.0).sqrt();
    let c_amp = intercept.exp();
    let sigma_w = c_amp * k / (PI * PI * 2f64.sqrt() * a0);
    AnalyticPsfParams { a0, sigma_w, k }
}

/// Circularly shift an image so the given pixel moves to (0, 0).
pub fn shift_center_to_origin(
    data: &Array2<Complex64>,
    center: (usize, usize),
) -> Array2<Complex64> {
    let (rows, cols) = data.dim();
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        data[[(i + center.0) % rows, (j + center.1) % cols]]
    })
}

/// Cache of simulated PSFs keyed by the exact generating parameters.
#[derive(Default)]
pub struct PsfCache {
    map: HashMap<PsfKey, Arc<Psf>>,
    simulations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct PsfKey {
    ring: (u64, u64, usize),
    grid: (usize, u64, u64),
    waveform: (u64, u64, u64, u64),
    c: u64,
}

impl PsfCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of actual simulations performed (cache misses).
    pub fn simulations(&self) -> usize {
        self.simulations
    }

    pub fn get_or_simulate(
        &mut self,
        ring: &TransducerRing,
        grid: &SceneGrid,
        w: &Waveform,
        c: f64,
    ) -> Result<Arc<Psf>> {
        let key = PsfKey {
            ring: (ring.radius.to_bits(), ring.height.to_bits(), ring.len()),
            grid: (grid.n, grid.extent.to_bits(), grid.z0.to_bits()),
            waveform: (
                w.f_start.to_bits(),
                w.f_stop.to_bits(),
                w.duration.to_bits(),
                w.fs.to_bits(),
            ),
            c: c.to_bits(),
        };
        if let Some(psf) = self.map.get(&key) {
            return Ok(psf.clone());
        }
        let psf = Arc::new(simulate_psf(ring, grid, w, c)?);
        self.simulations += 1;
        self.map.insert(key, psf.clone());
        Ok(psf)
    }
}


#[cfg(test)]
mod probe {
    use super::*;
    use crate::geometry::{build_grid, build_ring};
    use crate::signal::lfm_chirp;

    #[test]
    #[ignore]
    fn probe_ratios_and_widths() {
        let c = 343.0;
        let w = lfm_chirp(30e3, 10e3, 1e-3, 100e3).unwrap();
        let grid = build_grid(64, 0.2, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, 180).unwrap();
        let centered = simulate_psf(&ring, &grid, &w, c).unwrap();
        println!("centered ratio: {:.5}", centered.imag_real_ratio());
        for pos in [
            [0.02, 0.0, 0.0],
            [0.04, 0.0, 0.0],
            [0.06, 0.0, 0.0],
            [0.08, 0.0, 0.0],
            [0.09, 0.07, 0.0],
            [0.07, 0.07, 0.0],
            [0.05, 0.05, 0.0],
        ] {
            let off = simulate_offcenter_psf(&ring, &grid, &w, c, pos).unwrap();
            println!(
                "offset {:?}: ratio {:.5} (x{:.2})",
                pos,
                off.imag_real_ratio(),
                off.imag_real_ratio() / centered.imag_real_ratio()
            );
        }
        // widths on finer grids
        for (n, extent) in [(64usize, 0.2), (64, 0.1), (128, 0.2), (96, 0.12)] {
            let g = build_grid(n, extent, 0.0).unwrap();
            let r = build_ring(1.0, 1.0, 90).unwrap();
            let mut line = format!("n={n} extent={extent}: ");
            for (f0, f1) in [(22.5e3, 17.5e3), (25e3, 15e3), (30e3, 10e3)] {
                let wv = lfm_chirp(f0, f1, 1e-3, 100e3).unwrap();
                let p = simulate_psf(&r, &g, &wv, c).unwrap();
                line += &format!("{:.4} ", main_lobe_width_db6(&p) * g.pitch() * 1000.0);
            }
            println!("{line} (mm)");
        }
    }
}
