//! Delay-and-sum reconstruction of complex imagery from analytic pings.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fft::{fft_in_place, ifft_in_place};
use crate::geometry::{SceneGrid, TransducerRing};
use crate::signal::Waveform;
use crate::simulator::PingSet;

/// A complex-valued image on a scene grid.
#[derive(Debug, Clone)]
pub struct ComplexImage {
    /// Shape `n x n`; row index is y, column index is x.
    pub data: Array2<Complex64>,
    pub grid: SceneGrid,
}

impl ComplexImage {
    pub fn new(data: Array2<Complex64>, grid: SceneGrid) -> Result<Self> {
        if data.dim() != (grid.n, grid.n) {
            return Err(invalid(format!(
                "image shape {:?} does not match grid {}x{}",
                data.dim(),
                grid.n,
                grid.n
            )));
        }
        Ok(Self { data, grid })
    }

    /// Peak magnitude over all pixels.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Matched-filtered analytic ping rows ready for beamforming.
#[derive(Debug, Clone)]
pub struct AnalyticPings {
    /// Shape `n_angles x n_t`.
    pub pings: Array2<Complex64>,
    pub fs: f64,
    pub t0: f64,
    pub ring: TransducerRing,
}

/// Match-filter every ping row with the transmit waveform and take the
/// analytic signal.
///
/// Correlation and analytic extraction are fused into one circular FFT at
/// the ping length. Simulated windows carry a full pulse of zero margin at
/// both ends, so every lag the beamformer evaluates equals the linear
/// cross-correlation, while the single-length transform keeps the one-sided
/// spectral structure (and with it carrier-phase linearity) exact.
pub fn analytic_pings(raw: &PingSet, w: &Waveform) -> Result<AnalyticPings> {
    if raw.fs != w.fs {
        return Err(invalid(format!(
            "sample-rate mismatch: pings {} Hz vs waveform {} Hz",
            raw.fs, w.fs
        )));
    }
    let (n_angles, n_t) = raw.pings.dim();
    if n_t < w.samples.len() || n_t % 2 != 0 {
        return Err(invalid(format!(
            "ping window of {n_t} samples cannot hold the {}-sample pulse on an even-length transform",
            w.samples.len()
        )));
    }
    let mut w_spec: Vec<Complex64> = w
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::default()))
        .take(n_t)
        .collect();
    fft_in_place(&mut w_spec);

    let half = n_t / 2;
    let rows: Vec<Vec<Complex64>> = (0..n_angles)
        .into_par_iter()
        .map(|i| {
            let mut buf: Vec<Complex64> = raw
                .pings
                .row(i)
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            fft_in_place(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                let corr = *v * w_spec[k].conj();
                // One-sided doubling folded into the correlation spectrum.
                *v = if k == 0 || k == half {
                    corr
                } else if k < half {
                    2.0 * corr
                } else {
                    Complex64::default()
                };
            }
            ifft_in_place(&mut buf);
            buf
        })
        .collect();

    let mut pings = Array2::default((n_angles, n_t));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            pings[[i, j]] = v;
        }
    }
    Ok(AnalyticPings {
        pings,
        fs: raw.fs,
        t0: raw.t0,
        ring: raw.ring.clone(),
    })
}

/// Delay-and-sum: evaluate each analytic ping at the pixel's two-way time
/// of flight (linear interpolation between complex samples) and sum over
/// angles. Delays outside the recorded window contribute zero.
pub fn das(pings: &AnalyticPings, grid: &SceneGrid, c: f64) -> Result<ComplexImage> {
    if pings.pings.is_empty() {
        return Err(invalid("ping set is empty"));
    }
    if !(c > 0.0) {
        return Err(invalid(format!("sound speed must be positive, got {c}")));
    }
    let positions = pings.ring.positions();
    let n = grid.n;
    let n_t = pings.pings.ncols();
    let coords = grid.coords();
    let fs = pings.fs;
    let t0 = pings.t0;

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let y = coords[i];
            let mut row = vec![Complex64::default(); n];
            for (j, value) in row.iter_mut().enumerate() {
                let x = coords[j];
                let mut acc = Complex64::default();
                for (a, t) in positions.iter().enumerate() {
                    let dx = t[0] - x;
                    let dy = t[1] - y;
                    let dz = t[2] - grid.z0;
                    let tau = 2.0 * (dx * dx + dy * dy + dz * dz).sqrt() / c;
                    let u = (tau - t0) * fs;
                    let k = u.floor();
                    if k < 0.0 || k as usize + 1 >= n_t {
                        continue;
                    }
                    let k = k as usize;
                    let frac = u - k as f64;
                    let s0 = pings.pings[[a, k]];
                    let s1 = pings.pings[[a, k + 1]];
                    acc += s0 * (1.0 - frac) + s1 * frac;
                }
                *value = acc;
            }
            row
        })
        .collect();

    let mut data = Array2::default((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            data[[i, j]] = v;
        }
    }
    ComplexImage::new(data, grid.clone())
}

/// Log-magnitude display image: `20 log10(|I| / max|I|)` clipped below at
/// `floor_db`. An all-zero image maps to `floor_db` everywhere.
pub fn log_magnitude(img: &ComplexImage, floor_db: f64) -> Result<Array2<f64>> {
    if !(floor_db < 0.0) {
        return Err(invalid(format!("floor_db must be negative, got {floor_db}")));
    }
    let peak = img.max_abs();
    Ok(img.data.mapv(|v| {
        if peak == 0.0 || v.norm() == 0.0 {
            floor_db
        } else {
            (20.0 * (v.norm() / peak).log10()).max(floor_db)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, build_ring};
    use crate::signal::lfm_chirp;
    use crate::simulator::{simulate_points, PointScatterer};

    fn pipeline_image(
        points: &[PointScatterer],
        n: usize,
        extent: f64,
        n_angles: usize,
    ) -> ComplexImage {
        let grid = build_grid(n, extent, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, n_angles).unwrap();
        let w = lfm_chirp(30e3, 10e3, 1e-3, 100e3).unwrap();
        let c = 343.0;
        let raw = simulate_points(points, &grid, &ring, &w, c, 0.0, 0).unwrap();
        let analytic = analytic_pings(&raw, &w).unwrap();
        das(&analytic, &grid, c).unwrap()
    }

    #[test]
    fn zero_pings_give_zero_image() {
        let grid = build_grid(8, 0.1, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, 4).unwrap();
        let pings = AnalyticPings {
            pings: Array2::default((4, 128)),
            fs: 100e3,
            t0: 0.005,
            ring,
        };
        let img = das(&pings, &grid, 343.0).unwrap();
        assert!(img.data.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn empty_ping_set_is_rejected() {
        let grid = build_grid(8, 0.1, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, 1).unwrap();
        let pings = AnalyticPings {
            pings: Array2::default((0, 0)),
            fs: 100e3,
            t0: 0.0,
            ring,
        };
        assert!(das(&pings, &grid, 343.0).is_err());
    }

    #[test]
    fn center_scatterer_peaks_at_center_pixel() {
        // Full-pipeline oracle at 64x64, 180 angles.
        let grid = build_grid(64, 0.2, 0.0).unwrap();
        let center = grid.coord(grid.center_index());
        let points = [PointScatterer {
            position: [center, center, 0.0],
            amplitude: 1.0,
            phase: 0.0,
        }];
        let img = pipeline_image(&points, 64, 0.2, 180);
        let mut best = (0, 0);
        let mut best_val = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                let v = img.data[[i, j]].norm();
                if v > best_val {
                    best_val = v;
                    best = (i, j);
                }
            }
        }
        assert_eq!(best, (32, 32), "peak at {best:?}");
    }

    #[test]
    fn das_is_linear_in_pings() {
        let grid = build_grid(8, 0.1, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, 4).unwrap();
        let n_t = 700;
        let mk = |f: &dyn Fn(usize, usize) -> Complex64| AnalyticPings {
            pings: Array2::from_shape_fn((4, n_t), |(i, j)| f(i, j)),
            fs: 100e3,
            t0: 2.0 * (2f64.sqrt() - 0.2) / 343.0,
            ring: ring.clone(),
        };
        let p1 = mk(&|i, j| {
            Complex64::new(((i * 31 + j * 7) % 17) as f64 - 8.0, ((j * 13) % 11) as f64)
        });
        let p2 = mk(&|i, j| {
            Complex64::new(((i + j * j) % 23) as f64, ((i * 5 + j) % 19) as f64 - 9.0)
        });
        let (a, b) = (
            Complex64::new(0.7, 0.0),
            Complex64::new(-1.1, 0.0),
        );
        let combo = mk(&|i, j| {
            a * p1.pings[[i, j]] + b * p2.pings[[i, j]]
        });
        let img_combo = das(&combo, &grid, 343.0).unwrap();
        let img1 = das(&p1, &grid, 343.0).unwrap();
        let img2 = das(&p2, &grid, 343.0).unwrap();
        let scale = img_combo.max_abs();
        for ((x, y), z) in img_combo
            .data
            .iter()
            .zip(img1.data.iter())
            .zip(img2.data.iter())
        {
            assert!((x - (a * y + b * z)).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn uniform_carrier_rotation_rotates_image() {
        let grid = build_grid(16, 0.08, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, 16).unwrap();
        let w = lfm_chirp(30e3, 10e3, 1e-3, 100e3).unwrap();
        let c = 343.0;
        let phi = 0.83;
        let base = [
            PointScatterer {
                position: [0.02, -0.01, 0.0],
                amplitude: 1.0,
                phase: 0.0,
            },
            PointScatterer {
                position: [-0.03, 0.02, 0.0],
                amplitude: 0.6,
                phase: 0.0,
            },
        ];
        let rotated: Vec<PointScatterer> = base
            .iter()
            .map(|p| PointScatterer { phase: phi, ..*p })
            .collect();
        let img0 = {
            let raw = simulate_points(&base, &grid, &ring, &w, c, 0.0, 0).unwrap();
            das(&analytic_pings(&raw, &w).unwrap(), &grid, c).unwrap()
        };
        let img1 = {
            let raw = simulate_points(&rotated, &grid, &ring, &w, c, 0.0, 0).unwrap();
            das(&analytic_pings(&raw, &w).unwrap(), &grid, c).unwrap()
        };
        let rot = Complex64::from_polar(1.0, phi);
        let scale = img0.max_abs();
        for (a, b) in img1.data.iter().zip(img0.data.iter()) {
            assert!(
                (a - b * rot).norm() < 1e-6 * scale,
                "rotation covariance broken: {a} vs {}",
                b * rot
            );
        }
    }

    #[test]
    fn fused_pipeline_matches_public_operations() {
        // The fused circular route must agree with match_filter followed by
        // analytic_signal on every lag that stays clear of the window end.
        use crate::signal::{analytic_signal, match_filter, RealSeries};
        let grid = build_grid(9, 0.1, 0.0).unwrap();
        let ring = build_ring(1.0, 1.0, 3).unwrap();
        let w = lfm_chirp(30e3, 10e3, 1e-3, 100e3).unwrap();
        let points = [PointScatterer {
            position: [0.03, -0.02, 0.0],
            amplitude: 1.0,
            phase: 0.4,
        }];
        let raw = simulate_points(&points, &grid, &ring, &w, 343.0, 0.0, 0).unwrap();
        let fused = analytic_pings(&raw, &w).unwrap();
        let n_t = raw.pings.ncols();
        let interior = n_t - w.samples.len();
        for i in 0..ring.len() {
            let series = RealSeries::new(raw.pings.row(i).to_vec(), raw.fs, raw.t0);
            let composed = analytic_signal(&match_filter(&series, &w).unwrap()).unwrap();
            let scale = composed.samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for k in 0..interior {
                let d = (fused.pings[[i, k]] - composed.samples[k]).norm();
                assert!(d < 1e-3 * scale, "angle {i} lag {k}: diff {d:.3e}");
            }
        }
    }

    #[test]
    fn translated_scatterer_translates_peak() {
        let n = 64;
        let grid = build_grid(n, 0.2, 0.0).unwrap();
        let c0 = grid.center_index();
        for k in [1usize, 3, 5] {
            let pos = [grid.coord(c0 + k), grid.coord(c0), 0.0];
            let img = pipeline_image(
                &[PointScatterer {
                    position: pos,
                    amplitude: 1.0,
                    phase: 0.0,
                }],
                n,
                0.2,
                90,
            );
            let mut best = (0, 0);
            let mut best_val = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = img.data[[i, j]].norm();
                    if v > best_val {
                        best_val = v;
                        best = (i, j);
                    }
                }
            }
            assert_eq!(best, (c0, c0 + k), "shift by {k} pixels");
        }
    }

    #[test]
    fn log_magnitude_decades() {
        let grid = build_grid(2, 1.0, 0.0).unwrap();
        let data = Array2::from_shape_vec(
            (2, 2),
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(1e-4, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let img = ComplexImage::new(data, grid).unwrap();
        let db = log_magnitude(&img, -60.0).unwrap();
        assert!((db[[0, 0]] - 0.0).abs() < 1e-12);
        assert!((db[[0, 1]] - (-20.0)).abs() < 1e-12);
        assert!((db[[1, 0]] - (-60.0)).abs() < 1e-12); // clipped from -80
        assert!((db[[1, 1]] - (-60.0)).abs() < 1e-12); // zero pixel
    }

    #[test]
    fn log_magnitude_uniform_image_is_zero_db() {
        let grid = build_grid(4, 1.0, 0.0).unwrap();
        let img = ComplexImage::new(
            Array2::from_elem((4, 4), Complex64::new(0.3, 0.4)),
            grid,
        )
        .unwrap();
        let db = log_magnitude(&img, -40.0).unwrap();
        assert!(db.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn log_magnitude_all_zero_image_floors() {
        let grid = build_grid(4, 1.0, 0.0).unwrap();
        let img = ComplexImage::new(Array2::default((4, 4)), grid).unwrap();
        let db = log_magnitude(&img, -50.0).unwrap();
        assert!(db.iter().all(|&v| v == -50.0));
    }

    #[test]
    fn log_magnitude_rejects_nonnegative_floor() {
        let grid = build_grid(2, 1.0, 0.0).unwrap();
        let img = ComplexImage::new(Array2::default((2, 2)), grid).unwrap();
        assert!(log_magnitude(&img, 0.0).is_err());
    }
}
