//! Transmit waveform synthesis, matched filtering and analytic-signal
//! computation.
//!
//! The processing chain mirrors conventional pulse-compression sonar:
//! an LFM chirp is transmitted, echoes are cross-correlated with the
//! transmit waveform, and the complex analytic signal of the correlation
//! carries amplitude and phase for coherent image formation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft::{fft_in_place, ifft_in_place, next_pow2};

/// A sampled real transmit chirp plus its generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Unitless amplitude samples, `len == round(fs * duration)`.
    pub samples: Vec<f64>,
    /// Sample rate in Hz.
    pub fs: f64,
    /// Sweep start frequency in Hz.
    pub f_start: f64,
    /// Sweep stop frequency in Hz.
    pub f_stop: f64,
    /// Pulse duration in seconds.
    pub duration: f64,
}

/// A uniformly sampled time series with an explicit time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub samples: Vec<T>,
    /// Sample rate in Hz.
    pub fs: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
}

pub type RealSeries = TimeSeries<f64>;
pub type ComplexSeries = TimeSeries<Complex64>;

impl<T> TimeSeries<T> {
    pub fn new(samples: Vec<T>, fs: f64, t0: f64) -> Self {
        Self { samples, fs, t0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Synthesize a linear frequency modulated chirp.
///
/// The instantaneous frequency sweeps linearly from `f_start` to `f_stop`
/// over `duration`; the sample phase is
/// `2*pi*(f_start*t + 0.5*(f_stop - f_start)/T * t^2)`.
pub fn lfm_chirp(f_start: f64, f_stop: f64, duration: f64, fs: f64) -> Result<Waveform> {
    if !(duration > 0.0) {
        return Err(invalid(format!("chirp duration must be positive, got {duration}")));
    }
    if !(fs > 0.0) {
        return Err(invalid(format!("sample rate must be positive, got {fs}")));
    }
    if f_start < 0.0 || f_stop < 0.0 {
        return Err(invalid("chirp frequencies must be non-negative"));
    }
    let f_max = f_start.max(f_stop);
    if fs < 2.0 * f_max {
        return Err(invalid(format!(
            "fs = {fs} Hz violates Nyquist for swept band up to {f_max} Hz"
        )));
    }
    let n = (fs * duration).round() as usize;
    if n == 0 {
        return Err(invalid("duration too short for one sample at fs"));
    }
    let sweep_rate = (f_stop - f_start) / duration;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * PI * (f_start * t + 0.5 * sweep_rate * t * t)).cos()
        })
        .collect();
    Ok(Waveform {
        samples,
        fs,
        f_start,
        f_stop,
        duration,
    })
}

/// Cross-correlate a measurement with the transmit waveform.
///
/// Output index equals lag in samples: a copy of `w` delayed by `d`
/// samples in `meas` peaks at index `d`. Implemented as
/// `Re{ifft(fft(meas) * conj(fft(w)))}` after zero-padding both inputs to
/// the next power of two at or above `len(meas) + len(w) - 1`, which keeps
/// circular wrap-around out of the retained `len(meas)` samples.
pub fn match_filter(meas: &RealSeries, w: &Waveform) -> Result<RealSeries> {
    if meas.fs != w.fs {
        return Err(invalid(format!(
            "sample-rate mismatch: measurement {} Hz vs waveform {} Hz",
            meas.fs, w.fs
        )));
    }
    if meas.is_empty() {
        return Err(invalid("measurement series is empty"));
    }
    let n_out = meas.len();
    let n_fft = next_pow2(meas.len() + w.samples.len() - 1);

    let mut m_buf: Vec<Complex64> = meas
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::default()))
        .take(n_fft)
        .collect();
    let mut w_buf: Vec<Complex64> = w
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::default()))
        .take(n_fft)
        .collect();

    fft_in_place(&mut m_buf);
    fft_in_place(&mut w_buf);
    for (m, w) in m_buf.iter_mut().zip(w_buf.iter()) {
        *m *= w.conj();
    }
    ifft_in_place(&mut m_buf);

    let samples = m_buf[..n_out].iter().map(|c| c.re).collect();
    Ok(RealSeries::new(samples, meas.fs, meas.t0))
}

/// Compute the discrete analytic signal via the one-sided spectrum method.
///
/// The real part of the output equals the input; the output spectrum is
/// zero at strictly negative frequencies. FFTs run on even lengths only
/// (odd inputs are zero-padded internally and the result truncated back).
pub fn analytic_signal(x: &RealSeries) -> Result<ComplexSeries> {
    if x.len() < 2 {
        return Err(invalid("analytic signal needs at least 2 samples"));
    }
    let n_out = x.len();
    let n = if n_out % 2 == 0 { n_out } else { n_out + 1 };
    let mut buf: Vec<Complex64> = x
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::default()))
        .take(n)
        .collect();

    fft_in_place(&mut buf);
    // DC and Nyquist stay, positive bins double, negative bins vanish.
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || k == half {
            // unchanged
        } else if k < half {
            *v *= 2.0;
        } else {
            *v = Complex64::default();
        }
    }
    ifft_in_place(&mut buf);
    buf.truncate(n_out);
    Ok(ComplexSeries::new(buf, x.fs, x.t0))
}
