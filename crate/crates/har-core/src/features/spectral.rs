//! Discrete Fourier and cosine transforms plus spectral summary statistics.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{HarError, Result};

/// FFT size used for a window of `n` samples: the next power of two >= n.
pub fn fft_size(n: usize) -> usize {
    n.next_power_of_two()
}

fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    // Butterflies, doubling the transform length each pass. Twiddles are
    // computed directly from the angle rather than by repeated multiplication
    // to keep rounding error well below the 1e-9 verification tolerance.
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let half = len / 2;
        for chunk in buf.chunks_mut(len) {
            for i in 0..half {
                let w = Complex64::from_polar(1.0, ang * i as f64);
                let u = chunk[i];
                let v = chunk[i + half] * w;
                chunk[i] = u + v;
                chunk[i + half] = u - v;
            }
        }
        len <<= 1;
    }
}

/// Forward DFT `X_k = sum_t x_t exp(-2*pi*i*k*t/N)` of a real series,
/// zero-padded to the next power of two and computed by a radix-2 FFT.
pub fn dft(series: &[f64]) -> Vec<Complex64> {
    let n = fft_size(series.len());
    let mut buf: Vec<Complex64> = Vec::with_capacity(n);
    buf.extend(series.iter().map(|&x| Complex64::new(x, 0.0)));
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft_in_place(&mut buf);
    buf
}

/// First `c` DCT-II coefficients, `C_k = sum_t x_t cos(pi*k*(2t+1)/(2n))`.
pub fn dct2(series: &[f64], c: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < c {
        return Err(HarError::InvalidInput(format!(
            "series of length {} cannot supply {} DCT coefficients",
            n, c
        )));
    }
    let scale = PI / (2.0 * n as f64);
    Ok((0..c)
        .map(|k| {
            series
                .iter()
                .enumerate()
                .map(|(t, &x)| x * (scale * k as f64 * (2 * t + 1) as f64).cos())
                .sum()
        })
        .collect())
}

/// Summary of the non-DC half spectrum (bins `1..=N/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// `(1/N) * sum |X_k|^2` over the non-DC bins.
    pub energy: f64,
    /// Frequency of the largest-magnitude bin, Hz; 0 for an empty spectrum.
    pub dominant_freq_hz: f64,
    /// Magnitude-weighted mean frequency, Hz.
    pub centroid_hz: f64,
    /// Shannon entropy of the normalized power spectrum, nats.
    pub entropy: f64,
    /// Raw magnitudes `|X_1..X_c|`; bins beyond N/2 are reported as 0.
    pub magnitudes: Vec<f64>,
}

/// Computes spectral summaries over bins `k = 1..N/2`, excluding DC. All
/// quantities are 0 when the non-DC spectrum is identically zero.
pub fn frequency_features(
    spectrum: &[Complex64],
    sampling_rate_hz: f64,
    c: usize,
) -> Result<SpectralSummary> {
    let n = spectrum.len();
    if n < 4 {
        return Err(HarError::InvalidInput(format!(
            "spectrum of {} bins is too short for spectral summaries (need >= 4)",
            n
        )));
    }
    let half = n / 2;
    let mags: Vec<f64> = (1..=half).map(|k| spectrum[k].norm()).collect();
    let total_mag: f64 = mags.iter().sum();
    let total_power: f64 = mags.iter().map(|m| m * m).sum();
    let energy = total_power / n as f64;

    let magnitudes: Vec<f64> = (1..=c)
        .map(|k| if k <= half { mags[k - 1] } else { 0.0 })
        .collect();

    if total_mag == 0.0 {
        return Ok(SpectralSummary {
            energy: 0.0,
            dominant_freq_hz: 0.0,
            centroid_hz: 0.0,
            entropy: 0.0,
            magnitudes,
        });
    }

    let bin_hz = sampling_rate_hz / n as f64;
    let mut best = 0usize;
    for (i, m) in mags.iter().enumerate() {
        if *m > mags[best] {
            best = i;
        }
    }
    let dominant_freq_hz = (best + 1) as f64 * bin_hz;
    let centroid_hz = mags
        .iter()
        .enumerate()
        .map(|(i, m)| (i + 1) as f64 * bin_hz * m)
        .sum::<f64>()
        / total_mag;
    let entropy = -mags
        .iter()
        .map(|m| m * m / total_power)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();

    Ok(SpectralSummary {
        energy,
        dominant_freq_hz,
        centroid_hz,
        entropy,
        magnitudes,
    })
}
