//! Source synthesis, mixing matrices and the instantaneous mixing model
//! `x[n] = A·s[n] + v[n]`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Independent RNG streams drawn from one user seed.
const STREAM_SOURCES: u64 = 1;
const STREAM_MIXING: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_SPEECH: u64 = 4;

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `N` channels by `L` samples of finite real signal data.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    data: Array2<f64>,
    sample_rate_hz: f64,
}

impl SignalMatrix {
    pub fn new(data: Array2<f64>, sample_rate_hz: f64) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid(format!(
                "signal matrix must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(((c, n), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample {v} at channel {c}, index {n}"
            )));
        }
        Ok(SignalMatrix {
            data,
            sample_rate_hz,
        })
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Mean square of each channel over the whole record.
    pub fn channel_power(&self) -> Vec<f64> {
        channel_power(self.data.view())
    }
}

pub(crate) fn channel_power(x: ArrayView2<'_, f64>) -> Vec<f64> {
    x.axis_iter(Axis(0))
        .map(|row| row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64)
        .collect()
}

/// Square mixing matrix `A`. Invertibility is not checked here; Hilbert
/// matrices are close to singular on purpose.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(Array2<f64>);

impl MixingMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::invalid(format!(
                "mixing matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mixing matrix has non-finite entries"));
        }
        Ok(MixingMatrix(a))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// White Gaussian noise at this per-channel SNR in dB.
    SnrDb(f64),
}

/// Unit-amplitude triangle wave with period 2π, shaped like `sin`: odd,
/// zero at the origin, peak of 1 at π/2.
pub fn tri(x: f64) -> f64 {
    let r = (x + FRAC_PI_2).rem_euclid(TAU);
    1.0 - 2.0 * (r - PI).abs() / PI
}

/// The five badly scaled sources of the first experiment, evaluated at
/// raw integer sample indices (arguments in radians).
pub fn generate_paper_sources(length: usize, seed: u64) -> Result<SignalMatrix> {
    if length == 0 {
        return Err(Error::invalid("source length must be at least 1"));
    }
    let mut rng = seeded_rng(seed, STREAM_SOURCES);
    let mut s = Array2::zeros((5, length));
    for n in 0..length {
        let t = n as f64;
        s[[0, n]] = 1e-6 * (350.0 * t).sin() * (60.0 * t).sin();
        s[[1, n]] = 1e-5 * tri(70.0 * t);
        s[[2, n]] = 1e-4 * (800.0 * t).sin() * (80.0 * t).sin();
        s[[3, n]] = 1e-5 * (400.0 * t + 4.0 * (60.0 * t).cos()).cos();
        s[[4, n]] = rng.gen_range(-1.0..=1.0);
    }
    SignalMatrix::new(s, 1.0)
}

/// `H[i][j] = 1 / (i + j + 1)` with 0-based indices.
pub fn hilbert_matrix(n: usize) -> Result<MixingMatrix> {
    if n == 0 {
        return Err(Error::invalid(
            "Hilbert matrix dimension must be at least 1",
        ));
    }
    Ok(MixingMatrix(Array2::from_shape_fn((n, n), |(i, j)| {
        1.0 / (i + j + 1) as f64
    })))
}

/// Entries i.i.d. uniform on [-1, 1].
pub fn random_mixing_matrix(n: usize, seed: u64) -> Result<MixingMatrix> {
    if n == 0 {
        return Err(Error::invalid("mixing matrix dimension must be at least 1"));
    }
    let mut rng = seeded_rng(seed, STREAM_MIXING);
    // row-major draw order
    Ok(MixingMatrix(Array2::from_shape_simple_fn((n, n), || {
        rng.gen_range(-1.0..=1.0)
    })))
}

/// Applies `x = A·s + v`. With [`NoiseSpec::SnrDb`], each channel gets
/// Gaussian noise rescaled so its mean square is exactly
/// `P_clean / 10^(snr/10)` over the record.
pub fn mix(
    sources: &SignalMatrix,
    a: &MixingMatrix,
    noise: NoiseSpec,
    seed: u64,
) -> Result<SignalMatrix> {
    if a.dim() != sources.channels() {
        return Err(Error::invalid(format!(
            "mixing matrix is {0}x{0} but there are {1} sources",
            a.dim(),
            sources.channels()
        )));
    }
    let mut x = a.as_array().dot(&sources.data);
    if let NoiseSpec::SnrDb(snr_db) = noise {
        if !snr_db.is_finite() {
            return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
        }
        let mut rng = seeded_rng(seed, STREAM_NOISE);
        let clean_power = channel_power(x.view());
        let samples = x.ncols();
        for (mut row, p_clean) in x.axis_iter_mut(Axis(0)).zip(clean_power) {
            let v: Vec<f64> = (0..samples).map(|_| rng.sample(StandardNormal)).collect();
            let p_raw = v.iter().map(|e| e * e).sum::<f64>() / samples as f64;
            let target = p_clean / 10f64.powf(snr_db / 10.0);
            if p_raw == 0.0 || target == 0.0 {
                continue;
            }
            let gain = (target / p_raw).sqrt();
            for (xi, vi) in row.iter_mut().zip(&v) {
                *xi += gain * vi;
            }
        }
    }
    SignalMatrix::new(x, sources.sample_rate_hz)
}

/// Seeded stand-ins for speech recordings: a resonant (second-order
/// autoregressive) filter driven by white noise, gated by a syllable-rate
/// envelope. Each channel is zero-mean, super-Gaussian, and drawn
/// independently; peaks are normalized to 0.9 so the values look like
/// normalized PCM.
pub fn speech_surrogates(
    channels: usize,
    length: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<SignalMatrix> {
    if channels == 0 || length == 0 {
        return Err(Error::invalid(
            "speech surrogates need at least one channel and one sample",
        ));
    }
    let mut rng = seeded_rng(seed, STREAM_SPEECH);
    let mut s = Array2::zeros((channels, length));
    for mut row in s.axis_iter_mut(Axis(0)) {
        let centre_hz: f64 = rng.gen_range(300.0..1500.0);
        let radius = 0.95;
        let a1 = 2.0 * radius * (TAU * centre_hz / sample_rate_hz).cos();
        let a2 = -radius * radius;
        let syllable_hz: f64 = rng.gen_range(3.0..6.0);
        let phase: f64 = rng.gen_range(0.0..TAU);

        let (mut z1, mut z2) = (0.0, 0.0);
        for (n, out) in row.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            let z = e + a1 * z1 + a2 * z2;
            z2 = z1;
            z1 = z;
            let gate = (TAU * syllable_hz * n as f64 / sample_rate_hz + phase)
                .sin()
                .max(0.0);
            *out = z * gate * gate;
        }
        let mean = row.mean().unwrap_or(0.0);
        row.mapv_inplace(|v| v - mean);
        let peak = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            row.mapv_inplace(|v| 0.9 * v / peak);
        }
    }
    SignalMatrix::new(s, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn tri_reference_points() {
        assert_eq!(tri(0.0), 0.0);
        assert!((tri(FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!(tri(PI).abs() < 1e-15);
        assert!((tri(-FRAC_PI_2) + 1.0).abs() < 1e-15);
        assert!((tri(0.1) - 0.2 / PI).abs() < 1e-15);
    }

    #[test]
    fn tri_is_odd_and_periodic() {
        for k in 0..200 {
            let x = -7.0 + 0.0731 * k as f64;
            assert!((tri(-x) + tri(x)).abs() < 1e-12, "odd at {x}");
            assert!((tri(x + TAU) - tri(x)).abs() < 1e-12, "periodic at {x}");
            assert!(tri(x).abs() <= 1.0);
        }
    }

    #[test]
    fn badly_scaled_sources_at_origin() {
        let s = generate_paper_sources(4, 11).unwrap();
        assert_eq!(s.channels(), 5);
        assert_eq!(s.data()[[0, 0]], 0.0);
        assert_eq!(s.data()[[1, 0]], 0.0);
        assert_eq!(s.data()[[2, 0]], 0.0);
        // 1e-5 * cos(4)
        assert!((s.data()[[3, 0]] - (-6.536_436_208_636_119e-6)).abs() < 1e-17);
    }

    #[test]
    fn source_scales_and_seed_dependence() {
        let a = generate_paper_sources(5000, 1).unwrap();
        let b = generate_paper_sources(5000, 2).unwrap();
        let bounds = [1e-6, 1e-5, 1e-4, 1e-5, 1.0];
        for (c, bound) in bounds.iter().enumerate() {
            let max = a.data().row(c).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(max <= *bound, "channel {c}: {max} > {bound}");
        }
        for c in 0..4 {
            assert_eq!(a.data().row(c), b.data().row(c));
        }
        assert_ne!(a.data().row(4), b.data().row(4));
        assert_eq!(a, generate_paper_sources(5000, 1).unwrap());
    }

    #[test]
    fn zero_length_sources_rejected() {
        assert!(matches!(
            generate_paper_sources(0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn hilbert_entries() {
        assert_eq!(hilbert_matrix(1).unwrap().as_array(), &array![[1.0]]);
        assert_eq!(
            hilbert_matrix(2).unwrap().as_array(),
            &array![[1.0, 0.5], [0.5, 1.0 / 3.0]]
        );
        assert_eq!(hilbert_matrix(5).unwrap().as_array()[[4, 4]], 1.0 / 9.0);
        assert!(hilbert_matrix(0).is_err());
    }

    #[test]
    fn random_mixing_is_seeded_and_bounded() {
        let a = random_mixing_matrix(4, 3).unwrap();
        assert_eq!(a, random_mixing_matrix(4, 3).unwrap());
        assert!(a.as_array().iter().all(|v| (-1.0..=1.0).contains(v)));
        for seed in 0..20 {
            assert_ne!(
                random_mixing_matrix(3, seed).unwrap(),
                random_mixing_matrix(3, seed + 1).unwrap()
            );
        }
        assert!(random_mixing_matrix(0, 1).is_err());
    }

    #[test]
    fn identity_and_permutation_mixing() {
        let s = generate_paper_sources(100, 5).unwrap();
        let eye = MixingMatrix::new(Array2::eye(5)).unwrap();
        assert_eq!(mix(&s, &eye, NoiseSpec::None, 0).unwrap(), s);

        let s2 = SignalMatrix::new(array![[1.0, 2.0, 3.0], [-1.0, 0.5, 9.0]], 1.0).unwrap();
        let swap = MixingMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let x = mix(&s2, &swap, NoiseSpec::None, 0).unwrap();
        assert_eq!(x.data().row(0), s2.data().row(1));
        assert_eq!(x.data().row(1), s2.data().row(0));
    }

    #[test]
    fn mix_rejects_dimension_mismatch() {
        let s = generate_paper_sources(10, 0).unwrap();
        let a = hilbert_matrix(4).unwrap();
        assert!(matches!(
            mix(&s, &a, NoiseSpec::None, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn mixing_is_linear_without_noise() {
        let s1 = generate_paper_sources(300, 1).unwrap();
        let s2 = generate_paper_sources(300, 2).unwrap();
        let sum = SignalMatrix::new(&s1.data() + &s2.data(), 1.0).unwrap();
        let a = random_mixing_matrix(5, 9).unwrap();
        let lhs = mix(&sum, &a, NoiseSpec::None, 0).unwrap();
        let rhs = &mix(&s1, &a, NoiseSpec::None, 0).unwrap().data()
            + &mix(&s2, &a, NoiseSpec::None, 0).unwrap().data();
        for (l, r) in lhs.data().iter().zip(rhs.iter()) {
            assert!((l - r).abs() <= 1e-15 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn snr_is_met_per_channel() {
        let s = generate_paper_sources(30_000, 4).unwrap();
        let a = hilbert_matrix(5).unwrap();
        let clean = mix(&s, &a, NoiseSpec::None, 0).unwrap();
        let noisy = mix(&s, &a, NoiseSpec::SnrDb(30.0), 8).unwrap();
        let noise = &noisy.data() - &clean.data();
        let p_clean = clean.channel_power();
        let p_noise = channel_power(noise.view());
        for (pc, pn) in p_clean.iter().zip(&p_noise) {
            let snr = 10.0 * (pc / pn).log10();
            assert!((snr - 30.0).abs() < 0.1, "snr {snr}");
        }
    }

    #[test]
    fn surrogates_are_bounded_zero_mean_and_peaky() {
        let s = speech_surrogates(4, 30_000, 8000.0, 1).unwrap();
        for row in s.data().axis_iter(Axis(0)) {
            let n = row.len() as f64;
            let mean = row.sum() / n;
            let m2 = row.iter().map(|v| v * v).sum::<f64>() / n;
            let m4 = row.iter().map(|v| v.powi(4)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-12);
            assert!(row.iter().all(|v| v.abs() <= 0.9 + 1e-12));
            assert!(m4 / (m2 * m2) > 3.0, "expected super-Gaussian");
        }
        assert_eq!(s, speech_surrogates(4, 30_000, 8000.0, 1).unwrap());
    }

    #[test]
    fn signal_matrix_rejects_nan() {
        assert!(SignalMatrix::new(array![[1.0, f64::NAN]], 1.0).is_err());
        assert!(SignalMatrix::new(Array2::zeros((0, 3)), 1.0).is_err());
        assert!(SignalMatrix::new(array![[1.0]], 0.0).is_err());
    }
}
