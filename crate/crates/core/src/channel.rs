//! MSML underwater acoustic channel model and frequency-domain coupling.
//!
//! A channel realization is a set of discrete paths, each with a complex
//! gain, an initial delay, and a Doppler time-scaling factor. The
//! frequency-domain coupling matrix maps transmitted subcarriers to
//! received subcarriers, with Doppler spread showing up as off-diagonal
//! (inter-carrier interference) energy. The effective ICI bandwidth is
//! captured per subcarrier by an integer depth `D^m`; everything outside
//! the band is treated as zero.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// OFDM frame parameters.
///
/// `symbol_duration_s` is the useful (FFT) part of the symbol, so the
/// subcarrier spacing is `1/T = f_s/N_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub carrier_freq_hz: f64,
    pub symbol_duration_s: f64,
    pub cp_duration_s: f64,
    pub sample_rate_hz: f64,
    pub fft_size: usize,
    pub num_subcarriers: usize,
    pub bits_per_symbol: u32,
}

impl OfdmParams {
    pub fn new(
        carrier_freq_hz: f64,
        symbol_duration_s: f64,
        cp_duration_s: f64,
        sample_rate_hz: f64,
        fft_size: usize,
        num_subcarriers: usize,
        bits_per_symbol: u32,
    ) -> Result<Self> {
        let p = Self {
            carrier_freq_hz,
            symbol_duration_s,
            cp_duration_s,
            sample_rate_hz,
            fft_size,
            num_subcarriers,
            bits_per_symbol,
        };
        p.validate()?;
        Ok(p)
    }

    /// Simulation defaults: 22.4 kHz carrier, 50 kHz sampling, 4096-point
    /// FFT (81.92 ms useful symbol), 20.5 ms CP, 336 data subcarriers,
    /// BPSK.
    pub fn default_sim() -> Self {
        Self {
            carrier_freq_hz: 22.4e3,
            symbol_duration_s: 4096.0 / 50.0e3,
            cp_duration_s: 20.5e-3,
            sample_rate_hz: 50.0e3,
            fft_size: 4096,
            num_subcarriers: 336,
            bits_per_symbol: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("symbol_duration_s", self.symbol_duration_s),
            ("cp_duration_s", self.cp_duration_s),
            ("sample_rate_hz", self.sample_rate_hz),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be strictly positive, got {v}"),
                });
            }
        }
        if self.fft_size == 0 || self.num_subcarriers == 0 {
            return Err(Error::InvalidParam {
                name: "fft_size/num_subcarriers",
                reason: "must be nonzero".into(),
            });
        }
        if self.num_subcarriers > self.fft_size {
            return Err(Error::InvalidParam {
                name: "num_subcarriers",
                reason: format!(
                    "must not exceed fft_size ({} > {})",
                    self.num_subcarriers, self.fft_size
                ),
            });
        }
        let df_fs = self.sample_rate_hz / self.fft_size as f64;
        let df_t = 1.0 / self.symbol_duration_s;
        if ((df_fs - df_t) / df_t).abs() > 1e-9 {
            return Err(Error::InvalidParam {
                name: "symbol_duration_s",
                reason: format!(
                    "subcarrier spacing mismatch: f_s/N_F = {df_fs} but 1/T = {df_t}"
                ),
            });
        }
        Ok(())
    }

    /// Subcarrier spacing in Hz.
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        1.0 / self.symbol_duration_s
    }

    /// Passband frequency of the `m`-th data subcarrier,
    /// `f_m = f_c + (m - N/2)/T`.
    pub fn subcarrier_freq_hz(&self, m: usize) -> f64 {
        self.carrier_freq_hz
            + (m as f64 - self.num_subcarriers as f64 / 2.0) / self.symbol_duration_s
    }
}

/// Statistical parameters of one underwater acoustic link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStatParams {
    pub num_paths: usize,
    pub mean_interarrival_s: f64,
    /// Expected power decay from delay 0 to delay `T_cp`, in dB.
    pub power_decay_db_over_cp: f64,
    /// Velocity deviation sigma_u in m/s; per-path velocities are drawn
    /// uniformly on `[-sigma_u, +sigma_u]`.
    pub velocity_deviation_mps: f64,
    pub sound_speed_mps: f64,
}

impl ChannelStatParams {
    /// Simulation defaults: 10 paths, 1 ms mean inter-arrival, 20 dB
    /// decay over the CP, 1500 m/s sound speed.
    pub fn default_sim(velocity_deviation_mps: f64) -> Self {
        Self {
            num_paths: 10,
            mean_interarrival_s: 1.0e-3,
            power_decay_db_over_cp: 20.0,
            velocity_deviation_mps,
            sound_speed_mps: 1500.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::InvalidParam {
                name: "num_paths",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.mean_interarrival_s > 0.0) {
            return Err(Error::InvalidParam {
                name: "mean_interarrival_s",
                reason: format!("must be positive, got {}", self.mean_interarrival_s),
            });
        }
        if !(self.sound_speed_mps > 0.0) {
            return Err(Error::InvalidParam {
                name: "sound_speed_mps",
                reason: format!("must be positive, got {}", self.sound_speed_mps),
            });
        }
        if self.velocity_deviation_mps < 0.0 {
            return Err(Error::InvalidParam {
                name: "velocity_deviation_mps",
                reason: format!("must be nonnegative, got {}", self.velocity_deviation_mps),
            });
        }
        Ok(())
    }
}

/// One multipath realization: per-path complex gain, initial delay, and
/// Doppler factor. Total path power is normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub amplitudes: Vec<Complex64>,
    pub delays_s: Vec<f64>,
    pub doppler_factors: Vec<f64>,
}

impl PathSet {
    pub fn num_paths(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn total_power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Draws one path set: delays with exponential inter-arrival gaps (first
/// arrival at 0), circular complex Gaussian gains whose mean power decays
/// exponentially in delay (`power_decay_db_over_cp` dB from delay 0 to
/// `cp_duration_s`), and per-path Doppler factors `a_p = v_p / c` with
/// `v_p` uniform on `[-sigma_u, +sigma_u]`. The realization is
/// renormalized to unit total power.
pub fn draw_paths<R: Rng + ?Sized>(
    rng: &mut R,
    stats: &ChannelStatParams,
    cp_duration_s: f64,
) -> Result<PathSet> {
    stats.validate()?;
    if !(cp_duration_s > 0.0) {
        return Err(Error::InvalidParam {
            name: "cp_duration_s",
            reason: format!("must be positive, got {cp_duration_s}"),
        });
    }
    let mut set = draw_paths_unnormalized(rng, stats, cp_duration_s);
    let total = set.total_power();
    let scale = 1.0 / total.sqrt();
    for a in &mut set.amplitudes {
        *a *= scale;
    }
    Ok(set)
}

fn draw_paths_unnormalized<R: Rng + ?Sized>(
    rng: &mut R,
    stats: &ChannelStatParams,
    cp_duration_s: f64,
) -> PathSet {
    let n = stats.num_paths;
    let gap = Exp::new(1.0 / stats.mean_interarrival_s).expect("positive rate");
    let mut delays = Vec::with_capacity(n);
    let mut t = 0.0;
    for p in 0..n {
        if p > 0 {
            t += gap.sample(rng);
        }
        delays.push(t);
    }
    // decay constant giving the configured dB drop across the CP
    let lambda = stats.power_decay_db_over_cp * std::f64::consts::LN_10 / 10.0 / cp_duration_s;
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let amplitudes: Vec<Complex64> = delays
        .iter()
        .map(|&tau| {
            let mean_power = (-lambda * tau).exp();
            let s = (mean_power / 2.0).sqrt();
            Complex64::new(s * std_normal.sample(rng), s * std_normal.sample(rng))
        })
        .collect();
    let doppler_factors: Vec<f64> = if stats.velocity_deviation_mps == 0.0 {
        vec![0.0; n]
    } else {
        let vel = Uniform::new_inclusive(
            -stats.velocity_deviation_mps,
            stats.velocity_deviation_mps,
        );
        (0..n)
            .map(|_| vel.sample(rng) / stats.sound_speed_mps)
            .collect()
    };
    PathSet {
        amplitudes,
        delays_s: delays,
        doppler_factors,
    }
}

/// Normalized sinc, `sin(pi x)/(pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Inter-carrier coupling coefficient between transmitting subcarrier at
/// `f_m` and receiving subcarrier at `f_n` for Doppler factor `a`:
/// `sinc[(a f_m - (f_n - f_m)) T] * exp(j pi (a f_m - (f_n - f_m)) T)`.
pub fn ici_coefficient(a: f64, f_m_hz: f64, f_n_hz: f64, symbol_duration_s: f64) -> Complex64 {
    let arg = (a * f_m_hz - (f_n_hz - f_m_hz)) * symbol_duration_s;
    sinc(arg) * Complex64::from_polar(1.0, std::f64::consts::PI * arg)
}

/// N x N complex frequency-domain coupling matrix, row index = receiving
/// subcarrier, column index = transmitting subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    size: usize,
    entries: Vec<Complex64>,
    pub depth_profile: Option<Vec<usize>>,
    pub band_mask_applied: bool,
}

impl ChannelMatrix {
    pub fn new(size: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::Dimension {
                what: "channel matrix entries",
                expected: size * size,
                got: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::InvalidParam {
                name: "entries",
                reason: "non-finite channel entry".into(),
            });
        }
        Ok(Self {
            size,
            entries,
            depth_profile: None,
            band_mask_applied: false,
        })
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![Complex64::new(0.0, 0.0); size * size],
            depth_profile: None,
            band_mask_applied: false,
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m.entries[i * size + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[n * self.size + m]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, v: Complex64) {
        self.entries[n * self.size + m] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Mean squared magnitude over all entries.
    pub fn avg_power(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum::<f64>() / (self.size * self.size) as f64
    }

    /// Diagonal as a vector.
    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.size).map(|i| self.get(i, i)).collect()
    }
}

/// Builds the frequency-domain coupling matrix
/// `H[n,m] = sum_p A_p rho_p^{n,m} exp(-j 2 pi f_m tau_p)` for the data
/// subcarriers of `ofdm`. No band mask is applied.
pub fn build_channel_matrix(paths: &PathSet, ofdm: &OfdmParams) -> Result<ChannelMatrix> {
    ofdm.validate()?;
    let n = ofdm.num_subcarriers;
    let t = ofdm.symbol_duration_s;
    let freqs: Vec<f64> = (0..n).map(|m| ofdm.subcarrier_freq_hz(m)).collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (p, &amp) in paths.amplitudes.iter().enumerate() {
        let a = paths.doppler_factors[p];
        let tau = paths.delays_s[p];
        for m in 0..n {
            let f_m = freqs[m];
            let delay_phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f_m * tau);
            let gain = amp * delay_phase;
            // rho depends on n only through the integer offset (n - m)
            for row in 0..n {
                let arg = (a * f_m - (freqs[row] - f_m)) * t;
                let rho = Complex64::from_polar(sinc(arg), std::f64::consts::PI * arg);
                entries[row * n + m] += gain * rho;
            }
        }
    }
    ChannelMatrix::new(n, entries)
}

/// Lateral-plus-vertical band energy ratio around `(m, m)` at depth `d`:
/// in-band row energy + in-band column energy - `|H[m,m]|^2`, divided by
/// the same expression at full depth. Returns 1 when the denominator is
/// zero.
pub fn band_energy_ratio(h: &ChannelMatrix, m: usize, d: usize) -> f64 {
    let n = h.size();
    let lo = m.saturating_sub(d);
    let hi = (m + d).min(n - 1);
    let mut num = 0.0;
    for k in lo..=hi {
        num += h.get(m, k).norm_sqr() + h.get(k, m).norm_sqr();
    }
    num -= h.get(m, m).norm_sqr();
    let mut den = 0.0;
    for k in 0..n {
        den += h.get(m, k).norm_sqr() + h.get(k, m).norm_sqr();
    }
    den -= h.get(m, m).norm_sqr();
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn min_depth_for(h: &ChannelMatrix, m: usize, eta: f64) -> usize {
    let n = h.size();
    for d in 0..n {
        if band_energy_ratio(h, m, d) >= eta {
            return d;
        }
    }
    n - 1
}

/// Selects the ICI depth for subcarrier `m`: the smallest depth whose
/// band energy ratio reaches `eta` in each channel, then the maximum over
/// the two channels. Errors if row and column `m` carry zero energy in
/// both channels.
pub fn select_depth(
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    m: usize,
    eta: f64,
) -> Result<usize> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParam {
            name: "eta",
            reason: format!("must be in (0, 1], got {eta}"),
        });
    }
    if h_a.size() != h_b.size() {
        return Err(Error::Dimension {
            what: "channel matrix pair",
            expected: h_a.size(),
            got: h_b.size(),
        });
    }
    if m >= h_a.size() {
        return Err(Error::InvalidParam {
            name: "m",
            reason: format!("subcarrier {m} out of range for size {}", h_a.size()),
        });
    }
    let zero = |h: &ChannelMatrix| -> bool {
        let n = h.size();
        (0..n).all(|k| h.get(m, k).norm_sqr() == 0.0 && h.get(k, m).norm_sqr() == 0.0)
    };
    if zero(h_a) && zero(h_b) {
        return Err(Error::DegenerateInput { subcarrier: m });
    }
    Ok(min_depth_for(h_a, m, eta).max(min_depth_for(h_b, m, eta)))
}

/// Per-subcarrier depth profile for a channel pair. Degenerate
/// subcarriers (zero energy in both channels) get depth 0.
pub fn depth_profile(h_a: &ChannelMatrix, h_b: &ChannelMatrix, eta: f64) -> Result<Vec<usize>> {
    (0..h_a.size())
        .map(|m| match select_depth(h_a, h_b, m, eta) {
            Ok(d) => Ok(d),
            Err(Error::DegenerateInput { .. }) => Ok(0),
            Err(e) => Err(e),
        })
        .collect()
}

/// Zeroes `H[n,m]` for `|n - m| > D^m`, where `D^m` is the depth of the
/// transmitting (column) subcarrier.
pub fn band_truncate(h: &ChannelMatrix, profile: &[usize]) -> Result<ChannelMatrix> {
    let n = h.size();
    if profile.len() != n {
        return Err(Error::Dimension {
            what: "depth profile",
            expected: n,
            got: profile.len(),
        });
    }
    let mut out = h.clone();
    for m in 0..n {
        let d = profile[m];
        for row in 0..n {
            if row.abs_diff(m) > d {
                out.set(row, m, Complex64::new(0.0, 0.0));
            }
        }
    }
    out.depth_profile = Some(profile.to_vec());
    out.band_mask_applied = true;
    Ok(out)
}

/// Channel error ratio: the dB power ratio between the true channel and
/// the additive estimation error. `Perfect` is the explicit
/// no-perturbation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cer {
    Perfect,
    Db(f64),
}

/// Adds i.i.d. circular complex Gaussian perturbation scaled so the
/// expected error power is `avg_power(H) / 10^(cer/10)`.
pub fn perturb_channel<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    cer: Cer,
    rng: &mut R,
) -> ChannelMatrix {
    let cer_db = match cer {
        Cer::Perfect => return h.clone(),
        Cer::Db(v) => v,
    };
    let err_power = h.avg_power() / 10f64.powf(cer_db / 10.0);
    let s = (err_power / 2.0).sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let n = h.size();
    let mut out = h.clone();
    for row in 0..n {
        for col in 0..n {
            let theta = Complex64::new(s * std_normal.sample(rng), s * std_normal.sample(rng));
            out.set(row, col, out.get(row, col) + theta);
        }
    }
    out
}

/// Measured baseband CIR `h(n; l)` over discrete time `n` in `[0, N_F)`
/// and delay `l` in `[0, L_M)`, stored n-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCir {
    pub fft_size: usize,
    pub memory_len: usize,
    pub time_rate_hz: f64,
    pub delay_rate_hz: f64,
    samples: Vec<Complex64>,
}

const CIR_MAGIC: &[u8; 8] = b"UWACIR01";

impl MeasuredCir {
    pub fn new(
        fft_size: usize,
        memory_len: usize,
        time_rate_hz: f64,
        delay_rate_hz: f64,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        if memory_len > fft_size {
            return Err(Error::InvalidParam {
                name: "memory_len",
                reason: format!("must not exceed fft_size ({memory_len} > {fft_size})"),
            });
        }
        if samples.len() != fft_size * memory_len {
            return Err(Error::Dimension {
                what: "CIR samples",
                expected: fft_size * memory_len,
                got: samples.len(),
            });
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidParam {
                name: "samples",
                reason: "non-finite CIR sample".into(),
            });
        }
        Ok(Self {
            fft_size,
            memory_len,
            time_rate_hz,
            delay_rate_hz,
            samples,
        })
    }

    #[inline]
    pub fn sample(&self, n: usize, l: usize) -> Complex64 {
        self.samples[n * self.memory_len + l]
    }

    /// Binary container layout: 8-byte magic `UWACIR01`, then
    /// little-endian `u64` N_F, `u64` L_M, `f64` time sample rate,
    /// `f64` delay sample rate, then `N_F * L_M` complex samples in
    /// n-major order as `f64` (real, imaginary) pairs.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CIR_MAGIC)?;
        w.write_all(&(self.fft_size as u64).to_le_bytes())?;
        w.write_all(&(self.memory_len as u64).to_le_bytes())?;
        w.write_all(&self.time_rate_hz.to_le_bytes())?;
        w.write_all(&self.delay_rate_hz.to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CIR_MAGIC {
            return Err(Error::Format {
                format: "MeasuredCir",
                reason: "bad magic".into(),
            });
        }
        let mut b8 = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let fft_size = read_u64(r)? as usize;
        let memory_len = read_u64(r)? as usize;
        let read_f64 = |r: &mut R| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let time_rate_hz = read_f64(r)?;
        let delay_rate_hz = read_f64(r)?;
        let count = fft_size.checked_mul(memory_len).ok_or(Error::Format {
            format: "MeasuredCir",
            reason: "header size overflow".into(),
        })?;
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            samples.push(Complex64::new(re, im));
        }
        Self::new(fft_size, memory_len, time_rate_hz, delay_rate_hz, samples)
    }
}

/// Converts a measured CIR to the frequency-domain coupling matrix:
/// `H_full[i,k] = (1/N_F) sum_l sum_n h(n;l) exp(j (2 pi / N_F)(-i n + k (n - l)))`
/// over the full FFT grid, then restricted to the active data
/// subcarriers. Data subcarrier `m` occupies FFT bin
/// `(m - N/2) mod N_F`.
pub fn cir_to_frequency(cir: &MeasuredCir, ofdm: &OfdmParams) -> Result<ChannelMatrix> {
    ofdm.validate()?;
    if cir.fft_size != ofdm.fft_size {
        return Err(Error::Dimension {
            what: "CIR fft_size",
            expected: ofdm.fft_size,
            got: cir.fft_size,
        });
    }
    if cir.memory_len > cir.fft_size {
        return Err(Error::InvalidParam {
            name: "memory_len",
            reason: "exceeds fft_size".into(),
        });
    }
    let nf = cir.fft_size;
    let twiddle: Vec<Complex64> = (0..nf)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / nf as f64))
        .collect();
    // H_full[i,k] = (1/N_F) sum_l e^{-j 2 pi k l / N_F} * G_l[(i - k) mod N_F]
    // with G_l[d] = sum_n h(n;l) e^{-j 2 pi d n / N_F}.
    let mut g = vec![Complex64::new(0.0, 0.0); cir.memory_len * nf];
    for l in 0..cir.memory_len {
        for d in 0..nf {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..nf {
                // e^{-j 2 pi d n / N_F} = conj(twiddle[(d*n) mod N_F])
                acc += cir.sample(n, l) * twiddle[(d * n) % nf].conj();
            }
            g[l * nf + d] = acc;
        }
    }
    let n_active = ofdm.num_subcarriers;
    // Data subcarriers are centered on the carrier: subcarrier m sits in
    // FFT bin (m - N/2) mod N_F. When the whole grid is active there is
    // no band restriction and bins keep their natural FFT order.
    let bin = |m: usize| -> usize {
        if n_active == nf {
            m
        } else {
            let half = n_active / 2;
            (m + nf - half) % nf
        }
    };
    let mut entries = vec![Complex64::new(0.0, 0.0); n_active * n_active];
    for (row, e_row) in entries.chunks_mut(n_active).enumerate() {
        let i = bin(row);
        for (col, e) in e_row.iter_mut().enumerate() {
            let k = bin(col);
            let d = (i + nf - k) % nf;
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..cir.memory_len {
                acc += g[l * nf + d] * twiddle[(k * l) % nf].conj();
            }
            *e = acc / nf as f64;
        }
    }
    ChannelMatrix::new(n_active, entries)
}

/// Square channel matrix over the full FFT grid from a measured CIR,
/// with `num_subcarriers == fft_size`. Used by the CLI converter when no
/// active-band restriction is wanted.
pub fn cir_to_frequency_full(cir: &MeasuredCir) -> Result<ChannelMatrix> {
    let nf = cir.fft_size;
    let ofdm = OfdmParams {
        carrier_freq_hz: 1.0,
        symbol_duration_s: nf as f64,
        cp_duration_s: 1.0,
        sample_rate_hz: 1.0,
        fft_size: nf,
        num_subcarriers: nf,
        bits_per_symbol: 1,
    };
    cir_to_frequency(cir, &ofdm)
}
