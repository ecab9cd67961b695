//! Monte-Carlo experiment engine: frame generation, multiple-access
//! superposition at each relay, multi-hop error accumulation, grid
//! sweeps, and the channel energy-contribution table.
//!
//! The end node recovers its partner's message through an XOR chain of
//! network-coded words, so an information bit arrives flipped iff it
//! was flipped at an odd number of hops; the end-to-end error pattern
//! is therefore the XOR of independent per-hop patterns.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::channel::{
    build_channel_matrix, draw_paths, perturb_channel, Cer, ChannelStatParams, OfdmParams,
};
use crate::codec::{encode, map_symbols, Constellation, Interleaver, LdpcCode};
use crate::detect::ReceivedFrame;
use crate::error::{Error, Result};
use crate::receiver::{receive, ReceiverConfig, RelayOutput};

/// Full experiment configuration for a sweep.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub ofdm: OfdmParams,
    pub receiver: ReceiverConfig,
    pub snr_grid_db: Vec<f64>,
    pub sigma_u_grid: Vec<f64>,
    pub relay_counts: Vec<usize>,
    /// Channel-estimation-error ratio in dB; `None` = perfect CSI.
    pub cer_db: Option<f64>,
    pub frames_per_point: usize,
    pub master_seed: u64,
    pub code_seed: u64,
    pub interleaver_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ofdm: OfdmParams::default_sim(),
            receiver: ReceiverConfig::default(),
            snr_grid_db: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            sigma_u_grid: vec![0.1],
            relay_counts: vec![1],
            cer_db: None,
            frames_per_point: 500,
            master_seed: 1,
            code_seed: 1,
            interleaver_seed: 2,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.receiver.validate()?;
        if self.frames_per_point == 0 {
            return Err(Error::InvalidParam {
                name: "frames_per_point",
                reason: "must be at least 1".into(),
            });
        }
        for (name, empty) in [
            ("snr_grid_db", self.snr_grid_db.is_empty()),
            ("sigma_u_grid", self.sigma_u_grid.is_empty()),
            ("relay_counts", self.relay_counts.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidParam {
                    name,
                    reason: "grid must be nonempty".into(),
                });
            }
        }
        if self.relay_counts.iter().any(|&m| m == 0) {
            return Err(Error::InvalidParam {
                name: "relay_counts",
                reason: "entries must be at least 1".into(),
            });
        }
        if self.ofdm.num_subcarriers % 3 != 0 {
            return Err(Error::InvalidParam {
                name: "num_subcarriers",
                reason: "must be divisible by 3 for the rate-1/3 code".into(),
            });
        }
        Ok(())
    }

    /// Code block length equals the subcarrier count at Q = 1.
    pub fn code_dimensions(&self) -> (usize, usize) {
        let l = self.ofdm.num_subcarriers;
        (l, l / 3)
    }
}

/// One aggregated result row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRecord {
    pub scheme: String,
    pub snr_db: f64,
    pub sigma_u: f64,
    pub relay_count: usize,
    pub outer_iters: usize,
    pub decode_iters: usize,
    pub refinement: bool,
    /// Negative values encode perfect CSI in the flat table form.
    pub cer_db: Option<f64>,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub wall_time_s: f64,
}

/// Outcome of a full sweep: completed rows plus descriptions of any
/// grid points that failed (the sweep continues past failures).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<SimRecord>,
    pub failures: Vec<String>,
}

/// Noise variance from the SNR definition
/// `SNR(dB) = -10 log10(sigma^2)` (unit-power channels and symbols).
pub fn noise_variance_for_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Per-point seed derivation: a hash-free counter scheme so any single
/// grid point is reproducible in isolation.
pub fn derive_point_seed(master_seed: u64, point_index: u64) -> u64 {
    master_seed.wrapping_add(point_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Static per-sweep assets shared across frames.
#[derive(Debug, Clone)]
pub struct SimAssets {
    pub code: LdpcCode,
    pub interleaver: Interleaver,
}

impl SimAssets {
    pub fn build(config: &SimConfig) -> Result<Self> {
        let (l, k) = config.code_dimensions();
        Ok(Self {
            code: crate::codec::build_qc_ldpc(l, k, config.code_seed)?,
            interleaver: Interleaver::new(l, config.interleaver_seed),
        })
    }
}

/// Parameters of one multiple-access hop.
#[derive(Debug, Clone)]
pub struct HopParams<'a> {
    pub ofdm: &'a OfdmParams,
    pub stats: &'a ChannelStatParams,
    pub receiver: &'a ReceiverConfig,
    pub noise_variance: f64,
    pub cer: Cer,
    pub assets: &'a SimAssets,
}

/// Simulates one multiple-access phase: fresh information bits for both
/// end nodes, independent channel draws per link, superposition plus
/// noise, one relay reception. Returns the network-coded error pattern
/// (estimated `c_R` XOR true `c_A xor c_B`) and the receiver output.
pub fn run_hop<R: Rng + ?Sized>(
    rng: &mut R,
    params: &HopParams<'_>,
) -> Result<(Vec<u8>, RelayOutput)> {
    let code = &params.assets.code;
    let il = &params.assets.interleaver;
    let constellation = Constellation::bpsk();
    let k = code.info_length();
    let draw_bits =
        |rng: &mut R| -> Vec<u8> { (0..k).map(|_| rng.gen_range(0..2u8)).collect() };
    let ca = encode(code, &draw_bits(rng))?;
    let cb = encode(code, &draw_bits(rng))?;
    let xa = map_symbols(&il.interleave(&ca)?, &constellation)?;
    let xb = map_symbols(&il.interleave(&cb)?, &constellation)?;
    let paths_a = draw_paths(rng, params.stats, params.ofdm.cp_duration_s)?;
    let paths_b = draw_paths(rng, params.stats, params.ofdm.cp_duration_s)?;
    let h_a = build_channel_matrix(&paths_a, params.ofdm)?;
    let h_b = build_channel_matrix(&paths_b, params.ofdm)?;
    // the receiver sees (possibly perturbed) channel estimates; the
    // signal itself always passes through the true channels
    let h_a_rx = perturb_channel(&h_a, params.cer, rng);
    let h_b_rx = perturb_channel(&h_b, params.cer, rng);
    let n = params.ofdm.num_subcarriers;
    let noise = Normal::new(0.0, (params.noise_variance / 2.0).sqrt()).map_err(|e| {
        Error::InvalidParam {
            name: "noise_variance",
            reason: e.to_string(),
        }
    })?;
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (m, ym) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(noise.sample(rng), noise.sample(rng));
        for kk in 0..n {
            acc += h_a.get(m, kk) * xa[kk] + h_b.get(m, kk) * xb[kk];
        }
        *ym = acc;
    }
    let frame = ReceivedFrame::new(y, params.noise_variance)?;
    let out = receive(&frame, &h_a_rx, &h_b_rx, code, il, params.receiver)?;
    let pattern: Vec<u8> = out
        .network_codeword
        .iter()
        .zip(ca.iter().zip(&cb))
        .map(|(&est, (&a, &b))| est ^ a ^ b)
        .collect();
    Ok((pattern, out))
}

/// XOR-accumulates per-hop error patterns into the end-to-end pattern.
pub fn xor_accumulate(patterns: &[Vec<u8>]) -> Vec<u8> {
    let mut acc = vec![0u8; patterns.first().map_or(0, Vec::len)];
    for p in patterns {
        for (a, &b) in acc.iter_mut().zip(p) {
            *a ^= b;
        }
    }
    acc
}

/// Runs `relay_count` independent hops and XORs their error patterns.
pub fn run_multihop_trial<R: Rng + ?Sized>(
    rng: &mut R,
    params: &HopParams<'_>,
    relay_count: usize,
) -> Result<Vec<u8>> {
    let mut acc: Option<Vec<u8>> = None;
    for _ in 0..relay_count {
        let (pattern, _) = run_hop(rng, params)?;
        match &mut acc {
            None => acc = Some(pattern),
            Some(a) => {
                for (x, &b) in a.iter_mut().zip(&pattern) {
                    *x ^= b;
                }
            }
        }
    }
    Ok(acc.unwrap_or_default())
}

/// Runs the full cartesian sweep. `on_record` is invoked as each grid
/// point completes, enabling streaming output. Frames within a point
/// run in parallel; per-frame random streams make the aggregate
/// independent of scheduling.
pub fn ber_sweep<F: FnMut(&SimRecord)>(
    config: &SimConfig,
    mut on_record: F,
) -> Result<SweepResult> {
    config.validate()?;
    let assets = SimAssets::build(config)?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut point_index = 0u64;
    for &sigma_u in &config.sigma_u_grid {
        let stats = ChannelStatParams::default_sim(sigma_u);
        for &snr_db in &config.snr_grid_db {
            for &relay_count in &config.relay_counts {
                let point_seed = derive_point_seed(config.master_seed, point_index);
                point_index += 1;
                let params = HopParams {
                    ofdm: &config.ofdm,
                    stats: &stats,
                    receiver: &config.receiver,
                    noise_variance: noise_variance_for_snr_db(snr_db),
                    cer: match config.cer_db {
                        Some(db) => Cer::Db(db),
                        None => Cer::Perfect,
                    },
                    assets: &assets,
                };
                let start = Instant::now();
                let outcome: Result<(u64, u64)> = (0..config.frames_per_point as u64)
                    .into_par_iter()
                    .map(|f| {
                        let mut rng = ChaCha12Rng::seed_from_u64(point_seed);
                        rng.set_stream(f);
                        let pattern = run_multihop_trial(&mut rng, &params, relay_count)?;
                        let errs = pattern.iter().filter(|&&b| b != 0).count() as u64;
                        Ok((errs, u64::from(errs > 0)))
                    })
                    .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)));
                match outcome {
                    Ok((bit_errors, frame_errors)) => {
                        let frames = config.frames_per_point as u64;
                        let bits = frames * config.ofdm.num_subcarriers as u64;
                        let record = SimRecord {
                            scheme: config.receiver.scheme.label(),
                            snr_db,
                            sigma_u,
                            relay_count,
                            outer_iters: config.receiver.outer_iterations,
                            decode_iters: config.receiver.decode_iterations,
                            refinement: config.receiver.refinement_enabled,
                            cer_db: config.cer_db,
                            frames,
                            bits,
                            bit_errors,
                            frame_errors,
                            ber: bit_errors as f64 / bits as f64,
                            fer: frame_errors as f64 / frames as f64,
                            wall_time_s: start.elapsed().as_secs_f64(),
                        };
                        on_record(&record);
                        records.push(record);
                    }
                    Err(e) => failures.push(format!(
                        "point sigma_u={sigma_u} snr_db={snr_db} relays={relay_count}: {e}"
                    )),
                }
            }
        }
    }
    Ok(SweepResult { records, failures })
}

/// Average in-band energy fraction of the coupling matrix rows,
/// pooled over subcarriers and channel realizations, as a percentage:
/// for each subcarrier `m` the in-band energy is
/// `sum_{|k-m| <= D} |H[m,k]|^2` and the reference is the full row.
pub fn energy_contribution_table(
    ofdm: &OfdmParams,
    sigma_u_list: &[f64],
    depth_list: &[usize],
    realizations: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    ofdm.validate()?;
    if realizations == 0 {
        return Err(Error::InvalidParam {
            name: "realizations",
            reason: "must be at least 1".into(),
        });
    }
    let n = ofdm.num_subcarriers;
    let mut table = Vec::with_capacity(sigma_u_list.len());
    for (si, &sigma_u) in sigma_u_list.iter().enumerate() {
        let stats = ChannelStatParams::default_sim(sigma_u);
        // per depth: (in-band energy sum, total energy sum)
        let sums: Result<Vec<(f64, f64)>> = (0..realizations as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(si as u64));
                rng.set_stream(r);
                let paths = draw_paths(&mut rng, &stats, ofdm.cp_duration_s)?;
                let h = build_channel_matrix(&paths, ofdm)?;
                let mut acc = vec![(0.0f64, 0.0f64); depth_list.len()];
                for m in 0..n {
                    let mut row_total = 0.0;
                    for k in 0..n {
                        row_total += h.get(m, k).norm_sqr();
                    }
                    for (di, &d) in depth_list.iter().enumerate() {
                        let lo = m.saturating_sub(d);
                        let hi = (m + d).min(n - 1);
                        let mut inband = 0.0;
                        for k in lo..=hi {
                            inband += h.get(m, k).norm_sqr();
                        }
                        acc[di].0 += inband;
                        acc[di].1 += row_total;
                    }
                }
                Ok(acc)
            })
            .try_reduce(
                || vec![(0.0, 0.0); depth_list.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        x.0 += y.0;
                        x.1 += y.1;
                    }
                    Ok(a)
                },
            );
        let sums = sums?;
        table.push(
            sums.into_iter()
                .map(|(inband, total)| 100.0 * inband / total)
                .collect(),
        );
    }
    Ok(table)
}
