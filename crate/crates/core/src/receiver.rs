//! The relay-side iterative receiver: detection, joint decoding, and
//! optional soft-information refinement in an outer loop, emitting the
//! network-coded codeword `c_R = c_A xor c_B`.
//!
//! Per outer iteration the receiver runs one detection pass, demaps and
//! deinterleaves the symbol-domain soft output into the bit domain,
//! runs the joint decoder, optionally refines the decoder posterior
//! with parity-check belief weights, and feeds the result back as the
//! next detection prior. The loop exits early once the PNC-mapped hard
//! decision satisfies every parity check (configurable).

use crate::channel::ChannelMatrix;
use crate::codec::{
    joint_gspa_decode, Constellation, Interleaver, JointDist, LdpcCode,
};
use crate::detect::{sm_lmmse_detect, AcaFgdDetector, ReceivedFrame};
use crate::error::{Error, Result};
use crate::refine::{refine, update_belief_weights, BeliefState};

/// Detection scheme run inside the receiver loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Adaptive channel-aware factor-graph detection.
    AcaFgd,
    /// Superimposed-model LMMSE detection.
    SmLmmse,
    /// Factor-graph detection with a constant depth at every subcarrier.
    FixedD(usize),
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::AcaFgd => "aca-fgd".into(),
            Scheme::SmLmmse => "sm-lmmse".into(),
            Scheme::FixedD(d) => format!("fixed-d{d}"),
        }
    }
}

/// Receiver loop configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub scheme: Scheme,
    pub outer_iterations: usize,
    pub decode_iterations: usize,
    pub refinement_enabled: bool,
    /// Energy-concentration threshold for adaptive depth selection.
    pub eta: f64,
    /// Refinement reward for a satisfied check.
    pub reward: f64,
    /// Refinement penalty for a violated check.
    pub penalty: f64,
    pub early_exit_on_zero_syndrome: bool,
    /// Message-passing sweeps per factor-graph detection call.
    pub sweeps: usize,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::AcaFgd,
            outer_iterations: 5,
            decode_iterations: 3,
            refinement_enabled: true,
            eta: 0.9,
            reward: 1.0,
            penalty: 5.0,
            early_exit_on_zero_syndrome: true,
            sweeps: 1,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0 {
            return Err(Error::InvalidParam {
                name: "outer_iterations",
                reason: "must be at least 1".into(),
            });
        }
        if self.decode_iterations == 0 {
            return Err(Error::InvalidParam {
                name: "decode_iterations",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParam {
                name: "eta",
                reason: format!("must lie in (0, 1], got {}", self.eta),
            });
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidParam {
                name: "sweeps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Per-outer-iteration convergence diagnostics. True bit errors are
/// unknown at a relay, so the proxy is posterior uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    /// Mean `1 - max_state posterior` over coded positions.
    pub symbol_error_proxy: f64,
    /// Number of violated parity checks after decoding.
    pub syndrome_weight: usize,
}

/// Output of one relay reception.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayOutput {
    /// PNC-mapped hard decision of the final decoder posterior.
    pub network_codeword: Vec<u8>,
    pub syndrome: Vec<u8>,
    pub iterations_used: usize,
    pub diagnostics: Vec<IterationDiagnostics>,
}

/// Symbol-domain soft output to bit-domain decoder prior: at Q = 1 the
/// joint labels coincide and the transform is deinterleaving.
pub fn demap_to_bits(symbol_dist: &JointDist, interleaver: &Interleaver) -> Result<JointDist> {
    Ok(JointDist(interleaver.deinterleave(&symbol_dist.0)?))
}

/// Bit-domain decoder/refinement output back to the symbol domain.
pub fn remap_to_symbols(bit_dist: &JointDist, interleaver: &Interleaver) -> Result<JointDist> {
    Ok(JointDist(interleaver.interleave(&bit_dist.0)?))
}

/// Runs the iterative receiver on one received frame. The channel
/// matrices are the full (un-truncated) coupling matrices; banding is
/// applied internally by the detection scheme.
pub fn receive(
    frame: &ReceivedFrame,
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    code: &LdpcCode,
    interleaver: &Interleaver,
    config: &ReceiverConfig,
) -> Result<RelayOutput> {
    config.validate()?;
    let n = frame.len();
    if n != code.block_length() {
        return Err(Error::Dimension {
            what: "frame length vs code length",
            expected: code.block_length(),
            got: n,
        });
    }
    if interleaver.len() != n {
        return Err(Error::Dimension {
            what: "interleaver length",
            expected: n,
            got: interleaver.len(),
        });
    }
    let constellation = Constellation::bpsk();
    // the factor-graph detectors cache per-frame likelihood tables
    let fgd = match config.scheme {
        Scheme::AcaFgd => Some(AcaFgdDetector::new(
            frame,
            h_a,
            h_b,
            config.eta,
            &constellation,
        )?),
        Scheme::FixedD(d) => Some(AcaFgdDetector::with_depth_profile(
            frame,
            h_a,
            h_b,
            &vec![d; n],
            &constellation,
        )?),
        Scheme::SmLmmse => None,
    };
    let mut belief = BeliefState::new(code.block_length(), config.reward, config.penalty)?;
    let mut prior = JointDist::uniform(n);
    let mut diagnostics = Vec::new();
    let mut last_codeword = vec![0u8; n];
    let mut last_syndrome = vec![0u8; code.num_checks()];
    let mut iterations_used = 0;
    for _ in 0..config.outer_iterations {
        iterations_used += 1;
        let detected = match &fgd {
            Some(det) => det.detect(&prior, config.sweeps)?,
            None => sm_lmmse_detect(frame, h_a, h_b, &prior)?,
        };
        let decoder_prior = demap_to_bits(&detected, interleaver)?;
        let decoded = joint_gspa_decode(code, &decoder_prior, config.decode_iterations)?;
        let proxy = decoded
            .posterior
            .0
            .iter()
            .map(|p| 1.0 - p.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)))
            .sum::<f64>()
            / n as f64;
        let weight = decoded.syndrome.iter().filter(|&&s| s != 0).count();
        diagnostics.push(IterationDiagnostics {
            symbol_error_proxy: proxy,
            syndrome_weight: weight,
        });
        last_codeword = decoded.network_codeword.clone();
        last_syndrome = decoded.syndrome.clone();
        let feedback = if config.refinement_enabled {
            update_belief_weights(&mut belief, code, &decoded.syndrome)?;
            refine(&decoded.posterior, &belief)?
        } else {
            decoded.posterior
        };
        prior = remap_to_symbols(&feedback, interleaver)?;
        if config.early_exit_on_zero_syndrome && weight == 0 {
            break;
        }
    }
    Ok(RelayOutput {
        network_codeword: last_codeword,
        syndrome: last_syndrome,
        iterations_used,
        diagnostics,
    })
}
