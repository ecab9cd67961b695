//! Parity-check-constraint-based soft-information refinement.
//!
//! After each decoding pass, every coded position accumulates a belief
//! weight: a reward for each satisfied check it participates in and a
//! penalty for each violated one. The weights are squashed to belief
//! probabilities and used to blend the decoder posterior with a uniform
//! compensation term, sharpening positions the parity constraints
//! agree on and flattening the ones they contradict.

use crate::codec::{JointDist, LdpcCode};
use crate::error::{Error, Result};

/// Clamp range for the accumulated belief weights; the sigmoid is
/// numerically saturated beyond this.
const Z_CLAMP: f64 = 30.0;

/// Per-frame belief weights and their probability-domain transform.
#[derive(Debug, Clone)]
pub struct BeliefState {
    z: Vec<f64>,
    reward: f64,
    penalty: f64,
}

impl BeliefState {
    /// Fresh all-zero state for a frame of `len` coded positions.
    pub fn new(len: usize, reward: f64, penalty: f64) -> Result<Self> {
        if !(reward > 0.0) || !reward.is_finite() {
            return Err(Error::InvalidParam {
                name: "reward",
                reason: format!("must be positive and finite, got {reward}"),
            });
        }
        if !(penalty > 0.0) || !penalty.is_finite() {
            return Err(Error::InvalidParam {
                name: "penalty",
                reason: format!("must be positive and finite, got {penalty}"),
            });
        }
        Ok(Self {
            z: vec![0.0; len],
            reward,
            penalty,
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.z
    }

    /// Belief probability `r_bf[i] = 1 / (1 + exp(-z[i]))`.
    pub fn belief_probabilities(&self) -> Vec<f64> {
        self.z.iter().map(|&z| sigmoid(z)).collect()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Accumulates one round of belief-weight updates: every variable in a
/// satisfied check gains `reward`, every variable in a violated check
/// loses `penalty`. Weights persist across outer receiver iterations
/// within a frame.
pub fn update_belief_weights(
    state: &mut BeliefState,
    code: &LdpcCode,
    syndrome: &[u8],
) -> Result<()> {
    if state.len() != code.block_length() {
        return Err(Error::Dimension {
            what: "belief weights",
            expected: code.block_length(),
            got: state.len(),
        });
    }
    if syndrome.len() != code.num_checks() {
        return Err(Error::Dimension {
            what: "syndrome",
            expected: code.num_checks(),
            got: syndrome.len(),
        });
    }
    for (row, &s) in code.check_rows().iter().zip(syndrome) {
        let delta = if s == 0 { state.reward } else { -state.penalty };
        for &i in row {
            state.z[i] = (state.z[i] + delta).clamp(-Z_CLAMP, Z_CLAMP);
        }
    }
    Ok(())
}

/// Blends the decoder posterior with a uniform compensation term:
/// `refined[i] = xi * (r_bf[i] * posterior[i] + 1/4)` with the
/// per-position normalizer `xi = 1 / (r_bf[i] + 1)`.
pub fn refine(posterior: &JointDist, state: &BeliefState) -> Result<JointDist> {
    if posterior.len() != state.len() {
        return Err(Error::Dimension {
            what: "refinement posterior",
            expected: state.len(),
            got: posterior.len(),
        });
    }
    let posterior = posterior.validated()?;
    let mut out = Vec::with_capacity(posterior.len());
    for (p, &z) in posterior.0.iter().zip(&state.z) {
        let r = sigmoid(z);
        let xi = 1.0 / (r + 1.0);
        let mut q = [0.0f64; 4];
        for s in 0..4 {
            q[s] = xi * (r * p[s] + 0.25);
        }
        out.push(q);
    }
    Ok(JointDist(out))
}
