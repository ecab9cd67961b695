//! Soft-input soft-output detection of the superimposed OFDM frame.
//!
//! Two detectors share one output contract (a per-subcarrier joint
//! distribution over `(x_A[m], x_B[m])`):
//!
//! * ACA-FGD — an adaptive channel-aware factor-graph detector. Each
//!   subcarrier observation `y[m]` becomes a factor over the joint
//!   symbols in the band `m - D^m ..= m + D^m`, with the depth profile
//!   chosen from the channel's banded energy concentration. Messages
//!   are exchanged by sum-product sweeps.
//! * SM-LMMSE — a closed-form linear detector over the superimposed
//!   statistic `x = x_A + x_B`, with per-subcarrier Gaussian soft
//!   output conditioned on the joint hypothesis.
//!
//! Both are pure functions of their inputs; frames can be processed
//! concurrently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{depth_profile, ChannelMatrix};
use crate::codec::{normalize4, Constellation, JointDist};
use crate::error::{Error, Result};

/// A received frequency-domain frame. `noise_variance` is the total
/// variance of the complex noise sample per subcarrier (not
/// per real dimension); it is clamped below at 1e-12.
#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    pub y: Vec<Complex64>,
    pub noise_variance: f64,
}

impl ReceivedFrame {
    pub fn new(y: Vec<Complex64>, noise_variance: f64) -> Result<Self> {
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParam {
                name: "y",
                reason: "non-finite received sample".into(),
            });
        }
        if !noise_variance.is_finite() || noise_variance < 0.0 {
            return Err(Error::InvalidParam {
                name: "noise_variance",
                reason: format!("must be finite and nonnegative, got {noise_variance}"),
            });
        }
        Ok(Self {
            y,
            noise_variance: noise_variance.max(1e-12),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Per-subcarrier joint distribution over `(x_A[m], x_B[m])`.
pub type JointDistribution = JointDist;

/// Gaussian likelihood of the observation `y_m` given the joint symbol
/// assignment on the band `scope_start .. scope_start + x_a.len()`:
/// `exp(-|y_m - sum_k (H_A[m,k] x_a + H_B[m,k] x_b)|^2 / noise_var)`.
pub fn factor_likelihood(
    y_m: Complex64,
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    m: usize,
    scope_start: usize,
    x_a: &[Complex64],
    x_b: &[Complex64],
    noise_var: f64,
) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (off, (sa, sb)) in x_a.iter().zip(x_b).enumerate() {
        let k = scope_start + off;
        sum += h_a.get(m, k) * sa + h_b.get(m, k) * sb;
    }
    (-(y_m - sum).norm_sqr() / noise_var).exp()
}

/// Largest band depth honored by the factor-graph detector. The
/// per-factor table grows as `4^(2D+1)`, so unbounded adaptive depths
/// (rare subcarriers can request 10+) would be intractable; the clamp
/// matches the exponential-complexity regime the detector is meant for.
pub const MAX_FACTOR_DEPTH: usize = 3;

/// Factor-graph detector state for one frame. The per-factor likelihood
/// tables depend only on `y`, the channels, and the noise variance, so
/// they are built once and reused across outer receiver iterations.
#[derive(Debug, Clone)]
pub struct AcaFgdDetector {
    n: usize,
    /// Inclusive scope `(start, end)` of each factor.
    scopes: Vec<(usize, usize)>,
    /// Per-factor likelihood table indexed by the joint assignment of
    /// its scope (base-4 digits, lowest digit = first scope position),
    /// max-normalized.
    tables: Vec<Vec<f64>>,
    /// Factors covering each variable.
    var_factors: Vec<Vec<usize>>,
    depth_profile: Vec<usize>,
}

impl AcaFgdDetector {
    /// Builds the detector with the adaptive depth profile selected
    /// from the banded energy-concentration rule at threshold `eta`.
    pub fn new(
        frame: &ReceivedFrame,
        h_a: &ChannelMatrix,
        h_b: &ChannelMatrix,
        eta: f64,
        constellation: &Constellation,
    ) -> Result<Self> {
        let profile: Vec<usize> = depth_profile(h_a, h_b, eta)?
            .into_iter()
            .map(|d| d.min(MAX_FACTOR_DEPTH))
            .collect();
        Self::with_depth_profile(frame, h_a, h_b, &profile, constellation)
    }

    /// Builds the detector with an explicit depth profile (used by the
    /// fixed-depth baseline scheme and by tests).
    pub fn with_depth_profile(
        frame: &ReceivedFrame,
        h_a: &ChannelMatrix,
        h_b: &ChannelMatrix,
        profile: &[usize],
        constellation: &Constellation,
    ) -> Result<Self> {
        let n = frame.len();
        for (name, dim) in [("H_A", h_a.size()), ("H_B", h_b.size()), ("profile", profile.len())] {
            if dim != n {
                return Err(Error::Dimension {
                    what: name,
                    expected: n,
                    got: dim,
                });
            }
        }
        if constellation.bits_per_symbol() != 1 {
            return Err(Error::InvalidParam {
                name: "bits_per_symbol",
                reason: "detector supports Q = 1 only".into(),
            });
        }
        if let Some(&d) = profile.iter().find(|&&d| d > MAX_FACTOR_DEPTH) {
            return Err(Error::InvalidParam {
                name: "depth_profile",
                reason: format!("depth {d} exceeds the maximum of {MAX_FACTOR_DEPTH}"),
            });
        }
        let mut scopes = Vec::with_capacity(n);
        let mut tables = Vec::with_capacity(n);
        let mut var_factors = vec![Vec::new(); n];
        for m in 0..n {
            let d = profile[m];
            let start = m.saturating_sub(d);
            let end = (m + d).min(n - 1);
            scopes.push((start, end));
            for k in start..=end {
                var_factors[k].push(m);
            }
            let width = end - start + 1;
            // contribution of each scope position per joint state
            let mut contrib = Vec::with_capacity(width);
            for k in start..=end {
                let mut c = [Complex64::new(0.0, 0.0); 4];
                for (i, slot) in c.iter_mut().enumerate() {
                    let (sa, sb) = constellation.joint_pair(i);
                    *slot = h_a.get(m, k) * sa + h_b.get(m, k) * sb;
                }
                contrib.push(c);
            }
            let size = 1usize << (2 * width);
            let mut neg_d2 = Vec::with_capacity(size);
            let mut best = f64::NEG_INFINITY;
            for a in 0..size {
                let mut sum = Complex64::new(0.0, 0.0);
                for (j, c) in contrib.iter().enumerate() {
                    sum += c[(a >> (2 * j)) & 3];
                }
                let v = -(frame.y[m] - sum).norm_sqr() / frame.noise_variance;
                best = best.max(v);
                neg_d2.push(v);
            }
            // max-subtraction keeps the exponentials in range
            tables.push(neg_d2.into_iter().map(|v| (v - best).exp()).collect());
        }
        Ok(Self {
            n,
            scopes,
            tables,
            var_factors,
            depth_profile: profile.to_vec(),
        })
    }

    pub fn depth_profile(&self) -> &[usize] {
        &self.depth_profile
    }

    /// Runs `sweeps` rounds of variable-to-factor and factor-to-variable
    /// message passing starting from the given prior, and returns the
    /// per-subcarrier output `prior * product of factor messages`.
    pub fn detect(&self, prior: &JointDistribution, sweeps: usize) -> Result<JointDistribution> {
        if prior.len() != self.n {
            return Err(Error::Dimension {
                what: "detector prior",
                expected: self.n,
                got: prior.len(),
            });
        }
        if sweeps == 0 {
            return Err(Error::InvalidParam {
                name: "sweeps",
                reason: "must be at least 1".into(),
            });
        }
        let prior = prior.validated()?;
        // factor->variable messages, indexed [factor][position in scope]
        let mut mu: Vec<Vec<[f64; 4]>> = self
            .scopes
            .iter()
            .map(|&(s, e)| vec![[0.25; 4]; e - s + 1])
            .collect();
        for _ in 0..sweeps {
            for (m, &(start, end)) in self.scopes.iter().enumerate() {
                let width = end - start + 1;
                // incoming variable->factor messages (leave-one-out of mu)
                let mut q = vec![[0.0f64; 4]; width];
                for (j, qv) in q.iter_mut().enumerate() {
                    let k = start + j;
                    let mut acc = prior.0[k];
                    for &f in &self.var_factors[k] {
                        if f != m {
                            let pos = k - self.scopes[f].0;
                            for s in 0..4 {
                                acc[s] *= mu[f][pos][s];
                            }
                        }
                    }
                    normalize4(&mut acc);
                    *qv = acc;
                }
                let mut out = vec![[0.0f64; 4]; width];
                let table = &self.tables[m];
                for (a, &t) in table.iter().enumerate() {
                    if t == 0.0 {
                        continue;
                    }
                    let mut w = t;
                    for (j, qv) in q.iter().enumerate() {
                        w *= qv[(a >> (2 * j)) & 3];
                    }
                    if w == 0.0 {
                        continue;
                    }
                    for (j, qv) in q.iter().enumerate() {
                        let digit = (a >> (2 * j)) & 3;
                        out[j][digit] += w / qv[digit];
                    }
                }
                for (j, o) in out.iter_mut().enumerate() {
                    normalize4(o);
                    mu[m][j] = *o;
                }
            }
        }
        let mut result = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let mut p = prior.0[k];
            for &f in &self.var_factors[k] {
                let pos = k - self.scopes[f].0;
                for s in 0..4 {
                    p[s] *= mu[f][pos][s];
                }
            }
            normalize4(&mut p);
            result.push(p);
        }
        Ok(JointDist(result))
    }
}

/// One-shot adaptive factor-graph detection (depth selection at
/// threshold `eta`, then `sweeps` message-passing rounds).
pub fn aca_fgd_detect(
    frame: &ReceivedFrame,
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    prior: &JointDistribution,
    eta: f64,
    sweeps: usize,
) -> Result<JointDistribution> {
    AcaFgdDetector::new(frame, h_a, h_b, eta, &Constellation::bpsk())?.detect(prior, sweeps)
}

/// Intermediate quantities of one SM-LMMSE evaluation, exposed for
/// inspection and testing.
#[derive(Debug, Clone)]
pub struct LmmseWorkspace {
    pub xbar_a: DVector<Complex64>,
    pub xbar_b: DVector<Complex64>,
    pub v_a: DVector<f64>,
    pub v_b: DVector<f64>,
    pub s_a: DVector<Complex64>,
    pub s_b: DVector<Complex64>,
    pub coeff: DMatrix<Complex64>,
    pub xhat: DVector<Complex64>,
    /// Conditional mean per joint hypothesis.
    pub mu_x: Vec<DVector<Complex64>>,
    /// Per-subcarrier conditional variance (hypothesis-independent
    /// under the superimposed model), floored at 1e-12.
    pub sigma_x2: DVector<f64>,
}

fn to_dmatrix(h: &ChannelMatrix) -> DMatrix<Complex64> {
    let n = h.size();
    DMatrix::from_fn(n, n, |r, c| h.get(r, c))
}

/// Runs the superimposed-model LMMSE estimator and returns its
/// workspace. Per-user prior means and variances come from
/// marginalizing the joint prior.
pub fn sm_lmmse_workspace(
    frame: &ReceivedFrame,
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    prior: &JointDistribution,
    constellation: &Constellation,
) -> Result<LmmseWorkspace> {
    let n = frame.len();
    for (name, dim) in [("H_A", h_a.size()), ("H_B", h_b.size()), ("prior", prior.len())] {
        if dim != n {
            return Err(Error::Dimension {
                what: name,
                expected: n,
                got: dim,
            });
        }
    }
    if constellation.bits_per_symbol() != 1 {
        return Err(Error::InvalidParam {
            name: "bits_per_symbol",
            reason: "detector supports Q = 1 only".into(),
        });
    }
    let prior = prior.validated()?;
    let pts = constellation.points();
    let mut xbar_a = DVector::zeros(n);
    let mut xbar_b = DVector::zeros(n);
    let mut v_a = DVector::zeros(n);
    let mut v_b = DVector::zeros(n);
    for k in 0..n {
        let p = &prior.0[k];
        // per-user marginals of the joint prior
        let pa = [p[0] + p[1], p[2] + p[3]];
        let pb = [p[0] + p[2], p[1] + p[3]];
        let ma = pts[0] * pa[0] + pts[1] * pa[1];
        let mb = pts[0] * pb[0] + pts[1] * pb[1];
        xbar_a[k] = ma;
        xbar_b[k] = mb;
        v_a[k] = pa[0] * (pts[0] - ma).norm_sqr() + pa[1] * (pts[1] - ma).norm_sqr();
        v_b[k] = pb[0] * (pts[0] - mb).norm_sqr() + pb[1] * (pts[1] - mb).norm_sqr();
    }
    let ha = to_dmatrix(h_a);
    let hb = to_dmatrix(h_b);
    let s_a = DVector::from_fn(n, |k, _| h_a.get(k, k));
    let s_b = DVector::from_fn(n, |k, _| h_b.get(k, k));
    let sigma2 = frame.noise_variance;
    // P_u = H_u V_u H_u^H (columns of H_u scaled by v_u)
    let scale_cols = |h: &DMatrix<Complex64>, v: &DVector<f64>| {
        let mut out = h.clone();
        for c in 0..n {
            let f = Complex64::new(v[c], 0.0);
            for r in 0..n {
                out[(r, c)] *= f;
            }
        }
        out
    };
    let p_a = scale_cols(&ha, &v_a) * ha.adjoint();
    let p_b = scale_cols(&hb, &v_b) * hb.adjoint();
    let mut k_mat = &p_a + &p_b;
    for m in 0..n {
        let diag = s_a[m].norm_sqr() * (1.0 - v_a[m]) + s_b[m].norm_sqr() * (1.0 - v_b[m]);
        k_mat[(m, m)] += Complex64::new(diag + sigma2, 0.0);
    }
    let k_inv = k_mat
        .lu()
        .try_inverse()
        .ok_or(Error::SingularSystem { sigma2 })?;
    // C = (S_A^H + S_B^H) K^{-1}: row m scaled by conj(s_A + s_B)[m]
    let mut coeff = k_inv;
    for r in 0..n {
        let f = (s_a[r] + s_b[r]).conj();
        for c in 0..n {
            coeff[(r, c)] *= f;
        }
    }
    // residual y - sum_u (H_u - S_u) xbar_u
    let mut resid = DVector::from_fn(n, |m, _| frame.y[m]);
    resid -= &ha * &xbar_a - DVector::from_fn(n, |m, _| s_a[m] * xbar_a[m]);
    resid -= &hb * &xbar_b - DVector::from_fn(n, |m, _| s_b[m] * xbar_b[m]);
    let xhat = &coeff * resid;
    // conditional covariance: C (sigma^2 I + sum_u H_u V_u H_u^H - S_u V_u S_u^H) C^H
    let mut m_mat = &p_a + &p_b;
    for m in 0..n {
        let diag = sigma2 - s_a[m].norm_sqr() * v_a[m] - s_b[m].norm_sqr() * v_b[m];
        m_mat[(m, m)] += Complex64::new(diag, 0.0);
    }
    let t = &coeff * m_mat;
    let sigma_x2 = DVector::from_fn(n, |m, _| {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..n {
            acc += t[(m, c)] * coeff[(m, c)].conj();
        }
        acc.re.max(1e-12)
    });
    // mu_x[i] = C (l_A s_A + l_B s_B)
    let ca = &coeff * &s_a;
    let cb = &coeff * &s_b;
    let mu_x = (0..constellation.joint_size())
        .map(|i| {
            let (la, lb) = constellation.joint_pair(i);
            DVector::from_fn(n, |m, _| la * ca[m] + lb * cb[m])
        })
        .collect();
    Ok(LmmseWorkspace {
        xbar_a,
        xbar_b,
        v_a,
        v_b,
        s_a,
        s_b,
        coeff,
        xhat,
        mu_x,
        sigma_x2,
    })
}

/// Superimposed-model LMMSE detection: per subcarrier, the output over
/// joint hypotheses is `exp(-|mu_x[i][m] - xhat[m]|^2 / sigma_x2[m])`,
/// normalized.
pub fn sm_lmmse_detect(
    frame: &ReceivedFrame,
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    prior: &JointDistribution,
) -> Result<JointDistribution> {
    let constellation = Constellation::bpsk();
    let ws = sm_lmmse_workspace(frame, h_a, h_b, prior, &constellation)?;
    let n = frame.len();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let mut logp = [0.0f64; 4];
        let mut best = f64::NEG_INFINITY;
        for (i, lp) in logp.iter_mut().enumerate() {
            *lp = -(ws.mu_x[i][m] - ws.xhat[m]).norm_sqr() / ws.sigma_x2[m];
            best = best.max(*lp);
        }
        let mut p = [0.0f64; 4];
        for i in 0..4 {
            p[i] = (logp[i] - best).exp();
        }
        normalize4(&mut p);
        out.push(p);
    }
    Ok(JointDist(out))
}
