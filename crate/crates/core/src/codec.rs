//! QC-LDPC code construction, encoding, interleaving, symbol mapping,
//! and joint decoding of superimposed codewords.
//!
//! The relay never decodes the two end-node codewords separately:
//! because the code is linear, the XOR of two codewords is again a
//! codeword, and the decoder runs message passing over joint bit pairs
//! `(c_A[i], c_B[i])`. Each variable node carries a 4-state
//! distribution ordered `{(0,0), (0,1), (1,0), (1,1)}` (index
//! `2*a + b`), and each check node enforces even parity of the A-bits
//! and of the B-bits among its neighbors.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Probability floor applied to message and distribution entries.
pub const PROB_FLOOR: f64 = 1e-30;

/// Per-position probability 4-vectors over the joint states
/// `{(0,0), (0,1), (1,0), (1,1)}`. Used for bit-domain priors and
/// posteriors as well as symbol-domain (per-subcarrier) distributions,
/// which coincide position-wise at Q = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist(pub Vec<[f64; 4]>);

impl JointDist {
    pub fn uniform(len: usize) -> Self {
        Self(vec![[0.25; 4]; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks nonnegative, finite, normalizable entries and returns the
    /// renormalized distribution.
    pub fn validated(&self) -> Result<Self> {
        let mut out = self.clone();
        for (i, p) in out.0.iter_mut().enumerate() {
            let mut sum = 0.0;
            for &x in p.iter() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidDistribution {
                        position: i,
                        reason: format!("entry {x} is negative or non-finite"),
                    });
                }
                sum += x;
            }
            if sum <= 0.0 {
                return Err(Error::InvalidDistribution {
                    position: i,
                    reason: "all-zero probability vector".into(),
                });
            }
            for x in p.iter_mut() {
                *x /= sum;
            }
        }
        Ok(out)
    }

    /// Hard decision per position via the PNC mapping rule.
    pub fn pnc_hard_decision(&self) -> Vec<u8> {
        self.0.iter().map(pnc_map).collect()
    }
}

/// Normalizes a 4-vector in place with the numerical floor.
#[inline]
pub(crate) fn normalize4(p: &mut [f64; 4]) {
    let mut sum = 0.0;
    for x in p.iter_mut() {
        if !x.is_finite() || *x < PROB_FLOOR {
            *x = PROB_FLOOR;
        }
        sum += *x;
    }
    for x in p.iter_mut() {
        *x /= sum;
    }
}

/// PNC mapping of a joint posterior 4-vector to the network-coded bit:
/// 1 iff the argmax state is `(0,1)` or `(1,0)`; ties break toward the
/// lowest state index.
pub fn pnc_map(p: &[f64; 4]) -> u8 {
    let mut best = 0usize;
    for i in 1..4 {
        if p[i] > p[best] {
            best = i;
        }
    }
    u8::from(best == 1 || best == 2)
}

// ---------------------------------------------------------------------------
// LDPC code
// ---------------------------------------------------------------------------

/// A binary LDPC code given by its sparse parity-check matrix, with a
/// systematic-form encoder derived by Gaussian elimination.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    block_length: usize,
    info_length: usize,
    seed: u64,
    /// Sorted column indices per check row.
    check_rows: Vec<Vec<usize>>,
    /// Check indices per variable column.
    var_cols: Vec<Vec<usize>>,
    /// Variable positions that carry information bits (non-pivot columns).
    info_positions: Vec<usize>,
    /// For each parity position: the info positions it XORs.
    parity_deps: Vec<(usize, Vec<usize>)>,
}

impl LdpcCode {
    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn info_length(&self) -> usize {
        self.info_length
    }

    pub fn num_checks(&self) -> usize {
        self.block_length - self.info_length
    }

    pub fn rate(&self) -> f64 {
        self.info_length as f64 / self.block_length as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn check_rows(&self) -> &[Vec<usize>] {
        &self.check_rows
    }

    pub fn var_cols(&self) -> &[Vec<usize>] {
        &self.var_cols
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// Builds a code from an explicit parity-check row list. Fails if
    /// the matrix does not have full rank `L - K` over GF(2).
    pub fn from_parity_check(
        check_rows: Vec<Vec<usize>>,
        block_length: usize,
        info_length: usize,
        seed: u64,
    ) -> Result<Self> {
        let num_checks = block_length
            .checked_sub(info_length)
            .filter(|&m| m > 0 && check_rows.len() == m)
            .ok_or(Error::Dimension {
                what: "parity-check rows",
                expected: block_length.saturating_sub(info_length),
                got: check_rows.len(),
            })?;
        let mut check_rows = check_rows;
        for row in &mut check_rows {
            row.sort_unstable();
            row.dedup();
            if row.iter().any(|&c| c >= block_length) {
                return Err(Error::InvalidParam {
                    name: "check_rows",
                    reason: "column index out of range".into(),
                });
            }
        }
        let (info_positions, parity_deps) =
            systematic_form(&check_rows, block_length, num_checks)?;
        let mut var_cols = vec![Vec::new(); block_length];
        for (r, row) in check_rows.iter().enumerate() {
            for &c in row {
                var_cols[c].push(r);
            }
        }
        Ok(Self {
            block_length,
            info_length,
            seed,
            check_rows,
            var_cols,
            info_positions,
            parity_deps,
        })
    }

    /// True if some pair of checks shares two or more variables.
    pub fn has_four_cycle(&self) -> bool {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        for col in &self.var_cols {
            for i in 0..col.len() {
                for j in i + 1..col.len() {
                    if !seen.insert((col[i], col[j])) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Gaussian elimination over GF(2) to reduced row-echelon form; returns
/// the non-pivot (information) positions and, per pivot position, the
/// info positions whose XOR gives that parity bit.
fn systematic_form(
    check_rows: &[Vec<usize>],
    block_length: usize,
    num_checks: usize,
) -> Result<(Vec<usize>, Vec<(usize, Vec<usize>)>)> {
    let words = block_length.div_ceil(64);
    let mut rows: Vec<Vec<u64>> = check_rows
        .iter()
        .map(|r| {
            let mut w = vec![0u64; words];
            for &c in r {
                w[c / 64] |= 1u64 << (c % 64);
            }
            w
        })
        .collect();
    let get = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..block_length {
        if r == num_checks {
            break;
        }
        if let Some(sel) = (r..num_checks).find(|&i| get(&rows[i], c)) {
            rows.swap(r, sel);
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && get(row, c) {
                    for (w, &p) in row.iter_mut().zip(&pivot_row) {
                        *w ^= p;
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
        }
    }
    if r != num_checks {
        return Err(Error::CodeConstruction {
            attempts: 0,
            reason: format!("parity-check matrix rank {r} < {num_checks}"),
        });
    }
    let pivot_set: HashSet<usize> = pivot_cols.iter().copied().collect();
    let info_positions: Vec<usize> =
        (0..block_length).filter(|c| !pivot_set.contains(c)).collect();
    let parity_deps = pivot_cols
        .iter()
        .enumerate()
        .map(|(ri, &pc)| {
            let deps = info_positions
                .iter()
                .copied()
                .filter(|&c| get(&rows[ri], c))
                .collect();
            (pc, deps)
        })
        .collect();
    Ok((info_positions, parity_deps))
}

/// Deterministic QC-LDPC construction: an irregular base matrix (mix of
/// weight-2 and weight-3 columns) lifted by random circulant shifts,
/// retried until the expanded matrix is 4-cycle-free and full rank.
pub fn build_qc_ldpc(block_length: usize, info_length: usize, seed: u64) -> Result<LdpcCode> {
    if info_length == 0 || info_length >= block_length {
        return Err(Error::InvalidParam {
            name: "info_length",
            reason: format!("need 0 < K < L, got K={info_length}, L={block_length}"),
        });
    }
    let num_checks = block_length - info_length;
    let z = lifting_size(block_length, num_checks);
    let nb = block_length / z;
    let mb = num_checks / z;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    const MAX_ATTEMPTS: usize = 200;
    let mut last = String::new();
    for _attempt in 0..MAX_ATTEMPTS {
        let rows = lift_random_base(&mut rng, nb, mb, z);
        match LdpcCode::from_parity_check(rows, block_length, info_length, seed) {
            Ok(code) => {
                if code.has_four_cycle() {
                    last = "lifted matrix contains a 4-cycle".into();
                    continue;
                }
                if code.check_rows().iter().any(|r| r.len() < 2) {
                    last = "check row of weight < 2".into();
                    continue;
                }
                return Ok(code);
            }
            Err(Error::CodeConstruction { reason, .. }) => {
                last = reason;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::CodeConstruction {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

/// Largest divisor of gcd(L, L-K) keeping at least 12 base columns
/// (falls back toward 1 for small or awkward sizes).
fn lifting_size(block_length: usize, num_checks: usize) -> usize {
    let g = gcd(block_length, num_checks);
    let mut best = 1;
    let mut d = 1;
    while d * d <= g {
        if g % d == 0 {
            for z in [d, g / d] {
                if block_length / z >= 12 && z > best {
                    best = z;
                }
            }
        }
        d += 1;
    }
    best
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// One lifting attempt: choose base-column supports by lowest-degree
/// rows, draw a shift per circulant, expand to full rows.
fn lift_random_base<R: Rng>(rng: &mut R, nb: usize, mb: usize, z: usize) -> Vec<Vec<usize>> {
    let heavy_cols = (2 * nb).div_ceil(3);
    let mut row_degree = vec![0usize; mb];
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); mb * z];
    for j in 0..nb {
        let w = if j < heavy_cols { 3 } else { 2 }.min(mb);
        let mut order: Vec<usize> = (0..mb).collect();
        // lowest current degree first, random ties
        for i in (1..order.len()).rev() {
            let k = rng.gen_range(0..=i);
            order.swap(i, k);
        }
        order.sort_by_key(|&i| row_degree[i]);
        for &bi in order.iter().take(w) {
            row_degree[bi] += 1;
            let shift = rng.gen_range(0..z);
            for e in 0..z {
                let row = bi * z + e;
                let col = j * z + (e + shift) % z;
                rows[row].push(col);
            }
        }
    }
    rows
}

/// Systematic encode: info bits at the information positions, parity
/// bits solved from the reduced parity-check system.
pub fn encode(code: &LdpcCode, info_bits: &[u8]) -> Result<Vec<u8>> {
    if info_bits.len() != code.info_length {
        return Err(Error::Dimension {
            what: "info bits",
            expected: code.info_length,
            got: info_bits.len(),
        });
    }
    let mut c = vec![0u8; code.block_length];
    for (&pos, &b) in code.info_positions.iter().zip(info_bits) {
        c[pos] = b & 1;
    }
    for (pivot, deps) in &code.parity_deps {
        let mut acc = 0u8;
        for &d in deps {
            acc ^= c[d];
        }
        c[*pivot] = acc;
    }
    Ok(c)
}

/// Syndrome `s = H c` over GF(2); `s[m] = 1` iff check `m` is violated.
pub fn compute_syndrome(code: &LdpcCode, word: &[u8]) -> Result<Vec<u8>> {
    if word.len() != code.block_length {
        return Err(Error::Dimension {
            what: "codeword",
            expected: code.block_length,
            got: word.len(),
        });
    }
    Ok(code
        .check_rows
        .iter()
        .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (word[c] & 1)))
        .collect())
}

// ---------------------------------------------------------------------------
// Interleaver
// ---------------------------------------------------------------------------

/// Seeded Fisher-Yates permutation; `deinterleave(interleave(x)) == x`.
#[derive(Debug, Clone)]
pub struct Interleaver {
    perm: Vec<usize>,
    inv: Vec<usize>,
    seed: u64,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..len).collect();
        for i in (1..len).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let mut inv = vec![0usize; len];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { perm, inv, seed }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Position `j` of the output carries input position `perm[j]`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Clone>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.perm.len() {
            return Err(Error::Dimension {
                what: "interleaver input",
                expected: self.perm.len(),
                got: input.len(),
            });
        }
        Ok(self.perm.iter().map(|&p| input[p].clone()).collect())
    }

    pub fn deinterleave<T: Clone>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.perm.len() {
            return Err(Error::Dimension {
                what: "deinterleaver input",
                expected: self.perm.len(),
                got: input.len(),
            });
        }
        Ok(self.inv.iter().map(|&p| input[p].clone()).collect())
    }
}

// ---------------------------------------------------------------------------
// Constellation and symbol mapping
// ---------------------------------------------------------------------------

/// Per-user constellation with unit average symbol energy. The joint
/// alphabet enumerates `(point_A, point_B)` pairs with index
/// `2^Q * i_A + i_B`; at Q = 1 this is `{(0,0),(0,1),(1,0),(1,1)}` in
/// bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    bits_per_symbol: u32,
    points: Vec<Complex64>,
}

impl Constellation {
    /// BPSK: bit 0 maps to +1, bit 1 maps to -1.
    pub fn bpsk() -> Self {
        Self {
            bits_per_symbol: 1,
            points: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn joint_size(&self) -> usize {
        self.points.len() * self.points.len()
    }

    /// Symbol pair for joint hypothesis `i = |points| * i_A + i_B`.
    pub fn joint_pair(&self, i: usize) -> (Complex64, Complex64) {
        let n = self.points.len();
        (self.points[i / n], self.points[i % n])
    }

    /// Superimposed value for joint hypothesis `i`.
    pub fn joint_sum(&self, i: usize) -> Complex64 {
        let (a, b) = self.joint_pair(i);
        a + b
    }
}

/// Maps a bit vector to constellation symbols. Only Q = 1 is supported.
pub fn map_symbols(bits: &[u8], constellation: &Constellation) -> Result<Vec<Complex64>> {
    if constellation.bits_per_symbol != 1 {
        return Err(Error::InvalidParam {
            name: "bits_per_symbol",
            reason: format!(
                "only Q = 1 mapping is supported, got Q = {}",
                constellation.bits_per_symbol
            ),
        });
    }
    Ok(bits
        .iter()
        .map(|&b| constellation.points[(b & 1) as usize])
        .collect())
}

// ---------------------------------------------------------------------------
// Joint G-SPA decoding
// ---------------------------------------------------------------------------

/// Result of a joint decode: posterior joint bit distributions, the
/// PNC-mapped hard decision, its syndrome, and convergence info.
#[derive(Debug, Clone)]
pub struct GspaOutput {
    pub posterior: JointDist,
    pub network_codeword: Vec<u8>,
    pub syndrome: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// 4-point Walsh-Hadamard transform over the group Z2 x Z2 (own
/// inverse up to a factor 4). Parity convolution at a check node is a
/// pointwise product in this domain.
#[inline]
fn wht4(p: &[f64; 4]) -> [f64; 4] {
    let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
    [a + b + c + d, a - b + c - d, a + b - c - d, a - b - c + d]
}

/// Joint sum-product decoding over bit pairs with a flooding schedule.
/// Each check enforces even parity of both the A-components and the
/// B-components of its neighbors. Stops early once the PNC-mapped hard
/// decision has an all-zero syndrome.
pub fn joint_gspa_decode(
    code: &LdpcCode,
    prior: &JointDist,
    max_iters: usize,
) -> Result<GspaOutput> {
    joint_gspa_decode_with(code, prior, max_iters, true)
}

/// Like [`joint_gspa_decode`], with the early syndrome-based stop made
/// optional so callers can force a fixed number of flooding iterations.
pub fn joint_gspa_decode_with(
    code: &LdpcCode,
    prior: &JointDist,
    max_iters: usize,
    early_exit: bool,
) -> Result<GspaOutput> {
    if prior.len() != code.block_length {
        return Err(Error::Dimension {
            what: "decoder prior",
            expected: code.block_length,
            got: prior.len(),
        });
    }
    if max_iters == 0 {
        return Err(Error::InvalidParam {
            name: "max_iters",
            reason: "must be at least 1".into(),
        });
    }
    let prior = prior.validated()?;
    let edges: Vec<(usize, usize)> = code
        .check_rows
        .iter()
        .enumerate()
        .flat_map(|(chk, row)| row.iter().map(move |&v| (chk, v)))
        .collect();
    // edge indices grouped per check and per variable
    let mut check_edges: Vec<Vec<usize>> = vec![Vec::new(); code.num_checks()];
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); code.block_length];
    for (e, &(chk, v)) in edges.iter().enumerate() {
        check_edges[chk].push(e);
        var_edges[v].push(e);
    }
    let mut msg_vc: Vec<[f64; 4]> = edges.iter().map(|&(_, v)| prior.0[v]).collect();
    let mut msg_cv: Vec<[f64; 4]> = vec![[0.25; 4]; edges.len()];

    let mut posterior = prior.clone();
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..max_iters {
        iterations += 1;
        // check update: leave-one-out product in the WHT domain
        for ce in &check_edges {
            let t: Vec<[f64; 4]> = ce.iter().map(|&e| wht4(&msg_vc[e])).collect();
            let deg = ce.len();
            let mut prefix = vec![[1.0f64; 4]; deg + 1];
            for i in 0..deg {
                for s in 0..4 {
                    prefix[i + 1][s] = prefix[i][s] * t[i][s];
                }
            }
            let mut suffix = [1.0f64; 4];
            for i in (0..deg).rev() {
                let mut prod = [0.0f64; 4];
                for s in 0..4 {
                    prod[s] = prefix[i][s] * suffix[s];
                }
                let mut out = wht4(&prod);
                for x in out.iter_mut() {
                    if *x < 0.0 {
                        *x = 0.0;
                    }
                }
                normalize4(&mut out);
                msg_cv[ce[i]] = out;
                for s in 0..4 {
                    suffix[s] *= t[i][s];
                }
            }
        }
        // variable update and posterior
        for (v, ve) in var_edges.iter().enumerate() {
            let deg = ve.len();
            let mut prefix = vec![prior.0[v]; deg + 1];
            for i in 0..deg {
                for s in 0..4 {
                    prefix[i + 1][s] = prefix[i][s] * msg_cv[ve[i]][s];
                }
            }
            let mut suffix = [1.0f64; 4];
            for i in (0..deg).rev() {
                let mut out = [0.0f64; 4];
                for s in 0..4 {
                    out[s] = prefix[i][s] * suffix[s];
                }
                normalize4(&mut out);
                msg_vc[ve[i]] = out;
                for s in 0..4 {
                    suffix[s] *= msg_cv[ve[i]][s];
                }
            }
            let mut post = prefix[deg];
            normalize4(&mut post);
            posterior.0[v] = post;
        }
        let hard = posterior.pnc_hard_decision();
        let syndrome = compute_syndrome(code, &hard)?;
        if syndrome.iter().all(|&s| s == 0) {
            converged = true;
            if early_exit {
                break;
            }
        }
    }
    let network_codeword = posterior.pnc_hard_decision();
    let syndrome = compute_syndrome(code, &network_codeword)?;
    Ok(GspaOutput {
        posterior,
        network_codeword,
        syndrome,
        converged,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// Alist-style serialization
// ---------------------------------------------------------------------------

/// Writes the parity-check matrix in alist-style text with a
/// `# pnc-ldpc L K seed` header line.
pub fn write_alist<W: Write>(code: &LdpcCode, w: &mut W) -> Result<()> {
    writeln!(
        w,
        "# pnc-ldpc {} {} {}",
        code.block_length, code.info_length, code.seed
    )?;
    writeln!(w, "{} {}", code.block_length, code.num_checks())?;
    let max_col = code.var_cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = code.check_rows.iter().map(Vec::len).max().unwrap_or(0);
    writeln!(w, "{max_col} {max_row}")?;
    let join = |v: Vec<String>| v.join(" ");
    writeln!(
        w,
        "{}",
        join(code.var_cols.iter().map(|c| c.len().to_string()).collect())
    )?;
    writeln!(
        w,
        "{}",
        join(code.check_rows.iter().map(|r| r.len().to_string()).collect())
    )?;
    for col in &code.var_cols {
        writeln!(
            w,
            "{}",
            join(col.iter().map(|&r| (r + 1).to_string()).collect())
        )?;
    }
    for row in &code.check_rows {
        writeln!(
            w,
            "{}",
            join(row.iter().map(|&c| (c + 1).to_string()).collect())
        )?;
    }
    Ok(())
}

/// Reads a code previously written by [`write_alist`].
pub fn read_alist<R: BufRead>(r: &mut R) -> Result<LdpcCode> {
    let bad = |reason: &str| Error::Format {
        format: "alist",
        reason: reason.into(),
    };
    let mut lines = r.lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| bad("unexpected end of file"))
    };
    let header = next_line()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "#" || parts[1] != "pnc-ldpc" {
        return Err(bad("missing `# pnc-ldpc L K seed` header"));
    }
    let parse = |s: &str| s.parse::<u64>().map_err(|_| bad("bad integer"));
    let l = parse(parts[2])? as usize;
    let k = parse(parts[3])? as usize;
    let seed = parse(parts[4])?;
    let dims = next_line()?;
    let d: Vec<usize> = dims
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("bad dimension")))
        .collect::<Result<_>>()?;
    if d.len() != 2 || d[0] != l || d[1] != l - k {
        return Err(bad("dimension line disagrees with header"));
    }
    let _max_degrees = next_line()?;
    let _col_degrees = next_line()?;
    let row_deg_line = next_line()?;
    let row_degs: Vec<usize> = row_deg_line
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("bad row degree")))
        .collect::<Result<_>>()?;
    if row_degs.len() != l - k {
        return Err(bad("row degree count mismatch"));
    }
    for _ in 0..l {
        let _col = next_line()?;
    }
    let mut check_rows = Vec::with_capacity(l - k);
    for deg in row_degs {
        let line = next_line()?;
        let cols: Vec<usize> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| bad("bad column index"))
                    .and_then(|v| v.checked_sub(1).ok_or_else(|| bad("zero column index")))
            })
            .collect::<Result<_>>()?;
        if cols.len() != deg {
            return Err(bad("row entry count disagrees with degree"));
        }
        check_rows.push(cols);
    }
    LdpcCode::from_parity_check(check_rows, l, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.gen_range(0..2u8)).collect()
    }

    #[test]
    fn qc_code_has_paper_rate_and_structure() {
        let code = build_qc_ldpc(336, 112, 1).unwrap();
        assert_eq!(code.block_length(), 336);
        assert_eq!(code.info_length(), 112);
        assert!((code.rate() - 1.0 / 3.0).abs() < 1e-15);
        assert!(!code.has_four_cycle());
        assert!(code.check_rows().iter().all(|r| r.len() >= 2));
        // irregular profile: both weight-2 and weight-3 columns present
        let has_w2 = code.var_cols().iter().any(|c| c.len() == 2);
        let has_w3 = code.var_cols().iter().any(|c| c.len() == 3);
        assert!(has_w2 && has_w3);
    }

    #[test]
    fn qc_code_deterministic_per_seed() {
        let a = build_qc_ldpc(336, 112, 7).unwrap();
        let b = build_qc_ldpc(336, 112, 7).unwrap();
        assert_eq!(a.check_rows(), b.check_rows());
        let c = build_qc_ldpc(336, 112, 8).unwrap();
        assert_ne!(a.check_rows(), c.check_rows());
    }

    #[test]
    fn encode_zero_and_random_syndromes() {
        let code = build_qc_ldpc(336, 112, 1).unwrap();
        let zero = encode(&code, &vec![0u8; 112]).unwrap();
        assert!(zero.iter().all(|&b| b == 0));
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..100 {
            let c = encode(&code, &random_bits(&mut rng, 112)).unwrap();
            let s = compute_syndrome(&code, &c).unwrap();
            assert!(s.iter().all(|&b| b == 0));
        }
        assert!(encode(&code, &[0u8; 10]).is_err());
    }

    #[test]
    fn codeword_xor_linearity() {
        let code = build_qc_ldpc(336, 112, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let c1 = encode(&code, &random_bits(&mut rng, 112)).unwrap();
            let c2 = encode(&code, &random_bits(&mut rng, 112)).unwrap();
            let x: Vec<u8> = c1.iter().zip(&c2).map(|(a, b)| a ^ b).collect();
            let s = compute_syndrome(&code, &x).unwrap();
            assert!(s.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn syndrome_matches_oracle_multiply_and_is_linear() {
        let code = build_qc_ldpc(336, 112, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..50 {
            let w = random_bits(&mut rng, 336);
            let s = compute_syndrome(&code, &w).unwrap();
            // independent dense GF(2) multiply
            for (m, row) in code.check_rows().iter().enumerate() {
                let mut acc = 0u8;
                for c in 0..336 {
                    if row.binary_search(&c).is_ok() {
                        acc ^= w[c];
                    }
                }
                assert_eq!(acc, s[m]);
            }
            let v = random_bits(&mut rng, 336);
            let sv = compute_syndrome(&code, &v).unwrap();
            let xw: Vec<u8> = w.iter().zip(&v).map(|(a, b)| a ^ b).collect();
            let sx = compute_syndrome(&code, &xw).unwrap();
            for m in 0..s.len() {
                assert_eq!(sx[m], s[m] ^ sv[m]);
            }
        }
    }

    #[test]
    fn flipped_bit_syndrome_is_matrix_column() {
        let code = build_qc_ldpc(336, 112, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let c = encode(&code, &random_bits(&mut rng, 112)).unwrap();
        for i in [0usize, 17, 335] {
            let mut f = c.clone();
            f[i] ^= 1;
            let s = compute_syndrome(&code, &f).unwrap();
            for (m, row) in code.check_rows().iter().enumerate() {
                let expect = u8::from(row.binary_search(&i).is_ok());
                assert_eq!(s[m], expect);
            }
        }
    }

    #[test]
    fn interleaver_roundtrip_and_bijection() {
        let il = Interleaver::new(336, 77);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let bits = random_bits(&mut rng, 336);
        let inter = il.interleave(&bits).unwrap();
        let back = il.deinterleave(&inter).unwrap();
        assert_eq!(bits, back);
        let mut sorted = il.permutation().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..336).collect::<Vec<_>>());
        assert!(il.interleave(&bits[..10]).is_err());
    }

    /// Regression fixture: the permutation for (len 16, seed 42) is
    /// stable across runs and releases.
    #[test]
    fn interleaver_stable_fixture() {
        let il = Interleaver::new(16, 42);
        let again = Interleaver::new(16, 42);
        assert_eq!(il.permutation(), again.permutation());
        assert_eq!(
            il.permutation(),
            &[6, 13, 7, 9, 11, 3, 2, 4, 14, 12, 1, 10, 0, 5, 15, 8]
        );
    }

    #[test]
    fn bpsk_mapping_convention() {
        let c = Constellation::bpsk();
        let syms = map_symbols(&[0, 1, 1, 0], &c).unwrap();
        let want = [1.0, -1.0, -1.0, 1.0];
        for (s, w) in syms.iter().zip(want) {
            assert_eq!(s.re, w);
            assert_eq!(s.im, 0.0);
        }
        // unit average energy
        let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>()
            / c.points().len() as f64;
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pnc_map_rule() {
        assert_eq!(pnc_map(&[0.1, 0.6, 0.2, 0.1]), 1);
        assert_eq!(pnc_map(&[0.7, 0.1, 0.1, 0.1]), 0);
        assert_eq!(pnc_map(&[0.1, 0.1, 0.1, 0.7]), 0);
        // tie breaks toward the lowest state index
        assert_eq!(pnc_map(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(pnc_map(&[0.1, 0.4, 0.4, 0.1]), 1);
        // invariant under positive scaling
        assert_eq!(pnc_map(&[1.0, 6.0, 2.0, 1.0]), 1);
    }

    /// A small cycle-free code used by the enumeration oracle tests.
    fn tree_code() -> LdpcCode {
        LdpcCode::from_parity_check(
            vec![vec![0, 1], vec![1, 2, 3], vec![3, 4, 5]],
            6,
            3,
            0,
        )
        .unwrap()
    }

    /// Brute-force marginal posteriors by enumerating every pair of
    /// codewords, weighting by the prior.
    fn enumerate_pair_marginals(code: &LdpcCode, prior: &JointDist) -> Vec<[f64; 4]> {
        let l = code.block_length();
        let codewords: Vec<Vec<u8>> = (0..1u32 << l)
            .map(|bits| (0..l).map(|i| ((bits >> i) & 1) as u8).collect::<Vec<u8>>())
            .filter(|w| {
                compute_syndrome(code, w)
                    .unwrap()
                    .iter()
                    .all(|&s| s == 0)
            })
            .collect();
        let mut marg = vec![[0.0f64; 4]; l];
        for ca in &codewords {
            for cb in &codewords {
                let mut wgt = 1.0;
                for i in 0..l {
                    wgt *= prior.0[i][(2 * ca[i] + cb[i]) as usize];
                }
                for i in 0..l {
                    marg[i][(2 * ca[i] + cb[i]) as usize] += wgt;
                }
            }
        }
        for p in &mut marg {
            let s: f64 = p.iter().sum();
            for x in p.iter_mut() {
                *x /= s;
            }
        }
        marg
    }

    #[test]
    fn gspa_matches_exact_enumeration_on_tree() {
        let code = tree_code();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..20 {
            let prior = JointDist(
                (0..6)
                    .map(|_| {
                        let mut p = [0.0; 4];
                        for x in p.iter_mut() {
                            *x = rng.gen_range(0.01..1.0);
                        }
                        p
                    })
                    .collect(),
            )
            .validated()
            .unwrap();
            let exact = enumerate_pair_marginals(&code, &prior);
            let out = joint_gspa_decode_with(&code, &prior, 10, false).unwrap();
            for i in 0..6 {
                for s in 0..4 {
                    assert!(
                        (out.posterior.0[i][s] - exact[i][s]).abs() < 1e-9,
                        "pos {i} state {s}: {} vs {}",
                        out.posterior.0[i][s],
                        exact[i][s]
                    );
                }
            }
        }
    }

    #[test]
    fn gspa_certainty_prior_is_fixed_point() {
        let code = tree_code();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let ca = encode(&code, &random_bits(&mut rng, 3)).unwrap();
        let cb = encode(&code, &random_bits(&mut rng, 3)).unwrap();
        let prior = JointDist(
            (0..6)
                .map(|i| {
                    let mut p = [0.0; 4];
                    p[(2 * ca[i] + cb[i]) as usize] = 1.0;
                    p
                })
                .collect(),
        );
        let out = joint_gspa_decode(&code, &prior, 50).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        let want: Vec<u8> = ca.iter().zip(&cb).map(|(a, b)| a ^ b).collect();
        assert_eq!(out.network_codeword, want);
        for i in 0..6 {
            assert!(out.posterior.0[i][(2 * ca[i] + cb[i]) as usize] > 1.0 - 1e-9);
        }
    }

    #[test]
    fn gspa_posteriors_stay_normalized_under_extreme_priors() {
        let code = build_qc_ldpc(336, 112, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let prior = JointDist(
            (0..336)
                .map(|_| {
                    let mut p = [1e-18; 4];
                    p[rng.gen_range(0..4)] = 1.0;
                    p
                })
                .collect(),
        );
        let out = joint_gspa_decode(&code, &prior, 5).unwrap();
        for p in &out.posterior.0 {
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }

    #[test]
    fn alist_roundtrip() {
        let code = build_qc_ldpc(336, 112, 5).unwrap();
        let mut buf = Vec::new();
        write_alist(&code, &mut buf).unwrap();
        let back = read_alist(&mut buf.as_slice()).unwrap();
        assert_eq!(back.block_length(), 336);
        assert_eq!(back.info_length(), 112);
        assert_eq!(back.seed(), 5);
        assert_eq!(back.check_rows(), code.check_rows());
    }
}
