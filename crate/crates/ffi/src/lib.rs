//! C ABI for the relay receiver library.
//!
//! Conventions:
//! * Every fallible function returns a [`PncStatus`]; `PNC_STATUS_OK`
//!   is zero. A human-readable description of the most recent error on
//!   the calling thread is available via [`pnc_last_error_message`].
//! * Heavy objects (the code/interleaver bundle) live behind opaque
//!   handles created by `pnc_system_new` and released by
//!   `pnc_system_free`.
//! * Complex vectors and row-major matrices are passed as separate
//!   real/imaginary `double` arrays.

use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::slice;

use pnc_relay::channel::ChannelMatrix;
use pnc_relay::codec::{build_qc_ldpc, encode, Interleaver, LdpcCode};
use pnc_relay::detect::ReceivedFrame;
use pnc_relay::receiver::{receive, ReceiverConfig, Scheme};
use pnc_relay::sim::energy_contribution_table;
use pnc_relay::channel::OfdmParams;
use pnc_relay::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    DegenerateInput = 4,
    CodeConstruction = 5,
    SingularSystem = 6,
    BadFormat = 7,
    Io = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> PncStatus {
    match err {
        Error::InvalidParam { .. } | Error::InvalidDistribution { .. } => {
            PncStatus::InvalidArgument
        }
        Error::Dimension { .. } => PncStatus::DimensionMismatch,
        Error::DegenerateInput { .. } => PncStatus::DegenerateInput,
        Error::CodeConstruction { .. } => PncStatus::CodeConstruction,
        Error::SingularSystem { .. } => PncStatus::SingularSystem,
        Error::Format { .. } => PncStatus::BadFormat,
        Error::Io(_) => PncStatus::Io,
    }
}

fn fail(err: &Error) -> PncStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn fail_null(what: &str) -> PncStatus {
    set_error(&format!("null pointer: {what}"));
    PncStatus::NullPointer
}

/// Pointer to a NUL-terminated description of the last error raised on
/// this thread. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pnc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque bundle of the LDPC code and the subcarrier interleaver.
pub struct PncSystem {
    code: LdpcCode,
    interleaver: Interleaver,
}

/// Creates a code/interleaver bundle for `block_length` coded bits and
/// `info_length` information bits. On success writes the handle to
/// `out` and returns `PNC_STATUS_OK`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pnc_system_new(
    block_length: usize,
    info_length: usize,
    code_seed: u64,
    interleaver_seed: u64,
    out: *mut *mut PncSystem,
) -> PncStatus {
    if out.is_null() {
        return fail_null("out");
    }
    match build_qc_ldpc(block_length, info_length, code_seed) {
        Ok(code) => {
            let sys = Box::new(PncSystem {
                interleaver: Interleaver::new(block_length, interleaver_seed),
                code,
            });
            unsafe { *out = Box::into_raw(sys) };
            PncStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Releases a handle created by `pnc_system_new`. `NULL` is a no-op.
///
/// # Safety
/// `sys` must be a handle returned by `pnc_system_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn pnc_system_free(sys: *mut PncSystem) {
    if !sys.is_null() {
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// Coded block length of the system.
///
/// # Safety
/// `sys` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn pnc_system_block_length(sys: *const PncSystem) -> usize {
    unsafe { sys.as_ref() }.map_or(0, |s| s.code.block_length())
}

/// Information length of the system.
///
/// # Safety
/// `sys` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn pnc_system_info_length(sys: *const PncSystem) -> usize {
    unsafe { sys.as_ref() }.map_or(0, |s| s.code.info_length())
}

/// Systematically encodes `info_bits` (length = info length) into
/// `codeword` (length = block length). Bits are one byte each, 0 or 1.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pnc_encode(
    sys: *const PncSystem,
    info_bits: *const u8,
    info_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> PncStatus {
    let Some(sys) = (unsafe { sys.as_ref() }) else {
        return fail_null("sys");
    };
    if info_bits.is_null() || codeword.is_null() {
        return fail_null("info_bits/codeword");
    }
    if codeword_len != sys.code.block_length() {
        set_error("codeword buffer length must equal the block length");
        return PncStatus::DimensionMismatch;
    }
    let info = unsafe { slice::from_raw_parts(info_bits, info_len) };
    match encode(&sys.code, info) {
        Ok(c) => {
            unsafe { slice::from_raw_parts_mut(codeword, codeword_len) }.copy_from_slice(&c);
            PncStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Detection scheme selector for [`PncReceiverConfig`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PncScheme {
    AcaFgd = 0,
    SmLmmse = 1,
    FixedD = 2,
}

/// Receiver loop configuration (C mirror of the library defaults:
/// 5 outer iterations, 3 decoding iterations, refinement on, eta 0.9,
/// reward 1, penalty 5, early exit on, 1 sweep).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PncReceiverConfig {
    pub scheme: PncScheme,
    /// Constant band depth; read only when `scheme` is `FixedD`.
    pub fixed_depth: usize,
    pub outer_iterations: usize,
    pub decode_iterations: usize,
    /// Nonzero enables soft-information refinement.
    pub refinement: u8,
    /// Nonzero enables early exit on a zero syndrome.
    pub early_exit: u8,
    pub eta: f64,
    pub reward: f64,
    pub penalty: f64,
    pub sweeps: usize,
}

/// The library-default receiver configuration.
#[no_mangle]
pub extern "C" fn pnc_receiver_config_default() -> PncReceiverConfig {
    let d = ReceiverConfig::default();
    PncReceiverConfig {
        scheme: PncScheme::AcaFgd,
        fixed_depth: 1,
        outer_iterations: d.outer_iterations,
        decode_iterations: d.decode_iterations,
        refinement: u8::from(d.refinement_enabled),
        early_exit: u8::from(d.early_exit_on_zero_syndrome),
        eta: d.eta,
        reward: d.reward,
        penalty: d.penalty,
        sweeps: d.sweeps,
    }
}

fn to_receiver_config(c: &PncReceiverConfig) -> ReceiverConfig {
    ReceiverConfig {
        scheme: match c.scheme {
            PncScheme::AcaFgd => Scheme::AcaFgd,
            PncScheme::SmLmmse => Scheme::SmLmmse,
            PncScheme::FixedD => Scheme::FixedD(c.fixed_depth),
        },
        outer_iterations: c.outer_iterations,
        decode_iterations: c.decode_iterations,
        refinement_enabled: c.refinement != 0,
        eta: c.eta,
        reward: c.reward,
        penalty: c.penalty,
        early_exit_on_zero_syndrome: c.early_exit != 0,
        sweeps: c.sweeps,
    }
}

unsafe fn complex_vec(re: *const f64, im: *const f64, len: usize) -> Vec<Complex64> {
    let re = unsafe { slice::from_raw_parts(re, len) };
    let im = unsafe { slice::from_raw_parts(im, len) };
    re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

/// Runs one relay reception. `y_*` are length-`n` vectors; `h_*` are
/// row-major `n * n` coupling matrices; `n` must equal the system's
/// block length. On success writes the network-coded hard decision to
/// `out_codeword` (length `n`), the number of violated parity checks to
/// `out_syndrome_weight`, and the outer iterations consumed to
/// `out_iterations` (either out-pointer may be `NULL`).
///
/// # Safety
/// All array pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pnc_receive(
    sys: *const PncSystem,
    y_re: *const f64,
    y_im: *const f64,
    n: usize,
    h_a_re: *const f64,
    h_a_im: *const f64,
    h_b_re: *const f64,
    h_b_im: *const f64,
    noise_variance: f64,
    config: *const PncReceiverConfig,
    out_codeword: *mut u8,
    out_syndrome_weight: *mut usize,
    out_iterations: *mut usize,
) -> PncStatus {
    let Some(sys) = (unsafe { sys.as_ref() }) else {
        return fail_null("sys");
    };
    let Some(config) = (unsafe { config.as_ref() }) else {
        return fail_null("config");
    };
    for (name, p) in [
        ("y_re", y_re),
        ("y_im", y_im),
        ("h_a_re", h_a_re),
        ("h_a_im", h_a_im),
        ("h_b_re", h_b_re),
        ("h_b_im", h_b_im),
    ] {
        if p.is_null() {
            return fail_null(name);
        }
    }
    if out_codeword.is_null() {
        return fail_null("out_codeword");
    }
    let y = unsafe { complex_vec(y_re, y_im, n) };
    let build = |re, im| -> Result<ChannelMatrix, Error> {
        ChannelMatrix::new(n, unsafe { complex_vec(re, im, n * n) })
    };
    let result = (|| -> Result<_, Error> {
        let h_a = build(h_a_re, h_a_im)?;
        let h_b = build(h_b_re, h_b_im)?;
        let frame = ReceivedFrame::new(y, noise_variance)?;
        receive(
            &frame,
            &h_a,
            &h_b,
            &sys.code,
            &sys.interleaver,
            &to_receiver_config(config),
        )
    })();
    match result {
        Ok(out) => {
            unsafe { slice::from_raw_parts_mut(out_codeword, n) }
                .copy_from_slice(&out.network_codeword);
            if let Some(w) = unsafe { out_syndrome_weight.as_mut() } {
                *w = out.syndrome.iter().filter(|&&s| s != 0).count();
            }
            if let Some(it) = unsafe { out_iterations.as_mut() } {
                *it = out.iterations_used;
            }
            PncStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Fills `out` (row-major `n_sigma * n_depth`) with the banded channel
/// energy-contribution percentages at the library's default OFDM
/// parameters.
///
/// # Safety
/// All array pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pnc_energy_table(
    sigma_u: *const f64,
    n_sigma: usize,
    depths: *const usize,
    n_depth: usize,
    realizations: usize,
    seed: u64,
    out: *mut f64,
) -> PncStatus {
    if sigma_u.is_null() || depths.is_null() || out.is_null() {
        return fail_null("sigma_u/depths/out");
    }
    let sigma = unsafe { slice::from_raw_parts(sigma_u, n_sigma) };
    let depth = unsafe { slice::from_raw_parts(depths, n_depth) };
    match energy_contribution_table(&OfdmParams::default_sim(), sigma, depth, realizations, seed)
    {
        Ok(table) => {
            let out = unsafe { slice::from_raw_parts_mut(out, n_sigma * n_depth) };
            for (si, row) in table.iter().enumerate() {
                out[si * n_depth..(si + 1) * n_depth].copy_from_slice(row);
            }
            PncStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
