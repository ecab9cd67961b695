#ifndef PNC_RELAY_H
#define PNC_RELAY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Detection scheme selector for [`PncReceiverConfig`].
 */
typedef enum PncScheme {
  AcaFgd = 0,
  SmLmmse = 1,
  FixedD = 2,
} PncScheme;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum PncStatus {
  Ok = 0,
  NullPointer = 1,
  InvalidArgument = 2,
  DimensionMismatch = 3,
  DegenerateInput = 4,
  CodeConstruction = 5,
  SingularSystem = 6,
  BadFormat = 7,
  Io = 8,
} PncStatus;

/**
 * Opaque bundle of the LDPC code and the subcarrier interleaver.
 */
typedef struct PncSystem PncSystem;

/**
 * Receiver loop configuration (C mirror of the library defaults:
 * 5 outer iterations, 3 decoding iterations, refinement on, eta 0.9,
 * reward 1, penalty 5, early exit on, 1 sweep).
 */
typedef struct PncReceiverConfig {
  enum PncScheme scheme;
  /**
   * Constant band depth; read only when `scheme` is `FixedD`.
   */
  uintptr_t fixed_depth;
  uintptr_t outer_iterations;
  uintptr_t decode_iterations;
  /**
   * Nonzero enables soft-information refinement.
   */
  uint8_t refinement;
  /**
   * Nonzero enables early exit on a zero syndrome.
   */
  uint8_t early_exit;
  double eta;
  double reward;
  double penalty;
  uintptr_t sweeps;
} PncReceiverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Pointer to a NUL-terminated description of the last error raised on
 * this thread. Valid until the next failing call on the same thread.
 */
const char *pnc_last_error_message(void);

/**
 * Creates a code/interleaver bundle for `block_length` coded bits and
 * `info_length` information bits. On success writes the handle to
 * `out` and returns `PNC_STATUS_OK`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PncStatus pnc_system_new(uintptr_t block_length,
                              uintptr_t info_length,
                              uint64_t code_seed,
                              uint64_t interleaver_seed,
                              struct PncSystem **out);

/**
 * Releases a handle created by `pnc_system_new`. `NULL` is a no-op.
 *
 * # Safety
 * `sys` must be a handle returned by `pnc_system_new`, freed once.
 */
void pnc_system_free(struct PncSystem *sys);

/**
 * Coded block length of the system.
 *
 * # Safety
 * `sys` must be a valid handle.
 */
uintptr_t pnc_system_block_length(const struct PncSystem *sys);

/**
 * Information length of the system.
 *
 * # Safety
 * `sys` must be a valid handle.
 */
uintptr_t pnc_system_info_length(const struct PncSystem *sys);

/**
 * Systematically encodes `info_bits` (length = info length) into
 * `codeword` (length = block length). Bits are one byte each, 0 or 1.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum PncStatus pnc_encode(const struct PncSystem *sys,
                          const uint8_t *info_bits,
                          uintptr_t info_len,
                          uint8_t *codeword,
                          uintptr_t codeword_len);

/**
 * The library-default receiver configuration.
 */
struct PncReceiverConfig pnc_receiver_config_default(void);

/**
 * Runs one relay reception. `y_*` are length-`n` vectors; `h_*` are
 * row-major `n * n` coupling matrices; `n` must equal the system's
 * block length. On success writes the network-coded hard decision to
 * `out_codeword` (length `n`), the number of violated parity checks to
 * `out_syndrome_weight`, and the outer iterations consumed to
 * `out_iterations` (either out-pointer may be `NULL`).
 *
 * # Safety
 * All array pointers must be valid for the stated lengths.
 */
enum PncStatus pnc_receive(const struct PncSystem *sys,
                           const double *y_re,
                           const double *y_im,
                           uintptr_t n,
                           const double *h_a_re,
                           const double *h_a_im,
                           const double *h_b_re,
                           const double *h_b_im,
                           double noise_variance,
                           const struct PncReceiverConfig *config,
                           uint8_t *out_codeword,
                           uintptr_t *out_syndrome_weight,
                           uintptr_t *out_iterations);

/**
 * Fills `out` (row-major `n_sigma * n_depth`) with the banded channel
 * energy-contribution percentages at the library's default OFDM
 * parameters.
 *
 * # Safety
 * All array pointers must be valid for the stated lengths.
 */
enum PncStatus pnc_energy_table(const double *sigma_u,
                                uintptr_t n_sigma,
                                const uintptr_t *depths,
                                uintptr_t n_depth,
                                uintptr_t realizations,
                                uint64_t seed,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNC_RELAY_H */
