#ifndef GDLINE_H
#define GDLINE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Passed as `learning_delay_ns` to disable learning.
 */
#define GD_NO_LEARNING UINT64_MAX

/**
 * Result of every fallible call.
 */
typedef enum GdStatus {
  GD_STATUS_OK = 0,
  GD_STATUS_NULL_POINTER = 1,
  GD_STATUS_INVALID_ARGUMENT = 2,
  GD_STATUS_UNSUPPORTED = 3,
  GD_STATUS_BUFFER_TOO_SMALL = 4,
  GD_STATUS_NOT_FOUND = 5,
  GD_STATUS_ALREADY_KNOWN = 6,
  GD_STATUS_MALFORMED = 7,
  GD_STATUS_INVARIANT = 8,
  GD_STATUS_PANIC = 9,
} GdStatus;

typedef struct GdCode GdCode;

typedef struct GdDictionary GdDictionary;

typedef struct GdPipeline GdPipeline;

/**
 * Link frame produced for one chunk by [`gd_pipeline_process`].
 */
typedef struct GdStep {
  /**
   * 1 = RAW, 2 = SYN_BASIS, 3 = SYN_ID.
   */
  uint8_t frame_kind;
  uint32_t frame_bytes;
  /**
   * Whether the decoder restored a chunk into the output buffer.
   */
  bool restored;
} GdStep;

typedef struct GdCounters {
  uint64_t raw_in;
  uint64_t out_syn_basis;
  uint64_t out_syn_id;
  uint64_t in_syn_basis;
  uint64_t in_syn_id;
  uint64_t restored_raw;
  uint64_t digests;
  uint64_t installs;
  uint64_t evictions;
  uint64_t decode_miss;
} GdCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `cap`, and returns its full length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t gd_last_error_message(char *buf, size_t cap);

/**
 * Creates the Hamming code for `m` using generator `variant` (0 unless an
 * alternative exists).
 *
 * # Safety
 * `out_code` must be valid for writes.
 */
enum GdStatus gd_code_new(uint32_t m, uint32_t variant, struct GdCode **out_code);

/**
 * # Safety
 * `code` must be null or a handle from [`gd_code_new`] not yet freed.
 */
void gd_code_free(struct GdCode *code);

/**
 * Reports m, n = 2^m - 1, k = n - m and the generator's low bits.
 *
 * # Safety
 * `code` must be a live handle; each output pointer may be null.
 */
enum GdStatus gd_code_params(const struct GdCode *code,
                             uint32_t *m,
                             uint32_t *n,
                             uint32_t *k,
                             uint32_t *generator_low_bits);

/**
 * Splits a 2^m-bit chunk into syndrome, msb and basis. The basis is
 * written as ceil(k/8) bytes.
 *
 * # Safety
 * `chunk` must be valid for `chunk_len` bytes, `basis_out` for `basis_cap`
 * bytes, and the remaining outputs for writes.
 */
enum GdStatus gd_code_encode(const struct GdCode *code,
                             const uint8_t *chunk,
                             size_t chunk_len,
                             uint32_t *syndrome,
                             bool *msb,
                             uint8_t *basis_out,
                             size_t basis_cap);

/**
 * Inverse of [`gd_code_encode`]; writes 2^m / 8 bytes.
 *
 * # Safety
 * `basis` must be valid for `basis_len` bytes and `chunk_out` for
 * `chunk_cap` bytes.
 */
enum GdStatus gd_code_decode(const struct GdCode *code,
                             uint32_t syndrome,
                             bool msb,
                             const uint8_t *basis,
                             size_t basis_len,
                             uint8_t *chunk_out,
                             size_t chunk_cap);

/**
 * # Safety
 * `out_dict` must be valid for writes.
 */
enum GdStatus gd_dictionary_new(uint32_t id_width,
                                uint32_t basis_bits,
                                struct GdDictionary **out_dict);

/**
 * # Safety
 * `dict` must be null or a live handle from [`gd_dictionary_new`].
 */
void gd_dictionary_free(struct GdDictionary *dict);

/**
 * Number of installed mappings, or 0 for a null handle.
 *
 * # Safety
 * `dict` must be null or a live handle.
 */
size_t gd_dictionary_len(const struct GdDictionary *dict);

/**
 * Assigns an identifier to an unknown basis, recycling the least recently
 * used one when the pool is exhausted.
 *
 * # Safety
 * `basis` must be valid for `basis_len` bytes; `id` and `evicted` for
 * writes.
 */
enum GdStatus gd_dictionary_learn(struct GdDictionary *dict,
                                  const uint8_t *basis,
                                  size_t basis_len,
                                  uint64_t now_ns,
                                  uint32_t *id,
                                  bool *evicted);

/**
 * Finds the identifier of `basis` and marks it used at `now_ns`.
 *
 * # Safety
 * `basis` must be valid for `basis_len` bytes and `id` for writes.
 */
enum GdStatus gd_dictionary_lookup_id(struct GdDictionary *dict,
                                      const uint8_t *basis,
                                      size_t basis_len,
                                      uint64_t now_ns,
                                      uint32_t *id);

/**
 * # Safety
 * `basis_out` must be valid for `basis_cap` bytes.
 */
enum GdStatus gd_dictionary_lookup_basis(const struct GdDictionary *dict,
                                         uint32_t id,
                                         uint8_t *basis_out,
                                         size_t basis_cap);

/**
 * Creates an encoder/decoder/control-plane model. `learning_delay_ns` of
 * [`GD_NO_LEARNING`] keeps the table empty.
 *
 * # Safety
 * `out_pipeline` must be valid for writes.
 */
enum GdStatus gd_pipeline_new(uint32_t m,
                              uint32_t id_width,
                              uint64_t learning_delay_ns,
                              bool paper_padding,
                              struct GdPipeline **out_pipeline);

/**
 * # Safety
 * `pipeline` must be null or a live handle from [`gd_pipeline_new`].
 */
void gd_pipeline_free(struct GdPipeline *pipeline);

/**
 * Sends one chunk arriving at `now_ns` through encoder, link and decoder.
 * The restored chunk, if any, goes to `restored_out`.
 *
 * # Safety
 * `chunk` must be valid for `chunk_len` bytes, `restored_out` for
 * `restored_cap` bytes and `step` for writes.
 */
enum GdStatus gd_pipeline_process(struct GdPipeline *pipeline,
                                  const uint8_t *chunk,
                                  size_t chunk_len,
                                  uint64_t now_ns,
                                  struct GdStep *step,
                                  uint8_t *restored_out,
                                  size_t restored_cap);

/**
 * # Safety
 * `counters` must be valid for writes.
 */
enum GdStatus gd_pipeline_counters(const struct GdPipeline *pipeline, struct GdCounters *counters);

/**
 * EtherType of frames of `frame_kind`, or 0 for an unknown kind.
 */
uint16_t gd_frame_ethertype(uint8_t frame_kind);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GDLINE_H */
