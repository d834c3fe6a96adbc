#ifndef STRIP_SPLIT_H
#define STRIP_SPLIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SS_SOURCE_COUNT 12

#define SS_SOURCE_R 0

#define SS_SOURCE_A 1

#define SS_SOURCE_EA 2

#define SS_SOURCE_B 3

#define SS_SOURCE_EB 4

#define SS_SOURCE_AB 5

#define SS_SOURCE_EAB 6

#define SS_SOURCE_C 7

#define SS_SOURCE_AC 8

#define SS_SOURCE_BC 9

#define SS_SOURCE_ABC 10

#define SS_SOURCE_ET 11

/**
 * Result of every fallible call.
 */
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_PARSE = 3,
  SS_STATUS_DOMAIN = 4,
  SS_STATUS_DEGENERATE = 5,
  SS_STATUS_IO = 6,
  SS_STATUS_PANIC = 7,
} SsStatus;

/**
 * Opaque ANOVA table.
 */
typedef struct SsAnova SsAnova;

/**
 * Opaque observed layout.
 */
typedef struct SsLayout SsLayout;

/**
 * Opaque list of F-test results.
 */
typedef struct SsTests SsTests;

typedef struct SsAnovaRow {
  size_t df;
  double ss;
  double ms;
} SsAnovaRow;

typedef struct SsFTest {
  /**
   * Index of the tested source.
   */
  uint32_t source;
  double f_value;
  double df1;
  double df2;
  double p_value;
  /**
   * True when both sides are single mean squares (exact df).
   */
  bool exact;
} SsFTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ss_last_error_message(void);

/**
 * Label of source `index` ("R", "A", "eA", ...), or NULL when out of range.
 * The string is static.
 */
const char *ss_source_label(uint32_t index);

/**
 * Reads a layout from a CSV file with columns block, A, B, C, y.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SsStatus ss_layout_from_csv_file(const char *path, struct SsLayout **out);

/**
 * Parses a layout from CSV text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SsStatus ss_layout_from_csv_str(const char *text, struct SsLayout **out);

/**
 * Builds a layout from `r·a·b·c` values in row-major (block, A, B, C) order.
 *
 * # Safety
 * `values` must point to `len` doubles and `out` must be a valid pointer.
 */
enum SsStatus ss_layout_from_values(size_t r,
                                    size_t a,
                                    size_t b,
                                    size_t c,
                                    const double *values,
                                    size_t len,
                                    struct SsLayout **out);

/**
 * Writes r, a, b, c into `out_dims[0..4]`.
 *
 * # Safety
 * `layout` must be a live handle and `out_dims` must hold four `size_t`.
 */
enum SsStatus ss_layout_dims(const struct SsLayout *layout, size_t *out_dims);

/**
 * # Safety
 * `layout` must be NULL or a handle not yet freed.
 */
void ss_layout_free(struct SsLayout *layout);

/**
 * Computes the twelve-source ANOVA table of a layout.
 *
 * # Safety
 * `layout` must be a live handle and `out` a valid pointer.
 */
enum SsStatus ss_anova_new(const struct SsLayout *layout, struct SsAnova **out);

/**
 * Copies row `source` of the table into `out_row`.
 *
 * # Safety
 * `anova` must be a live handle and `out_row` a valid pointer.
 */
enum SsStatus ss_anova_row(const struct SsAnova *anova,
                           uint32_t source,
                           struct SsAnovaRow *out_row);

/**
 * # Safety
 * `anova` must be NULL or a handle not yet freed.
 */
void ss_anova_free(struct SsAnova *anova);

/**
 * Evaluates the F tests of `model` ("FFF", "RRR", "RFF", ...) on a table.
 *
 * # Safety
 * `anova` must be a live handle, `model` a NUL-terminated string and `out`
 * a valid pointer.
 */
enum SsStatus ss_ftests_new(const struct SsAnova *anova, const char *model, struct SsTests **out);

/**
 * Number of tests in the list (0 for NULL).
 *
 * # Safety
 * `tests` must be NULL or a live handle.
 */
size_t ss_ftests_len(const struct SsTests *tests);

/**
 * Copies test `index` into `out_test`.
 *
 * # Safety
 * `tests` must be a live handle and `out_test` a valid pointer.
 */
enum SsStatus ss_ftests_get(const struct SsTests *tests, size_t index, struct SsFTest *out_test);

/**
 * # Safety
 * `tests` must be NULL or a handle not yet freed.
 */
void ss_ftests_free(struct SsTests *tests);

/**
 * P(F(d1, d2) > x).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SsStatus ss_f_upper_tail(double x, double d1, double d2, double *out);

/**
 * Satterthwaite df of `n` mean squares with their df.
 *
 * # Safety
 * `ms` and `df` must point to `n` elements and `out` must be valid.
 */
enum SsStatus ss_satterthwaite(const double *ms, const size_t *df, size_t n, double *out);

/**
 * Ames–Webster tuning constant r* for df (n1, n2); needs n2 ≥ 5.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SsStatus ss_aw_rstar(size_t n1, size_t n2, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRIP_SPLIT_H */
