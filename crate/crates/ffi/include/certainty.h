#ifndef CERTAINTY_H
#define CERTAINTY_H

#include <stddef.h>
#include <stdint.h>

/**
 * Number of aspects written by [`certainty_model_score`].
 */
#define CERTAINTY_ASPECT_COUNT 6

typedef enum CertaintyStatus {
  CERTAINTY_STATUS_OK = 0,
  CERTAINTY_STATUS_NULL_POINTER = 1,
  CERTAINTY_STATUS_INVALID_UTF8 = 2,
  CERTAINTY_STATUS_INVALID_INPUT = 3,
  CERTAINTY_STATUS_DEGENERATE = 4,
  CERTAINTY_STATUS_IO = 5,
  CERTAINTY_STATUS_PANIC = 6,
} CertaintyStatus;

/**
 * A hedge or report-verb lexicon.
 */
typedef struct CertaintyLexicon CertaintyLexicon;

/**
 * A saved scoring model (bag-of-words or hedge).
 */
typedef struct CertaintyModel CertaintyModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *certainty_last_error(void);

/**
 * Library version as a static string.
 */
const char *certainty_version(void);

/**
 * The shipped hedge lexicon.
 *
 * # Safety
 * `out_lexicon` must be a valid pointer.
 */
enum CertaintyStatus certainty_lexicon_default_hedges(struct CertaintyLexicon **out_lexicon);

/**
 * Parses lexicon text: one entry per line, `#` comments. Multiword entries
 * match as phrases.
 *
 * # Safety
 * `name` and `text` must be NUL-terminated strings; `out_lexicon` must be valid.
 */
enum CertaintyStatus certainty_lexicon_parse(const char *name,
                                             const char *text,
                                             struct CertaintyLexicon **out_lexicon);

/**
 * # Safety
 * `lexicon` must come from this library and not be used afterwards. Null is ignored.
 */
void certainty_lexicon_free(struct CertaintyLexicon *lexicon);

/**
 * Number of lexicon matches in `text`.
 *
 * # Safety
 * Pointers must be valid; `text` NUL-terminated.
 */
enum CertaintyStatus certainty_count_hedges(const struct CertaintyLexicon *lexicon,
                                            const char *text,
                                            size_t *out_count);

/**
 * Loads a model saved by `certainty train`.
 *
 * # Safety
 * `json` must be NUL-terminated; `out_model` must be valid.
 */
enum CertaintyStatus certainty_model_load(const char *json, struct CertaintyModel **out_model);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is ignored.
 */
void certainty_model_free(struct CertaintyModel *model);

/**
 * Scores one sentence. `out_aspects`, when not null, receives
 * [`CERTAINTY_ASPECT_COUNT`] labels in the order number, extent,
 * probability, framing, condition, suggestion, coded 0 = not present,
 * 1 = certain, 2 = uncertain.
 *
 * # Safety
 * `model` and `out_certainty` must be valid; `out_aspects` null or valid for 6 bytes.
 */
enum CertaintyStatus certainty_model_score(const struct CertaintyModel *model,
                                           const char *text,
                                           double *out_certainty,
                                           uint8_t *out_aspects);

/**
 * Shared normalized stems and their Jaccard similarity under the shipped
 * stopword list.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum CertaintyStatus certainty_match_stats(const char *a,
                                           const char *b,
                                           size_t *out_overlap,
                                           double *out_jaccard);

/**
 * Flesch reading ease of `text`.
 *
 * # Safety
 * Pointers must be valid; `text` NUL-terminated.
 */
enum CertaintyStatus certainty_flesch(const char *text, double *out_score);

/**
 * Pearson correlation of two arrays of length `n`.
 *
 * # Safety
 * `xs` and `ys` must be valid for `n` doubles.
 */
enum CertaintyStatus certainty_pearson(const double *xs, const double *ys, size_t n, double *out_r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CERTAINTY_H */
