#ifndef RFEXPLAIN_H
#define RFEXPLAIN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RFX_API __declspec(dllexport)
#else
#define RFX_API __attribute__((visibility("default")))
#endif

typedef enum rfx_status {
  RFX_OK = 0,
  RFX_E_INVALID_ARGUMENT = 1,
  RFX_E_PARSE = 2,
  RFX_E_CAP_EXCEEDED = 3,
  RFX_E_UNSATISFIABLE = 4,
  RFX_E_IO = 5,
  RFX_E_INTERNAL = 6
} rfx_status;

typedef enum rfx_format { RFX_FORMAT_JSON = 0, RFX_FORMAT_TEXT = 1 } rfx_format;

typedef struct rfx_forest rfx_forest;

RFX_API const char* rfx_version(void);

/* Message of the last failed call on this thread; "" after a success. */
RFX_API const char* rfx_last_error(void);

/* Every char** output is allocated by the library and released here. */
RFX_API void rfx_free_string(char* s);

RFX_API rfx_status rfx_forest_parse(const char* document, size_t length, rfx_forest** out);
/* Builds the clause-tree forest of a DIMACS 3CNF formula. notes_json, if not
   NULL, receives {"variables","clauses","trees","max_leaves","notes":[...]}. */
RFX_API rfx_status rfx_forest_from_dimacs(const char* text, size_t length, rfx_forest** out,
                                          char** notes_json);
RFX_API void rfx_forest_free(rfx_forest* forest);
RFX_API rfx_status rfx_forest_serialize(const rfx_forest* forest, char** out);

/* One textual value per feature. *out_class is the class index, -1 on a tie. */
RFX_API rfx_status rfx_classify(const rfx_forest* forest, const char* const* values, size_t count,
                                int64_t* out_class);

/* Partition, rule and BAG statistics. */
RFX_API rfx_status rfx_inspect(const rfx_forest* forest, rfx_format format, char** out);
/* "arg/att/sup" line dump of the explanation BAG. */
RFX_API rfx_status rfx_bag_export(const rfx_forest* forest, char** out);

RFX_API rfx_status rfx_sha256_hex(const void* data, size_t length, char out[65]);
RFX_API rfx_status rfx_chernoff_sample_size(double p_lower, double epsilon, double delta,
                                            uint64_t* out);

typedef struct rfx_exact_options {
  uint64_t max_exact_classes;
  /* Query strings such as "C=Pos|B=1,Age<=35". */
  const char* const* queries;
  size_t query_count;
} rfx_exact_options;

RFX_API void rfx_exact_options_init(rfx_exact_options* options);
RFX_API rfx_status rfx_exact(const rfx_forest* forest, const rfx_exact_options* options,
                             rfx_format format, char** out);

typedef void (*rfx_progress_fn)(uint64_t iterations, uint64_t nonambiguous, void* user);
typedef void (*rfx_record_fn)(const char* record, void* user);

typedef struct rfx_sample_options {
  uint64_t seed;
  uint64_t max_iterations;
  uint64_t min_samples;
  uint32_t workers;
  int early_stop;
  int conditional; /* top up starved sufficient queries by conditional sampling */
  double epsilon;
  double fail_prob;
  double delta;
  double lift;
  /* Exact probabilities by enumeration instead of sampling. */
  int exact;
  uint64_t max_exact_classes;
  /* Extra queries reported next to the atomic ones. */
  const char* const* queries;
  size_t query_count;
  rfx_progress_fn progress;
  void* progress_user;
  /* Stage 2 (rfx_mine). */
  uint64_t pair_samples;
  uint64_t pair_budget;
  int keep_redundant;
  int minimize;
  /* With minimize: a single "C=<class>|conditions" reason to shorten instead
     of the stage-2 stream. */
  const char* reason;
} rfx_sample_options;

RFX_API void rfx_sample_options_init(rfx_sample_options* options);

/* Stage 1: non-ambiguity estimate, atomic reasons, merged necessary reasons. */
RFX_API rfx_status rfx_sample(const rfx_forest* forest, const rfx_sample_options* options,
                              rfx_format format, char** out);

/* Stage 2: calls on_record once per reason as it is decided (a JSON object or
   a text line), then stores a summary in *summary. */
RFX_API rfx_status rfx_mine(const rfx_forest* forest, const rfx_sample_options* options,
                            rfx_format format, rfx_record_fn on_record, void* user,
                            char** summary);

#ifdef __cplusplus
}
#endif

#endif
