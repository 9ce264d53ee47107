/* mint: membership inference and machine-generated text detection scoring
 * over precomputed token traces. Plain C interface over the C++ engine.
 *
 * Every function returning mint_status records a message retrievable with
 * mint_last_error() on failure. Status values double as process exit codes.
 */
#ifndef MINT_MINT_H
#define MINT_MINT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef MINT_BUILDING_LIBRARY
#    define MINT_API __declspec(dllexport)
#  else
#    define MINT_API __declspec(dllimport)
#  endif
#else
#  define MINT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mint_status {
  MINT_OK = 0,
  MINT_ERR_CONFIG = 2,   /* bad configuration or usage */
  MINT_ERR_DATA = 3,     /* malformed or unsupported input data */
  MINT_ERR_INTERNAL = 4
} mint_status;

typedef enum mint_task { MINT_TASK_MIA = 0, MINT_TASK_MGTD = 1 } mint_task;

typedef enum mint_rank_mode {
  MINT_RANK_MEAN_AUROC = 0, /* mean AUROC across cells, then rank */
  MINT_RANK_CELL_RANK = 1   /* rank within each cell, then mean rank */
} mint_rank_mode;

/* Message of the last failure on the calling thread; "" if none. */
MINT_API const char* mint_last_error(void);
MINT_API const char* mint_version(void);

/* ---- methods ---------------------------------------------------------- */

MINT_API size_t mint_method_count(void);
/* NULL when i is out of range. */
MINT_API const char* mint_method_name(size_t i);
/* Comma-separated trace fields the method needs beyond logp/rank; may be "". */
MINT_API const char* mint_method_required_fields(size_t i);
/* "mia", "detection" or "baseline". */
MINT_API const char* mint_method_family(size_t i);

typedef struct mint_method mint_method;

/* Unknown names fail with MINT_ERR_CONFIG and list the valid names. */
MINT_API mint_status mint_method_create(const char* name, mint_method** out);
/* Keys: k_percent (k), window_s (s), bins_eps (eps), scales_tau (tau),
 * n_samples (samples). Keys the method does not use are a config error. */
MINT_API mint_status mint_method_set_param(mint_method* m, const char* key, double value);
/* e.g. "min_k(k_percent=20)"; owned by the handle. */
MINT_API const char* mint_method_label(const mint_method* m);
MINT_API void mint_method_destroy(mint_method* m);

/* ---- trace sets ------------------------------------------------------- */

typedef struct mint_traceset mint_traceset;

MINT_API mint_status mint_traceset_read(const char* path, mint_traceset** out);
MINT_API mint_status mint_traceset_write(const mint_traceset* ts, const char* path);
MINT_API size_t mint_traceset_size(const mint_traceset* ts);
MINT_API mint_task mint_traceset_task(const mint_traceset* ts);
/* Strings are owned by the trace set; NULL when i is out of range. */
MINT_API const char* mint_traceset_doc_id(const mint_traceset* ts, size_t i);
MINT_API const char* mint_traceset_label(const mint_traceset* ts, size_t i);
MINT_API mint_status mint_traceset_score(const mint_traceset* ts, size_t i, const mint_method* m,
                                         double* score);
/* Fills freq_logp from a count file where the traces lack it. */
MINT_API mint_status mint_traceset_join_frequencies(mint_traceset* ts, const char* count_path);
MINT_API void mint_traceset_destroy(mint_traceset* ts);

/* Called once per problem found. doc_id is "" for file-level problems. */
typedef void (*mint_violation_fn)(void* user, const char* doc_id, const char* violation);

/* Streams a trace file and checks it, including that every document carries
 * the space- or comma-separated `required` fields (may be NULL). Returns
 * MINT_OK when the file is clean, MINT_ERR_DATA when anything was reported. */
MINT_API mint_status mint_validate_file(const char* path, const char* required,
                                        mint_violation_fn fn, void* user, size_t* n_docs,
                                        size_t* n_violations);

/* ---- synthetic data --------------------------------------------------- */

typedef struct mint_synth_config {
  size_t n_docs_per_class;
  size_t n_tokens;
  double mu0;
  double sd0;
  double mu1;
  double sd1;
  uint64_t seed;
  mint_task task;
  size_t n_perturbations;
  size_t n_samples;
  uint64_t vocab_size;
  int with_text;
} mint_synth_config;

MINT_API void mint_synth_config_default(mint_synth_config* cfg);
MINT_API mint_status mint_synth_generate(const mint_synth_config* cfg, unsigned jobs,
                                         mint_traceset** out);
MINT_API mint_status mint_synth_write(const mint_synth_config* cfg, const char* path,
                                      unsigned jobs);

/* ---- statistics ------------------------------------------------------- */

MINT_API mint_status mint_auroc(const double* pos, size_t n_pos, const double* neg, size_t n_neg,
                                double* out);
MINT_API mint_status mint_spearman(const double* x, const double* y, size_t n, double* rho,
                                   double* p_value);
/* bins <= 0 selects the default. */
MINT_API mint_status mint_js_distance(const double* a, size_t n_a, const double* b, size_t n_b,
                                      int bins, double* out);
/* DEFLATE-compressed size of the bytes, in bits. */
MINT_API mint_status mint_zlib_entropy(const char* bytes, size_t n, double* out);

/* ---- pipeline stages -------------------------------------------------- */

typedef struct mint_score_summary {
  size_t scored;
  size_t skipped;
  size_t total;
} mint_score_summary;

/* Scores every document of a trace file with one method. count_path may be
 * NULL. A method that can score none of the documents is MINT_ERR_DATA and
 * leaves no output behind. */
MINT_API mint_status mint_score_file(const char* trace_path, const mint_method* m,
                                     const char* out_path, const char* count_path, unsigned jobs,
                                     mint_score_summary* summary);

typedef struct mint_eval_options {
  int bootstrap_iters; /* 0 disables confidence intervals */
  double bootstrap_level;
  uint64_t seed;
} mint_eval_options;

/* Computes per-group AUROC for the score files and writes the results table.
 * Labels come from trace_paths when given (n_traces > 0), otherwise from the
 * trace file each score file names as its source. */
MINT_API mint_status mint_eval(const char* const* score_paths, size_t n_scores,
                               const char* const* trace_paths, size_t n_traces,
                               const mint_eval_options* options, const char* out_csv,
                               size_t* n_rows);

/* Correlates method rankings between two results tables. With results_b
 * NULL, the mia rows of results_a are compared with its mgtd rows. top_k 0
 * keeps every method. out_csv may be NULL. */
MINT_API mint_status mint_transfer(const char* results_a, const char* results_b,
                                   mint_rank_mode mode, size_t top_k, const char* out_csv,
                                   double* rho, double* p_value);

/* Histograms and pairwise JS distances of score files. Labels as in mint_eval. */
MINT_API mint_status mint_report(const char* const* score_paths, size_t n_scores,
                                 const char* const* trace_paths, size_t n_traces, int bins,
                                 const char* hist_csv, const char* js_csv);
/* Per-class histograms of each document's zlib entropy. */
MINT_API mint_status mint_report_zlib(const char* const* trace_paths, size_t n_traces, int bins,
                                      const char* hist_csv);

typedef enum mint_stage {
  MINT_STAGE_SCORE = 0,
  MINT_STAGE_EVAL = 1,
  MINT_STAGE_REPORT = 2,
  MINT_STAGE_ALL = 3
} mint_stage;

typedef struct mint_run_summary {
  size_t score_files;
  size_t documents_scored;
  size_t documents_skipped;
  size_t result_rows;
  int has_transfer;
  double rho;
  double p_value;
} mint_run_summary;

/* Runs a stage of a run-config file. seed_override may be NULL. */
MINT_API mint_status mint_run_config(const char* config_path, mint_stage stage, unsigned jobs,
                                     const uint64_t* seed_override, mint_run_summary* summary);

#ifdef __cplusplus
}
#endif

#endif
