#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mint/eval.hpp"
#include "mint/method.hpp"
#include "mint/metrics_reference.hpp"
#include "mint/traces.hpp"

namespace mint {

// ---------------------------------------------------------------------------
// Run configuration (JSON document).

struct InputSpec {
  std::string path;
  std::optional<Task> task;  // checked against the trace header when set
  std::string domain;        // overrides the documents' domain when non-empty
  std::string model_id;      // overrides the documents' model_id when non-empty
};

struct BootstrapConfig {
  int iters = 1000;
  double level = 0.95;
};

enum class RankMode {
  mean_auroc,  // mean AUROC across cells, then rank
  cell_rank,   // rank within each cell, then mean rank
};

struct RunConfig {
  std::vector<InputSpec> inputs;
  std::vector<MethodSpec> methods;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::optional<BootstrapConfig> bootstrap;
  int hist_bins = kDefaultHistBins;
  std::optional<std::string> freq_table;
  RankMode rank_mode = RankMode::mean_auroc;
  std::optional<std::size_t> top_k;

  void validate() const;
};

// Relative paths inside the file are resolved against its directory.
RunConfig read_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = "");

// ---------------------------------------------------------------------------
// Score files: a header line, then one record per document in input order.

struct ScoreEntry {
  std::string doc_id;
  std::optional<double> score;  // absent when skipped
  std::string skipped;          // reason, when skipped
  bool std_floor = false;
};

struct ScoreFile {
  Task task = Task::mia;
  MethodSpec method;
  std::string source;  // trace file the scores came from
  std::vector<ScoreEntry> entries;
};

void write_score_header(std::ostream& out, Task task, const MethodSpec& method,
                        const std::string& source);
std::string serialize_score_entry(const ScoreEntry& e, const MethodSpec& method);
ScoreFile read_score_file(const std::string& path);

struct ScoreSummary {
  std::string source;
  MethodSpec method;
  std::string output;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::size_t total = 0;
  std::string first_skip_reason;
};

// Streams one trace file once and writes one score file per method.
// Documents a method cannot score are written as skipped records. A method
// that skips every document of a non-empty file is a hard DataError.
std::vector<ScoreSummary> score_trace_file(const std::string& trace_path,
                                           std::span<const MethodSpec> methods,
                                           std::span<const std::string> out_paths,
                                           const FrequencyTable* freq, unsigned jobs);

// Score files go to <output_dir>/scores/<index>-<stem>__<method>.jsonl.
std::vector<ScoreSummary> run_scoring(const RunConfig& cfg, unsigned jobs);

// ---------------------------------------------------------------------------
// Evaluation.

struct DocInfo {
  Label label = Label::unlabeled;
  std::string domain;
  std::string model_id;
};

using LabelIndex = std::unordered_map<std::string, DocInfo>;

LabelIndex load_labels(const std::string& trace_path, const std::string& domain_override = "",
                       const std::string& model_override = "");
// Merges b into a; a doc_id present in both with different info is an error.
void merge_labels(LabelIndex& a, const LabelIndex& b);

struct EvalOptions {
  std::optional<BootstrapConfig> bootstrap;
  std::uint64_t seed = 0;
};

// Pools scored documents by (task, domain, model_id, method) and computes an
// AUROC per group. Rows come back sorted by that key. `labels[i]` labels
// `files[i]`.
std::vector<EvalResult> evaluate(std::span<const ScoreFile> files,
                                 std::span<const LabelIndex* const> labels,
                                 const EvalOptions& options);

void write_results_csv(std::span<const EvalResult> results, std::ostream& out);
std::vector<EvalResult> read_results_csv(std::istream& in);
std::vector<EvalResult> read_results_csv_file(const std::string& path);

// Score files + labels from config, results.csv in output_dir.
std::vector<EvalResult> run_eval(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Cross-task transfer.

struct TransferRow {
  MethodSpec method;
  Family family = Family::baseline;
  double mean_auroc_a = 0.0;
  double mean_auroc_b = 0.0;
  double rank_a = 0.0;
  double rank_b = 0.0;
};

struct TransferReport {
  std::vector<TransferRow> rows;
  double rho = 0.0;
  double p_value = 1.0;
};

// Ranks methods on each table and correlates the rankings. With top_k,
// only the k best methods on table a enter the correlation and the report.
TransferReport transfer_report(std::span<const EvalResult> a, std::span<const EvalResult> b,
                               RankMode mode = RankMode::mean_auroc,
                               std::optional<std::size_t> top_k = std::nullopt);
void write_transfer_csv(const TransferReport& report, std::ostream& out);

// ---------------------------------------------------------------------------
// Score distributions.

struct HistogramRow {
  std::string method;  // method label, or "zlib_entropy" in raw-feature mode
  std::string cls;     // label name
  double bin_left;
  double bin_right;
  double density;
};

struct JsRow {
  std::string method_a;
  std::string method_b;
  std::string cls;  // "all" or a label name
  double distance;
};

struct DistributionReport {
  std::vector<HistogramRow> histograms;
  std::vector<JsRow> js;
};

// Per (method, class) density histograms over a shared per-method range, and
// JS distances between every pair of methods. Scores of each method are
// min-max normalized on their own before the JS comparison, so the distance
// compares distribution shapes rather than score scales.
DistributionReport distribution_report(std::span<const ScoreFile> files,
                                       std::span<const LabelIndex* const> labels, int bins);

// Raw-feature mode: zlib entropy (bits) of each document's text, histogrammed
// per class.
std::vector<HistogramRow> zlib_distribution(std::span<const std::string> trace_paths, int bins);

void write_histograms_csv(std::span<const HistogramRow> rows, std::ostream& out);
void write_js_csv(std::span<const JsRow> rows, std::ostream& out);

// Distribution report over the config's score files; writes hist.csv and
// js.csv in output_dir.
DistributionReport run_report(const RunConfig& cfg);

// ---------------------------------------------------------------------------

struct PipelineOutputs {
  std::vector<ScoreSummary> scoring;
  std::vector<EvalResult> results;
  std::optional<TransferReport> transfer;
};

// Scores, evaluates and reports. Writes results.csv, hist.csv, js.csv, and
// transfer.csv when both tasks are present.
PipelineOutputs run_pipeline(const RunConfig& cfg, unsigned jobs);

// CSV field quoting.
std::string csv_field(const std::string& s);
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace mint
