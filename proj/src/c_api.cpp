#include "mint/mint.h"

#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "mint/error.hpp"
#include "mint/eval.hpp"
#include "mint/harness.hpp"
#include "mint/method.hpp"
#include "mint/metrics_reference.hpp"
#include "mint/synth.hpp"
#include "mint/traces.hpp"

struct mint_method {
  mint::MethodSpec spec;
  std::string label;
};

struct mint_traceset {
  mint::TraceSet ts;
};

namespace {

thread_local std::string last_error;

mint_status fail(mint_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename Fn>
mint_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return MINT_OK;
  } catch (const mint::Error& e) {
    return fail(static_cast<mint_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MINT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MINT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MINT_ERR_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw mint::ConfigError(std::string(what) + " must not be NULL");
}

std::vector<std::string> strings(const char* const* items, std::size_t n, const char* what) {
  std::vector<std::string> out;
  if (n > 0) require(items, what);
  for (std::size_t i = 0; i < n; ++i) {
    require(items[i], what);
    out.emplace_back(items[i]);
  }
  return out;
}

mint::Task to_task(mint_task t) {
  switch (t) {
    case MINT_TASK_MIA:
      return mint::Task::mia;
    case MINT_TASK_MGTD:
      return mint::Task::mgtd;
  }
  throw mint::ConfigError("unknown task value");
}

mint::Field parse_required(const char* text) {
  mint::Field set = mint::Field::none;
  if (!text) return set;
  std::string_view s(text);
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == ',')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != ',') ++j;
    if (j > i) {
      auto f = mint::parse_field(s.substr(i, j - i));
      if (!f) throw mint::ConfigError("unknown trace field " + std::string(s.substr(i, j - i)));
      set = set | *f;
    }
    i = j;
  }
  return set;
}

mint::SynthConfig to_synth(const mint_synth_config* c) {
  require(c, "synth config");
  mint::SynthConfig s;
  s.n_docs_per_class = c->n_docs_per_class;
  s.n_tokens = c->n_tokens;
  s.mu0 = c->mu0;
  s.sd0 = c->sd0;
  s.mu1 = c->mu1;
  s.sd1 = c->sd1;
  s.seed = c->seed;
  s.task = to_task(c->task);
  s.n_perturbations = c->n_perturbations;
  s.n_samples = c->n_samples;
  s.vocab_size = c->vocab_size;
  s.with_text = c->with_text != 0;
  return s;
}

// Score files plus the label index for each of them.
struct Labeled {
  std::vector<mint::ScoreFile> files;
  std::vector<std::unique_ptr<mint::LabelIndex>> owned;
  std::vector<const mint::LabelIndex*> per_file;
};

Labeled load_labeled(const char* const* score_paths, std::size_t n_scores,
                     const char* const* trace_paths, std::size_t n_traces) {
  auto scores = strings(score_paths, n_scores, "score path");
  auto traces = strings(trace_paths, n_traces, "trace path");
  if (scores.empty()) throw mint::ConfigError("at least one score file is required");
  Labeled out;
  for (const auto& p : scores) out.files.push_back(mint::read_score_file(p));
  if (!traces.empty()) {
    auto merged = std::make_unique<mint::LabelIndex>();
    for (const auto& t : traces) mint::merge_labels(*merged, mint::load_labels(t));
    out.per_file.assign(out.files.size(), merged.get());
    out.owned.push_back(std::move(merged));
  } else {
    for (const auto& f : out.files) {
      if (f.source.empty()) throw mint::ConfigError("score file names no source; pass the traces");
      out.owned.push_back(std::make_unique<mint::LabelIndex>(mint::load_labels(f.source)));
      out.per_file.push_back(out.owned.back().get());
    }
  }
  return out;
}

std::ofstream open_file(const char* path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mint::IoError(std::string("cannot open ") + path + " for writing");
  return out;
}

void close_file(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) throw mint::IoError(std::string("write failure on ") + path);
}

}  // namespace

extern "C" {

const char* mint_last_error(void) {
  return last_error.c_str();
}

const char* mint_version(void) {
  return "1.0.0";
}

size_t mint_method_count(void) {
  return mint::kAllMethods.size();
}

const char* mint_method_name(size_t i) {
  if (i >= mint::kAllMethods.size()) return nullptr;
  return mint::method_name(mint::kAllMethods[i]).data();
}

const char* mint_method_required_fields(size_t i) {
  static const auto table = [] {
    std::vector<std::string> t;
    for (auto m : mint::kAllMethods) t.push_back(mint::field_list(mint::required_fields(m)));
    return t;
  }();
  if (i >= table.size()) return nullptr;
  return table[i].c_str();
}

const char* mint_method_family(size_t i) {
  if (i >= mint::kAllMethods.size()) return nullptr;
  return mint::to_string(mint::method_family(mint::kAllMethods[i])).data();
}

mint_status mint_method_create(const char* name, mint_method** out) {
  return guarded([&] {
    require(name, "method name");
    require(out, "out");
    auto m = std::make_unique<mint_method>();
    m->spec = mint::parse_method_spec(name);
    m->label = m->spec.label();
    *out = m.release();
  });
}

mint_status mint_method_set_param(mint_method* m, const char* key, double value) {
  return guarded([&] {
    require(m, "method");
    require(key, "key");
    m->spec.set_param(key, value);
    m->label = m->spec.label();
  });
}

const char* mint_method_label(const mint_method* m) {
  return m ? m->label.c_str() : "";
}

void mint_method_destroy(mint_method* m) {
  delete m;
}

mint_status mint_traceset_read(const char* path, mint_traceset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto ts = std::make_unique<mint_traceset>();
    ts->ts = mint::read_traces_file(path);
    *out = ts.release();
  });
}

mint_status mint_traceset_write(const mint_traceset* ts, const char* path) {
  return guarded([&] {
    require(ts, "trace set");
    require(path, "path");
    mint::write_traces_file(ts->ts, path);
  });
}

size_t mint_traceset_size(const mint_traceset* ts) {
  return ts ? ts->ts.traces.size() : 0;
}

mint_task mint_traceset_task(const mint_traceset* ts) {
  return ts && ts->ts.task == mint::Task::mgtd ? MINT_TASK_MGTD : MINT_TASK_MIA;
}

const char* mint_traceset_doc_id(const mint_traceset* ts, size_t i) {
  if (!ts || i >= ts->ts.traces.size()) return nullptr;
  return ts->ts.traces[i].doc_id.c_str();
}

const char* mint_traceset_label(const mint_traceset* ts, size_t i) {
  if (!ts || i >= ts->ts.traces.size()) return nullptr;
  return mint::to_string(ts->ts.traces[i].label).data();
}

mint_status mint_traceset_score(const mint_traceset* ts, size_t i, const mint_method* m,
                                double* score) {
  return guarded([&] {
    require(ts, "trace set");
    require(m, "method");
    require(score, "score");
    if (i >= ts->ts.traces.size()) throw mint::ConfigError("document index out of range");
    const auto& doc = ts->ts.traces[i];
    auto violations = mint::validate_trace(doc, mint::required_fields(m->spec.method));
    for (const auto& v : violations) {
      if (v.kind == mint::Violation::Kind::missing) {
        throw mint::UnsupportedMethodError(std::string(mint::method_name(m->spec.method)), v.what);
      }
    }
    *score = mint::score_document(doc, m->spec).score;
  });
}

mint_status mint_traceset_join_frequencies(mint_traceset* ts, const char* count_path) {
  return guarded([&] {
    require(ts, "trace set");
    require(count_path, "count path");
    auto table = mint::read_freq_table_file(count_path);
    for (auto& d : ts->ts.traces) mint::join_frequencies(d, table);
  });
}

void mint_traceset_destroy(mint_traceset* ts) {
  delete ts;
}

mint_status mint_validate_file(const char* path, const char* required, mint_violation_fn fn,
                               void* user, size_t* n_docs, size_t* n_violations) {
  std::size_t docs = 0, bad = 0;
  auto report = [&](const std::string& doc, const std::string& what) {
    ++bad;
    if (fn) fn(user, doc.c_str(), what.c_str());
  };
  auto status = guarded([&] {
    require(path, "path");
    const mint::Field req = parse_required(required);
    try {
      mint::TraceReader reader(path);
      while (auto d = reader.next()) {
        ++docs;
        for (const auto& v : mint::validate_trace(*d, req)) report(d->doc_id, v.to_string());
      }
    } catch (const mint::ParseError& e) {
      report("", e.what());
    }
  });
  if (n_docs) *n_docs = docs;
  if (n_violations) *n_violations = bad;
  if (status == MINT_OK && bad > 0) {
    return fail(MINT_ERR_DATA, std::to_string(bad) + " violations in " + path);
  }
  return status;
}

void mint_synth_config_default(mint_synth_config* cfg) {
  if (!cfg) return;
  const mint::SynthConfig d;
  cfg->n_docs_per_class = d.n_docs_per_class;
  cfg->n_tokens = d.n_tokens;
  cfg->mu0 = d.mu0;
  cfg->sd0 = d.sd0;
  cfg->mu1 = d.mu1;
  cfg->sd1 = d.sd1;
  cfg->seed = d.seed;
  cfg->task = d.task == mint::Task::mgtd ? MINT_TASK_MGTD : MINT_TASK_MIA;
  cfg->n_perturbations = d.n_perturbations;
  cfg->n_samples = d.n_samples;
  cfg->vocab_size = d.vocab_size;
  cfg->with_text = d.with_text ? 1 : 0;
}

mint_status mint_synth_generate(const mint_synth_config* cfg, unsigned jobs, mint_traceset** out) {
  return guarded([&] {
    require(out, "out");
    auto ts = std::make_unique<mint_traceset>();
    ts->ts = mint::gen_traceset(to_synth(cfg), jobs);
    *out = ts.release();
  });
}

mint_status mint_synth_write(const mint_synth_config* cfg, const char* path, unsigned jobs) {
  return guarded([&] {
    require(path, "path");
    mint::write_traces_file(mint::gen_traceset(to_synth(cfg), jobs), path);
  });
}

mint_status mint_auroc(const double* pos, size_t n_pos, const double* neg, size_t n_neg,
                       double* out) {
  return guarded([&] {
    require(out, "out");
    if (n_pos) require(pos, "pos");
    if (n_neg) require(neg, "neg");
    *out = mint::auroc(std::span(pos, n_pos), std::span(neg, n_neg));
  });
}

mint_status mint_spearman(const double* x, const double* y, size_t n, double* rho,
                          double* p_value) {
  return guarded([&] {
    if (n) {
      require(x, "x");
      require(y, "y");
    }
    auto r = mint::spearman(std::span(x, n), std::span(y, n));
    if (rho) *rho = r.rho;
    if (p_value) *p_value = r.p_value;
  });
}

mint_status mint_js_distance(const double* a, size_t n_a, const double* b, size_t n_b, int bins,
                             double* out) {
  return guarded([&] {
    require(out, "out");
    if (n_a) require(a, "a");
    if (n_b) require(b, "b");
    *out = mint::js_distance(std::span(a, n_a), std::span(b, n_b),
                             bins > 0 ? bins : mint::kDefaultHistBins);
  });
}

mint_status mint_zlib_entropy(const char* bytes, size_t n, double* out) {
  return guarded([&] {
    require(out, "out");
    if (n) require(bytes, "bytes");
    *out = mint::zlib_entropy(std::string_view(bytes ? bytes : "", n));
  });
}

mint_status mint_score_file(const char* trace_path, const mint_method* m, const char* out_path,
                            const char* count_path, unsigned jobs, mint_score_summary* summary) {
  return guarded([&] {
    require(trace_path, "trace path");
    require(m, "method");
    require(out_path, "output path");
    std::optional<mint::FrequencyTable> freq;
    if (count_path) freq = mint::read_freq_table_file(count_path);
    const std::string out = out_path;
    auto s = mint::score_trace_file(trace_path, std::span(&m->spec, 1), std::span(&out, 1),
                                    freq ? &*freq : nullptr, jobs);
    if (summary) *summary = {s[0].scored, s[0].skipped, s[0].total};
  });
}

mint_status mint_eval(const char* const* score_paths, size_t n_scores,
                      const char* const* trace_paths, size_t n_traces,
                      const mint_eval_options* options, const char* out_csv, size_t* n_rows) {
  return guarded([&] {
    require(out_csv, "output path");
    auto data = load_labeled(score_paths, n_scores, trace_paths, n_traces);
    mint::EvalOptions opt;
    if (options) {
      opt.seed = options->seed;
      if (options->bootstrap_iters > 0) {
        opt.bootstrap = mint::BootstrapConfig{options->bootstrap_iters, options->bootstrap_level};
        if (options->bootstrap_iters < 100) {
          throw mint::ConfigError("bootstrap iterations must be at least 100");
        }
        if (!(options->bootstrap_level > 0.0 && options->bootstrap_level < 1.0)) {
          throw mint::ConfigError("bootstrap level must lie in (0, 1)");
        }
      }
    }
    auto results = mint::evaluate(data.files, data.per_file, opt);
    auto out = open_file(out_csv);
    mint::write_results_csv(results, out);
    close_file(out, out_csv);
    if (n_rows) *n_rows = results.size();
  });
}

mint_status mint_transfer(const char* results_a, const char* results_b, mint_rank_mode mode,
                          size_t top_k, const char* out_csv, double* rho, double* p_value) {
  return guarded([&] {
    require(results_a, "results path");
    auto a = mint::read_results_csv_file(results_a);
    std::vector<mint::EvalResult> b;
    if (results_b) {
      b = mint::read_results_csv_file(results_b);
    } else {
      std::vector<mint::EvalResult> mia;
      for (auto& r : a) (r.task == mint::Task::mia ? mia : b).push_back(std::move(r));
      a = std::move(mia);
      if (a.empty() || b.empty()) {
        throw mint::DataError("results table needs both mia and mgtd rows for a transfer report");
      }
    }
    const auto rank_mode =
        mode == MINT_RANK_CELL_RANK ? mint::RankMode::cell_rank : mint::RankMode::mean_auroc;
    std::optional<std::size_t> k;
    if (top_k > 0) {
      if (top_k < 3) throw mint::ConfigError("top_k must be at least 3");
      k = top_k;
    }
    auto rep = mint::transfer_report(a, b, rank_mode, k);
    if (out_csv) {
      auto out = open_file(out_csv);
      mint::write_transfer_csv(rep, out);
      close_file(out, out_csv);
    }
    if (rho) *rho = rep.rho;
    if (p_value) *p_value = rep.p_value;
  });
}

mint_status mint_report(const char* const* score_paths, size_t n_scores,
                        const char* const* trace_paths, size_t n_traces, int bins,
                        const char* hist_csv, const char* js_csv) {
  return guarded([&] {
    require(hist_csv, "histogram path");
    require(js_csv, "JS path");
    auto data = load_labeled(score_paths, n_scores, trace_paths, n_traces);
    auto rep = mint::distribution_report(data.files, data.per_file,
                                         bins > 0 ? bins : mint::kDefaultHistBins);
    auto h = open_file(hist_csv);
    mint::write_histograms_csv(rep.histograms, h);
    close_file(h, hist_csv);
    auto j = open_file(js_csv);
    mint::write_js_csv(rep.js, j);
    close_file(j, js_csv);
  });
}

mint_status mint_report_zlib(const char* const* trace_paths, size_t n_traces, int bins,
                             const char* hist_csv) {
  return guarded([&] {
    require(hist_csv, "histogram path");
    auto traces = strings(trace_paths, n_traces, "trace path");
    if (traces.empty()) throw mint::ConfigError("at least one trace file is required");
    auto rows = mint::zlib_distribution(traces, bins > 0 ? bins : mint::kDefaultHistBins);
    auto h = open_file(hist_csv);
    mint::write_histograms_csv(rows, h);
    close_file(h, hist_csv);
  });
}

mint_status mint_run_config(const char* config_path, mint_stage stage, unsigned jobs,
                            const uint64_t* seed_override, mint_run_summary* summary) {
  return guarded([&] {
    require(config_path, "config path");
    auto cfg = mint::read_run_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    mint_run_summary s{};
    s.p_value = 1.0;
    auto add_scoring = [&](const std::vector<mint::ScoreSummary>& v) {
      s.score_files = v.size();
      for (const auto& x : v) {
        s.documents_scored += x.scored;
        s.documents_skipped += x.skipped;
      }
    };
    switch (stage) {
      case MINT_STAGE_SCORE:
        add_scoring(mint::run_scoring(cfg, jobs));
        break;
      case MINT_STAGE_EVAL:
        s.result_rows = mint::run_eval(cfg).size();
        break;
      case MINT_STAGE_REPORT:
        mint::run_report(cfg);
        break;
      case MINT_STAGE_ALL: {
        auto out = mint::run_pipeline(cfg, jobs);
        add_scoring(out.scoring);
        s.result_rows = out.results.size();
        if (out.transfer) {
          s.has_transfer = 1;
          s.rho = out.transfer->rho;
          s.p_value = out.transfer->p_value;
        }
        break;
      }
      default:
        throw mint::ConfigError("unknown stage");
    }
    if (summary) *summary = s;
  });
}

}  // extern "C"
