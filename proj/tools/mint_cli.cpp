// mint command-line tool. Talks to the engine only through the C API.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mint/mint.h"

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel g_log = LogLevel::info;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, std::string message) {
  throw Failure{code, std::move(message)};
}

void check(mint_status s) {
  if (s != MINT_OK) fail(int(s), mint_last_error());
}

void info(const std::string& line) {
  if (g_log >= LogLevel::info) std::cerr << "info: " << line << '\n';
}

void debug(const std::string& line) {
  if (g_log >= LogLevel::debug) std::cerr << "debug: " << line << '\n';
}

// Shortest round-trip text, with a trailing ".0" on integral values.
std::string number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::vector<const char*> c_strs(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

std::string methods_footer() {
  std::string s = "Methods (required trace fields beyond token_id, logp, rank):\n";
  for (size_t i = 0; i < mint_method_count(); ++i) {
    std::string name = mint_method_name(i);
    std::string fields = mint_method_required_fields(i);
    s += "  " + name + std::string(name.size() < 16 ? 16 - name.size() : 1, ' ') +
         (fields.empty() ? "-" : fields) + "\n";
  }
  s += "\nExit codes: 0 ok, 2 configuration/usage, 3 data/validation, 4 internal.\n";
  s += "MINT_LOG=error|info|debug sets the log level (default info).";
  return s;
}

struct MethodHandle {
  mint_method* m = nullptr;
  ~MethodHandle() { mint_method_destroy(m); }
};

struct Options {
  unsigned jobs = 1;
  std::optional<uint64_t> seed;
  std::string config;

  // score
  std::string traces;
  std::string method;
  std::optional<double> k, s, eps, tau, samples;
  std::string out;
  std::string counts;

  // eval / report
  std::vector<std::string> scores;
  std::vector<std::string> label_traces;
  int bootstrap = 0;
  double level = 0.95;
  int bins = 0;
  std::string hist;
  std::string js;
  bool zlib = false;

  // transfer
  std::string a;
  std::string b;
  std::string rank_mode = "mean_auroc";
  size_t top_k = 0;

  // validate
  std::string require;

  // synth
  mint_synth_config synth{};
  std::string task = "mia";
  bool no_text = false;
};

void print_run_summary(const mint_run_summary& s) {
  if (s.score_files > 0) {
    std::cout << "score_files=" << s.score_files << " scored=" << s.documents_scored
              << " skipped=" << s.documents_skipped << '\n';
  }
  if (s.result_rows > 0) std::cout << "result_rows=" << s.result_rows << '\n';
  if (s.has_transfer) std::cout << "rho=" << number(s.rho) << " p_value=" << number(s.p_value) << '\n';
}

int run_config(const Options& o, mint_stage stage) {
  mint_run_summary s{};
  const uint64_t seed = o.seed.value_or(0);
  debug("run config " + o.config);
  check(mint_run_config(o.config.c_str(), stage, o.jobs, o.seed ? &seed : nullptr, &s));
  print_run_summary(s);
  return 0;
}

void need(const std::string& value, const char* flag) {
  if (value.empty()) fail(2, std::string(flag) + " is required");
}

int cmd_score(const Options& o) {
  if (!o.config.empty()) return run_config(o, MINT_STAGE_SCORE);
  need(o.traces, "--traces");
  need(o.method, "--method");
  need(o.out, "--out");
  MethodHandle h;
  check(mint_method_create(o.method.c_str(), &h.m));
  auto set = [&](const char* key, const std::optional<double>& v) {
    if (v) check(mint_method_set_param(h.m, key, *v));
  };
  set("k_percent", o.k);
  set("window_s", o.s);
  set("bins_eps", o.eps);
  set("scales_tau", o.tau);
  set("n_samples", o.samples);
  info("scoring " + o.traces + " with " + mint_method_label(h.m));
  mint_score_summary sum{};
  check(mint_score_file(o.traces.c_str(), h.m, o.out.c_str(),
                        o.counts.empty() ? nullptr : o.counts.c_str(), o.jobs, &sum));
  std::cout << "method=" << mint_method_label(h.m) << " scored=" << sum.scored
            << " skipped=" << sum.skipped << " total=" << sum.total << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  if (!o.config.empty()) return run_config(o, MINT_STAGE_EVAL);
  if (o.scores.empty()) fail(2, "--scores is required");
  need(o.out, "--out");
  auto sp = c_strs(o.scores);
  auto tp = c_strs(o.label_traces);
  mint_eval_options opt{o.bootstrap, o.level, o.seed.value_or(0)};
  size_t rows = 0;
  check(mint_eval(sp.data(), sp.size(), tp.data(), tp.size(), &opt, o.out.c_str(), &rows));
  std::cout << "result_rows=" << rows << '\n';
  return 0;
}

int cmd_transfer(const Options& o) {
  need(o.a, "--a");
  mint_rank_mode mode = MINT_RANK_MEAN_AUROC;
  if (o.rank_mode == "cell_rank") {
    mode = MINT_RANK_CELL_RANK;
  } else if (o.rank_mode != "mean_auroc") {
    fail(2, "--rank-mode must be mean_auroc or cell_rank");
  }
  double rho = 0.0, p = 1.0;
  check(mint_transfer(o.a.c_str(), o.b.empty() ? nullptr : o.b.c_str(), mode, o.top_k,
                      o.out.empty() ? nullptr : o.out.c_str(), &rho, &p));
  std::cout << "rho=" << number(rho) << " p_value=" << number(p) << '\n';
  return 0;
}

int cmd_report(const Options& o) {
  if (!o.config.empty()) return run_config(o, MINT_STAGE_REPORT);
  need(o.hist, "--hist");
  auto tp = c_strs(o.label_traces);
  if (o.zlib) {
    if (tp.empty()) fail(2, "--zlib needs --traces");
    check(mint_report_zlib(tp.data(), tp.size(), o.bins, o.hist.c_str()));
    return 0;
  }
  if (o.scores.empty()) fail(2, "--scores is required");
  need(o.js, "--js");
  auto sp = c_strs(o.scores);
  check(mint_report(sp.data(), sp.size(), tp.data(), tp.size(), o.bins, o.hist.c_str(),
                    o.js.c_str()));
  return 0;
}

void print_violation(void*, const char* doc_id, const char* what) {
  if (*doc_id) {
    std::cout << doc_id << ": " << what << '\n';
  } else {
    std::cout << what << '\n';
  }
}

int cmd_validate(const Options& o) {
  need(o.traces, "--traces");
  size_t docs = 0, bad = 0;
  mint_status s = mint_validate_file(o.traces.c_str(), o.require.empty() ? nullptr : o.require.c_str(),
                                     print_violation, nullptr, &docs, &bad);
  std::cout << docs << " documents, " << bad << " violations\n";
  check(s);
  return 0;
}

int cmd_synth(Options o) {
  need(o.out, "--out");
  if (o.task == "mgtd") {
    o.synth.task = MINT_TASK_MGTD;
  } else if (o.task == "mia") {
    o.synth.task = MINT_TASK_MIA;
  } else {
    fail(2, "--task must be mia or mgtd");
  }
  o.synth.with_text = o.no_text ? 0 : 1;
  if (o.seed) o.synth.seed = *o.seed;
  check(mint_synth_write(&o.synth, o.out.c_str(), o.jobs));
  info("wrote " + std::to_string(2 * o.synth.n_docs_per_class) + " documents to " + o.out);
  return 0;
}

LogLevel parse_log_env() {
  const char* env = std::getenv("MINT_LOG");
  if (!env || !*env) return LogLevel::info;
  std::string v = env;
  if (v == "error") return LogLevel::error;
  if (v == "info") return LogLevel::info;
  if (v == "debug") return LogLevel::debug;
  fail(2, "MINT_LOG must be error, info or debug, not " + v);
}

int run(int argc, char** argv) {
  g_log = parse_log_env();

  Options o;
  mint_synth_config_default(&o.synth);
  o.jobs = std::max(1u, std::thread::hardware_concurrency());

  CLI::App app{"mint: score, evaluate and compare membership inference and "
               "machine-generated text detection methods over token traces"};
  app.footer(methods_footer());
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(mint_version()));
  app.add_option("--jobs,-j", o.jobs, "Worker threads (default: available cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Seed for all randomness");

  auto* score = app.add_subcommand("score", "Score a trace file with one method");
  score->add_option("--traces", o.traces, "Trace file");
  score->add_option("--method", o.method, "Method name");
  score->add_option("--k", o.k, "Min-K% percent");
  score->add_option("--s", o.s, "Lastde window size");
  score->add_option("--eps", o.eps, "Lastde similarity bins");
  score->add_option("--tau", o.tau, "Lastde maximum scale");
  score->add_option("--samples", o.samples, "Lastde++ sample count");
  score->add_option("--counts", o.counts, "Token count file for freq_logp");
  score->add_option("--out", o.out, "Score file to write");
  score->add_option("--config", o.config, "Run config; scores every input and method");

  auto* eval = app.add_subcommand("eval", "AUROC per (task, domain, model, method)");
  eval->add_option("--scores", o.scores, "Score files")->expected(1, -1);
  eval->add_option("--traces", o.label_traces, "Trace files holding the labels")->expected(1, -1);
  eval->add_option("--bootstrap", o.bootstrap, "Bootstrap iterations for intervals (0: off)");
  eval->add_option("--level", o.level, "Bootstrap interval level");
  eval->add_option("--out", o.out, "Results CSV to write");
  eval->add_option("--config", o.config, "Run config");

  auto* transfer = app.add_subcommand("transfer", "Rank correlation between two results tables");
  transfer->add_option("--a", o.a, "Results CSV (mia), or a table with both tasks");
  transfer->add_option("--b", o.b, "Results CSV (mgtd)");
  transfer->add_option("--rank-mode", o.rank_mode, "mean_auroc or cell_rank");
  transfer->add_option("--top-k", o.top_k, "Only the k best methods on table a");
  transfer->add_option("--out", o.out, "Transfer CSV to write");

  auto* report = app.add_subcommand("report", "Score histograms and JS distances");
  report->add_option("--scores", o.scores, "Score files")->expected(1, -1);
  report->add_option("--traces", o.label_traces, "Trace files holding the labels")->expected(1, -1);
  report->add_option("--bins", o.bins, "Histogram bins");
  report->add_flag("--zlib", o.zlib, "Histogram zlib entropy of the traces' text instead");
  report->add_option("--hist", o.hist, "Histogram CSV to write");
  report->add_option("--js", o.js, "JS distance CSV to write");
  report->add_option("--config", o.config, "Run config");

  auto* validate = app.add_subcommand("validate", "Check a trace file");
  validate->add_option("--traces", o.traces, "Trace file");
  validate->add_option("--require", o.require, "Fields every document must carry, e.g. mu,sigma");

  auto* synth = app.add_subcommand("synth", "Write a synthetic trace file");
  synth->add_option("--out", o.out, "Trace file to write");
  synth->add_option("--task", o.task, "mia or mgtd");
  synth->add_option("--docs", o.synth.n_docs_per_class, "Documents per class");
  synth->add_option("--tokens", o.synth.n_tokens, "Tokens per document");
  synth->add_option("--mu0", o.synth.mu0, "Class 0 mean token logp");
  synth->add_option("--sd0", o.synth.sd0, "Class 0 token logp stddev");
  synth->add_option("--mu1", o.synth.mu1, "Class 1 mean token logp");
  synth->add_option("--sd1", o.synth.sd1, "Class 1 token logp stddev");
  synth->add_option("--perturbations", o.synth.n_perturbations, "Perturbations per document");
  synth->add_option("--samples", o.synth.n_samples, "Sampled sequences per document");
  synth->add_option("--vocab", o.synth.vocab_size, "Vocabulary size");
  synth->add_flag("--no-text", o.no_text, "Omit document text");

  auto* runc = app.add_subcommand("run", "Run a config: score, eval, report and transfer");
  runc->add_option("--config", o.config, "Run config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail(2, e.what());
  }
  debug("jobs=" + std::to_string(o.jobs));

  if (score->parsed()) return cmd_score(o);
  if (eval->parsed()) return cmd_eval(o);
  if (transfer->parsed()) return cmd_transfer(o);
  if (report->parsed()) return cmd_report(o);
  if (validate->parsed()) return cmd_validate(o);
  if (synth->parsed()) return cmd_synth(o);
  return run_config(o, MINT_STAGE_ALL);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::string msg = f.message;
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "ERROR " << f.code << ": " << msg << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "ERROR 4: " << e.what() << '\n';
    return 4;
  }
}
