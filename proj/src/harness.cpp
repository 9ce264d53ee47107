#include "mint/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mint/error.hpp"
#include "mint/format.hpp"
#include "mint/rng.hpp"
#include "parallel.hpp"

namespace mint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

MethodSpec method_from(std::string_view name, std::string_view params) {
  MethodSpec spec = parse_method_spec(name);
  std::size_t start = 0;
  while (start < params.size()) {
    auto end = params.find(';', start);
    if (end == std::string_view::npos) end = params.size();
    auto item = params.substr(start, end - start);
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("malformed params " + std::string(params));
    double v = 0.0;
    auto val = item.substr(eq + 1);
    auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || p != val.data() + val.size()) {
      throw ConfigError("malformed parameter value in " + std::string(params));
    }
    spec.set_param(item.substr(0, eq), v);
    start = end + 1;
  }
  return spec;
}

std::ofstream open_out(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failure on " + path);
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '(' || c == ')' || c == ';' || c == '/' || c == ' ') c = '.';
    if (c == '=') c = '-';
  }
  while (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

// ---------------------------------------------------------------------------
// Run config

void RunConfig::validate() const {
  if (inputs.empty()) throw ConfigError("run config needs at least one input");
  if (methods.empty()) throw ConfigError("run config needs at least one method");
  if (output_dir.empty()) throw ConfigError("run config needs output_dir");
  if (hist_bins < 2) throw ConfigError("hist_bins must be at least 2");
  if (bootstrap) {
    if (bootstrap->iters < 100) throw ConfigError("bootstrap.iters must be at least 100");
    if (!(bootstrap->level > 0.0 && bootstrap->level < 1.0)) {
      throw ConfigError("bootstrap.level must lie in (0, 1)");
    }
  }
  if (top_k && *top_k < 3) throw ConfigError("top_k must be at least 3");
  std::set<std::string> labels;
  for (const auto& m : methods) {
    if (!labels.insert(m.label()).second) throw ConfigError("duplicate method " + m.label());
  }
}

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "inputs") {
        for (const auto& in : v) {
          InputSpec spec;
          spec.path = resolve(base_dir, in.at("path").get<std::string>());
          if (in.contains("task")) {
            auto t = parse_task(in.at("task").get<std::string>());
            if (!t) throw ConfigError("input task must be mia or mgtd");
            spec.task = t;
          }
          spec.domain = in.value("domain", "");
          spec.model_id = in.value("model_id", "");
          cfg.inputs.push_back(std::move(spec));
        }
      } else if (key == "methods") {
        for (const auto& m : v) {
          if (m.is_string()) {
            cfg.methods.push_back(parse_method_spec(m.get<std::string>()));
            continue;
          }
          MethodSpec spec = parse_method_spec(m.at("method").get<std::string>());
          if (m.contains("params")) {
            for (const auto& [pk, pv] : m.at("params").items()) spec.set_param(pk, pv.get<double>());
          }
          cfg.methods.push_back(spec);
        }
      } else if (key == "output_dir") {
        cfg.output_dir = resolve(base_dir, v.get<std::string>());
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "bootstrap") {
        if (v.is_null()) continue;
        BootstrapConfig b;
        b.iters = v.value("iters", b.iters);
        b.level = v.value("level", b.level);
        cfg.bootstrap = b;
      } else if (key == "hist_bins") {
        cfg.hist_bins = v.get<int>();
      } else if (key == "freq_table") {
        if (!v.is_null()) cfg.freq_table = resolve(base_dir, v.get<std::string>());
      } else if (key == "rank_mode") {
        auto s = v.get<std::string>();
        if (s == "mean_auroc") {
          cfg.rank_mode = RankMode::mean_auroc;
        } else if (s == "cell_rank") {
          cfg.rank_mode = RankMode::cell_rank;
        } else {
          throw ConfigError("rank_mode must be mean_auroc or cell_rank");
        }
      } else if (key == "top_k") {
        if (!v.is_null()) cfg.top_k = v.get<std::size_t>();
      } else {
        throw ConfigError("unknown run config key " + key);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Score files

void write_score_header(std::ostream& out, Task task, const MethodSpec& method,
                        const std::string& source) {
  std::string h = "{\"format\":\"mint-scores\",\"method\":";
  append_json_string(h, method_name(method.method));
  h += ",\"params\":";
  append_json_string(h, method.params_string());
  h += ",\"source\":";
  append_json_string(h, source);
  h += ",\"task\":";
  append_json_string(h, to_string(task));
  h += ",\"version\":1}\n";
  out << h;
}

std::string serialize_score_entry(const ScoreEntry& e, const MethodSpec& method) {
  std::string s = "{\"doc_id\":";
  append_json_string(s, e.doc_id);
  if (e.score) {
    if (e.std_floor) s += ",\"flag\":\"std_floor\"";
    s += ",\"method\":";
    append_json_string(s, method_name(method.method));
    s += ",\"score\":";
    append_double(s, *e.score);
  } else {
    s += ",\"skipped\":";
    append_json_string(s, e.skipped);
  }
  s += '}';
  return s;
}

ScoreFile read_score_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open score file " + path);
  ScoreFile f;
  std::string line;
  std::size_t line_no = 0;
  auto parse = [&](const std::string& text) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, path + ": " + e.what());
    }
  };
  if (!std::getline(in, line)) throw ParseError(1, path + ": missing header");
  ++line_no;
  try {
    json h = parse(line);
    if (h.value("format", "") != "mint-scores") throw ParseError(1, path + ": not a score file");
    auto task = parse_task(h.at("task").get<std::string>());
    if (!task) throw ParseError(1, path + ": bad task");
    f.task = *task;
    f.method = method_from(h.at("method").get<std::string>(), h.value("params", ""));
    f.source = h.value("source", "");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json r = parse(line);
      ScoreEntry e;
      e.doc_id = r.at("doc_id").get<std::string>();
      if (r.contains("skipped")) {
        e.skipped = r.at("skipped").get<std::string>();
      } else {
        e.score = r.at("score").get<double>();
        e.std_floor = r.value("flag", "") == "std_floor";
      }
      f.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(line_no, path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(line_no, path + ": " + e.what());
  }
  return f;
}

// ---------------------------------------------------------------------------
// Scoring

std::vector<ScoreSummary> score_trace_file(const std::string& trace_path,
                                           std::span<const MethodSpec> methods,
                                           std::span<const std::string> out_paths,
                                           const FrequencyTable* freq, unsigned jobs) {
  if (methods.size() != out_paths.size()) {
    throw Error(ErrorKind::internal, "score_trace_file: one output path per method");
  }
  TraceReader reader(trace_path);
  std::vector<std::ofstream> outs;
  std::vector<ScoreSummary> summaries(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    outs.push_back(open_out(out_paths[m]));
    write_score_header(outs.back(), reader.task(), methods[m], trace_path);
    summaries[m].source = trace_path;
    summaries[m].method = methods[m];
    summaries[m].output = out_paths[m];
  }
  std::vector<Field> required;
  for (const auto& m : methods) required.push_back(required_fields(m.method));

  const std::size_t batch_size = 64 * std::max(1u, jobs);
  std::vector<DocumentTrace> batch;
  // lines[doc][method]
  std::vector<std::vector<std::string>> lines;
  std::vector<std::vector<std::uint8_t>> scored;

  auto flush_batch = [&] {
    lines.assign(batch.size(), std::vector<std::string>(methods.size()));
    scored.assign(batch.size(), std::vector<std::uint8_t>(methods.size(), 0));
    detail::parallel_for(batch.size(), jobs, [&](std::size_t i) {
      const auto& doc = batch[i];
      for (std::size_t m = 0; m < methods.size(); ++m) {
        ScoreEntry e;
        e.doc_id = doc.doc_id;
        auto violations = validate_trace(doc, required[m]);
        if (!violations.empty()) {
          e.skipped = violations.front().to_string();
        } else {
          try {
            auto r = score_document(doc, methods[m]);
            e.score = r.score;
            e.std_floor = r.std_floor;
          } catch (const ConfigError&) {
            throw;
          } catch (const Error& err) {
            e.skipped = err.what();
          }
        }
        scored[i][m] = e.score.has_value();
        lines[i][m] = serialize_score_entry(e, methods[m]);
      }
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        outs[m] << lines[i][m] << '\n';
        auto& s = summaries[m];
        ++s.total;
        if (scored[i][m]) {
          ++s.scored;
        } else {
          ++s.skipped;
          if (s.first_skip_reason.empty()) {
            // reason text sits in the serialized record; recover it from the line
            json r = json::parse(lines[i][m]);
            s.first_skip_reason = r.at("skipped").get<std::string>();
          }
        }
      }
    }
    batch.clear();
  };

  while (auto doc = reader.next()) {
    if (freq) join_frequencies(*doc, *freq);
    batch.push_back(std::move(*doc));
    if (batch.size() >= batch_size) flush_batch();
  }
  if (!batch.empty()) flush_batch();

  for (std::size_t m = 0; m < methods.size(); ++m) finish(outs[m], out_paths[m]);
  for (const auto& s : summaries) {
    if (s.total > 0 && s.scored == 0) {
      outs.clear();
      for (const auto& path : out_paths) {
        std::error_code ec;
        fs::remove(path, ec);
      }
      throw DataError("method " + s.method.label() + " cannot score any document of " +
                      trace_path + ": " + s.first_skip_reason);
    }
  }
  return summaries;
}

namespace {

std::string score_path(const RunConfig& cfg, std::size_t input, const MethodSpec& m) {
  const std::string stem = fs::path(cfg.inputs[input].path).stem().string();
  return (fs::path(cfg.output_dir) / "scores" /
          (std::to_string(input) + "-" + stem + "__" + sanitize(m.label()) + ".jsonl"))
      .string();
}

}  // namespace

std::vector<ScoreSummary> run_scoring(const RunConfig& cfg, unsigned jobs) {
  cfg.validate();
  std::optional<FrequencyTable> freq;
  if (cfg.freq_table) freq = read_freq_table_file(*cfg.freq_table);
  std::vector<ScoreSummary> all;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const auto& in = cfg.inputs[i];
    if (in.task) {
      TraceReader probe(in.path);
      if (probe.task() != *in.task) {
        throw ConfigError("input " + in.path + " is a " + std::string(to_string(probe.task())) +
                          " trace set, config says " + std::string(to_string(*in.task)));
      }
    }
    std::vector<std::string> outs;
    for (const auto& m : cfg.methods) outs.push_back(score_path(cfg, i, m));
    auto s = score_trace_file(in.path, cfg.methods, outs, freq ? &*freq : nullptr, jobs);
    all.insert(all.end(), s.begin(), s.end());
  }
  return all;
}

// ---------------------------------------------------------------------------
// Evaluation

LabelIndex load_labels(const std::string& trace_path, const std::string& domain_override,
                       const std::string& model_override) {
  TraceReader reader(trace_path);
  LabelIndex index;
  while (auto d = reader.next()) {
    DocInfo info{d->label, domain_override.empty() ? d->domain : domain_override,
                 model_override.empty() ? d->model_id : model_override};
    index.emplace(d->doc_id, std::move(info));
  }
  return index;
}

void merge_labels(LabelIndex& a, const LabelIndex& b) {
  for (const auto& [id, info] : b) {
    auto [it, inserted] = a.emplace(id, info);
    if (!inserted && (it->second.label != info.label || it->second.domain != info.domain ||
                      it->second.model_id != info.model_id)) {
      throw DataError("document " + id + " carries conflicting labels across trace files");
    }
  }
}

namespace {

using GroupKey = std::tuple<int, std::string, std::string, std::string>;

struct Group {
  MethodSpec method;
  std::vector<LabeledScore> scores;
};

std::map<GroupKey, Group> pool_scores(std::span<const ScoreFile> files,
                                      std::span<const LabelIndex* const> labels) {
  if (files.size() != labels.size()) {
    throw Error(ErrorKind::internal, "evaluate: one label index per score file");
  }
  std::map<GroupKey, Group> groups;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& file = files[f];
    const auto& index = *labels[f];
    for (const auto& e : file.entries) {
      if (!e.score) continue;
      auto it = index.find(e.doc_id);
      if (it == index.end()) throw DataError("no label for scored document " + e.doc_id);
      const auto& info = it->second;
      if (info.label == Label::unlabeled) continue;
      if (!label_fits_task(info.label, file.task)) {
        throw DataError("document " + e.doc_id + " has label " +
                        std::string(to_string(info.label)) + " in a " +
                        std::string(to_string(file.task)) + " score file");
      }
      GroupKey key{int(file.task), info.domain, info.model_id, file.method.label()};
      auto& g = groups[key];
      g.method = file.method;
      g.scores.push_back({e.doc_id, *e.score, is_positive(info.label)});
    }
  }
  return groups;
}

}  // namespace

std::vector<EvalResult> evaluate(std::span<const ScoreFile> files,
                                 std::span<const LabelIndex* const> labels,
                                 const EvalOptions& options) {
  auto groups = pool_scores(files, labels);
  std::vector<EvalResult> out;
  std::uint64_t group_index = 0;
  for (const auto& [key, g] : groups) {
    EvalResult r;
    r.method = g.method;
    r.task = Task(std::get<0>(key));
    r.domain = std::get<1>(key);
    r.model_id = std::get<2>(key);
    for (const auto& s : g.scores) (s.positive ? r.n_pos : r.n_neg)++;
    if (r.n_pos == 0 || r.n_neg == 0) {
      throw DegenerateError("group " + std::string(to_string(r.task)) + "/" + r.domain + "/" +
                            r.model_id + "/" + r.method.label() + " has a single class");
    }
    r.auroc = auroc(g.scores);
    if (options.bootstrap) {
      std::vector<double> values;
      std::vector<std::uint8_t> pos;
      for (const auto& s : g.scores) {
        values.push_back(s.score);
        pos.push_back(s.positive);
      }
      auto [lo, hi] = bootstrap_ci(values, pos, options.bootstrap->iters, options.bootstrap->level,
                                   derive_seed(options.seed, 0xE7A1, group_index));
      // Percentile intervals can miss the point estimate on tiny samples.
      r.ci_low = std::min(lo, r.auroc);
      r.ci_high = std::max(hi, r.auroc);
    }
    ++group_index;
    out.push_back(std::move(r));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

void write_results_csv(std::span<const EvalResult> results, std::ostream& out) {
  out << "task,domain,model_id,method,params,auroc,n_pos,n_neg,ci_low,ci_high\n";
  for (const auto& r : results) {
    out << to_string(r.task) << ',' << csv_field(r.domain) << ',' << csv_field(r.model_id) << ','
        << method_name(r.method.method) << ',' << r.method.params_string() << ','
        << format_double(r.auroc) << ',' << r.n_pos << ',' << r.n_neg << ','
        << (r.ci_low ? format_double(*r.ci_low) : "") << ','
        << (r.ci_high ? format_double(*r.ci_high) : "") << '\n';
  }
}

std::vector<EvalResult> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty results table");
  ++line_no;
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"task",   "domain", "model_id", "method", "params",
                                             "auroc",  "n_pos",  "n_neg",    "ci_low", "ci_high"};
  if (header != expected) throw ParseError(1, "unexpected results header");
  std::vector<EvalResult> out;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw ParseError(line_no, "bad number " + s);
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != expected.size()) throw ParseError(line_no, "expected 10 columns");
    EvalResult r;
    auto task = parse_task(f[0]);
    if (!task) throw ParseError(line_no, "bad task " + f[0]);
    r.task = *task;
    r.domain = f[1];
    r.model_id = f[2];
    try {
      r.method = method_from(f[3], f[4]);
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
    r.auroc = number(f[5]);
    r.n_pos = std::size_t(number(f[6]));
    r.n_neg = std::size_t(number(f[7]));
    if (!f[8].empty()) r.ci_low = number(f[8]);
    if (!f[9].empty()) r.ci_high = number(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalResult> read_results_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results table " + path);
  return read_results_csv(in);
}

namespace {

struct LoadedScores {
  std::vector<ScoreFile> files;
  std::vector<std::unique_ptr<LabelIndex>> indexes;
  std::vector<const LabelIndex*> per_file;
};

LoadedScores load_config_scores(const RunConfig& cfg) {
  LoadedScores ls;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const auto& in = cfg.inputs[i];
    ls.indexes.push_back(std::make_unique<LabelIndex>(load_labels(in.path, in.domain, in.model_id)));
    for (const auto& m : cfg.methods) {
      ls.files.push_back(read_score_file(score_path(cfg, i, m)));
      ls.per_file.push_back(ls.indexes.back().get());
    }
  }
  return ls;
}

}  // namespace

std::vector<EvalResult> run_eval(const RunConfig& cfg) {
  cfg.validate();
  auto ls = load_config_scores(cfg);
  EvalOptions opt{cfg.bootstrap, cfg.seed};
  auto results = evaluate(ls.files, ls.per_file, opt);
  const auto path = (fs::path(cfg.output_dir) / "results.csv").string();
  auto out = open_out(path);
  write_results_csv(results, out);
  finish(out, path);
  return results;
}

// ---------------------------------------------------------------------------
// Transfer

namespace {

std::map<std::string, std::pair<MethodSpec, double>> mean_auroc(std::span<const EvalResult> rs) {
  std::map<std::string, std::pair<MethodSpec, double>> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : rs) {
    auto& slot = sums[r.method.label()];
    slot.first = r.method;
    slot.second += r.auroc;
    ++counts[r.method.label()];
  }
  for (auto& [label, slot] : sums) slot.second /= double(counts[label]);
  return sums;
}

std::map<std::string, double> rank_table(std::span<const EvalResult> rs, RankMode mode) {
  if (mode == RankMode::cell_rank) return rank_methods(rs);
  auto means = mean_auroc(rs);
  std::vector<double> neg;
  for (const auto& [label, slot] : means) neg.push_back(-slot.second);
  auto ranks = average_ranks(neg);
  std::map<std::string, double> out;
  std::size_t i = 0;
  for (const auto& [label, slot] : means) out[label] = ranks[i++];
  return out;
}

}  // namespace

TransferReport transfer_report(std::span<const EvalResult> a, std::span<const EvalResult> b,
                               RankMode mode, std::optional<std::size_t> top_k) {
  auto mean_a = mean_auroc(a);
  auto mean_b = mean_auroc(b);
  std::string only_a, only_b;
  for (const auto& [label, _] : mean_a) {
    if (!mean_b.count(label)) only_a += " " + label;
  }
  for (const auto& [label, _] : mean_b) {
    if (!mean_a.count(label)) only_b += " " + label;
  }
  if (!only_a.empty() || !only_b.empty()) {
    throw DataError("method sets differ; only in a:" + (only_a.empty() ? " -" : only_a) +
                    "; only in b:" + (only_b.empty() ? " -" : only_b));
  }
  auto rank_a = rank_table(a, mode);
  auto rank_b = rank_table(b, mode);

  TransferReport rep;
  for (const auto& [label, slot] : mean_a) {
    TransferRow row;
    row.method = slot.first;
    row.family = method_family(slot.first.method);
    row.mean_auroc_a = slot.second;
    row.mean_auroc_b = mean_b.at(label).second;
    row.rank_a = rank_a.at(label);
    row.rank_b = rank_b.at(label);
    rep.rows.push_back(row);
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const auto& x, const auto& y) {
    return x.rank_a < y.rank_a || (x.rank_a == y.rank_a && x.method.label() < y.method.label());
  });
  if (top_k) {
    if (*top_k < rep.rows.size()) rep.rows.resize(*top_k);
  }
  std::vector<double> ra, rb;
  for (const auto& r : rep.rows) {
    ra.push_back(r.rank_a);
    rb.push_back(r.rank_b);
  }
  auto s = spearman(ra, rb);
  rep.rho = s.rho;
  rep.p_value = s.p_value;
  return rep;
}

void write_transfer_csv(const TransferReport& rep, std::ostream& out) {
  out << "method,family,mean_auroc_a,mean_auroc_b,rank_a,rank_b\n";
  for (const auto& r : rep.rows) {
    out << csv_field(r.method.label()) << ',' << to_string(r.family) << ','
        << format_double(r.mean_auroc_a) << ',' << format_double(r.mean_auroc_b) << ','
        << format_double(r.rank_a) << ',' << format_double(r.rank_b) << '\n';
  }
  out << "rho," << format_double(rep.rho) << '\n';
  out << "p_value," << format_double(rep.p_value) << '\n';
}

// ---------------------------------------------------------------------------
// Distributions

namespace {

std::vector<HistogramRow> histogram_rows(const std::string& method,
                                         const std::map<std::string, std::vector<double>>& by_class,
                                         int bins) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [cls, v] : by_class) {
    if (v.empty()) throw DataError("class " + cls + " of " + method + " is empty");
    for (double x : v) lo = std::min(lo, x), hi = std::max(hi, x);
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / double(bins);
  std::vector<HistogramRow> rows;
  for (const auto& [cls, v] : by_class) {
    std::vector<double> counts(std::size_t(bins), 0.0);
    for (double x : v) {
      auto idx = std::min<std::size_t>(std::size_t(bins) - 1, std::size_t((x - lo) / width));
      counts[idx] += 1.0;
    }
    for (int b = 0; b < bins; ++b) {
      const double left = lo + width * double(b);
      const double right = b + 1 == bins ? hi : lo + width * double(b + 1);
      rows.push_back({method, cls, left, right, counts[std::size_t(b)] / (double(v.size()) * width)});
    }
  }
  return rows;
}

std::vector<double> minmax_normalized(std::vector<double> v) {
  if (v.empty()) return v;
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn, hi = *mx;
  for (double& x : v) x = hi > lo ? (x - lo) / (hi - lo) : 0.0;
  return v;
}

}  // namespace

DistributionReport distribution_report(std::span<const ScoreFile> files,
                                       std::span<const LabelIndex* const> labels, int bins) {
  if (files.empty()) throw ConfigError("distribution report needs at least one score file");
  if (bins < 2) throw ConfigError("hist_bins must be at least 2");
  auto groups = pool_scores(files, labels);
  // method label -> class name -> scores, pooled over groups
  std::map<std::string, std::map<std::string, std::vector<double>>> by_method;
  std::map<std::string, Task> method_task;
  for (const auto& [key, g] : groups) {
    const Task task = Task(std::get<0>(key));
    const std::string label = g.method.label();
    for (const auto& s : g.scores) {
      Label l = task == Task::mia ? (s.positive ? Label::member : Label::nonmember)
                                  : (s.positive ? Label::machine : Label::human);
      by_method[label][std::string(to_string(l))].push_back(s.score);
    }
    method_task[label] = task;
  }
  DistributionReport rep;
  for (auto& [method, classes] : by_method) {
    if (classes.size() < 2) throw DataError("method " + method + " has an empty class");
    auto rows = histogram_rows(method, classes, bins);
    rep.histograms.insert(rep.histograms.end(), rows.begin(), rows.end());
  }
  for (auto i = by_method.begin(); i != by_method.end(); ++i) {
    for (auto j = std::next(i); j != by_method.end(); ++j) {
      std::vector<double> all_a, all_b;
      for (const auto& [cls, v] : i->second) all_a.insert(all_a.end(), v.begin(), v.end());
      for (const auto& [cls, v] : j->second) all_b.insert(all_b.end(), v.begin(), v.end());
      rep.js.push_back({i->first, j->first, "all",
                        js_distance(minmax_normalized(all_a), minmax_normalized(all_b), bins)});
      for (const auto& [cls, v] : i->second) {
        auto other = j->second.find(cls);
        if (other == j->second.end()) continue;
        rep.js.push_back({i->first, j->first, cls,
                          js_distance(minmax_normalized(v), minmax_normalized(other->second), bins)});
      }
    }
  }
  return rep;
}

std::vector<HistogramRow> zlib_distribution(std::span<const std::string> trace_paths, int bins) {
  if (bins < 2) throw ConfigError("hist_bins must be at least 2");
  std::map<std::string, std::vector<double>> by_class;
  for (const auto& path : trace_paths) {
    TraceReader reader(path);
    while (auto d = reader.next()) {
      if (d->label == Label::unlabeled) continue;
      if (!d->text_bytes) throw UnsupportedMethodError("zlib_entropy", "text_b64");
      by_class[std::string(to_string(d->label))].push_back(zlib_entropy(*d->text_bytes));
    }
  }
  if (by_class.empty()) throw DataError("no labeled documents with text");
  return histogram_rows("zlib_entropy", by_class, bins);
}

void write_histograms_csv(std::span<const HistogramRow> rows, std::ostream& out) {
  out << "method,class,bin_left,bin_right,density\n";
  for (const auto& r : rows) {
    out << csv_field(r.method) << ',' << r.cls << ',' << format_double(r.bin_left) << ','
        << format_double(r.bin_right) << ',' << format_double(r.density) << '\n';
  }
}

void write_js_csv(std::span<const JsRow> rows, std::ostream& out) {
  out << "method_a,method_b,class,js_distance\n";
  for (const auto& r : rows) {
    out << csv_field(r.method_a) << ',' << csv_field(r.method_b) << ',' << r.cls << ','
        << format_double(r.distance) << '\n';
  }
}

// ---------------------------------------------------------------------------

DistributionReport run_report(const RunConfig& cfg) {
  cfg.validate();
  auto ls = load_config_scores(cfg);
  auto dist = distribution_report(ls.files, ls.per_file, cfg.hist_bins);
  {
    const auto path = (fs::path(cfg.output_dir) / "hist.csv").string();
    auto f = open_out(path);
    write_histograms_csv(dist.histograms, f);
    finish(f, path);
  }
  {
    const auto path = (fs::path(cfg.output_dir) / "js.csv").string();
    auto f = open_out(path);
    write_js_csv(dist.js, f);
    finish(f, path);
  }
  return dist;
}

PipelineOutputs run_pipeline(const RunConfig& cfg, unsigned jobs) {
  PipelineOutputs out;
  out.scoring = run_scoring(cfg, jobs);
  out.results = run_eval(cfg);
  run_report(cfg);

  std::vector<EvalResult> mia, mgtd;
  for (const auto& r : out.results) (r.task == Task::mia ? mia : mgtd).push_back(r);
  if (!mia.empty() && !mgtd.empty()) {
    out.transfer = transfer_report(mia, mgtd, cfg.rank_mode, cfg.top_k);
    const auto path = (fs::path(cfg.output_dir) / "transfer.csv").string();
    auto f = open_out(path);
    write_transfer_csv(*out.transfer, f);
    finish(f, path);
  }
  return out;
}

}  // namespace mint
