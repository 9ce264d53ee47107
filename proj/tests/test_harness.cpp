#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "mint/error.hpp"
#include "mint/harness.hpp"
#include "mint/synth.hpp"
#include "support.hpp"

using namespace mint;
using test_support::slurp;
using test_support::spit;
using test_support::TempDir;
using doctest::Approx;

namespace {

std::string write_synth(const TempDir& dir, const std::string& name, Task task, std::uint64_t seed,
                        std::size_t docs = 20) {
  SynthConfig cfg;
  cfg.n_docs_per_class = docs;
  cfg.n_tokens = 80;
  cfg.task = task;
  cfg.seed = seed;
  cfg.n_samples = 4;
  const auto path = dir.file(name);
  write_traces_file(gen_traceset(cfg), path);
  return path;
}

std::vector<MethodSpec> specs(std::initializer_list<const char*> names) {
  std::vector<MethodSpec> out;
  for (auto n : names) out.push_back(parse_method_spec(n));
  return out;
}

EvalResult result(const std::string& method, double auroc, Task task = Task::mia) {
  EvalResult r;
  r.method = parse_method_spec(method);
  r.task = task;
  r.domain = "d";
  r.model_id = "m";
  r.auroc = auroc;
  r.n_pos = r.n_neg = 10;
  return r;
}

std::size_t count_lines(const std::string& text) {
  return std::size_t(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("run config parsing") {
  auto cfg = parse_run_config(R"({
    "inputs": [{"path": "a.jsonl", "task": "mia", "domain": "wiki"}],
    "methods": ["loss", {"method": "min_k", "params": {"k": 10}}],
    "output_dir": "out", "seed": 5, "bootstrap": {"iters": 200, "level": 0.9},
    "hist_bins": 20, "rank_mode": "cell_rank", "top_k": 5})",
                              "/base");
  REQUIRE(cfg.inputs.size() == 1);
  CHECK(cfg.inputs[0].path == "/base/a.jsonl");
  CHECK(cfg.inputs[0].task == Task::mia);
  CHECK(cfg.inputs[0].domain == "wiki");
  CHECK(cfg.output_dir == "/base/out");
  CHECK(cfg.methods.size() == 2);
  CHECK(cfg.methods[1].k_percent == 10.0);
  CHECK(cfg.seed == 5);
  CHECK(cfg.bootstrap->iters == 200);
  CHECK(cfg.hist_bins == 20);
  CHECK(cfg.rank_mode == RankMode::cell_rank);
  CHECK(cfg.top_k == 5u);

  auto defaults = parse_run_config(R"({"inputs":[{"path":"a"}],"methods":["loss"],"output_dir":"o"})");
  CHECK(defaults.hist_bins == 50);
  CHECK_FALSE(defaults.bootstrap.has_value());
  CHECK(defaults.rank_mode == RankMode::mean_auroc);

  const char* bad[] = {
      R"({"inputs":[],"methods":["loss"],"output_dir":"o"})",
      R"({"inputs":[{"path":"a"}],"methods":[],"output_dir":"o"})",
      R"({"inputs":[{"path":"a"}],"methods":["nope"],"output_dir":"o"})",
      R"({"inputs":[{"path":"a"}],"methods":["loss"],"output_dir":"o","extra":1})",
      R"({"inputs":[{"path":"a"}],"methods":[{"method":"loss","params":{"k":3}}],"output_dir":"o"})",
      R"({"inputs":[{"path":"a"}],"methods":["loss","loss"],"output_dir":"o"})",
      R"({"inputs":[{"path":"a"}],"methods":["loss"],"output_dir":"o","bootstrap":{"iters":5}})",
      R"(not json)",
  };
  for (auto text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_run_config(text), ConfigError);
  }
}

TEST_CASE("score file round trip") {
  TempDir dir;
  auto m = parse_method_spec("min_k");
  std::ostringstream out;
  write_score_header(out, Task::mgtd, m, "src.jsonl");
  out << serialize_score_entry({"a", 0.25, "", false}, m) << '\n';
  out << serialize_score_entry({"b", std::nullopt, "missing:ce@token0", false}, m) << '\n';
  out << serialize_score_entry({"c", -1.5, "", true}, m) << '\n';
  CHECK(out.str() ==
        "{\"format\":\"mint-scores\",\"method\":\"min_k\",\"params\":\"k_percent=20\","
        "\"source\":\"src.jsonl\",\"task\":\"mgtd\",\"version\":1}\n"
        "{\"doc_id\":\"a\",\"method\":\"min_k\",\"score\":0.25}\n"
        "{\"doc_id\":\"b\",\"skipped\":\"missing:ce@token0\"}\n"
        "{\"doc_id\":\"c\",\"flag\":\"std_floor\",\"method\":\"min_k\",\"score\":-1.5}\n");
  spit(dir.file("s.jsonl"), out.str());
  auto f = read_score_file(dir.file("s.jsonl"));
  CHECK(f.task == Task::mgtd);
  CHECK(f.method == m);
  CHECK(f.source == "src.jsonl");
  REQUIRE(f.entries.size() == 3);
  CHECK(*f.entries[0].score == 0.25);
  CHECK(f.entries[1].skipped == "missing:ce@token0");
  CHECK(f.entries[2].std_floor);
}

TEST_CASE("scoring one input with three methods writes three files") {
  TempDir dir;
  const auto traces = write_synth(dir, "t.jsonl", Task::mia, 1);
  RunConfig cfg;
  cfg.inputs.push_back({traces, std::nullopt, "", ""});
  cfg.methods = specs({"loss", "binoculars", "min_k"});
  cfg.output_dir = dir.file("out");
  auto sums = run_scoring(cfg, 2);
  REQUIRE(sums.size() == 3);
  for (const auto& s : sums) {
    CHECK(s.scored + s.skipped == s.total);
    CHECK(s.total == 40);
    CHECK(std::filesystem::exists(s.output));
  }
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.file("out/scores"))) files += e.is_regular_file();
  CHECK(files == 3);
}

TEST_CASE("partial support is skipped with a reason; no support is a hard error") {
  TempDir dir;
  SynthConfig sc;
  sc.n_docs_per_class = 5;
  sc.n_tokens = 10;
  auto ts = gen_traceset(sc);
  for (std::size_t i = 0; i < ts.traces.size(); i += 3) {
    for (auto& t : ts.traces[i].tokens) t.ce.reset();
  }
  write_traces_file(ts, dir.file("ragged.jsonl"));
  const std::vector<MethodSpec> bino = specs({"binoculars"});
  const std::vector<std::string> out = {dir.file("b.jsonl")};
  auto s = score_trace_file(dir.file("ragged.jsonl"), bino, out, nullptr, 1);
  CHECK(s[0].skipped == 4);
  CHECK(s[0].scored == 6);
  CHECK(s[0].first_skip_reason == "missing:ce@token0");
  auto f = read_score_file(out[0]);
  REQUIRE(f.entries.size() == 10);
  CHECK(f.entries[0].skipped == "missing:ce@token0");
  CHECK(f.entries[1].score.has_value());
  for (std::size_t i = 0; i < ts.traces.size(); ++i) CHECK(f.entries[i].doc_id == ts.traces[i].doc_id);

  for (auto& d : ts.traces) {
    for (auto& t : d.tokens) t.ce.reset();
  }
  write_traces_file(ts, dir.file("none.jsonl"));
  try {
    score_trace_file(dir.file("none.jsonl"), bino, out, nullptr, 1);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("ce") != std::string::npos);
  }
  CHECK_FALSE(std::filesystem::exists(out[0]));
}

TEST_CASE("frequency table fills freq_logp for dc-pdd") {
  TempDir dir;
  SynthConfig sc;
  sc.n_docs_per_class = 3;
  sc.n_tokens = 10;
  auto ts = gen_traceset(sc);
  for (auto& d : ts.traces) {
    for (auto& t : d.tokens) t.freq_logp.reset();
  }
  write_traces_file(ts, dir.file("t.jsonl"));
  const std::vector<MethodSpec> m = specs({"dcpdd"});
  const std::vector<std::string> out = {dir.file("s.jsonl")};
  CHECK_THROWS_AS(score_trace_file(dir.file("t.jsonl"), m, out, nullptr, 1), DataError);
  std::vector<CountRecord> counts = {{0, 100}, {1, 50}};
  auto table = build_freq_table(counts, sc.vocab_size);
  auto s = score_trace_file(dir.file("t.jsonl"), m, out, &table, 1);
  CHECK(s[0].scored == 6);
}

TEST_CASE("evaluation") {
  TempDir dir;
  const auto a = write_synth(dir, "a.jsonl", Task::mia, 3);
  RunConfig cfg;
  cfg.inputs.push_back({a, std::nullopt, "", ""});
  cfg.inputs.push_back({a, std::nullopt, "other", ""});
  cfg.methods = specs({"loss", "rank"});
  cfg.output_dir = dir.file("out");
  cfg.bootstrap = BootstrapConfig{200, 0.95};
  run_scoring(cfg, 1);
  auto results = run_eval(cfg);
  // Two groups (domains) x two methods.
  CHECK(results.size() == 4);
  const auto csv = slurp(dir.file("out/results.csv"));
  CHECK(count_lines(csv) == 1 + 4);
  for (const auto& r : results) {
    CHECK(r.n_pos == 20);
    CHECK(r.n_neg == 20);
    CHECK(*r.ci_low <= r.auroc);
    CHECK(r.auroc <= *r.ci_high);
    if (r.method.method == Method::loss) CHECK(r.auroc > 0.9);
  }
  std::istringstream in(csv);
  auto back = read_results_csv(in);
  REQUIRE(back.size() == results.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].auroc == results[i].auroc);
    CHECK(back[i].method == results[i].method);
    CHECK(back[i].domain == results[i].domain);
    CHECK(back[i].ci_high == results[i].ci_high);
  }
}

TEST_CASE("single-class group is an error naming the group") {
  TempDir dir;
  SynthConfig sc;
  sc.n_docs_per_class = 3;
  sc.n_tokens = 10;
  auto ts = gen_traceset(sc);
  std::erase_if(ts.traces, [](const DocumentTrace& d) { return d.label == Label::nonmember; });
  write_traces_file(ts, dir.file("t.jsonl"));
  const std::vector<MethodSpec> m = specs({"loss"});
  const std::vector<std::string> out = {dir.file("s.jsonl")};
  score_trace_file(dir.file("t.jsonl"), m, out, nullptr, 1);
  std::vector<ScoreFile> files = {read_score_file(out[0])};
  auto labels = load_labels(dir.file("t.jsonl"));
  std::vector<const LabelIndex*> per = {&labels};
  try {
    evaluate(files, per, {});
    FAIL("expected an error");
  } catch (const DegenerateError& e) {
    CHECK(std::string(e.what()).find("mia/synthetic/synth/loss") != std::string::npos);
  }
}

TEST_CASE("transfer report") {
  std::vector<EvalResult> t = {result("loss", 0.9), result("rank", 0.7), result("zlib", 0.6),
                               result("binoculars", 0.95)};
  auto same = transfer_report(t, t);
  CHECK(same.rho == 1.0);
  REQUIRE(same.rows.size() == 4);
  CHECK(same.rows[0].method.method == Method::binoculars);
  CHECK(same.rows[0].family == Family::detection);
  CHECK(same.rows[0].rank_a == 1.0);

  std::vector<EvalResult> rev = {result("loss", 0.6), result("rank", 0.9), result("zlib", 0.95),
                                 result("binoculars", 0.5)};
  CHECK(transfer_report(t, rev).rho == -1.0);

  auto top = transfer_report(t, rev, RankMode::mean_auroc, 3);
  CHECK(top.rows.size() == 3);

  std::vector<EvalResult> fewer = {result("loss", 0.9), result("rank", 0.7), result("recall", 0.6)};
  try {
    transfer_report(t, fewer);
    FAIL("expected an error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("zlib") != std::string::npos);
    CHECK(msg.find("binoculars") != std::string::npos);
    CHECK(msg.find("recall") != std::string::npos);
  }

  std::ostringstream out;
  write_transfer_csv(same, out);
  const auto text = out.str();
  CHECK(text.rfind("method,family,mean_auroc_a,mean_auroc_b,rank_a,rank_b\n", 0) == 0);
  CHECK(text.find("\nrho,1\n") != std::string::npos);
  CHECK(text.find("\np_value,") != std::string::npos);
}

TEST_CASE("transfer rankings: mean AUROC versus per-cell ranks") {
  // Mean AUROCs loss 0.7, rank 0.75, zlib 0.35 rank as 2, 1, 3. Per-cell
  // ranks (1, 2, 3) and (3, 1, 2) average to 2, 1.5, 2.5.
  std::vector<EvalResult> t;
  auto add = [&](const char* m, const char* cell, double a) {
    auto r = result(m, a);
    r.domain = cell;
    t.push_back(r);
  };
  add("loss", "x", 0.9);
  add("rank", "x", 0.8);
  add("zlib", "x", 0.1);
  add("loss", "y", 0.5);
  add("rank", "y", 0.7);
  add("zlib", "y", 0.6);
  auto mean_mode = transfer_report(t, t, RankMode::mean_auroc);
  auto cell_mode = transfer_report(t, t, RankMode::cell_rank);
  std::map<std::string, double> mean_ranks, cell_ranks;
  for (const auto& r : mean_mode.rows) mean_ranks[r.method.label()] = r.rank_a;
  for (const auto& r : cell_mode.rows) cell_ranks[r.method.label()] = r.rank_a;
  CHECK(mean_ranks["rank"] == 1.0);
  CHECK(mean_ranks["loss"] == 2.0);
  CHECK(mean_ranks["zlib"] == 3.0);
  CHECK(cell_ranks["rank"] == 1.5);
  CHECK(cell_ranks["loss"] == 2.0);
  CHECK(cell_ranks["zlib"] == 2.5);
}

TEST_CASE("distribution report") {
  TempDir dir;
  const auto a = write_synth(dir, "a.jsonl", Task::mia, 4);
  const std::vector<MethodSpec> m = specs({"loss", "min_k"});
  const std::vector<std::string> out = {dir.file("loss.jsonl"), dir.file("mink.jsonl")};
  score_trace_file(a, m, out, nullptr, 1);
  // The same scores under a second name.
  auto loss = read_score_file(out[0]);
  auto copy = loss;
  copy.method = parse_method_spec("logrank");
  std::vector<ScoreFile> files = {loss, copy, read_score_file(out[1])};
  auto labels = load_labels(a);
  std::vector<const LabelIndex*> per(files.size(), &labels);
  auto rep = distribution_report(files, per, 10);

  std::map<std::pair<std::string, std::string>, double> mass;
  for (const auto& h : rep.histograms) mass[{h.method, h.cls}] += h.density * (h.bin_right - h.bin_left);
  CHECK(mass.size() == 6);
  for (const auto& [key, total] : mass) CHECK(total == Approx(1.0).epsilon(1e-9));

  bool found = false;
  for (const auto& j : rep.js) {
    CHECK(j.distance >= 0.0);
    CHECK(j.distance <= std::sqrt(std::log(2.0)) + 1e-12);
    if (j.method_a == "logrank" && j.method_b == "loss") {
      CHECK(j.distance == 0.0);
      found = true;
    }
  }
  CHECK(found);

  std::ostringstream h;
  write_histograms_csv(rep.histograms, h);
  CHECK(h.str().rfind("method,class,bin_left,bin_right,density\n", 0) == 0);
  std::ostringstream j;
  write_js_csv(rep.js, j);
  CHECK(j.str().rfind("method_a,method_b,class,js_distance\n", 0) == 0);
}

TEST_CASE("distribution report rejects an empty class") {
  auto f = ScoreFile{};
  f.method = parse_method_spec("loss");
  f.entries.push_back({"a", 1.0, "", false});
  LabelIndex labels;
  labels["a"] = {Label::member, "d", "m"};
  std::vector<ScoreFile> files = {f};
  std::vector<const LabelIndex*> per = {&labels};
  CHECK_THROWS_AS(distribution_report(files, per, 10), DataError);
}

TEST_CASE("zlib entropy histograms") {
  TempDir dir;
  const auto a = write_synth(dir, "a.jsonl", Task::mgtd, 5);
  const std::vector<std::string> paths = {a};
  auto rows = zlib_distribution(paths, 8);
  CHECK(rows.size() == 16);
  double mass = 0.0;
  for (const auto& r : rows) {
    CHECK(r.method == "zlib_entropy");
    if (r.cls == "human") mass += r.density * (r.bin_right - r.bin_left);
  }
  CHECK(mass == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pipeline is byte-identical across runs and job counts") {
  TempDir dir;
  const auto a = write_synth(dir, "a.jsonl", Task::mia, 6, 10);
  const auto b = write_synth(dir, "b.jsonl", Task::mgtd, 7, 10);
  auto run = [&](const std::string& out, unsigned jobs) {
    RunConfig cfg;
    cfg.inputs = {{a, Task::mia, "", ""}, {b, Task::mgtd, "", ""}};
    for (auto m : kAllMethods) cfg.methods.push_back(MethodSpec::defaults(m));
    cfg.methods.back().n_samples = 4;
    cfg.output_dir = dir.file(out);
    cfg.bootstrap = BootstrapConfig{100, 0.9};
    auto res = run_pipeline(cfg, jobs);
    CHECK(res.transfer.has_value());
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(cfg.output_dir)) {
      if (e.is_regular_file()) {
        files[std::filesystem::relative(e.path(), cfg.output_dir).string()] = slurp(e.path().string());
      }
    }
    return files;
  };
  auto one = run("o1", 1);
  auto again = run("o2", 1);
  auto many = run("o3", 8);
  CHECK(one.size() == 36 + 4);
  CHECK(one == many);
  // Score files name their source, which is the same path in every run.
  CHECK(one == again);

  RunConfig wrong;
  wrong.inputs = {{a, Task::mgtd, "", ""}};
  wrong.methods = specs({"loss"});
  wrong.output_dir = dir.file("o4");
  CHECK_THROWS_AS(run_scoring(wrong, 1), ConfigError);
}

TEST_CASE("csv helpers") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(split_csv_line("a,\"b,c\",,\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "", "d\"e"});
}
