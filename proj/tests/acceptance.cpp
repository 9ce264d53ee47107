// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mint/eval.hpp"
#include "mint/harness.hpp"
#include "mint/method.hpp"
#include "mint/metrics_core.hpp"
#include "mint/metrics_lastde.hpp"
#include "mint/metrics_perturb.hpp"
#include "mint/rng.hpp"
#include "mint/synth.hpp"
#include "mint/traces.hpp"

namespace fs = std::filesystem;
using namespace mint;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  std::string note;  // printed on success

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "took %.2fs, budget %.0fs", secs, budget_s);
    o.fail(buf);
  }
  const std::string& extra = o.ok ? o.note : o.detail;
  std::printf("%s %s (%.2fs)%s%s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, extra.empty() ? "" : ": ",
              extra.c_str());
  std::fflush(stdout);
  if (!o.ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double method_auroc(const TraceSet& ts, const MethodSpec& spec) {
  std::vector<double> pos, neg;
  for (const auto& d : ts.traces) (is_positive(d.label) ? pos : neg).push_back(score_document(d, spec).score);
  return auroc(pos, neg);
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

// Exhaustive two-sided permutation p-value for untied data at small n,
// working on integer sums of squared rank differences.
double enumerated_p(const std::vector<int>& y_ranks) {
  const int n = int(y_ranks.size());
  const long mid = long(n) * (long(n) * n - 1) / 6;  // sum d^2 at rho = 0
  auto sum_d2 = [&](const std::vector<int>& y) {
    long s = 0;
    for (int i = 0; i < n; ++i) s += long(i + 1 - y[i]) * (i + 1 - y[i]);
    return s;
  };
  // rho = 1 - 6 S / (n (n^2 - 1)), so |rho| ordering is |mid - S| ordering.
  const long obs = std::labs(mid - sum_d2(y_ranks));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  long hits = 0, total = 0;
  do {
    ++total;
    if (std::labs(mid - sum_d2(perm)) >= obs) ++hits;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return double(hits) / double(total);
}

double de_oracle(const std::vector<double>& x) {
  std::size_t upper = 0, lower = 0;
  for (std::size_t w = 0; w + 2 < x.size(); ++w) {
    const bool zero = (x[w] == 0 && x[w + 1] == 0) || (x[w + 1] == 0 && x[w + 2] == 0);
    const double dot = x[w] * x[w + 1] + x[w + 1] * x[w + 2];
    (zero || dot >= 0 ? upper : lower)++;
  }
  const double n = double(upper + lower);
  double h = 0;
  for (double c : {double(upper), double(lower)}) {
    if (c > 0) h -= c / n * std::log(c / n);
  }
  return h / std::log(2.0);
}

}  // namespace

int main() {
  criterion("auroc matches brute-force pair counting", 5, [](Outcome& o) {
    Rng rng(101);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      std::vector<double> pos(1 + rng.below(200)), neg(1 + rng.below(200));
      for (double& v : pos) v = rng.normal(0.3, 1.0);
      for (double& v : neg) v = rng.normal();
      // Inject ties within and across classes.
      for (std::size_t k = 0; k < pos.size() / 4; ++k) pos[rng.below(pos.size())] = neg[rng.below(neg.size())];
      for (double& v : neg) {
        if (rng.below(5) == 0) v = std::round(v);
      }
      for (double& v : pos) {
        if (rng.below(5) == 0) v = std::round(v);
      }
      worst = std::max(worst, std::abs(auroc(pos, neg) - brute_force_auroc(pos, neg)));
    }
    if (worst > 1e-12) o.fail(fmt("max difference %.3g", worst));
  });

  criterion("gaussian oracle for loss auroc", 30, [](Outcome& o) {
    SynthConfig cfg;
    cfg.n_docs_per_class = 2000;
    cfg.n_tokens = 64;
    cfg.mu0 = -3.0;
    cfg.sd0 = cfg.sd1 = 0.5;
    cfg.mu1 = -3.0 + std::sqrt(2.0 * 0.25 / 64.0);
    cfg.n_perturbations = 0;
    cfg.n_samples = 0;
    cfg.with_text = false;
    cfg.seed = 7;
    const double expected = analytic_auroc_gaussian(cfg.mu0, cfg.sd0, cfg.mu1, cfg.sd1, cfg.n_tokens);
    const double got = method_auroc(gen_traceset(cfg), MethodSpec::defaults(Method::loss));
    if (std::abs(expected - 0.84134) > 1e-5) o.fail(fmt("analytic %.6f", expected));
    o.note = fmt("auroc %.5f vs analytic %.5f", got, expected);
    if (std::abs(got - expected) > 0.02) o.fail(o.note);
  });

  criterion("detectgpt equals neighborhood bit-exactly", 0, [](Outcome& o) {
    SynthConfig cfg;
    cfg.n_docs_per_class = 500;
    cfg.n_tokens = 32;
    cfg.n_samples = 0;
    cfg.seed = 3;
    const auto ts = gen_traceset(cfg);
    if (ts.traces.size() != 1000) o.fail("wrong trace count");
    for (const auto& d : ts.traces) {
      const double a = score_detectgpt(d), b = score_neighborhood(d);
      if (std::memcmp(&a, &b, sizeof a) != 0) {
        o.fail("differs on " + d.doc_id);
        return;
      }
    }
  });

  criterion("min_k at 100 percent equals loss", 0, [](Outcome& o) {
    std::size_t n = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
      SynthConfig cfg;
      cfg.n_docs_per_class = 200;
      cfg.n_tokens = 4 + seed * 37;
      cfg.seed = seed;
      cfg.n_samples = 0;
      for (const auto& d : gen_traceset(cfg).traces) {
        ++n;
        if (score_min_k(d, 100.0) != score_loss(d)) {
          o.fail("differs on " + d.doc_id);
          return;
        }
      }
    }
    if (n != 1200) o.fail("wrong trace count");
  });

  criterion("every method is oriented toward the positive class", 60, [](Outcome& o) {
    SynthConfig cfg;
    cfg.n_docs_per_class = 200;
    cfg.n_tokens = 128;
    cfg.seed = 11;
    for (Task task : {Task::mia, Task::mgtd}) {
      cfg.task = task;
      const auto ts = gen_traceset(cfg);
      for (Method m : kAllMethods) {
        const double a = method_auroc(ts, MethodSpec::defaults(m));
        if (!(a > 0.5)) {
          o.fail(std::string(method_name(m)) + " on " + std::string(to_string(task)) + fmt(" has auroc %.4f", a));
        }
      }
    }
  });

  criterion("monte-carlo fast-detectgpt agrees with the analytic score", 0, [](Outcome& o) {
    SynthConfig cfg;
    cfg.n_docs_per_class = 100;
    cfg.n_tokens = 64;
    cfg.n_samples = 4096;
    cfg.mu0 = -3.0;
    cfg.mu1 = -2.9;
    cfg.sd0 = cfg.sd1 = 0.5;  // keeps clamping at 0 negligible
    cfg.n_perturbations = 0;
    cfg.with_text = false;
    cfg.seed = 5;
    const double tol = 3.0 / std::sqrt(4096.0);
    std::size_t close = 0, total = 2 * cfg.n_docs_per_class;
    for (std::size_t i = 0; i < total; ++i) {
      const auto d = generate_document(cfg, i);
      double own = 0;
      for (const auto& t : d.tokens) own += t.logp;
      std::vector<double> sums;
      for (const auto& s : d.samples) sums.push_back(std::accumulate(s.begin(), s.end(), 0.0));
      const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) / double(sums.size());
      double var = 0;
      for (double v : sums) var += (v - mean) * (v - mean);
      const double mc = (own - mean) / std::sqrt(var / double(sums.size() - 1));
      if (std::abs(mc - score_fast_detectgpt(d)) <= tol) ++close;
    }
    const double frac = double(close) / double(total);
    o.note = fmt("%.3f of documents within %.4f", frac, tol);
    if (frac < 0.95) o.fail(o.note);
  });

  criterion("spearman fixtures and exact p-value", 0, [](Outcome& o) {
    const double x[] = {1, 2, 3}, y[] = {1, 3, 2};
    if (spearman(x, y).rho != 0.5) o.fail(fmt("rho %.17g", spearman(x, y).rho));
    const std::vector<std::vector<int>> cases = {
        {1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}, {5, 3, 1, 2, 4}, {3, 5, 1, 4, 2}, {5, 4, 3, 2, 1}, {1, 3, 5, 2, 4}};
    const double xs[] = {1, 2, 3, 4, 5};
    for (const auto& c : cases) {
      std::vector<double> ys(c.begin(), c.end());
      const double p = spearman(xs, ys).p_value;
      const double want = enumerated_p(c);
      if (p != want) o.fail(fmt("p %.17g vs enumerated %.17g", p, want));
    }
  });

  criterion("js distance bounds and symmetry", 0, [](Outcome& o) {
    Rng rng(9);
    std::vector<double> a(100);
    for (double& v : a) v = rng.normal();
    if (js_distance(a, a) != 0.0) o.fail("identical samples not 0");
    std::vector<double> lo(50), hi(50);
    for (double& v : lo) v = rng.uniform();
    for (double& v : hi) v = 10.0 + rng.uniform();
    if (std::abs(js_distance(lo, hi) - std::sqrt(std::log(2.0))) > 1e-9) o.fail("disjoint supports");
    for (int i = 0; i < 200; ++i) {
      std::vector<double> p(1 + rng.below(80)), q(1 + rng.below(80));
      for (double& v : p) v = rng.normal();
      for (double& v : q) v = rng.normal(rng.normal(), 1.0 + rng.uniform());
      if (js_distance(p, q) != js_distance(q, p)) {
        o.fail("asymmetric pair");
        return;
      }
    }
  });

  criterion("diversity entropy fixtures and brute-force parity", 0, [](Outcome& o) {
    const std::vector<double> constant(10, -2.5);
    if (diversity_entropy(constant, 2, 2, 1) != 0.0) o.fail("constant series");
    if (diversity_entropy(constant, 4, 8, 1) != 0.0) o.fail("constant series at defaults");
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(3 + rng.below(9));
      for (double& v : x) v = rng.below(4) == 0 ? 0.0 : rng.normal();
      if (diversity_entropy(x, 2, 2, 1) != de_oracle(x)) o.fail("series " + std::to_string(i));
    }
  });

  criterion("pipeline output is deterministic across runs and jobs", 0, [](Outcome& o) {
    const fs::path root = fs::temp_directory_path() / ("mint-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    // Every run uses the same paths; score files record their source path.
    auto once = [&](unsigned jobs) {
      const fs::path dir = root / "run";
      fs::remove_all(dir);
      fs::create_directories(dir);
      SynthConfig cfg;
      cfg.n_docs_per_class = 30;
      cfg.n_tokens = 96;
      cfg.seed = 42;
      RunConfig run;
      for (Task task : {Task::mia, Task::mgtd}) {
        cfg.task = task;
        cfg.seed += 1;
        const auto path = (dir / (std::string(to_string(task)) + ".jsonl")).string();
        write_traces_file(gen_traceset(cfg, jobs), path);
        InputSpec in;
        in.path = path;
        run.inputs.push_back(in);
      }
      for (Method m : kAllMethods) run.methods.push_back(MethodSpec::defaults(m));
      run.output_dir = (dir / "out").string();
      run.seed = 42;
      run.bootstrap = BootstrapConfig{200, 0.95};
      run_pipeline(run, jobs);
      return tree(dir);
    };
    const auto a = once(1), b = once(1), c = once(8);
    fs::remove_all(root);
    if (a.size() < 18 * 2 + 4) o.fail("too few output files");
    if (a != b) o.fail("two runs differ");
    if (a != c) o.fail("jobs 1 and jobs 8 differ");
    if (!a.count("out/transfer.csv")) o.fail("no transfer table");
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
