#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mint/error.hpp"
#include "mint/eval.hpp"
#include "mint/rng.hpp"
#include "mint/synth.hpp"

using namespace mint;
using doctest::Approx;

namespace {

// Pearson correlation of average ranks, written out independently.
double rank_corr(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) less += w < v[i], equal += w == v[i];
      r[i] = less + (equal + 1) / 2.0;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  const double n = double(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

EvalResult row(const std::string& method, double auroc, const std::string& domain = "d") {
  EvalResult r;
  r.method = parse_method_spec(method);
  r.domain = domain;
  r.model_id = "m";
  r.auroc = auroc;
  return r;
}

}  // namespace

TEST_CASE("average ranks") {
  std::vector<double> v = {3.0, 1.0, 3.0, 2.0};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("auroc fixtures") {
  const double pos[] = {0.9, 0.4};
  const double neg[] = {0.5, 0.1};
  CHECK(auroc(pos, neg) == 0.75);
  const double same[] = {0.3, 0.3, 0.3};
  CHECK(auroc(same, same) == 0.5);
  const double hi[] = {5, 6, 7};
  const double lo[] = {1, 2};
  CHECK(auroc(hi, lo) == 1.0);
  CHECK(auroc(lo, hi) == 0.0);
  CHECK_THROWS_AS(auroc(std::span<const double>(), lo), DegenerateError);
  const double nan[] = {NAN};
  CHECK_THROWS_AS(auroc(nan, lo), DataError);

  std::vector<LabeledScore> labeled = {{"a", 0.9, true}, {"b", 0.5, false}, {"c", NAN, false}};
  try {
    auroc(labeled);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("document c") != std::string::npos);
  }
}

TEST_CASE("property: auroc matches pair counting and is antisymmetric") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(1 + rng.below(60)), neg(1 + rng.below(60));
    // Coarse values force many ties.
    for (double& v : pos) v = double(rng.below(8));
    for (double& v : neg) v = double(rng.below(8)) - 1.0;
    const double a = auroc(pos, neg);
    CHECK(std::abs(a - brute_force_auroc(pos, neg)) <= 1e-12);
    CHECK(a + auroc(neg, pos) == Approx(1.0).epsilon(1e-12));
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("spearman fixtures") {
  const double x[] = {1, 2, 3};
  const double rev[] = {3, 2, 1};
  const double swap[] = {1, 3, 2};
  CHECK(spearman(x, rev).rho == -1.0);
  CHECK(spearman(x, swap).rho == 0.5);
  CHECK(spearman(x, x).rho == 1.0);
  // Of the 6 orderings of 3 items, 2 reach |rho| >= 1.
  CHECK(spearman(x, x).p_value == Approx(2.0 / 6.0).epsilon(1e-15));
  const double flat[] = {1, 1, 1};
  CHECK_THROWS_AS(spearman(x, flat), DegenerateError);
  const double two[] = {1, 2};
  CHECK_THROWS_AS(spearman(two, two), DataError);
}

TEST_CASE("property: spearman rho agrees with an independent rank correlation") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(3 + rng.below(30)), y(x.size());
    for (double& v : x) v = double(rng.below(10));
    for (double& v : y) v = double(rng.below(10));
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    auto r = spearman(x, y);
    CHECK(r.rho == Approx(rank_corr(x, y)).epsilon(1e-12));
    CHECK(spearman(y, x).rho == Approx(r.rho).epsilon(1e-15));
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
  }
}

TEST_CASE("spearman p-value above the exact range") {
  // n = 20 with a strong monotone relation is highly significant; an
  // unrelated ordering is not.
  std::vector<double> x(20), y(20), z(20);
  for (int i = 0; i < 20; ++i) {
    x[i] = i;
    y[i] = i + (i % 3 == 0 ? 1.5 : 0.0);
    z[i] = (i * 7) % 20;
  }
  CHECK(spearman(x, y).p_value < 1e-6);
  CHECK(spearman(x, z).p_value > 0.05);
}

TEST_CASE("js distance") {
  std::vector<double> a = {0.1, 0.2, 0.3, 0.4};
  CHECK(js_distance(a, a) == 0.0);
  std::vector<double> lo = {0.0, 0.1, 0.2}, hi = {5.0, 5.5, 6.0};
  CHECK(js_distance(lo, hi) == Approx(std::sqrt(std::log(2.0))).epsilon(1e-12));
  CHECK(std::abs(js_distance(lo, hi) - 0.83255) < 1e-5);
  std::vector<double> point = {1.0, 1.0};
  CHECK(js_distance(point, point) == 0.0);
  CHECK_THROWS_AS(js_distance(a, std::vector<double>{}), DataError);
  CHECK_THROWS_AS(js_distance(a, a, 1), ConfigError);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + rng.below(50)), y(1 + rng.below(50));
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal(0.5, 2.0);
    const int bins = 2 + int(rng.below(60));
    const double d = js_distance(x, y, bins);
    CHECK(d == js_distance(y, x, bins));
    CHECK(d >= 0.0);
    CHECK(d <= std::sqrt(std::log(2.0)) + 1e-12);
  }
}

TEST_CASE("bootstrap") {
  std::vector<double> scores;
  std::vector<std::uint8_t> pos;
  for (int i = 0; i < 500; ++i) {
    scores.push_back(10.0 + i);
    pos.push_back(1);
    scores.push_back(-10.0 - i);
    pos.push_back(0);
  }
  auto [lo, hi] = bootstrap_ci(scores, pos, 200, 0.95, 1);
  CHECK(lo <= 1.0);
  CHECK(hi == 1.0);
  CHECK(hi - lo < 0.05);

  Rng rng(2);
  std::vector<double> noisy;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 200; ++i) {
    const bool p = i % 2 == 0;
    noisy.push_back(rng.normal(p ? 0.5 : 0.0, 1.0));
    labels.push_back(p);
  }
  auto first = bootstrap_ci(noisy, labels, 300, 0.95, 42);
  auto second = bootstrap_ci(noisy, labels, 300, 0.95, 42);
  CHECK(first == second);
  CHECK(bootstrap_ci(noisy, labels, 300, 0.95, 43) != first);
  std::vector<double> p_scores, n_scores;
  for (std::size_t i = 0; i < noisy.size(); ++i) (labels[i] ? p_scores : n_scores).push_back(noisy[i]);
  const double point = auroc(p_scores, n_scores);
  CHECK(first.first <= point);
  CHECK(point <= first.second);
  CHECK(bootstrap_ci(noisy, labels, 300, 0.5, 42).second - bootstrap_ci(noisy, labels, 300, 0.5, 42).first <
        first.second - first.first);

  CHECK_THROWS_AS(bootstrap_ci(noisy, labels, 10, 0.95, 1), ConfigError);
  CHECK_THROWS_AS(bootstrap_ci(noisy, labels, 100, 1.5, 1), ConfigError);
}

TEST_CASE("method ranking") {
  std::vector<EvalResult> one = {row("loss", 0.9), row("rank", 0.8), row("logrank", 0.7)};
  auto r = rank_methods(one);
  CHECK(r.at("loss") == 1.0);
  CHECK(r.at("rank") == 2.0);
  CHECK(r.at("logrank") == 3.0);

  std::vector<EvalResult> ties = {row("loss", 0.9), row("rank", 0.8), row("logrank", 0.8)};
  r = rank_methods(ties);
  CHECK(r.at("loss") == 1.0);
  CHECK(r.at("rank") == 2.5);
  CHECK(r.at("logrank") == 2.5);

  std::vector<EvalResult> two = {row("loss", 0.9, "a"), row("rank", 0.8, "a"), row("loss", 0.6, "b"),
                                 row("rank", 0.7, "b")};
  r = rank_methods(two);
  CHECK(r.at("loss") == 1.5);
  CHECK(r.at("rank") == 1.5);

  std::vector<EvalResult> missing = {row("loss", 0.9, "a"), row("rank", 0.8, "a"), row("loss", 0.6, "b")};
  try {
    rank_methods(missing);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("rank") != std::string::npos);
  }
}
