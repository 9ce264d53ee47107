#include "mint/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "mint/error.hpp"
#include "mint/rng.hpp"

namespace mint {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double r = (double(i + 1) + double(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double auroc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw DegenerateError("auroc needs both classes");
  std::vector<double> all;
  all.reserve(pos.size() + neg.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (std::isnan(pos[i])) throw DataError("NaN score at positive index " + std::to_string(i));
    all.push_back(pos[i]);
  }
  for (std::size_t i = 0; i < neg.size(); ++i) {
    if (std::isnan(neg[i])) throw DataError("NaN score at negative index " + std::to_string(i));
    all.push_back(neg[i]);
  }
  const auto ranks = average_ranks(all);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) rank_sum += ranks[i];
  const double np = double(pos.size());
  const double nn = double(neg.size());
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double auroc(std::span<const LabeledScore> scores) {
  std::vector<double> pos, neg;
  for (const auto& s : scores) {
    if (std::isnan(s.score)) throw DataError("NaN score for document " + s.doc_id);
    (s.positive ? pos : neg).push_back(s.score);
  }
  return auroc(pos, neg);
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = double(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("spearman: length mismatch");
  if (xs.size() < 3) throw DataError("spearman needs at least 3 points");
  if (is_constant(xs) || is_constant(ys)) {
    throw DegenerateError("spearman: correlation undefined for a constant vector");
  }
  const auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  const double rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
  const std::size_t n = xs.size();

  double p;
  if (n <= kExactSpearmanMaxN) {
    // Every reordering of the y ranks is equally likely under independence.
    std::sort(ry.begin(), ry.end());
    const double threshold = std::abs(rho) - 1e-12;
    std::uint64_t hits = 0, total = 0;
    do {
      ++total;
      if (std::abs(pearson(rx, ry)) >= threshold) ++hits;
    } while (std::next_permutation(ry.begin(), ry.end()));
    // next_permutation skips duplicate arrangements of tied ranks; each
    // distinct arrangement stands for the same number of permutations, so
    // the ratio is unchanged.
    p = double(hits) / double(total);
  } else if (std::abs(rho) >= 1.0) {
    p = 0.0;
  } else {
    const double df = double(n - 2);
    const double t = rho * std::sqrt(df / (1.0 - rho * rho));
    boost::math::students_t_distribution<double> dist(df);
    p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return {rho, std::clamp(p, 0.0, 1.0)};
}

double js_distance(std::span<const double> a, std::span<const double> b, int bins) {
  if (a.empty() || b.empty()) throw DataError("js_distance needs two non-empty samples");
  if (bins < 2) throw ConfigError("js_distance needs at least 2 bins");
  double lo = a.front(), hi = a.front();
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(hi > lo)) return 0.0;

  auto histogram = [&](std::span<const double> xs) {
    std::vector<double> h(std::size_t(bins), 0.0);
    for (double v : xs) {
      const double u = (v - lo) / (hi - lo);
      auto idx = std::min<std::size_t>(std::size_t(bins) - 1, std::size_t(u * double(bins)));
      h[idx] += 1.0;
    }
    for (double& x : h) x /= double(xs.size());
    return h;
  };
  const auto p = histogram(a);
  const auto q = histogram(b);
  double div = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2.0;
    double term_p = p[i] > 0.0 ? 0.5 * p[i] * std::log(p[i] / m) : 0.0;
    double term_q = q[i] > 0.0 ? 0.5 * q[i] * std::log(q[i] / m) : 0.0;
    div += term_p + term_q;
  }
  return std::sqrt(std::max(0.0, div));
}

std::pair<double, double> bootstrap_ci(std::span<const double> scores,
                                       std::span<const std::uint8_t> positive, int iters,
                                       double level, std::uint64_t seed) {
  if (scores.size() != positive.size()) throw DataError("bootstrap: scores/labels length mismatch");
  if (iters < 100) throw ConfigError("bootstrap needs at least 100 iterations");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
  const std::size_t n = scores.size();
  if (n == 0) throw DataError("bootstrap of an empty sample");

  std::vector<double> stats;
  stats.reserve(std::size_t(iters));
  std::vector<double> pos, neg;
  for (int it = 0; it < iters; ++it) {
    Rng rng(derive_seed(seed, 0xB007, std::uint64_t(it)));
    bool ok = false;
    for (int attempt = 0; attempt <= kBootstrapRetries && !ok; ++attempt) {
      pos.clear();
      neg.clear();
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = std::size_t(rng.below(n));
        (positive[i] ? pos : neg).push_back(scores[i]);
      }
      ok = !pos.empty() && !neg.empty();
    }
    if (!ok) throw DegenerateError("bootstrap: resamples keep collapsing to a single class");
    stats.push_back(auroc(pos, neg));
  }
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double q) {
    const double h = q * double(stats.size() - 1);
    const auto lo = std::size_t(std::floor(h));
    const auto hi = std::min(stats.size() - 1, lo + 1);
    return stats[lo] + (h - double(lo)) * (stats[hi] - stats[lo]);
  };
  const double alpha = (1.0 - level) / 2.0;
  return {quantile(alpha), quantile(1.0 - alpha)};
}

std::map<std::string, double> rank_methods(std::span<const EvalResult> results) {
  using GroupKey = std::tuple<int, std::string, std::string>;
  std::map<GroupKey, std::map<std::string, double>> groups;
  std::set<std::string> labels;
  for (const auto& r : results) {
    const auto label = r.method.label();
    labels.insert(label);
    groups[{int(r.task), r.domain, r.model_id}][label] = r.auroc;
  }
  std::map<std::string, double> sum;
  for (const auto& [key, by_method] : groups) {
    for (const auto& label : labels) {
      if (!by_method.count(label)) {
        throw DataError("method " + label + " missing from group " +
                        std::string(to_string(Task(std::get<0>(key)))) + "/" + std::get<1>(key) +
                        "/" + std::get<2>(key));
      }
    }
    std::vector<double> negated;
    for (const auto& [label, a] : by_method) negated.push_back(-a);
    const auto ranks = average_ranks(negated);
    std::size_t i = 0;
    for (const auto& [label, a] : by_method) sum[label] += ranks[i++];
  }
  for (auto& [label, s] : sum) s /= double(groups.size());
  return sum;
}

}  // namespace mint
