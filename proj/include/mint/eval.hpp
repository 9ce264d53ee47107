#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mint/method.hpp"
#include "mint/traces.hpp"

namespace mint {

// 1-based ranks in ascending order of value; tied values share the mean of
// the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Tie-corrected Mann-Whitney AUROC: (#{p > n} + 0.5 #{p == n}) / (|pos| |neg|),
// computed by sort-and-rank in O(N log N).
double auroc(std::span<const double> pos, std::span<const double> neg);

struct LabeledScore {
  std::string doc_id;
  double score;
  bool positive;
};

// AUROC over a mixed list; errors name the offending document.
double auroc(std::span<const LabeledScore> scores);

struct SpearmanResult {
  double rho;
  double p_value;
};

// Largest n for which the p-value is computed by exhaustive permutation.
inline constexpr std::size_t kExactSpearmanMaxN = 8;

// Average-rank Spearman correlation. Two-sided p-value by exhaustive
// permutation for n <= kExactSpearmanMaxN, Student-t approximation above.
SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys);

inline constexpr int kDefaultHistBins = 50;

// Jensen-Shannon distance (natural log) between equal-width histograms of
// a and b over the min-max range of their union. Result in [0, sqrt(ln 2)].
double js_distance(std::span<const double> a, std::span<const double> b,
                   int bins = kDefaultHistBins);

// Percentile bootstrap interval of the AUROC. Iteration i draws from its own
// generator seeded by derive_seed(seed, i), so results do not depend on
// scheduling. Resamples with a single class are redrawn up to
// kBootstrapRetries times.
inline constexpr int kBootstrapRetries = 100;

std::pair<double, double> bootstrap_ci(std::span<const double> scores,
                                       std::span<const std::uint8_t> positive, int iters,
                                       double level, std::uint64_t seed);

struct EvalResult {
  MethodSpec method;
  Task task = Task::mia;
  std::string domain;
  std::string model_id;
  double auroc = 0.5;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
};

// Within every (task, domain, model_id) group, ranks methods by AUROC
// descending (average ranks on ties) and returns each method label's mean
// rank across groups. Throws DataError naming the first method missing
// from a group.
std::map<std::string, double> rank_methods(std::span<const EvalResult> results);

}  // namespace mint
