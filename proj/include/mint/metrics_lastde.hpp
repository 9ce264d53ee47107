#pragma once

#include <span>
#include <vector>

#include "mint/traces.hpp"

namespace mint {

// Multiscale diversity entropy of a log-probability series.
//
// At scale tau the series is coarse-grained into non-overlapping means of
// tau consecutive values (a trailing partial block is dropped). Overlapping
// windows of length s are embedded, the cosine similarity of every pair of
// consecutive windows is binned into eps equal-width bins over [-1, 1], and
// the normalized Shannon entropy of the bin frequencies is returned. A
// window with zero norm has similarity 1 with its neighbour.
struct LastdeParams {
  int window_s = 4;
  int bins_eps = 8;
  int scales_tau = 15;
};

// Bin counts of the consecutive-window similarities. Throws DataError when
// the coarse-grained series yields fewer than two windows.
std::vector<std::size_t> similarity_histogram(std::span<const double> series, int s, int eps,
                                              int tau);

double diversity_entropy(std::span<const double> series, int s, int eps, int tau);

// Raw Lastde value L̄ / StdDev_tau(DE) (population stddev over tau = 1..tau_max).
// When the stddev is zero the floor kStdFloor is used and `floored` is set.
inline constexpr double kStdFloor = 1e-9;

struct LastdeValue {
  double value;
  bool floored;
};

LastdeValue lastde_value(std::span<const double> logps, const LastdeParams& params);

// -lastde_value(tokens' logp).
double score_lastde(const DocumentTrace& t, const LastdeParams& params, bool* floored = nullptr);

// Standardizes the document's Lastde value against the Lastde values of its
// sampled sequences (sample stddev) and negates. Uses the first
// `n_samples` samples; 0 means all of them.
double score_lastde_pp(const DocumentTrace& t, const LastdeParams& params,
                       std::size_t n_samples = 0);

}  // namespace mint
