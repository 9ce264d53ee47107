#include "mint/metrics_lastde.hpp"

#include <algorithm>
#include <cmath>

#include "mint/error.hpp"

namespace mint {

namespace {

void check_params(int s, int eps, int tau) {
  if (s < 2) throw ConfigError("window_s must be at least 2");
  if (eps < 2) throw ConfigError("bins_eps must be at least 2");
  if (tau < 1) throw ConfigError("scales_tau must be at least 1");
}

std::vector<double> coarse_grain(std::span<const double> series, int tau) {
  const std::size_t blocks = series.size() / std::size_t(tau);
  std::vector<double> out(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    double sum = 0.0;
    for (int k = 0; k < tau; ++k) sum += series[b * std::size_t(tau) + std::size_t(k)];
    out[b] = sum / double(tau);
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace

std::vector<std::size_t> similarity_histogram(std::span<const double> series, int s, int eps,
                                              int tau) {
  check_params(s, eps, tau);
  const auto coarse = coarse_grain(series, tau);
  if (coarse.size() < std::size_t(s) + 1) {
    throw DataError("series of length " + std::to_string(series.size()) +
                    " too short for window " + std::to_string(s) + " at scale " +
                    std::to_string(tau));
  }
  const std::size_t windows = coarse.size() - std::size_t(s) + 1;
  std::vector<std::size_t> bins(std::size_t(eps), 0);
  const std::span<const double> c(coarse);
  for (std::size_t w = 0; w + 1 < windows; ++w) {
    const double sim = cosine(c.subspan(w, std::size_t(s)), c.subspan(w + 1, std::size_t(s)));
    auto idx = static_cast<long>(std::floor((sim + 1.0) / 2.0 * double(eps)));
    idx = std::clamp(idx, 0L, long(eps) - 1);
    ++bins[std::size_t(idx)];
  }
  return bins;
}

double diversity_entropy(std::span<const double> series, int s, int eps, int tau) {
  const auto bins = similarity_histogram(series, s, eps, tau);
  std::size_t total = 0;
  for (auto b : bins) total += b;
  double h = 0.0;
  for (auto b : bins) {
    if (b == 0) continue;
    const double p = double(b) / double(total);
    h -= p * std::log(p);
  }
  return h / std::log(double(eps));
}

LastdeValue lastde_value(std::span<const double> logps, const LastdeParams& params) {
  if (logps.empty()) throw DataError("lastde of empty series");
  std::vector<double> de;
  de.reserve(std::size_t(params.scales_tau));
  for (int tau = 1; tau <= params.scales_tau; ++tau) {
    de.push_back(diversity_entropy(logps, params.window_s, params.bins_eps, tau));
  }
  double mean = 0.0;
  for (double v : de) mean += v;
  mean /= double(de.size());
  double var = 0.0;
  for (double v : de) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / double(de.size()));

  double sum = 0.0;
  for (double v : logps) sum += v;
  const double nll = -(sum / double(logps.size()));

  const bool floored = !(sd > 0.0);
  if (floored) sd = kStdFloor;
  return {nll / sd, floored};
}

namespace {

std::vector<double> token_logps(const DocumentTrace& t) {
  std::vector<double> out;
  out.reserve(t.tokens.size());
  for (const auto& tok : t.tokens) out.push_back(tok.logp);
  return out;
}

}  // namespace

double score_lastde(const DocumentTrace& t, const LastdeParams& params, bool* floored) {
  const auto series = token_logps(t);
  const auto v = lastde_value(series, params);
  if (floored) *floored = v.floored;
  return -v.value;
}

double score_lastde_pp(const DocumentTrace& t, const LastdeParams& params,
                       std::size_t n_samples) {
  if (t.samples.size() < 2) throw UnsupportedMethodError("lastde_pp", "samples");
  std::size_t used = t.samples.size();
  if (n_samples > 0) {
    if (t.samples.size() < n_samples) {
      throw DataError("lastde_pp: document " + t.doc_id + " carries " +
                      std::to_string(t.samples.size()) + " samples, " +
                      std::to_string(n_samples) + " requested");
    }
    used = n_samples;
  }
  if (used < 2) throw ConfigError("lastde_pp needs at least 2 samples");

  const double own = lastde_value(token_logps(t), params).value;
  std::vector<double> values;
  values.reserve(used);
  for (std::size_t j = 0; j < used; ++j) {
    if (t.samples[j].size() != t.tokens.size()) {
      throw DataError("lastde_pp: sample length differs from token count in " + t.doc_id);
    }
    values.push_back(lastde_value(t.samples[j], params).value);
  }
  // Reduce in sorted order so the result does not depend on sample order.
  std::sort(values.begin(), values.end());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= double(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(values.size() - 1));
  if (!(sd > 0.0)) {
    throw DegenerateError("lastde_pp: sample Lastde values of document " + t.doc_id +
                          " have zero spread");
  }
  return -((own - mean) / sd);
}

}  // namespace mint
