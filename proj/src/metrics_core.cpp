#include "mint/metrics_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mint/error.hpp"

namespace mint {

namespace {

void require_tokens(const DocumentTrace& t) {
  if (t.tokens.empty()) throw DataError("document " + t.doc_id + " has no tokens");
}

// Marks the m positions with the smallest key; ties go to the earliest
// position. Returns a mask so callers can sum in position order.
template <typename KeyFn>
std::vector<bool> select_lowest(std::size_t n, std::size_t m, KeyFn key) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    double ka = key(a), kb = key(b);
    return ka < kb || (ka == kb && a < b);
  };
  if (m < n) std::nth_element(idx.begin(), idx.begin() + std::ptrdiff_t(m), idx.end(), less);
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < m; ++i) mask[idx[i]] = true;
  return mask;
}

}  // namespace

double mean_nll(const TokenSeq& tokens) {
  double sum = 0.0;
  for (const auto& tok : tokens) sum += tok.logp;
  return -(sum / double(tokens.size()));
}

double mean_log_rank(const TokenSeq& tokens) {
  double sum = 0.0;
  for (const auto& tok : tokens) sum += std::log(double(tok.rank));
  return sum / double(tokens.size());
}

double score_loss(const DocumentTrace& t) {
  require_tokens(t);
  double sum = 0.0;
  for (const auto& tok : t.tokens) sum += tok.logp;
  return sum / double(t.tokens.size());
}

double score_rank(const DocumentTrace& t) {
  require_tokens(t);
  double sum = 0.0;
  for (const auto& tok : t.tokens) sum += double(tok.rank);
  return -(sum / double(t.tokens.size()));
}

double score_logrank(const DocumentTrace& t) {
  require_tokens(t);
  return -mean_log_rank(t.tokens);
}

double score_entropy(const DocumentTrace& t) {
  require_tokens(t);
  double sum = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.mu) throw UnsupportedMethodError("entropy", "mu");
    sum += *tok.mu;
  }
  return sum / double(t.tokens.size());
}

double score_lrt(const DocumentTrace& t) {
  require_tokens(t);
  double ref_sum = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.ref_logp) throw UnsupportedMethodError("lrt", "ref_logp");
    ref_sum += *tok.ref_logp;
  }
  const double ref_nll = -(ref_sum / double(t.tokens.size()));
  if (!(ref_nll > 0.0)) {
    throw DegenerateError("lrt: reference NLL of document " + t.doc_id + " is zero");
  }
  return -(mean_nll(t.tokens) / ref_nll);
}

std::size_t min_k_count(std::size_t n, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw ConfigError("k_percent must lie in (0, 100]");
  }
  const double m = std::floor(double(n) * k_percent / 100.0);
  return std::max<std::size_t>(1, std::min(n, std::size_t(m)));
}

double score_min_k(const DocumentTrace& t, double k_percent) {
  require_tokens(t);
  const std::size_t n = t.tokens.size();
  const std::size_t m = min_k_count(n, k_percent);
  auto mask = select_lowest(n, m, [&](std::size_t i) { return t.tokens[i].logp; });
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) sum += t.tokens[i].logp;
  }
  return sum / double(m);
}

double standardized_logp(double logp, double mu, double sigma) {
  if (sigma > 0.0) return (logp - mu) / sigma;
  if (logp == mu) return 0.0;
  return logp > mu ? kZCap : -kZCap;
}

double score_min_k_pp(const DocumentTrace& t, double k_percent) {
  require_tokens(t);
  const std::size_t n = t.tokens.size();
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tok = t.tokens[i];
    if (!tok.mu) throw UnsupportedMethodError("min_k_pp", "mu");
    if (!tok.sigma) throw UnsupportedMethodError("min_k_pp", "sigma");
    z[i] = standardized_logp(tok.logp, *tok.mu, *tok.sigma);
  }
  const std::size_t m = min_k_count(n, k_percent);
  auto mask = select_lowest(n, m, [&](std::size_t i) { return z[i]; });
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) sum += z[i];
  }
  return sum / double(m);
}

}  // namespace mint
