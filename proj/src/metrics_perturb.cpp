#include "mint/metrics_perturb.hpp"

#include <cmath>

#include "mint/error.hpp"
#include "mint/metrics_core.hpp"

namespace mint {

namespace {

void require_tokens(const DocumentTrace& t) {
  if (t.tokens.empty()) throw DataError("document " + t.doc_id + " has no tokens");
}

}  // namespace

double score_neighborhood(const DocumentTrace& t) {
  require_tokens(t);
  if (t.perturbations.empty()) throw UnsupportedMethodError("neighborhood", "perturbations");
  double sum = 0.0;
  for (const auto& p : t.perturbations) {
    if (p.empty()) throw DataError("document " + t.doc_id + " has an empty perturbation");
    sum += mean_nll(p);
  }
  return sum / double(t.perturbations.size()) - mean_nll(t.tokens);
}

double score_detectgpt(const DocumentTrace& t) {
  return score_neighborhood(t);
}

double score_fast_detectgpt(const DocumentTrace& t) {
  require_tokens(t);
  double centered = 0.0;
  double variance = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.mu) throw UnsupportedMethodError("fast_detectgpt", "mu");
    if (!tok.sigma) throw UnsupportedMethodError("fast_detectgpt", "sigma");
    // Per-position differences, so a position with logp == mu adds exactly 0.
    centered += tok.logp - *tok.mu;
    variance += *tok.sigma * *tok.sigma;
  }
  if (!(variance > 0.0)) {
    throw DegenerateError("fast_detectgpt: all sigma are zero in document " + t.doc_id);
  }
  return centered / std::sqrt(variance);
}

double score_detectllm_npr(const DocumentTrace& t) {
  require_tokens(t);
  if (t.perturbations.empty()) throw UnsupportedMethodError("detectllm_npr", "perturbations");
  const double own = mean_log_rank(t.tokens);
  if (!(own > 0.0)) {
    throw DegenerateError("detectllm_npr: mean log rank of document " + t.doc_id + " is zero");
  }
  double sum = 0.0;
  for (const auto& p : t.perturbations) {
    if (p.empty()) throw DataError("document " + t.doc_id + " has an empty perturbation");
    sum += mean_log_rank(p);
  }
  return (sum / double(t.perturbations.size())) / own;
}

double score_recall(const DocumentTrace& t) {
  require_tokens(t);
  double cond = 0.0;
  for (const auto& tok : t.tokens) {
    if (!tok.cond_logp) throw UnsupportedMethodError("recall", "cond_logp");
    cond += *tok.cond_logp;
  }
  const double nll = mean_nll(t.tokens);
  if (!(nll > 0.0)) {
    throw DegenerateError("recall: unconditional NLL of document " + t.doc_id + " is zero");
  }
  const double cond_nll = -(cond / double(t.tokens.size()));
  return -(cond_nll / nll);
}

}  // namespace mint
