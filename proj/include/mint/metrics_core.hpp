#pragma once

#include "mint/traces.hpp"

// Baseline and token-selective metrics. Every score here follows one
// orientation: larger values point to the alternative hypothesis
// (member / machine-generated). Document aggregates are per-token means.

namespace mint {

// z-score used by Min-K%++ at a position whose vocabulary stddev is zero.
inline constexpr double kZCap = 1e6;

// Mean negative log-likelihood, L̄ = -mean(logp).
double mean_nll(const TokenSeq& tokens);
// Mean natural-log rank.
double mean_log_rank(const TokenSeq& tokens);

double score_loss(const DocumentTrace& t);
double score_rank(const DocumentTrace& t);
double score_logrank(const DocumentTrace& t);
double score_entropy(const DocumentTrace& t);
// Negated likelihood ratio -L̄(M)/L̄(M_ref), reference approximated by ref_logp.
double score_lrt(const DocumentTrace& t);

// Number of tokens selected by a k-percent rule: max(1, floor(n * k / 100)).
std::size_t min_k_count(std::size_t n, double k_percent);

double score_min_k(const DocumentTrace& t, double k_percent);
double score_min_k_pp(const DocumentTrace& t, double k_percent);

// Standardized log-probability of one position, with the kZCap rule for
// sigma == 0.
double standardized_logp(double logp, double mu, double sigma);

}  // namespace mint
