#pragma once

#include "mint/traces.hpp"

// Likelihood-ratio approximations that estimate the human-text likelihood
// by sampling: perturbation siblings, analytic conditional sampling, and
// prefix-conditioned likelihood.

namespace mint {

// mean_j L̄(perturbation_j) - L̄(x).
double score_neighborhood(const DocumentTrace& t);
// Same statistic as score_neighborhood; both names are kept because both
// communities report it.
double score_detectgpt(const DocumentTrace& t);
// (Σ logp - Σ mu) / sqrt(Σ sigma²).
double score_fast_detectgpt(const DocumentTrace& t);
// mean_j R̄(perturbation_j) / R̄(x), R̄ = mean log rank.
double score_detectllm_npr(const DocumentTrace& t);
// -(L̄_cond / L̄).
double score_recall(const DocumentTrace& t);

}  // namespace mint
