#pragma once

#include <cstdint>
#include <span>

#include "mint/traces.hpp"

namespace mint {

// Two-population generator with a known answer. Class 0 is the null
// population (nonmember / human), class 1 the alternative (member /
// machine). Token log-probabilities are iid Normal(mu_c, sd_c) clamped to
// <= 0, so the Loss metric's AUROC has a closed form.
//
// The per-position vocabulary summary (mu, sigma) describes the model's own
// next-token law. For class 1 text that law is the one the tokens were drawn
// from (mu = mu1, sigma = sd1). For class 0 the model expects tokens half way
// between the two populations: mu = mu0 + (mu1 - mu0) / 2, sigma = sd0.
// Samples are drawn from that same per-position law, and ce = -mu + 0.1.
struct SynthConfig {
  std::size_t n_docs_per_class = 100;
  std::size_t n_tokens = 128;
  double mu0 = -3.0;
  double sd0 = 1.0;
  double mu1 = -2.5;
  double sd1 = 1.0;
  std::uint64_t seed = 0;
  Task task = Task::mia;
  std::size_t n_perturbations = 4;
  std::size_t n_samples = 16;
  std::uint64_t vocab_size = 50000;
  bool with_text = true;

  void validate() const;
};

// Documents are interleaved by class (0, 1, 0, 1, ...) and each one is
// generated from its own derived seed, so generate_document(cfg, i) equals
// gen_traceset(cfg).traces[i].
TraceSet gen_traceset(const SynthConfig& cfg, unsigned jobs = 1);
DocumentTrace generate_document(const SynthConfig& cfg, std::size_t index);

// Zipf(1) log-probability of token_id over the synthetic vocabulary.
double synth_freq_logp(std::uint64_t token_id, std::uint64_t vocab_size);

// Synthetic rank law: 1 + floor(exp(-logp)), capped at vocab_size.
std::int64_t synth_rank(double logp, std::uint64_t vocab_size);

// Exact AUROC of the per-document mean-logp score for iid Gaussian tokens:
// Phi((mu1 - mu0) / sqrt(sd0²/n + sd1²/n)).
double analytic_auroc_gaussian(double mu0, double sd0, double mu1, double sd1,
                               std::size_t n_tokens);

// O(|pos| |neg|) pair count, (wins + ties / 2) / (|pos| |neg|).
double brute_force_auroc(std::span<const double> pos, std::span<const double> neg);

double normal_cdf(double x);

}  // namespace mint
