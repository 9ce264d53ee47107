#include "mint/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "mint/error.hpp"
#include "mint/rng.hpp"
#include "parallel.hpp"

namespace mint {

namespace {

// Zipf(1) over token ids 0..V-1 (token id k has weight 1 / (k + 1)).
struct ZipfLaw {
  std::vector<double> cdf;
  double log_harmonic;

  explicit ZipfLaw(std::uint64_t vocab) : cdf(vocab) {
    double h = 0.0;
    for (std::uint64_t k = 0; k < vocab; ++k) {
      h += 1.0 / double(k + 1);
      cdf[k] = h;
    }
    for (double& c : cdf) c /= h;
    log_harmonic = std::log(h);
  }

  std::uint64_t sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return std::uint64_t(it - cdf.begin());
  }
};

const ZipfLaw& zipf_law(std::uint64_t vocab) {
  static std::mutex mutex;
  static std::map<std::uint64_t, std::unique_ptr<ZipfLaw>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[vocab];
  if (!slot) slot = std::make_unique<ZipfLaw>(vocab);
  return *slot;
}

double clamped_normal(Rng& rng, double mean, double sd) {
  return std::min(0.0, rng.normal(mean, sd));
}

constexpr std::uint64_t kStreamDocs = 0xD0C5;
constexpr double kCeMargin = 0.1;

}  // namespace

void SynthConfig::validate() const {
  if (n_docs_per_class < 1) throw ConfigError("n_docs_per_class must be at least 1");
  if (n_tokens < 4) throw ConfigError("n_tokens must be at least 4");
  if (!(sd0 > 0.0) || !(sd1 > 0.0)) throw ConfigError("sd0 and sd1 must be positive");
  if (!(mu0 <= 0.0) || !(mu1 <= 0.0)) throw ConfigError("mu0 and mu1 must be <= 0");
  if (!std::isfinite(mu0) || !std::isfinite(mu1) || !std::isfinite(sd0) || !std::isfinite(sd1)) {
    throw ConfigError("synth parameters must be finite");
  }
  if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
  if (n_samples == 1) throw ConfigError("n_samples must be 0 or at least 2");
}

double synth_freq_logp(std::uint64_t token_id, std::uint64_t vocab_size) {
  return -std::log(double(token_id + 1)) - zipf_law(vocab_size).log_harmonic;
}

std::int64_t synth_rank(double logp, std::uint64_t vocab_size) {
  const double cap = double(vocab_size);
  const double e = -logp >= std::log(cap) ? cap : std::exp(-logp);
  const double r = std::min(cap, 1.0 + std::floor(e));
  return std::int64_t(r);
}

DocumentTrace generate_document(const SynthConfig& cfg, std::size_t index) {
  const int cls = int(index % 2);
  const std::size_t within = index / 2;
  const double mu = cls == 1 ? cfg.mu1 : cfg.mu0;
  const double sd = cls == 1 ? cfg.sd1 : cfg.sd0;
  // The model's own per-position law (see header).
  const double model_mu = mu + 0.5 * (cfg.mu1 - mu);
  const double model_sd = sd;
  const double cond_offset = 0.5 * (mu - cfg.mu0);
  const auto& zipf = zipf_law(cfg.vocab_size);

  Rng rng(derive_seed(cfg.seed, kStreamDocs, std::uint64_t(index)));

  DocumentTrace d;
  d.doc_id = (cls == 1 ? "c1-" : "c0-") + std::to_string(within);
  if (cfg.task == Task::mia) {
    d.label = cls == 1 ? Label::member : Label::nonmember;
  } else {
    d.label = cls == 1 ? Label::machine : Label::human;
  }
  d.domain = "synthetic";
  d.model_id = "synth";

  d.tokens.resize(cfg.n_tokens);
  for (auto& tok : d.tokens) {
    tok.token_id = zipf.sample(rng);
    tok.logp = clamped_normal(rng, mu, sd);
    tok.rank = synth_rank(tok.logp, cfg.vocab_size);
    tok.mu = model_mu;
    tok.sigma = model_sd;
    tok.ref_logp = clamped_normal(rng, cfg.mu0, cfg.sd0);
    tok.ce = -model_mu + kCeMargin;
    tok.freq_logp = -std::log(double(tok.token_id + 1)) - zipf.log_harmonic;
    tok.cond_logp = std::min(0.0, tok.logp + cond_offset);
  }

  if (cfg.with_text) {
    std::string text;
    for (const auto& tok : d.tokens) {
      if (!text.empty()) text += ' ';
      text += 'w';
      text += std::to_string(tok.token_id);
    }
    d.text_bytes = std::move(text);
  }

  d.perturbations.resize(cfg.n_perturbations);
  for (auto& p : d.perturbations) {
    p.resize(cfg.n_tokens);
    for (auto& tok : p) {
      tok.token_id = zipf.sample(rng);
      tok.logp = clamped_normal(rng, cfg.mu0, cfg.sd0);
      tok.rank = synth_rank(tok.logp, cfg.vocab_size);
    }
  }

  d.samples.resize(cfg.n_samples);
  for (auto& s : d.samples) {
    s.resize(cfg.n_tokens);
    for (double& v : s) v = clamped_normal(rng, model_mu, model_sd);
  }
  return d;
}

TraceSet gen_traceset(const SynthConfig& cfg, unsigned jobs) {
  cfg.validate();
  TraceSet ts;
  ts.task = cfg.task;
  ts.traces.resize(2 * cfg.n_docs_per_class);
  detail::parallel_for(ts.traces.size(), jobs,
                       [&](std::size_t i) { ts.traces[i] = generate_document(cfg, i); });
  return ts;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double analytic_auroc_gaussian(double mu0, double sd0, double mu1, double sd1,
                               std::size_t n_tokens) {
  const double n = double(n_tokens);
  return normal_cdf((mu1 - mu0) / std::sqrt(sd0 * sd0 / n + sd1 * sd1 / n));
}

double brute_force_auroc(std::span<const double> pos, std::span<const double> neg) {
  double wins = 0.0, ties = 0.0;
  for (double p : pos) {
    for (double q : neg) {
      if (p > q) {
        wins += 1.0;
      } else if (p == q) {
        ties += 1.0;
      }
    }
  }
  return (wins + 0.5 * ties) / (double(pos.size()) * double(neg.size()));
}

}  // namespace mint
