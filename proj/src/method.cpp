#include "mint/method.hpp"

#include <cmath>

#include "mint/error.hpp"
#include "mint/format.hpp"
#include "mint/metrics_core.hpp"
#include "mint/metrics_lastde.hpp"
#include "mint/metrics_perturb.hpp"
#include "mint/metrics_reference.hpp"

namespace mint {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::loss: return "loss";
    case Method::rank: return "rank";
    case Method::logrank: return "logrank";
    case Method::entropy: return "entropy";
    case Method::lrt: return "lrt";
    case Method::reference: return "reference";
    case Method::zlib: return "zlib";
    case Method::dcpdd: return "dcpdd";
    case Method::binoculars: return "binoculars";
    case Method::neighborhood: return "neighborhood";
    case Method::detectgpt: return "detectgpt";
    case Method::fast_detectgpt: return "fast_detectgpt";
    case Method::detectllm_npr: return "detectllm_npr";
    case Method::recall: return "recall";
    case Method::min_k: return "min_k";
    case Method::min_k_pp: return "min_k_pp";
    case Method::lastde: return "lastde";
    case Method::lastde_pp: return "lastde_pp";
  }
  return "";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string method_names() {
  std::string out;
  for (Method m : kAllMethods) {
    if (!out.empty()) out += ' ';
    out += method_name(m);
  }
  return out;
}

Field required_fields(Method m) {
  switch (m) {
    case Method::loss:
    case Method::rank:
    case Method::logrank:
    case Method::min_k:
    case Method::lastde: return Field::none;
    case Method::entropy: return Field::mu;
    case Method::lrt:
    case Method::reference: return Field::ref_logp;
    case Method::zlib: return Field::text;
    case Method::dcpdd: return Field::freq_logp;
    case Method::binoculars: return Field::ce;
    case Method::neighborhood:
    case Method::detectgpt:
    case Method::detectllm_npr: return Field::perturbations;
    case Method::fast_detectgpt:
    case Method::min_k_pp: return Field::mu | Field::sigma;
    case Method::recall: return Field::cond_logp;
    case Method::lastde_pp: return Field::samples;
  }
  return Field::none;
}

Family method_family(Method m) {
  switch (m) {
    case Method::reference:
    case Method::zlib:
    case Method::dcpdd:
    case Method::neighborhood:
    case Method::recall:
    case Method::min_k:
    case Method::min_k_pp: return Family::mia;
    case Method::binoculars:
    case Method::detectgpt:
    case Method::fast_detectgpt:
    case Method::detectllm_npr:
    case Method::lastde:
    case Method::lastde_pp: return Family::detection;
    default: return Family::baseline;
  }
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::mia: return "mia";
    case Family::detection: return "detection";
    case Family::baseline: return "baseline";
  }
  return "baseline";
}

MethodSpec MethodSpec::defaults(Method m) {
  MethodSpec s;
  s.method = m;
  switch (m) {
    case Method::min_k:
    case Method::min_k_pp: s.k_percent = 20.0; break;
    case Method::lastde_pp: s.n_samples = 16; [[fallthrough]];
    case Method::lastde:
      s.window_s = 4;
      s.bins_eps = 8;
      s.scales_tau = 15;
      break;
    default: break;
  }
  return s;
}

namespace {

int as_int(std::string_view key, double value, int minimum) {
  if (!std::isfinite(value) || value != std::floor(value) || value < minimum || value > 1e9) {
    throw ConfigError(std::string(key) + " must be an integer >= " + std::to_string(minimum));
  }
  return int(value);
}

}  // namespace

void MethodSpec::set_param(std::string_view key, double value) {
  auto reject = [&] {
    throw ConfigError("method " + std::string(method_name(method)) + " does not take parameter " +
                      std::string(key));
  };
  if (key == "k_percent" || key == "k") {
    if (!k_percent) reject();
    if (!(value > 0.0 && value <= 100.0)) throw ConfigError("k_percent must lie in (0, 100]");
    k_percent = value;
  } else if (key == "window_s" || key == "s") {
    if (!window_s) reject();
    window_s = as_int(key, value, 2);
  } else if (key == "bins_eps" || key == "eps") {
    if (!bins_eps) reject();
    bins_eps = as_int(key, value, 2);
  } else if (key == "scales_tau" || key == "tau") {
    if (!scales_tau) reject();
    scales_tau = as_int(key, value, 1);
  } else if (key == "n_samples" || key == "samples") {
    if (!n_samples) reject();
    n_samples = as_int(key, value, 2);
  } else {
    throw ConfigError("unknown parameter " + std::string(key));
  }
}

std::string MethodSpec::params_string() const {
  std::string out;
  auto add = [&](const char* key, const std::string& v) {
    if (!out.empty()) out += ';';
    out += key;
    out += '=';
    out += v;
  };
  if (k_percent) add("k_percent", format_double(*k_percent));
  if (window_s) add("window_s", std::to_string(*window_s));
  if (bins_eps) add("bins_eps", std::to_string(*bins_eps));
  if (scales_tau) add("scales_tau", std::to_string(*scales_tau));
  if (n_samples) add("n_samples", std::to_string(*n_samples));
  return out;
}

std::string MethodSpec::label() const {
  std::string out(method_name(method));
  auto p = params_string();
  if (!p.empty()) out += "(" + p + ")";
  return out;
}

MethodSpec parse_method_spec(std::string_view name) {
  auto m = parse_method(name);
  if (!m) {
    throw ConfigError("unknown method " + std::string(name) + "; valid methods: " + method_names());
  }
  return MethodSpec::defaults(*m);
}

namespace {

LastdeParams lastde_params(const MethodSpec& s) {
  LastdeParams p;
  if (s.window_s) p.window_s = *s.window_s;
  if (s.bins_eps) p.bins_eps = *s.bins_eps;
  if (s.scales_tau) p.scales_tau = *s.scales_tau;
  return p;
}

}  // namespace

ScoreOutcome score_document(const DocumentTrace& t, const MethodSpec& spec) {
  ScoreOutcome out;
  switch (spec.method) {
    case Method::loss: out.score = score_loss(t); break;
    case Method::rank: out.score = score_rank(t); break;
    case Method::logrank: out.score = score_logrank(t); break;
    case Method::entropy: out.score = score_entropy(t); break;
    case Method::lrt: out.score = score_lrt(t); break;
    case Method::reference: out.score = score_reference(t); break;
    case Method::zlib: out.score = score_zlib(t); break;
    case Method::dcpdd: out.score = score_dcpdd(t); break;
    case Method::binoculars: out.score = score_binoculars(t); break;
    case Method::neighborhood: out.score = score_neighborhood(t); break;
    case Method::detectgpt: out.score = score_detectgpt(t); break;
    case Method::fast_detectgpt: out.score = score_fast_detectgpt(t); break;
    case Method::detectllm_npr: out.score = score_detectllm_npr(t); break;
    case Method::recall: out.score = score_recall(t); break;
    case Method::min_k: out.score = score_min_k(t, spec.k_percent.value_or(20.0)); break;
    case Method::min_k_pp: out.score = score_min_k_pp(t, spec.k_percent.value_or(20.0)); break;
    case Method::lastde:
      out.score = score_lastde(t, lastde_params(spec), &out.std_floor);
      break;
    case Method::lastde_pp:
      out.score = score_lastde_pp(t, lastde_params(spec), std::size_t(spec.n_samples.value_or(0)));
      break;
  }
  if (!std::isfinite(out.score)) {
    throw DegenerateError(std::string(method_name(spec.method)) + " produced a non-finite score for " +
                          t.doc_id);
  }
  return out;
}

}  // namespace mint
