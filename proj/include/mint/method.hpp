#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "mint/traces.hpp"

namespace mint {

enum class Method {
  loss,
  rank,
  logrank,
  entropy,
  lrt,
  reference,
  zlib,
  dcpdd,
  binoculars,
  neighborhood,
  detectgpt,
  fast_detectgpt,
  detectllm_npr,
  recall,
  min_k,
  min_k_pp,
  lastde,
  lastde_pp,
};

inline constexpr std::array kAllMethods = {
    Method::loss,         Method::rank,           Method::logrank,       Method::entropy,
    Method::lrt,          Method::reference,      Method::zlib,          Method::dcpdd,
    Method::binoculars,   Method::neighborhood,   Method::detectgpt,     Method::fast_detectgpt,
    Method::detectllm_npr, Method::recall,        Method::min_k,         Method::min_k_pp,
    Method::lastde,       Method::lastde_pp,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
// Space-separated list of every method name.
std::string method_names();

// Trace fields a method reads beyond token_id/logp/rank.
Field required_fields(Method m);

// Which literature a method comes from; used to tag transfer reports.
enum class Family { mia, detection, baseline };
Family method_family(Method m);
std::string_view to_string(Family f);

// A metric plus the parameters it consumes. Parameters a method does not
// consume stay empty; construct with MethodSpec::defaults().
struct MethodSpec {
  Method method = Method::loss;
  std::optional<double> k_percent;
  std::optional<int> window_s;
  std::optional<int> bins_eps;
  std::optional<int> scales_tau;
  std::optional<int> n_samples;

  static MethodSpec defaults(Method m);

  // Sets a named parameter. Throws ConfigError for keys the method does not
  // consume and for out-of-range values.
  void set_param(std::string_view key, double value);

  // "k_percent=20;window_s=4", keys in fixed order, empty when none.
  std::string params_string() const;
  // "min_k" or "min_k(k_percent=20)".
  std::string label() const;

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

MethodSpec parse_method_spec(std::string_view name);

struct ScoreOutcome {
  double score = 0.0;
  // Lastde fell back to the stddev floor.
  bool std_floor = false;
};

// Dispatches to the metric. Throws UnsupportedMethodError / DegenerateError /
// DataError for documents the metric cannot score; the returned score is
// always finite.
ScoreOutcome score_document(const DocumentTrace& t, const MethodSpec& spec);

}  // namespace mint
