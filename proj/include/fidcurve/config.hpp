#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fidcurve/engine.hpp"
#include "fidcurve/errors.hpp"
#include "fidcurve/expr.hpp"
#include "fidcurve/geometry.hpp"
#include "fidcurve/noise.hpp"
#include "fidcurve/priors.hpp"

namespace fidcurve {

using Json = nlohmann::ordered_json;

struct OutputConfig {
  int grid_points = 2;
  std::vector<double> quantiles;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
};

enum class OracleKind { Tube, Slab };

struct OracleConfig {
  OracleKind kind = OracleKind::Tube;
  Vec2 d{0.0, 0.0};
  double epsilon = 0.0;
  std::uint64_t n_proposed = 0;
  std::uint64_t seed = 0;
};

// Fully validated problem description. Construction from JSON throws
// ConfigError with a dotted path to the offending field.
struct ProblemConfig {
  Curve curve;
  GaussianNoise noise;
  Point2 x{0.0, 0.0};
  PriorWeight prior;
  OutputConfig output;
  std::optional<OracleConfig> oracle;
  Json echo;  // the parsed document, for self-documenting outputs
};

namespace detail {

inline const Json& require_field(const Json& j, const std::string& parent,
                                 const std::string& key) {
  if (!j.is_object()) throw ConfigError(parent, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(parent.empty() ? key : parent + "." + key,
                      "missing required field");
  }
  return *it;
}

inline double require_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline std::uint64_t require_uint(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const std::int64_t v = j.get<std::int64_t>();
    if (v >= 0) return static_cast<std::uint64_t>(v);
  }
  throw ConfigError(path, "expected a nonnegative integer");
}

inline std::string require_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline Vec2 require_vec2(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw ConfigError(path, "expected 2 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Expression parse_expr(const std::string& text, const std::string& path,
                             std::span<const std::string> vars) {
  try {
    return Expression::parse(text, vars);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace detail

// Parses and validates a configuration document.
inline ProblemConfig parse_config(const Json& doc) {
  using detail::require_field;
  using detail::require_number;
  using detail::require_string;
  using detail::require_uint;
  using detail::require_vec2;

  if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");

  // curve
  const Json& jcurve = require_field(doc, "", "curve");
  const std::string mu1_text =
      require_string(require_field(jcurve, "curve", "mu1"), "curve.mu1");
  const std::string mu2_text =
      require_string(require_field(jcurve, "curve", "mu2"), "curve.mu2");
  const double t_min =
      require_number(require_field(jcurve, "curve", "t_min"), "curve.t_min");
  const double t_max =
      require_number(require_field(jcurve, "curve", "t_max"), "curve.t_max");
  if (!(t_min < t_max)) {
    throw ConfigError("curve.t_min", "t_min must be less than t_max");
  }
  const std::vector<std::string> tvar{"t"};
  Expression mu1 = detail::parse_expr(mu1_text, "curve.mu1", tvar);
  Expression mu2 = detail::parse_expr(mu2_text, "curve.mu2", tvar);
  std::optional<Curve> curve;
  try {
    curve.emplace(std::move(mu1), std::move(mu2), ParamInterval(t_min, t_max));
  } catch (const Error& e) {
    throw ConfigError("curve", e.what());
  }

  // noise
  const Json& jnoise = require_field(doc, "", "noise");
  const Json& jcov = require_field(jnoise, "noise", "cov");
  if (!jcov.is_array() || jcov.size() != 2) {
    throw ConfigError("noise.cov", "expected a 2x2 matrix");
  }
  std::array<std::array<double, 2>, 2> cov{};
  for (int r = 0; r < 2; ++r) {
    const Json& row = jcov[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
        !row[1].is_number()) {
      throw ConfigError("noise.cov", "expected a 2x2 matrix");
    }
    cov[static_cast<std::size_t>(r)] = {row[0].get<double>(),
                                        row[1].get<double>()};
  }
  std::optional<GaussianNoise> noise;
  try {
    noise.emplace(cov);
  } catch (const Error& e) {
    throw ConfigError("noise.cov", e.what());
  }

  // observation
  const Vec2 x = require_vec2(require_field(doc, "", "observation"), "observation");

  // prior
  const Json& jprior = require_field(doc, "", "prior");
  const std::string type =
      require_string(require_field(jprior, "prior", "type"), "prior.type");
  std::optional<PriorWeight> prior;
  try {
    if (type == "jeffreys") {
      prior.emplace(JeffreysPrior{});
    } else if (type == "linear") {
      prior.emplace(LinearPrior(
          require_vec2(require_field(jprior, "prior", "c"), "prior.c")));
    } else if (type == "shift") {
      prior.emplace(ShiftPrior(
          require_vec2(require_field(jprior, "prior", "d"), "prior.d")));
    } else if (type == "condition") {
      const std::string ctext =
          require_string(require_field(jprior, "prior", "C"), "prior.C");
      const std::string mode_text =
          require_string(require_field(jprior, "prior", "mode"), "prior.mode");
      ConditionMode mode;
      if (mode_text == "as_paper") {
        mode = ConditionMode::AsPaper;
      } else if (mode_text == "coarea") {
        mode = ConditionMode::Coarea;
      } else {
        throw ConfigError("prior.mode", "expected \"as_paper\" or \"coarea\"");
      }
      const std::vector<std::string> theta_vars{"theta1", "theta2"};
      prior.emplace(
          ConditionPrior(detail::parse_expr(ctext, "prior.C", theta_vars), mode));
    } else {
      throw ConfigError(
          "prior.type",
          "expected one of \"jeffreys\", \"linear\", \"shift\", \"condition\"");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("prior", e.what());
  }

  // output
  const Json& jout = require_field(doc, "", "output");
  OutputConfig out;
  const double gp = require_number(
      require_field(jout, "output", "grid_points"), "output.grid_points");
  if (!(gp >= 2.0) || gp != static_cast<double>(static_cast<int>(gp)) ||
      gp > 10000000.0) {
    throw ConfigError("output.grid_points", "expected an integer >= 2");
  }
  out.grid_points = static_cast<int>(gp);
  const Json& jq = require_field(jout, "output", "quantiles");
  if (!jq.is_array()) {
    throw ConfigError("output.quantiles", "expected an array of probabilities");
  }
  for (const Json& q : jq) {
    if (!q.is_number()) {
      throw ConfigError("output.quantiles", "expected an array of probabilities");
    }
    const double p = q.get<double>();
    if (!(p > 0.0 && p < 1.0)) {
      throw ConfigError("output.quantiles", "probabilities must lie in (0,1)");
    }
    out.quantiles.push_back(p);
  }
  out.n_samples = require_uint(require_field(jout, "output", "n_samples"),
                               "output.n_samples");
  out.seed = require_uint(require_field(jout, "output", "seed"), "output.seed");
  if (jout.contains("tolerance")) {
    out.tolerance = require_number(jout["tolerance"], "output.tolerance");
    if (!(out.tolerance >= 1e-12 && out.tolerance <= 1e-3)) {
      throw ConfigError("output.tolerance", "expected a value in [1e-12, 1e-3]");
    }
  }

  // oracle (optional)
  std::optional<OracleConfig> oracle;
  if (doc.contains("oracle")) {
    const Json& jo = doc["oracle"];
    OracleConfig oc;
    const std::string kind =
        require_string(require_field(jo, "oracle", "kind"), "oracle.kind");
    if (kind == "tube") {
      oc.kind = OracleKind::Tube;
    } else if (kind == "slab") {
      oc.kind = OracleKind::Slab;
    } else {
      throw ConfigError("oracle.kind", "expected \"tube\" or \"slab\"");
    }
    if (oc.kind == OracleKind::Slab) {
      oc.d = require_vec2(require_field(jo, "oracle", "d"), "oracle.d");
      if (oc.d.x == 0.0 && oc.d.y == 0.0) {
        throw ConfigError("oracle.d", "direction must not be the zero vector");
      }
    }
    oc.epsilon = require_number(require_field(jo, "oracle", "epsilon"),
                                "oracle.epsilon");
    if (!(oc.epsilon > 0.0)) {
      throw ConfigError("oracle.epsilon", "expected a positive number");
    }
    oc.n_proposed = require_uint(require_field(jo, "oracle", "n_proposed"),
                                 "oracle.n_proposed");
    if (oc.n_proposed < 1) {
      throw ConfigError("oracle.n_proposed", "expected a positive count");
    }
    oc.seed = require_uint(require_field(jo, "oracle", "seed"), "oracle.seed");
    oracle = oc;
  }

  return ProblemConfig{std::move(*curve), std::move(*noise), x,
                       std::move(*prior), std::move(out), oracle, doc};
}

// Reads and parses a configuration file.
inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) {
    throw ConfigError("config", "invalid JSON in '" + path + "'");
  }
  return parse_config(doc);
}

}  // namespace fidcurve
