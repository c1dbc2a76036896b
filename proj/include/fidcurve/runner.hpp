#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "fidcurve/config.hpp"
#include "fidcurve/engine.hpp"
#include "fidcurve/oracle.hpp"
#include "fidcurve/rng.hpp"
#include "fidcurve/scenarios.hpp"
#include "fidcurve/version.hpp"

namespace fidcurve {

namespace detail {

// 17 significant digits: enough to reproduce any double exactly, with a
// fixed locale-independent format.
inline std::string format_g17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("out", "cannot write file '" + path.string() + "'");
  }
  out << content;
  out.flush();
  if (!out) {
    throw ConfigError("out", "cannot write file '" + path.string() + "'");
  }
}

inline void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("out", "cannot create directory '" + dir.string() + "'");
  }
}

}  // namespace detail

// Computes the restricted density described by the config and writes
// density.csv, quantiles.json, samples.csv and summary.json into out_dir.
inline void run(const ProblemConfig& config, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  detail::ensure_out_dir(dir);

  Scenario scenario(config.curve, config.noise, config.x);
  const ParamInterval iv = config.curve.interval();
  const RestrictedFiducial rf = normalize(scenario, config.prior, iv,
                                          config.output.tolerance);

  // density.csv: grid_points rows equispaced over the parameter interval.
  {
    std::string csv = "t,theta1,theta2,pdf,cdf\n";
    const int n = config.output.grid_points;
    for (int i = 0; i < n; ++i) {
      const double t =
          iv.t_min + (iv.t_max - iv.t_min) * i / static_cast<double>(n - 1);
      const Vec2 mu = config.curve.point(t);
      csv += detail::format_g17(t);
      csv += ',';
      csv += detail::format_g17(mu.x);
      csv += ',';
      csv += detail::format_g17(mu.y);
      csv += ',';
      csv += detail::format_g17(rf.pdf(t));
      csv += ',';
      csv += detail::format_g17(rf.cdf(t));
      csv += '\n';
    }
    detail::write_text_file(dir / "density.csv", csv);
  }

  // quantiles.json: {"p": t} in config order.
  {
    Json q = Json::object();
    for (const double p : config.output.quantiles) {
      q[detail::format_double(p)] = rf.quantile(p);
    }
    detail::write_text_file(dir / "quantiles.json", q.dump(2) + "\n");
  }

  // samples.csv: inverse-CDF draws, one per line, only when requested.
  if (config.output.n_samples > 0) {
    Rng rng(config.output.seed);
    const std::vector<double> samples =
        rf.sample(rng, static_cast<std::size_t>(config.output.n_samples));
    std::string csv;
    for (const double s : samples) {
      csv += detail::format_g17(s);
      csv += '\n';
    }
    detail::write_text_file(dir / "samples.csv", csv);
  }

  // summary.json: headline numbers plus the config echo.
  {
    Json summary = Json::object();
    summary["Z"] = rf.normalizer();
    summary["mode_t"] = rf.mode_t();
    summary["mean_t"] = rf.mean_t();
    summary["config"] = config.echo;
    summary["version"] = kVersion;
    detail::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  }
}

// Runs the Monte Carlo conditioning described by the config's oracle block
// and writes oracle_report.json and oracle_samples.csv into out_dir. The KS
// distance is measured against the conditioning's analytic limit: Jeffreys
// for the tube, Shift{d} for the slab.
inline void oracle_cmd(const ProblemConfig& config, const std::string& out_dir) {
  if (!config.oracle.has_value()) {
    throw ConfigError("oracle", "missing oracle block in config");
  }
  const OracleConfig& oc = *config.oracle;
  const std::filesystem::path dir(out_dir);
  detail::ensure_out_dir(dir);

  Scenario scenario(config.curve, config.noise, config.x);
  Rng rng(oc.seed);
  OracleResult result;
  if (oc.kind == OracleKind::Slab) {
    result = slab_oracle(scenario, oc.d, oc.epsilon, oc.n_proposed, rng);
  } else {
    result = tube_oracle(scenario, oc.epsilon, oc.n_proposed, rng);
  }

  {
    Json report = Json::object();
    report["kind"] = oc.kind == OracleKind::Slab ? "slab" : "tube";
    report["epsilon"] = result.epsilon;
    report["n_proposed"] = result.n_proposed;
    report["n_accepted"] = result.n_accepted;
    report["acceptance_rate"] = result.acceptance_rate;
    report["ks_distance"] = result.ks_distance;
    report["inversion_failures"] = result.inversion_failures;
    report["seed"] = oc.seed;
    detail::write_text_file(dir / "oracle_report.json", report.dump(2) + "\n");
  }
  {
    std::string csv;
    for (const double t : result.accepted_t) {
      csv += detail::format_g17(t);
      csv += '\n';
    }
    detail::write_text_file(dir / "oracle_samples.csv", csv);
  }
}

// Emits a ready-to-run config for one of the built-in scenarios.
inline Json scenario_config(const std::string& name, Point2 x, double t_bound,
                            double radius, double sigma) {
  Json doc = Json::object();
  Json curve = Json::object();
  Json noise = Json::object();
  Json prior = Json::object();
  Json output = Json::object();
  Json oracle = Json::object();
  const double s2 = sigma * sigma;
  noise["cov"] = Json::array({Json::array({s2, 0.0}), Json::array({0.0, s2})});
  prior["type"] = "jeffreys";
  output["grid_points"] = 401;
  output["quantiles"] = Json::array({0.05, 0.25, 0.5, 0.75, 0.95});
  output["n_samples"] = 0;
  output["seed"] = 1;
  oracle["kind"] = "tube";
  oracle["epsilon"] = 0.01;
  oracle["n_proposed"] = 2000000;
  oracle["seed"] = 7;

  if (name == "seidenfeld") {
    curve["mu1"] = "t^3";
    curve["mu2"] = "t";
    curve["t_min"] = -t_bound;
    curve["t_max"] = t_bound;
  } else if (name == "line") {
    curve["mu1"] = "t";
    curve["mu2"] = "0";
    curve["t_min"] = -t_bound;
    curve["t_max"] = t_bound;
  } else if (name == "circle") {
    curve["mu1"] = detail::format_double(radius) + "*cos(t)";
    curve["mu2"] = detail::format_double(radius) + "*sin(t)";
    curve["t_min"] = 0.0;
    curve["t_max"] = 6.283185307179586;
  } else {
    throw ConfigError("name", "expected \"seidenfeld\", \"line\" or \"circle\"");
  }
  doc["curve"] = curve;
  doc["noise"] = noise;
  doc["observation"] = Json::array({x.x, x.y});
  doc["prior"] = prior;
  doc["output"] = output;
  doc["oracle"] = oracle;
  return doc;
}

inline void scenario_cmd(const std::string& name, Point2 x, double t_bound,
                         double radius, double sigma,
                         const std::string& out_dir) {
  const Json doc = scenario_config(name, x, t_bound, radius, sigma);
  parse_config(doc);  // round-trip validation before writing
  const std::filesystem::path dir(out_dir);
  detail::ensure_out_dir(dir);
  detail::write_text_file(dir / "config.json", doc.dump(2) + "\n");
}

}  // namespace fidcurve
