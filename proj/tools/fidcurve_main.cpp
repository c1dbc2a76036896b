// Command-line front end: `run` evaluates a config and writes density
// tables, `oracle` runs Monte Carlo conditioning checks, `scenario`
// generates starter configs for the built-in problems.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fidcurve/config.hpp"
#include "fidcurve/errors.hpp"
#include "fidcurve/runner.hpp"
#include "fidcurve/version.hpp"

namespace {

// Exit codes: 0 ok, 1 configuration error, 2 numerical failure.
int guarded(int (*body)(const std::string&, const std::string&),
            const std::string& a, const std::string& b) {
  try {
    return body(a, b);
  } catch (const fidcurve::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const fidcurve::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int do_run(const std::string& config_path, const std::string& out_dir) {
  const fidcurve::ProblemConfig config = fidcurve::load_config(config_path);
  fidcurve::run(config, out_dir);
  return 0;
}

int do_oracle(const std::string& config_path, const std::string& out_dir) {
  const fidcurve::ProblemConfig config = fidcurve::load_config(config_path);
  fidcurve::oracle_cmd(config, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restricted fiducial distributions on parametric curves"};
  app.set_version_flag("--version", std::string(fidcurve::kVersion));
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;

  CLI::App* run_cmd = app.add_subcommand("run", "Evaluate a config and write density, quantile and sample tables");
  run_cmd->add_option("--config", config_path, "Path to the JSON config")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Run the Monte Carlo conditioning check from the config's oracle block");
  oracle_cmd->add_option("--config", config_path, "Path to the JSON config")->required();
  oracle_cmd->add_option("--out", out_dir, "Output directory")->required();

  std::string name;
  double x1 = 1.0;
  double x2 = 1.0;
  double t_bound = 2.0;
  double radius = 1.0;
  double sigma = 1.0;
  CLI::App* scen_cmd = app.add_subcommand("scenario", "Generate a starter config for a built-in scenario");
  scen_cmd->add_option("--name", name, "seidenfeld, line or circle")->required();
  scen_cmd->add_option("--x1", x1, "Observed x1");
  scen_cmd->add_option("--x2", x2, "Observed x2");
  scen_cmd->add_option("--t-bound", t_bound, "Half-width of the parameter interval (seidenfeld, line)");
  scen_cmd->add_option("--r", radius, "Circle radius");
  scen_cmd->add_option("--sigma", sigma, "Isotropic noise scale");
  scen_cmd->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    app.exit(e);
    return 1;
  }

  if (run_cmd->parsed()) return guarded(do_run, config_path, out_dir);
  if (oracle_cmd->parsed()) return guarded(do_oracle, config_path, out_dir);
  if (scen_cmd->parsed()) {
    try {
      fidcurve::scenario_cmd(name, {x1, x2}, t_bound, radius, sigma, out_dir);
      return 0;
    } catch (const fidcurve::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  std::cout << app.help();
  return 0;
}
