#pragma once

// Argument parsing for the crllb command-line tool. Options may come from a
// key=value file (--config) and from flags; flags win.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 mathematical
// failure (singular FIM, envelope violation, identity residual too large).

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "crllb/commands.hpp"

namespace crllb::cli {

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cramer-Rao and Cramer-Rao-Leibniz lower bounds"};
  app.set_version_flag("--version", std::string(CRLLB_VERSION));
  app.require_subcommand(1);

  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  static const std::vector<Flag> flags = {
      {"--model", "model", "rfc | laplace | tg | linear_tg | uniform"},
      {"--beta", "beta", "RFC shape parameter in [0, 1]"},
      {"--alpha", "alpha", "Laplace rate"},
      {"--sigma", "sigma", "Gaussian scale (tg, uniform approximation; 'inf' for exact uniform)"},
      {"--a", "a", "support radius"},
      {"--n", "n", "dimension of the tg model"},
      {"--H", "H", "six comma-separated row-major entries of the 3x2 matrix H"},
      {"--x", "x", "comma-separated parameter point (default 0)"},
      {"--x1", "x1", "uniform lower endpoint"},
      {"--x2", "x2", "uniform upper endpoint"},
      {"--samples", "samples", "uniform sample count per trial"},
      {"--grid", "grid", "sweep start:stop:steps"},
      {"--seed", "seed", "RNG seed"},
      {"--count", "count", "Monte Carlo draws"},
      {"--out", "out", "CSV output path"},
      {"--method", "method", "quadrature | closed_form"},
      {"--figure", "figure", "rfc | laplace"},
      {"--radial-nodes", "radial_nodes", "Gauss-Legendre radial nodes"},
      {"--angular-nodes", "angular_nodes", "Gauss-Legendre nodes per angle"},
  };

  std::map<std::string, std::string> values;
  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file");
  for (const auto& f : flags) app.add_option(f.name, values[f.key], f.help);

  std::string command;
  for (const char* name : {"bound", "mc", "figure", "identities"}) {
    app.add_subcommand(name)->fallthrough()->callback([&command, name] { command = name; });
  }
  app.get_subcommand("bound")->description("bound report: J, D_L, L, CRLB, CRLLB, MLE covariance");
  app.get_subcommand("mc")->description("Monte Carlo covariance and bound verdicts");
  app.get_subcommand("figure")->description("CSV sweep behind the RFC and Laplace figures");
  app.get_subcommand("identities")->description("integral identity and Leibniz self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << CRLLB_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    Params params;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
      params = parse_key_values(in);
    }
    for (const auto& f : flags) {
      if (app.count(f.name)) params[f.key] = values[f.key];
    }
    const RunConfig cfg = make_run_config(command, std::move(params));
    return run_command(cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimMismatch& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const MathError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace crllb::cli
