#pragma once

// The four CLI commands (bound, mc, figure, identities) as functions of a
// parsed RunConfig. Each writes a human-readable block and/or CSV to the
// given stream and, when `out` is set, the CSV to that file as well.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "crllb/bounds.hpp"
#include "crllb/config.hpp"
#include "crllb/identities.hpp"
#include "crllb/models.hpp"
#include "crllb/sampling.hpp"
#include "crllb/support_estimation.hpp"

#ifndef CRLLB_VERSION
#define CRLLB_VERSION "0.0.0"
#endif

namespace crllb {

inline constexpr std::size_t kDefaultMcCount = 100000;

struct RunConfig {
  std::string command;
  Params params;
  std::uint64_t seed = 1;
  std::size_t count = kDefaultMcCount;
  std::optional<Grid> grid;
  std::string out;
  Method method = Method::quadrature;
  QuadratureSpec spec;
  bool angular_nodes_set = false;

  /// Quadrature spec for a model of the given dimension. Without an explicit
  /// angular node count, 3-D and higher use 64 nodes per angle.
  QuadratureSpec spec_for_dim(std::size_t dim) const {
    QuadratureSpec s = spec.with_dim(dim);
    if (!angular_nodes_set && dim >= 3) s.angular_nodes = 64;
    return s;
  }
};

inline RunConfig make_run_config(std::string command, Params params) {
  check_known_keys(params);
  RunConfig cfg;
  cfg.command = std::move(command);
  if (auto v = get(params, "seed")) cfg.seed = parse_integer<std::uint64_t>("seed", *v);
  if (auto v = get(params, "count")) {
    const auto c = parse_integer<long long>("count", *v);
    if (c < 1) throw ConfigError("count must be >= 1");
    cfg.count = static_cast<std::size_t>(c);
  }
  if (auto v = get(params, "grid")) cfg.grid = parse_grid(*v);
  if (auto v = get(params, "out")) cfg.out = *v;
  if (auto v = get(params, "method")) {
    if (*v == "quadrature") {
      cfg.method = Method::quadrature;
    } else if (*v == "closed_form") {
      cfg.method = Method::closed_form;
    } else {
      throw ConfigError("method must be quadrature or closed_form");
    }
  }
  if (auto v = get(params, "radial_nodes")) {
    cfg.spec.radial_nodes = parse_integer<int>("radial_nodes", *v);
  }
  if (auto v = get(params, "angular_nodes")) {
    cfg.spec.angular_nodes = parse_integer<int>("angular_nodes", *v);
    cfg.angular_nodes_set = true;
  }
  cfg.spec.validate();
  if (cfg.command == "mc" && cfg.count < kMinEstimationCount) {
    throw ConfigError("mc: count must be >= 1000");
  }
  cfg.params = std::move(params);
  return cfg;
}

// ---------------------------------------------------------------------------
// Output helpers

struct CsvTable {
  std::vector<std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& os) const {
    for (const auto& m : meta) os << "# " << m << '\n';
    write_row(os, header);
    for (const auto& r : rows) write_row(os, r);
  }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
};

namespace detail {

inline std::vector<std::string> metadata(const RunConfig& cfg, const QuadratureSpec* spec) {
  std::vector<std::string> meta;
  meta.push_back(std::string("crllb ") + CRLLB_VERSION);
  std::string params = "command=" + cfg.command;
  for (const auto& [k, v] : cfg.params) {
    if (k != "out") params += " " + k + "=" + v;
  }
  meta.push_back(params);
  if (spec) {
    meta.push_back("quadrature radial_nodes=" + std::to_string(spec->radial_nodes) +
                   " angular_nodes=" + std::to_string(spec->angular_nodes) +
                   " rel_tol=" + format_number(spec->rel_tol) + " dim=" + std::to_string(spec->dim));
  }
  meta.push_back("seed=" + std::to_string(cfg.seed));
  return meta;
}

inline std::string fmt_matrix(const Matrix& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s += i ? "; " : "";
    for (std::size_t j = 0; j < m.cols(); ++j) s += (j ? ", " : "") + format_number(m(i, j), 10);
  }
  return s + "]";
}

inline double mean_diagonal(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s / static_cast<double>(m.rows());
}

inline void append_sym(std::vector<std::string>& header, std::vector<std::string>& row,
                       const std::string& prefix, const std::optional<Matrix>& m,
                       std::size_t dim) {
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      header.push_back(prefix + "_" + std::to_string(i + 1) + std::to_string(j + 1));
      row.push_back(m ? format_number((*m)(i, j)) : std::string());
    }
}

inline void emit(const RunConfig& cfg, const CsvTable& table, std::ostream& os) {
  table.write(os);
  if (!cfg.out.empty()) {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + cfg.out + "'");
    table.write(f);
    if (!f) throw ConfigError("failed writing output file '" + cfg.out + "'");
  }
}

inline Vector parameter_point(const Params& p, std::size_t dim) {
  const auto v = get(p, "x");
  if (!v) return Vector(dim, 0.0);
  const auto vals = parse_list("x", *v);
  if (vals.size() != dim) {
    throw ConfigError("x must have " + std::to_string(dim) + " comma-separated entries");
  }
  return Vector(std::span<const double>(vals));
}

inline std::optional<double> sigma_param(const Params& p) {
  const auto v = get(p, "sigma");
  if (!v) return std::nullopt;
  if (*v == "inf") return std::numeric_limits<double>::infinity();
  return parse_double("sigma", *v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// bound

inline CsvTable bound_table(const RunConfig& cfg, const std::string& model, const BoundReport& r,
                            const QuadratureSpec& spec) {
  CsvTable t;
  t.meta = detail::metadata(cfg, &spec);
  const std::size_t d = r.fim.dim();
  const double delta = r.closed_form_deltas ? r.closed_form_deltas->max() : 0.0;
  t.header = {"model",      "method",        "dim",     "fim_diag",  "leibniz_diag",
              "l_diag",     "crlb_diag",     "crllb_diag", "cov_diag", "crlb_valid",
              "efficient",  "collinearity_residual", "l_identity_residual",
              "closed_form_delta"};
  std::vector<std::string> row = {
      model,
      to_string(r.method),
      std::to_string(d),
      format_number(detail::mean_diagonal(r.fim)),
      format_number(detail::mean_diagonal(r.leibniz)),
      format_number(detail::mean_diagonal(r.l_matrix)),
      r.crlb ? format_number(detail::mean_diagonal(*r.crlb)) : std::string(),
      format_number(detail::mean_diagonal(r.crllb)),
      format_number(detail::mean_diagonal(r.mle_cov)),
      r.crlb_valid ? "true" : "false",
      r.efficient ? "true" : "false",
      format_number(r.collinearity_residual),
      format_number(r.l_identity_residual),
      r.closed_form_deltas ? format_number(delta) : std::string()};
  const auto opt = [](const SymMatrix& m) { return std::optional<Matrix>(m.matrix()); };
  detail::append_sym(t.header, row, "fim", opt(r.fim), d);
  detail::append_sym(t.header, row, "leibniz", opt(r.leibniz), d);
  detail::append_sym(t.header, row, "l", opt(r.l_matrix), d);
  detail::append_sym(t.header, row, "crlb",
                     r.crlb ? std::optional<Matrix>(r.crlb->matrix()) : std::nullopt, d);
  detail::append_sym(t.header, row, "crllb", opt(r.crllb), d);
  detail::append_sym(t.header, row, "cov", opt(r.mle_cov), d);
  t.rows.push_back(std::move(row));
  return t;
}

inline void print_report(const std::string& model, const BoundReport& r, std::ostream& os) {
  os << "model: " << model << "\n";
  os << "method: " << to_string(r.method) << "\n";
  os << "J      = " << detail::fmt_matrix(r.fim) << "\n";
  os << "D_L    = " << detail::fmt_matrix(r.leibniz) << "\n";
  os << "L      = " << detail::fmt_matrix(r.l_matrix) << "\n";
  if (r.crlb) {
    os << "CRLB   = " << detail::fmt_matrix(*r.crlb)
       << (r.crlb_valid ? "" : "  (not a valid bound: Leibniz term is nonzero)") << "\n";
  } else {
    os << "CRLB   = none (J is singular)\n";
  }
  os << "CRLLB  = " << detail::fmt_matrix(r.crllb) << "\n";
  os << "cov    = " << detail::fmt_matrix(r.mle_cov) << "\n";
  os << "collinearity residual: " << format_number(r.collinearity_residual, 6) << "\n";
  os << "efficient: " << (r.efficient ? "true" : "false") << "\n";
  if (r.closed_form_deltas) {
    const auto& d = *r.closed_form_deltas;
    os << "closed-form deltas: fim " << format_number(d.fim, 3) << ", leibniz "
       << format_number(d.leibniz, 3) << ", cov " << format_number(d.mle_cov, 3) << ", crllb "
       << format_number(d.crllb, 3) << "\n";
  }
  os << "\n";
}

inline int cmd_bound_uniform(const RunConfig& cfg, std::ostream& os) {
  const UniformSupportProblem prob = make_uniform_problem(cfg.params);
  const SymMatrix p = estimator_covariance(prob.x1, prob.x2, prob.n_samples);
  const auto sigma = detail::sigma_param(cfg.params);
  os << "model: uniform (x1=" << format_number(prob.x1) << ", x2=" << format_number(prob.x2)
     << ", samples=" << prob.n_samples << ")\n";
  os << "cov    = " << detail::fmt_matrix(p) << "\n";
  if (!sigma || std::isinf(*sigma)) {
    os << "J      = " << detail::fmt_matrix(classical_fim(prob.x1, prob.x2, prob.n_samples))
       << "\n";
    uniform_support_crllb(prob, {std::numeric_limits<double>::infinity(), 256});
  }
  const UniformSupportBounds b = uniform_support_crllb(prob, {*sigma, 256});
  os << "sigma  = " << format_number(*sigma) << "\n";
  os << "J'     = " << detail::fmt_matrix(b.fim) << "\n";
  os << "D'     = " << detail::fmt_matrix(b.leibniz.total()) << "\n";
  os << "L'     = " << detail::fmt_matrix(b.l_matrix) << "\n";
  os << "CRLLB  = " << detail::fmt_matrix(b.crllb) << "\n\n";

  CsvTable t;
  t.meta = detail::metadata(cfg, nullptr);
  t.header = {"model", "x1", "x2", "samples", "sigma", "l_norm", "crllb_norm"};
  std::vector<std::string> row = {"uniform",
                                  format_number(prob.x1),
                                  format_number(prob.x2),
                                  std::to_string(prob.n_samples),
                                  format_number(*sigma),
                                  format_number(frobenius(b.l_matrix)),
                                  format_number(frobenius(b.crllb))};
  detail::append_sym(t.header, row, "fim", b.fim.matrix(), 2);
  detail::append_sym(t.header, row, "leibniz", b.leibniz.total().matrix(), 2);
  detail::append_sym(t.header, row, "l", b.l_matrix.matrix(), 2);
  detail::append_sym(t.header, row, "crllb", b.crllb.matrix(), 2);
  detail::append_sym(t.header, row, "cov", p.matrix(), 2);
  t.rows.push_back(std::move(row));
  detail::emit(cfg, t, os);
  return 0;
}

inline int cmd_bound(const RunConfig& cfg, std::ostream& os) {
  if (model_name(cfg.params) == "uniform") return cmd_bound_uniform(cfg, os);
  const AnyModel model = make_model(cfg.params);
  return std::visit(
      [&](const auto& m) {
        const QuadratureSpec spec = cfg.spec_for_dim(m.dim_z());
        const Vector x = detail::parameter_point(cfg.params, m.dim_x());
        const BoundReport r = crllb(m, x, spec, cfg.method);
        print_report(m.name(), r, os);
        detail::emit(cfg, bound_table(cfg, m.name(), r, spec), os);
        return 0;
      },
      model);
}

// ---------------------------------------------------------------------------
// mc

inline int cmd_mc(const RunConfig& cfg, std::ostream& os) {
  CsvTable t;
  t.header = {"model", "seed", "count", "bound_gap", "bound_slack", "bound_pass", "cov_pass",
              "unbiased"};
  std::vector<std::string> row;
  if (model_name(cfg.params) == "uniform") {
    const UniformSupportProblem prob = make_uniform_problem(cfg.params);
    const MomentAccumulator acc = simulate_endpoints(prob, cfg.seed, cfg.count);
    const SymMatrix target = estimator_covariance(prob.x1, prob.x2, prob.n_samples);
    const McVerdict cov = compare_covariance(acc, target);
    const bool unbiased = unbiased_within_band(acc);
    os << "model: uniform\nempirical cov = " << detail::fmt_matrix(cov.empirical_cov)
       << "\nexact cov     = " << detail::fmt_matrix(target)
       << "\nz-scores      = " << detail::fmt_matrix(cov.componentwise_z_scores)
       << "\ncovariance match: " << (cov.pass ? "pass" : "fail")
       << "\nunbiased: " << (unbiased ? "pass" : "fail") << "\n\n";
    t.meta = detail::metadata(cfg, nullptr);
    row = {"uniform", std::to_string(cfg.seed), std::to_string(cfg.count), "", "",
           "", cov.pass ? "true" : "false", unbiased ? "true" : "false"};
    detail::append_sym(t.header, row, "emp", cov.empirical_cov.matrix(), 2);
    detail::append_sym(t.header, row, "cov", target.matrix(), 2);
    t.rows.push_back(std::move(row));
    detail::emit(cfg, t, os);
    return 0;
  }

  const AnyModel model = make_model(cfg.params);
  return std::visit(
      [&](const auto& m) {
        const QuadratureSpec spec = cfg.spec_for_dim(m.dim_z());
        const Vector x = detail::parameter_point(cfg.params, m.dim_x());
        const BoundReport r = crllb(m, x, spec, cfg.method);
        const MomentAccumulator acc = estimate_errors(m, x, cfg.seed, cfg.count);
        const McVerdict bound = check_bound(acc, r.crllb);
        const McVerdict cov = compare_covariance(acc, r.mle_cov);
        const bool unbiased = unbiased_within_band(acc);
        os << "model: " << m.name() << "\nempirical cov = " << detail::fmt_matrix(bound.empirical_cov)
           << "\nCRLLB         = " << detail::fmt_matrix(r.crllb)
           << "\nMLE cov       = " << detail::fmt_matrix(r.mle_cov)
           << "\nz-scores vs cov = " << detail::fmt_matrix(cov.componentwise_z_scores)
           << "\nmin eig(emp - CRLLB) = " << format_number(bound.min_eigen_gap, 6)
           << " (slack " << format_number(kSeBand * bound.std_error_scale, 6) << ")"
           << "\nbound holds: " << (bound.pass ? "pass" : "fail")
           << "\ncovariance match: " << (cov.pass ? "pass" : "fail")
           << "\nunbiased: " << (unbiased ? "pass" : "fail") << "\n\n";
        t.meta = detail::metadata(cfg, &spec);
        row = {m.name(),
               std::to_string(cfg.seed),
               std::to_string(cfg.count),
               format_number(bound.min_eigen_gap),
               format_number(kSeBand * bound.std_error_scale),
               bound.pass ? "true" : "false",
               cov.pass ? "true" : "false",
               unbiased ? "true" : "false"};
        const std::size_t d = m.dim_x();
        detail::append_sym(t.header, row, "emp", bound.empirical_cov.matrix(), d);
        detail::append_sym(t.header, row, "crllb", r.crllb.matrix(), d);
        detail::append_sym(t.header, row, "cov", r.mle_cov.matrix(), d);
        t.rows.push_back(std::move(row));
        detail::emit(cfg, t, os);
        return 0;
      },
      model);
}

// ---------------------------------------------------------------------------
// figure

/// RFC sweep over beta (default grid 0:1:20): CRLLB and MLE covariance
/// diagonals, computed and closed form.
inline CsvTable figure_rfc(const RunConfig& cfg) {
  const Grid grid = cfg.grid.value_or(Grid{0.0, 1.0, 20});
  const QuadratureSpec spec = cfg.spec_for_dim(2);
  CsvTable t;
  t.meta = detail::metadata(cfg, &spec);
  t.header = {"param", "crllb_diag", "cov_diag", "crllb_closed", "cov_closed", "method"};
  for (double beta : grid.values()) {
    const RfcModel m(beta);
    const BoundReport r = crllb(m, Vector(2, 0.0), spec, cfg.method);
    const ClosedFormSet cf = *m.closed_form();
    t.rows.push_back({format_number(beta), format_number(detail::mean_diagonal(r.crllb)),
                      format_number(detail::mean_diagonal(r.mle_cov)),
                      format_number(cf.crllb(0, 0)), format_number(cf.mle_cov(0, 0)),
                      to_string(r.method)});
  }
  return t;
}

/// Truncated Laplace sweep over a*alpha (default grid 0.5:20:39) at fixed
/// alpha; the normalized columns multiply by 2 alpha^2 (1 - e^{-a alpha} -
/// a alpha e^{-a alpha}).
inline CsvTable figure_laplace(const RunConfig& cfg) {
  const Grid grid = cfg.grid.value_or(Grid{0.5, 20.0, 39});
  const double alpha = get_double(cfg.params, "alpha", 1.0);
  const QuadratureSpec spec = cfg.spec_for_dim(2);
  CsvTable t;
  t.meta = detail::metadata(cfg, &spec);
  t.header = {"param",           "crllb_diag",     "cov_diag", "crllb_normalized",
              "cov_normalized",  "cov_over_crllb", "method"};
  for (double ta : grid.values()) {
    if (!(ta > 0.0)) throw ConfigError("figure laplace: a*alpha must be > 0");
    const TruncLaplaceModel m(alpha, ta / alpha);
    const BoundReport r = crllb(m, Vector(2, 0.0), spec, cfg.method);
    const double factor = 2.0 * alpha * alpha * (-std::expm1(-ta) - ta * std::exp(-ta));
    const double b = detail::mean_diagonal(r.crllb);
    const double c = detail::mean_diagonal(r.mle_cov);
    t.rows.push_back({format_number(ta), format_number(b), format_number(c),
                      format_number(b * factor), format_number(c * factor),
                      format_number(c / b), to_string(r.method)});
  }
  return t;
}

inline int cmd_figure(const RunConfig& cfg, std::ostream& os) {
  auto which = get(cfg.params, "figure");
  if (!which) which = get(cfg.params, "model");
  if (!which) throw ConfigError("figure: set --figure rfc|laplace");
  if (*which == "rfc") {
    detail::emit(cfg, figure_rfc(cfg), os);
  } else if (*which == "laplace") {
    detail::emit(cfg, figure_laplace(cfg), os);
  } else {
    throw ConfigError("figure: unknown figure '" + *which + "' (rfc|laplace)");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// identities

inline constexpr double kIdentityExitTolerance = 1e-8;

inline int cmd_identities(const RunConfig& cfg, std::ostream& os) {
  const auto checks = run_identity_checks();
  CsvTable t;
  t.meta = detail::metadata(cfg, nullptr);
  t.header = {"check", "value", "reference", "residual", "tolerance", "pass"};
  bool ok = true;
  for (const auto& c : checks) {
    t.rows.push_back({c.name, format_number(c.value), format_number(c.reference),
                      format_number(c.residual), format_number(c.tolerance),
                      c.pass ? "true" : "false"});
    if (!(c.residual <= kIdentityExitTolerance)) ok = false;
  }
  detail::emit(cfg, t, os);
  return ok ? 0 : 2;
}

inline int run_command(const RunConfig& cfg, std::ostream& os) {
  if (cfg.command == "bound") return cmd_bound(cfg, os);
  if (cfg.command == "mc") return cmd_mc(cfg, os);
  if (cfg.command == "figure") return cmd_figure(cfg, os);
  if (cfg.command == "identities") return cmd_identities(cfg, os);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace crllb
