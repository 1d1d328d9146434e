#pragma once

// Plain-text key=value configuration, locale-independent number parsing and
// formatting, and model construction from configuration keys.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "crllb/errors.hpp"
#include "crllb/models.hpp"
#include "crllb/support_estimation.hpp"

namespace crllb {

using Params = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reads `key = value` lines. Blank lines and lines starting with '#' are
/// ignored; later keys replace earlier ones.
inline Params parse_key_values(std::istream& in) {
  Params out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const auto key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[std::string(key)] = std::string(detail::trim(t.substr(eq + 1)));
  }
  return out;
}

inline double parse_double(std::string_view key, std::string_view text) {
  const auto t = detail::trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(std::string(key) + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

template <class Int>
Int parse_integer(std::string_view key, std::string_view text) {
  const auto t = detail::trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(std::string(key) + ": not an integer: '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_double(key, text.substr(pos, end - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Shortest round-trip decimal representation.
inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Fixed number of significant digits, for human-readable output.
inline std::string format_number(double v, int digits) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, ptr);
}

struct Grid {
  double start = 0.0;
  double stop = 1.0;
  int steps = 1;  // number of intervals; steps + 1 points

  std::vector<double> values() const {
    std::vector<double> v;
    for (int i = 0; i <= steps; ++i) {
      v.push_back(i == steps ? stop : start + (stop - start) * i / steps);
    }
    return v;
  }
};

/// "start:stop:steps"
inline Grid parse_grid(std::string_view text) {
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
  if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
    throw ConfigError("grid: expected start:stop:steps, got '" + std::string(text) + "'");
  }
  Grid g{parse_double("grid start", text.substr(0, c1)),
         parse_double("grid stop", text.substr(c1 + 1, c2 - c1 - 1)),
         parse_integer<int>("grid steps", text.substr(c2 + 1))};
  if (g.steps < 1) throw ConfigError("grid: steps must be >= 1");
  if (!std::isfinite(g.start) || !std::isfinite(g.stop) || !(g.stop > g.start)) {
    throw ConfigError("grid: need finite start < stop");
  }
  return g;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model", "beta",   "alpha", "sigma", "a",         "n",      "H",
      "x",     "x1",     "x2",    "samples", "grid",    "seed",   "count",
      "out",   "method", "figure", "radial_nodes", "angular_nodes"};
  return keys;
}

inline void check_known_keys(const Params& p) {
  for (const auto& [k, v] : p) {
    if (!known_keys().count(k)) throw ConfigError("unknown configuration key '" + k + "'");
  }
}

inline std::optional<std::string> get(const Params& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  return it->second;
}

inline double get_double(const Params& p, const std::string& key, double fallback) {
  const auto v = get(p, key);
  return v ? parse_double(key, *v) : fallback;
}

inline std::string model_name(const Params& p) {
  const auto m = get(p, "model");
  if (!m) throw ConfigError("missing model (rfc|laplace|tg|linear_tg|uniform)");
  return *m;
}

/// Builds one of the ball-support models from configuration keys.
/// Defaults: beta 0, a = pi for rfc; alpha 1, a 1 for laplace; n 2, sigma 1,
/// a 1 for tg; H = [[1,0],[0,1],[0,0]], a 1 for linear_tg.
inline AnyModel make_model(const Params& p) {
  const std::string m = model_name(p);
  if (m == "rfc") return RfcModel(get_double(p, "beta", 0.0), get_double(p, "a", std::numbers::pi));
  if (m == "laplace") return TruncLaplaceModel(get_double(p, "alpha", 1.0), get_double(p, "a", 1.0));
  if (m == "tg") {
    const auto n = get(p, "n");
    const int dim = n ? parse_integer<int>("n", *n) : 2;
    if (dim < 1 || dim > static_cast<int>(kMaxDim)) throw ConfigError("tg: n must be in 1..8");
    return TruncGaussianModel(static_cast<std::size_t>(dim), get_double(p, "sigma", 1.0),
                              get_double(p, "a", 1.0));
  }
  if (m == "linear_tg") {
    if (get_double(p, "sigma", 1.0) != 1.0) throw ConfigError("linear_tg: sigma is fixed to 1");
    const auto h = get(p, "H");
    const std::vector<double> entries = h ? parse_list("H", *h)
                                          : std::vector<double>{1, 0, 0, 1, 0, 0};
    return LinearTgModel::from_row_major(entries, get_double(p, "a", 1.0));
  }
  if (m == "uniform") throw ConfigError("uniform is not a ball-support model");
  throw ConfigError("unknown model '" + m + "'");
}

/// The uniform-support problem: x1 (default 0), x2 (default 1), samples
/// (default 5); sigma selects the truncated Gaussian approximation.
inline UniformSupportProblem make_uniform_problem(const Params& p) {
  UniformSupportProblem prob;
  prob.x1 = get_double(p, "x1", 0.0);
  prob.x2 = get_double(p, "x2", 1.0);
  const auto s = get(p, "samples");
  prob.n_samples = s ? parse_integer<int>("samples", *s) : 5;
  prob.validate();
  return prob;
}

}  // namespace crllb
