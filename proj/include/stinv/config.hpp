#pragma once

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stinv/error.hpp"
#include "stinv/expr.hpp"
#include "stinv/mesh.hpp"
#include "stinv/tikhonov.hpp"

namespace stinv {

/// PARSE_ERROR carries a line, VALIDATION_ERROR a key.
class ConfigError : public Error {
 public:
  ConfigError(ErrorCode code, std::string where, const std::string& msg)
      : Error(code, where + ": " + msg), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct RunConfig {
  Domain domain{0.0, 1.0, 1.0};
  double kappa1 = 1.0;
  double kappa2 = 2.0;
  double gamma0 = 0.4;
  std::vector<double> v;
  std::string ell_expr = "1";
  std::string g_expr = "0";
  Window omega{0.6, 0.8};
  int n_time = 10;
  int n_left = 4;
  int n_right = 6;
  int levels = 3;
  Strategy strategy = Strategy::Variational;
  std::optional<double> lambda;
  std::optional<LambdaRule> lambda_rule;
  double lambda_c = 1.0;
  double eps = 0.0;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  /// Source-condition element for synthetic data (extension of the key set).
  std::string zeta_expr = "sin(3.14159265358979323846*(x-0.6)/0.2)*cos(6.28318530717958647692*t)";

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "domain.a",      "domain.b",     "domain.T",      "kappa.1",         "kappa.2",
        "motion.gamma0", "motion.v",     "ell.expr",      "g.expr",          "omega.left",
        "omega.right",   "mesh.n_time",  "mesh.n_left",   "mesh.n_right",    "mesh.levels",
        "inverse.strategy", "inverse.lambda", "inverse.lambda_rule", "inverse.lambda_c", "noise.eps",
        "noise.seed",    "out.dir",      "data.zeta"};
    return k;
  }

  InterfaceMotion motion() const { return {gamma0, v}; }
  Field ell() const { return Expression::parse(ell_expr).field(); }
  Field g() const { return Expression::parse(g_expr).field(); }
  Field zeta() const { return Expression::parse(zeta_expr).field(); }

  MeshParams mesh_params() const {
    MeshParams p;
    p.motion = motion();
    p.domain = domain;
    p.omega = omega;
    p.n_time = n_time;
    p.n_left = n_left;
    p.n_right = n_right;
    return p;
  }

  ProblemData problem_data() const {
    ProblemData d;
    d.kappa1 = kappa1;
    d.kappa2 = kappa2;
    d.ell = ell();
    d.g = g();
    d.motion = motion();
    return d;
  }

  /// Fixed lambda, or the rule evaluated at (h, eps).
  double lambda_for(double h, double eps_level) const {
    if (lambda) return *lambda;
    return stinv::lambda_rule(*lambda_rule, h, eps_level, lambda_c);
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/// Ordered key = value entries; later entries (overrides) win.
class ConfigSource {
 public:
  struct Entry {
    std::string value;
    std::string origin;  // "line N" or "--set #k"
  };

  void add_text(std::string_view text, const std::string& name = "config") {
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++line_no;
      add_line(raw, name + " line " + std::to_string(line_no), true);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
  }

  void add_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(ErrorCode::ParseError, path, "cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    add_text(ss.str(), path);
  }

  void add_override(const std::string& assignment) {
    ++overrides_;
    add_line(assignment, "--set #" + std::to_string(overrides_), false);
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  void add_line(std::string_view raw, const std::string& origin, bool from_file) {
    const std::size_t hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
    if (line.empty()) return;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(ErrorCode::ParseError, origin, "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(ErrorCode::ParseError, origin, "missing key");
    const auto& known = RunConfig::keys();
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(ErrorCode::ValidationError, key, "unknown key (" + origin + ")");
    if (from_file && entries_.count(key) && entries_[key].origin.find("--set") == std::string::npos)
      throw ConfigError(ErrorCode::ParseError, origin, "duplicate key '" + key + "'");
    entries_[key] = {value, origin};
  }

  std::map<std::string, Entry> entries_;
  int overrides_ = 0;
};

namespace detail {

inline double parse_double(const ConfigSource::Entry& e, const std::string& key) {
  double v = 0.0;
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  auto [p, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || p != end) throw ConfigError(ErrorCode::ParseError, e.origin, key + ": expected a number");
  return v;
}

inline long parse_int(const ConfigSource::Entry& e, const std::string& key) {
  long v = 0;
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  auto [p, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || p != end) throw ConfigError(ErrorCode::ParseError, e.origin, key + ": expected an integer");
  return v;
}

}  // namespace detail

inline RunConfig resolve_config(const ConfigSource& src) {
  RunConfig c;
  const auto& E = src.entries();
  auto get = [&](const std::string& k) -> const ConfigSource::Entry* {
    auto it = E.find(k);
    return it == E.end() ? nullptr : &it->second;
  };
  auto num = [&](const std::string& k, double& dst) {
    if (auto e = get(k)) dst = detail::parse_double(*e, k);
  };
  auto integer = [&](const std::string& k, int& dst) {
    if (auto e = get(k)) dst = static_cast<int>(detail::parse_int(*e, k));
  };
  auto expr = [&](const std::string& k, std::string& dst) {
    if (auto e = get(k)) {
      try {
        Expression::parse(e->value);
      } catch (const Error& err) {
        throw ConfigError(ErrorCode::ParseError, e->origin, k + ": " + err.what());
      }
      dst = e->value;
    }
  };
  auto bad = [](const std::string& k, const std::string& msg) { return ConfigError(ErrorCode::ValidationError, k, msg); };

  num("domain.a", c.domain.a);
  num("domain.b", c.domain.b);
  num("domain.T", c.domain.T);
  num("kappa.1", c.kappa1);
  num("kappa.2", c.kappa2);
  num("motion.gamma0", c.gamma0);
  if (auto e = get("motion.v")) {
    c.v.clear();
    std::istringstream is(e->value);
    std::string tok;
    while (is >> tok) c.v.push_back(detail::parse_double({tok, e->origin}, "motion.v"));
    while (!c.v.empty() && c.v.back() == 0.0) c.v.pop_back();
  }
  expr("ell.expr", c.ell_expr);
  expr("g.expr", c.g_expr);
  expr("data.zeta", c.zeta_expr);
  num("omega.left", c.omega.left);
  num("omega.right", c.omega.right);
  integer("mesh.n_time", c.n_time);
  integer("mesh.n_left", c.n_left);
  integer("mesh.n_right", c.n_right);
  integer("mesh.levels", c.levels);
  if (auto e = get("inverse.strategy")) {
    if (e->value == "variational") c.strategy = Strategy::Variational;
    else if (e->value == "elemwise") c.strategy = Strategy::Elemwise;
    else if (e->value == "postprocess") c.strategy = Strategy::Postprocess;
    else throw bad("inverse.strategy", "expected variational, elemwise or postprocess");
  }
  if (auto e = get("inverse.lambda")) c.lambda = detail::parse_double(*e, "inverse.lambda");
  if (auto e = get("inverse.lambda_rule")) {
    if (e->value == "var45") c.lambda_rule = LambdaRule::Var45;
    else if (e->value == "const12") c.lambda_rule = LambdaRule::Const12;
    else if (e->value == "post310") c.lambda_rule = LambdaRule::Post310;
    else throw bad("inverse.lambda_rule", "expected var45, const12 or post310");
  }
  num("inverse.lambda_c", c.lambda_c);
  num("noise.eps", c.eps);
  if (auto e = get("noise.seed")) {
    const long s = detail::parse_int(*e, "noise.seed");
    if (s < 0) throw bad("noise.seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto e = get("out.dir")) c.out_dir = e->value;

  if (!(c.domain.a < c.domain.b)) throw bad("domain.b", "must exceed domain.a");
  if (!(c.domain.T > 0.0)) throw bad("domain.T", "must be > 0");
  if (!(c.kappa1 > 0.0)) throw bad("kappa.1", "must be > 0");
  if (!(c.kappa2 > 0.0)) throw bad("kappa.2", "must be > 0");
  if (!(c.omega.left < c.omega.right)) throw bad("omega.right", "must exceed omega.left");
  if (!(c.omega.right < c.domain.b)) throw bad("omega.right", "must be < domain.b");
  if (!(c.gamma0 > c.domain.a && c.gamma0 < c.omega.left)) throw bad("motion.gamma0", "must lie in (domain.a, omega.left)");
  if (!c.motion().stays_within(c.domain.a, c.omega.left, c.domain.T))
    throw bad("motion.v", "interface leaves (domain.a, omega.left) on [0, T]");
  if (c.n_time < 2) throw bad("mesh.n_time", "must be >= 2");
  if (c.n_left < 2) throw bad("mesh.n_left", "must be >= 2");
  if (c.n_right < 2) throw bad("mesh.n_right", "must be >= 2");
  if (c.levels < 1) throw bad("mesh.levels", "must be >= 1");
  if (c.lambda && c.lambda_rule) throw bad("inverse.lambda", "give either inverse.lambda or inverse.lambda_rule");
  if (!c.lambda && !c.lambda_rule) c.lambda = 1e-2;
  if (c.lambda && !(*c.lambda > 0.0)) throw bad("inverse.lambda", "must be > 0");
  if (!(c.lambda_c > 0.0)) throw bad("inverse.lambda_c", "must be > 0");
  if (!(c.eps >= 0.0)) throw bad("noise.eps", "must be >= 0");
  if (c.out_dir.empty()) throw bad("out.dir", "must not be empty");
  return c;
}

inline RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  ConfigSource src;
  src.add_file(path);
  for (const auto& o : overrides) src.add_override(o);
  return resolve_config(src);
}

inline RunConfig parse_config_text(std::string_view text, const std::vector<std::string>& overrides = {}) {
  ConfigSource src;
  src.add_text(text);
  for (const auto& o : overrides) src.add_override(o);
  return resolve_config(src);
}

/// Every key with its resolved value, in canonical order.
inline void write_resolved_config(const RunConfig& c, std::ostream& os) {
  using detail::fmt;
  os << "domain.a = " << fmt(c.domain.a) << '\n'
     << "domain.b = " << fmt(c.domain.b) << '\n'
     << "domain.T = " << fmt(c.domain.T) << '\n'
     << "kappa.1 = " << fmt(c.kappa1) << '\n'
     << "kappa.2 = " << fmt(c.kappa2) << '\n'
     << "motion.gamma0 = " << fmt(c.gamma0) << '\n'
     << "motion.v =";
  for (double v : c.v) os << ' ' << fmt(v);
  if (c.v.empty()) os << " 0";
  os << '\n'
     << "ell.expr = " << c.ell_expr << '\n'
     << "g.expr = " << c.g_expr << '\n'
     << "omega.left = " << fmt(c.omega.left) << '\n'
     << "omega.right = " << fmt(c.omega.right) << '\n'
     << "mesh.n_time = " << c.n_time << '\n'
     << "mesh.n_left = " << c.n_left << '\n'
     << "mesh.n_right = " << c.n_right << '\n'
     << "mesh.levels = " << c.levels << '\n'
     << "inverse.strategy = " << to_string(c.strategy) << '\n';
  if (c.lambda) os << "inverse.lambda = " << fmt(*c.lambda) << '\n';
  if (c.lambda_rule) os << "inverse.lambda_rule = " << to_string(*c.lambda_rule) << '\n';
  os << "inverse.lambda_c = " << fmt(c.lambda_c) << '\n'
     << "noise.eps = " << fmt(c.eps) << '\n'
     << "noise.seed = " << c.seed << '\n'
     << "out.dir = " << c.out_dir << '\n'
     << "data.zeta = " << c.zeta_expr << '\n';
}

}  // namespace stinv
