#include <cmath>
#include <sstream>

#include "bsdej/config.hpp"
#include "config_reader.hpp"

namespace bsdej {

using nlohmann::json;

ConfigError::ConfigError(std::string path, int line, const std::string& message)
    : InvalidArgument(message), path_(std::move(path)), line_(line) {}

namespace detail {

int locate_line(const std::string& source, const std::vector<std::string>& keys) {
  if (source.empty()) return 0;
  std::size_t pos = 0;
  bool found_any = false;
  for (const auto& key : keys) {
    if (key.empty() || key[0] == '[') continue;
    const std::size_t at = source.find("\"" + key + "\"", pos);
    if (at == std::string::npos) break;
    pos = at;
    found_any = true;
  }
  if (!found_any) return 0;
  int line = 1;
  for (std::size_t i = 0; i < pos; ++i) {
    if (source[i] == '\n') ++line;
  }
  return line;
}

std::string Reader::path() const {
  std::string out;
  for (const auto& k : keys_) {
    if (!k.empty() && k[0] == '[') {
      out += k;
    } else {
      if (!out.empty()) out += '.';
      out += k;
    }
  }
  return out;
}

std::string Reader::path(const std::string& key) const {
  const std::string base = path();
  return base.empty() ? key : base + "." + key;
}

void Reader::fail(const std::string& key, const std::string& message) const {
  std::vector<std::string> keys = keys_;
  keys.push_back(key);
  const int line = locate_line(source_, keys);
  std::ostringstream msg;
  msg << "config error";
  if (line > 0) msg << " at line " << line;
  msg << ": " << path(key) << ": " << message;
  throw ConfigError(path(key), line, msg.str());
}

void Reader::fail_here(const std::string& message) const {
  const int line = locate_line(source_, keys_);
  std::ostringstream msg;
  msg << "config error";
  if (line > 0) msg << " at line " << line;
  msg << ": " << (keys_.empty() ? std::string("<root>") : path()) << ": " << message;
  throw ConfigError(path(), line, msg.str());
}

void Reader::require_object() const {
  if (!node_.is_object()) fail_here("expected an object");
}

void Reader::allow_only(std::initializer_list<const char*> keys) const {
  require_object();
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : node_.items()) {
    if (!allowed.count(k)) fail(k, "unknown key");
  }
}

const json& Reader::at(const std::string& key) const {
  if (!has(key)) fail(key, "required field is missing");
  return node_.at(key);
}

double Reader::number(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

double Reader::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::optional<double> Reader::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

long long Reader::integer(const std::string& key) const {
  const json& v = at(key);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  fail(key, "expected an integer");
}

long long Reader::integer(const std::string& key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string Reader::string(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::string Reader::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool Reader::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const json& v = node_.at(key);
  if (!v.is_boolean()) fail(key, "expected true or false");
  return v.get<bool>();
}

std::vector<double> Reader::numbers(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) fail(key, "expected an array of finite numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<double> Reader::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

Reader Reader::child(const std::string& key) const {
  const json& v = at(key);
  std::vector<std::string> keys = keys_;
  keys.push_back(key);
  Reader r(v, std::move(keys), source_);
  return r;
}

Reader Reader::child_or_empty(const std::string& key) const {
  static const json empty = json::object();
  std::vector<std::string> keys = keys_;
  keys.push_back(key);
  return Reader(has(key) ? node_.at(key) : empty, std::move(keys), source_);
}

Reader Reader::element(std::size_t index) const {
  std::vector<std::string> keys = keys_;
  keys.push_back("[" + std::to_string(index) + "]");
  return Reader(node_.at(index), std::move(keys), source_);
}

}  // namespace detail

namespace {

using detail::Reader;

MarkSpace read_marks(const Reader& problem, json& out) {
  const Reader marks = problem.child("marks");
  if (!marks.node().is_array() || marks.node().empty()) {
    problem.fail("marks", "expected a non-empty array of {\"mark\": [...], \"intensity\": x}");
  }
  std::vector<std::vector<double>> vectors;
  std::vector<double> rates;
  out = json::array();
  for (std::size_t i = 0; i < marks.node().size(); ++i) {
    const Reader m = marks.element(i);
    m.allow_only({"mark", "intensity"});
    const auto v = m.numbers("mark");
    if (v.empty()) m.fail("mark", "mark vector must be non-empty");
    bool nonzero = false;
    for (double x : v) nonzero = nonzero || x != 0.0;
    if (!nonzero) m.fail("mark", "the zero vector is not an admissible mark");
    const double rate = m.number("intensity");
    if (!(rate > 0.0)) m.fail("intensity", "must be positive");
    vectors.push_back(v);
    rates.push_back(rate);
    out.push_back({{"mark", v}, {"intensity", rate}});
  }
  return MarkSpace(std::move(vectors), std::move(rates));
}

GeneratorSpec read_generator(const Reader& g, const MarkSpace& marks, int dim, json& out) {
  g.require_object();
  const std::string form = g.string("form");
  const double p = g.number("p", 2.0);
  if (!(p >= 1.0)) g.fail("p", "must be >= 1");
  GeneratorSpec spec;
  out = json::object();
  out["form"] = form;
  if (form == "affine") {
    g.allow_only({"form", "a", "b", "c", "constant", "brownian", "p", "kappa", "alpha", "gamma", "g"});
    const double a = g.number("a", 0.0), b = g.number("b", 0.0), c = g.number("c", 0.0);
    const double constant = g.number("constant", 0.0), brownian = g.number("brownian", 0.0);
    spec = affine_generator(a, b, c, constant, brownian, marks, dim, p);
    out.update({{"a", a}, {"b", b}, {"c", c}, {"constant", constant}, {"brownian", brownian}});
  } else if (form == "lipschitz_smooth") {
    g.allow_only({"form", "a", "b", "c", "constant", "p", "kappa", "alpha", "gamma", "g"});
    const double a = g.number("a", 0.0), b = g.number("b", 0.0), c = g.number("c", 0.0);
    const double constant = g.number("constant", 0.0);
    spec = lipschitz_smooth_generator(a, b, c, constant, marks, dim, p);
    out.update({{"a", a}, {"b", b}, {"c", c}, {"constant", constant}});
  } else if (form == "zv_coupled") {
    g.allow_only({"form", "k", "a", "constant", "p", "kappa", "alpha", "gamma", "g"});
    const double k = g.number("k", 0.0), a = g.number("a", 0.0), constant = g.number("constant", 0.0);
    spec = zv_coupled_generator(k, a, constant, marks, dim, p);
    out.update({{"k", k}, {"a", a}, {"constant", constant}});
  } else {
    g.fail("form", "unknown generator form '" + form + "' (affine | lipschitz_smooth | zv_coupled)");
  }
  out["p"] = p;
  if (auto kappa = g.optional_number("kappa")) {
    if (!(*kappa >= spec.kappa)) g.fail("kappa", "declared kappa is below the form's Lipschitz modulus");
    spec.kappa = *kappa;
  }
  out["kappa"] = spec.kappa;
  if (auto alpha = g.optional_number("alpha")) {
    if (!(*alpha > 0.0 && *alpha < 1.0)) g.fail("alpha", "must lie in (0, 1)");
    spec.alpha = alpha;
    out["alpha"] = *alpha;
  }
  if (auto gamma = g.optional_number("gamma")) {
    if (!(*gamma >= 0.0)) g.fail("gamma", "must be non-negative");
    spec.gamma = *gamma;
    out["gamma"] = *gamma;
  }
  if (auto level = g.optional_number("g")) {
    if (!(*level >= 0.0)) g.fail("g", "must be non-negative");
    const double v = *level;
    spec.g = [v](const StateView&) { return v; };
    out["g"] = v;
  }
  return spec;
}

TerminalSpec read_terminal(const Reader& t, const MarkSpace& marks, int dim, double horizon, json& out) {
  t.require_object();
  const std::string form = t.string("form");
  out = json::object();
  out["form"] = form;
  if (form == "constant") {
    t.allow_only({"form", "value"});
    const double value = t.number("value");
    out["value"] = value;
    return constant_terminal(value);
  }
  if (form == "brownian") {
    t.allow_only({"form", "shape", "scale", "coef", "shift", "component"});
    const std::string shape = t.string("shape", "linear");
    BrownianShape s;
    if (shape == "linear") s = BrownianShape::linear;
    else if (shape == "square") s = BrownianShape::square;
    else if (shape == "exp") s = BrownianShape::exp;
    else if (shape == "sin") s = BrownianShape::sin;
    else if (shape == "abs") s = BrownianShape::abs;
    else t.fail("shape", "unknown shape '" + shape + "' (linear | square | exp | sin | abs)");
    const double scale = t.number("scale", 1.0), coef = t.number("coef", 1.0), shift = t.number("shift", 0.0);
    const long long component = t.integer("component", 0);
    if (component < 0 || component >= dim) t.fail("component", "must lie in [0, dim)");
    out.update({{"shape", shape}, {"scale", scale}, {"coef", coef}, {"shift", shift}, {"component", component}});
    return brownian_terminal(s, scale, coef, shift, static_cast<int>(component));
  }
  if (form == "jump_count") {
    t.allow_only({"form", "weights", "scale", "compensated", "shift"});
    auto weights = t.numbers("weights", std::vector<double>(marks.size(), 1.0));
    if (static_cast<int>(weights.size()) != marks.size()) t.fail("weights", "needs one weight per mark");
    const double scale = t.number("scale", 1.0), shift = t.number("shift", 0.0);
    const bool compensated = t.boolean("compensated", false);
    out.update({{"weights", weights}, {"scale", scale}, {"compensated", compensated}, {"shift", shift}});
    return jump_count_terminal(std::move(weights), scale, compensated, shift, marks, horizon);
  }
  if (form == "sum") {
    t.allow_only({"form", "terms"});
    const Reader terms = t.child("terms");
    if (!terms.node().is_array() || terms.node().empty()) t.fail("terms", "expected a non-empty array");
    std::vector<TerminalSpec> parts;
    json resolved_terms = json::array();
    for (std::size_t i = 0; i < terms.node().size(); ++i) {
      json term;
      parts.push_back(read_terminal(terms.element(i), marks, dim, horizon, term));
      resolved_terms.push_back(std::move(term));
    }
    out["terms"] = std::move(resolved_terms);
    return sum_terminal(std::move(parts));
  }
  t.fail("form", "unknown terminal form '" + form + "' (constant | brownian | jump_count | sum)");
}

}  // namespace

BSDEProblem problem_from_json(const json& problem, const std::string& source, json* resolved) {
  const Reader r(problem, {"problem"}, source);
  r.allow_only({"horizon", "steps", "dim", "marks", "generator", "terminal"});
  const double horizon = r.number("horizon");
  if (!(horizon > 0.0)) r.fail("horizon", "must be positive");
  const long long steps = r.integer("steps");
  if (steps < 1 || steps > 1'000'000) r.fail("steps", "must lie in [1, 1000000]");
  const long long dim = r.integer("dim", 1);
  if (dim < 1 || dim > 64) r.fail("dim", "must lie in [1, 64]");
  json marks_json, gen_json, term_json;
  MarkSpace marks = read_marks(r, marks_json);
  GeneratorSpec gen = read_generator(r.child("generator"), marks, static_cast<int>(dim), gen_json);
  TerminalSpec xi = read_terminal(r.child("terminal"), marks, static_cast<int>(dim), horizon, term_json);
  BSDEProblem out{TimeGrid(horizon, static_cast<int>(steps)), std::move(marks), static_cast<int>(dim),
                  std::move(gen), std::move(xi)};
  out.validate();
  if (resolved) {
    *resolved = json{{"horizon", horizon},   {"steps", steps},          {"dim", dim},
                     {"marks", marks_json}, {"generator", gen_json}, {"terminal", term_json}};
  }
  return out;
}

}  // namespace bsdej
