#pragma once

// Declarative run configuration (JSON), its canonical form and digest.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ness/asymptotics.hpp"
#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/fields.hpp"
#include "ness/ldp.hpp"
#include "ness/local_function.hpp"
#include "ness/quadrature.hpp"

namespace ness {

using Json = nlohmann::json;

class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

struct MonomialSpec {
  double coefficient = 1.0;
  std::vector<unsigned> exponents;
  friend bool operator==(const MonomialSpec&, const MonomialSpec&) = default;
};

/// Registry entry: density, pair-product, indicator-vacuum, indicator-pair-vacuum, constant, polynomial.
struct LocalFunctionSpec {
  std::string name = "density";
  double value = 0.0;                // constant
  std::size_t k = 1;                 // polynomial
  std::vector<MonomialSpec> terms;   // polynomial
  friend bool operator==(const LocalFunctionSpec&, const LocalFunctionSpec&) = default;
};

/// Registry entry: constant (value), power (p), cosine (m), and for target densities lln-profile (shift).
struct TestFunctionSpec {
  std::string name = "constant";
  double value = 1.0;
  unsigned p = 1;
  unsigned m = 1;
  double shift = 0.0;
  friend bool operator==(const TestFunctionSpec&, const TestFunctionSpec&) = default;
};

struct ProfileSpec {
  std::string kind = "linear";  // linear | power
  double exponent = 2.0;
  std::size_t cells = 200;
  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

struct LlnSection {
  std::vector<std::size_t> n_ladder{1000, 10000, 100000};
  std::size_t replicas = 100;
  friend bool operator==(const LlnSection&, const LlnSection&) = default;
};

struct CltSection {
  std::size_t n = 5000;
  std::size_t replicas = 2000;
  friend bool operator==(const CltSection&, const CltSection&) = default;
};

struct BridgeSection {
  std::size_t n = 5000;
  std::size_t replicas = 2000;
  std::vector<double> grid{0.25, 0.5, 0.75};
  friend bool operator==(const BridgeSection&, const BridgeSection&) = default;
};

struct LeScalingSection {
  double x = 0.5;
  std::vector<unsigned> p{1};
  std::vector<std::size_t> n_ladder{128, 256, 512, 1024, 2048, 4096, 8192, 16384};
  friend bool operator==(const LeScalingSection&, const LeScalingSection&) = default;
};

struct ConcentrationSection {
  std::vector<std::size_t> n_ladder{100, 1000, 10000};
  std::size_t replicas = 10000;
  /// eps(N) = N^{-eps_exponent}
  double eps_exponent = 0.25;
  friend bool operator==(const ConcentrationSection&, const ConcentrationSection&) = default;
};

struct LdpSection {
  /// Profile problems need theta_L < theta_R; theta_L > 0 keeps I finite for indicators.
  double theta_left = 0.5;
  double theta_right = 2.0;
  LocalFunctionSpec g{"indicator-vacuum", 0.0, 1, {}};
  TestFunctionSpec phi{"constant", 0.2, 1, 1, 0.0};
  TestFunctionSpec mu{"lln-profile", 1.0, 1, 1, 0.0};
  double theta = 1.0;
  std::vector<double> lambda_grid{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> x_grid{0.1, 0.25, 0.5, 0.75, 0.9};
  ProfileSpec profile{};
  double lambda_min = -40.0;
  double lambda_max = 40.0;
  std::size_t truncation = 0;
  double tail_tolerance = 1e-12;
  double eigen_tolerance = 1e-12;
  std::size_t max_iterations = 100000;
  SolverConfig solver{};
  friend bool operator==(const LdpSection& a, const LdpSection& b) {
    return a.theta_left == b.theta_left && a.theta_right == b.theta_right && a.g == b.g && a.phi == b.phi &&
           a.mu == b.mu && a.theta == b.theta && a.lambda_grid == b.lambda_grid && a.x_grid == b.x_grid && a.profile == b.profile && a.lambda_min == b.lambda_min &&
           a.lambda_max == b.lambda_max && a.truncation == b.truncation && a.tail_tolerance == b.tail_tolerance &&
           a.eigen_tolerance == b.eigen_tolerance && a.max_iterations == b.max_iterations &&
           a.solver.max_iterations == b.solver.max_iterations && a.solver.step_size == b.solver.step_size &&
           a.solver.shrink == b.solver.shrink && a.solver.tolerance == b.solver.tolerance &&
           a.solver.multistart == b.solver.multistart && a.solver.seed == b.solver.seed &&
           a.solver.grid_cells == b.solver.grid_cells && a.solver.nodes_per_cell == b.solver.nodes_per_cell;
  }
};

struct AppConfig {
  std::uint64_t seed = 20240601;
  double theta_left = 0.0;
  double theta_right = 2.0;
  LocalFunctionSpec g{};
  TestFunctionSpec phi{};
  QuadratureSpec quadrature{};
  std::size_t sample_n = 10;
  LlnSection lln{};
  CltSection clt{};
  BridgeSection bridge{};
  LeScalingSection le_scaling{};
  ConcentrationSection concentration{};
  LdpSection ldp{};

  BoundaryParams bounds() const { return BoundaryParams(theta_left, theta_right); }
};

namespace detail {

/// Reads an object field by field and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a table (JSON object)");
  }

  template <class T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline LocalFunctionSpec read_local_function(const Json& j, const std::string& path) {
  LocalFunctionSpec s;
  ObjectReader r(j, path);
  r.read("name", s.name);
  r.read("value", s.value);
  r.read("k", s.k);
  if (const Json* terms = r.child("terms")) {
    if (!terms->is_array()) throw ConfigError(r.sub("terms") + ": expected a list of monomials");
    s.terms.clear();
    for (std::size_t i = 0; i < terms->size(); ++i) {
      MonomialSpec m;
      ObjectReader tr(terms->at(i), r.sub("terms") + "[" + std::to_string(i) + "]");
      tr.read("coefficient", m.coefficient);
      tr.read("exponents", m.exponents);
      tr.finish();
      s.terms.push_back(m);
    }
  }
  r.finish();
  return s;
}

inline TestFunctionSpec read_test_function(const Json& j, const std::string& path, TestFunctionSpec s) {
  ObjectReader r(j, path);
  r.read("name", s.name);
  r.read("value", s.value);
  r.read("p", s.p);
  r.read("m", s.m);
  r.read("shift", s.shift);
  r.finish();
  return s;
}

inline Json write_local_function(const LocalFunctionSpec& s) {
  Json terms = Json::array();
  for (const auto& m : s.terms) terms.push_back({{"coefficient", m.coefficient}, {"exponents", m.exponents}});
  return {{"name", s.name}, {"value", s.value}, {"k", s.k}, {"terms", terms}};
}

inline Json write_test_function(const TestFunctionSpec& s) {
  return {{"name", s.name}, {"value", s.value}, {"p", s.p}, {"m", s.m}, {"shift", s.shift}};
}

}  // namespace detail

inline LocalFunction make_local_function(const LocalFunctionSpec& s);
inline TestFunction make_test_function(const TestFunctionSpec& s);

inline AppConfig parse_config(const Json& j) {
  AppConfig c;
  detail::ObjectReader r(j, "config");
  r.read("seed", c.seed);
  if (const Json* b = r.child("bounds")) {
    detail::ObjectReader br(*b, "config.bounds");
    br.read("theta_left", c.theta_left);
    br.read("theta_right", c.theta_right);
    br.finish();
  }
  if (const Json* g = r.child("g")) c.g = detail::read_local_function(*g, "config.g");
  if (const Json* phi = r.child("phi")) c.phi = detail::read_test_function(*phi, "config.phi", c.phi);
  if (const Json* q = r.child("quadrature")) {
    detail::ObjectReader qr(*q, "config.quadrature");
    qr.read("panels", c.quadrature.panels);
    qr.read("nodes_per_panel", c.quadrature.nodes_per_panel);
    qr.read("truncation", c.quadrature.truncation);
    qr.read("tail_tolerance", c.quadrature.tail_tolerance);
    qr.read("convergence_tolerance", c.quadrature.convergence_tolerance);
    qr.finish();
  }
  if (const Json* s = r.child("sample")) {
    detail::ObjectReader sr(*s, "config.sample");
    sr.read("n", c.sample_n);
    sr.finish();
  }
  if (const Json* s = r.child("lln")) {
    detail::ObjectReader sr(*s, "config.lln");
    sr.read("n_ladder", c.lln.n_ladder);
    sr.read("replicas", c.lln.replicas);
    sr.finish();
  }
  if (const Json* s = r.child("clt")) {
    detail::ObjectReader sr(*s, "config.clt");
    sr.read("n", c.clt.n);
    sr.read("replicas", c.clt.replicas);
    sr.finish();
  }
  if (const Json* s = r.child("bridge")) {
    detail::ObjectReader sr(*s, "config.bridge");
    sr.read("n", c.bridge.n);
    sr.read("replicas", c.bridge.replicas);
    sr.read("grid", c.bridge.grid);
    sr.finish();
  }
  if (const Json* s = r.child("le_scaling")) {
    detail::ObjectReader sr(*s, "config.le_scaling");
    sr.read("x", c.le_scaling.x);
    sr.read("p", c.le_scaling.p);
    sr.read("n_ladder", c.le_scaling.n_ladder);
    sr.finish();
  }
  if (const Json* s = r.child("concentration")) {
    detail::ObjectReader sr(*s, "config.concentration");
    sr.read("n_ladder", c.concentration.n_ladder);
    sr.read("replicas", c.concentration.replicas);
    sr.read("eps_exponent", c.concentration.eps_exponent);
    sr.finish();
  }
  if (const Json* s = r.child("ldp")) {
    auto& l = c.ldp;
    detail::ObjectReader lr(*s, "config.ldp");
    lr.read("theta_left", l.theta_left);
    lr.read("theta_right", l.theta_right);
    if (const Json* g = lr.child("g")) l.g = detail::read_local_function(*g, "config.ldp.g");
    if (const Json* phi = lr.child("phi")) l.phi = detail::read_test_function(*phi, "config.ldp.phi", l.phi);
    if (const Json* mu = lr.child("mu")) l.mu = detail::read_test_function(*mu, "config.ldp.mu", l.mu);
    lr.read("theta", l.theta);
    lr.read("lambda_grid", l.lambda_grid);
    lr.read("x_grid", l.x_grid);
    if (const Json* p = lr.child("profile")) {
      detail::ObjectReader pr(*p, "config.ldp.profile");
      pr.read("kind", l.profile.kind);
      pr.read("exponent", l.profile.exponent);
      pr.read("cells", l.profile.cells);
      pr.finish();
    }
    lr.read("lambda_min", l.lambda_min);
    lr.read("lambda_max", l.lambda_max);
    lr.read("truncation", l.truncation);
    lr.read("tail_tolerance", l.tail_tolerance);
    lr.read("eigen_tolerance", l.eigen_tolerance);
    lr.read("max_iterations", l.max_iterations);
    if (const Json* so = lr.child("solver")) {
      detail::ObjectReader sr(*so, "config.ldp.solver");
      sr.read("max_iterations", l.solver.max_iterations);
      sr.read("step_size", l.solver.step_size);
      sr.read("shrink", l.solver.shrink);
      sr.read("tolerance", l.solver.tolerance);
      sr.read("multistart", l.solver.multistart);
      sr.read("seed", l.solver.seed);
      sr.read("grid_cells", l.solver.grid_cells);
      sr.read("nodes_per_cell", l.solver.nodes_per_cell);
      sr.finish();
    }
    lr.finish();
  }
  r.finish();
  try {
    (void)c.bounds();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config.bounds: ") + e.what());
  }
  // Unknown registry names fail here rather than at dispatch time.
  (void)make_local_function(c.g);
  (void)make_test_function(c.phi);
  (void)make_local_function(c.ldp.g);
  (void)make_test_function(c.ldp.phi);
  return c;
}

/// Full canonical form: every field present, keys sorted.
inline Json to_json(const AppConfig& c) {
  const auto& l = c.ldp;
  return {
      {"seed", c.seed},
      {"bounds", {{"theta_left", c.theta_left}, {"theta_right", c.theta_right}}},
      {"g", detail::write_local_function(c.g)},
      {"phi", detail::write_test_function(c.phi)},
      {"quadrature",
       {{"panels", c.quadrature.panels},
        {"nodes_per_panel", c.quadrature.nodes_per_panel},
        {"truncation", c.quadrature.truncation},
        {"tail_tolerance", c.quadrature.tail_tolerance},
        {"convergence_tolerance", c.quadrature.convergence_tolerance}}},
      {"sample", {{"n", c.sample_n}}},
      {"lln", {{"n_ladder", c.lln.n_ladder}, {"replicas", c.lln.replicas}}},
      {"clt", {{"n", c.clt.n}, {"replicas", c.clt.replicas}}},
      {"bridge", {{"n", c.bridge.n}, {"replicas", c.bridge.replicas}, {"grid", c.bridge.grid}}},
      {"le_scaling", {{"x", c.le_scaling.x}, {"p", c.le_scaling.p}, {"n_ladder", c.le_scaling.n_ladder}}},
      {"concentration",
       {{"n_ladder", c.concentration.n_ladder},
        {"replicas", c.concentration.replicas},
        {"eps_exponent", c.concentration.eps_exponent}}},
      {"ldp",
       {{"theta_left", l.theta_left},
        {"theta_right", l.theta_right},
        {"g", detail::write_local_function(l.g)},
        {"phi", detail::write_test_function(l.phi)},
        {"mu", detail::write_test_function(l.mu)},
        {"theta", l.theta},
        {"lambda_grid", l.lambda_grid},
        {"x_grid", l.x_grid},
        {"profile", {{"kind", l.profile.kind}, {"exponent", l.profile.exponent}, {"cells", l.profile.cells}}},
        {"lambda_min", l.lambda_min},
        {"lambda_max", l.lambda_max},
        {"truncation", l.truncation},
        {"tail_tolerance", l.tail_tolerance},
        {"eigen_tolerance", l.eigen_tolerance},
        {"max_iterations", l.max_iterations},
        {"solver",
         {{"max_iterations", l.solver.max_iterations},
          {"step_size", l.solver.step_size},
          {"shrink", l.solver.shrink},
          {"tolerance", l.solver.tolerance},
          {"multistart", l.solver.multistart},
          {"seed", l.solver.seed},
          {"grid_cells", l.solver.grid_cells},
          {"nodes_per_cell", l.solver.nodes_per_cell}}}}},
  };
}

inline std::string canonical_text(const AppConfig& c) { return to_json(c).dump(); }

/// FNV-1a 64-bit of the canonical text, as 16 hex digits.
inline std::string config_digest(const AppConfig& c) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return out;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------- registries

inline LocalFunction make_local_function(const LocalFunctionSpec& s) {
  if (s.name == "density") return LocalFunction::density();
  if (s.name == "pair-product") return LocalFunction::pair_product();
  if (s.name == "indicator-vacuum") return LocalFunction::indicator_vacuum();
  if (s.name == "indicator-pair-vacuum") return LocalFunction::indicator_pair_vacuum();
  if (s.name == "constant") return LocalFunction::constant(s.value);
  if (s.name == "custom-polynomial" || s.name == "polynomial") {
    if (s.terms.empty()) throw ConfigError("g: polynomial needs a non-empty 'terms' list");
    std::vector<Monomial> terms;
    for (const auto& t : s.terms) {
      if (t.exponents.size() != s.k) {
        throw ConfigError("g: every polynomial term needs exactly k=" + std::to_string(s.k) + " exponents");
      }
      terms.push_back({t.coefficient, t.exponents});
    }
    return LocalFunction::from_polynomial("polynomial", Polynomial(s.k, std::move(terms)));
  }
  throw ConfigError("g: unknown local function '" + s.name +
                    "' (known: density, pair-product, indicator-vacuum, indicator-pair-vacuum, constant, custom-polynomial)");
}

inline TestFunction make_test_function(const TestFunctionSpec& s) {
  if (s.name == "constant") return TestFunction::constant(s.value);
  if (s.name == "power") return TestFunction::power(s.p);
  if (s.name == "cosine") return TestFunction::cosine(s.m);
  throw ConfigError("phi: unknown test function '" + s.name + "' (known: constant, power, cosine)");
}

/// Target density for profile-rate: a registry test function or h(g, rho(x)) + shift.
inline TestFunction make_target_density(const TestFunctionSpec& s, const LocalFunction& g, const BoundaryParams& bounds,
                                        const QuadratureSpec& quad) {
  if (s.name == "lln-profile") {
    return TestFunction("lln-profile", [g, bounds, quad, shift = s.shift](double x) {
      return h_of(g, bounds.density(x), quad) + shift;
    });
  }
  return make_test_function(s);
}

inline FreeEnergySpec make_free_energy_spec(const LdpSection& l) {
  const LocalFunction g = make_local_function(l.g);
  if (!g.is_bounded()) throw ConfigError("ldp.g: large deviations require a bounded local function");
  FreeEnergySpec spec(g);
  spec.lambda_min = l.lambda_min;
  spec.lambda_max = l.lambda_max;
  spec.truncation = l.truncation;
  spec.tail_tolerance = l.tail_tolerance;
  spec.eigen_tolerance = l.eigen_tolerance;
  spec.max_iterations = l.max_iterations;
  return spec;
}

}  // namespace ness
