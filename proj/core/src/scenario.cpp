#include "nlkpp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nlkpp {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Lyapunov: return "lyapunov";
    case ExperimentKind::Eigen: return "eigen";
    case ExperimentKind::Entire: return "entire";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// flat key/value store shared by the INI grammar and the JSON encoding

namespace {

struct FlatConfig {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> kv;
  std::set<std::string> used;
  std::string origin;

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = kv.find(key);
    std::string where = origin;
    if (it != kv.end() && it->second.line > 0) where += ":" + std::to_string(it->second.line);
    throw ScenarioParseError(where + ": " + msg);
  }

  bool has(const std::string& key) const { return kv.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    used.insert(key);
    return it->second.value;
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) throw ScenarioParseError(origin + ": missing required key '" + key + "'");
    return *v;
  }

  double as_double(const std::string& key, const std::string& text) const {
    try {
      size_t pos = 0;
      double v = std::stod(text, &pos);
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      if (pos != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      fail(key, "'" + key + "': expected a number, got '" + text + "'");
    }
  }

  double get_double(const std::string& key, double fallback) {
    auto v = get(key);
    return v ? as_double(key, *v) : fallback;
  }
  double require_double(const std::string& key) { return as_double(key, require(key)); }

  long get_long(const std::string& key, long fallback) {
    auto v = get(key);
    if (!v) return fallback;
    double d = as_double(key, *v);
    if (std::abs(d - std::llround(d)) > 1e-9) fail(key, "'" + key + "': expected an integer");
    return std::llround(d);
  }

  std::uint64_t require_u64(const std::string& key) {
    std::string text = require(key);
    try {
      size_t pos = 0;
      unsigned long long v = std::stoull(text, &pos);
      if (pos != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      fail(key, "'" + key + "': expected an unsigned integer, got '" + text + "'");
    }
  }

  std::vector<double> list_values(const std::string& key, const std::string& text) const {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) out.push_back(as_double(key, item));
    if (out.empty()) fail(key, "'" + key + "': expected a comma-separated list of numbers");
    return out;
  }

  std::vector<double> require_list(const std::string& key) {
    return list_values(key, require(key));
  }

  // keys under "prefix.N." for N = 1, 2, ...: returns the contiguous count
  int array_count(const std::string& prefix) const {
    int n = 0;
    while (true) {
      const std::string p = prefix + "." + std::to_string(n + 1) + ".";
      bool found = false;
      for (auto it = kv.lower_bound(p); it != kv.end() && it->first.compare(0, p.size(), p) == 0;
           ++it)
        found = true;
      if (!found) break;
      ++n;
    }
    return n;
  }

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = kv.lower_bound(prefix);
         it != kv.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it)
      out.push_back(it->first);
    return out;
  }

  void finish() const {
    for (const auto& [key, entry] : kv)
      if (!used.count(key)) {
        std::string where = origin;
        if (entry.line > 0) where += ":" + std::to_string(entry.line);
        throw ScenarioParseError(where + ": unknown key '" + key + "' (typo?)");
      }
  }
};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

FlatConfig parse_ini(const std::string& text, const std::string& origin) {
  FlatConfig cfg;
  cfg.origin = origin;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ScenarioParseError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ScenarioParseError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ScenarioParseError(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value' (no '=' found)");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ScenarioParseError(origin + ":" + std::to_string(lineno) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    auto [it, inserted] = cfg.kv.emplace(full, FlatConfig::Entry{value, lineno});
    if (!inserted)
      throw ScenarioParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + full +
                               "' (first at line " + std::to_string(it->second.line) + ")");
  }
  return cfg;
}

void flatten_json(const json& node, const std::string& prefix, FlatConfig& cfg) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it)
      flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), cfg);
  } else if (node.is_array()) {
    int i = 0;
    for (const auto& v : node) flatten_json(v, prefix + "." + std::to_string(++i), cfg);
  } else {
    std::string value;
    if (node.is_string()) value = node.get<std::string>();
    else value = node.dump();
    cfg.kv.emplace(prefix, FlatConfig::Entry{value, 0});
  }
}

FlatConfig parse_json_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioParseError(origin + ": JSON parse error: " + e.what());
  }
  if (!root.is_object()) throw ScenarioParseError(origin + ": top-level JSON must be an object");
  FlatConfig cfg;
  cfg.origin = origin;
  flatten_json(root, "", cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// scenario builder

SpatialProfile parse_profile(FlatConfig& cfg, const std::string& prefix, int dim) {
  SpatialProfile p;
  p.constant = cfg.get_double(prefix + ".constant", 0.0);
  const int n = cfg.array_count(prefix + ".mode");
  for (int m = 1; m <= n; ++m) {
    const std::string mp = prefix + ".mode." + std::to_string(m);
    SpatialMode mode;
    auto wv = cfg.require_list(mp + ".wavevector");
    if (static_cast<int>(wv.size()) != dim)
      cfg.fail(mp + ".wavevector", "wavevector needs one entry per dimension");
    mode.wavevector[0] = wv[0];
    if (dim == 2) mode.wavevector[1] = wv[1];
    mode.amplitude = cfg.require_double(mp + ".amplitude");
    mode.phase = cfg.get_double(mp + ".phase", 0.0);
    p.modes.push_back(mode);
  }
  return p;
}

APCoefficient parse_coefficient(FlatConfig& cfg, const std::string& prefix, int dim,
                                bool required, double fallback_constant) {
  APCoefficient a;
  if (!required && cfg.keys_with_prefix(prefix).empty()) {
    a.constant = fallback_constant;
    return a;
  }
  a.constant = cfg.get_double(prefix + ".constant", 0.0);
  const int n = cfg.array_count(prefix + ".mode");
  for (int m = 1; m <= n; ++m) {
    const std::string mp = prefix + ".mode." + std::to_string(m);
    TemporalMode mode;
    mode.frequency = cfg.get_double(mp + ".frequency", 0.0);
    if (mode.frequency < 0.0) cfg.fail(mp + ".frequency", "frequency must be >= 0");
    mode.phase = cfg.get_double(mp + ".phase", 0.0);
    mode.profile.constant = cfg.get_double(mp + ".amplitude", 0.0);
    const int ns = cfg.array_count(mp + ".spatial");
    for (int s = 1; s <= ns; ++s) {
      const std::string sp = mp + ".spatial." + std::to_string(s);
      SpatialMode sm;
      auto wv = cfg.require_list(sp + ".wavevector");
      if (static_cast<int>(wv.size()) != dim)
        cfg.fail(sp + ".wavevector", "wavevector needs one entry per dimension");
      sm.wavevector[0] = wv[0];
      if (dim == 2) sm.wavevector[1] = wv[1];
      sm.amplitude = cfg.require_double(sp + ".amplitude");
      sm.phase = cfg.get_double(sp + ".phase", 0.0);
      mode.profile.modes.push_back(sm);
    }
    a.modes.push_back(mode);
  }
  return a;
}

Scenario build_scenario(FlatConfig& cfg) {
  Scenario sc;
  sc.name = cfg.require("name");
  if (sc.name.empty() || sc.name.find_first_of("/\\ \t") != std::string::npos)
    cfg.fail("name", "scenario name must be a single path-safe token");

  const std::string kind = cfg.require("kind");
  if (kind == "simulate") sc.kind = ExperimentKind::Simulate;
  else if (kind == "lyapunov") sc.kind = ExperimentKind::Lyapunov;
  else if (kind == "eigen") sc.kind = ExperimentKind::Eigen;
  else if (kind == "entire") sc.kind = ExperimentKind::Entire;
  else cfg.fail("kind", "kind must be simulate | lyapunov | eigen | entire");

  sc.seed = cfg.require_u64("seed");
  if (auto m = cfg.get("method")) {
    if (*m == "auto") sc.method = ConvolutionMethod::Auto;
    else if (*m == "direct") sc.method = ConvolutionMethod::Direct;
    else if (*m == "fft") sc.method = ConvolutionMethod::Fft;
    else cfg.fail("method", "method must be auto | direct | fft");
  }
  sc.output_dir = cfg.get("output_dir").value_or("");

  // domain
  {
    const std::string dk = cfg.require("domain.kind");
    DomainKind dkind;
    if (dk == "torus") dkind = DomainKind::Torus;
    else if (dk == "box") dkind = DomainKind::BoundedBox;
    else cfg.fail("domain.kind", "domain.kind must be torus | box");
    const int dim = static_cast<int>(cfg.get_long("domain.dimension", 1));
    auto pts = cfg.require_list("domain.points");
    auto lower = cfg.require_list("domain.lower");
    auto upper = cfg.require_list("domain.upper");
    if (static_cast<int>(pts.size()) != dim || static_cast<int>(lower.size()) != dim ||
        static_cast<int>(upper.size()) != dim)
      cfg.fail("domain.points", "domain.points/lower/upper need one entry per dimension");
    std::array<double, 2> lo{{lower[0], dim == 2 ? lower[1] : 0.0}};
    std::array<double, 2> hi{{upper[0], dim == 2 ? upper[1] : 0.0}};
    std::array<int, 2> counts{{static_cast<int>(std::llround(pts[0])),
                               dim == 2 ? static_cast<int>(std::llround(pts[1])) : 1}};
    try {
      sc.domain = build_domain(dkind, dim, lo, hi, counts);
    } catch (const std::exception& e) {
      cfg.fail("domain.kind", std::string("invalid domain: ") + e.what());
    }
  }

  // kernel
  {
    const std::string fam = cfg.require("kernel.family");
    if (fam == "gaussian") {
      sc.kernel.family = KernelFamily::Gaussian;
      sc.kernel.param = cfg.require_double("kernel.sigma");
    } else if (fam == "bump") {
      sc.kernel.family = KernelFamily::Bump;
      sc.kernel.param = cfg.require_double("kernel.radius");
    } else {
      cfg.fail("kernel.family", "kernel.family must be gaussian | bump");
    }
    if (!(sc.kernel.param > 0.0)) cfg.fail("kernel.family", "kernel scale must be positive");
    sc.kernel.truncation_threshold = cfg.get_double("kernel.truncation_threshold", 1e-12);
    if (cfg.has("kernel.truncation_radius"))
      sc.kernel.truncation_radius = cfg.require_double("kernel.truncation_radius");
  }

  sc.a = parse_coefficient(cfg, "coefficient.a", sc.domain.dim, true, 0.0);
  sc.b = parse_coefficient(cfg, "coefficient.b", sc.domain.dim, false, 1.0);

  // initial state
  if (auto ik = cfg.get("initial.kind")) {
    if (*ik == "constant") {
      sc.initial.kind = InitialSpec::Kind::Constant;
      sc.initial.value = cfg.get_double("initial.value", 1.0);
    } else if (*ik == "random") {
      sc.initial.kind = InitialSpec::Kind::RandomUniform;
      sc.initial.lo = cfg.get_double("initial.lo", 0.5);
      sc.initial.hi = cfg.get_double("initial.hi", 1.5);
      if (!(sc.initial.lo > 0.0) || !(sc.initial.hi > sc.initial.lo))
        cfg.fail("initial.kind", "random initial needs 0 < lo < hi");
    } else if (*ik == "profile") {
      sc.initial.kind = InitialSpec::Kind::Profile;
      sc.initial.profile = parse_profile(cfg, "initial.profile", sc.domain.dim);
    } else {
      cfg.fail("initial.kind", "initial.kind must be constant | random | profile");
    }
  }

  // run parameters
  sc.run.dt = cfg.get_double("run.dt", sc.run.dt);
  sc.run.horizon = cfg.get_double("run.horizon", sc.run.horizon);
  if (cfg.has("run.window")) {
    auto w = cfg.require_list("run.window");
    if (w.size() != 2 || !(w[1] > w[0]))
      cfg.fail("run.window", "run.window must be 'lo, hi' with hi > lo");
    sc.run.window_lo = w[0];
    sc.run.window_hi = w[1];
  }
  sc.run.renorm_dt = cfg.get_double("run.renorm_dt", sc.run.renorm_dt);
  sc.run.record_every = static_cast<int>(cfg.get_long("run.record_every", sc.run.record_every));
  sc.run.pullback_tol = cfg.get_double("run.pullback_tol", sc.run.pullback_tol);
  sc.run.initials = static_cast<int>(cfg.get_long("run.initials", sc.run.initials));
  sc.run.ensemble = static_cast<int>(cfg.get_long("run.ensemble", sc.run.ensemble));

  // expectations: plain keys need a matching <key>_tol; _min/_max are one-sided
  for (const std::string& key : cfg.keys_with_prefix("expect.")) {
    const std::string short_key = key.substr(7);
    if (short_key.size() > 4 && short_key.compare(short_key.size() - 4, 4, "_tol") == 0) continue;
    Expect e;
    e.key = short_key;
    e.value = cfg.require_double(key);
    const bool one_sided =
        (short_key.size() > 4 && (short_key.compare(short_key.size() - 4, 4, "_min") == 0 ||
                                  short_key.compare(short_key.size() - 4, 4, "_max") == 0));
    if (!one_sided) {
      if (!cfg.has(key + "_tol"))
        cfg.fail(key, "expectation '" + short_key + "' needs a companion '" + short_key + "_tol'");
      e.tol = cfg.require_double(key + "_tol");
      if (e.tol < 0.0) cfg.fail(key + "_tol", "tolerance must be >= 0");
    }
    sc.expects.push_back(e);
  }

  cfg.finish();
  return sc;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  size_t first = text.find_first_not_of(" \t\r\n");
  FlatConfig cfg = (first != std::string::npos && text[first] == '{')
                       ? parse_json_config(text, origin)
                       : parse_ini(text, origin);
  return build_scenario(cfg);
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// builtin scenarios (the files under tools/scenarios mirror these texts)

namespace {

const std::vector<std::pair<std::string, std::string>>& builtin_registry() {
  static const std::vector<std::pair<std::string, std::string>> reg = {
      {"constant_logistic", R"INI(# Spatially constant logistic problem on the torus: the entire solution is
# the constant equilibrium (1 + a)/b = 1.5 and the growth rate is a + 1.
name = constant_logistic
kind = entire
seed = 20240601

[domain]
kind = torus
dimension = 1
points = 256
lower = 0
upper = 6.283185307179586

[kernel]
family = gaussian
sigma = 0.35

[coefficient.a]
constant = 0.5

[coefficient.b]
constant = 1.0

[run]
dt = 0.01
window = 0, 60
pullback_tol = 1e-6

[expect]
u_star_floor = 1.5
u_star_floor_tol = 2e-6
u_star_ceiling = 1.5
u_star_ceiling_tol = 2e-6
converged = 1
converged_tol = 0
lambda = 1.5
lambda_tol = 2e-3
)INI"},
      {"extinction", R"INI(# Strongly negative growth: the zero state attracts and the sup norm decays
# at the linear rate a + 1 = -0.2.
name = extinction
kind = simulate
seed = 20240602

[domain]
kind = torus
dimension = 1
points = 256
lower = 0
upper = 6.283185307179586

[kernel]
family = gaussian
sigma = 0.35

[coefficient.a]
constant = -1.2

[coefficient.b]
constant = 1.0

[initial]
kind = constant
value = 1.5

[run]
dt = 0.01
horizon = 100
record_every = 10

[expect]
decay_rate = -0.2
decay_rate_tol = 1e-2
final_sup = 0
final_sup_tol = 1e-6
)INI"},
      {"static_cosine", R"INI(# Static spatially varying growth a(x) = 1 + cos x on the torus; the
# principal eigenvalue of the dispersal-plus-growth operator is pinned against
# an independently computed dense-spectrum value.
name = static_cosine
kind = eigen
seed = 20240603

[domain]
kind = torus
dimension = 1
points = 256
lower = 0
upper = 6.283185307179586

[kernel]
family = gaussian
sigma = 0.35

[coefficient.a]
constant = 1.0
[coefficient.a.mode.1]
frequency = 0
amplitude = 0
[coefficient.a.mode.1.spatial.1]
wavevector = 1
amplitude = 1.0
phase = 0

[expect]
eigenvalue = 2.8396804602217007
eigenvalue_tol = 1e-6
residual = 0
residual_tol = 1e-8
)INI"},
      {"lyapunov_quasiperiodic", R"INI(# Time-periodic growth with a spatial ripple: the top Lyapunov exponent of
# the linear flow is estimated by renormalized propagation; only analytic
# bracketing bounds are pinned (0.3 = sup of the time mean, 1.95 = 1 + sup a).
name = lyapunov_quasiperiodic
kind = lyapunov
seed = 20240604

[domain]
kind = torus
dimension = 1
points = 256
lower = 0
upper = 6.283185307179586

[kernel]
family = gaussian
sigma = 0.35

[coefficient.a]
constant = 0.3
[coefficient.a.mode.1]
frequency = 1.0
phase = -1.5707963267948966
amplitude = 0.5
[coefficient.a.mode.1.spatial.1]
wavevector = 1
amplitude = 0.15
phase = 0

[run]
dt = 0.01
horizon = 500
renorm_dt = 1.0
initials = 3

[expect]
lyapunov_min = 0.3
lyapunov_max = 1.95
lyapunov_spread = 0
lyapunov_spread_tol = 2e-2
window_gap = 0
window_gap_tol = 2e-2
windows_converged = 1
windows_converged_tol = 0
)INI"},
      {"quasiperiodic_logistic", R"INI(# Genuinely quasiperiodic logistic forcing (frequencies 1 and sqrt 2): the
# pullback entire solution exists, stays strictly positive, and is bounded by
# u_cap = sup(1+a)/b.
name = quasiperiodic_logistic
kind = entire
seed = 20240605

[domain]
kind = torus
dimension = 1
points = 256
lower = 0
upper = 6.283185307179586

[kernel]
family = gaussian
sigma = 0.35

[coefficient.a]
constant = 0.3
[coefficient.a.mode.1]
frequency = 1.0
phase = -1.5707963267948966
amplitude = 0.2
[coefficient.a.mode.2]
frequency = 1.4142135623730951
phase = -1.5707963267948966
amplitude = 0.15
[coefficient.a.mode.2.spatial.1]
wavevector = 1
amplitude = 0.045
phase = 0

[coefficient.b]
constant = 1.0

[run]
dt = 0.01
window = 0, 60
pullback_tol = 1e-6

[expect]
converged = 1
converged_tol = 0
u_star_floor_min = 0.05
u_star_ceiling_max = 1.9
lambda_min = 0.3
)INI"},
      {"eigen_box", R"INI(# Dispersal on a bounded interval with Dirichlet exterior and no growth: the
# principal eigenvalue is pinned against an independent dense-spectrum value,
# and the analytic lower bound (1/|D|) iint kappa is reproduced.
name = eigen_box
kind = eigen
seed = 20240606

[domain]
kind = box
dimension = 1
points = 101
lower = 0
upper = 1

[kernel]
family = gaussian
sigma = 1.0

[coefficient.a]
constant = 0

[expect]
eigenvalue = 0.36916622014140312
eigenvalue_tol = 1e-6
residual = 0
residual_tol = 1e-8
pe_lower_best = 0.36874638037250724
pe_lower_best_tol = 1e-4
)INI"},
      {"nested_domain", R"INI(# Bounded-interval logistic run from a strictly positive ripple; the solution
# stays inside the invariant region [0, u_cap] (u_cap = 1 here).
name = nested_domain
kind = simulate
seed = 20240607

[domain]
kind = box
dimension = 1
points = 101
lower = 0
upper = 1

[kernel]
family = gaussian
sigma = 1.0

[coefficient.a]
constant = 0

[coefficient.b]
constant = 1.0

[initial]
kind = profile
[initial.profile]
constant = 0.5
[initial.profile.mode.1]
wavevector = 6.283185307179586
amplitude = 0.4
phase = -3.141592653589793

[run]
dt = 0.01
horizon = 5
record_every = 10

[expect]
max_sup_max = 1.0
final_sup_max = 1.0
final_min_min = 0.0
)INI"},
      {"indicator_mass", R"INI(# Wide bounded interval with a random positive start above the carrying
# capacity: the flow contracts below the invariant ceiling.
name = indicator_mass
kind = simulate
seed = 20240608

[domain]
kind = box
dimension = 1
points = 321
lower = -4
upper = 4

[kernel]
family = gaussian
sigma = 1.0

[coefficient.a]
constant = 0

[coefficient.b]
constant = 1.0

[initial]
kind = random
lo = 0.5
hi = 1.5

[run]
dt = 0.01
horizon = 30
record_every = 20

[expect]
max_sup_max = 1.55
final_sup_max = 1.01
)INI"},
      {"torus2d", R"INI(# Two-dimensional smoke test: constant coefficients on the flat 2-torus keep
# the field spatially constant while it relaxes to (1 + a)/b = 1.25.
name = torus2d
kind = simulate
seed = 20240609

[domain]
kind = torus
dimension = 2
points = 32, 32
lower = 0, 0
upper = 6.283185307179586, 6.283185307179586

[kernel]
family = gaussian
sigma = 0.6

[coefficient.a]
constant = 0.25

[coefficient.b]
constant = 1.0

[initial]
kind = constant
value = 1.0

[run]
dt = 0.01
horizon = 5
record_every = 50

[expect]
final_sup = 1.25
final_sup_tol = 1e-2
final_constant_dev = 0
final_constant_dev_tol = 1e-9
max_sup_max = 1.26
)INI"},
  };
  return reg;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : builtin_registry()) names.push_back(name);
  return names;
}

const std::string& builtin_scenario_text(const std::string& name) {
  for (const auto& [n, text] : builtin_registry())
    if (n == name) return text;
  throw ScenarioParseError("unknown builtin scenario '" + name + "'");
}

Scenario builtin_scenario(const std::string& name) {
  return parse_scenario_text(builtin_scenario_text(name), "builtin:" + name);
}

// ---------------------------------------------------------------------------
// experiment execution and artifacts

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Field build_initial(const Scenario& sc, std::uint64_t seed) {
  Field u;
  u.values.resize(sc.domain.total());
  switch (sc.initial.kind) {
    case InitialSpec::Kind::Constant:
      u.values.assign(sc.domain.total(), sc.initial.value);
      break;
    case InitialSpec::Kind::RandomUniform: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> dist(sc.initial.lo, sc.initial.hi);
      for (auto& v : u.values) v = dist(rng);
      break;
    }
    case InitialSpec::Kind::Profile: {
      u.values = sc.initial.profile.gridded(sc.domain);
      break;
    }
  }
  return u;
}

void write_field_csv(const fs::path& path, const Domain& domain,
                     const std::vector<double>& values) {
  std::ofstream out(path);
  out << (domain.dim == 2 ? "x,y,u\n" : "x,u\n");
  for (int i = 0; i < domain.total(); ++i) {
    auto p = domain.point(i);
    out << fmt17(p[0]);
    if (domain.dim == 2) out << ',' << fmt17(p[1]);
    out << ',' << fmt17(values[i]) << '\n';
  }
}

void write_trajectory_csv(const fs::path& path, const Domain& domain, const Trajectory& traj) {
  std::ofstream out(path);
  out << (domain.dim == 2 ? "t,x,y,u\n" : "t,x,u\n");
  for (int k = 0; k < traj.size(); ++k)
    for (int i = 0; i < domain.total(); ++i) {
      auto p = domain.point(i);
      out << fmt17(traj.times[k]) << ',' << fmt17(p[0]);
      if (domain.dim == 2) out << ',' << fmt17(p[1]);
      out << ',' << fmt17(traj.fields[k][i]) << '\n';
    }
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
  std::string root = opts.out_dir;
  if (root.empty()) root = sc.output_dir;
  if (root.empty()) {
    const char* env = std::getenv("NLKPP_OUT_ROOT");
    if (env && *env) root = env;
  }
  if (root.empty()) root = "out";
  const fs::path dir = fs::path(root) / sc.name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ScenarioParseError("cannot create output directory '" + dir.string() +
                             "': " + ec.message());
  const std::uint64_t seed = opts.seed_override.value_or(sc.seed);

  Kernel kernel;
  try {
    kernel = sample_kernel(sc.kernel, sc.domain);
  } catch (const std::exception& e) {
    throw ScenarioParseError(sc.name + ": kernel rejected for this domain: " + e.what());
  }

  ordered_json summary;
  summary["schema"] = "nlkpp.summary.v1";
  summary["scenario"] = sc.name;
  summary["kind"] = to_string(sc.kind);
  summary["seed"] = seed;
  summary["domain"] = {{"kind", sc.domain.is_torus() ? "torus" : "box"},
                       {"dimension", sc.domain.dim},
                       {"points", sc.domain.dim == 2
                                      ? json::array({sc.domain.counts[0], sc.domain.counts[1]})
                                      : json::array({sc.domain.counts[0]})}};
  summary["kernel"] = {{"family", sc.kernel.family == KernelFamily::Gaussian ? "gaussian" : "bump"},
                       {"scale", sc.kernel.param},
                       {"truncation_radius", kernel.truncation_radius},
                       {"discrete_mass", kernel.discrete_mass},
                       {"dropped_tail_mass", kernel.dropped_tail_mass}};

  std::map<std::string, double> metrics;

  switch (sc.kind) {
    case ExperimentKind::Simulate: {
      Problem p{sc.domain, kernel, make_reaction(sc.a, sc.b, sc.domain)};
      Field u0 = build_initial(sc, seed);
      if (!u0.nonnegative())
        throw ScenarioParseError(sc.name + ": initial state must be nonnegative");
      EvolutionOptions eo;
      eo.dt = sc.run.dt;
      eo.method = sc.method;
      eo.record_every = sc.run.record_every;
      Trajectory traj = solve(p, u0, 0.0, sc.run.horizon, eo);

      write_trajectory_csv(dir / "trajectory.csv", sc.domain, traj);
      write_field_csv(dir / "final_state.csv", sc.domain, traj.back());

      const Field fin = traj.final_field();
      metrics["final_sup"] = fin.sup_norm();
      metrics["final_min"] = fin.min_value();
      metrics["final_constant_dev"] = fin.max_value() - fin.min_value();
      metrics["max_sup"] = traj.max_sup;
      double mean = 0.0, wsum = 0.0;
      for (int i = 0; i < sc.domain.total(); ++i) {
        mean += sc.domain.quad_weight(i) * fin.values[i];
        wsum += sc.domain.quad_weight(i);
      }
      metrics["final_mean"] = mean / wsum;
      // decay rate: least-squares slope of ln sup over the recorded second half
      {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (int k = traj.size() / 2; k < traj.size(); ++k) {
          double s = 0.0;
          for (double v : traj.fields[k]) s = std::max(s, std::abs(v));
          if (!(s > 1e-300)) break;
          const double x = traj.times[k], y = std::log(s);
          sx += x; sy += y; sxx += x * x; sxy += x * y;
          ++cnt;
        }
        if (cnt >= 3) metrics["decay_rate"] = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
      }
      summary["artifacts"] = {"trajectory.csv", "final_state.csv"};
      break;
    }
    case ExperimentKind::Lyapunov: {
      LyapunovOptions lo;
      lo.horizon = sc.run.horizon;
      lo.renorm_dt = sc.run.renorm_dt;
      lo.dt = sc.run.dt;
      lo.initials = sc.run.initials;
      lo.seed = seed;
      lo.method = sc.method;
      const LyapunovReport rep = lyapunov_exponent(sc.a, kernel, sc.domain, lo);

      {
        std::ofstream out(dir / "windows.csv");
        out << "t_begin,t_end,estimate\n";
        for (const auto& w : rep.windows)
          out << fmt17(w.t_begin) << ',' << fmt17(w.t_end) << ',' << fmt17(w.value) << '\n';
      }
      {
        std::ofstream out(dir / "initials.csv");
        out << "initial,estimate\n";
        for (size_t i = 0; i < rep.per_initial.size(); ++i)
          out << i << ',' << fmt17(rep.per_initial[i]) << '\n';
      }
      metrics["lyapunov"] = rep.lambda;
      metrics["lyapunov_spread"] = rep.initial_spread;
      metrics["window_gap"] = rep.window_gap;
      metrics["windows_converged"] = rep.windows_converged ? 1.0 : 0.0;
      summary["artifacts"] = {"windows.csv", "initials.csv"};
      break;
    }
    case ExperimentKind::Eigen: {
      if (!sc.a.is_static())
        throw ScenarioParseError(sc.name + ": the eigen experiment needs a static coefficient");
      const SpatialProfile prof = time_mean(sc.a);
      const EigenReport rep = principal_eigenvalue_static(prof, kernel, sc.domain);
      write_field_csv(dir / "eigenvector.csv", sc.domain, rep.eigenvector);
      metrics["eigenvalue"] = rep.lambda;
      metrics["residual"] = rep.residual;
      metrics["iterations"] = rep.iterations;
      metrics["converged"] = rep.converged ? 1.0 : 0.0;
      double best = -std::numeric_limits<double>::infinity();
      ordered_json bounds = ordered_json::array();
      for (const auto& b : pe_lower_bounds(sc.a, kernel, sc.domain)) {
        best = std::max(best, b.value);
        bounds.push_back({{"provenance", b.provenance}, {"value", b.value}});
      }
      metrics["pe_lower_best"] = best;
      summary["lower_bounds"] = bounds;
      summary["artifacts"] = {"eigenvector.csv"};
      break;
    }
    case ExperimentKind::Entire: {
      Problem p{sc.domain, kernel, make_reaction(sc.a, sc.b, sc.domain)};
      PullbackOptions po;
      po.tol = sc.run.pullback_tol;
      po.dt = sc.run.dt;
      po.method = sc.method;
      const EntireSolution e =
          pullback_entire_solution(p, sc.run.window_lo, sc.run.window_hi, po);

      {
        std::ofstream out(dir / "u_star.csv");
        out << (sc.domain.dim == 2 ? "t,x,y,u\n" : "t,x,u\n");
        const double cadence = e.window.times[1] - e.window.times[0];
        const int every = std::max(1, static_cast<int>(std::lround(1.0 / cadence)));
        for (int k = 0; k < e.window.size(); k += every)
          for (int i = 0; i < sc.domain.total(); ++i) {
            auto pt = sc.domain.point(i);
            out << fmt17(e.window.times[k]) << ',' << fmt17(pt[0]);
            if (sc.domain.dim == 2) out << ',' << fmt17(pt[1]);
            out << ',' << fmt17(e.window.fields[k][i]) << '\n';
          }
      }
      metrics["u_star_floor"] = e.floor;
      metrics["u_star_ceiling"] = e.ceiling;
      metrics["lambda"] = e.lambda_estimate;
      metrics["last_gap"] = e.last_gap;
      metrics["converged"] = e.converged ? 1.0 : 0.0;
      metrics["monotone_in_k"] = e.monotone_in_k ? 1.0 : 0.0;
      metrics["k_final"] = e.k_used.empty() ? 0.0 : e.k_used.back();
      summary["spectral_warn"] = e.spectral_warn;
      summary["artifacts"] = {"u_star.csv"};
      break;
    }
  }

  ordered_json jm = ordered_json::object();
  for (const auto& [k, v] : metrics) jm[k] = v;
  summary["metrics"] = jm;

  // expectation checks (still recorded in the summary when they fail)
  RunResult result;
  ordered_json checks = ordered_json::array();
  for (const auto& e : sc.expects) {
    std::string base = e.key;
    std::string op = "eq";
    if (base.size() > 4 && base.compare(base.size() - 4, 4, "_min") == 0) {
      op = "min";
      base = base.substr(0, base.size() - 4);
    } else if (base.size() > 4 && base.compare(base.size() - 4, 4, "_max") == 0) {
      op = "max";
      base = base.substr(0, base.size() - 4);
    }
    auto it = metrics.find(base);
    if (it == metrics.end())
      throw ScenarioParseError(sc.name + ": expectation references unknown metric '" + base +
                               "' for the " + to_string(sc.kind) + " experiment");
    const double got = it->second;
    bool pass = false;
    if (op == "eq") pass = std::abs(got - e.value) <= e.tol;
    else if (op == "min") pass = got >= e.value;
    else pass = got <= e.value;
    checks.push_back({{"check", e.key},
                      {"metric", base},
                      {"op", op},
                      {"want", e.value},
                      {"tol", e.tol},
                      {"got", got},
                      {"pass", pass}});
    if (!pass && result.exit_code == 0) {
      result.exit_code = 1;
      result.failed_check = e.key;
    }
  }
  summary["checks"] = checks;
  summary["pass"] = result.exit_code == 0;

  const fs::path spath = dir / "summary.json";
  std::ofstream out(spath);
  out << summary.dump(2) << '\n';
  result.summary_path = spath.string();
  return result;
}

}  // namespace nlkpp
