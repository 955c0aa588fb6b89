#include "covform/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace covform {
namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

[[noreturn]] void parse_fail(const std::string& key, const std::string& what) {
  throw ConfigError(2, "config key '" + key + "': " + what);
}

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw ConfigError(3, "config key '" + key + "': " + what);
}

// Strict reader over one JSON object: unknown keys and wrong types are parse errors.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) parse_fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) parse_fail(key(it.key()), "unknown key");
  }

  bool has(const char* k) const { return j_.contains(k); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const json& raw(const char* k) const { return j_.at(k); }

  int integer(const char* k, int def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) parse_fail(key(k), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < -1000000000 || x > 1000000000) invalid(key(k), "out of range");
    return static_cast<int>(x);
  }
  double number(const char* k, double def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_number()) parse_fail(key(k), "expected a number");
    return v.get<double>();
  }
  std::uint64_t u64(const char* k, std::uint64_t def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_number_unsigned()) parse_fail(key(k), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::optional<std::uint64_t> opt_u64(const char* k) const {
    if (!has(k)) return std::nullopt;
    return u64(k, 0);
  }
  std::string string(const char* k, const std::string& def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_string()) parse_fail(key(k), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const char* k, bool def) const {
    if (!has(k)) return def;
    const json& v = j_.at(k);
    if (!v.is_boolean()) parse_fail(key(k), "expected true or false");
    return v.get<bool>();
  }
  Obj child(const char* k) const { return Obj(j_.at(k), key(k)); }

 private:
  const json& j_;
  std::string path_;
};

cplx parse_value(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  parse_fail(key, "expected a number or [re, im]");
}

std::vector<std::vector<int>> parse_modes(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) parse_fail(key, "expected a non-empty array");
  // a single wavevector may be given without the outer brackets
  const bool single = v[0].is_number();
  std::vector<std::vector<int>> out;
  auto one = [&](const json& k, const std::string& kk) {
    if (!k.is_array()) parse_fail(kk, "expected an array of integers");
    std::vector<int> w;
    for (const auto& x : k) {
      if (!x.is_number_integer()) parse_fail(kk, "expected an array of integers");
      w.push_back(x.get<int>());
    }
    out.push_back(std::move(w));
  };
  if (single) {
    one(v, key);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) one(v[i], key + "[" + std::to_string(i) + "]");
  }
  return out;
}

template <class T>
bool one_of(const T& v, std::initializer_list<T> opts) {
  return std::find(opts.begin(), opts.end(), v) != opts.end();
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"identities", "momenta", "field-equations", "energy", "gravity"};
  return names;
}

const std::vector<std::string>& study_names() {
  static const std::vector<std::string> names{"replacement", "curvature", "klein-gordon", "dirac",
                                              "conservation", "gauge-current", "einstein", "gamma"};
  return names;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(2, std::string("config is not valid JSON: ") + e.what());
  }
  Scenario s;
  Obj root(j, "");
  root.allow({"name", "seed", "chart", "sector", "metric", "connection", "field", "suites", "tolerances",
              "convergence", "samples", "momenta_samples", "output"});
  s.name = root.string("name", s.name);
  s.seed = root.u64("seed", s.seed);
  if (root.has("chart")) {
    Obj c = root.child("chart");
    c.allow({"m", "n", "period", "h"});
    s.m = c.integer("m", s.m);
    s.n = c.integer("n", s.n);
    if (c.has("period") && c.has("h")) invalid(c.key("h"), "give either period or h");
    s.period = c.number("period", s.period);
    if (c.has("h")) s.period = c.number("h", 0.0) * s.n;
  }
  if (root.has("sector")) {
    Obj c = root.child("sector");
    c.allow({"name", "n", "mass", "tangent_y"});
    const std::string name = c.string("name", "gauge");
    if (!one_of<std::string>(name, {"gauge", "boson", "dirac", "gravity"}))
      invalid(c.key("name"), "unknown sector '" + name + "'");
    s.sector.sector = sector_from_name(name);
    s.sector.n = c.integer("n", s.sector.n);
    s.sector.mass = c.number("mass", s.sector.mass);
    s.sector.tangent_y = c.boolean("tangent_y", false);
  }
  if (root.has("metric")) {
    Obj c = root.child("metric");
    c.allow({"kind", "profile", "amplitude", "seed"});
    s.metric.kind = c.string("kind", s.metric.kind);
    s.metric.profile = c.string("profile", s.metric.profile);
    s.metric.amplitude = c.number("amplitude", s.metric.amplitude);
    s.metric.seed = c.opt_u64("seed");
  }
  if (root.has("connection")) {
    Obj c = root.child("connection");
    c.allow({"kind", "basis", "seed", "max_wavenumber", "amplitude", "spacetime"});
    s.connection.kind = c.string("kind", s.connection.kind);
    s.connection.basis = c.string("basis", s.connection.basis);
    s.connection.seed = c.opt_u64("seed");
    s.connection.max_wavenumber = c.integer("max_wavenumber", s.connection.max_wavenumber);
    s.connection.amplitude = c.number("amplitude", s.connection.amplitude);
    s.connection.spacetime = c.string("spacetime", s.connection.spacetime);
  }
  if (root.has("field")) {
    Obj c = root.child("field");
    c.allow({"kind", "value", "modes", "k", "amplitude", "seed", "max_wavenumber"});
    s.field.kind = c.string("kind", s.field.kind);
    if (c.has("value")) s.field.value = parse_value(c.raw("value"), c.key("value"));
    if (c.has("modes") && c.has("k")) invalid(c.key("k"), "give either modes or k");
    if (c.has("modes")) s.field.modes = parse_modes(c.raw("modes"), c.key("modes"));
    if (c.has("k")) s.field.modes = parse_modes(c.raw("k"), c.key("k"));
    s.field.amplitude = c.number("amplitude", s.field.amplitude);
    s.field.seed = c.opt_u64("seed");
    s.field.max_wavenumber = c.integer("max_wavenumber", s.field.max_wavenumber);
  }
  if (root.has("suites")) {
    const json& v = root.raw("suites");
    s.suites.clear();
    if (v.is_string()) {
      s.suites.push_back(v.get<std::string>());
    } else if (v.is_array()) {
      for (const auto& x : v) {
        if (!x.is_string()) parse_fail("suites", "expected an array of strings");
        s.suites.push_back(x.get<std::string>());
      }
    } else {
      parse_fail("suites", "expected a string or an array of strings");
    }
  }
  if (root.has("tolerances")) {
    Obj c = root.child("tolerances");
    c.allow({"identity", "exact", "momenta", "quadratic", "oracle", "order_min", "order_max"});
    Tolerances& t = s.tol;
    t.identity = c.number("identity", t.identity);
    t.exact = c.number("exact", t.exact);
    t.momenta = c.number("momenta", t.momenta);
    t.quadratic = c.number("quadratic", t.quadratic);
    t.oracle = c.number("oracle", t.oracle);
    t.order_min = c.number("order_min", t.order_min);
    t.order_max = c.number("order_max", t.order_max);
  }
  if (root.has("convergence")) {
    Obj c = root.child("convergence");
    c.allow({"levels", "study"});
    s.levels = c.integer("levels", s.levels);
    s.study = c.string("study", s.study);
  }
  s.samples = root.integer("samples", s.samples);
  s.momenta_samples = root.integer("momenta_samples", s.momenta_samples);
  if (root.has("output")) {
    Obj c = root.child("output");
    c.allow({"report", "csv"});
    s.report_path = c.string("report", "");
    s.csv_path = c.string("csv", "");
  }
  s.sector.m = s.m;
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(2, "cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate_scenario(Scenario& s) {
  if (s.m < 2 || s.m > kMaxDim) invalid("chart.m", "must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (s.n < 4) invalid("chart.n", "must be at least 4");
  if (!(s.period > 0.0) || !std::isfinite(s.period)) invalid("chart.period", "must be positive");
  s.sector.m = s.m;
  SectorSpec& sp = s.sector;
  if (sp.sector != Sector::gravity && sp.n < 1) invalid("sector.n", "must be at least 1");
  if (!(sp.mass >= 0.0)) invalid("sector.mass", "must be non-negative");
  if (sp.tangent_y && sp.sector != Sector::boson) invalid("sector.tangent_y", "only the boson sector has a tangent factor");
  if (sp.sector == Sector::dirac && s.m != 4) invalid("chart.m", "the Dirac sector needs m = 4");
  if (sp.sector == Sector::gravity) sp.n = s.m;

  if (!one_of<std::string>(s.metric.kind, {"minkowski", "diagonal-analytic", "sampled"}))
    invalid("metric.kind", "unknown metric '" + s.metric.kind + "'");
  if (s.metric.kind == "diagonal-analytic" && s.metric.profile != "frw")
    invalid("metric.profile", "unknown profile '" + s.metric.profile + "'");
  if (s.metric.kind != "minkowski" && !(std::abs(s.metric.amplitude) < 0.5))
    invalid("metric.amplitude", "must lie in (-0.5, 0.5) to keep the metric Lorentzian");
  if (sp.sector == Sector::dirac && s.metric.kind != "minkowski")
    invalid("metric.kind", "the Dirac sector is only defined on the flat metric");
  if (!s.metric.seed) s.metric.seed = derive_seed(s.seed, 1);

  ConnectionSpec& cs = s.connection;
  if (!one_of<std::string>(cs.kind, {"zero", "abelian-profile", "random-subalgebra", "levi-civita"}))
    invalid("connection.kind", "unknown connection '" + cs.kind + "'");
  if (!one_of<std::string>(cs.basis, {"u1", "su2", "real1"}))
    invalid("connection.basis", "unknown subalgebra '" + cs.basis + "'");
  if (!one_of<std::string>(cs.spacetime, {"zero", "torsion-free", "torsionful"}))
    invalid("connection.spacetime", "unknown spacetime connection '" + cs.spacetime + "'");
  if (cs.max_wavenumber < 1) invalid("connection.max_wavenumber", "must be at least 1");
  if (sp.sector == Sector::gravity && cs.kind != "levi-civita")
    invalid("connection.kind", "the gravity sector takes the levi-civita connection");
  if (sp.sector != Sector::gravity && cs.kind == "levi-civita")
    invalid("connection.kind", "levi-civita is only meaningful for the gravity sector");
  if ((cs.kind == "random-subalgebra" || cs.kind == "abelian-profile") &&
      Subalgebra::by_name(cs.basis).n != sp.n)
    invalid("connection.basis", "'" + cs.basis + "' acts on dimension " + std::to_string(Subalgebra::by_name(cs.basis).n) +
                                    ", sector.n is " + std::to_string(sp.n));
  if (!cs.seed) cs.seed = derive_seed(s.seed, 2);

  FieldSpec& fs = s.field;
  if (!one_of<std::string>(fs.kind, {"constant", "plane-wave", "random-trig"}))
    invalid("field.kind", "unknown field '" + fs.kind + "'");
  if (fs.kind == "plane-wave") {
    if (fs.modes.empty()) invalid("field.modes", "a plane wave needs at least one wavevector");
    for (const auto& k : fs.modes)
      if (static_cast<int>(k.size()) != s.m) invalid("field.modes", "every wavevector needs m entries");
  }
  if (fs.max_wavenumber < 1) invalid("field.max_wavenumber", "must be at least 1");
  if (!fs.seed) fs.seed = derive_seed(s.seed, 3);

  for (const auto& name : s.suites)
    if (name != "all" && std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
      invalid("suites", "unknown suite '" + name + "'");
  if (s.suites.empty()) invalid("suites", "needs at least one suite");

  const Tolerances& t = s.tol;
  for (double v : {t.identity, t.exact, t.momenta, t.quadratic, t.oracle})
    if (!(v > 0.0)) invalid("tolerances", "every tolerance must be positive");
  if (!(t.order_min < t.order_max)) invalid("tolerances.order_min", "must be below order_max");
  if (s.levels < 2) invalid("convergence.levels", "needs at least 2 levels");
  if (s.levels > 4) invalid("convergence.levels", "at most 4 levels");
  if (std::find(study_names().begin(), study_names().end(), s.study) == study_names().end())
    invalid("convergence.study", "unknown study '" + s.study + "'");
  if (s.samples < 1) invalid("samples", "must be at least 1");
  if (s.momenta_samples < 1) invalid("momenta_samples", "must be at least 1");
}

void validate_study(const Scenario& s, int levels) {
  if (levels < 2) invalid("convergence.levels", "needs at least 2 levels");
  const int div = 1 << (levels - 1);
  if (s.n % div != 0) invalid("chart.n", "must be divisible by 2^(levels-1) = " + std::to_string(div));
  if (s.n / div < 4) invalid("chart.n", "the coarsest level would have fewer than 4 points per axis");
}

std::string scenario_json(const Scenario& s) {
  ordered j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["chart"] = {{"m", s.m}, {"n", s.n}, {"period", s.period}, {"h", s.h()}};
  ordered sec{{"name", sector_name(s.sector.sector)}, {"n", s.sector.n}, {"mass", s.sector.mass}};
  if (s.sector.sector == Sector::boson) sec["tangent_y"] = s.sector.tangent_y;
  j["sector"] = sec;
  ordered met{{"kind", s.metric.kind}};
  if (s.metric.kind == "diagonal-analytic") met["profile"] = s.metric.profile;
  if (s.metric.kind != "minkowski") met["amplitude"] = s.metric.amplitude;
  if (s.metric.kind == "sampled" && s.metric.seed) met["seed"] = *s.metric.seed;
  j["metric"] = met;
  ordered con{{"kind", s.connection.kind}};
  if (s.connection.kind == "random-subalgebra" || s.connection.kind == "abelian-profile") {
    con["basis"] = s.connection.basis;
    con["amplitude"] = s.connection.amplitude;
  }
  if (s.connection.kind == "random-subalgebra") {
    if (s.connection.seed) con["seed"] = *s.connection.seed;
    con["max_wavenumber"] = s.connection.max_wavenumber;
  }
  con["spacetime"] = s.connection.spacetime;
  j["connection"] = con;
  ordered fld{{"kind", s.field.kind}};
  if (s.field.kind == "constant") fld["value"] = {s.field.value.real(), s.field.value.imag()};
  if (s.field.kind == "plane-wave") {
    fld["modes"] = s.field.modes;
    fld["amplitude"] = s.field.amplitude;
  }
  if (s.field.kind == "random-trig") {
    if (s.field.seed) fld["seed"] = *s.field.seed;
    fld["max_wavenumber"] = s.field.max_wavenumber;
  }
  j["field"] = fld;
  j["suites"] = s.suites;
  j["tolerances"] = {{"identity", s.tol.identity}, {"exact", s.tol.exact},       {"momenta", s.tol.momenta},
                     {"quadratic", s.tol.quadratic}, {"oracle", s.tol.oracle}, {"order_min", s.tol.order_min},
                     {"order_max", s.tol.order_max}};
  j["convergence"] = {{"levels", s.levels}, {"study", s.study}};
  j["samples"] = s.samples;
  j["momenta_samples"] = s.momenta_samples;
  ordered out = ordered::object();
  if (!s.report_path.empty()) out["report"] = s.report_path;
  if (!s.csv_path.empty()) out["csv"] = s.csv_path;
  j["output"] = out;
  return j.dump(2) + "\n";
}

Chart scenario_chart(const Scenario& s, int points_per_axis) {
  return Chart::with_period(s.m, points_per_axis, s.period);
}

Metric build_metric(const Scenario& s, const Chart& chart) {
  if (s.metric.kind == "diagonal-analytic") return Metric::frw(chart, s.metric.amplitude);
  if (s.metric.kind == "sampled") return Metric::sampled(chart, s.metric.seed.value_or(derive_seed(s.seed, 1)), s.metric.amplitude);
  return Metric::minkowski(chart);
}

SampledField build_field(const Scenario& s, const Chart& chart, const FiberSignature& sig, std::uint64_t salt,
                         bool with_gradient) {
  const int m = chart.dim();
  SampledField out;
  const FieldSpec& f = s.field;
  if (f.kind == "random-trig") {
    const TrigSeries ts(m, sig, ScalarKind::complex, derive_seed(f.seed.value_or(s.seed), salt), f.max_wavenumber);
    out.value = ts.sample(chart);
    if (with_gradient) out.grad = ts.sample_gradient(chart);
    return out;
  }
  out.value = GridField(chart, sig, ScalarKind::complex);
  if (with_gradient) out.grad.assign(sz(m), out.value);
  if (f.kind == "constant") {
    std::fill(out.value.values().begin(), out.value.values().end(), f.value);
    return out;
  }
  const double w = 2.0 * std::numbers::pi / chart.period();
  const std::size_t per = out.value.per_point();
  for (std::size_t p = 0; p < chart.points(); ++p) {
    cplx v = 0.0;
    std::vector<cplx> dv(sz(m), 0.0);
    for (const auto& k : f.modes) {
      double phase = 0.0;
      for (int a = 0; a < m; ++a) phase += k[sz(a)] * chart.coordinate(p, a);
      const cplx e = f.amplitude * std::exp(cplx(0.0, -w * phase));
      v += e;
      for (int a = 0; a < m; ++a) dv[sz(a)] += cplx(0.0, -w * k[sz(a)]) * e;
    }
    for (std::size_t i = 0; i < per; ++i) {
      out.value.point(p)[i] = v;
      if (with_gradient)
        for (int a = 0; a < m; ++a) out.grad[sz(a)].point(p)[i] = dv[sz(a)];
    }
  }
  return out;
}

std::optional<Subalgebra> scenario_algebra(const Scenario& s) {
  const Subalgebra alg = Subalgebra::by_name(s.connection.basis);
  if (alg.n != s.sector.n) return std::nullopt;
  return alg;
}

ScenarioConnection build_connection(const Scenario& s, const Chart& chart, bool with_gradient) {
  const int m = chart.dim(), n = s.sector.n, nn = n * n;
  const ConnectionSpec& cs = s.connection;
  const std::optional<Subalgebra> alg = scenario_algebra(s);
  bool complex_basis = false;
  if (alg)
    for (const auto& B : alg->basis)
      for (const auto& v : B) complex_basis = complex_basis || v.imag() != 0.0;
  const ScalarKind kind = complex_basis ? ScalarKind::complex : ScalarKind::real;

  ScenarioConnection out;
  out.kappa = LinearConnection::zero(chart, n, kind);
  out.kappa.algebra = alg;
  if (with_gradient) out.dkappa.assign(sz(m), out.kappa.k);
  if (cs.kind == "zero" || cs.kind == "levi-civita") return out;

  if (cs.kind == "abelian-profile") {
    // kappa_0 = A sin(2 pi x^1 / L) B_0
    const Matrix& B = alg->basis.at(0);
    const double w = 2.0 * std::numbers::pi / chart.period();
    for (std::size_t p = 0; p < chart.points(); ++p) {
      const double x = chart.coordinate(p, 1 % m);
      for (int f = 0; f < nn; ++f) {
        out.kappa.k.at(p, 0, f) = cs.amplitude * std::sin(w * x) * B[sz(f)];
        if (with_gradient) out.dkappa[sz(1 % m)].at(p, 0, f) += cs.amplitude * w * std::cos(w * x) * B[sz(f)];
      }
    }
    return out;
  }

  const int dim = static_cast<int>(alg->basis.size());
  const TrigSeries coeff(m, FiberSignature::internal(dim, 1), ScalarKind::real, cs.seed.value_or(derive_seed(s.seed, 2)),
                         cs.max_wavenumber, 3, cs.amplitude);
  auto expand = [&](const GridField& c, GridField& dst) {
    for (std::size_t p = 0; p < chart.points(); ++p)
      for (int a = 0; a < m; ++a)
        for (int f = 0; f < nn; ++f) {
          cplx v = 0.0;
          for (int I = 0; I < dim; ++I) v += c.at(p, a, I).real() * alg->basis[sz(I)][sz(f)];
          dst.at(p, a, f) = v;
        }
  };
  expand(coeff.sample(chart), out.kappa.k);
  if (with_gradient)
    for (int a = 0; a < m; ++a) expand(coeff.sample_derivative(chart, a), out.dkappa[sz(a)]);
  return out;
}

SpacetimeConnection build_spacetime(const Scenario& s, const Chart& chart, const std::string& kind) {
  if (kind == "zero") return SpacetimeConnection::zero(chart);
  const int m = chart.dim();
  const FiberSignature sig{{tangent(), cotangent(), cotangent()}, 0, Rep::standard};
  GridField G = trig_series(chart, sig, derive_seed(s.connection.seed.value_or(s.seed), 11), 1, ScalarKind::real, 0.3)
                    .sample(chart);
  if (kind == "torsion-free") {
    GridField sym = G;
    for (std::size_t p = 0; p < chart.points(); ++p)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int c = 0; c < m; ++c)
            sym.at(p, 0, (a * m + b) * m + c) = 0.5 * (G.at(p, 0, (a * m + b) * m + c) + G.at(p, 0, (a * m + c) * m + b));
    G = std::move(sym);
  }
  return SpacetimeConnection::from_gamma(std::move(G));
}

MatterFields plane_wave(const SectorSpec& spec, const Chart& chart, const std::vector<std::vector<int>>& modes,
                        double amplitude) {
  const int m = chart.dim();
  const FiberSignature ms = matter_signature(spec);
  MatterFields out{GridField(chart, ms, ScalarKind::complex), GridField(chart, ms.dual(), ScalarKind::complex), {}, {}};
  out.dphi.assign(sz(m), out.phi);
  out.dphibar.assign(sz(m), out.phibar);
  const double w = 2.0 * std::numbers::pi / chart.period();
  const bool dirac = spec.sector == Sector::dirac;
  const int n = spec.n;

  // per-mode spinor amplitudes
  std::vector<std::vector<cplx>> spinors;
  if (dirac) {
    for (const auto& k : modes) {
      Matrix M(16, 0.0);
      for (int a = 0; a < m; ++a) {
        const Matrix g = gamma_upper(a);
        for (int i = 0; i < 16; ++i) M[sz(i)] += (w * k[sz(a)]) * g[sz(i)];
      }
      for (int i = 0; i < 4; ++i) M[sz(i * 4 + i)] += spec.mass;
      int best = 0;
      double bn = -1.0;
      for (int c = 0; c < 4; ++c) {
        double nrm = 0.0;
        for (int r = 0; r < 4; ++r) nrm += std::norm(M[sz(r * 4 + c)]);
        if (nrm > bn + 1e-12) {
          bn = nrm;
          best = c;
        }
      }
      std::vector<cplx> u(4, 0.0);
      if (bn <= 1e-24) {
        u[0] = 1.0;
      } else {
        for (int r = 0; r < 4; ++r) u[sz(r)] = M[sz(r * 4 + best)] / std::sqrt(bn);
      }
      spinors.push_back(u);
    }
  }
  const Matrix g0 = gamma_upper(0);
  const int F = ms.fiber_dim(m);
  for (std::size_t p = 0; p < chart.points(); ++p) {
    std::vector<cplx> e(modes.size());
    for (std::size_t q = 0; q < modes.size(); ++q) {
      double phase = 0.0;
      for (int a = 0; a < m; ++a) phase += modes[q][sz(a)] * chart.coordinate(p, a);
      e[q] = amplitude * std::exp(cplx(0.0, -w * phase));
    }
    // axis -1 is the value itself, axis a its exact derivative
    for (int a = -1; a < m; ++a) {
      auto factor = [&](std::size_t q) { return a < 0 ? cplx(1.0) : cplx(0.0, -w * modes[q][sz(a)]); };
      GridField& phi = a < 0 ? out.phi : out.dphi[sz(a)];
      GridField& phibar = a < 0 ? out.phibar : out.dphibar[sz(a)];
      if (!dirac) {
        cplx v = 0.0;
        for (std::size_t q = 0; q < modes.size(); ++q) v += factor(q) * e[q];
        for (int I = 0; I < F; ++I) {
          phi.at(p, 0, I) = v;
          phibar.at(p, 0, I) = std::conj(v);
        }
        continue;
      }
      for (int al = 0; al < 4; ++al) {
        cplx v = 0.0;
        for (std::size_t q = 0; q < modes.size(); ++q) v += spinors[q][sz(al)] * factor(q) * e[q];
        for (int i = 0; i < n; ++i) phi.at(p, 0, al * n + i) = v;
      }
      for (int be = 0; be < 4; ++be)
        for (int i = 0; i < n; ++i) {
          cplx v = 0.0;
          for (int al = 0; al < 4; ++al) v += std::conj(phi.at(p, 0, al * n + i)) * g0[sz(al * 4 + be)];
          phibar.at(p, 0, be * n + i) = v;
        }
    }
  }
  return out;
}

MatterFields build_matter(const Scenario& s, const Chart& chart) {
  const FiberSignature ms = matter_signature(s.sector);
  if (s.field.kind == "plane-wave") return plane_wave(s.sector, chart, s.field.modes, s.field.amplitude);
  MatterFields out;
  SampledField a = build_field(s, chart, ms, 0);
  out.phi = std::move(a.value);
  out.dphi = std::move(a.grad);
  if (s.field.kind == "constant") {
    out.phibar = GridField(chart, ms.dual(), ScalarKind::complex);
    std::fill(out.phibar.values().begin(), out.phibar.values().end(), std::conj(s.field.value));
    out.dphibar.assign(sz(chart.dim()), GridField(chart, ms.dual(), ScalarKind::complex));
  } else {
    SampledField b = build_field(s, chart, ms.dual(), 1);
    out.phibar = std::move(b.value);
    out.dphibar = std::move(b.grad);
  }
  return out;
}

DFState build_state(const Scenario& s, const Chart& chart) {
  if (s.sector.sector == Sector::gravity) throw Error("build_state: the gravity sector has no matter state");
  Background bg = flat_background(chart);
  bg.metric = build_metric(s, chart);
  if (s.metric.kind != "minkowski") bg.gamma = levi_civita(bg.metric);
  const ScenarioConnection kc = build_connection(s, chart);
  MatterFields mf;
  if (s.sector.has_matter()) mf = build_matter(s, chart);
  return prolong(s.sector, mf.phi, mf.phibar, kc.kappa, bg, 2);
}

}  // namespace covform
