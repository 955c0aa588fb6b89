// Acceptance runner: `covform_acceptance --criterion N` prints the checks behind
// criterion N and one final PASS/FAIL line. Criterion 12 also needs the CLI and
// a scenario file (--covform, --scenario).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "covform/report.hpp"

using namespace covform;

namespace {

// Pinned tolerances.
constexpr double kOrderMin = 1.8;
constexpr double kOrderMax = 2.2;
constexpr double kIdentity = 1e-10;
constexpr double kExact = 1e-12;
constexpr double kMomenta = 1e-8;
constexpr double kQuadratic = 1e-10;
constexpr double kOracle = 1e-6;  // oracle vs residual density, relative, eps = 1e-5
constexpr double kEinstein = 1e-8;
constexpr double kReplacementSeconds = 120.0;
constexpr double kVerifySeconds = 300.0;

struct Outcome {
  bool ok = true;
  void require(bool v) { ok = ok && v; }
};

std::string values_text(const CheckRecord& r) {
  std::ostringstream out;
  for (const auto& [k, v] : r.values) out << ' ' << k << '=' << v;
  if (r.convergence) {
    out << " residuals";
    for (std::size_t i = 0; i < r.convergence->residual.size(); ++i)
      out << ' ' << r.convergence->points[i] << ':' << r.convergence->residual[i];
    if (r.convergence->exact) {
      out << " exact";
    } else {
      out << " orders";
      for (double o : r.convergence->order) out << ' ' << o;
    }
  }
  if (!r.note.empty()) out << " (" << r.note << ')';
  return out.str();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void detail(const std::string& label, const std::string& text) { std::printf("  %s:%s\n", label.c_str(), text.c_str()); }

// Runs the named checks of one suite and folds their status into `out`.
void run_checks(const Scenario& s, const std::string& suite, const std::set<std::string>& names, Outcome& out,
                bool skip_ok = false) {
  int found = 0;
  for (const Check& c : suite_checks(s, suite)) {
    if (!names.count(c.name)) continue;
    ++found;
    const CheckRecord r = c.run();
    detail(s.name + " " + c.name + " " + status_name(r.status), values_text(r));
    out.require(r.status == Status::pass || (skip_ok && r.status == Status::skip));
  }
  if (found != static_cast<int>(names.size())) {
    detail(s.name, " missing checks in suite " + suite);
    out.ok = false;
  }
}

Scenario base(const std::string& name, std::uint64_t seed, Sector sector, int n, int N) {
  Scenario s;
  s.name = name;
  s.seed = seed;
  s.m = 4;
  s.n = N;
  s.sector.sector = sector;
  s.sector.n = n;
  s.connection.kind = "random-subalgebra";
  s.connection.basis = n == 2 ? "su2" : "u1";
  s.metric.kind = "sampled";
  s.metric.amplitude = 0.05;
  s.levels = 2;
  s.tol.identity = kIdentity;
  s.tol.exact = kExact;
  s.tol.momenta = kMomenta;
  s.tol.quadratic = kQuadratic;
  s.tol.oracle = kOracle;
  s.tol.order_min = kOrderMin;
  s.tol.order_max = kOrderMax;
  return s;
}

Scenario ready(Scenario s) {
  s.sector.m = s.m;
  validate_scenario(s);
  return s;
}

bool criterion_1() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 20; ++i) {
    Scenario s = base("replacement-" + std::to_string(i), 1000 + static_cast<std::uint64_t>(i), Sector::gauge, 2, 16);
    s.connection.spacetime = "torsionful";
    s.field.kind = "random-trig";
    const int r = 1 + i % 3;
    run_checks(ready(s), "identities", {"identities.replacement.r" + std::to_string(r)}, out);
  }
  for (int i = 0; i < 3; ++i) {
    Scenario s = base("torsion-free-" + std::to_string(i), 2000 + static_cast<std::uint64_t>(i), Sector::gauge, 2, 16);
    s.connection.spacetime = "torsion-free";
    const int r = 1 + i;
    run_checks(ready(s), "identities", {"identities.replacement.r" + std::to_string(r)}, out);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail("runtime_seconds", " " + num(secs));
  out.require(secs <= kReplacementSeconds);
  return out.ok;
}

bool criterion_2() {
  Outcome out;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Scenario s = ready(base("curvature-" + std::to_string(seed), seed, Sector::gauge, 2, 16));
    run_checks(s, "identities", {"identities.curvature.bracket", "identities.curvature.affine"}, out);
  }
  return out.ok;
}

bool criterion_3() {
  Outcome out;
  Scenario s = base("momenta", 21, Sector::gauge, 2, 4);
  s.momenta_samples = 100;
  run_checks(ready(s), "momenta",
             {"momenta.gauge", "momenta.boson", "momenta.boson_tangent", "momenta.dirac", "momenta.gravity",
              "momenta.gravity_closed_form"},
             out);
  return out.ok;
}

bool criterion_4() {
  Outcome out;
  for (auto [sector, n] : {std::pair{Sector::boson, 2}, {Sector::boson, 1}, {Sector::gauge, 2}, {Sector::gauge, 1}}) {
    Scenario s = base(sector_name(sector) + "-n" + std::to_string(n), 31 + static_cast<std::uint64_t>(n), sector, n, 8);
    s.sector.mass = 1.3;
    s.samples = 20;
    run_checks(ready(s), "field-equations", {"field_equations.action_oracle", "field_equations.local_vs_full"}, out);
  }
  return out.ok;
}

bool criterion_5() {
  Outcome out;
  Scenario gauge = base("gauge", 41, Sector::gauge, 2, 8);
  Scenario boson = base("boson", 42, Sector::boson, 2, 8);
  boson.sector.mass = 0.8;
  Scenario tangent = base("boson-tangent", 43, Sector::boson, 1, 8);
  tangent.sector.tangent_y = true;
  tangent.sector.mass = 0.5;
  Scenario dirac = base("dirac", 44, Sector::dirac, 2, 8);
  dirac.metric.kind = "minkowski";
  dirac.sector.mass = 1.1;
  for (const Scenario& s : {gauge, boson, tangent, dirac})
    run_checks(ready(s), "field-equations", {"field_equations.covariant_vs_simplified"}, out);
  Scenario grav = base("gravity", 45, Sector::gravity, 1, 8);
  grav.connection.kind = "levi-civita";
  run_checks(ready(grav), "gravity", {"gravity.gamma_explicit"}, out);
  return out.ok;
}

bool criterion_6() {
  Outcome out;
  Scenario s = base("free-waves", 51, Sector::gauge, 1, 16);
  s.connection.kind = "zero";
  s.metric.kind = "minkowski";
  run_checks(ready(s), "field-equations",
             {"field_equations.klein_gordon", "field_equations.dirac", "field_equations.abelian_vacuum"}, out);
  return out.ok;
}

bool criterion_7() {
  Outcome out;
  double minus4 = 0.0, plus4 = 0.0, sym = 0.0;
  for (auto [sector, n] : {std::pair{Sector::gauge, 2}, {Sector::boson, 2}, {Sector::boson, 1}}) {
    Scenario s = base(sector_name(sector) + "-n" + std::to_string(n), 61 + static_cast<std::uint64_t>(n), sector, n, 8);
    s.sector.mass = 0.9;
    s = ready(s);
    const Chart c = scenario_chart(s, s.n);
    const DFState st = build_state(s, c);
    const StressEnergy T = stress_energy_tensor(st);
    const int m = c.dim();
    double dm = 0.0, dp = 0.0, ds = 0.0;
    for (std::size_t p = 0; p < c.points(); ++p) {
      const double sg = st.bg.metric.sqrt_abs_det(p);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const cplx u = T.u_sym.at(p, 0, a * m + b), t = T.t_low.at(p, 0, a * m + b) * sg;
          dm = std::max(dm, std::abs(u + 4.0 * t));
          dp = std::max(dp, std::abs(u - 4.0 * t));
          ds = std::max(ds, std::abs(T.t.at(p, 0, a * m + b) - T.t.at(p, 0, b * m + a)));
        }
    }
    const double scale = std::max(1.0, sup_norm(T.u_sym));
    const double tscale = std::max(1.0, sup_norm(T.t));
    detail(s.name, " U+U^T=-4T relative=" + num(dm / scale) + " U+U^T=+4T relative=" + num(dp / scale) +
                       " T asymmetry relative=" + num(ds / tscale));
    minus4 = std::max(minus4, dm / scale);
    plus4 = std::max(plus4, dp / scale);
    sym = std::max(sym, ds / tscale);
  }
  // The stated relation is U_ab + U_ba = -4 T_ab. With T the coefficient of delta g_ab the
  // measured relation is +4 T; both are reported and the stated one decides.
  detail("stated -4T relation", minus4 <= kIdentity ? " holds" : " does not hold");
  detail("+4T relation", plus4 <= kIdentity ? " holds" : " does not hold");
  detail("T symmetric", sym <= kExact ? " holds" : " does not hold");
  out.require(minus4 <= kIdentity);
  out.require(sym <= kExact);
  return out.ok;
}

bool criterion_8() {
  Outcome out;
  Scenario s = base("conservation", 71, Sector::boson, 1, 16);
  s.connection.kind = "zero";
  s.metric.kind = "minkowski";
  run_checks(ready(s), "energy", {"energy.conservation", "energy.off_shell"}, out);
  return out.ok;
}

// Textbook FRW curvature for g = diag(1, -a^2, -a^2, -a^2), a = 1 + A sin(2 pi t / L):
// G_00 = 3 (a'/a)^2, G_ii = -(2 a a'' + a'^2), raised with g^{00} = 1, g^{ii} = -1/a^2.
double frw_einstein_deviation(int N, double amplitude) {
  const Chart c = Chart::with_period(4, N, 1.0);
  const MetricJet jet = frw_jet(c, amplitude);
  const Gradient dgamma = levi_civita_gradient(jet);
  const GravityResiduals gr = gravity_residuals(jet.g, levi_civita(jet.g, &jet.dg), &dgamma);
  const double w = 2.0 * std::numbers::pi / c.period();
  double dev = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < c.points(); ++p) {
    const double t = c.coordinate(p, 0);
    const double a = 1.0 + amplitude * std::sin(w * t);
    const double da = amplitude * w * std::cos(w * t);
    const double dda = -amplitude * w * w * std::sin(w * t);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double expect = 0.0;
        if (i == j) expect = i == 0 ? 3.0 * da * da / (a * a) : -(2.0 * a * dda + da * da) / std::pow(a, 4);
        dev = std::max(dev, std::abs(gr.einstein.at(p, 0, i * 4 + j) - expect));
        scale = std::max(scale, std::abs(expect));
      }
  }
  return dev / scale;
}

bool criterion_9() {
  Outcome out;
  const double e = frw_einstein_deviation(8, 0.1);
  detail("frw Einstein vs closed form", " relative=" + num(e));
  out.require(e <= kEinstein);
  Scenario s = base("frw", 91, Sector::gravity, 1, 16);
  s.connection.kind = "levi-civita";
  s.metric.kind = "diagonal-analytic";
  s.metric.profile = "frw";
  s.metric.amplitude = 0.1;
  run_checks(ready(s), "gravity",
             {"gravity.minkowski", "gravity.einstein", "gravity.gamma_residual", "gravity.metricity_pattern"}, out);
  return out.ok;
}

bool criterion_10() {
  Outcome out;
  for (auto [sector, n] : {std::pair{Sector::gauge, 2}, {Sector::gauge, 1}, {Sector::boson, 2}, {Sector::boson, 1}}) {
    Scenario s = base(sector_name(sector) + "-n" + std::to_string(n), 101 + static_cast<std::uint64_t>(n), sector, n, 8);
    s.sector.mass = 0.6;
    run_checks(ready(s), "field-equations", {"field_equations.gauge_invariance"}, out);
  }
  return out.ok;
}

bool criterion_11() {
  Outcome out;
  for (auto [sector, n] : {std::pair{Sector::gauge, 2}, {Sector::boson, 2}}) {
    Scenario s = base(sector_name(sector) + "-n" + std::to_string(n), 111 + static_cast<std::uint64_t>(n), sector, n, 8);
    s.sector.mass = 0.7;
    run_checks(ready(s), "energy", {"energy.noether_horizontal"}, out);
  }
  Scenario free = base("free-pair", 113, Sector::boson, 1, 16);
  free.connection.kind = "zero";
  free.metric.kind = "minkowski";
  run_checks(ready(free), "energy", {"energy.gauge_current"}, out);
  return out.ok;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool criterion_12(const std::string& covform, const std::string& scenario) {
  Outcome out;
  if (covform.empty() || scenario.empty()) {
    detail("usage", " criterion 12 needs --covform and --scenario");
    return false;
  }
  const Scenario s = load_scenario(scenario);
  detail("grid", " " + std::to_string(s.n) + "^" + std::to_string(s.m));
  out.require(s.n == 8);
  const auto dir = std::filesystem::temp_directory_path() / ("covform-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::vector<std::string> reports;
  for (int run = 0; run < 2; ++run) {
    const auto report = dir / ("report" + std::to_string(run) + ".json");
    const std::string cmd = "\"" + covform + "\" verify --config \"" + scenario + "\" --suite all --out \"" +
                            report.string() + "\" 2>/dev/null";
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = std::system(cmd.c_str());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    detail("run " + std::to_string(run + 1), " exit=" + std::to_string(code) + " seconds=" + num(secs));
    out.require(code == 0 && secs <= kVerifySeconds);
    reports.push_back(slurp(report));
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1];
  detail("reports byte-identical", same ? " yes" : " no");
  out.require(same);
  std::filesystem::remove_all(dir);
  return out.ok;
}

const char* kTitles[] = {
    "",
    "replacement principle converges at order 2 on 20 random scenarios",
    "curvature equals minus the covariant differential of the connection",
    "closed-form momenta equal the fiber derivatives of the Lagrangian",
    "field equations equal the variation of the discrete action",
    "covariant and simplified field equations agree",
    "free plane waves and the constant abelian vacuum are solutions",
    "U_ab + U_ba = -4 T_ab and T is symmetric",
    "on shell the stress-energy tensor is divergence-free",
    "gravity sector: Minkowski, FRW Einstein tensor, Gamma-sector residual",
    "the Lagrangian is gauge invariant",
    "Noether current consistency and on-shell gauge current",
    "verify --suite all on 8^4 is deterministic and exits 0",
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covform acceptance criteria"};
  int criterion = 0;
  std::string covform, scenario;
  app.add_option("--criterion", criterion, "criterion number, 1-12")->required()->check(CLI::Range(1, 12));
  app.add_option("--covform", covform, "path of the covform executable (criterion 12)");
  app.add_option("--scenario", scenario, "8^4 scenario with every suite (criterion 12)");
  CLI11_PARSE(app, argc, argv);

  const std::function<bool()> runners[] = {
      [] { return false; },  criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5,
      criterion_6,           criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
      [&] { return criterion_12(covform, scenario); },
  };
  bool ok = false;
  try {
    ok = runners[criterion]();
  } catch (const std::exception& e) {
    detail("error", std::string(" ") + e.what());
  }
  std::printf("criterion %d %s: %s\n", criterion, ok ? "PASS" : "FAIL", kTitles[criterion]);
  return ok ? 0 : 1;
}
