#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "covform/report.hpp"

namespace covform {
namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

double rel(double num, double scale) {
  if (num == 0.0) return 0.0;
  return num / std::max(scale, 1e-300);
}

// Grids halve down from the finest one, max(N, min_finest), never below 4 points.
// The default keeps 8 -> 16 for the shipped N = 8; nested stencils ask for 32.
std::vector<int> refinement(const Scenario& s, int min_finest = 16) {
  std::vector<int> pts;
  const int finest = std::max(s.n, min_finest);
  for (int l = s.levels - 1; l >= 0; --l)
    if ((finest >> l) >= 4) pts.push_back(finest >> l);
  return pts;
}

CheckRecord record(const std::string& anchor) {
  CheckRecord r;
  r.anchor = anchor;
  return r;
}

CheckRecord skipped(const std::string& anchor, const std::string& why) {
  CheckRecord r = record(anchor);
  r.status = Status::skip;
  r.note = why;
  return r;
}

void judge(CheckRecord& r, bool ok) { r.status = ok ? Status::pass : Status::fail; }

CheckRecord converge(const Scenario& s, const std::string& anchor, const std::function<LevelResult(int)>& level,
                     int min_finest = 16) {
  CheckRecord r = record(anchor);
  r.convergence = measure_convergence(refinement(s, min_finest), s.period, level, s.tol.exact);
  judge(r, orders_within(*r.convergence, s.tol.order_min, s.tol.order_max));
  r.values.emplace_back("order_min", s.tol.order_min);
  r.values.emplace_back("order_max", s.tol.order_max);
  return r;
}

double wavenumber(const Chart& c) { return 2.0 * std::numbers::pi / c.period(); }

GridField vector_field(const Chart& c, std::uint64_t seed) {
  return trig_series(c, FiberSignature{{tangent()}, 0, Rep::standard}, seed, 1, ScalarKind::real, 0.7).sample(c);
}

std::optional<Subalgebra> algebra_or_default(const Scenario& s) {
  if (auto a = scenario_algebra(s)) return a;
  if (s.sector.n == 1) return Subalgebra::u1();
  if (s.sector.n == 2) return Subalgebra::su2();
  return std::nullopt;
}

// ---- convergence studies -------------------------------------------------

LevelResult replacement_level(const Scenario& s, int N, int r, const std::string& spacetime) {
  const Chart c = scenario_chart(s, N);
  const int m = c.dim();
  const ScenarioConnection kc = build_connection(s, c, false);
  const SpacetimeConnection G = build_spacetime(s, c, spacetime);
  const FiberSignature sig = FiberSignature::internal(kc.kappa.n(), m - r, Rep::complementary);
  const SampledField xi = build_field(s, c, sig, static_cast<std::uint64_t>(20 + r));
  const FiberConnection K(c, sig, {&kc.kappa});
  // exact derivatives on the divergence side, central differences on the differential side
  const GridField lhs = covariant_divergence(xi.value, G, K, &xi.grad);
  GridField rhs = d_kappa_basic(xi.value, K, nullptr) - torsion_wedge(G.tau, xi.value);
  if (r >= 2) axpy(rhs, -0.5, t_bar_wedge(G.torsion, xi.value));
  return {sup_norm(lhs - rhs), sup_norm(lhs)};
}

LevelResult curvature_level(const Scenario& s, int N) {
  const Chart c = scenario_chart(s, N);
  const ScenarioConnection kc = build_connection(s, c);
  const GridField rho = curvature(kc.kappa, &kc.dkappa);
  return {sup_norm(rho + d_kappa_kappa(kc.kappa, nullptr)), sup_norm(rho)};
}

// The nested-stencil checks refine to 32^4. Without an internal connection the
// fiber components decouple, so one component carries the whole check.
Scenario nested_scenario(const Scenario& s) {
  Scenario out = s;
  if (s.connection.kind == "zero" || s.connection.kind == "levi-civita") {
    out.connection.kind = "zero";
    out.sector.n = 1;
  }
  return out;
}

LevelResult lie_variation_level(const Scenario& in, int N) {
  const Scenario s = nested_scenario(in);
  const Chart c = scenario_chart(s, N);
  const ScenarioConnection kc = build_connection(s, c, false);
  const SampledField sigma = build_field(s, c, FiberSignature::internal(kc.kappa.n()), 30, false);
  const GridField u = vector_field(c, derive_seed(s.seed, 31));
  return {sup_norm(lie_variation_residual(sigma.value, u, kc.kappa)), sup_norm(sigma.value)};
}

struct PlaneCase {
  SectorSpec spec;
  std::vector<std::vector<int>> modes;
  double amplitude = 1.0;
};

std::vector<int> axis_mode(int m, std::initializer_list<int> lead) {
  std::vector<int> k(sz(m), 0);
  int i = 0;
  for (int v : lead) {
    if (i < m) k[sz(i)] = v;
    ++i;
  }
  return k;
}

// The scenario's own plane wave when it describes this sector, a rest-frame wave otherwise.
PlaneCase plane_case(const Scenario& s, Sector sector) {
  if (s.sector.sector == sector && s.field.kind == "plane-wave") return {s.sector, s.field.modes, s.field.amplitude};
  PlaneCase pc;
  pc.spec.sector = sector;
  pc.spec.m = s.m;
  pc.spec.n = 1;
  pc.spec.mass = 2.0 * std::numbers::pi / s.period;
  pc.modes = {axis_mode(s.m, {1})};
  return pc;
}

// Two massless modes whose difference wavevector has unequal components; with
// equal components the central stencil divergence of the interference term is
// exactly proportional to the continuum one and vanishes.
PlaneCase pair_case(const Scenario& s) {
  if (s.sector.sector == Sector::boson && s.field.kind == "plane-wave" && s.sector.n == 1 && !s.sector.tangent_y)
    return {s.sector, s.field.modes, s.field.amplitude};
  PlaneCase pc;
  pc.spec.sector = Sector::boson;
  pc.spec.m = s.m;
  pc.spec.n = 1;
  pc.spec.mass = 0.0;
  pc.modes = {axis_mode(s.m, {1, 1}), s.m >= 3 ? axis_mode(s.m, {2, 0, 2}) : axis_mode(s.m, {2, -2})};
  return pc;
}

// With exact_derivatives the prolongation takes the analytic gradient of the
// waves, so the only difference stencil left is the one applied afterwards.
DFState plane_state(const PlaneCase& pc, const Chart& c, bool exact_derivatives = false) {
  const MatterFields mf = plane_wave(pc.spec, c, pc.modes, pc.amplitude);
  LinearConnection k = LinearConnection::zero(c, pc.spec.n, ScalarKind::complex);
  if (pc.spec.n == 1) k.algebra = Subalgebra::u1();
  DFState st = prolong(pc.spec, mf.phi, mf.phibar, k, flat_background(c), 2);
  if (exact_derivatives) {
    const ConnectionSet set = st.connections();
    st.nabla_phi = covariant_derivative(mf.phi, FiberConnection(c, mf.phi.signature(), set), &mf.dphi);
    st.nabla_phibar = covariant_derivative(mf.phibar, FiberConnection(c, mf.phibar.signature(), set), &mf.dphibar);
  }
  return st;
}

LevelResult klein_gordon_level(const Scenario& s, int N) {
  const DFState st = plane_state(plane_case(s, Sector::boson), scenario_chart(s, N));
  const FieldEquations fe = field_eq_residual(st);
  const MomentumFields M = momentum_fields(st);
  return {std::max(sup_norm(fe.covariant.matter), sup_norm(fe.covariant.matter_bar)),
          std::max(sup_norm(M.pi0), sup_norm(M.pi1))};
}

LevelResult dirac_level(const Scenario& s, int N) {
  const DFState st = plane_state(plane_case(s, Sector::dirac), scenario_chart(s, N));
  const DiracResiduals dr = dirac_residual(st);
  const MomentumFields M = momentum_fields(st);
  return {std::max(sup_norm(dr.psi), sup_norm(dr.psibar)), std::max(sup_norm(M.pi0), sup_norm(M.pi1))};
}

LevelResult conservation_level(const Scenario& s, int N) {
  const Chart c = scenario_chart(s, N);
  const DFState st = plane_state(pair_case(s), c, true);
  const StressEnergy T = stress_energy_tensor(st);
  const GridField div = divergence_of_T(T.t, SpacetimeConnection::zero(c));
  return {sup_norm(div), sup_norm(T.t) * wavenumber(c)};
}

LevelResult gauge_current_level(const Scenario& s, int N) {
  const Chart c = scenario_chart(s, N);
  const DFState st = plane_state(pair_case(s), c, true);
  const int n = st.spec.n;
  GridField l(c, FiberSignature::endo(n), ScalarKind::complex);
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int i = 0; i < n; ++i) l.at(p, 0, i * n + i) = cplx(0.0, 1.0);
  Vertical w;
  w.w = internal_action(l, st.phi);
  w.wbar = internal_action(l, st.phibar);
  const GridField current = noether_current(GridField{}, w, st);
  return {sup_norm(current_divergence(current)), sup_norm(current) * wavenumber(c)};
}

double frw_amplitude(const Scenario& s) {
  return s.metric.kind == "diagonal-analytic" ? s.metric.amplitude : 0.1;
}

Metric gravity_metric(const Scenario& s, const Chart& c) {
  if (s.metric.kind == "minkowski") return Metric::frw(c, 0.1);
  return build_metric(s, c);
}

LevelResult einstein_level(const Scenario& s, int N) {
  const Chart c = scenario_chart(s, N);
  const MetricJet jet = frw_jet(c, frw_amplitude(s));
  const Gradient dgam = levi_civita_gradient(jet);
  const GravityResiduals exact = gravity_residuals(jet.g, levi_civita(jet.g, &jet.dg), &dgam);
  const GravityResiduals fd = gravity_residuals(jet.g, levi_civita(jet.g), nullptr);
  return {max_abs_diff(fd.einstein, exact.einstein), sup_norm(exact.einstein)};
}

LevelResult gamma_level(const Scenario& s, int N) {
  const Chart c = scenario_chart(s, N);
  const MetricJet jet = frw_jet(c, frw_amplitude(s));
  const GravityResiduals gr = gravity_residuals(jet.g, levi_civita(jet.g, &jet.dg), nullptr);
  return {sup_norm(gr.gamma_residual), 1.0};
}

// ---- identities ------------------------------------------------------------

const char* kReplacement = "covariant divergence = covariant differential - tau wedge xi - T bar-wedge xi / 2";

CheckRecord replacement_shared(const Scenario& s) {
  CheckRecord r = record("with shared derivative data the replacement identity is algebraic");
  const Chart c = scenario_chart(s, s.n);
  const int m = c.dim();
  const ScenarioConnection kc = build_connection(s, c);
  const SpacetimeConnection G = build_spacetime(s, c, s.connection.spacetime);
  double worst = 0.0;
  for (int deg = 1; deg <= 3 && deg <= m; ++deg) {
    const FiberSignature sig = FiberSignature::internal(kc.kappa.n(), m - deg, Rep::complementary);
    const SampledField xi = build_field(s, c, sig, static_cast<std::uint64_t>(20 + deg));
    const FiberConnection K(c, sig, {&kc.kappa});
    const GridField res = replacement_residual(xi.value, G, K, nullptr);
    const double e = rel(sup_norm(res), std::max(1.0, sup_norm(covariant_divergence(xi.value, G, K, nullptr))));
    r.values.emplace_back("relative_r" + std::to_string(deg), e);
    worst = std::max(worst, e);
  }
  judge(r, worst <= s.tol.identity);
  return r;
}

CheckRecord curvature_affine(const Scenario& s) {
  const char* anchor = "curvature equals minus the covariant differential of the connection, exact on affine profiles";
  const std::optional<Subalgebra> alg = algebra_or_default(s);
  if (!alg) return skipped(anchor, "no subalgebra for this internal dimension");
  CheckRecord r = record(anchor);
  const Chart c = scenario_chart(s, s.n);
  const int m = c.dim(), n = alg->n, nn = n * n;
  const int dim = static_cast<int>(alg->basis.size());
  std::mt19937_64 rng(derive_seed(s.seed, 50));
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  // kappa_a = sum_I (A_aI + sum_b B_abI x^b) basis_I
  std::vector<double> A(sz(m * dim)), B(sz(m * m * dim));
  for (auto& v : A) v = U(rng);
  for (auto& v : B) v = U(rng);
  LinearConnection k = LinearConnection::zero(c, n, ScalarKind::complex);
  k.algebra = alg;
  Gradient dk(sz(m), k.k);
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a)
      for (int I = 0; I < dim; ++I) {
        double coef = A[sz(a * dim + I)];
        for (int b = 0; b < m; ++b) coef += B[sz((a * m + b) * dim + I)] * c.coordinate(p, b);
        for (int f = 0; f < nn; ++f) {
          k.k.at(p, a, f) += coef * alg->basis[sz(I)][sz(f)];
          for (int b = 0; b < m; ++b) dk[sz(b)].at(p, a, f) += B[sz((a * m + b) * dim + I)] * alg->basis[sz(I)][sz(f)];
        }
      }
  // the profile wraps at the box edge, so only interior points see a linear stencil
  const GridField rho = curvature(k, nullptr);
  const double dev = sup_norm_interior(rho + d_kappa_kappa(k, &dk), 1);
  const double scale = sup_norm_interior(rho, 1);
  r.values.emplace_back("interior_deviation", dev);
  r.values.emplace_back("scale", scale);
  judge(r, dev <= s.tol.exact * std::max(1.0, scale));
  return r;
}

LevelResult tilde_level(const Scenario& in, int N) {
  const Scenario s = nested_scenario(in);
  const Chart c = scenario_chart(s, N);
  const Metric g = s.metric.kind == "minkowski" ? Metric::sampled(c, derive_seed(s.seed, 60), 0.1) : build_metric(s, c);
  const SpacetimeConnection G = levi_civita(g);
  const ScenarioConnection kc = build_connection(s, c, false);
  LevelResult out{0.0, 0.0};
  for (int deg = 1; deg <= 3; ++deg) {
    const FiberSignature sig = FiberSignature::internal(kc.kappa.n(), c.dim() - deg, Rep::complementary);
    const SampledField xi = build_field(s, c, sig, static_cast<std::uint64_t>(60 + deg), false);
    const TildeCheck t = tilde_divergence_sign_check(xi.value, g, G, FiberConnection(c, sig, {&kc.kappa}));
    out.residual = std::max(out.residual, t.max_deviation);
    out.scale = std::max(out.scale, t.scale);
  }
  return out;
}

CheckRecord tilde_sign(const Scenario& s) {
  const char* anchor = "tilde of the covariant divergence = sign times divergence of the tilde r-vector";
  if (s.m % 2 != 0) return skipped(anchor, "defined here for even m only");
  CheckRecord r = converge(s, anchor, [&](int N) { return tilde_level(s, N); }, 32);
  r.values.emplace_back("sign", 1.0);
  r.note = "Levi-Civita connection of a curved metric; the product rule holds to O(h^2) only";
  return r;
}

std::vector<Check> identity_checks(const Scenario& s) {
  std::vector<Check> out;
  for (int deg = 1; deg <= 3; ++deg)
    out.push_back({"identities.replacement.r" + std::to_string(deg), [s, deg] {
                     return converge(s, kReplacement,
                                     [&](int N) { return replacement_level(s, N, deg, s.connection.spacetime); });
                   }});
  out.push_back({"identities.replacement.torsion_free", [s] {
                   return converge(s, "torsion-free case: covariant divergence = covariant differential", [&](int N) {
                     LevelResult worst{0.0, 0.0};
                     for (int deg = 1; deg <= 3; ++deg) {
                       const LevelResult l = replacement_level(s, N, deg, "torsion-free");
                       worst.residual = std::max(worst.residual, l.residual);
                       worst.scale = std::max(worst.scale, l.scale);
                     }
                     return worst;
                   });
                 }});
  out.push_back({"identities.replacement.shared_derivatives", [s] { return replacement_shared(s); }});
  out.push_back({"identities.curvature.bracket", [s] {
                   return converge(s, "curvature equals minus the covariant differential of the connection",
                                   [&](int N) { return curvature_level(s, N); });
                 }});
  out.push_back({"identities.curvature.affine", [s] { return curvature_affine(s); }});
  out.push_back({"identities.tilde_sign", [s] { return tilde_sign(s); }});
  out.push_back({"identities.lie_variation", [s] {
                   return converge(s, "covariant Lie derivative commutes with d_kappa up to the i_u rho term",
                                   [&](int N) { return lie_variation_level(s, N); }, 32);
                 }});
  return out;
}

// ---- momenta ---------------------------------------------------------------

double slot_error(const std::vector<cplx>& a, const std::vector<cplx>& b, bool* shape_ok) {
  if (a.size() != b.size()) {
    *shape_ok = false;
    return 0.0;
  }
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(a[i]));
  }
  return rel(diff, std::max(scale, 1e-12));
}

CheckRecord momenta_check(const Scenario& s, const SectorSpec& spec, std::uint64_t salt) {
  CheckRecord r = record("momenta are the fiber derivatives of the Lagrangian density");
  double quad = 0.0, metric = 0.0;
  bool shape_ok = true;
  for (int i = 0; i < s.momenta_samples; ++i) {
    const FiberPoint pt = random_fiber_point(spec, derive_seed(s.seed, salt * 100000 + static_cast<std::uint64_t>(i)));
    const Momenta A = momenta_analytic(spec, pt);
    const Momenta N = momenta_numeric(spec, pt, 1e-4);
    // smaller step for the metric slot: its dependence is not polynomial
    const Momenta Ng = momenta_numeric(spec, pt, 2e-6);
    for (auto [x, y] : {std::pair{&A.pi0, &N.pi0}, {&A.pi0bar, &N.pi0bar}, {&A.pi1, &N.pi1},
                        {&A.pi1bar, &N.pi1bar}, {&A.pi2, &N.pi2}, {&A.pik, &N.pik}}) {
      if (spec.sector == Sector::gravity && x == &A.pi0) continue;  // pi0 holds dg there
      quad = std::max(quad, slot_error(*x, *y, &shape_ok));
    }
    metric = std::max(metric, slot_error(A.dg, Ng.dg, &shape_ok));
  }
  r.values.emplace_back("quadratic_slots_relative", quad);
  r.values.emplace_back("metric_slot_relative", metric);
  r.values.emplace_back("samples", s.momenta_samples);
  if (!shape_ok) r.note = "analytic and numeric momenta differ in shape";
  judge(r, shape_ok && quad <= s.tol.quadratic && metric <= s.tol.momenta);
  return r;
}

CheckRecord gravity_closed_form(const Scenario& s) {
  CheckRecord r = record("gravity curvature momentum (g^{bd} delta^a_c - g^{ad} delta^b_c) sqrt|g|");
  SectorSpec spec;
  spec.sector = Sector::gravity;
  spec.m = s.m;
  spec.n = s.m;
  const int m = s.m;
  const IndexSet& pairs = index_set(m, 2);
  double worst = 0.0;
  for (int i = 0; i < s.momenta_samples; ++i) {
    const FiberPoint pt = random_fiber_point(spec, derive_seed(s.seed, 900000 + static_cast<std::uint64_t>(i)));
    const Momenta N = momenta_numeric(spec, pt, 1e-3);
    const PointMetric g(pt.g);
    for (int q = 0; q < pairs.size(); ++q) {
      const auto ab = pairs.indices(q);
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          const double expect = ((ab[0] == c ? g.ginv[sz(ab[1] * m + d)] : 0.0) -
                                 (ab[1] == c ? g.ginv[sz(ab[0] * m + d)] : 0.0)) * g.sqrtg;
          worst = std::max(worst, std::abs(N.pi2[sz(q * m * m + c * m + d)] - expect));
        }
    }
  }
  r.values.emplace_back("max_abs_deviation", worst);
  judge(r, worst <= s.tol.quadratic);
  return r;
}

CheckRecord dirac_real(const Scenario& s) {
  CheckRecord r = record("the Dirac Lagrangian is real when psibar is the Dirac adjoint");
  SectorSpec spec;
  spec.sector = Sector::dirac;
  spec.m = 4;
  spec.n = 1;
  spec.mass = 0.7;
  double worst = 0.0;
  for (int i = 0; i < s.momenta_samples; ++i) {
    FiberPoint pt = random_fiber_point(spec, derive_seed(s.seed, 800000 + static_cast<std::uint64_t>(i)));
    dirac_adjoint_pair(spec, pt);
    const cplx lam = sector_lambda(spec, pt);
    worst = std::max(worst, rel(std::abs(lam.imag()), std::max(1.0, std::abs(lam))));
  }
  r.values.emplace_back("max_relative_imaginary_part", worst);
  judge(r, worst <= s.tol.exact);
  return r;
}

std::vector<Check> momenta_checks(const Scenario& s) {
  std::vector<Check> out;
  struct Case {
    const char* label;
    Sector sector;
    int n;
    bool tangent;
    double mass;
  };
  const Case cases[] = {{"gauge", Sector::gauge, 2, false, 0.0},
                        {"boson", Sector::boson, 2, false, 0.9},
                        {"boson_tangent", Sector::boson, 1, true, 0.4},
                        {"dirac", Sector::dirac, 2, false, 0.7},
                        {"gravity", Sector::gravity, s.m, false, 0.0}};
  std::uint64_t salt = 1;
  for (const Case& c : cases) {
    const std::string name = std::string("momenta.") + c.label;
    if (c.sector == Sector::dirac && s.m != 4) {
      out.push_back({name, [] { return skipped("momenta are the fiber derivatives of the Lagrangian density", "needs m = 4"); }});
      continue;
    }
    SectorSpec spec;
    spec.sector = c.sector;
    spec.m = s.m;
    spec.n = c.n;
    spec.tangent_y = c.tangent;
    spec.mass = c.mass;
    out.push_back({name, [s, spec, salt] { return momenta_check(s, spec, salt); }});
    ++salt;
  }
  out.push_back({"momenta.gravity_closed_form", [s] { return gravity_closed_form(s); }});
  out.push_back({"momenta.dirac_real", [s] {
                   if (s.m != 4) return skipped("the Dirac Lagrangian is real when psibar is the Dirac adjoint", "needs m = 4");
                   return dirac_real(s);
                 }});
  return out;
}

// ---- field equations ---------------------------------------------------------

const char* kNoMatterState = "the gravity sector has no matter state";

CheckRecord covariant_vs_simplified(const Scenario& s) {
  CheckRecord r = record("covariant field equations equal their simplified coordinate form");
  const DFState st = build_state(s, scenario_chart(s, s.n));
  const FieldEquations fe = field_eq_residual(st);
  double worst = 0.0;
  auto cmp = [&](const GridField& a, const GridField& b, const char* what) {
    if (a.empty() && b.empty()) return;
    const double e = rel(max_abs_diff(a, b), std::max(1.0, sup_norm(a)));
    r.values.emplace_back(what, e);
    worst = std::max(worst, e);
  };
  cmp(fe.covariant.matter, fe.simplified.matter, "matter_relative");
  cmp(fe.covariant.matter_bar, fe.simplified.matter_bar, "matter_bar_relative");
  cmp(fe.covariant.gauge, fe.simplified.gauge, "gauge_relative");
  judge(r, worst <= s.tol.identity);
  return r;
}

struct OracleSample {
  FieldSlot slot;
  std::size_t p;
  int comp, f;
};

std::vector<OracleSample> oracle_samples(const Scenario& s, const DFState& st, int count, std::uint64_t salt) {
  std::mt19937_64 rng(derive_seed(s.seed, salt));
  std::vector<FieldSlot> slots{FieldSlot::kappa};
  if (st.spec.has_matter()) slots = {FieldSlot::phi, FieldSlot::phibar, FieldSlot::kappa};
  const int m = st.chart().dim(), F = st.spec.matter_dim(), nn = st.spec.n * st.spec.n;
  std::vector<OracleSample> out;
  for (int i = 0; i < count; ++i) {
    OracleSample o;
    o.slot = slots[rng() % slots.size()];
    o.p = static_cast<std::size_t>(rng() % st.chart().points());
    if (o.slot == FieldSlot::kappa) {
      o.comp = static_cast<int>(rng() % sz(m));
      o.f = static_cast<int>(rng() % sz(nn));
    } else {
      o.comp = 0;
      o.f = static_cast<int>(rng() % sz(F));
    }
    out.push_back(o);
  }
  return out;
}

cplx residual_for(const FieldEquations& fe, const OracleSample& o, double hm) {
  switch (o.slot) {
    case FieldSlot::phi: return hm * fe.covariant.matter.at(o.p, 0, o.f);
    case FieldSlot::phibar: return hm * fe.covariant.matter_bar.at(o.p, 0, o.f);
    case FieldSlot::kappa: return -hm * fe.covariant.gauge.at(o.p, o.comp, o.f);
  }
  return 0.0;
}

CheckRecord action_oracle(const Scenario& s) {
  CheckRecord r = record("field equations are the variation of the discrete action");
  double worst = 0.0;
  for (int N : refinement(s)) {
    const Chart c = scenario_chart(s, N);
    const DFState st = build_state(s, c);
    const FieldEquations fe = field_eq_residual(st);
    const ActionTools tools(st);
    const double hm = std::pow(c.spacing(), c.dim());
    const double floor = 1e-8 * hm *
                         std::max({sup_norm(fe.covariant.gauge),
                                   fe.covariant.matter.empty() ? 0.0 : sup_norm(fe.covariant.matter),
                                   fe.covariant.matter_bar.empty() ? 0.0 : sup_norm(fe.covariant.matter_bar), 1e-300});
    double level = 0.0;
    for (const OracleSample& o : oracle_samples(s, st, s.samples, 70)) {
      const cplx oracle = tools.variation_oracle(o.slot, o.p, o.comp, o.f, 1e-5);
      const cplx res = residual_for(fe, o, hm);
      level = std::max(level, std::abs(oracle - res) / std::max({std::abs(oracle), std::abs(res), floor}));
    }
    r.values.emplace_back("max_relative_N" + std::to_string(N), level);
    worst = std::max(worst, level);
  }
  r.values.emplace_back("samples_per_level", s.samples);
  judge(r, worst <= s.tol.oracle);
  return r;
}

CheckRecord local_vs_full(const Scenario& s) {
  CheckRecord r = record("stencil-local action variation is bit-identical to full re-evaluation");
  const DFState st = build_state(s, scenario_chart(s, s.n));
  const ActionTools tools(st);
  int mismatches = 0;
  const auto samples = oracle_samples(s, st, 3, 71);
  for (const OracleSample& o : samples) {
    const cplx a = tools.variation_oracle(o.slot, o.p, o.comp, o.f, 1e-5);
    const cplx b = tools.variation_oracle_full(o.slot, o.p, o.comp, o.f, 1e-5);
    if (a != b) ++mismatches;
  }
  r.values.emplace_back("points", static_cast<double>(samples.size()));
  r.values.emplace_back("mismatches", mismatches);
  judge(r, mismatches == 0);
  return r;
}

CheckRecord abelian_vacuum(const Scenario& s) {
  CheckRecord r = record("a constant abelian field strength solves the gauge field equations");
  const Chart c = scenario_chart(s, s.n);
  const int m = c.dim();
  SectorSpec spec;
  spec.sector = Sector::gauge;
  spec.m = m;
  spec.n = 1;
  // kappa_a = (i/2) F_ab x^b with constant antisymmetric F
  std::vector<double> F(sz(m * m), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      F[sz(a * m + b)] = 0.3 * (a + 1) - 0.2 * b;
      F[sz(b * m + a)] = -F[sz(a * m + b)];
    }
  LinearConnection k = LinearConnection::zero(c, 1, ScalarKind::complex);
  k.algebra = Subalgebra::u1();
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a) {
      double v = 0.0;
      for (int b = 0; b < m; ++b) v += 0.5 * F[sz(a * m + b)] * c.coordinate(p, b);
      k.k.at(p, a, 0) = cplx(0.0, v);
    }
  const DFState st = prolong(spec, GridField{}, GridField{}, k, flat_background(c), 2);
  const FieldEquations fe = field_eq_residual(st);
  // the linear profile wraps at the box edge; two stencils deep is clean
  const double res = std::max(sup_norm_interior(fe.covariant.gauge, 2), sup_norm_interior(fe.simplified.gauge, 2));
  const double scale = sup_norm_interior(momentum_fields(st).pi2, 2);
  r.values.emplace_back("interior_residual", res);
  r.values.emplace_back("momentum_scale", scale);
  judge(r, res <= s.tol.exact * std::max(1.0, scale));
  return r;
}

// Pointwise delta lambda under an infinitesimal gauge transformation, with every
// derivative taken exactly so the product rule holds.
CheckRecord gauge_invariance(const Scenario& s) {
  const char* anchor = "the Lagrangian is invariant under infinitesimal gauge transformations";
  const std::optional<Subalgebra> alg = algebra_or_default(s);
  if (!alg) return skipped(anchor, "no subalgebra for this internal dimension");
  CheckRecord r = record(anchor);
  const Chart c = scenario_chart(s, s.n);
  const int m = c.dim(), n = alg->n, nn = n * n, dim = static_cast<int>(alg->basis.size());
  SectorSpec spec = s.sector;
  spec.n = n;

  auto algebra_field = [&](std::uint64_t seed, int degree, GridField& val, Gradient& grad,
                           std::vector<GridField>* second) {
    const TrigSeries ts(m, FiberSignature::internal(dim, degree), ScalarKind::real, seed, 1, 3, 0.6);
    auto expand = [&](const GridField& cf) {
      GridField out(c, FiberSignature::endo(n, degree), ScalarKind::complex);
      for (std::size_t p = 0; p < c.points(); ++p)
        for (int a = 0; a < cf.components(); ++a)
          for (int f = 0; f < nn; ++f) {
            cplx v = 0.0;
            for (int I = 0; I < dim; ++I) v += cf.at(p, a, I).real() * alg->basis[sz(I)][sz(f)];
            out.at(p, a, f) = v;
          }
      return out;
    };
    val = expand(ts.sample(c));
    grad.clear();
    for (int a = 0; a < m; ++a) grad.push_back(expand(ts.sample_derivative(c, a)));
    if (second) {
      second->clear();
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) second->push_back(expand(ts.sample_second_derivative(c, a, b)));
    }
  };

  GridField l, kv;
  Gradient dl, dk;
  std::vector<GridField> ddl;
  algebra_field(derive_seed(s.seed, 80), 0, l, dl, &ddl);
  algebra_field(derive_seed(s.seed, 81), 1, kv, dk, nullptr);
  LinearConnection kappa{kv, alg};

  Background bg = flat_background(c);
  bg.metric = build_metric(s, c);
  if (!bg.metric.constant()) bg.gamma = levi_civita(bg.metric);
  const ConnectionSet bset{nullptr, bg.metric.constant() ? nullptr : &bg.gamma, nullptr};

  GridField phi, phibar;
  Gradient dphi, dphibar;
  if (spec.has_matter()) {
    const FiberSignature ms = matter_signature(spec);
    const TrigSeries a(m, ms, ScalarKind::complex, derive_seed(s.seed, 82), 1);
    const TrigSeries b(m, ms.dual(), ScalarKind::complex, derive_seed(s.seed, 83), 1);
    phi = a.sample(c);
    phibar = b.sample(c);
    dphi = a.sample_gradient(c);
    dphibar = b.sample_gradient(c);
  }

  DFState st = prolong(spec, phi, phibar, kappa, bg, 2);
  st.rho = curvature(kappa, &dk);
  st.z2 = -1.0 * st.rho;
  const ConnectionSet full = st.connections();
  if (spec.has_matter()) {
    st.nabla_phi = covariant_derivative(phi, FiberConnection(c, phi.signature(), full), &dphi);
    st.nabla_phibar = covariant_derivative(phibar, FiberConnection(c, phibar.signature(), full), &dphibar);
  }

  // d_b(delta kappa_a) = d_b d_a l - [d_b kappa_a, l] - [kappa_a, d_b l]
  const VariationPair vk = gauge_variation(l, spec.has_matter() ? phi : l, kappa, &dl);
  Gradient d_dk(sz(m), vk.dkappa);
  for (int b = 0; b < m; ++b) {
    GridField& out = d_dk[sz(b)];
    for (std::size_t p = 0; p < c.points(); ++p)
      for (int a = 0; a < m; ++a) {
        const cplx* K = &kappa.k.at(p, a, 0);
        const cplx* dK = &dk[sz(b)].at(p, a, 0);
        const cplx* L = &l.at(p, 0, 0);
        const cplx* dL = &dl[sz(b)].at(p, 0, 0);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            cplx v = ddl[sz(b * m + a)].at(p, 0, i * n + j);
            for (int q = 0; q < n; ++q) {
              v -= dK[i * n + q] * L[q * n + j] - L[i * n + q] * dK[q * n + j];
              v -= K[i * n + q] * dL[q * n + j] - dL[i * n + q] * K[q * n + j];
            }
            out.at(p, a, i * n + j) = v;
          }
      }
  }

  GridField dy, dybar, dz1, dz1bar;
  GridField drho;
  if (spec.has_matter()) {
    auto product = [&](const GridField& f, const Gradient& df) {
      Gradient out;
      for (int b = 0; b < m; ++b) out.push_back(internal_action(dl[sz(b)], f) + internal_action(l, df[sz(b)]));
      return out;
    };
    const Gradient dlp = product(phi, dphi), dlpb = product(phibar, dphibar);
    dy = internal_action(l, phi);
    dybar = internal_action(l, phibar);
    const ProlongVariation pv = variation_prolong({dy, vk.dkappa}, phi, kappa, bset, &dlp, &d_dk);
    const ProlongVariation pvb = variation_prolong({dybar, vk.dkappa}, phibar, kappa, bset, &dlpb, &d_dk);
    dz1 = pv.dnabla_phi;
    dz1bar = pvb.dnabla_phi;
    drho = pv.drho;
  } else {
    drho = -1.0 * d_kappa_lie(vk.dkappa, kappa, LieMode::linear, &d_dk);
  }

  const int F = spec.matter_dim();
  const int pairs = binomial(m, 2);
  double worst = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < c.points(); ++p) {
    const FiberPoint pt = st.fiber_point(p);
    const Momenta M = momenta_analytic(spec, pt);
    cplx dl_total = 0.0;
    double mag = 0.0;
    auto add = [&](cplx term) {
      dl_total += term;
      mag = std::max(mag, std::abs(term));
    };
    for (int I = 0; I < (spec.has_matter() ? F : 0); ++I) {
      add(M.pi0[sz(I)] * dy.at(p, 0, I));
      add(M.pi0bar[sz(I)] * dybar.at(p, 0, I));
      for (int a = 0; a < m; ++a) {
        add(M.pi1[sz(a * F + I)] * dz1.at(p, a, I));
        add(M.pi1bar[sz(a * F + I)] * dz1bar.at(p, a, I));
      }
    }
    for (int q = 0; q < pairs; ++q)
      for (int f = 0; f < nn; ++f) add(-M.pi2[sz(q * nn + f)] * drho.at(p, q, f));
    worst = std::max(worst, std::abs(dl_total));
    scale = std::max(scale, mag);
  }
  r.values.emplace_back("max_abs_delta_lambda", worst);
  r.values.emplace_back("term_scale", scale);
  r.note = "subalgebra " + alg->name;
  judge(r, worst <= s.tol.identity * std::max(1.0, scale));
  return r;
}

std::vector<Check> field_equation_checks(const Scenario& s) {
  std::vector<Check> out;
  const bool gravity = s.sector.sector == Sector::gravity;
  auto scenario_check = [&](const std::string& name, const char* anchor, CheckRecord (*fn)(const Scenario&)) {
    if (gravity) {
      out.push_back({name, [anchor] { return skipped(anchor, kNoMatterState); }});
    } else {
      out.push_back({name, [s, fn] { return fn(s); }});
    }
  };
  scenario_check("field_equations.covariant_vs_simplified", "covariant field equations equal their simplified coordinate form",
                 covariant_vs_simplified);
  scenario_check("field_equations.action_oracle", "field equations are the variation of the discrete action", action_oracle);
  scenario_check("field_equations.local_vs_full", "stencil-local action variation is bit-identical to full re-evaluation",
                 local_vs_full);
  out.push_back({"field_equations.klein_gordon", [s] {
                   return converge(s, "a Klein-Gordon plane wave with k.k = m^2 solves the boson equations",
                                   [&](int N) { return klein_gordon_level(s, N); });
                 }});
  out.push_back({"field_equations.dirac", [s] {
                   if (s.m != 4) return skipped("a Dirac plane wave solves the Dirac equation", "needs m = 4");
                   return converge(s, "a Dirac plane wave solves the Dirac equation",
                                   [&](int N) { return dirac_level(s, N); });
                 }});
  out.push_back({"field_equations.abelian_vacuum", [s] { return abelian_vacuum(s); }});
  scenario_check("field_equations.gauge_invariance", "the Lagrangian is invariant under infinitesimal gauge transformations",
                 gauge_invariance);
  return out;
}

// ---- energy ------------------------------------------------------------------

CheckRecord energy_generic_vs_closed(const Scenario& s) {
  CheckRecord r = record("canonical energy tensor: lambda delta minus momenta contracted with the prolongation");
  const DFState st = build_state(s, scenario_chart(s, s.n));
  const EnergyTensors E = canonical_energy_tensor(st);
  const double e = rel(max_abs_diff(E.generic, E.closed_form), std::max(1.0, sup_norm(E.generic)));
  r.values.emplace_back("relative", e);
  judge(r, e <= s.tol.identity);
  return r;
}

CheckRecord energy_relation(const Scenario& s) {
  const char* anchor = "symmetrized canonical energy tensor = 4 T sqrt|g|, T the coefficient of delta g_ab";
  if (s.sector.sector == Sector::dirac) return skipped(anchor, "Dirac T is defined through this relation");
  CheckRecord r = record(anchor);
  const Chart c = scenario_chart(s, s.n);
  const DFState st = build_state(s, c);
  const StressEnergy T = stress_energy_tensor(st);
  const int m = c.dim();
  double dev = 0.0;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int k = 0; k < m * m; ++k)
      dev = std::max(dev, std::abs(T.u_sym.at(p, 0, k) - 4.0 * T.t_low.at(p, 0, k) * st.bg.metric.sqrt_abs_det(p)));
  const double e = rel(dev, std::max(1.0, sup_norm(T.u_sym)));
  r.values.emplace_back("relative", e);
  r.note = "sign follows from T multiplying delta g_ab; see README";
  judge(r, e <= s.tol.identity);
  return r;
}

CheckRecord energy_symmetric(const Scenario& s) {
  CheckRecord r = record("the stress-energy tensor is symmetric");
  const Chart c = scenario_chart(s, s.n);
  const DFState st = build_state(s, c);
  if (st.spec.sector == Sector::dirac && !st.bg.metric.constant())
    return skipped(r.anchor, "Dirac T needs a constant metric");
  const StressEnergy T = stress_energy_tensor(st);
  const int m = c.dim();
  double dev = 0.0;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) dev = std::max(dev, std::abs(T.t.at(p, 0, a * m + b) - T.t.at(p, 0, b * m + a)));
  const double e = rel(dev, std::max(1.0, sup_norm(T.t)));
  r.values.emplace_back("relative", e);
  judge(r, e <= s.tol.exact);
  return r;
}

CheckRecord energy_off_shell(const Scenario& s) {
  CheckRecord r = record("off shell the divergence of T does not vanish");
  const Chart c = scenario_chart(s, s.n);
  SectorSpec spec;
  spec.sector = Sector::boson;
  spec.m = s.m;
  spec.n = 1;
  spec.mass = 1.0;
  const FiberSignature ms = matter_signature(spec);
  const GridField phi = make_trig_field(c, ms, derive_seed(s.seed, 90), 1, ScalarKind::complex);
  const GridField phibar = make_trig_field(c, ms.dual(), derive_seed(s.seed, 91), 1, ScalarKind::complex);
  const DFState st = prolong(spec, phi, phibar, LinearConnection::zero(c, 1), flat_background(c), 2);
  const StressEnergy T = stress_energy_tensor(st);
  const double div = sup_norm(divergence_of_T(T.t, SpacetimeConnection::zero(c)));
  const double ratio = rel(div, sup_norm(T.t) * wavenumber(c));
  r.values.emplace_back("relative_divergence", ratio);
  judge(r, ratio >= 1e-3);
  return r;
}

CheckRecord noether_horizontal(const Scenario& s) {
  CheckRecord r = record("with w = 0 the current is the canonical energy tensor contracted with u");
  const Chart c = scenario_chart(s, s.n);
  const int m = c.dim();
  const DFState st = build_state(s, c);
  const GridField u = vector_field(c, derive_seed(s.seed, 95));
  const GridField I = noether_current(u, Vertical{}, st);
  const GridField U = canonical_energy_tensor(st).generic;
  double dev = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a) {
      cplx v = 0.0;
      for (int b = 0; b < m; ++b) v += u.at(p, 0, b) * U.at(p, 0, a * m + b);
      dev = std::max(dev, std::abs(I.at(p, a, 0) - v));
      scale = std::max(scale, std::abs(v));
    }
  r.values.emplace_back("max_abs_deviation", dev);
  r.values.emplace_back("scale", scale);
  judge(r, dev <= s.tol.exact * std::max(1.0, scale));
  return r;
}

std::vector<Check> energy_checks(const Scenario& s) {
  std::vector<Check> out;
  const bool gravity = s.sector.sector == Sector::gravity;
  auto scenario_check = [&](const std::string& name, const char* anchor, CheckRecord (*fn)(const Scenario&)) {
    if (gravity) {
      out.push_back({name, [anchor] { return skipped(anchor, kNoMatterState); }});
    } else {
      out.push_back({name, [s, fn] { return fn(s); }});
    }
  };
  scenario_check("energy.generic_vs_closed", "canonical energy tensor: lambda delta minus momenta contracted with the prolongation",
                 energy_generic_vs_closed);
  scenario_check("energy.relation", "symmetrized canonical energy tensor = 4 T sqrt|g|, T the coefficient of delta g_ab",
                 energy_relation);
  scenario_check("energy.t_symmetric", "the stress-energy tensor is symmetric", energy_symmetric);
  out.push_back({"energy.conservation", [s] {
                   return converge(s, "on shell the stress-energy tensor is divergence-free",
                                   [&](int N) { return conservation_level(s, N); });
                 }});
  out.push_back({"energy.off_shell", [s] { return energy_off_shell(s); }});
  scenario_check("energy.noether_horizontal", "with w = 0 the current is the canonical energy tensor contracted with u",
                 noether_horizontal);
  out.push_back({"energy.gauge_current", [s] {
                   return converge(s, "on shell the gauge current is divergence-free",
                                   [&](int N) { return gauge_current_level(s, N); });
                 }});
  return out;
}

// ---- gravity -----------------------------------------------------------------

CheckRecord gravity_minkowski(const Scenario& s) {
  CheckRecord r = record("flat metric: every gravity residual vanishes");
  const Chart c = scenario_chart(s, s.n);
  const Metric g = Metric::minkowski(c);
  const GravityResiduals gr = gravity_residuals(g, levi_civita(g), nullptr);
  const double worst = std::max({sup_norm(gr.einstein), sup_norm(gr.g_residual), sup_norm(gr.gamma_residual),
                                 sup_norm(gr.metricity)});
  r.values.emplace_back("max_abs_residual", worst);
  judge(r, worst <= s.tol.exact);
  return r;
}

CheckRecord gravity_compare(const Scenario& s, bool pattern) {
  CheckRecord r = record(pattern ? "Gamma-sector residual = metricity pattern of g^{-1} sqrt|g| for torsion-free Gamma"
                                 : "Gamma-sector residual through the dual connection = explicit coordinate loops");
  const Chart c = scenario_chart(s, s.n);
  const Metric g = gravity_metric(s, c);
  const GravityResiduals gr = gravity_residuals(g, levi_civita(g), nullptr);
  const GridField& other = pattern ? gr.metricity_pattern : gr.gamma_explicit;
  const double e = rel(max_abs_diff(gr.gamma_residual, other), std::max(1.0, sup_norm(gr.gamma_residual)));
  r.values.emplace_back("relative", e);
  judge(r, e <= s.tol.identity);
  return r;
}

CheckRecord einstein_symmetric(const Scenario& s) {
  CheckRecord r = record("the Einstein tensor from the metric slot is symmetric");
  const Chart c = scenario_chart(s, s.n);
  const int m = c.dim();
  const Metric g = gravity_metric(s, c);
  const GravityResiduals gr = gravity_residuals(g, levi_civita(g), nullptr);
  double dev = 0.0;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        dev = std::max(dev, std::abs(gr.einstein.at(p, 0, a * m + b) - gr.einstein.at(p, 0, b * m + a)));
  const double e = rel(dev, std::max(1.0, sup_norm(gr.einstein)));
  r.values.emplace_back("relative", e);
  judge(r, e <= s.tol.exact);
  return r;
}

std::vector<Check> gravity_checks(const Scenario& s) {
  std::vector<Check> out;
  out.push_back({"gravity.minkowski", [s] { return gravity_minkowski(s); }});
  out.push_back({"gravity.einstein", [s] {
                   return converge(s, "Einstein tensor from finite-difference Christoffels approaches the exact one",
                                   [&](int N) { return einstein_level(s, N); });
                 }});
  out.push_back({"gravity.gamma_residual", [s] {
                   return converge(s, "exact Levi-Civita input makes the Gamma-sector residual of an FRW metric vanish",
                                   [&](int N) { return gamma_level(s, N); });
                 }});
  out.push_back({"gravity.metricity_pattern", [s] { return gravity_compare(s, true); }});
  out.push_back({"gravity.gamma_explicit", [s] { return gravity_compare(s, false); }});
  out.push_back({"gravity.einstein_symmetric", [s] { return einstein_symmetric(s); }});
  return out;
}

}  // namespace

std::vector<Check> suite_checks(const Scenario& s, const std::string& suite) {
  if (suite == "identities") return identity_checks(s);
  if (suite == "momenta") return momenta_checks(s);
  if (suite == "field-equations") return field_equation_checks(s);
  if (suite == "energy") return energy_checks(s);
  if (suite == "gravity") return gravity_checks(s);
  throw Error("unknown suite '" + suite + "'");
}

LevelResult study_level(const Scenario& s, const std::string& study, int points) {
  if (study == "replacement") {
    LevelResult worst{0.0, 0.0};
    for (int deg = 1; deg <= 3; ++deg) {
      const LevelResult l = replacement_level(s, points, deg, s.connection.spacetime);
      worst.residual = std::max(worst.residual, l.residual);
      worst.scale = std::max(worst.scale, l.scale);
    }
    return worst;
  }
  if (study == "curvature") return curvature_level(s, points);
  if (study == "klein-gordon") return klein_gordon_level(s, points);
  if (study == "dirac") return dirac_level(s, points);
  if (study == "conservation") return conservation_level(s, points);
  if (study == "gauge-current") return gauge_current_level(s, points);
  if (study == "einstein") return einstein_level(s, points);
  if (study == "gamma") return gamma_level(s, points);
  throw Error("unknown study '" + study + "'");
}

}  // namespace covform
