#include "covform/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "covform/parallel.hpp"

namespace covform {

namespace {

const cplx I{0.0, 1.0};

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

ScalarKind join(ScalarKind a, ScalarKind b) {
  return a == ScalarKind::complex || b == ScalarKind::complex ? ScalarKind::complex : ScalarKind::real;
}

// Matter index I split into the internal index i and the other factor index A.
struct MatterLayout {
  int n = 1, D = 1;
  bool internal_slow = true;
  explicit MatterLayout(const SectorSpec& spec) : n(spec.n) {
    if (spec.sector == Sector::dirac) {
      D = 4;
      internal_slow = false;
    } else {
      D = spec.dim_y();
    }
  }
  int index(int i, int A) const { return internal_slow ? i * D + A : A * n + i; }
};

PointMetric point_metric(const Metric& g, std::size_t p) {
  const int m = g.dim();
  PointMetric pm;
  pm.m = m;
  pm.g.resize(sz(m * m));
  pm.ginv.assign(g.ginv_point(p), g.ginv_point(p) + m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) pm.g[sz(a * m + b)] = g.g(p, a, b);
  pm.sqrtg = g.sqrt_abs_det(p);
  return pm;
}

// all-index value of a sorted 2-slot field: sign and stored component
struct PairRef {
  int comp = -1;
  double sign = 0.0;
};

std::vector<PairRef> pair_table(int m) {
  const IndexSet& pairs = index_set(m, 2);
  std::vector<PairRef> t(sz(m * m));
  for (int q = 0; q < pairs.size(); ++q) {
    const auto ab = pairs.indices(q);
    t[sz(ab[0] * m + ab[1])] = {q, 1.0};
    t[sz(ab[1] * m + ab[0])] = {q, -1.0};
  }
  return t;
}

ScalarKind state_kind(const DFState& s) {
  ScalarKind k = s.kappa.k.kind();
  if (!s.phi.empty()) k = join(k, s.phi.kind());
  if (!s.phibar.empty()) k = join(k, s.phibar.kind());
  if (s.spec.sector == Sector::dirac) k = ScalarKind::complex;
  return k;
}

FiberSignature tensor_sig(std::vector<Factor> f) { return FiberSignature{std::move(f), 0, Rep::standard}; }

bool has_gamma(const Background& bg) { return !bg.gamma.gamma.empty(); }

}  // namespace

Background flat_background(const Chart& chart) {
  return {Metric::minkowski(chart), SpacetimeConnection::zero(chart), SpinorConnection::zero(chart)};
}

ConnectionSet DFState::connections() const {
  ConnectionSet set;
  set.kappa = &kappa;
  if (has_gamma(bg)) set.gamma = &bg.gamma;
  if (!bg.spin.k.empty()) set.spin = &bg.spin;
  return set;
}

FiberPoint DFState::fiber_point(std::size_t p) const {
  FiberPoint pt = zero_fiber_point(spec);
  const int m = spec.m;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) pt.g[sz(a * m + b)] = bg.metric.g(p, a, b);
  auto copy = [p](const GridField& f, std::vector<cplx>& dst) {
    if (f.empty()) return;
    std::copy(f.point(p), f.point(p) + f.per_point(), dst.begin());
  };
  copy(phi, pt.y);
  copy(phibar, pt.ybar);
  copy(nabla_phi, pt.z1);
  copy(nabla_phibar, pt.z1bar);
  copy(z2, pt.z2);
  copy(kappa.k, pt.kappa);
  return pt;
}

DFState prolong(const SectorSpec& spec, const GridField& phi, const GridField& phibar, const LinearConnection& kappa,
                const Background& bg, int order) {
  if (spec.sector == Sector::gravity) throw Error("prolong: the gravity sector uses gravity_residuals");
  const Chart& c = kappa.chart();
  if (c.dim() != spec.m) throw Error("prolong: chart dimension does not match the sector");
  if (kappa.n() != spec.n) throw Error("prolong: connection dimension does not match the sector");
  if (!(bg.metric.chart() == c)) throw Error("prolong: metric lives on a different chart");
  if (has_gamma(bg) && !(bg.gamma.chart() == c)) throw Error("prolong: spacetime connection lives on a different chart");
  DFState s;
  s.spec = spec;
  s.bg = bg;
  s.kappa = kappa;
  s.order = order;
  if (spec.has_matter()) {
    const FiberSignature ms = matter_signature(spec);
    if (phi.signature() != ms) throw Error("prolong: phi signature " + phi.signature().describe() + ", expected " + ms.describe());
    if (phibar.signature() != ms.dual())
      throw Error("prolong: phibar signature " + phibar.signature().describe() + ", expected " + ms.dual().describe());
    if (!(phi.chart() == c) || !(phibar.chart() == c)) throw Error("prolong: matter fields live on a different chart");
    s.phi = phi;
    s.phibar = phibar;
    const ConnectionSet set = s.connections();
    s.nabla_phi = covariant_derivative(phi, FiberConnection(c, phi.signature(), set), nullptr, order);
    s.nabla_phibar = covariant_derivative(phibar, FiberConnection(c, phibar.signature(), set), nullptr, order);
  } else if (!phi.empty() || !phibar.empty()) {
    throw Error("prolong: the gauge sector takes no matter field");
  }
  s.rho = curvature(kappa, nullptr, order);
  s.z2 = -1.0 * s.rho;
  return s;
}

void prolong_point(const DFState& s, const GridField& phi, const GridField& phibar, const GridField& k,
                   std::size_t p, FiberPoint& out) {
  const SectorSpec& spec = s.spec;
  const int m = spec.m, n = spec.n, nn = n * n;
  if (out.z2.size() != sz(binomial(m, 2) * nn)) out = zero_fiber_point(spec);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) out.g[sz(a * m + b)] = s.bg.metric.g(p, a, b);
  const cplx* kp = k.point(p);
  std::copy(kp, kp + m * nn, out.kappa.begin());
  if (spec.has_matter()) {
    const MatterLayout L(spec);
    const int F = spec.matter_dim();
    const bool gam = spec.sector == Sector::boson && spec.tangent_y && has_gamma(s.bg);
    const bool spin = spec.sector == Sector::dirac && !s.bg.spin.k.empty();
    const cplx* y = phi.point(p);
    const cplx* yb = phibar.point(p);
    std::copy(y, y + F, out.y.begin());
    std::copy(yb, yb + F, out.ybar.begin());
    for (int a = 0; a < m; ++a) {
      const cplx* ka = kp + a * nn;
      for (int i = 0; i < n; ++i)
        for (int A = 0; A < L.D; ++A) {
          const int Ix = L.index(i, A);
          cplx z = stencil_derivative(phi, p, sz(Ix), a, s.order);
          cplx zb = stencil_derivative(phibar, p, sz(Ix), a, s.order);
          for (int j = 0; j < n; ++j) {
            z -= ka[i * n + j] * y[L.index(j, A)];
            zb += ka[j * n + i] * yb[L.index(j, A)];
          }
          for (int B = 0; B < L.D; ++B) {
            if (gam) {
              z += s.bg.gamma.G(p, A, a, B) * y[L.index(i, B)];
              zb -= s.bg.gamma.G(p, B, a, A) * yb[L.index(i, B)];
            } else if (spin) {
              const cplx* S = s.bg.spin.k.point(p) + a * 16;
              z -= S[A * 4 + B] * y[L.index(i, B)];
              zb += S[B * 4 + A] * yb[L.index(i, B)];
            }
          }
          out.z1[sz(a * F + Ix)] = z;
          out.z1bar[sz(a * F + Ix)] = zb;
        }
    }
  }
  // z2 = d_a k_b - d_b k_a - [k_a, k_b]
  const IndexSet& pairs = index_set(m, 2);
  for (int q = 0; q < pairs.size(); ++q) {
    const auto ab = pairs.indices(q);
    const int a = ab[0], b = ab[1];
    const cplx* ka = kp + a * nn;
    const cplx* kb = kp + b * nn;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx v = stencil_derivative(k, p, sz(b * nn + i * n + j), a, s.order) -
                 stencil_derivative(k, p, sz(a * nn + i * n + j), b, s.order);
        for (int h = 0; h < n; ++h) v -= ka[i * n + h] * kb[h * n + j] - kb[i * n + h] * ka[h * n + j];
        out.z2[sz(q * nn + i * n + j)] = v;
      }
  }
}

MomentumFields momentum_fields(const DFState& s) {
  const Chart& c = s.chart();
  const int m = c.dim();
  const ScalarKind kind = state_kind(s);
  MomentumFields M;
  M.pi2 = GridField(c, FiberSignature::endo(s.spec.n, m - 2, Rep::complementary), kind);
  if (s.spec.has_matter()) {
    const FiberSignature ms = matter_signature(s.spec);
    M.pi0 = GridField(c, ms.dual().with_degree(m, Rep::complementary), kind);
    M.pi1 = GridField(c, ms.dual().with_degree(m - 1, Rep::complementary), kind);
    M.pi0bar = GridField(c, ms.with_degree(m, Rep::complementary), kind);
    M.pi1bar = GridField(c, ms.with_degree(m - 1, Rep::complementary), kind);
  }
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const FiberPoint pt = s.fiber_point(p);
      const Momenta P = momenta_analytic(s.spec, pt, point_metric(s.bg.metric, p));
      std::copy(P.pi2.begin(), P.pi2.end(), M.pi2.point(p));
      if (!s.spec.has_matter()) continue;
      std::copy(P.pi0.begin(), P.pi0.end(), M.pi0.point(p));
      std::copy(P.pi1.begin(), P.pi1.end(), M.pi1.point(p));
      std::copy(P.pi0bar.begin(), P.pi0bar.end(), M.pi0bar.point(p));
      std::copy(P.pi1bar.begin(), P.pi1bar.end(), M.pi1bar.point(p));
    }
  });
  return M;
}

GridField lambda_field(const DFState& s) {
  const Chart& c = s.chart();
  GridField out(c, FiberSignature::scalar(c.dim(), Rep::complementary), state_kind(s));
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      out.at(p, 0, 0) = sector_lambda(s.spec, s.fiber_point(p), point_metric(s.bg.metric, p));
  });
  return out;
}

GridField contravariant_momentum(const GridField& pi1, const Metric& g) {
  GridField out = pi1;
  for (std::size_t p = 0; p < out.chart().points(); ++p) {
    const double w = -1.0 / g.sqrt_abs_det(p);
    for (std::size_t k = 0; k < out.per_point(); ++k) out.point(p)[k] *= w;
  }
  return out;
}

namespace {

Residuals covariant_residuals(const DFState& s, const MomentumFields& M) {
  const Chart& c = s.chart();
  const ConnectionSet set = s.connections();
  Residuals R;
  const FiberConnection Kend = FiberConnection(c, M.pi2.signature(), set).dual();
  R.gauge = -1.0 * d_kappa_basic(M.pi2, Kend, nullptr, s.order);
  if (!s.spec.has_matter()) return R;
  const FiberConnection Kphi(c, s.phi.signature(), set);
  R.matter = M.pi0 - d_kappa_basic(M.pi1, Kphi.dual(), nullptr, s.order);
  R.matter_bar = M.pi0bar - d_kappa_basic(M.pi1bar, Kphi, nullptr, s.order);
  const MatterLayout L(s.spec);
  const int m = c.dim(), n = s.spec.n;
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int b = 0; b < m; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            cplx v{};
            for (int A = 0; A < L.D; ++A) {
              v += M.pi1.at(p, b, L.index(i, A)) * s.phi.at(p, 0, L.index(j, A));
              v -= M.pi1bar.at(p, b, L.index(j, A)) * s.phibar.at(p, 0, L.index(i, A));
            }
            R.gauge.at(p, b, i * n + j) += v;
          }
  });
  return R;
}

Residuals simplified_residuals(const DFState& s, const MomentumFields& M) {
  const Chart& c = s.chart();
  const int m = c.dim(), n = s.spec.n, nn = n * n;
  const auto pt = pair_table(m);
  Gradient d2 = gradient(M.pi2, s.order);
  Residuals R;
  R.gauge = GridField(c, FiberSignature::endo(n, m - 1, Rep::complementary), M.pi2.kind());
  const bool matter = s.spec.has_matter();
  Gradient d1, d1b;
  if (matter) {
    d1 = gradient(M.pi1, s.order);
    d1b = gradient(M.pi1bar, s.order);
    R.matter = M.pi0;
    R.matter_bar = M.pi0bar;
  }
  const MatterLayout L(s.spec);
  const bool gam = s.spec.sector == Sector::boson && s.spec.tangent_y && has_gamma(s.bg);
  const bool spin = s.spec.sector == Sector::dirac && !s.bg.spin.k.empty();
  // "other factor" block of the primal connection, K_a[A][B]
  auto other = [&](std::size_t p, int a, int A, int B) -> cplx {
    if (gam) return -s.bg.gamma.G(p, A, a, B);
    if (spin) return s.bg.spin.k.at(p, a, A * 4 + B);
    return 0.0;
  };
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const cplx* kp = s.kappa.k.point(p);
      for (int b = 0; b < m; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            cplx v{};
            for (int a = 0; a < m; ++a) {
              const PairRef r = pt[sz(a * m + b)];
              if (r.comp < 0) continue;
              const cplx* ka = kp + a * nn;
              const cplx* C = M.pi2.point(p) + r.comp * nn;
              v += r.sign * d2[sz(a)].at(p, r.comp, i * n + j);
              for (int h = 0; h < n; ++h) v += r.sign * (ka[h * n + i] * C[h * n + j] - C[i * n + h] * ka[j * n + h]);
            }
            if (matter)
              for (int A = 0; A < L.D; ++A) {
                v += M.pi1.at(p, b, L.index(i, A)) * s.phi.at(p, 0, L.index(j, A));
                v -= M.pi1bar.at(p, b, L.index(j, A)) * s.phibar.at(p, 0, L.index(i, A));
              }
            R.gauge.at(p, b, i * n + j) = v;
          }
      if (!matter) continue;
      for (int j = 0; j < n; ++j)
        for (int B = 0; B < L.D; ++B) {
          const int Jx = L.index(j, B);
          cplx e = M.pi0.at(p, 0, Jx);
          cplx eb = M.pi0bar.at(p, 0, Jx);
          for (int a = 0; a < m; ++a) {
            const cplx* ka = kp + a * nn;
            e -= d1[sz(a)].at(p, a, Jx);
            eb -= d1b[sz(a)].at(p, a, Jx);
            for (int i = 0; i < n; ++i) {
              e -= ka[i * n + j] * M.pi1.at(p, a, L.index(i, B));
              eb += ka[j * n + i] * M.pi1bar.at(p, a, L.index(i, B));
            }
            for (int A = 0; A < L.D; ++A) {
              e -= other(p, a, A, B) * M.pi1.at(p, a, L.index(j, A));
              eb += other(p, a, B, A) * M.pi1bar.at(p, a, L.index(j, A));
            }
          }
          R.matter.at(p, 0, Jx) = e;
          R.matter_bar.at(p, 0, Jx) = eb;
        }
    }
  });
  return R;
}

}  // namespace

FieldEquations field_eq_residual(const DFState& s) {
  const MomentumFields M = momentum_fields(s);
  return {covariant_residuals(s, M), simplified_residuals(s, M)};
}

DiracResiduals dirac_residual(const DFState& s) {
  if (s.spec.sector != Sector::dirac) throw Error("dirac_residual: Dirac sector only");
  const Chart& c = s.chart();
  const int m = c.dim(), n = s.spec.n;
  std::vector<Matrix> gl;
  for (int a = 0; a < m; ++a) gl.push_back(gamma_lower(a));
  DiracResiduals R{GridField(c, s.phi.signature(), ScalarKind::complex),
                   GridField(c, s.phibar.signature(), ScalarKind::complex)};
  const bool tor = has_gamma(s.bg);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int al = 0; al < 4; ++al)
        for (int i = 0; i < n; ++i) {
          cplx e = -s.spec.mass * s.phi.at(p, 0, al * n + i);
          cplx eb = -s.spec.mass * s.phibar.at(p, 0, al * n + i);
          for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
              const double gab = s.bg.metric.ginv(p, a, b);
              if (gab == 0.0) continue;
              const cplx tau_a = tor ? s.bg.gamma.tau.at(p, a, 0) : 0.0;
              for (int be = 0; be < 4; ++be) {
                e += I * gab * gl[sz(a)][sz(al * 4 + be)] * s.nabla_phi.at(p, b, be * n + i);
                e += 0.5 * I * gab * tau_a * gl[sz(b)][sz(al * 4 + be)] * s.phi.at(p, 0, be * n + i);
                eb -= I * gab * s.nabla_phibar.at(p, b, be * n + i) * gl[sz(a)][sz(be * 4 + al)];
                eb -= 0.5 * I * gab * tau_a * s.phibar.at(p, 0, be * n + i) * gl[sz(b)][sz(be * 4 + al)];
              }
            }
          R.psi.at(p, 0, al * n + i) = e;
          R.psibar.at(p, 0, al * n + i) = eb;
        }
  });
  return R;
}

MetricJet frw_jet(const Chart& chart, double amplitude) {
  const int m = chart.dim();
  MetricJet J;
  J.g = Metric::frw(chart, amplitude);
  const FiberSignature gs = tensor_sig({cotangent(), cotangent()});
  for (int a = 0; a < m; ++a) J.dg.emplace_back(chart, gs);
  for (int k = 0; k < m * m; ++k) J.ddg.emplace_back(chart, gs);
  const double w = 2.0 * std::numbers::pi / chart.period();
  for (std::size_t p = 0; p < chart.points(); ++p) {
    const double t = chart.coordinate(p, 0);
    const double a = 1.0 + amplitude * std::sin(w * t);
    const double da = amplitude * w * std::cos(w * t);
    const double dda = -amplitude * w * w * std::sin(w * t);
    for (int i = 1; i < m; ++i) {
      J.dg[0].at(p, 0, i * m + i) = -2.0 * a * da;
      J.ddg[0].at(p, 0, i * m + i) = -2.0 * (da * da + a * dda);
    }
  }
  return J;
}

MetricJet sampled_jet(const Chart& chart, std::uint64_t seed, double amplitude) {
  const int m = chart.dim();
  MetricJet J;
  J.g = Metric::sampled(chart, seed, amplitude);
  // same series as Metric::sampled, differentiated exactly and symmetrized the same way
  const TrigSeries ts = trig_series(chart, J.g.field().signature(), seed, 1, ScalarKind::real, amplitude);
  const FiberSignature gs = tensor_sig({cotangent(), cotangent()});
  auto sym = [&](const GridField& d) {
    GridField out(chart, gs);
    for (std::size_t p = 0; p < chart.points(); ++p)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out.at(p, 0, a * m + b) = 0.5 * (d.at(p, 0, a * m + b) + d.at(p, 0, b * m + a)).real();
    return out;
  };
  for (int a = 0; a < m; ++a) J.dg.push_back(sym(ts.sample_derivative(chart, a)));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) J.ddg.push_back(sym(ts.sample_second_derivative(chart, a, b)));
  return J;
}

Gradient levi_civita_gradient(const MetricJet& jet) {
  const Chart& c = jet.g.chart();
  const int m = c.dim();
  if (jet.dg.size() != sz(m) || jet.ddg.size() != sz(m * m)) throw Error("levi_civita_gradient: incomplete metric jet");
  Gradient out;
  const FiberSignature gs = tensor_sig({tangent(), cotangent(), cotangent()});
  for (int e = 0; e < m; ++e) out.emplace_back(c, gs);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> low(sz(m * m * m)), dlow(sz(m * m * m)), dginv(sz(m * m));
    for (std::size_t p = lo; p < hi; ++p) {
      auto dg = [&](int e, int a, int b) { return jet.dg[sz(e)].at(p, 0, a * m + b).real(); };
      auto ddg = [&](int e, int f, int a, int b) { return jet.ddg[sz(e * m + f)].at(p, 0, a * m + b).real(); };
      for (int d = 0; d < m; ++d)
        for (int b = 0; b < m; ++b)
          for (int cc = 0; cc < m; ++cc)
            low[sz((d * m + b) * m + cc)] = 0.5 * (dg(b, d, cc) + dg(cc, d, b) - dg(d, b, cc));
      for (int e = 0; e < m; ++e) {
        for (int a = 0; a < m; ++a)
          for (int d = 0; d < m; ++d) {
            double v = 0.0;
            for (int x = 0; x < m; ++x)
              for (int y = 0; y < m; ++y) v -= jet.g.ginv(p, a, x) * dg(e, x, y) * jet.g.ginv(p, y, d);
            dginv[sz(a * m + d)] = v;
          }
        for (int d = 0; d < m; ++d)
          for (int b = 0; b < m; ++b)
            for (int cc = 0; cc < m; ++cc)
              dlow[sz((d * m + b) * m + cc)] = 0.5 * (ddg(e, b, d, cc) + ddg(e, cc, d, b) - ddg(e, d, b, cc));
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b)
            for (int cc = 0; cc < m; ++cc) {
              double v = 0.0;
              for (int d = 0; d < m; ++d)
                v += dginv[sz(a * m + d)] * low[sz((d * m + b) * m + cc)] +
                     jet.g.ginv(p, a, d) * dlow[sz((d * m + b) * m + cc)];
              out[sz(e)].at(p, 0, (a * m + b) * m + cc) = v;
            }
      }
    }
  });
  return out;
}

GravityResiduals gravity_residuals(const Metric& g, const SpacetimeConnection& gamma, const Gradient* dgamma, int order) {
  const Chart& c = g.chart();
  const int m = c.dim(), mm = m * m;
  if (!(gamma.chart() == c)) throw Error("gravity_residuals: connection lives on a different chart");
  SectorSpec spec;
  spec.sector = Sector::gravity;
  spec.m = m;
  // the tangent fiber connection as an End(TM) 1-form: kappa^c_{ad} = -G^c_{ad}
  LinearConnection kappa{GridField(c, FiberSignature::endo(m, 1)), std::nullopt};
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a)
      for (int cc = 0; cc < m; ++cc)
        for (int d = 0; d < m; ++d) kappa.k.at(p, a, cc * m + d) = -gamma.G(p, cc, a, d);
  Gradient dk;
  if (dgamma) {
    if (dgamma->size() != sz(m)) throw Error("gravity_residuals: need one connection derivative per axis");
    for (int e = 0; e < m; ++e) {
      GridField f(c, FiberSignature::endo(m, 1));
      for (std::size_t p = 0; p < c.points(); ++p)
        for (int a = 0; a < m; ++a)
          for (int cc = 0; cc < m; ++cc)
            for (int d = 0; d < m; ++d) f.at(p, a, cc * m + d) = -(*dgamma)[sz(e)].at(p, 0, (cc * m + a) * m + d);
      dk.push_back(std::move(f));
    }
  }
  const GridField R = curvature(kappa, dgamma ? &dk : nullptr, order);

  GravityResiduals out;
  const FiberSignature up2 = tensor_sig({tangent(), tangent()});
  out.einstein = GridField(c, up2);
  out.g_residual = GridField(c, up2);
  GridField pi2(c, FiberSignature::endo(m, m - 2, Rep::complementary));
  GridField h(c, up2);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    FiberPoint pt = zero_fiber_point(spec);
    for (std::size_t p = lo; p < hi; ++p) {
      const PointMetric pm = point_metric(g, p);
      for (std::size_t k = 0; k < pt.z2.size(); ++k) pt.z2[k] = -R.point(p)[k];
      const Momenta M = momenta_analytic(spec, pt, pm);
      for (int k = 0; k < mm; ++k) {
        out.g_residual.at(p, 0, k) = M.dg[sz(k)];
        out.einstein.at(p, 0, k) = M.dg[sz(k)] / pm.sqrtg;
        h.at(p, 0, k) = pm.ginv[sz(k)] * pm.sqrtg;
      }
      std::copy(M.pi2.begin(), M.pi2.end(), pi2.point(p));
    }
  });
  const FiberConnection Kend = FiberConnection(c, pi2.signature(), ConnectionSet{&kappa}).dual();
  out.gamma_residual = -1.0 * d_kappa_basic(pi2, Kend, nullptr, order);

  const auto ptab = pair_table(m);
  const Gradient d2 = gradient(pi2, order);
  const Gradient dh = gradient(h, order);
  out.gamma_explicit = GridField(c, FiberSignature::endo(m, m - 1, Rep::complementary));
  out.metricity = GridField(c, tensor_sig({cotangent(), tangent(), tangent()}));
  out.metricity_pattern = GridField(c, FiberSignature::endo(m, m - 1, Rep::complementary));
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      for (int b = 0; b < m; ++b)
        for (int cc = 0; cc < m; ++cc)
          for (int d = 0; d < m; ++d) {
            cplx v{};
            for (int a = 0; a < m; ++a) {
              const PairRef r = ptab[sz(a * m + b)];
              if (r.comp < 0) continue;
              const cplx* C = pi2.point(p) + r.comp * mm;
              v += r.sign * d2[sz(a)].at(p, r.comp, cc * m + d);
              for (int e = 0; e < m; ++e)
                v += r.sign * (C[cc * m + e] * gamma.G(p, d, a, e) - gamma.G(p, e, a, cc) * C[e * m + d]);
            }
            out.gamma_explicit.at(p, b, cc * m + d) = v;
          }
      for (int cc = 0; cc < m; ++cc)
        for (int b = 0; b < m; ++b)
          for (int d = 0; d < m; ++d) {
            cplx v = dh[sz(cc)].at(p, 0, b * m + d);
            for (int e = 0; e < m; ++e)
              v += gamma.G(p, b, cc, e) * h.at(p, 0, e * m + d) + gamma.G(p, d, cc, e) * h.at(p, 0, b * m + e) -
                   gamma.G(p, e, cc, e) * h.at(p, 0, b * m + d);
            out.metricity.at(p, 0, (cc * m + b) * m + d) = v;
          }
      for (int b = 0; b < m; ++b)
        for (int cc = 0; cc < m; ++cc)
          for (int d = 0; d < m; ++d) {
            cplx v = out.metricity.at(p, 0, (cc * m + b) * m + d);
            if (b == cc)
              for (int a = 0; a < m; ++a) v -= out.metricity.at(p, 0, (a * m + a) * m + d);
            out.metricity_pattern.at(p, b, cc * m + d) = v;
          }
    }
  });
  return out;
}

namespace {

// tr(XY) with pairing X^i_j Y^j_i
cplx trace_product(const cplx* X, const cplx* Y, int n) {
  cplx s{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += X[i * n + j] * Y[j * n + i];
  return s;
}

// full antisymmetric z_{ab} at one point, (a*m + b)*nn + f
std::vector<cplx> full_pairs(const cplx* z2, int m, int nn, const std::vector<PairRef>& pt) {
  std::vector<cplx> out(sz(m * m * nn), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const PairRef r = pt[sz(a * m + b)];
      if (r.comp < 0) continue;
      for (int f = 0; f < nn; ++f) out[sz((a * m + b) * nn + f)] = r.sign * z2[r.comp * nn + f];
    }
  return out;
}

GridField generic_energy_tensor(const DFState& s, const MomentumFields& M, const GridField& lam) {
  const Chart& c = s.chart();
  const int m = c.dim(), nn = s.spec.n * s.spec.n;
  const int F = s.spec.matter_dim();
  const auto pt = pair_table(m);
  GridField U(c, tensor_sig({tangent(), cotangent()}), state_kind(s));
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const auto C = full_pairs(M.pi2.point(p), m, nn, pt);
      const auto Z = full_pairs(s.z2.point(p), m, nn, pt);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          cplx v = a == b ? lam.at(p, 0, 0) : 0.0;
          for (int k = 0; k < F; ++k) {
            v -= M.pi1.at(p, a, k) * s.nabla_phi.at(p, b, k);
            v -= M.pi1bar.at(p, a, k) * s.nabla_phibar.at(p, b, k);
          }
          for (int cc = 0; cc < m; ++cc)
            for (int f = 0; f < nn; ++f) v -= C[sz((a * m + cc) * nn + f)] * Z[sz((b * m + cc) * nn + f)];
          U.at(p, 0, a * m + b) = v;
        }
    }
  });
  return U;
}

}  // namespace

EnergyTensors canonical_energy_tensor(const DFState& s) {
  const Chart& c = s.chart();
  const int m = c.dim(), n = s.spec.n, nn = n * n;
  const int F = s.spec.matter_dim();
  const MomentumFields M = momentum_fields(s);
  const GridField lam = lambda_field(s);
  EnergyTensors E;
  E.generic = generic_energy_tensor(s, M, lam);
  E.closed_form = GridField(c, tensor_sig({tangent(), cotangent()}), state_kind(s));
  const auto pt = pair_table(m);
  std::vector<Matrix> gl;
  if (s.spec.sector == Sector::dirac)
    for (int a = 0; a < m; ++a) gl.push_back(gamma_lower(a));
  const MatterLayout L(s.spec);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const Metric& g = s.bg.metric;
      const double sg = g.sqrt_abs_det(p);
      // gauge part with rho = -z2, (1/4 rho^{cd} rho_{cd} delta - rho^{ac} rho_{bc}) sqrt|g|
      const auto rho = full_pairs(s.rho.point(p), m, nn, pt);
      std::vector<cplx> up(sz(m * m * nn), 0.0);  // rho^{ac}
      for (int a = 0; a < m; ++a)
        for (int cc = 0; cc < m; ++cc)
          for (int e = 0; e < m; ++e)
            for (int f = 0; f < m; ++f) {
              const double w = g.ginv(p, a, e) * g.ginv(p, cc, f);
              if (w == 0.0) continue;
              for (int k = 0; k < nn; ++k) up[sz((a * m + cc) * nn + k)] += w * rho[sz((e * m + f) * nn + k)];
            }
      cplx full{};
      for (int k = 0; k < m * m; ++k) full += trace_product(up.data() + k * nn, rho.data() + k * nn, n);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          cplx v = a == b ? 0.25 * full : 0.0;
          for (int cc = 0; cc < m; ++cc)
            v -= trace_product(up.data() + (a * m + cc) * nn, rho.data() + (b * m + cc) * nn, n);
          E.closed_form.at(p, 0, a * m + b) = v * sg;
        }
      if (s.spec.sector == Sector::boson) {
        auto dot = [&](int cc, int d) {  // zbar_c . z_d
          cplx v{};
          for (int k = 0; k < F; ++k) v += s.nabla_phibar.at(p, cc, k) * s.nabla_phi.at(p, d, k);
          return v;
        };
        cplx kin{}, pot{};
        for (int cc = 0; cc < m; ++cc)
          for (int d = 0; d < m; ++d) kin += g.ginv(p, cc, d) * dot(cc, d);
        for (int k = 0; k < F; ++k) pot += s.phibar.at(p, 0, k) * s.phi.at(p, 0, k);
        const double m2 = s.spec.mass * s.spec.mass;
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            cplx v = a == b ? kin - m2 * pot : 0.0;
            for (int cc = 0; cc < m; ++cc) v -= g.ginv(p, a, cc) * (dot(cc, b) + dot(b, cc));
            E.closed_form.at(p, 0, a * m + b) += 0.5 * v * sg;
          }
      } else if (s.spec.sector == Sector::dirac) {
        // V_{cd} = psibar gamma_c nabla_d psi - nabla_d psibar gamma_c psi
        std::vector<cplx> V(sz(m * m), 0.0);
        for (int cc = 0; cc < m; ++cc)
          for (int d = 0; d < m; ++d)
            for (int i = 0; i < n; ++i)
              for (int al = 0; al < 4; ++al)
                for (int be = 0; be < 4; ++be) {
                  const cplx gm = gl[sz(cc)][sz(al * 4 + be)];
                  if (gm == 0.0) continue;
                  V[sz(cc * m + d)] += s.phibar.at(p, 0, L.index(i, al)) * gm * s.nabla_phi.at(p, d, L.index(i, be)) -
                                       s.nabla_phibar.at(p, d, L.index(i, al)) * gm * s.phi.at(p, 0, L.index(i, be));
                }
        cplx pot{};
        for (int k = 0; k < F; ++k) pot += s.phibar.at(p, 0, k) * s.phi.at(p, 0, k);
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            cplx v = a == b ? -s.spec.mass * pot : 0.0;
            for (int cc = 0; cc < m; ++cc)
              for (int d = 0; d < m; ++d) {
                double w = a == b ? g.ginv(p, cc, d) : 0.0;
                if (d == b) w -= g.ginv(p, cc, a);
                if (w != 0.0) v += 0.5 * I * V[sz(cc * m + d)] * w;
              }
            E.closed_form.at(p, 0, a * m + b) += v * sg;
          }
      }
    }
  });
  return E;
}

StressEnergy stress_energy_tensor(const DFState& s) {
  if (s.spec.sector == Sector::gravity) throw Error("stress_energy_tensor: not defined for the gravity sector");
  if (s.spec.sector == Sector::dirac && !s.bg.metric.constant())
    throw Error("stress_energy_tensor: Dirac sector on a non-constant metric is not supported");
  const Chart& c = s.chart();
  const int m = c.dim();
  const Metric& g = s.bg.metric;
  const MomentumFields M = momentum_fields(s);
  const GridField U = generic_energy_tensor(s, M, lambda_field(s));
  const ScalarKind kind = state_kind(s);
  StressEnergy T;
  const FiberSignature up2 = tensor_sig({tangent(), tangent()});
  const FiberSignature low2 = tensor_sig({cotangent(), cotangent()});
  T.t = GridField(c, up2, kind);
  T.t_low = GridField(c, low2, kind);
  T.u_sym = GridField(c, low2, kind);
  T.t_rel = GridField(c, low2, kind);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const double sg = g.sqrt_abs_det(p);
      std::vector<cplx> ul(sz(m * m), 0.0);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int cc = 0; cc < m; ++cc) ul[sz(a * m + b)] += g.g(p, a, cc) * U.at(p, 0, cc * m + b);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const cplx us = ul[sz(a * m + b)] + ul[sz(b * m + a)];
          T.u_sym.at(p, 0, a * m + b) = us;
          T.t_rel.at(p, 0, a * m + b) = -us / (4.0 * sg);
        }
      if (s.spec.sector == Sector::dirac) {
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            T.t_low.at(p, 0, a * m + b) = T.t_rel.at(p, 0, a * m + b);
            cplx v{};
            for (int x = 0; x < m; ++x)
              for (int y = 0; y < m; ++y) v += g.ginv(p, a, x) * g.ginv(p, b, y) * T.t_rel.at(p, 0, x * m + y);
            T.t.at(p, 0, a * m + b) = v;
          }
        continue;
      }
      const auto dg = metric_derivative_analytic(s.spec, s.fiber_point(p), point_metric(g, p));
      for (int k = 0; k < m * m; ++k) T.t.at(p, 0, k) = dg[sz(k)] / sg;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          cplx v{};
          for (int x = 0; x < m; ++x)
            for (int y = 0; y < m; ++y) v += g.g(p, a, x) * g.g(p, b, y) * T.t.at(p, 0, x * m + y);
          T.t_low.at(p, 0, a * m + b) = v;
        }
    }
  });
  return T;
}

GridField divergence_of_T(const GridField& t, const SpacetimeConnection& gamma, int order) {
  const Chart& c = t.chart();
  const int m = c.dim();
  if (t.fiber_dim() != m * m || t.signature().degree != 0) throw Error("divergence_of_T: expected a degree-0 (2,0) tensor");
  const bool gam = !gamma.gamma.empty();
  if (gam && !(gamma.chart() == c)) throw Error("divergence_of_T: connection lives on a different chart");
  const Gradient d = gradient(t, order);
  GridField out(c, tensor_sig({tangent()}), t.kind());
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int b = 0; b < m; ++b) {
        cplx v{};
        for (int a = 0; a < m; ++a) {
          v += d[sz(a)].at(p, 0, a * m + b);
          if (!gam) continue;
          for (int cc = 0; cc < m; ++cc)
            v += gamma.G(p, a, a, cc) * t.at(p, 0, cc * m + b) + gamma.G(p, b, a, cc) * t.at(p, 0, a * m + cc);
        }
        out.at(p, 0, b) = v;
      }
  });
  return out;
}

GridField noether_current(const GridField& u, const Vertical& w, const DFState& s) {
  const Chart& c = s.chart();
  const int m = c.dim(), nn = s.spec.n * s.spec.n;
  const int F = s.spec.matter_dim();
  const MomentumFields M = momentum_fields(s);
  GridField out(c, FiberSignature::scalar(m - 1, Rep::complementary), state_kind(s));
  GridField U;
  if (!u.empty()) {
    if (!(u.chart() == c) || u.fiber_dim() != m) throw Error("noether_current: u must be a vector field on the chart");
    U = generic_energy_tensor(s, M, lambda_field(s));
  }
  auto check = [&](const GridField& f, std::size_t per_point, const char* what) {
    if (!f.empty() && (!(f.chart() == c) || f.per_point() != per_point))
      throw Error(std::string("noether_current: ") + what + " has the wrong shape");
  };
  check(w.w, sz(F), "w");
  check(w.wbar, sz(F), "wbar");
  check(w.wk, sz(m * nn), "wk");
  const auto pt = pair_table(m);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int a = 0; a < m; ++a) {
        cplx v{};
        if (!u.empty())
          for (int b = 0; b < m; ++b) v += u.at(p, 0, b) * U.at(p, 0, a * m + b);
        if (!w.w.empty())
          for (int k = 0; k < F; ++k) v += M.pi1.at(p, a, k) * w.w.at(p, 0, k);
        if (!w.wbar.empty())
          for (int k = 0; k < F; ++k) v += M.pi1bar.at(p, a, k) * w.wbar.at(p, 0, k);
        if (!w.wk.empty())
          for (int b = 0; b < m; ++b) {
            const PairRef r = pt[sz(a * m + b)];
            if (r.comp < 0) continue;
            for (int f = 0; f < nn; ++f) v += r.sign * M.pi2.at(p, r.comp, f) * w.wk.at(p, b, f);
          }
        out.at(p, a, 0) = v;
      }
  });
  return out;
}

GridField current_divergence(const GridField& current, int order) {
  const Chart& c = current.chart();
  const int m = c.dim();
  if (current.signature().rep != Rep::complementary || current.components() != m || current.fiber_dim() != 1)
    throw Error("current_divergence: expected a scalar current with one stored index");
  const Gradient d = gradient(current, order);
  GridField out(c, FiberSignature::scalar(m, Rep::complementary), current.kind());
  for (std::size_t p = 0; p < c.points(); ++p) {
    cplx v{};
    for (int a = 0; a < m; ++a) v += d[sz(a)].at(p, a, 0);
    out.at(p, 0, 0) = v;
  }
  return out;
}

ActionTools::ActionTools(const DFState& s) : s_(s) {
  if (s.spec.sector == Sector::gravity) throw Error("action_tools: the gravity sector has no field action here");
  const Chart& c = s.chart();
  metrics_.resize(c.points());
  base_.resize(c.points());
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      metrics_[p] = point_metric(s_.bg.metric, p);
      base_[p] = lambda_at(p, s_.phi, s_.phibar, s_.kappa.k);
    }
  });
}

cplx ActionTools::lambda_at(std::size_t q, const GridField& phi, const GridField& phibar, const GridField& k) const {
  FiberPoint pt = zero_fiber_point(s_.spec);
  prolong_point(s_, phi, phibar, k, q, pt);
  return sector_lambda(s_.spec, pt, metrics_[q]);
}

cplx ActionTools::sum(const std::vector<cplx>& lam) const {
  const Chart& c = s_.chart();
  cplx acc{};
  for (const cplx& v : lam) acc += v;
  return acc * std::pow(c.spacing(), c.dim());
}

cplx ActionTools::action() const { return sum(base_); }

// S(+eps) - S(-eps) accumulated pointwise in index order; points the
// perturbation cannot reach contribute exact zeros.
cplx ActionTools::difference(const std::vector<cplx>& lp, const std::vector<cplx>& lm, double eps) const {
  const Chart& c = s_.chart();
  cplx acc{};
  for (std::size_t i = 0; i < lp.size(); ++i) acc += lp[i] - lm[i];
  return acc * std::pow(c.spacing(), c.dim()) / (2.0 * eps);
}

GridField& ActionTools::target(FieldSlot slot, GridField& phi, GridField& phibar, GridField& k) const {
  GridField& t = slot == FieldSlot::phi ? phi : slot == FieldSlot::phibar ? phibar : k;
  if (t.empty()) throw Error("variation_oracle: the sector has no such field");
  return t;
}

cplx ActionTools::variation_oracle(FieldSlot slot, std::size_t p, int comp, int f, double eps) const {
  const Chart& c = s_.chart();
  GridField phi = s_.phi, phibar = s_.phibar, k = s_.kappa.k;
  GridField& t = target(slot, phi, phibar, k);
  std::vector<std::size_t> near{p};
  for (int a = 0; a < c.dim(); ++a)
    for (int r = 1; r <= s_.order / 2; ++r) {
      near.push_back(c.shift(p, a, r));
      near.push_back(c.shift(p, a, -r));
    }
  std::sort(near.begin(), near.end());
  near.erase(std::unique(near.begin(), near.end()), near.end());
  const cplx keep = t.at(p, comp, f);
  std::vector<cplx> lp(near.size()), lm(near.size());
  t.at(p, comp, f) = keep + eps;
  for (std::size_t i = 0; i < near.size(); ++i) lp[i] = lambda_at(near[i], phi, phibar, k);
  t.at(p, comp, f) = keep - eps;
  for (std::size_t i = 0; i < near.size(); ++i) lm[i] = lambda_at(near[i], phi, phibar, k);
  return difference(lp, lm, eps);
}

cplx ActionTools::variation_oracle_full(FieldSlot slot, std::size_t p, int comp, int f, double eps) const {
  const Chart& c = s_.chart();
  GridField phi = s_.phi, phibar = s_.phibar, k = s_.kappa.k;
  GridField& t = target(slot, phi, phibar, k);
  const cplx keep = t.at(p, comp, f);
  std::vector<cplx> lp(c.points()), lm(c.points());
  auto eval = [&](cplx v, std::vector<cplx>& lam) {
    t.at(p, comp, f) = v;
    parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) lam[q] = lambda_at(q, phi, phibar, k);
    });
  };
  eval(keep + eps, lp);
  eval(keep - eps, lm);
  return difference(lp, lm, eps);
}

}  // namespace covform
