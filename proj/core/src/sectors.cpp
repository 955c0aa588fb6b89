#include "covform/sectors.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "covform/connection.hpp"

namespace covform {

namespace {

const cplx I{0.0, 1.0};

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

Sector sector_from_name(const std::string& name) {
  if (name == "gauge") return Sector::gauge;
  if (name == "boson") return Sector::boson;
  if (name == "dirac") return Sector::dirac;
  if (name == "gravity") return Sector::gravity;
  throw Error("unknown sector '" + name + "'");
}

std::string sector_name(Sector s) {
  switch (s) {
    case Sector::gauge: return "gauge";
    case Sector::boson: return "boson";
    case Sector::dirac: return "dirac";
    case Sector::gravity: return "gravity";
  }
  return "?";
}

FiberSignature matter_signature(const SectorSpec& spec) {
  FiberSignature s;
  if (spec.sector == Sector::boson) {
    s.factors.push_back(vec(spec.n));
    if (spec.tangent_y) s.factors.push_back(tangent());
  } else if (spec.sector == Sector::dirac) {
    s.factors = {spinor(), vec(spec.n)};
  } else {
    throw Error("sector " + sector_name(spec.sector) + " has no matter field");
  }
  return s;
}

int SectorSpec::matter_dim() const {
  switch (sector) {
    case Sector::boson: return n * dim_y();
    case Sector::dirac: return 4 * n;
    default: return 0;
  }
}

PointMetric::PointMetric(const std::vector<double>& g_in) : m(static_cast<int>(std::lround(std::sqrt(g_in.size())))), g(g_in) {
  Eigen::MatrixXd G(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) G(a, b) = g[sz(a * m + b)];
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible()) throw Error("fiber point: singular metric");
  const Eigen::MatrixXd inv = lu.inverse();
  ginv.resize(g.size());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) ginv[sz(a * m + b)] = 0.5 * (inv(a, b) + inv(b, a));
  sqrtg = std::sqrt(std::abs(lu.determinant()));
}

FiberPoint zero_fiber_point(const SectorSpec& spec) {
  const int m = spec.m;
  const int F = spec.matter_dim();
  const int cn = spec.curvature_n();
  FiberPoint pt;
  pt.g.assign(sz(m * m), 0.0);
  for (int a = 0; a < m; ++a) pt.g[sz(a * m + a)] = a == 0 ? 1.0 : -1.0;
  pt.y.assign(sz(F), 0.0);
  pt.ybar.assign(sz(F), 0.0);
  pt.z1.assign(sz(m * F), 0.0);
  pt.z1bar.assign(sz(m * F), 0.0);
  pt.z2.assign(sz(binomial(m, 2) * cn * cn), 0.0);
  pt.kappa.assign(sz(m * spec.n * spec.n), 0.0);
  return pt;
}

FiberPoint random_fiber_point(const SectorSpec& spec, std::uint64_t seed) {
  FiberPoint pt = zero_fiber_point(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int m = spec.m;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      const double d = 0.1 * u(rng);
      pt.g[sz(a * m + b)] += d;
      if (a != b) pt.g[sz(b * m + a)] += d;
    }
  const bool cx = spec.sector == Sector::dirac;
  auto fill = [&](std::vector<cplx>& v, bool complex) {
    for (auto& x : v) x = complex ? cplx(u(rng), u(rng)) : cplx(u(rng), 0.0);
  };
  fill(pt.y, cx);
  fill(pt.ybar, cx);
  fill(pt.z1, cx);
  fill(pt.z1bar, cx);
  fill(pt.z2, false);
  fill(pt.kappa, false);
  return pt;
}

void dirac_adjoint_pair(const SectorSpec& spec, FiberPoint& pt) {
  if (spec.sector != Sector::dirac) throw Error("dirac_adjoint_pair: Dirac sector only");
  const int n = spec.n, F = spec.matter_dim();
  const Matrix g0 = gamma_upper(0);
  auto adj = [&](const cplx* src, cplx* dst) {
    for (int al = 0; al < 4; ++al)
      for (int i = 0; i < n; ++i) {
        cplx s{};
        for (int be = 0; be < 4; ++be) s += std::conj(src[be * n + i]) * g0[sz(be * 4 + al)];
        dst[al * n + i] = s;
      }
  };
  adj(pt.y.data(), pt.ybar.data());
  for (int a = 0; a < spec.m; ++a) adj(pt.z1.data() + a * F, pt.z1bar.data() + a * F);
}

namespace {

void check_shape(const SectorSpec& spec, const FiberPoint& pt) {
  const int m = spec.m, F = spec.matter_dim(), cn = spec.curvature_n();
  if (pt.g.size() != sz(m * m) || pt.y.size() != sz(F) || pt.ybar.size() != sz(F) || pt.z1.size() != sz(m * F) ||
      pt.z1bar.size() != sz(m * F) || pt.z2.size() != sz(binomial(m, 2) * cn * cn))
    throw Error("fiber point does not match the sector signature");
}

// full antisymmetric z_{ab} block, zero on the diagonal
struct FullZ {
  int m, nn;
  std::vector<cplx> v;  // (a*m + b)*nn + f
  FullZ(int m_, int cn, const std::vector<cplx>& z2) : m(m_), nn(cn * cn), v(sz(m_ * m_ * cn * cn), 0.0) {
    const IndexSet& pairs = index_set(m, 2);
    for (int q = 0; q < pairs.size(); ++q) {
      const auto ab = pairs.indices(q);
      for (int f = 0; f < nn; ++f) {
        v[sz((ab[0] * m + ab[1]) * nn + f)] = z2[sz(q * nn + f)];
        v[sz((ab[1] * m + ab[0]) * nn + f)] = -z2[sz(q * nn + f)];
      }
    }
  }
  const cplx* at(int a, int b) const { return v.data() + (a * m + b) * nn; }
};

// tr(XY) with pairing X^i_j Y^j_i
cplx trace_product(const cplx* X, const cplx* Y, int n) {
  cplx s{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += X[i * n + j] * Y[j * n + i];
  return s;
}

cplx gauge_lambda(const SectorSpec& spec, const PointMetric& g, const FiberPoint& pt) {
  const int m = spec.m, n = spec.n;
  const FullZ Z(m, n, pt.z2);
  cplx s{};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        const double gac = g.ginv[sz(a * m + c)];
        if (gac == 0.0) continue;
        for (int d = 0; d < m; ++d) {
          const double gbd = g.ginv[sz(b * m + d)];
          if (gbd == 0.0) continue;
          s += gac * gbd * trace_product(Z.at(a, b), Z.at(c, d), n);
        }
      }
  return 0.25 * s * g.sqrtg;
}

cplx boson_lambda(const SectorSpec& spec, const PointMetric& g, const FiberPoint& pt) {
  const int m = spec.m, F = spec.matter_dim();
  cplx kin{}, pot{};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double gab = g.ginv[sz(a * m + b)];
      if (gab == 0.0) continue;
      for (int k = 0; k < F; ++k) kin += gab * pt.z1bar[sz(a * F + k)] * pt.z1[sz(b * F + k)];
    }
  for (int k = 0; k < F; ++k) pot += pt.ybar[sz(k)] * pt.y[sz(k)];
  return 0.5 * (kin - spec.mass * spec.mass * pot) * g.sqrtg;
}

struct Gammas {
  std::vector<Matrix> low;
  Gammas() {
    for (int a = 0; a < 4; ++a) low.push_back(gamma_lower(a));
  }
};

const Gammas& gammas() {
  static const Gammas g;
  return g;
}

// V_{ab} = ybar gamma_a z_b - zbar_a gamma_b y
cplx dirac_v(const SectorSpec& spec, const FiberPoint& pt, int a, int b) {
  const int n = spec.n, F = spec.matter_dim();
  const Matrix& ga = gammas().low[sz(a)];
  const Matrix& gb = gammas().low[sz(b)];
  cplx s{};
  for (int i = 0; i < n; ++i)
    for (int al = 0; al < 4; ++al)
      for (int be = 0; be < 4; ++be) {
        s += pt.ybar[sz(al * n + i)] * ga[sz(al * 4 + be)] * pt.z1[sz(b * F + be * n + i)];
        s -= pt.z1bar[sz(a * F + al * n + i)] * gb[sz(al * 4 + be)] * pt.y[sz(be * n + i)];
      }
  return s;
}

cplx dirac_lambda(const SectorSpec& spec, const PointMetric& g, const FiberPoint& pt) {
  const int m = spec.m, F = spec.matter_dim();
  if (m != 4) throw Error("Dirac sector requires m = 4");
  cplx kin{}, pot{};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double gab = g.ginv[sz(a * m + b)];
      if (gab != 0.0) kin += gab * dirac_v(spec, pt, a, b);
    }
  for (int k = 0; k < F; ++k) pot += pt.ybar[sz(k)] * pt.y[sz(k)];
  return (0.5 * I * kin - spec.mass * pot) * g.sqrtg;
}

// Q_{ad} = R_{ab}^b_d with R = -z2 (End(TM) fiber)
std::vector<cplx> gravity_q(const SectorSpec& spec, const FiberPoint& pt) {
  const int m = spec.m;
  const FullZ Z(m, m, pt.z2);
  std::vector<cplx> Q(sz(m * m), 0.0);
  for (int a = 0; a < m; ++a)
    for (int d = 0; d < m; ++d)
      for (int b = 0; b < m; ++b) Q[sz(a * m + d)] -= Z.at(a, b)[b * m + d];
  return Q;
}

cplx gravity_lambda(const SectorSpec& spec, const PointMetric& g, const FiberPoint& pt) {
  const int m = spec.m;
  const auto Q = gravity_q(spec, pt);
  cplx s{};
  for (int a = 0; a < m; ++a)
    for (int d = 0; d < m; ++d) s += g.ginv[sz(a * m + d)] * Q[sz(a * m + d)];
  return s * g.sqrtg;
}

// -sum g^{ap} g^{qb} X_{ab} sqrtg, symmetrized in pq, plus lambda g^{pq} / 2
std::vector<cplx> metric_variation(const PointMetric& g, const std::vector<cplx>& X, cplx weight, cplx lambda) {
  const int m = g.m;
  std::vector<cplx> out(sz(m * m), 0.0);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      cplx s{};
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) s += g.ginv[sz(a * m + p)] * g.ginv[sz(q * m + b)] * X[sz(a * m + b)];
      out[sz(p * m + q)] = -weight * s * g.sqrtg;
    }
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      const cplx s = 0.5 * (out[sz(p * m + q)] + out[sz(q * m + p)]);
      out[sz(p * m + q)] = out[sz(q * m + p)] = s;
    }
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) out[sz(p * m + q)] += 0.5 * lambda * g.ginv[sz(p * m + q)];
  return out;
}

std::vector<cplx> gauge_metric_derivative(const SectorSpec& spec, const PointMetric& g, const FiberPoint& pt) {
  const int m = spec.m, n = spec.n;
  const FullZ Z(m, n, pt.z2);
  // X_{ac} = sum_{bd} g^{bd} tr(z_ab z_cd)
  std::vector<cplx> X(sz(m * m), 0.0);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c)
      for (int b = 0; b < m; ++b)
        for (int d = 0; d < m; ++d) {
          const double gbd = g.ginv[sz(b * m + d)];
          if (gbd != 0.0) X[sz(a * m + c)] += gbd * trace_product(Z.at(a, b), Z.at(c, d), n);
        }
  return metric_variation(g, X, 0.5, gauge_lambda(spec, g, pt));
}

void add_to(std::vector<cplx>& a, const std::vector<cplx>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

void gauge_pi2(const SectorSpec& spec, const PointMetric& g, const cplx* z2, cplx* pi2) {
  const int m = spec.m, n = spec.n, nn = n * n;
  const int np = binomial(m, 2);
  std::vector<cplx> zt(sz(np * nn));
  for (int q = 0; q < np; ++q)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) zt[sz(q * nn + i * n + j)] = z2[q * nn + j * n + i];
  hodge_point(m, 2, g.ginv.data(), g.sqrtg, zt.data(), pi2, nn);
}

cplx sector_lambda(const SectorSpec& spec, const FiberPoint& pt) {
  check_shape(spec, pt);
  return sector_lambda(spec, pt, PointMetric(pt.g));
}

cplx sector_lambda(const SectorSpec& spec, const FiberPoint& pt, const PointMetric& g) {
  switch (spec.sector) {
    case Sector::gauge: return gauge_lambda(spec, g, pt);
    case Sector::boson: return boson_lambda(spec, g, pt) + gauge_lambda(spec, g, pt);
    case Sector::dirac: return dirac_lambda(spec, g, pt) + gauge_lambda(spec, g, pt);
    case Sector::gravity: return gravity_lambda(spec, g, pt);
  }
  return 0.0;
}

std::vector<cplx> metric_derivative_analytic(const SectorSpec& spec, const FiberPoint& pt) {
  check_shape(spec, pt);
  return metric_derivative_analytic(spec, pt, PointMetric(pt.g));
}

std::vector<cplx> metric_derivative_analytic(const SectorSpec& spec, const FiberPoint& pt, const PointMetric& g) {
  const int m = spec.m, F = spec.matter_dim();
  switch (spec.sector) {
    case Sector::gauge: return gauge_metric_derivative(spec, g, pt);
    case Sector::boson: {
      std::vector<cplx> S(sz(m * m), 0.0);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int k = 0; k < F; ++k) S[sz(a * m + b)] += pt.z1bar[sz(a * F + k)] * pt.z1[sz(b * F + k)];
      auto out = metric_variation(g, S, 0.5, boson_lambda(spec, g, pt));
      add_to(out, gauge_metric_derivative(spec, g, pt));
      return out;
    }
    case Sector::dirac: {
      std::vector<cplx> V(sz(m * m), 0.0);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) V[sz(a * m + b)] = dirac_v(spec, pt, a, b);
      auto out = metric_variation(g, V, 0.5 * I, dirac_lambda(spec, g, pt));
      add_to(out, gauge_metric_derivative(spec, g, pt));
      return out;
    }
    case Sector::gravity:
      return metric_variation(g, gravity_q(spec, pt), 1.0, gravity_lambda(spec, g, pt));
  }
  return {};
}

Momenta momenta_analytic(const SectorSpec& spec, const FiberPoint& pt) {
  check_shape(spec, pt);
  return momenta_analytic(spec, pt, PointMetric(pt.g));
}

Momenta momenta_analytic(const SectorSpec& spec, const FiberPoint& pt, const PointMetric& g) {
  const int m = spec.m, n = spec.n, F = spec.matter_dim(), cn = spec.curvature_n();
  const double sg = g.sqrtg;
  Momenta M;
  M.pi0.assign(sz(F), 0.0);
  M.pi0bar.assign(sz(F), 0.0);
  M.pi1.assign(sz(m * F), 0.0);
  M.pi1bar.assign(sz(m * F), 0.0);
  M.pi2.assign(pt.z2.size(), 0.0);
  M.pik.assign(pt.kappa.size(), 0.0);
  M.dg = metric_derivative_analytic(spec, pt, g);
  if (spec.sector != Sector::gravity) gauge_pi2(spec, g, pt.z2.data(), M.pi2.data());
  if (spec.sector == Sector::boson) {
    const double m2 = spec.mass * spec.mass;
    for (int k = 0; k < F; ++k) {
      M.pi0[sz(k)] = -0.5 * m2 * pt.ybar[sz(k)] * sg;
      M.pi0bar[sz(k)] = -0.5 * m2 * pt.y[sz(k)] * sg;
    }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double gab = g.ginv[sz(a * m + b)];
        if (gab == 0.0) continue;
        for (int k = 0; k < F; ++k) {
          M.pi1[sz(a * F + k)] += 0.5 * gab * pt.z1bar[sz(b * F + k)] * sg;
          M.pi1bar[sz(a * F + k)] += 0.5 * gab * pt.z1[sz(b * F + k)] * sg;
        }
      }
  } else if (spec.sector == Sector::dirac) {
    const auto& gl = gammas().low;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double gab = g.ginv[sz(a * m + b)];
        if (gab == 0.0) continue;
        for (int i = 0; i < n; ++i)
          for (int al = 0; al < 4; ++al)
            for (int be = 0; be < 4; ++be) {
              // pi1 uses gamma_b between ybar and the a-slot; pi1bar gamma_b acting on y
              M.pi1[sz(a * F + be * n + i)] += 0.5 * I * gab * pt.ybar[sz(al * n + i)] * gl[sz(b)][sz(al * 4 + be)] * sg;
              M.pi1bar[sz(a * F + al * n + i)] -= 0.5 * I * gab * gl[sz(b)][sz(al * 4 + be)] * pt.y[sz(be * n + i)] * sg;
              M.pi0[sz(be * n + i)] -= 0.5 * I * gab * pt.z1bar[sz(a * F + al * n + i)] * gl[sz(b)][sz(al * 4 + be)] * sg;
              M.pi0bar[sz(al * n + i)] += 0.5 * I * gab * gl[sz(a)][sz(al * 4 + be)] * pt.z1[sz(b * F + be * n + i)] * sg;
            }
      }
    for (int k = 0; k < F; ++k) {
      M.pi0[sz(k)] -= spec.mass * pt.ybar[sz(k)] * sg;
      M.pi0bar[sz(k)] -= spec.mass * pt.y[sz(k)] * sg;
    }
  } else if (spec.sector == Sector::gravity) {
    const IndexSet& pairs = index_set(m, 2);
    for (int q = 0; q < pairs.size(); ++q) {
      const auto ab = pairs.indices(q);
      const int a = ab[0], b = ab[1];
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          double v = 0.0;
          if (a == c) v += g.ginv[sz(b * m + d)];
          if (b == c) v -= g.ginv[sz(a * m + d)];
          M.pi2[sz(q * cn * cn + c * m + d)] = v * sg;
        }
    }
    M.pi0 = M.dg;
  }
  return M;
}

Momenta momenta_numeric(const SectorSpec& spec, const FiberPoint& pt, double step) {
  if (!(step > 0.0)) throw Error("momenta_numeric: step must be positive");
  check_shape(spec, pt);
  FiberPoint work = pt;
  auto slot = [&](std::vector<cplx>& v) {
    std::vector<cplx> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const cplx keep = v[k];
      v[k] = keep + step;
      const cplx lp = sector_lambda(spec, work);
      v[k] = keep - step;
      const cplx lm = sector_lambda(spec, work);
      v[k] = keep;
      out[k] = (lp - lm) / (2.0 * step);
    }
    return out;
  };
  Momenta M;
  M.pi0 = slot(work.y);
  M.pi0bar = slot(work.ybar);
  M.pi1 = slot(work.z1);
  M.pi1bar = slot(work.z1bar);
  M.pi2 = slot(work.z2);
  M.pik = slot(work.kappa);
  const int m = spec.m;
  M.dg.assign(sz(m * m), 0.0);
  for (int p = 0; p < m; ++p)
    for (int q = p; q < m; ++q) {
      const double kp = work.g[sz(p * m + q)];
      auto set = [&](double v) {
        work.g[sz(p * m + q)] = v;
        work.g[sz(q * m + p)] = v;
      };
      set(kp + step);
      const cplx lp = sector_lambda(spec, work);
      set(kp - step);
      const cplx lm = sector_lambda(spec, work);
      set(kp);
      cplx d = (lp - lm) / (2.0 * step);
      if (p != q) d *= 0.5;
      M.dg[sz(p * m + q)] = M.dg[sz(q * m + p)] = d;
    }
  if (spec.sector == Sector::gravity) M.pi0 = M.dg;
  return M;
}

}  // namespace covform
