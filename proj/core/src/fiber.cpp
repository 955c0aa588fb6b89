#include "covform/fiber.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "covform/parallel.hpp"

namespace covform {

int epsilon_symbol(const std::vector<int>& indices) { return permutation_sign(indices); }

namespace {

std::uint32_t full_mask(int m) { return (1u << m) - 1u; }

// eps(A, complement(A)) for a sorted mask A
int complement_sign(int m, std::uint32_t a_mask) {
  int idx[kMaxDim];
  int c = 0;
  for (int a = 0; a < m; ++a)
    if (a_mask & (1u << a)) idx[c++] = a;
  for (int a = 0; a < m; ++a)
    if (!(a_mask & (1u << a))) idx[c++] = a;
  return locate(m, idx, m).sign;
}

ScalarKind join(ScalarKind a, ScalarKind b) {
  return (a == ScalarKind::complex || b == ScalarKind::complex) ? ScalarKind::complex : ScalarKind::real;
}

}  // namespace

GridField complementary_convert(const GridField& xi) {
  const int m = xi.chart().dim();
  const FiberSignature& s = xi.signature();
  const Rep target = s.rep == Rep::standard ? Rep::complementary : Rep::standard;
  GridField out(xi.chart(), s.with_degree(s.degree, target), xi.kind());
  const IndexSet& src = index_set(m, s.slots(m));
  const IndexSet& dst = index_set(m, m - s.slots(m));
  const int fd = xi.fiber_dim();
  // both directions use eps(A, B) with A the complementary index set
  std::vector<int> map(static_cast<std::size_t>(src.size()));
  std::vector<int> sign(static_cast<std::size_t>(src.size()));
  for (int i = 0; i < src.size(); ++i) {
    const std::uint32_t mask = src.masks[static_cast<std::size_t>(i)];
    const std::uint32_t other = full_mask(m) & ~mask;
    map[static_cast<std::size_t>(i)] = dst.position[other];
    sign[static_cast<std::size_t>(i)] = complement_sign(m, s.rep == Rep::complementary ? mask : other);
  }
  parallel_for(xi.chart().points(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p)
      for (int i = 0; i < src.size(); ++i)
        for (int f = 0; f < fd; ++f)
          out.at(p, map[static_cast<std::size_t>(i)], f) =
              static_cast<double>(sign[static_cast<std::size_t>(i)]) * xi.at(p, i, f);
  });
  return out;
}

GridField to_rep(const GridField& xi, Rep rep) {
  return xi.signature().rep == rep ? xi : complementary_convert(xi);
}

GridField wedge(const GridField& alpha, const GridField& beta) {
  if (!(alpha.chart() == beta.chart())) throw Error("wedge: chart mismatch");
  const int m = alpha.chart().dim();
  const int ra = alpha.signature().degree, rb = beta.signature().degree;
  if (ra + rb > m) throw Error("wedge: degree overflow");
  const GridField a = to_rep(alpha, Rep::standard);
  const GridField b = to_rep(beta, Rep::standard);
  FiberSignature sig;
  sig.factors = alpha.signature().factors;
  sig.factors.insert(sig.factors.end(), beta.signature().factors.begin(), beta.signature().factors.end());
  sig.degree = ra + rb;
  sig.rep = Rep::standard;
  GridField out(alpha.chart(), sig, join(alpha.kind(), beta.kind()));
  const IndexSet& sa = index_set(m, ra);
  const IndexSet& sb = index_set(m, rb);
  struct Pair {
    int ia, ib, io, sign;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < sa.size(); ++i)
    for (int j = 0; j < sb.size(); ++j) {
      if (sa.masks[static_cast<std::size_t>(i)] & sb.masks[static_cast<std::size_t>(j)]) continue;
      std::vector<int> idx = sa.indices(i);
      const std::vector<int> jb = sb.indices(j);
      idx.insert(idx.end(), jb.begin(), jb.end());
      const SignedSlot s = locate(m, idx.data(), static_cast<int>(idx.size()));
      pairs.push_back({i, j, s.pos, s.sign});
    }
  const int fa = a.fiber_dim(), fb = b.fiber_dim();
  parallel_for(alpha.chart().points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (const Pair& pr : pairs)
        for (int x = 0; x < fa; ++x)
          for (int y = 0; y < fb; ++y)
            out.at(p, pr.io, x * fb + y) += static_cast<double>(pr.sign) * a.at(p, pr.ia, x) * b.at(p, pr.ib, y);
  });
  return beta.signature().rep == Rep::complementary ? complementary_convert(out) : out;
}

GridField torsion_wedge(const GridField& tau, const GridField& xi) {
  const int m = xi.chart().dim();
  if (tau.signature().degree != 1 || tau.fiber_dim() != 1) throw Error("torsion_wedge: tau must be a scalar 1-form");
  if (xi.signature().rep != Rep::complementary) throw Error("torsion_wedge: xi must be complementary");
  const int r = xi.signature().slots(m);
  if (r < 1) throw Error("torsion_wedge: degree overflow");
  const GridField t = to_rep(tau, Rep::standard);
  GridField out(xi.chart(), xi.signature().with_degree(xi.signature().degree + 1, Rep::complementary),
                join(xi.kind(), tau.kind()));
  const IndexSet& os = index_set(m, r - 1);
  const int fd = xi.fiber_dim();
  parallel_for(xi.chart().points(), [&](std::size_t lo, std::size_t hi) {
    int idx[kMaxDim];
    for (std::size_t p = lo; p < hi; ++p)
      for (int o = 0; o < os.size(); ++o) {
        const std::vector<int> ap = os.indices(o);
        for (int k = 0; k < r - 1; ++k) idx[k] = ap[static_cast<std::size_t>(k)];
        for (int a = 0; a < m; ++a) {
          idx[r - 1] = a;
          const SignedSlot s = locate(m, idx, r);
          if (s.sign == 0) continue;
          const cplx ta = t.at(p, a, 0) * static_cast<double>(s.sign);
          for (int f = 0; f < fd; ++f) out.at(p, o, f) += xi.at(p, s.pos, f) * ta;
        }
      }
  });
  return out;
}

GridField interior_product(const GridField& v, const GridField& xi) {
  const int m = xi.chart().dim();
  if (v.fiber_dim() != m || v.signature().degree != 0) throw Error("interior_product: v must be a vector field");
  if (xi.signature().degree < 1) throw Error("interior_product: degree 0 input");
  const bool comp = xi.signature().rep == Rep::complementary;
  const GridField x = to_rep(xi, Rep::standard);
  const int r = x.signature().degree;
  GridField out(xi.chart(), x.signature().with_degree(r - 1, Rep::standard), join(xi.kind(), v.kind()));
  const IndexSet& os = index_set(m, r - 1);
  const int fd = x.fiber_dim();
  parallel_for(xi.chart().points(), [&](std::size_t lo, std::size_t hi) {
    int idx[kMaxDim];
    for (std::size_t p = lo; p < hi; ++p)
      for (int o = 0; o < os.size(); ++o) {
        const std::vector<int> bp = os.indices(o);
        for (int k = 0; k < r - 1; ++k) idx[k + 1] = bp[static_cast<std::size_t>(k)];
        for (int a = 0; a < m; ++a) {
          idx[0] = a;
          const SignedSlot s = locate(m, idx, r);
          if (s.sign == 0) continue;
          const cplx va = v.at(p, 0, a) * static_cast<double>(s.sign);
          for (int f = 0; f < fd; ++f) out.at(p, o, f) += va * x.at(p, s.pos, f);
        }
      }
  });
  return comp ? complementary_convert(out) : out;
}

GridField t_bar_wedge(const GridField& T, const GridField& xi) {
  const int m = xi.chart().dim();
  if (xi.signature().rep != Rep::complementary) throw Error("t_bar_wedge: xi must be complementary");
  const int r = xi.signature().slots(m);
  if (r < 2) throw Error("t_bar_wedge: needs at least 2 complementary indices");
  if (T.fiber_dim() != m || T.signature().degree != 2 || T.signature().rep != Rep::standard)
    throw Error("t_bar_wedge: T must be a standard tangent-valued 2-form");
  GridField out(xi.chart(), xi.signature().with_degree(xi.signature().degree + 1, Rep::complementary),
                join(xi.kind(), T.kind()));
  const IndexSet& os = index_set(m, r - 1);
  const IndexSet& pairs = index_set(m, 2);
  const int fd = xi.fiber_dim();
  parallel_for(xi.chart().points(), [&](std::size_t lo, std::size_t hi) {
    int idx[kMaxDim];
    for (std::size_t p = lo; p < hi; ++p)
      for (int o = 0; o < os.size(); ++o) {
        const std::vector<int> ap = os.indices(o);
        for (int k = 0; k < r - 1; ++k) {
          const double sk = ((r - 2 - k) % 2 == 0) ? 1.0 : -1.0;
          int c = 0;
          for (int j = 0; j < r - 1; ++j)
            if (j != k) idx[c++] = ap[static_cast<std::size_t>(j)];
          const int ak = ap[static_cast<std::size_t>(k)];
          // the ordered (b,c) sum is twice the sorted one
          for (int q = 0; q < pairs.size(); ++q) {
            const std::vector<int> bc = pairs.indices(q);
            idx[r - 2] = bc[0];
            idx[r - 1] = bc[1];
            const SignedSlot s = locate(m, idx, r);
            if (s.sign == 0) continue;
            const cplx w = 2.0 * sk * static_cast<double>(s.sign) * T.at(p, q, ak);
            for (int f = 0; f < fd; ++f) out.at(p, o, f) += w * xi.at(p, s.pos, f);
          }
        }
      }
  });
  return out;
}

Metric::Metric(GridField g) : g_(std::move(g)) {
  const int m = g_.chart().dim();
  if (g_.fiber_dim() != m * m || g_.signature().degree != 0) throw Error("metric: field must be a (0,2) tensor");
  const std::size_t n = g_.chart().points();
  ginv_.assign(n * static_cast<std::size_t>(m * m), 0.0);
  sqrtg_.assign(n, 0.0);
  bool failed = false;
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    Eigen::MatrixXd G(m, m);
    for (std::size_t p = lo; p < hi; ++p) {
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) G(a, b) = g_.at(p, 0, a * m + b).real();
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
      const double det = lu.determinant();
      if (!lu.isInvertible() || !(std::abs(det) > 1e-14) || (G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        failed = true;
        continue;
      }
      const Eigen::MatrixXd inv = lu.inverse();
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          ginv_[p * static_cast<std::size_t>(m * m) + static_cast<std::size_t>(a * m + b)] = 0.5 * (inv(a, b) + inv(b, a));
      sqrtg_[p] = std::sqrt(std::abs(det));
    }
  });
  if (failed) throw Error("metric: singular or non-symmetric metric");
  constant_ = true;
  for (std::size_t p = 1; p < n && constant_; ++p)
    for (int k = 0; k < m * m; ++k)
      if (g_.at(p, 0, k) != g_.at(0, 0, k)) {
        constant_ = false;
        break;
      }
}

namespace {

GridField minkowski_field(const Chart& chart) {
  const int m = chart.dim();
  GridField g(chart, FiberSignature{{cotangent(), cotangent()}, 0, Rep::standard});
  for (std::size_t p = 0; p < chart.points(); ++p)
    for (int a = 0; a < m; ++a) g.at(p, 0, a * m + a) = a == 0 ? 1.0 : -1.0;
  return g;
}

}  // namespace

Metric Metric::minkowski(const Chart& chart) { return Metric(minkowski_field(chart)); }

Metric Metric::frw(const Chart& chart, double amplitude) {
  const int m = chart.dim();
  GridField g = minkowski_field(chart);
  const double w = 2.0 * std::numbers::pi / chart.period();
  for (std::size_t p = 0; p < chart.points(); ++p) {
    const double a = 1.0 + amplitude * std::sin(w * chart.coordinate(p, 0));
    for (int i = 1; i < m; ++i) g.at(p, 0, i * m + i) = -a * a;
  }
  return Metric(std::move(g));
}

Metric Metric::sampled(const Chart& chart, std::uint64_t seed, double amplitude) {
  const int m = chart.dim();
  GridField g = minkowski_field(chart);
  const GridField d = trig_series(chart, g.signature(), seed, 1, ScalarKind::real, amplitude).sample(chart);
  for (std::size_t p = 0; p < chart.points(); ++p)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        g.at(p, 0, a * m + b) += 0.5 * (d.at(p, 0, a * m + b) + d.at(p, 0, b * m + a)).real();
  return Metric(std::move(g));
}

void hodge_point(int m, int r, const double* ginv, double sqrtg, const cplx* in, cplx* out, int fdim) {
  const IndexSet& s = index_set(m, r);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim> sub(r, r);
  for (int i = 0; i < s.size(); ++i) {
    for (int f = 0; f < fdim; ++f) out[i * fdim + f] = 0.0;
  }
  int ai[kMaxDim], bi[kMaxDim];
  for (int i = 0; i < s.size(); ++i) {
    int c = 0;
    for (int a = 0; a < m; ++a)
      if (s.masks[static_cast<std::size_t>(i)] & (1u << a)) ai[c++] = a;
    for (int j = 0; j < s.size(); ++j) {
      c = 0;
      for (int a = 0; a < m; ++a)
        if (s.masks[static_cast<std::size_t>(j)] & (1u << a)) bi[c++] = a;
      double det = 1.0;
      if (r > 0) {
        for (int x = 0; x < r; ++x)
          for (int y = 0; y < r; ++y) sub(x, y) = ginv[ai[x] * m + bi[y]];
        det = sub.determinant();
      }
      if (det == 0.0) continue;
      const double w = sqrtg * det;
      for (int f = 0; f < fdim; ++f) out[i * fdim + f] += w * in[j * fdim + f];
    }
  }
}

GridField hodge_star(const GridField& zeta, const Metric& g) {
  const int m = zeta.chart().dim();
  if (!(zeta.chart() == g.chart())) throw Error("hodge_star: chart mismatch");
  const GridField z = to_rep(zeta, Rep::standard);
  const int r = z.signature().degree;
  GridField out(zeta.chart(), z.signature().with_degree(m - r, Rep::complementary), zeta.kind());
  const int fd = z.fiber_dim();
  parallel_for(zeta.chart().points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) hodge_point(m, r, g.ginv_point(p), g.sqrt_abs_det(p), z.point(p), out.point(p), fd);
  });
  return out;
}

GridField commutator(const GridField& A, const GridField& B) {
  if (!A.same_shape(B)) throw Error("commutator: dimension mismatch");
  const auto& fa = A.signature().factors;
  if (fa.size() != 1 || fa[0].kind != FactorKind::endomorphism) throw Error("commutator: endomorphism fields required");
  const int n = fa[0].n;
  GridField out(A.chart(), A.signature(), join(A.kind(), B.kind()));
  const int comps = A.components();
  parallel_for(A.chart().points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int c = 0; c < comps; ++c)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            cplx s{};
            for (int h = 0; h < n; ++h) s += A.at(p, c, i * n + h) * B.at(p, c, h * n + j) - B.at(p, c, i * n + h) * A.at(p, c, h * n + j);
            out.at(p, c, i * n + j) = s;
          }
  });
  return out;
}

}  // namespace covform
