#include "covform/calculus.hpp"

#include <cmath>

#include "covform/parallel.hpp"

namespace covform {

namespace {

ScalarKind join(ScalarKind a, ScalarKind b) {
  return (a == ScalarKind::complex || b == ScalarKind::complex) ? ScalarKind::complex : ScalarKind::real;
}

// d_axis of stored slot (comp, fib), exact when a gradient is supplied
struct Deriv {
  const GridField& f;
  const Gradient* d;
  int order;

  Deriv(const GridField& field, const Gradient* grad, int ord) : f(field), d(grad), order(ord) {
    if (d) {
      if (static_cast<int>(d->size()) != f.chart().dim()) throw Error("gradient: need one field per axis");
      for (const auto& g : *d)
        if (!g.same_shape(f)) throw Error("gradient: shape does not match the differentiated field");
    } else if (order != 2 && order != 4) {
      throw Error("stencil order must be 2 or 4");
    }
  }
  cplx operator()(std::size_t p, int axis, int comp, int fib) const {
    if (d) return (*d)[static_cast<std::size_t>(axis)].at(p, comp, fib);
    return stencil_derivative(f, p, static_cast<std::size_t>(comp * f.fiber_dim() + fib), axis, order);
  }
};

struct Term {
  int axis;
  int pos;
  double sign;
};

// For each output index set of size r-1: the (a, pos, sign) of C(A' a).
std::vector<std::vector<Term>> contraction_terms(int m, int r) {
  const IndexSet& os = index_set(m, r - 1);
  std::vector<std::vector<Term>> out(static_cast<std::size_t>(os.size()));
  int idx[kMaxDim];
  for (int o = 0; o < os.size(); ++o) {
    const auto ap = os.indices(o);
    for (int k = 0; k < r - 1; ++k) idx[k] = ap[static_cast<std::size_t>(k)];
    for (int a = 0; a < m; ++a) {
      idx[r - 1] = a;
      const SignedSlot s = locate(m, idx, r);
      if (s.sign == 0) continue;
      out[static_cast<std::size_t>(o)].push_back({a, s.pos, static_cast<double>(s.sign)});
    }
  }
  return out;
}

void check_connection(const GridField& f, const FiberConnection& K) {
  if (!(f.chart() == K.chart())) throw Error("connection chart does not match the field");
  if (f.fiber_dim() != K.fiber_dim()) throw Error("connection fiber does not match the field");
}

// Upper-index Gamma action: for each output o and contracted axis a, the list of
// (slot value u, replacement f, pos, sign) with coefficient G^u_{a f} C(pos).
struct SlotTerm {
  int u, f, pos;
  double sign;
};

std::vector<std::vector<std::vector<SlotTerm>>> slot_terms(int m, int r) {
  const IndexSet& os = index_set(m, r - 1);
  std::vector<std::vector<std::vector<SlotTerm>>> out(static_cast<std::size_t>(os.size()),
                                                       std::vector<std::vector<SlotTerm>>(static_cast<std::size_t>(m)));
  int idx[kMaxDim], rep[kMaxDim];
  for (int o = 0; o < os.size(); ++o) {
    const auto ap = os.indices(o);
    for (int k = 0; k < r - 1; ++k) idx[k] = ap[static_cast<std::size_t>(k)];
    for (int a = 0; a < m; ++a) {
      idx[r - 1] = a;
      if (locate(m, idx, r).sign == 0) continue;
      for (int t = 0; t < r; ++t)
        for (int f = 0; f < m; ++f) {
          for (int k = 0; k < r; ++k) rep[k] = idx[k];
          rep[t] = f;
          const SignedSlot s = locate(m, rep, r);
          if (s.sign == 0) continue;
          out[static_cast<std::size_t>(o)][static_cast<std::size_t>(a)].push_back(
              {idx[t], f, s.pos, static_cast<double>(s.sign)});
        }
    }
  }
  return out;
}

// Shared divergence kernel. density = 1 adds the weight-one term -G^c_{ac}.
GridField divergence_kernel(const GridField& xi, const SpacetimeConnection& gamma, const FiberConnection& K,
                            double density, const Deriv& D) {
  const Chart& c = xi.chart();
  const int m = c.dim();
  const int r = xi.signature().slots(m);
  GridField out(c, xi.signature().with_degree(xi.signature().degree + 1, Rep::complementary),
                join(join(xi.kind(), K.kind()), gamma.gamma.kind()));
  const auto terms = contraction_terms(m, r);
  const auto slots = slot_terms(m, r);
  const int fd = xi.fiber_dim();
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      cplx* o_ptr = out.point(p);
      for (std::size_t o = 0; o < terms.size(); ++o) {
        cplx* dst = o_ptr + o * static_cast<std::size_t>(fd);
        for (const Term& t : terms[o]) {
          const cplx* src = xi.point(p) + static_cast<std::size_t>(t.pos * fd);
          double trace = 0.0;
          for (int cc = 0; cc < m; ++cc) trace += gamma.G(p, cc, t.axis, cc);
          for (int f = 0; f < fd; ++f) dst[f] += t.sign * (D(p, t.axis, t.pos, f) - density * trace * src[f]);
          for (const SlotTerm& s : slots[o][static_cast<std::size_t>(t.axis)]) {
            const double g = gamma.G(p, s.u, t.axis, s.f);
            if (g == 0.0) continue;
            const cplx* sp = xi.point(p) + static_cast<std::size_t>(s.pos * fd);
            for (int f = 0; f < fd; ++f) dst[f] += g * s.sign * sp[f];
          }
          K.apply(p, t.axis, src, dst, -t.sign);
        }
      }
    }
  });
  return out;
}

}  // namespace

GridField d_kappa_basic(const GridField& xi, const FiberConnection& K, const Gradient* d, int order) {
  const Chart& c = xi.chart();
  const int m = c.dim();
  if (xi.signature().rep != Rep::complementary) throw Error("d_kappa_basic: input must be complementary");
  const int r = xi.signature().slots(m);
  if (r < 1) throw Error("d_kappa_basic: r = 0 input has no higher degree");
  check_connection(xi, K);
  const Deriv D(xi, d, order);
  GridField out(c, xi.signature().with_degree(xi.signature().degree + 1, Rep::complementary), join(xi.kind(), K.kind()));
  const auto terms = contraction_terms(m, r);
  const int fd = xi.fiber_dim();
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (std::size_t o = 0; o < terms.size(); ++o) {
        cplx* dst = out.point(p) + o * static_cast<std::size_t>(fd);
        for (const Term& t : terms[o]) {
          for (int f = 0; f < fd; ++f) dst[f] += t.sign * D(p, t.axis, t.pos, f);
          K.apply(p, t.axis, xi.point(p) + static_cast<std::size_t>(t.pos * fd), dst, -t.sign);
        }
      }
  });
  return out;
}

GridField d_kappa_basic(const GridField& xi, const LinearConnection& kappa, const Gradient* d, int order) {
  return d_kappa_basic(xi, FiberConnection(xi.chart(), xi.signature(), {&kappa}), d, order);
}

GridField d_kappa_lie(const GridField& zeta, const FiberConnection& K, LieMode mode, const Gradient* d, int order) {
  const Chart& c = zeta.chart();
  const int m = c.dim();
  if (zeta.signature().rep != Rep::standard) throw Error("d_kappa_lie: input must be standard");
  const int r = zeta.signature().degree;
  if (r + 1 > m) throw Error("d_kappa_lie: degree overflow");
  check_connection(zeta, K);
  const Deriv D(zeta, d, order);
  const double w = mode == LieMode::connection ? 0.5 : 1.0;
  GridField out(c, zeta.signature().with_degree(r + 1, Rep::standard), join(zeta.kind(), K.kind()));
  const IndexSet& os = index_set(m, r + 1);
  const IndexSet& is = index_set(m, r);
  std::vector<std::vector<Term>> terms(static_cast<std::size_t>(os.size()));
  for (int o = 0; o < os.size(); ++o) {
    const auto B = os.indices(o);
    for (int k = 0; k <= r; ++k) {
      const std::uint32_t rest = os.masks[static_cast<std::size_t>(o)] & ~(1u << B[static_cast<std::size_t>(k)]);
      terms[static_cast<std::size_t>(o)].push_back({B[static_cast<std::size_t>(k)], is.position[rest], k % 2 == 0 ? 1.0 : -1.0});
    }
  }
  const int fd = zeta.fiber_dim();
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (std::size_t o = 0; o < terms.size(); ++o) {
        cplx* dst = out.point(p) + o * static_cast<std::size_t>(fd);
        for (const Term& t : terms[o]) {
          for (int f = 0; f < fd; ++f) dst[f] += t.sign * D(p, t.axis, t.pos, f);
          K.apply(p, t.axis, zeta.point(p) + static_cast<std::size_t>(t.pos * fd), dst, -w * t.sign);
        }
      }
  });
  return out;
}

GridField d_kappa_lie(const GridField& zeta, const LinearConnection& kappa, LieMode mode, const Gradient* d, int order) {
  return d_kappa_lie(zeta, FiberConnection(zeta.chart(), zeta.signature(), {&kappa}), mode, d, order);
}

GridField d_kappa_kappa(const LinearConnection& kappa, const Gradient* dk, int order) {
  return d_kappa_lie(kappa.k, kappa, LieMode::connection, dk, order);
}

GridField covariant_derivative(const GridField& phi, const FiberConnection& K, const Gradient* d, int order) {
  if (phi.signature().degree != 0) throw Error("covariant_derivative: input must be a section");
  if (!(phi.signature().factors == K.signature().factors) && !(phi.signature().dual().factors == K.signature().factors))
    throw Error("covariant_derivative: signature does not match the connection");
  return d_kappa_lie(phi, K, LieMode::linear, d, order);
}

GridField covariant_divergence(const GridField& xi, const SpacetimeConnection& gamma, const FiberConnection& K,
                               const Gradient* d, int order) {
  const int m = xi.chart().dim();
  if (xi.signature().rep != Rep::complementary) throw Error("covariant_divergence: input must be complementary");
  if (!(gamma.chart() == xi.chart())) throw Error("covariant_divergence: chart mismatch");
  check_connection(xi, K);
  if (xi.signature().slots(m) == 0) return GridField(xi.chart(), xi.signature(), xi.kind());
  return divergence_kernel(xi, gamma, K, 1.0, Deriv(xi, d, order));
}

GridField replacement_residual(const GridField& xi, const SpacetimeConnection& gamma, const FiberConnection& K,
                               const Gradient* d, int order) {
  const int m = xi.chart().dim();
  const int r = xi.signature().slots(m);
  if (r < 1) throw Error("replacement_residual: needs r >= 1");
  GridField res = covariant_divergence(xi, gamma, K, d, order) - d_kappa_basic(xi, K, d, order);
  res = res + torsion_wedge(gamma.tau, xi);
  if (r >= 2) axpy(res, 0.5, t_bar_wedge(gamma.torsion, xi));
  return res;
}

TildeCheck tilde_divergence_sign_check(const GridField& xi, const Metric& g, const SpacetimeConnection& gamma,
                                       const FiberConnection& K, int order) {
  const Chart& c = xi.chart();
  const int m = c.dim();
  if (m % 2 != 0) throw Error("tilde divergence check: only even m is supported");
  if (xi.signature().rep != Rep::complementary) throw Error("tilde divergence check: input must be complementary");
  const int r = xi.signature().slots(m);
  TildeCheck out;
  out.sign = (m * (r - 1)) % 2 == 0 ? 1 : -1;
  if (r == 0) return out;
  const GridField lhs_density = covariant_divergence(xi, gamma, K, nullptr, order);
  GridField x = xi;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (std::size_t k = 0; k < x.per_point(); ++k) x.point(p)[k] /= g.sqrt_abs_det(p);
  const GridField rhs = divergence_kernel(x, gamma, K, 0.0, Deriv(x, nullptr, order));
  for (std::size_t p = 0; p < c.points(); ++p)
    for (std::size_t k = 0; k < rhs.per_point(); ++k) {
      const cplx lhs = lhs_density.point(p)[k] / g.sqrt_abs_det(p);
      out.max_deviation = std::max(out.max_deviation, std::abs(lhs - static_cast<double>(out.sign) * rhs.point(p)[k]));
      out.scale = std::max(out.scale, std::abs(lhs));
    }
  return out;
}

GridField covariant_lie_derivative(const GridField& xi, const GridField& u, const FiberConnection& K, int order) {
  const int m = xi.chart().dim();
  if (xi.signature().rep != Rep::standard) throw Error("covariant_lie_derivative: input must be standard");
  const int r = xi.signature().degree;
  GridField out(xi.chart(), xi.signature(), join(xi.kind(), join(u.kind(), K.kind())));
  if (r < m) out = out + interior_product(u, d_kappa_lie(xi, K, LieMode::linear, nullptr, order));
  if (r >= 1) out = out + d_kappa_lie(interior_product(u, xi), K, LieMode::linear, nullptr, order);
  return out;
}

GridField lie_variation_residual(const GridField& sigma, const GridField& u, const LinearConnection& kappa, int order) {
  if (sigma.signature().degree != 0) throw Error("lie_variation_residual: sigma must be a section");
  const FiberConnection K(sigma.chart(), sigma.signature(), {&kappa});
  const GridField nabla = d_kappa_lie(sigma, K, LieMode::linear, nullptr, order);
  const GridField lhs = covariant_lie_derivative(nabla, u, K, order);
  const GridField dsigma = covariant_lie_derivative(sigma, u, K, order);
  GridField res = lhs - d_kappa_lie(dsigma, K, LieMode::linear, nullptr, order);
  const LinearConnection dk{interior_product(u, d_kappa_kappa(kappa, nullptr, order)), std::nullopt};
  const FiberConnection dK(sigma.chart(), sigma.signature(), {&dk});
  const int m = sigma.chart().dim();
  if (dK.kind() == ScalarKind::complex) res.set_kind(ScalarKind::complex);
  for (std::size_t p = 0; p < sigma.chart().points(); ++p)
    for (int a = 0; a < m; ++a) dK.apply(p, a, sigma.point(p), &res.at(p, a, 0), 1.0);
  return res;
}

ProlongVariation variation_prolong(const VariationPair& v, const GridField& phi, const LinearConnection& kappa,
                                   const ConnectionSet& background, const Gradient* d_dphi,
                                   const Gradient* d_dkappa, int order) {
  if (!v.dphi.same_shape(phi)) throw Error("variation_prolong: dphi does not match phi");
  if (!v.dkappa.same_shape(kappa.k)) throw Error("variation_prolong: dkappa does not match kappa");
  const Chart& c = phi.chart();
  const int m = c.dim();
  ConnectionSet full = background;
  full.kappa = &kappa;
  const FiberConnection K(c, phi.signature(), full);
  const LinearConnection dk{v.dkappa, std::nullopt};
  const FiberConnection dK(c, phi.signature(), {&dk});
  ProlongVariation out;
  out.dnabla_phi = covariant_derivative(v.dphi, K, d_dphi, order);
  if (dK.kind() == ScalarKind::complex || phi.kind() == ScalarKind::complex) out.dnabla_phi.set_kind(ScalarKind::complex);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int a = 0; a < m; ++a) dK.apply(p, a, phi.point(p), &out.dnabla_phi.at(p, a, 0), -1.0);
  });
  out.drho = -1.0 * d_kappa_lie(v.dkappa, kappa, LieMode::linear, d_dkappa, order);
  return out;
}

GridField internal_action(const GridField& l, const GridField& phi) {
  const auto& fl = l.signature().factors;
  if (fl.size() != 1 || fl[0].kind != FactorKind::endomorphism || l.signature().degree != 0)
    throw Error("internal_action: l must be an End(n) section");
  const Chart& c = phi.chart();
  const int m = c.dim();
  const int n = fl[0].n;
  // every axis of the stand-in connection carries l, so K_0 is the action of l
  LinearConnection fake{GridField(c, FiberSignature::endo(n, 1), l.kind()), std::nullopt};
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a)
      for (int k = 0; k < n * n; ++k) fake.k.at(p, a, k) = l.at(p, 0, k);
  const FiberConnection L(c, phi.signature(), {&fake});
  GridField out(c, phi.signature(), join(phi.kind(), l.kind()));
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int comp = 0; comp < phi.components(); ++comp)
      L.apply(p, 0, &phi.at(p, comp, 0), &out.at(p, comp, 0), 1.0);
  return out;
}

VariationPair gauge_variation(const GridField& l, const GridField& phi, const LinearConnection& kappa,
                              const Gradient* dl, int order) {
  if (kappa.algebra && subalgebra_residual(l, *kappa.algebra) > 1e-10)
    throw Error("gauge_variation: l is outside the subalgebra " + kappa.algebra->name);
  VariationPair v;
  v.dphi = internal_action(l, phi);
  v.dkappa = d_kappa_lie(l, kappa, LieMode::linear, dl, order);
  return v;
}

}  // namespace covform
