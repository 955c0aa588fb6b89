#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include <algorithm>
#include <vector>

#include "covform/connection.hpp"

namespace testutil {

using covform::cplx;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline std::size_t sz(int v) { return static_cast<std::size_t>(v); }

// Scalar field filled from a function of the coordinates.
inline covform::GridField scalar_field(const covform::Chart& c, const std::function<cplx(const double*)>& f,
                                       covform::ScalarKind kind = covform::ScalarKind::real) {
  covform::GridField out(c, covform::FiberSignature::scalar(), kind);
  double x[covform::kMaxDim];
  for (std::size_t p = 0; p < c.points(); ++p) {
    for (int a = 0; a < c.dim(); ++a) x[a] = c.coordinate(p, a);
    out.at(p, 0, 0) = f(x);
  }
  return out;
}

// Fills every stored value of a field from a function of (point, component, fiber).
inline void fill(covform::GridField& f, const std::function<cplx(std::size_t, int, int)>& v) {
  for (std::size_t p = 0; p < f.chart().points(); ++p)
    for (int c = 0; c < f.components(); ++c)
      for (int i = 0; i < f.fiber_dim(); ++i) f.at(p, c, i) = v(p, c, i);
}

// parity by inversion count; 0 on repeats
inline int inversion_sign(const std::vector<int>& v) {
  int inv = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (v[i] == v[j]) return 0;
      if (v[i] > v[j]) ++inv;
    }
  return inv % 2 == 0 ? 1 : -1;
}

// Stored value at an unsorted index tuple, extended antisymmetrically. Works for
// both representations since complementary values are antisymmetric too.
inline cplx form_at(const covform::GridField& f, std::size_t p, std::vector<int> idx, int fiber) {
  const int s = inversion_sign(idx);
  if (s == 0) return 0.0;
  std::sort(idx.begin(), idx.end());
  const covform::IndexSet& is = covform::index_set(f.chart().dim(), static_cast<int>(idx.size()));
  for (int pos = 0; pos < is.size(); ++pos)
    if (is.indices(pos) == idx) return static_cast<double>(s) * f.at(p, pos, fiber);
  return 0.0;
}

// su(2)-valued connection sum_I c_{aI}(x) basis_I with c from a real trig series
inline covform::LinearConnection su2_connection(const covform::Chart& c, std::uint64_t seed) {
  const covform::Subalgebra alg = covform::Subalgebra::su2();
  const covform::GridField coeff = covform::make_trig_field(c, covform::FiberSignature::internal(3, 1), seed, 1);
  covform::LinearConnection k = covform::LinearConnection::zero(c, 2, covform::ScalarKind::complex);
  k.algebra = alg;
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < c.dim(); ++a)
      for (int I = 0; I < 3; ++I)
        for (int f = 0; f < 4; ++f) k.k.at(p, a, f) += coeff.at(p, a, I).real() * alg.basis[sz(I)][sz(f)];
  return k;
}

}  // namespace testutil
