#include <algorithm>
#include <vector>

#include "covform/fiber.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace covform;
using testutil::form_at;
using testutil::inversion_sign;
using testutil::sz;

namespace {

std::vector<int> complement(int m, const std::vector<int>& a) {
  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (std::find(a.begin(), a.end(), i) == a.end()) out.push_back(i);
  return out;
}

std::vector<int> concat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void for_each_tuple(int m, int r, const std::function<void(const std::vector<int>&)>& body) {
  std::vector<int> t(sz(r), 0);
  while (true) {
    body(t);
    int i = r - 1;
    while (i >= 0 && ++t[sz(i)] == m) t[sz(i--)] = 0;
    if (i < 0) return;
  }
}

GridField one_form(const Chart& c, int axis) {
  GridField f(c, FiberSignature::scalar(1));
  for (std::size_t p = 0; p < c.points(); ++p) f.at(p, axis, 0) = 1.0;
  return f;
}

}  // namespace

TEST_SUITE("fiber") {
  TEST_CASE("permutation symbol") {
    CHECK(epsilon_symbol({0, 1, 2, 3}) == 1);
    CHECK(epsilon_symbol({1, 0, 2, 3}) == -1);
    CHECK(epsilon_symbol({0, 0, 2, 3}) == 0);
    CHECK(epsilon_symbol({3, 2, 1, 0}) == 1);
    CHECK(epsilon_symbol({1, 2, 3, 0}) == -1);
  }

  TEST_CASE("complementary storage against the symbol") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const GridField std2 = make_trig_field(c, FiberSignature::internal(2, 2), 3, 1, ScalarKind::complex);
    const GridField comp = complementary_convert(std2);
    CHECK(comp.signature().rep == Rep::complementary);
    CHECK(comp.signature().degree == 2);
    const IndexSet& is = index_set(4, 2);
    double worst = 0.0;
    for (std::size_t p = 0; p < c.points(); ++p)
      for (int a = 0; a < is.size(); ++a) {
        const std::vector<int> A = is.indices(a);
        const std::vector<int> B = complement(4, A);
        for (int f = 0; f < 2; ++f) {
          const cplx expect = static_cast<double>(inversion_sign(concat(A, B))) * form_at(std2, p, B, f);
          worst = std::max(worst, std::abs(comp.at(p, a, f) - expect));
        }
      }
    CHECK(worst == 0.0);
    CHECK(max_abs_diff(complementary_convert(comp), std2) <= 1e-14);
  }

  TEST_CASE("top form and scalar exchange with sign +1") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    GridField top(c, FiberSignature::scalar(4));
    for (std::size_t p = 0; p < c.points(); ++p) top.at(p, 0, 0) = 2.5;
    const GridField s = complementary_convert(top);
    CHECK(s.signature().slots(4) == 0);
    CHECK(s.at(0, 0, 0) == cplx(2.5));
    GridField full(c, FiberSignature::scalar(0, Rep::complementary));
    for (std::size_t p = 0; p < c.points(); ++p) full.at(p, 0, 0) = -1.5;
    const GridField zero_form = complementary_convert(full);
    CHECK(zero_form.signature().degree == 0);
    CHECK(zero_form.signature().rep == Rep::standard);
    CHECK(zero_form.at(3, 0, 0) == cplx(-1.5));
  }

  TEST_CASE("wedge of coordinate one-forms") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const GridField w = wedge(one_form(c, 0), one_form(c, 1));
    CHECK(w.signature().degree == 2);
    const IndexSet& is = index_set(4, 2);
    for (int q = 0; q < is.size(); ++q) {
      const double expect = is.indices(q) == std::vector<int>{0, 1} ? 1.0 : 0.0;
      CHECK(w.at(5, q, 0) == cplx(expect));
    }
    const GridField rev = wedge(one_form(c, 1), one_form(c, 0));
    CHECK(rev.at(5, 0, 0) == cplx(-1.0));
    const GridField a = make_trig_field(c, FiberSignature::scalar(1), 4, 1);
    CHECK(sup_norm(wedge(a, a)) == 0.0);
  }

  TEST_CASE("wedge equals the shuffle sum") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const GridField a = make_trig_field(c, FiberSignature::internal(2, 1), 6, 1);
    const GridField b = make_trig_field(c, FiberSignature::internal(3, 2), 7, 1);
    const GridField w = wedge(a, b);
    const IndexSet& out = index_set(4, 3);
    double worst = 0.0;
    for (std::size_t p = 0; p < c.points(); p += 17)
      for (int o = 0; o < out.size(); ++o) {
        const std::vector<int> C = out.indices(o);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 3; ++j) {
            cplx expect = 0.0;
            // C = {c_k} u rest, sign of the shuffle
            for (int k = 0; k < 3; ++k) {
              std::vector<int> rest;
              for (int l = 0; l < 3; ++l)
                if (l != k) rest.push_back(C[sz(l)]);
              const int sign = inversion_sign(concat({C[sz(k)]}, rest));
              expect += static_cast<double>(sign) * form_at(a, p, {C[sz(k)]}, i) * form_at(b, p, rest, j);
            }
            worst = std::max(worst, std::abs(w.at(p, o, i * 3 + j) - expect));
          }
      }
    CHECK(worst < 1e-13);
  }

  TEST_CASE("wedge is graded anticommutative with fibers transposed") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    for (int r = 1; r <= 2; ++r)
      for (int s = 1; s + r <= 4; ++s) {
        const GridField a = make_trig_field(c, FiberSignature::internal(2, r), 10 + r, 1);
        const GridField b = make_trig_field(c, FiberSignature::internal(3, s), 20 + s, 1);
        const GridField ab = wedge(a, b);
        const GridField ba = wedge(b, a);
        const double sign = (r * s) % 2 == 0 ? 1.0 : -1.0;
        double worst = 0.0;
        for (std::size_t p = 0; p < c.points(); ++p)
          for (int q = 0; q < ab.components(); ++q)
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 3; ++j)
                worst = std::max(worst, std::abs(ab.at(p, q, i * 3 + j) - sign * ba.at(p, q, j * 2 + i)));
        CHECK(worst < 1e-13);
      }
  }

  TEST_CASE("tau wedge xi is the single contraction") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const GridField tau = make_trig_field(c, FiberSignature::scalar(1), 31, 1);
    const GridField xi = make_trig_field(c, FiberSignature::internal(2, 2, Rep::complementary), 32, 1);
    const GridField out = torsion_wedge(tau, xi);
    double worst = 0.0;
    for (std::size_t p = 0; p < c.points(); ++p)
      for (int a1 = 0; a1 < 4; ++a1)
        for (int f = 0; f < 2; ++f) {
          // complementary values are antisymmetric in their stored indices like a form
          cplx expect = 0.0;
          for (int a2 = 0; a2 < 4; ++a2) expect += form_at(xi, p, {a1, a2}, f) * tau.at(p, a2, 0);
          worst = std::max(worst, std::abs(out.at(p, a1, f) - expect));
        }
    CHECK(worst < 1e-13);
    // the same product through the standard representation
    CHECK(max_abs_diff(out, to_rep(wedge(tau, to_rep(xi, Rep::standard)), Rep::complementary)) < 1e-13);
  }

  TEST_CASE("interior product") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    GridField e0(c, FiberSignature{{tangent()}, 0, Rep::standard});
    for (std::size_t p = 0; p < c.points(); ++p) e0.at(p, 0, 0) = 1.0;
    const GridField i01 = interior_product(e0, wedge(one_form(c, 0), one_form(c, 1)));
    CHECK(i01.signature().degree == 1);
    for (int a = 0; a < 4; ++a) CHECK(i01.at(2, a, 0) == cplx(a == 1 ? 1.0 : 0.0));

    GridField top(c, FiberSignature::scalar(4));
    for (std::size_t p = 0; p < c.points(); ++p) top.at(p, 0, 0) = 1.0;
    const GridField i_top = interior_product(e0, top);
    // dx^{123} sits at the last sorted triple; its sign follows eps(0,1,2,3) = +1
    const IndexSet& tri = index_set(4, 3);
    for (int q = 0; q < tri.size(); ++q) {
      const double expect = tri.indices(q) == std::vector<int>{1, 2, 3} ? 1.0 : 0.0;
      CHECK(i_top.at(0, q, 0) == cplx(expect));
    }

    const GridField v = make_trig_field(c, FiberSignature{{tangent()}, 0, Rep::standard}, 40, 1);
    const GridField xi = make_trig_field(c, FiberSignature::internal(2, 3), 41, 1);
    CHECK(sup_norm(interior_product(v, interior_product(v, xi))) < 1e-13);
  }

  TEST_CASE("torsion bar-wedge") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const FiberSignature tsig{{tangent()}, 2, Rep::standard};
    const GridField zeroT(c, tsig);
    const GridField xi = make_trig_field(c, FiberSignature::internal(2, 2, Rep::complementary), 50, 1);
    CHECK(sup_norm(t_bar_wedge(zeroT, xi)) == 0.0);

    // single T^0_{12} = 1 and xi^{12} = 1
    GridField T(c, tsig);
    GridField x(c, FiberSignature::scalar(2, Rep::complementary));
    const IndexSet& pairs = index_set(4, 2);
    int q12 = -1;
    for (int q = 0; q < pairs.size(); ++q)
      if (pairs.indices(q) == std::vector<int>{1, 2}) q12 = q;
    for (std::size_t p = 0; p < c.points(); ++p) {
      T.at(p, q12, 0) = 1.0;
      x.at(p, q12, 0) = 1.0;
    }
    const GridField out = t_bar_wedge(T, x);
    CHECK(out.at(0, 0, 0) == cplx(2.0));
    for (int a = 1; a < 4; ++a) CHECK(out.at(0, a, 0) == cplx(0.0));
  }

  TEST_CASE("Hodge star on Minkowski") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const Metric eta = Metric::minkowski(c);
    const GridField s0 = hodge_star(one_form(c, 0), eta);
    CHECK(s0.signature().rep == Rep::complementary);
    CHECK(s0.at(0, 0, 0) == cplx(1.0));
    const GridField s1 = hodge_star(one_form(c, 1), eta);
    CHECK(s1.at(0, 1, 0) == cplx(-1.0));
    CHECK(s1.at(0, 0, 0) == cplx(0.0));
  }

  TEST_CASE("Hodge star against the permutation-symbol formula") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    // random diagonal Lorentzian metric
    GridField g(c, FiberSignature{{cotangent(), cotangent()}, 0, Rep::standard});
    const GridField d = make_trig_field(c, FiberSignature::internal(4), 60, 1);
    for (std::size_t p = 0; p < c.points(); ++p)
      for (int a = 0; a < 4; ++a) {
        const double v = 1.0 + 0.2 * d.at(p, 0, a).real();
        g.at(p, 0, a * 4 + a) = a == 0 ? v : -v;
      }
    const Metric metric(g);
    for (int r = 1; r <= 3; ++r) {
      const GridField zeta = make_trig_field(c, FiberSignature::internal(2, r), 61 + r, 1);
      const GridField star = to_rep(hodge_star(zeta, metric), Rep::standard);
      double worst = 0.0;
      const IndexSet& outs = index_set(4, 4 - r);
      for (std::size_t p = 0; p < c.points(); p += 7) {
        const double sqrtg = std::sqrt(std::abs(g.at(p, 0, 0).real() * g.at(p, 0, 5).real() * g.at(p, 0, 10).real() *
                                                g.at(p, 0, 15).real()));
        for (int o = 0; o < outs.size(); ++o)
          for (int f = 0; f < 2; ++f) {
            cplx expect = 0.0;
            double fact = 1.0;
            for (int k = 2; k <= r; ++k) fact *= k;
            for_each_tuple(4, r, [&](const std::vector<int>& a) {
              const int e = inversion_sign(concat(a, outs.indices(o)));
              if (e == 0) return;
              // raise every index with the diagonal inverse
              double raise = 1.0;
              for (int ai : a) raise /= g.at(p, 0, ai * 5).real();
              expect += static_cast<double>(e) * raise * form_at(zeta, p, a, f);
            });
            expect *= sqrtg / fact;
            worst = std::max(worst, std::abs(star.at(p, o, f) - expect));
          }
      }
      CHECK(worst < 1e-12);
    }
  }

  TEST_CASE("Hodge star twice gives the signature sign") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const Metric eta = Metric::minkowski(c);
    for (int r = 0; r <= 4; ++r) {
      const GridField zeta = make_trig_field(c, FiberSignature::scalar(r), 70 + r, 1);
      const GridField once = to_rep(hodge_star(zeta, eta), Rep::standard);
      const GridField twice = to_rep(hodge_star(once, eta), Rep::standard);
      const double sign = ((r * (4 - r)) % 2 == 0 ? 1.0 : -1.0) * -1.0;
      CHECK(max_abs_diff(twice, sign * zeta) < 1e-13);
    }
  }

  TEST_CASE("commutator") {
    const Chart c = Chart::with_period(2, 4, 1.0);
    const FiberSignature e2 = FiberSignature::endo(2);
    const cplx I(0.0, 1.0);
    GridField s1(c, e2, ScalarKind::complex), s2(c, e2, ScalarKind::complex);
    for (std::size_t p = 0; p < c.points(); ++p) {
      s1.at(p, 0, 1) = 1.0;
      s1.at(p, 0, 2) = 1.0;
      s2.at(p, 0, 1) = -I;
      s2.at(p, 0, 2) = I;
    }
    const GridField k = commutator(s1, s2);
    // 2 i sigma_3
    CHECK(k.at(0, 0, 0) == 2.0 * I);
    CHECK(k.at(0, 0, 3) == -2.0 * I);
    CHECK(k.at(0, 0, 1) == cplx(0.0));
    CHECK(sup_norm(commutator(s1, s1)) == 0.0);

    const GridField A = make_trig_field(c, FiberSignature::endo(3), 80, 1, ScalarKind::complex);
    const GridField B = make_trig_field(c, FiberSignature::endo(3), 81, 1, ScalarKind::complex);
    const GridField AB = commutator(A, B);
    double tr = 0.0;
    for (std::size_t p = 0; p < c.points(); ++p) tr = std::max(tr, std::abs(AB.at(p, 0, 0) + AB.at(p, 0, 4) + AB.at(p, 0, 8)));
    CHECK(tr < 1e-13);
  }
}
