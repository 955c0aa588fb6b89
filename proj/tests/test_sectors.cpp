#include <cmath>

#include "covform/sectors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace covform;
using testutil::sz;

namespace {

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double max_abs(const std::vector<cplx>& a) {
  double worst = 0.0;
  for (const auto& x : a) worst = std::max(worst, std::abs(x));
  return worst;
}

SectorSpec spec_of(Sector s, int n, double mass = 0.0) {
  SectorSpec spec;
  spec.sector = s;
  spec.n = n;
  spec.mass = mass;
  return spec;
}

}  // namespace

TEST_SUITE("sectors") {
  TEST_CASE("Lagrangian values on hand-built points") {
    const SectorSpec gauge = spec_of(Sector::gauge, 2);
    CHECK(sector_lambda(gauge, zero_fiber_point(gauge)) == cplx(0.0));

    // boson at rest: only the mass term, -m^2/2 sum |y|^2
    const SectorSpec boson = spec_of(Sector::boson, 2, 1.5);
    FiberPoint b = zero_fiber_point(boson);
    b.y = {cplx(0.3, 0.1), cplx(-0.7, 0.2)};
    b.ybar = {std::conj(b.y[0]), std::conj(b.y[1])};
    const double y2 = std::norm(b.y[0]) + std::norm(b.y[1]);
    CHECK(std::abs(sector_lambda(boson, b) - cplx(-0.5 * 2.25 * y2)) < 1e-15);

    // abelian field strength F in the 01 plane on Minkowski: -F^2 / 2
    const SectorSpec abelian = spec_of(Sector::gauge, 1);
    FiberPoint a = zero_fiber_point(abelian);
    a.z2[0] = 0.8;
    CHECK(std::abs(sector_lambda(abelian, a) - cplx(-0.32)) < 1e-15);
    // a purely spatial plane flips the sign: +F^2 / 2 with F in the 12 plane
    FiberPoint s = zero_fiber_point(abelian);
    s.z2[3] = 0.8;
    CHECK(std::abs(sector_lambda(abelian, s) - cplx(0.32)) < 1e-15);

    const SectorSpec grav = spec_of(Sector::gravity, 1);
    CHECK(sector_lambda(grav, zero_fiber_point(grav)) == cplx(0.0));
  }

  TEST_CASE("boson momenta at rest") {
    const SectorSpec boson = spec_of(Sector::boson, 1, 2.0);
    FiberPoint pt = zero_fiber_point(boson);
    pt.y = {cplx(0.4, -0.3)};
    pt.ybar = {cplx(0.4, 0.3)};
    const Momenta M = momenta_analytic(boson, pt);
    CHECK(max_abs(M.pi1) == 0.0);
    CHECK(max_abs(M.pi1bar) == 0.0);
    CHECK(std::abs(M.pi0[0] - (-0.5 * 4.0) * pt.ybar[0]) < 1e-15);
    CHECK(std::abs(M.pi0bar[0] - (-0.5 * 4.0) * pt.y[0]) < 1e-15);
  }

  TEST_CASE("gravity curvature momentum on Minkowski") {
    const SectorSpec grav = spec_of(Sector::gravity, 1);
    const FiberPoint pt = zero_fiber_point(grav);
    const Momenta M = momenta_analytic(grav, pt);
    CHECK(max_abs(M.dg) == 0.0);
    const int cn = 4;
    // pair (0,1): d lambda / d z_{01}^0_1 = g^{11}, d lambda / d z_{01}^1_0 = -g^{00}
    CHECK(M.pi2[sz(0 * cn + 1)] == cplx(-1.0));
    CHECK(M.pi2[sz(1 * cn + 0)] == cplx(-1.0));
    CHECK(M.pi2[sz(2 * cn + 3)] == cplx(0.0));
  }

  TEST_CASE("closed-form momenta match finite differences") {
    struct Case {
      SectorSpec spec;
      const char* name;
    };
    SectorSpec ty = spec_of(Sector::boson, 2, 0.7);
    ty.tangent_y = true;
    const std::vector<Case> cases{{spec_of(Sector::gauge, 2), "gauge"},
                                  {spec_of(Sector::boson, 2, 0.7), "boson"},
                                  {ty, "boson E x TM"},
                                  {spec_of(Sector::dirac, 2, 1.3), "dirac"},
                                  {spec_of(Sector::gravity, 1), "gravity"}};
    for (const auto& c : cases) {
      CAPTURE(c.name);
      double worst = 0.0, scale = 1.0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        FiberPoint pt = random_fiber_point(c.spec, 1000 + seed);
        const Momenta a = momenta_analytic(c.spec, pt);
        const Momenta n = momenta_numeric(c.spec, pt);
        worst = std::max({worst, max_diff(a.pi0, n.pi0), max_diff(a.pi0bar, n.pi0bar), max_diff(a.pi1, n.pi1),
                          max_diff(a.pi1bar, n.pi1bar), max_diff(a.pi2, n.pi2), max_diff(a.dg, n.dg)});
        scale = std::max({scale, max_abs(a.pi1), max_abs(a.pi2), max_abs(a.dg)});
        // the connection values never enter a Lagrangian
        CHECK(max_abs(n.pik) == 0.0);
      }
      // central differences with step 1e-4 on polynomials of low degree
      CHECK(worst < 1e-7 * scale);
    }
  }

  TEST_CASE("gauge Lagrangian is invariant under a constant conjugation") {
    const SectorSpec gauge = spec_of(Sector::gauge, 2);
    const FiberPoint pt = random_fiber_point(gauge, 7);
    const Subalgebra alg = Subalgebra::su2();
    std::vector<cplx> U(4);
    for (int f = 0; f < 4; ++f) U[sz(f)] = ((f == 0 || f == 3) ? 1.0 : 0.0) + 0.9 * alg.basis[1][sz(f)];
    const cplx det = U[0] * U[3] - U[1] * U[2];
    const std::vector<cplx> Ui{U[3] / det, -U[1] / det, -U[2] / det, U[0] / det};
    auto mul = [](const cplx* a, const cplx* b, cplx* out) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out[i * 2 + j] = a[i * 2] * b[j] + a[i * 2 + 1] * b[2 + j];
    };
    FiberPoint rot = pt;
    for (std::size_t q = 0; q < pt.z2.size() / 4; ++q) {
      cplx tmp[4];
      mul(U.data(), pt.z2.data() + 4 * q, tmp);
      mul(tmp, Ui.data(), rot.z2.data() + 4 * q);
    }
    CHECK(max_diff(rot.z2, pt.z2) > 1e-3);
    CHECK(std::abs(sector_lambda(gauge, rot) - sector_lambda(gauge, pt)) < 1e-13);
  }

  TEST_CASE("Dirac Lagrangian is real for an adjoint pair") {
    const SectorSpec dirac = spec_of(Sector::dirac, 2, 0.5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      FiberPoint pt = random_fiber_point(dirac, 300 + seed);
      dirac_adjoint_pair(dirac, pt);
      const cplx l = sector_lambda(dirac, pt);
      CHECK(std::abs(l.imag()) <= 1e-12 * std::max(1.0, std::abs(l)));
    }
    const SectorSpec boson = spec_of(Sector::boson, 1);
    FiberPoint b = zero_fiber_point(boson);
    CHECK_THROWS_AS(dirac_adjoint_pair(boson, b), Error);
  }
}
