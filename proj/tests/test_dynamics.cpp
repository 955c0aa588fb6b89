#include <cmath>
#include <numbers>

#include "covform/dynamics.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace covform;
using testutil::su2_connection;

namespace {

SectorSpec spec_of(Sector s, int n, double mass = 0.0) {
  SectorSpec spec;
  spec.sector = s;
  spec.n = n;
  spec.mass = mass;
  return spec;
}

GridField constant_field(const Chart& c, const FiberSignature& sig, const std::vector<cplx>& v) {
  GridField f(c, sig, ScalarKind::complex);
  for (std::size_t p = 0; p < c.points(); ++p)
    for (std::size_t k = 0; k < v.size(); ++k) f.at(p, 0, static_cast<int>(k)) = v[k];
  return f;
}

DFState constant_boson(const Chart& c, double mass) {
  const SectorSpec spec = spec_of(Sector::boson, 2, mass);
  const FiberSignature sig = matter_signature(spec);
  const GridField phi = constant_field(c, sig, {cplx(0.6, -0.2), cplx(0.1, 0.5)});
  const GridField phibar = constant_field(c, sig.dual(), {cplx(0.6, 0.2), cplx(0.1, -0.5)});
  return prolong(spec, phi, phibar, LinearConnection::zero(c, 2, ScalarKind::complex), flat_background(c));
}

DFState random_boson(const Chart& c) {
  const SectorSpec spec = spec_of(Sector::boson, 2, 1.1);
  const FiberSignature sig = matter_signature(spec);
  const GridField phi = make_trig_field(c, sig, 11, 1, ScalarKind::complex);
  const GridField phibar = make_trig_field(c, sig.dual(), 12, 1, ScalarKind::complex);
  LinearConnection k = su2_connection(c, 13);
  return prolong(spec, phi, phibar, k, flat_background(c));
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("prolongation of constant fields") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const DFState s = constant_boson(c, 1.0);
    CHECK(sup_norm(s.nabla_phi) == 0.0);
    CHECK(sup_norm(s.nabla_phibar) == 0.0);
    CHECK(sup_norm(s.rho) == 0.0);
    CHECK(sup_norm(s.z2) == 0.0);
    const FiberPoint pt = s.fiber_point(5);
    CHECK(pt.y[0] == cplx(0.6, -0.2));
    CHECK(pt.ybar[1] == cplx(0.1, -0.5));
  }

  TEST_CASE("z2 is minus the curvature") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const DFState s = random_boson(c);
    CHECK(sup_norm(s.rho) > 0.1);
    CHECK(max_abs_diff(s.z2, -1.0 * s.rho) == 0.0);
  }

  TEST_CASE("vacuum states solve the field equations") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const DFState gauge = prolong(spec_of(Sector::gauge, 2), GridField(), GridField(),
                                  LinearConnection::zero(c, 2), flat_background(c));
    const FieldEquations ge = field_eq_residual(gauge);
    CHECK(sup_norm(ge.covariant.gauge) == 0.0);
    CHECK(sup_norm(ge.simplified.gauge) == 0.0);

    // massless Dirac spinor, constant in space and time
    const SectorSpec dirac = spec_of(Sector::dirac, 1);
    const FiberSignature ds = matter_signature(dirac);
    const GridField psi = constant_field(c, ds, {cplx(0.3, 0.1), cplx(-0.2, 0.4), cplx(0.5, 0.0), cplx(0.0, -0.7)});
    GridField psibar(c, ds.dual(), ScalarKind::complex);
    // psi^dagger gamma^0 with gamma^0 = diag(1, 1, -1, -1)
    for (std::size_t p = 0; p < c.points(); ++p)
      for (int al = 0; al < 4; ++al) psibar.at(p, 0, al) = (al < 2 ? 1.0 : -1.0) * std::conj(psi.at(p, 0, al));
    const DFState ds0 = prolong(dirac, psi, psibar, LinearConnection::zero(c, 1, ScalarKind::complex), flat_background(c));
    const DiracResiduals dr = dirac_residual(ds0);
    CHECK(sup_norm(dr.psi) == 0.0);
    CHECK(sup_norm(dr.psibar) == 0.0);
    const FieldEquations de = field_eq_residual(ds0);
    CHECK(sup_norm(de.covariant.matter) == 0.0);
    CHECK(sup_norm(de.covariant.matter_bar) == 0.0);
  }

  TEST_CASE("gravity residuals vanish on Minkowski") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const Metric g = Metric::minkowski(c);
    const GravityResiduals r = gravity_residuals(g, levi_civita(g));
    CHECK(sup_norm(r.einstein) == 0.0);
    CHECK(sup_norm(r.g_residual) == 0.0);
    CHECK(sup_norm(r.gamma_residual) == 0.0);
    CHECK(sup_norm(r.gamma_explicit) == 0.0);
    CHECK(sup_norm(r.metricity) == 0.0);
  }

  TEST_CASE("FRW Einstein tensor matches the textbook closed form") {
    // g = diag(1, -a^2, -a^2, -a^2): G^{00} = 3 a'^2 / a^2, G^{ii} = -(2 a a'' + a'^2) / a^4
    const double amp = 0.1;
    const Chart c = Chart::with_period(4, 8, 1.0);
    const MetricJet jet = frw_jet(c, amp);
    const Gradient dgamma = levi_civita_gradient(jet);
    const GravityResiduals r = gravity_residuals(jet.g, levi_civita(jet.g, &jet.dg), &dgamma);
    const double w = 2.0 * std::numbers::pi;
    double worst = 0.0;
    for (std::size_t p = 0; p < c.points(); ++p) {
      const double t = c.coordinate(p, 0);
      const double a = 1.0 + amp * std::sin(w * t), da = amp * w * std::cos(w * t),
                   dda = -amp * w * w * std::sin(w * t);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double expect = 0.0;
          if (i == j) expect = i == 0 ? 3.0 * da * da / (a * a) : -(2.0 * a * dda + da * da) / std::pow(a, 4);
          worst = std::max(worst, std::abs(r.einstein.at(p, 0, i * 4 + j) - expect));
        }
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("energy tensors of a constant boson") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const double mass = 1.7;
    const DFState s = constant_boson(c, mass);
    const EnergyTensors U = canonical_energy_tensor(s);
    const double y2 = std::norm(cplx(0.6, -0.2)) + std::norm(cplx(0.1, 0.5));
    const double lam = -0.5 * mass * mass * y2;
    double worst = 0.0;
    for (std::size_t p = 0; p < c.points(); ++p)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double expect = a == b ? lam : 0.0;
          worst = std::max({worst, std::abs(U.generic.at(p, 0, a * 4 + b) - expect),
                            std::abs(U.closed_form.at(p, 0, a * 4 + b) - expect)});
        }
    CHECK(worst < 1e-14);

    const StressEnergy vac = stress_energy_tensor(constant_boson(c, 0.0));
    CHECK(sup_norm(vac.t) < 1e-15);
    CHECK(sup_norm(vac.u_sym) < 1e-15);
    CHECK(sup_norm(divergence_of_T(stress_energy_tensor(s).t, SpacetimeConnection::zero(c))) == 0.0);
  }

  TEST_CASE("Noether current of the trivial transformation") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const DFState s = random_boson(c);
    const GridField I = noether_current(GridField(), Vertical{}, s);
    CHECK(sup_norm(I) == 0.0);
    CHECK(sup_norm(current_divergence(I)) == 0.0);
    CHECK_THROWS_AS(noether_current(GridField(), Vertical{GridField(c, FiberSignature::internal(3)), {}, {}}, s), Error);
  }

  TEST_CASE("discrete action and its one-point variation") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const ActionTools vac(constant_boson(c, 0.0));
    CHECK(vac.action() == cplx(0.0));

    const ActionTools tools(random_boson(c));
    for (FieldSlot slot : {FieldSlot::phi, FieldSlot::phibar, FieldSlot::kappa}) {
      const cplx local = tools.variation_oracle(slot, 37, slot == FieldSlot::kappa ? 2 : 0, 1, 1e-4);
      const cplx full = tools.variation_oracle_full(slot, 37, slot == FieldSlot::kappa ? 2 : 0, 1, 1e-4);
      CHECK(local == full);
    }
  }
}
