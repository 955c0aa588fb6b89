#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "covform/calculus.hpp"
#include "covform/sectors.hpp"

namespace covform {

// Fixed geometry the fields live on. An empty gamma or spin acts as zero.
struct Background {
  Metric metric;
  SpacetimeConnection gamma;
  SpinorConnection spin;
};

Background flat_background(const Chart& chart);

// Fields plus their covariant prolongation. nabla_phi, nabla_phibar, rho and z2
// are always derived from (phi, phibar, kappa, background); z2 = -rho.
struct DFState {
  SectorSpec spec;
  Background bg;
  LinearConnection kappa;
  GridField phi, phibar;
  GridField nabla_phi, nabla_phibar;
  GridField rho, z2;
  int order = 2;

  const Chart& chart() const { return kappa.chart(); }
  ConnectionSet connections() const;
  // the values of the prolongation at p, ready for the sector formulas
  FiberPoint fiber_point(std::size_t p) const;
};

// Gauge sector: phi and phibar may be empty.
DFState prolong(const SectorSpec& spec, const GridField& phi, const GridField& phibar, const LinearConnection& kappa,
                const Background& bg, int order = 2);

// Momenta sampled from the closed forms at every point, complementary storage:
// pi0/pi0bar degree m, pi1/pi1bar degree m-1, pi2 degree m-2 with fiber End(n).
struct MomentumFields {
  GridField pi0, pi0bar, pi1, pi1bar, pi2;
};

MomentumFields momentum_fields(const DFState& s);
GridField lambda_field(const DFState& s);

// -Pi^a / sqrt|g|, the contravariant view of a degree m-1 momentum.
GridField contravariant_momentum(const GridField& pi1, const Metric& g);

// matter:     Pi0 - d_K Pi1            (paired with delta phi)
// matter_bar: Pi0bar - d_K Pi1bar      (paired with delta phibar)
// gauge:      Pi1 (x) phi - phibar (x) Pi1bar - d_K Pi2, fiber (i,j) paired with delta kappa^i_{bj}
struct Residuals {
  GridField matter, matter_bar, gauge;
};

struct FieldEquations {
  Residuals covariant;   // d_K through dual and tensor-product fiber connections
  Residuals simplified;  // explicit coordinate loops over kappa and Gamma
};

FieldEquations field_eq_residual(const DFState& s);

// i g^{ab} gamma_a nabla_b psi - m psi + (i/2) g^{ab} tau_a gamma_b psi and
// -i g^{ab} nabla_b psibar gamma_a - m psibar - (i/2) g^{ab} tau_a psibar gamma_b.
struct DiracResiduals {
  GridField psi, psibar;
};
DiracResiduals dirac_residual(const DFState& s);

// Exact derivatives of a metric: dg per axis, ddg[a*m + b] = d_a d_b g.
struct MetricJet {
  Metric g;
  Gradient dg;
  std::vector<GridField> ddg;
};

MetricJet frw_jet(const Chart& chart, double amplitude);
// Metric::sampled with its exact derivatives.
MetricJet sampled_jet(const Chart& chart, std::uint64_t seed, double amplitude);
// Levi-Civita connection and its exact derivatives per axis.
Gradient levi_civita_gradient(const MetricJet& jet);

struct GravityResiduals {
  GridField einstein;        // G^{ab}, fiber {TM, TM}
  GridField g_residual;      // G^{ab} sqrt|g|, the metric-slot momentum
  GridField gamma_residual;  // -d_K Pi2, fiber End(TM) flat c*m + d, one stored index b
  GridField gamma_explicit;  // the same through coordinate loops
  GridField metricity;       // nabla_c (g^{bd} sqrt|g|), fiber {T*M, TM, TM}
  // nabla_c h^{bd} - delta^b_c nabla_a h^{ad} with h = g^{-1} sqrt|g|, laid out like
  // gamma_residual; the two coincide for torsion-free Gamma
  GridField metricity_pattern;
};

// `dgamma` supplies exact derivatives of the connection coefficients per axis.
GravityResiduals gravity_residuals(const Metric& g, const SpacetimeConnection& gamma,
                                   const Gradient* dgamma = nullptr, int order = 2);

// U^a_b, fiber {TM, T*M} flat a*m + b.
struct EnergyTensors {
  GridField generic;      // lambda delta - Pi1 z1_b - Pi1bar z1bar_b - 2 Pi^{ac} z_{bc}
  GridField closed_form;  // sector formula
};
EnergyTensors canonical_energy_tensor(const DFState& s);

struct StressEnergy {
  GridField t;       // T^{ab}, fiber {TM, TM}
  GridField t_low;   // T_{ab}
  GridField u_sym;   // U_{ab} + U_{ba} (density)
  GridField t_rel;   // -(U_{ab} + U_{ba}) / (4 sqrt|g|)
};

// Gauge and boson from the metric derivative of lambda; Dirac only on a
// constant metric, where T is taken from t_rel. Gravity is refused.
StressEnergy stress_energy_tensor(const DFState& s);

// nabla_a T^{ab}, fiber {TM}.
GridField divergence_of_T(const GridField& t, const SpacetimeConnection& gamma, int order = 2);

// Vertical values of an infinitesimal transformation.
struct Vertical {
  GridField w, wbar;  // matter components
  GridField wk;       // End(n) standard 1-form
};

// I^a = u^b U^a_b + Pi1^a w + Pi1bar^a wbar + 2 Pi^{ab} wk_b, scalar with one stored index.
GridField noether_current(const GridField& u, const Vertical& w, const DFState& s);
// sum_a d_a I^a
GridField current_divergence(const GridField& current, int order = 2);

enum class FieldSlot { phi, phibar, kappa };

// Discrete action on the periodic chart and its one-point variation.
class ActionTools {
 public:
  explicit ActionTools(const DFState& s);
  cplx action() const;
  // central difference of the action under field(p)[comp, f] +- eps, recomputing
  // only the points whose prolongation sees p
  cplx variation_oracle(FieldSlot slot, std::size_t p, int comp, int f, double eps) const;
  // same with a full recomputation, bit-identical to the above
  cplx variation_oracle_full(FieldSlot slot, std::size_t p, int comp, int f, double eps) const;

 private:
  cplx lambda_at(std::size_t q, const GridField& phi, const GridField& phibar, const GridField& k) const;
  cplx sum(const std::vector<cplx>& lam) const;
  cplx difference(const std::vector<cplx>& lp, const std::vector<cplx>& lm, double eps) const;
  GridField& target(FieldSlot slot, GridField& phi, GridField& phibar, GridField& k) const;

  DFState s_;
  std::vector<PointMetric> metrics_;
  std::vector<cplx> base_;
};

// Prolongation values at one point from raw inputs; shared by the grid and the local action paths.
void prolong_point(const DFState& s, const GridField& phi, const GridField& phibar, const GridField& k,
                   std::size_t p, FiberPoint& out);

}  // namespace covform
