#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covform/signature.hpp"

namespace covform {

enum class Sector { gauge, boson, dirac, gravity };

Sector sector_from_name(const std::string& name);
std::string sector_name(Sector s);

struct SectorSpec {
  Sector sector = Sector::gauge;
  int m = 4;
  int n = 1;          // internal dimension (gravity: ignored, the curvature slot is End(TM))
  bool tangent_y = false;  // boson only: matter fiber E (x) TM instead of E
  double mass = 0.0;

  // matter fiber dimension: boson n*dimY (index i*dimY + A), Dirac 4n (index alpha*n + i)
  int matter_dim() const;
  int dim_y() const { return tangent_y ? m : 1; }
  // internal dimension of the curvature slot
  int curvature_n() const { return sector == Sector::gravity ? m : n; }
  bool has_matter() const { return sector == Sector::boson || sector == Sector::dirac; }
};

// Fiber signature of the matter field: boson {E} or {E, TM}, Dirac {spinor, E}.
FiberSignature matter_signature(const SectorSpec& spec);

// Values standing for one point of the covariant prolongation bundle.
// z2 stores sorted pairs a<b, entry pair*cn*cn + i*cn + j = z_{ab}^i_j.
struct FiberPoint {
  std::vector<double> g;      // m*m
  std::vector<cplx> y, ybar;  // matter and its dual partner
  std::vector<cplx> z1, z1bar;  // a*F + I
  std::vector<cplx> z2;
  std::vector<cplx> kappa;    // a*n*n + f; never read by any Lagrangian
};

FiberPoint zero_fiber_point(const SectorSpec& spec);
// Lorentzian metric near Minkowski, random matter and curvature values.
FiberPoint random_fiber_point(const SectorSpec& spec, std::uint64_t seed);
// Sets ybar = y^dagger gamma^0 and z1bar likewise (Dirac sector).
void dirac_adjoint_pair(const SectorSpec& spec, FiberPoint& pt);

cplx sector_lambda(const SectorSpec& spec, const FiberPoint& pt);

// Momenta in complementary coefficient form:
//   pi0[I] = d lambda / d y^I,  pi1[a*F + I] = d lambda / d z_a^I,
//   pi2[pair*cn*cn + f] = d lambda / d z_{ab}[f] for the independent a<b entry (twice the
//   all-index tensor component), barred versions for the dual slots,
//   dg[p*m + q] symmetric with delta lambda = sum_{pq} dg[pq] delta g_{pq}.
struct Momenta {
  std::vector<cplx> pi0, pi1, pi2, pi0bar, pi1bar, pik;
  std::vector<cplx> dg;
};

Momenta momenta_analytic(const SectorSpec& spec, const FiberPoint& pt);
Momenta momenta_numeric(const SectorSpec& spec, const FiberPoint& pt, double step = 1e-4);

// d lambda / d g_{pq}, symmetric, closed form for every sector.
std::vector<cplx> metric_derivative_analytic(const SectorSpec& spec, const FiberPoint& pt);

// Pointwise metric helpers shared by the sector formulas.
struct PointMetric {
  int m = 4;
  std::vector<double> g, ginv;
  double sqrtg = 1.0;
  PointMetric() = default;
  explicit PointMetric(const std::vector<double>& g_in);
};

// Same as above with the metric data already at hand (pt.g is not read).
cplx sector_lambda(const SectorSpec& spec, const FiberPoint& pt, const PointMetric& g);
Momenta momenta_analytic(const SectorSpec& spec, const FiberPoint& pt, const PointMetric& g);
std::vector<cplx> metric_derivative_analytic(const SectorSpec& spec, const FiberPoint& pt, const PointMetric& g);

// Gauge closed form: C2 = hodge(z2 with fiber transposed), i.e. 2 Pi^{ab}.
void gauge_pi2(const SectorSpec& spec, const PointMetric& g, const cplx* z2, cplx* pi2);

}  // namespace covform
