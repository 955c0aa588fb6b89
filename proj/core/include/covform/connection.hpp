#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "covform/fiber.hpp"

namespace covform {

using Matrix = std::vector<cplx>;  // row-major n x n

// Basis of a Lie subalgebra of gl(n).
struct Subalgebra {
  std::string name;
  int n = 1;
  std::vector<Matrix> basis;

  static Subalgebra u1();    // {i}, n = 1
  static Subalgebra su2();   // {-i/2 sigma_k}, n = 2
  static Subalgebra real1(); // {1}, n = 1
  static Subalgebra by_name(const std::string& name);

  // distance of X from the real span of the basis (least squares)
  double projection_residual(const cplx* X) const;
  // real coefficients c_I minimizing |X - sum c_I basis_I|
  std::vector<double> coordinates(const cplx* X) const;
};

// kappa^i_{aj}: standard 1-form with fiber End(n); at(p, a, i*n + j).
// Covariant derivative convention: nabla_a phi^i = d_a phi^i - kappa^i_{aj} phi^j.
struct LinearConnection {
  GridField k;
  std::optional<Subalgebra> algebra;

  int n() const { return k.signature().factors.at(0).n; }
  const Chart& chart() const { return k.chart(); }

  static LinearConnection zero(const Chart& chart, int n, ScalarKind kind = ScalarKind::real);
  // Throws when an attached subalgebra does not contain kappa_a(x) within tol.
  void validate(double tol = 1e-10) const;
};

// sup over points and components of the distance of an End(n) field from span(algebra)
double subalgebra_residual(const GridField& f, const Subalgebra& algebra);

// Standard Christoffel symbols G^a_{bc}, nabla_b v^a = d_b v^a + G^a_{bc} v^c.
// Stored as a degree-0 field with fiber {TM, T*M, T*M}, flat index (a*m + b)*m + c.
struct SpacetimeConnection {
  GridField gamma;
  GridField torsion;  // T^a_{bc} = G^a_{bc} - G^a_{cb}: standard 2-form, fiber {TM}
  GridField tau;      // tau_a = T^b_{ab}: scalar standard 1-form

  const Chart& chart() const { return gamma.chart(); }
  int dim() const { return gamma.chart().dim(); }
  double G(std::size_t p, int a, int b, int c) const {
    const int m = dim();
    return gamma.at(p, 0, (a * m + b) * m + c).real();
  }

  static SpacetimeConnection zero(const Chart& chart);
  // torsion and tau are derived here
  static SpacetimeConnection from_gamma(GridField gamma);
};

SpacetimeConnection levi_civita(const Metric& g, const Gradient* dg = nullptr, int order = 2);
GridField torsion_of(const GridField& gamma);

// 4x4 Dirac-representation gamma matrices; gamma_upper(0) = diag(1,1,-1,-1).
Matrix gamma_upper(int a);
// gamma_a = eta_{ab} gamma^b for the flat (+,-,-,-) metric
Matrix gamma_lower(int a);

// Spinor connection coefficients, standard 1-form with fiber End(4), complex.
struct SpinorConnection {
  GridField k;
  static SpinorConnection zero(const Chart& chart);
};

LinearConnection dual_connection(const LinearConnection& kappa);

// Connections available to build a fiber connection. Missing entries act as zero.
struct ConnectionSet {
  const LinearConnection* kappa = nullptr;
  const SpacetimeConnection* gamma = nullptr;
  const SpinorConnection* spin = nullptr;
};

// Connection on a product fiber as a Kronecker sum of per-factor actions,
// nabla_a phi = d_a phi - K_a phi. Factor matrices are kept separately and the
// sum is applied on the fly.
class FiberConnection {
 public:
  FiberConnection() = default;
  FiberConnection(const Chart& chart, const FiberSignature& sig, const ConnectionSet& set);

  const Chart& chart() const { return chart_; }
  int fiber_dim() const { return fdim_; }
  const FiberSignature& signature() const { return sig_; }

  // out += s * K_a(p) in
  void apply(std::size_t p, int a, const cplx* in, cplx* out, cplx s = 1.0) const;
  // out += s * K_a(p)^T in  (the transpose, used for dual pairings)
  void apply_transpose(std::size_t p, int a, const cplx* in, cplx* out, cplx s = 1.0) const;
  Matrix materialize(std::size_t p, int a) const;
  // connection on the dual fiber: -K^T per factor
  FiberConnection dual() const;
  bool is_zero() const;
  // complex when any factor source is complex
  ScalarKind kind() const;

 private:
  struct Part {
    FactorKind kind = FactorKind::internal_vector;
    int dim = 0;
    int n = 0;
    std::shared_ptr<const GridField> source;  // null when the factor is flat
    bool negate_transpose = false;
  };
  cplx entry(const Part& part, std::size_t p, int a, int r, int c) const;
  cplx raw_entry(const Part& part, std::size_t p, int a, int r, int c) const;

  Chart chart_;
  FiberSignature sig_;
  int fdim_ = 1;
  std::vector<Part> parts_;
  std::vector<int> strides_;
};

FiberConnection tensor_product_connection(const FiberSignature& sig, const ConnectionSet& set);

// rho_{ab} = d_b kappa_a - d_a kappa_b + [kappa_a, kappa_b], standard 2-form End(n).
// `dk` supplies exact derivatives of kappa per axis; otherwise central differences of `order`.
GridField curvature(const LinearConnection& kappa, const Gradient* dk = nullptr, int order = 2);

}  // namespace covform
