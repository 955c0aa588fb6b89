#pragma once

#include <vector>

#include "covform/grid.hpp"

namespace covform {

// Permutation symbol on m labels, 0 on repeats.
int epsilon_symbol(const std::vector<int>& indices);

// Standard <-> complementary representation. With A the stored complementary
// indices and B its sorted complement, C_comp(A) = eps(A,B) C_std(B).
GridField complementary_convert(const GridField& xi);
GridField to_rep(const GridField& xi, Rep rep);

// Exterior product with fibers combined by tensor product (alpha slow, beta fast).
// Complementary inputs are converted; the result is complementary when beta is.
GridField wedge(const GridField& alpha, const GridField& beta);

// tau ^ xi for a scalar 1-form tau and complementary xi, as the direct contraction
// out(A') = sum_a C(A' a) tau_a.
GridField torsion_wedge(const GridField& tau, const GridField& xi);

// Contraction of a vector field (fiber {tangent}, degree 0) into the first form slot.
GridField interior_product(const GridField& v, const GridField& xi);

// T (fiber {tangent}, standard degree 2) contracted into complementary xi with
// at least 2 stored indices.
GridField t_bar_wedge(const GridField& T, const GridField& xi);

// Pointwise metric data. g is stored as a real field with fiber {T*M, T*M}.
class Metric {
 public:
  Metric() = default;
  explicit Metric(GridField g);

  static Metric minkowski(const Chart& chart);
  // diag(1, -a^2, -a^2, ...), a = 1 + amplitude sin(2 pi x0 / L)
  static Metric frw(const Chart& chart, double amplitude);
  // Minkowski plus a small symmetric trig perturbation
  static Metric sampled(const Chart& chart, std::uint64_t seed, double amplitude);

  const Chart& chart() const { return g_.chart(); }
  int dim() const { return g_.chart().dim(); }
  const GridField& field() const { return g_; }
  double g(std::size_t p, int a, int b) const { return g_.at(p, 0, a * dim() + b).real(); }
  double ginv(std::size_t p, int a, int b) const {
    return ginv_[p * static_cast<std::size_t>(dim() * dim()) + static_cast<std::size_t>(a * dim() + b)];
  }
  const double* ginv_point(std::size_t p) const { return ginv_.data() + p * static_cast<std::size_t>(dim() * dim()); }
  double sqrt_abs_det(std::size_t p) const { return sqrtg_[p]; }
  // true when g equals a single constant matrix at every point
  bool constant() const { return constant_; }

 private:
  GridField g_;
  std::vector<double> ginv_;
  std::vector<double> sqrtg_;
  bool constant_ = false;
};

// Pointwise Hodge kernel: out(A) = sqrtg sum_B det(ginv[A,B]) in(B), |A| = |B| = r.
// `in` and `out` hold binomial(m,r) * fdim values, fiber index fastest.
void hodge_point(int m, int r, const double* ginv, double sqrtg, const cplx* in, cplx* out, int fdim);

// Standard degree r -> complementary degree m-r (r stored indices).
GridField hodge_star(const GridField& zeta, const Metric& g);

// Pointwise AB - BA for End(n) fields with matching shape.
GridField commutator(const GridField& A, const GridField& B);

}  // namespace covform
