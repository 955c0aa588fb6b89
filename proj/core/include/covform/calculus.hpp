#pragma once

#include "covform/connection.hpp"

namespace covform {

// How d_kappa_lie weighs the connection term. `connection` counts the bracket
// once when the input is the connection itself, so d(kappa, kappa) gives
// d_a k_b - d_b k_a - [k_a, k_b].
enum class LieMode { linear, connection };

// Derivative-taking operators accept `d`, exact derivatives of their field input
// (one field per axis); when null, central differences of `order` are used.

// Complementary xi with r >= 1 stored indices -> complementary, r-1 indices:
// out(A') = sum_a (d_a C(A' a) - K_a C(A' a)).
GridField d_kappa_basic(const GridField& xi, const FiberConnection& K, const Gradient* d = nullptr, int order = 2);
GridField d_kappa_basic(const GridField& xi, const LinearConnection& kappa, const Gradient* d = nullptr,
                        int order = 2);

// Standard degree r -> r+1: out(B) = sum_k (-1)^k (d_{b_k} - w K_{b_k}) C(B \ b_k).
GridField d_kappa_lie(const GridField& zeta, const FiberConnection& K, LieMode mode = LieMode::linear,
                      const Gradient* d = nullptr, int order = 2);
GridField d_kappa_lie(const GridField& zeta, const LinearConnection& kappa, LieMode mode = LieMode::linear,
                      const Gradient* d = nullptr, int order = 2);

// kappa as an End(n) 1-form fed through d_kappa_lie in connection mode
GridField d_kappa_kappa(const LinearConnection& kappa, const Gradient* dk = nullptr, int order = 2);

// Section phi (degree 0) -> standard 1-form d_a phi - K_a phi.
GridField covariant_derivative(const GridField& phi, const FiberConnection& K, const Gradient* d = nullptr,
                               int order = 2);

// Complementary xi (weight-one density components) -> complementary with one index less.
// Gamma acts on every stored upper index, the density term is -G^c_{ac}, K acts on the fiber.
// r = 0 returns an exact zero field of the input shape.
GridField covariant_divergence(const GridField& xi, const SpacetimeConnection& gamma, const FiberConnection& K,
                               const Gradient* d = nullptr, int order = 2);

// div(xi) - (d_K xi - tau ^ xi - T bar-wedge xi / 2); the last term only for r >= 2.
GridField replacement_residual(const GridField& xi, const SpacetimeConnection& gamma, const FiberConnection& K,
                               const Gradient* d = nullptr, int order = 2);

struct TildeCheck {
  int sign = 1;             // (-1)^{m(r-1)}
  double max_deviation = 0; // sup |tilde(div xi) - sign * div(tilde xi)|
  double scale = 0;         // sup |tilde(div xi)|
};

// Compares the tilde of the covariant divergence with the tensor divergence of
// the r-vector tilde(xi) = C/sqrt|g| (trailing index contracted). Requires even m.
TildeCheck tilde_divergence_sign_check(const GridField& xi, const Metric& g, const SpacetimeConnection& gamma,
                                       const FiberConnection& K, int order = 2);

// i_u d xi + d (i_u xi) with d = d_kappa_lie(., K). xi standard; u has fiber {TM}.
GridField covariant_lie_derivative(const GridField& xi, const GridField& u, const FiberConnection& K,
                                   int order = 2);

// For a section sigma: L(d_k sigma) - d_k(L sigma) + (i_u d_k k) acting on sigma,
// all Lie derivatives with the reference connection kappa itself. Vanishes as h -> 0.
GridField lie_variation_residual(const GridField& sigma, const GridField& u, const LinearConnection& kappa,
                                 int order = 2);

struct VariationPair {
  GridField dphi;    // same signature as phi
  GridField dkappa;  // End(n) standard 1-form
};

struct ProlongVariation {
  GridField dnabla_phi;  // d_a dphi - K_a dphi - dK_a phi
  GridField drho;        // minus the linearization of d_kappa kappa
};

// `background` supplies Gamma / spinor connections for the non-internal factors of phi.
ProlongVariation variation_prolong(const VariationPair& v, const GridField& phi, const LinearConnection& kappa,
                                   const ConnectionSet& background = {}, const Gradient* d_dphi = nullptr,
                                   const Gradient* d_dkappa = nullptr, int order = 2);

// Action of an End(n) value field l on the internal factors of phi (vector l phi,
// covector -l^T phi, endomorphism [l, phi]).
GridField internal_action(const GridField& l, const GridField& phi);

// dphi = l(phi), dkappa = d_a l - [kappa_a, l]. Throws when l leaves kappa's subalgebra.
VariationPair gauge_variation(const GridField& l, const GridField& phi, const LinearConnection& kappa,
                              const Gradient* dl = nullptr, int order = 2);

}  // namespace covform
