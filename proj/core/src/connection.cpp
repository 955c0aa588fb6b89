#include "covform/connection.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "covform/parallel.hpp"

namespace covform {

namespace {

const cplx I{0.0, 1.0};

Matrix pauli(int k) {
  switch (k) {
    case 1: return {0.0, 1.0, 1.0, 0.0};
    case 2: return {0.0, -I, I, 0.0};
    default: return {1.0, 0.0, 0.0, -1.0};
  }
}

}  // namespace

Subalgebra Subalgebra::u1() { return {"u1", 1, {{I}}}; }

Subalgebra Subalgebra::su2() {
  Subalgebra s{"su2", 2, {}};
  for (int k = 1; k <= 3; ++k) {
    Matrix m = pauli(k);
    for (auto& v : m) v *= -0.5 * I;
    s.basis.push_back(m);
  }
  return s;
}

Subalgebra Subalgebra::real1() { return {"real1", 1, {{1.0}}}; }

Subalgebra Subalgebra::by_name(const std::string& name) {
  if (name == "u1") return u1();
  if (name == "su2") return su2();
  if (name == "real1") return real1();
  throw Error("unknown subalgebra basis '" + name + "'");
}

namespace {

// real least squares: stack real and imaginary parts
Eigen::VectorXd solve_real(const Subalgebra& s, const cplx* X, double* residual) {
  const int nn = s.n * s.n;
  const int d = static_cast<int>(s.basis.size());
  Eigen::MatrixXd A(2 * nn, d);
  Eigen::VectorXd b(2 * nn);
  for (int k = 0; k < nn; ++k) {
    for (int j = 0; j < d; ++j) {
      A(k, j) = s.basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].real();
      A(nn + k, j) = s.basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].imag();
    }
    b(k) = X[k].real();
    b(nn + k) = X[k].imag();
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  if (residual) *residual = (A * c - b).norm();
  return c;
}

}  // namespace

double Subalgebra::projection_residual(const cplx* X) const {
  double r = 0.0;
  solve_real(*this, X, &r);
  return r;
}

std::vector<double> Subalgebra::coordinates(const cplx* X) const {
  const Eigen::VectorXd c = solve_real(*this, X, nullptr);
  return {c.data(), c.data() + c.size()};
}

LinearConnection LinearConnection::zero(const Chart& chart, int n, ScalarKind kind) {
  return {GridField(chart, FiberSignature::endo(n, 1), kind), std::nullopt};
}

double subalgebra_residual(const GridField& f, const Subalgebra& algebra) {
  const auto& fac = f.signature().factors;
  if (fac.size() != 1 || fac[0].kind != FactorKind::endomorphism || fac[0].n != algebra.n)
    throw Error("subalgebra check: field is not End(n) valued with matching n");
  double worst = 0.0;
  for (std::size_t p = 0; p < f.chart().points(); ++p)
    for (int c = 0; c < f.components(); ++c) worst = std::max(worst, algebra.projection_residual(&f.at(p, c, 0)));
  return worst;
}

void LinearConnection::validate(double tol) const {
  const auto& fac = k.signature().factors;
  if (fac.size() != 1 || fac[0].kind != FactorKind::endomorphism || k.signature().degree != 1 ||
      k.signature().rep != Rep::standard)
    throw Error("linear connection: coefficients must be a standard End(n) 1-form");
  if (algebra && subalgebra_residual(k, *algebra) > tol)
    throw Error("linear connection: coefficients leave the declared subalgebra " + algebra->name);
}

GridField torsion_of(const GridField& gamma) {
  const Chart& c = gamma.chart();
  const int m = c.dim();
  GridField T(c, FiberSignature{{tangent()}, 2, Rep::standard}, gamma.kind());
  const IndexSet& pairs = index_set(m, 2);
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int q = 0; q < pairs.size(); ++q) {
      const auto bc = pairs.indices(q);
      for (int a = 0; a < m; ++a)
        T.at(p, q, a) = gamma.at(p, 0, (a * m + bc[0]) * m + bc[1]) - gamma.at(p, 0, (a * m + bc[1]) * m + bc[0]);
    }
  return T;
}

SpacetimeConnection SpacetimeConnection::zero(const Chart& chart) {
  return from_gamma(GridField(chart, FiberSignature{{tangent(), cotangent(), cotangent()}, 0, Rep::standard}));
}

SpacetimeConnection SpacetimeConnection::from_gamma(GridField gamma) {
  const Chart& c = gamma.chart();
  const int m = c.dim();
  if (gamma.fiber_dim() != m * m * m || gamma.signature().degree != 0)
    throw Error("spacetime connection: coefficients must be a degree-0 (1,2) field");
  SpacetimeConnection s;
  s.torsion = torsion_of(gamma);
  s.tau = GridField(c, FiberSignature::scalar(1), gamma.kind());
  for (std::size_t p = 0; p < c.points(); ++p)
    for (int a = 0; a < m; ++a) {
      cplx t{};
      for (int b = 0; b < m; ++b) {
        if (a == b) continue;
        const int ab[2] = {a, b};
        const SignedSlot sl = locate(m, ab, 2);
        t += static_cast<double>(sl.sign) * s.torsion.at(p, sl.pos, b);
      }
      s.tau.at(p, a, 0) = t;
    }
  s.gamma = std::move(gamma);
  return s;
}

SpacetimeConnection levi_civita(const Metric& g, const Gradient* dg, int order) {
  const Chart& c = g.chart();
  const int m = c.dim();
  Gradient local;
  if (dg == nullptr) {
    local = gradient(g.field(), order);
    dg = &local;
  }
  GridField gamma(c, FiberSignature{{tangent(), cotangent(), cotangent()}, 0, Rep::standard});
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      // d_e g_{fh}
      auto dgv = [&](int e, int f, int h) { return (*dg)[static_cast<std::size_t>(e)].at(p, 0, f * m + h).real(); };
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int cc = b; cc < m; ++cc) {
            double s = 0.0;
            for (int d = 0; d < m; ++d) {
              const double gi = g.ginv(p, a, d);
              if (gi == 0.0) continue;
              s += gi * (dgv(b, d, cc) + dgv(cc, b, d) - dgv(d, b, cc));
            }
            gamma.at(p, 0, (a * m + b) * m + cc) = 0.5 * s;
            gamma.at(p, 0, (a * m + cc) * m + b) = 0.5 * s;
          }
    }
  });
  return SpacetimeConnection::from_gamma(std::move(gamma));
}

Matrix gamma_upper(int a) {
  Matrix g(16, 0.0);
  if (a == 0) {
    g[0] = g[5] = 1.0;
    g[10] = g[15] = -1.0;
    return g;
  }
  if (a < 1 || a > 3) throw Error("gamma matrices exist for a in [0, 3]");
  const Matrix s = pauli(a);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      g[static_cast<std::size_t>(i * 4 + 2 + j)] = s[static_cast<std::size_t>(i * 2 + j)];
      g[static_cast<std::size_t>((i + 2) * 4 + j)] = -s[static_cast<std::size_t>(i * 2 + j)];
    }
  return g;
}

Matrix gamma_lower(int a) {
  Matrix g = gamma_upper(a);
  if (a != 0)
    for (auto& v : g) v = -v;
  return g;
}

SpinorConnection SpinorConnection::zero(const Chart& chart) {
  return {GridField(chart, FiberSignature::endo(4, 1), ScalarKind::complex)};
}

LinearConnection dual_connection(const LinearConnection& kappa) {
  const int n = kappa.n();
  LinearConnection out{GridField(kappa.chart(), kappa.k.signature(), kappa.k.kind()), std::nullopt};
  const int comps = kappa.k.components();
  for (std::size_t p = 0; p < kappa.chart().points(); ++p)
    for (int a = 0; a < comps; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.k.at(p, a, j * n + i) = -kappa.k.at(p, a, i * n + j);
  if (kappa.algebra) {
    // the dual action of the basis is -l^T
    Subalgebra d = *kappa.algebra;
    for (auto& b : d.basis) {
      Matrix t(b.size());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t[static_cast<std::size_t>(j * n + i)] = -b[static_cast<std::size_t>(i * n + j)];
      b = t;
    }
    if (!d.name.empty() && d.name.back() == '*')
      d.name.pop_back();
    else
      d.name += "*";
    out.algebra = d;
  }
  return out;
}

FiberConnection::FiberConnection(const Chart& chart, const FiberSignature& sig, const ConnectionSet& set)
    : chart_(chart), sig_(sig) {
  const int m = chart.dim();
  fdim_ = sig.fiber_dim(m);
  strides_.assign(sig.factors.size(), 1);
  for (int f = static_cast<int>(sig.factors.size()) - 2; f >= 0; --f)
    strides_[static_cast<std::size_t>(f)] =
        strides_[static_cast<std::size_t>(f + 1)] * sig.factors[static_cast<std::size_t>(f + 1)].dim(m);
  for (const Factor& fac : sig.factors) {
    Part part;
    part.kind = fac.kind;
    part.dim = fac.dim(m);
    part.n = fac.n;
    switch (fac.kind) {
      case FactorKind::internal_vector:
      case FactorKind::internal_covector:
      case FactorKind::endomorphism:
        if (set.kappa) {
          if (set.kappa->n() != fac.n) throw Error("fiber connection: internal dimension mismatch");
          if (!(set.kappa->chart() == chart)) throw Error("fiber connection: chart mismatch");
          part.source = std::make_shared<const GridField>(set.kappa->k);
        }
        break;
      case FactorKind::tangent:
      case FactorKind::cotangent:
        if (set.gamma) {
          if (!(set.gamma->chart() == chart)) throw Error("fiber connection: chart mismatch");
          part.source = std::make_shared<const GridField>(set.gamma->gamma);
        }
        break;
      case FactorKind::spinor:
      case FactorKind::cospinor:
        if (set.spin) {
          if (!(set.spin->k.chart() == chart)) throw Error("fiber connection: chart mismatch");
          part.source = std::make_shared<const GridField>(set.spin->k);
        }
        break;
    }
    parts_.push_back(std::move(part));
  }
}

cplx FiberConnection::entry(const Part& part, std::size_t p, int a, int r, int c) const {
  if (!part.source) return 0.0;
  if (part.negate_transpose) return -raw_entry(part, p, a, c, r);
  return raw_entry(part, p, a, r, c);
}

cplx FiberConnection::raw_entry(const Part& part, std::size_t p, int a, int r, int c) const {
  const GridField& s = *part.source;
  const int m = chart_.dim();
  switch (part.kind) {
    case FactorKind::internal_vector:
    case FactorKind::spinor:
      return s.at(p, a, r * part.n + c);
    case FactorKind::internal_covector:
    case FactorKind::cospinor:
      return -s.at(p, a, c * part.n + r);
    case FactorKind::endomorphism: {
      // K X = kappa X - X kappa on row-major X
      const int n = part.n;
      const int i = r / n, j = r % n, h = c / n, l = c % n;
      cplx v{};
      if (j == l) v += s.at(p, a, i * n + h);
      if (i == h) v -= s.at(p, a, l * n + j);
      return v;
    }
    case FactorKind::tangent:
      return -s.at(p, 0, (r * m + a) * m + c);
    case FactorKind::cotangent:
      return s.at(p, 0, (c * m + a) * m + r);
  }
  return 0.0;
}

void FiberConnection::apply(std::size_t p, int a, const cplx* in, cplx* out, cplx s) const {
  for (std::size_t f = 0; f < parts_.size(); ++f) {
    const Part& part = parts_[f];
    if (!part.source) continue;
    const int st = strides_[f];
    const int d = part.dim;
    for (int I = 0; I < fdim_; ++I) {
      const int r = (I / st) % d;
      const int base = I - r * st;
      cplx acc{};
      for (int c = 0; c < d; ++c) {
        const cplx e = entry(part, p, a, r, c);
        if (e != 0.0) acc += e * in[base + c * st];
      }
      out[I] += s * acc;
    }
  }
}

void FiberConnection::apply_transpose(std::size_t p, int a, const cplx* in, cplx* out, cplx s) const {
  for (std::size_t f = 0; f < parts_.size(); ++f) {
    const Part& part = parts_[f];
    if (!part.source) continue;
    const int st = strides_[f];
    const int d = part.dim;
    for (int I = 0; I < fdim_; ++I) {
      const int r = (I / st) % d;
      const int base = I - r * st;
      cplx acc{};
      for (int c = 0; c < d; ++c) {
        const cplx e = entry(part, p, a, c, r);
        if (e != 0.0) acc += e * in[base + c * st];
      }
      out[I] += s * acc;
    }
  }
}

Matrix FiberConnection::materialize(std::size_t p, int a) const {
  Matrix M(static_cast<std::size_t>(fdim_) * static_cast<std::size_t>(fdim_), 0.0);
  std::vector<cplx> e(static_cast<std::size_t>(fdim_), 0.0), col(static_cast<std::size_t>(fdim_));
  for (int c = 0; c < fdim_; ++c) {
    std::fill(e.begin(), e.end(), cplx{});
    std::fill(col.begin(), col.end(), cplx{});
    e[static_cast<std::size_t>(c)] = 1.0;
    apply(p, a, e.data(), col.data());
    for (int r = 0; r < fdim_; ++r) M[static_cast<std::size_t>(r * fdim_ + c)] = col[static_cast<std::size_t>(r)];
  }
  return M;
}

FiberConnection FiberConnection::dual() const {
  FiberConnection d = *this;
  d.sig_ = sig_.dual();
  for (auto& part : d.parts_) part.negate_transpose = !part.negate_transpose;
  return d;
}

bool FiberConnection::is_zero() const {
  for (const auto& part : parts_)
    if (part.source) return false;
  return true;
}

ScalarKind FiberConnection::kind() const {
  for (const auto& part : parts_)
    if (part.source && part.source->kind() == ScalarKind::complex) return ScalarKind::complex;
  return ScalarKind::real;
}

FiberConnection tensor_product_connection(const FiberSignature& sig, const ConnectionSet& set) {
  const Chart* chart = nullptr;
  if (set.kappa) chart = &set.kappa->chart();
  if (set.gamma) {
    if (chart && !(*chart == set.gamma->chart())) throw Error("tensor product connection: chart mismatch");
    chart = &set.gamma->chart();
  }
  if (set.spin) {
    if (chart && !(*chart == set.spin->k.chart())) throw Error("tensor product connection: chart mismatch");
    chart = &set.spin->k.chart();
  }
  if (!chart) throw Error("tensor product connection: no connection supplied");
  return FiberConnection(*chart, sig, set);
}

GridField curvature(const LinearConnection& kappa, const Gradient* dk, int order) {
  const Chart& c = kappa.chart();
  const int m = c.dim();
  const int n = kappa.n();
  Gradient local;
  if (dk == nullptr) {
    local = gradient(kappa.k, order);
    dk = &local;
  }
  GridField rho(c, FiberSignature::endo(n, 2), kappa.k.kind());
  const IndexSet& pairs = index_set(m, 2);
  parallel_for(c.points(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p)
      for (int q = 0; q < pairs.size(); ++q) {
        const auto ab = pairs.indices(q);
        const int a = ab[0], b = ab[1];
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            cplx v = (*dk)[static_cast<std::size_t>(b)].at(p, a, i * n + j) - (*dk)[static_cast<std::size_t>(a)].at(p, b, i * n + j);
            for (int h = 0; h < n; ++h)
              v += kappa.k.at(p, a, i * n + h) * kappa.k.at(p, b, h * n + j) -
                   kappa.k.at(p, b, i * n + h) * kappa.k.at(p, a, h * n + j);
            rho.at(p, q, i * n + j) = v;
          }
      }
  });
  return rho;
}

}  // namespace covform
