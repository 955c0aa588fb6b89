#include "covform/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "covform/parallel.hpp"

namespace covform {

Chart::Chart(int m, int n, double h) : m_(m), n_(n), h_(h) {
  if (m < 1 || m > kMaxDim) throw Error("chart: dimension must be in [1, 8]");
  if (n < 4) throw Error("chart: points_per_axis must be >= 4");
  if (!(h > 0.0)) throw Error("chart: spacing must be positive");
  std::size_t s = 1;
  for (int a = m - 1; a >= 0; --a) {
    strides_[static_cast<std::size_t>(a)] = s;
    s *= static_cast<std::size_t>(n);
  }
  points_ = s;
}

int Chart::coordinate_index(std::size_t p, int axis) const {
  return static_cast<int>((p / stride(axis)) % static_cast<std::size_t>(n_));
}

std::size_t Chart::shift(std::size_t p, int axis, int delta) const {
  const int i = coordinate_index(p, axis);
  int j = (i + delta) % n_;
  if (j < 0) j += n_;
  return p + (static_cast<std::size_t>(j) - static_cast<std::size_t>(i)) * stride(axis);
}

std::size_t Chart::point_at(const int* idx) const {
  std::size_t p = 0;
  for (int a = 0; a < m_; ++a) {
    int i = idx[a] % n_;
    if (i < 0) i += n_;
    p += static_cast<std::size_t>(i) * stride(a);
  }
  return p;
}

bool Chart::interior(std::size_t p, int width) const {
  for (int a = 0; a < m_; ++a) {
    const int i = coordinate_index(p, a);
    if (i < width || i >= n_ - width) return false;
  }
  return true;
}

GridField::GridField(const Chart& chart, FiberSignature sig, ScalarKind kind)
    : chart_(chart), sig_(std::move(sig)), kind_(kind) {
  const int m = chart.dim();
  if (sig_.degree < 0 || sig_.degree > m) throw Error("grid field: form degree out of range");
  if (sig_.has_spinor()) kind_ = ScalarKind::complex;
  comps_ = binomial(m, sig_.slots(m));
  fdim_ = sig_.fiber_dim(m);
  values_.assign(chart.points() * per_point(), cplx{});
}

bool GridField::same_shape(const GridField& o) const {
  return chart_ == o.chart_ && comps_ == o.comps_ && fdim_ == o.fdim_ && sig_.degree == o.sig_.degree &&
         sig_.rep == o.sig_.rep;
}

namespace {

void require_same(const GridField& a, const GridField& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": shape or chart mismatch");
}

ScalarKind join(ScalarKind a, ScalarKind b) {
  return (a == ScalarKind::complex || b == ScalarKind::complex) ? ScalarKind::complex : ScalarKind::real;
}

}  // namespace

GridField operator+(const GridField& a, const GridField& b) {
  require_same(a, b, "add");
  GridField out = a;
  out.set_kind(join(a.kind(), b.kind()));
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
  return out;
}

GridField operator-(const GridField& a, const GridField& b) {
  require_same(a, b, "subtract");
  GridField out = a;
  out.set_kind(join(a.kind(), b.kind()));
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.values()[i];
  return out;
}

GridField operator*(cplx s, const GridField& a) {
  GridField out = a;
  if (s.imag() != 0.0) out.set_kind(ScalarKind::complex);
  for (auto& v : out.values()) v *= s;
  return out;
}

GridField& axpy(GridField& y, cplx a, const GridField& x) {
  require_same(y, x, "axpy");
  if (a.imag() != 0.0 || x.kind() == ScalarKind::complex) y.set_kind(ScalarKind::complex);
  for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += a * x.values()[i];
  return y;
}

double sup_norm(const GridField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s = std::max(s, std::abs(v));
  return s;
}

double sup_norm_interior(const GridField& f, int width) {
  double s = 0.0;
  const std::size_t pp = f.per_point();
  for (std::size_t p = 0; p < f.chart().points(); ++p) {
    if (!f.chart().interior(p, width)) continue;
    const cplx* v = f.point(p);
    for (std::size_t k = 0; k < pp; ++k) s = std::max(s, std::abs(v[k]));
  }
  return s;
}

double max_abs_diff(const GridField& a, const GridField& b) {
  require_same(a, b, "max_abs_diff");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a.values()[i] - b.values()[i]));
  return s;
}

cplx stencil_derivative(const GridField& f, std::size_t p, std::size_t slot, int axis, int order) {
  const Chart& c = f.chart();
  const std::size_t pp = f.per_point();
  const double h = c.spacing();
  const cplx* base = f.values().data();
  const cplx fp = base[c.shift(p, axis, 1) * pp + slot];
  const cplx fm = base[c.shift(p, axis, -1) * pp + slot];
  if (order == 2) return (fp - fm) / (2.0 * h);
  const cplx fp2 = base[c.shift(p, axis, 2) * pp + slot];
  const cplx fm2 = base[c.shift(p, axis, -2) * pp + slot];
  return (8.0 * (fp - fm) - (fp2 - fm2)) / (12.0 * h);
}

GridField partial_derivative(const GridField& f, int axis, int order) {
  if (axis < 0 || axis >= f.chart().dim()) throw Error("partial_derivative: axis out of range");
  if (order != 2 && order != 4) throw Error("partial_derivative: order must be 2 or 4");
  GridField out(f.chart(), f.signature(), f.kind());
  const std::size_t pp = f.per_point();
  parallel_for(f.chart().points(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p)
      for (std::size_t k = 0; k < pp; ++k) out.point(p)[k] = stencil_derivative(f, p, k, axis, order);
  });
  return out;
}

Gradient gradient(const GridField& f, int order) {
  Gradient g;
  g.reserve(static_cast<std::size_t>(f.chart().dim()));
  for (int a = 0; a < f.chart().dim(); ++a) g.push_back(partial_derivative(f, a, order));
  return g;
}

TrigSeries::TrigSeries(int m, FiberSignature sig, ScalarKind kind, std::uint64_t seed, int max_wavenumber,
                       int terms_per_slot, double amplitude)
    : m_(m), sig_(std::move(sig)), kind_(kind) {
  if (max_wavenumber < 1) throw Error("trig field: max_wavenumber must be >= 1");
  if (sig_.has_spinor()) kind_ = ScalarKind::complex;
  const int slots = binomial(m, sig_.slots(m)) * sig_.fiber_dim(m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_int_distribution<int> wave(-max_wavenumber, max_wavenumber);
  const bool cx = kind_ == ScalarKind::complex;
  auto draw = [&] {
    const double re = amp(rng);
    const double im = cx ? amp(rng) : 0.0;
    return amplitude * cplx(re, im);
  };
  zero_.resize(static_cast<std::size_t>(slots));
  terms_.resize(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) {
    zero_[static_cast<std::size_t>(s)] = draw();
    for (int t = 0; t < terms_per_slot; ++t) {
      Term term;
      bool nonzero = false;
      while (!nonzero) {
        for (int a = 0; a < m; ++a) {
          term.k[static_cast<std::size_t>(a)] = wave(rng);
          nonzero = nonzero || term.k[static_cast<std::size_t>(a)] != 0;
        }
      }
      term.cos_amp = draw();
      term.sin_amp = draw();
      terms_[static_cast<std::size_t>(s)].push_back(term);
    }
  }
}

GridField TrigSeries::evaluate(const Chart& chart, int da, int db) const {
  if (chart.dim() != m_) throw Error("trig field: chart dimension mismatch");
  GridField out(chart, sig_, kind_);
  const double w0 = 2.0 * std::numbers::pi / chart.period();
  const std::size_t slots = zero_.size();
  parallel_for(chart.points(), [&](std::size_t b, std::size_t e) {
    std::array<double, kMaxDim> x{};
    for (std::size_t p = b; p < e; ++p) {
      for (int a = 0; a < m_; ++a) x[static_cast<std::size_t>(a)] = chart.coordinate(p, a);
      cplx* v = out.point(p);
      for (std::size_t s = 0; s < slots; ++s) {
        cplx acc = (da < 0 && db < 0) ? zero_[s] : cplx{};
        for (const Term& t : terms_[s]) {
          double theta = 0.0;
          for (int a = 0; a < m_; ++a) theta += t.k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
          theta *= w0;
          const double c = std::cos(theta), sn = std::sin(theta);
          if (da < 0) {
            acc += t.cos_amp * c + t.sin_amp * sn;
          } else if (db < 0) {
            const double w = w0 * t.k[static_cast<std::size_t>(da)];
            acc += w * (t.sin_amp * c - t.cos_amp * sn);
          } else {
            const double w = w0 * w0 * t.k[static_cast<std::size_t>(da)] * t.k[static_cast<std::size_t>(db)];
            acc -= w * (t.cos_amp * c + t.sin_amp * sn);
          }
        }
        v[s] = acc;
      }
    }
  });
  return out;
}

GridField TrigSeries::sample(const Chart& chart) const { return evaluate(chart, -1, -1); }

GridField TrigSeries::sample_derivative(const Chart& chart, int axis) const {
  if (axis < 0 || axis >= m_) throw Error("trig field: axis out of range");
  return evaluate(chart, axis, -1);
}

GridField TrigSeries::sample_second_derivative(const Chart& chart, int a, int b) const {
  if (a < 0 || a >= m_ || b < 0 || b >= m_) throw Error("trig field: axis out of range");
  return evaluate(chart, a, b);
}

Gradient TrigSeries::sample_gradient(const Chart& chart) const {
  Gradient g;
  for (int a = 0; a < m_; ++a) g.push_back(sample_derivative(chart, a));
  return g;
}

TrigSeries trig_series(const Chart& chart, const FiberSignature& sig, std::uint64_t seed, int max_wavenumber,
                       ScalarKind kind, double amplitude) {
  return TrigSeries(chart.dim(), sig, kind, seed, max_wavenumber, 3, amplitude);
}

GridField make_trig_field(const Chart& chart, const FiberSignature& sig, std::uint64_t seed, int max_wavenumber,
                          ScalarKind kind) {
  return trig_series(chart, sig, seed, max_wavenumber, kind).sample(chart);
}

cplx cell_sum(const GridField& density) {
  if (density.per_point() != 1) throw Error("cell_sum: density must be a scalar field");
  cplx s{};
  for (const auto& v : density.values()) s += v;
  return s * std::pow(density.chart().spacing(), density.chart().dim());
}

}  // namespace covform
