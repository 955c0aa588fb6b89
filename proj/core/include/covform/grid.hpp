#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "covform/signature.hpp"

namespace covform {

inline constexpr int kMaxDim = 8;

// Periodic uniform grid on [0, n*h)^m. Point index has axis 0 slowest.
class Chart {
 public:
  Chart() = default;
  Chart(int m, int n, double h);
  static Chart with_period(int m, int n, double period) { return Chart(m, n, period / n); }

  int dim() const { return m_; }
  int points_per_axis() const { return n_; }
  double spacing() const { return h_; }
  double period() const { return h_ * n_; }
  std::size_t points() const { return points_; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  int coordinate_index(std::size_t p, int axis) const;
  double coordinate(std::size_t p, int axis) const { return h_ * coordinate_index(p, axis); }
  // periodic neighbour p + delta*e_axis
  std::size_t shift(std::size_t p, int axis, int delta) const;
  std::size_t point_at(const int* idx) const;
  // true when every axis index lies in [width, n - width)
  bool interior(std::size_t p, int width) const;

  bool operator==(const Chart& o) const { return m_ == o.m_ && n_ == o.n_ && h_ == o.h_; }

 private:
  int m_ = 0;
  int n_ = 0;
  double h_ = 0.0;
  std::size_t points_ = 0;
  std::array<std::size_t, kMaxDim> strides_{};
};

enum class ScalarKind { real, complex };

// Grid-sampled form with fiber values. Layout is [point][form component][fiber]
// where form components run over sorted multi-indices of size signature.slots(m).
class GridField {
 public:
  GridField() = default;
  GridField(const Chart& chart, FiberSignature sig, ScalarKind kind = ScalarKind::real);

  const Chart& chart() const { return chart_; }
  const FiberSignature& signature() const { return sig_; }
  ScalarKind kind() const { return kind_; }
  void set_kind(ScalarKind k) { kind_ = k; }
  int components() const { return comps_; }
  int fiber_dim() const { return fdim_; }
  std::size_t per_point() const { return static_cast<std::size_t>(comps_) * static_cast<std::size_t>(fdim_); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  cplx& at(std::size_t p, int comp, int f) { return values_[p * per_point() + static_cast<std::size_t>(comp * fdim_ + f)]; }
  const cplx& at(std::size_t p, int comp, int f) const { return values_[p * per_point() + static_cast<std::size_t>(comp * fdim_ + f)]; }
  cplx* point(std::size_t p) { return values_.data() + p * per_point(); }
  const cplx* point(std::size_t p) const { return values_.data() + p * per_point(); }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  // same chart, signature and shape
  bool same_shape(const GridField& o) const;

 private:
  Chart chart_;
  FiberSignature sig_;
  ScalarKind kind_ = ScalarKind::real;
  int comps_ = 0;
  int fdim_ = 0;
  std::vector<cplx> values_;
};

using Gradient = std::vector<GridField>;  // one field per axis

GridField operator+(const GridField& a, const GridField& b);
GridField operator-(const GridField& a, const GridField& b);
GridField operator*(cplx s, const GridField& a);
GridField& axpy(GridField& y, cplx a, const GridField& x);  // y += a*x

double sup_norm(const GridField& f);
// sup over points with interior(p, width)
double sup_norm_interior(const GridField& f, int width);
double max_abs_diff(const GridField& a, const GridField& b);

// Central periodic difference along `axis`; order 2 or 4.
GridField partial_derivative(const GridField& f, int axis, int order = 2);
Gradient gradient(const GridField& f, int order = 2);
// Single stencil value, the kernel behind partial_derivative.
cplx stencil_derivative(const GridField& f, std::size_t p, std::size_t slot, int axis, int order = 2);

// Trigonometric polynomial per stored slot, exactly periodic on the box.
// Coefficients depend only on (seed, signature, max_wavenumber), so the same
// series can be sampled on charts of different resolution.
class TrigSeries {
 public:
  struct Term {
    std::array<int, kMaxDim> k{};
    cplx cos_amp;
    cplx sin_amp;
  };

  TrigSeries() = default;
  TrigSeries(int m, FiberSignature sig, ScalarKind kind, std::uint64_t seed, int max_wavenumber,
             int terms_per_slot = 3, double amplitude = 1.0);

  const FiberSignature& signature() const { return sig_; }
  int slots() const { return static_cast<int>(zero_.size()); }
  cplx zero_mode(int slot) const { return zero_[static_cast<std::size_t>(slot)]; }
  const std::vector<Term>& terms(int slot) const { return terms_[static_cast<std::size_t>(slot)]; }

  GridField sample(const Chart& chart) const;
  GridField sample_derivative(const Chart& chart, int axis) const;
  GridField sample_second_derivative(const Chart& chart, int a, int b) const;
  Gradient sample_gradient(const Chart& chart) const;

 private:
  GridField evaluate(const Chart& chart, int da, int db) const;

  int m_ = 0;
  FiberSignature sig_;
  ScalarKind kind_ = ScalarKind::real;
  std::vector<cplx> zero_;
  std::vector<std::vector<Term>> terms_;
};

TrigSeries trig_series(const Chart& chart, const FiberSignature& sig, std::uint64_t seed, int max_wavenumber,
                       ScalarKind kind = ScalarKind::real, double amplitude = 1.0);
GridField make_trig_field(const Chart& chart, const FiberSignature& sig, std::uint64_t seed, int max_wavenumber,
                          ScalarKind kind = ScalarKind::real);

// h^m times the plain sum over points, accumulated in index order.
cplx cell_sum(const GridField& density);

}  // namespace covform
