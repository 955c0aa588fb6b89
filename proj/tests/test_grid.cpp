#include <cmath>

#include "covform/grid.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace covform;
using testutil::kTwoPi;

TEST_SUITE("grid") {
  TEST_CASE("chart indexing and periodic shifts") {
    const Chart c(3, 5, 0.2);
    CHECK(c.points() == 125);
    CHECK(c.period() == doctest::Approx(1.0));
    const int idx[3] = {1, 4, 2};
    const std::size_t p = c.point_at(idx);
    CHECK(c.coordinate_index(p, 0) == 1);
    CHECK(c.coordinate_index(p, 1) == 4);
    CHECK(c.coordinate_index(c.shift(p, 1, 1), 1) == 0);
    CHECK(c.coordinate_index(c.shift(p, 0, -2), 0) == 4);
    CHECK_THROWS_AS(Chart(2, 3, 0.1), Error);
    CHECK_THROWS_AS(Chart(9, 4, 0.1), Error);
  }

  TEST_CASE("derivative of a constant is zero") {
    const Chart c = Chart::with_period(4, 6, 1.0);
    const GridField f = testutil::scalar_field(c, [](const double*) { return cplx(2.5, 0.0); });
    for (int a = 0; a < 4; ++a) CHECK(sup_norm(partial_derivative(f, a)) == 0.0);
  }

  TEST_CASE("central stencil on a sine matches its closed form") {
    const double L = 2.0;
    const Chart c = Chart::with_period(2, 10, L);
    const double h = c.spacing();
    const GridField f = testutil::scalar_field(c, [&](const double* x) { return std::sin(kTwoPi * x[0] / L); });
    const GridField d = partial_derivative(f, 0);
    for (std::size_t p = 0; p < c.points(); ++p) {
      const double x0 = c.coordinate(p, 0);
      const double expect = (std::sin(kTwoPi * (x0 + h) / L) - std::sin(kTwoPi * (x0 - h) / L)) / (2.0 * h);
      CHECK(d.at(p, 0, 0).real() == doctest::Approx(expect).epsilon(1e-13));
    }
  }

  TEST_CASE("linear profile is differentiated exactly away from the wrap") {
    const Chart c = Chart::with_period(2, 8, 1.0);
    const GridField f = testutil::scalar_field(c, [](const double* x) { return x[1]; });
    GridField d = partial_derivative(f, 1);
    for (auto& v : d.values()) v -= 1.0;
    CHECK(sup_norm_interior(d, 1) < 1e-13);
    // order 4 needs two points of clearance
    GridField d4 = partial_derivative(f, 1, 4);
    for (auto& v : d4.values()) v -= 1.0;
    CHECK(sup_norm_interior(d4, 2) < 1e-13);
  }

  TEST_CASE("second-order stencil error drops by four per halving") {
    auto err = [](int n) {
      const Chart c = Chart::with_period(2, n, 1.0);
      const GridField f =
          testutil::scalar_field(c, [](const double* x) { return std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]); });
      double e = 0.0;
      const GridField d = partial_derivative(f, 0);
      for (std::size_t p = 0; p < c.points(); ++p) {
        const double exact = kTwoPi * std::cos(kTwoPi * c.coordinate(p, 0)) * std::cos(kTwoPi * c.coordinate(p, 1));
        e = std::max(e, std::abs(d.at(p, 0, 0).real() - exact));
      }
      return e;
    };
    const double ratio = err(16) / err(32);
    CHECK(ratio >= 3.6);
    CHECK(ratio <= 4.4);
  }

  TEST_CASE("derivative and cell sum are linear") {
    const Chart c = Chart::with_period(3, 6, 1.0);
    const GridField a = make_trig_field(c, FiberSignature::scalar(), 1, 2);
    const GridField b = make_trig_field(c, FiberSignature::scalar(), 2, 2);
    const cplx s(0.7, -1.3);
    GridField combo = a;
    axpy(combo, s, b);
    const GridField lhs = partial_derivative(combo, 2);
    GridField rhs = partial_derivative(a, 2);
    axpy(rhs, s, partial_derivative(b, 2));
    CHECK(max_abs_diff(lhs, rhs) < 1e-13);
    CHECK(std::abs(cell_sum(combo) - (cell_sum(a) + s * cell_sum(b))) < 1e-13);
  }

  TEST_CASE("trig fields are deterministic and validated") {
    const Chart c = Chart::with_period(4, 4, 1.0);
    const FiberSignature sig = FiberSignature::internal(2, 1);
    const GridField a = make_trig_field(c, sig, 0, 1);
    const GridField b = make_trig_field(c, sig, 0, 1);
    CHECK(a.values() == b.values());
    CHECK(make_trig_field(c, sig, 1, 1).values() != a.values());
    CHECK_THROWS_AS(make_trig_field(c, sig, 0, 0), Error);
  }

  TEST_CASE("grid mean of a trig field is its zero mode") {
    const Chart c = Chart::with_period(2, 8, 1.0);
    const TrigSeries ts = trig_series(c, FiberSignature::internal(3), 5, 2);
    const GridField f = ts.sample(c);
    for (int s = 0; s < ts.slots(); ++s) {
      cplx mean = 0.0;
      for (std::size_t p = 0; p < c.points(); ++p) mean += f.point(p)[s];
      mean /= static_cast<double>(c.points());
      CHECK(std::abs(mean - ts.zero_mode(s)) < 1e-13);
    }
  }

  TEST_CASE("trig series derivatives agree with the stencil in the limit") {
    const Chart c = Chart::with_period(2, 32, 1.0);
    const TrigSeries ts = trig_series(c, FiberSignature::scalar(), 9, 1);
    const GridField exact = ts.sample_derivative(c, 1);
    const GridField fd = partial_derivative(ts.sample(c), 1, 4);
    CHECK(max_abs_diff(exact, fd) < 1e-3 * std::max(1.0, sup_norm(exact)));
  }

  TEST_CASE("cell sum") {
    const Chart c = Chart::with_period(4, 5, 2.0);
    const GridField zero(c, FiberSignature::scalar());
    CHECK(cell_sum(zero) == cplx(0.0));
    const GridField three = testutil::scalar_field(c, [](const double*) { return cplx(3.0); });
    CHECK(cell_sum(three).real() == doctest::Approx(3.0 * std::pow(2.0, 4)).epsilon(1e-14));
    const GridField sine = testutil::scalar_field(c, [](const double* x) { return std::sin(kTwoPi * x[0] / 2.0); });
    CHECK(std::abs(cell_sum(sine)) < 1e-12);
    CHECK_THROWS_AS(cell_sum(GridField(c, FiberSignature::internal(2))), Error);
  }
}
