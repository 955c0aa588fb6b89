#include <string>

#include "covform/report.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace covform;

namespace {

int config_code(const std::string& text) {
  try {
    Scenario s = parse_scenario(text);
    validate_scenario(s);
  } catch (const ConfigError& e) {
    return e.exit_code();
  }
  return 0;
}

std::string config_message(const std::string& text) {
  try {
    Scenario s = parse_scenario(text);
    validate_scenario(s);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kSmall = R"({
  "name": "small",
  "seed": 5,
  "chart": {"m": 4, "n": 4, "period": 1.0},
  "sector": {"name": "boson", "n": 1, "mass": 1.0},
  "metric": {"kind": "sampled", "amplitude": 0.05},
  "connection": {"kind": "abelian-profile", "basis": "u1"},
  "suites": ["momenta"]
})";

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("parse errors exit with 2 and name the key") {
    CHECK(config_code(kSmall) == 0);
    CHECK(config_code("{ not json") == 2);
    CHECK(config_code(R"({"chart": {"m": 4, "n": 4}, "colour": 1})") == 2);
    CHECK(config_message(R"({"chart": {"m": 4, "n": 4}, "colour": 1})").find("colour") != std::string::npos);
    CHECK(config_code(R"({"chart": {"m": "four"}})") == 2);
    CHECK(config_message(R"({"chart": {"m": 4, "n": 4, "wobble": 2}})").find("wobble") != std::string::npos);
  }

  TEST_CASE("validation errors exit with 3") {
    CHECK(config_code(R"({"chart": {"m": 4, "n": 3}})") == 3);
    CHECK(config_code(R"({"chart": {"m": 4, "n": 4}, "sector": {"name": "quark"}})") == 3);
    CHECK(config_code(R"({"chart": {"m": 4, "n": 4}, "suites": ["nonsense"]})") == 3);
    CHECK(config_code(R"({"chart": {"m": 3, "n": 4}, "sector": {"name": "dirac"}})") == 3);

    Scenario s = parse_scenario(kSmall);
    validate_scenario(s);
    CHECK_THROWS_AS(validate_study(s, 1), ConfigError);
    CHECK_THROWS_AS(validate_study(s, 2), ConfigError);  // coarsest grid would have 2 points
    s.n = 16;
    CHECK_NOTHROW(validate_study(s, 3));
    CHECK_THROWS_AS(validate_study(s, 4), ConfigError);
  }

  TEST_CASE("derived seeds") {
    CHECK(derive_seed(7, 1) == derive_seed(7, 1));
    CHECK(derive_seed(7, 1) != derive_seed(7, 2));
    CHECK(derive_seed(7, 1) != derive_seed(8, 1));
    Scenario a = parse_scenario(kSmall), b = parse_scenario(kSmall);
    validate_scenario(a);
    validate_scenario(b);
    CHECK(scenario_json(a) == scenario_json(b));
    CHECK(a.metric.seed.has_value());
    CHECK(a.metric.seed == b.metric.seed);
  }

  TEST_CASE("reports are byte-identical across runs") {
    Scenario s = parse_scenario(kSmall);
    validate_scenario(s);
    const std::string first = report_json(run_suite(s), false);
    const std::string second = report_json(run_suite(s), false);
    CHECK(first == second);
    const auto j = nlohmann::json::parse(first);
    CHECK(j["schema"] == "covform-report/1");
    CHECK(j["scenario"] == "small");
    CHECK(j["summary"]["checks"].get<int>() == static_cast<int>(j["checks"].size()));
    CHECK_FALSE(j["checks"][0].contains("wall_ms"));
    CHECK(nlohmann::json::parse(report_json(run_suite(s), true))["checks"][0].contains("wall_ms"));
  }

  TEST_CASE("convergence tables") {
    // residuals 4x apart on halving grids: order exactly 2
    const Convergence c = measure_convergence({4, 8, 16}, 1.0, [](int n) { return LevelResult{1.0 / (n * n), 1.0}; }, 1e-12);
    REQUIRE(c.order.size() == 2);
    CHECK(c.order[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_FALSE(c.exact);
    CHECK(orders_within(c, 1.8, 2.2));
    CHECK_FALSE(orders_within(c, 2.5, 3.0));
    CHECK(convergence_csv(c) ==
          "points,h,residual,order\n"
          "4,0.25,0.0625,\n"
          "8,0.125,0.015625,2\n"
          "16,0.0625,0.00390625,2\n");

    const Convergence z = measure_convergence({4, 8}, 1.0, [](int) { return LevelResult{0.0, 1.0}; }, 1e-12);
    CHECK(z.exact);
    CHECK(orders_within(z, 1.8, 2.2));
    CHECK(convergence_csv(z) == "points,h,residual,order\n4,0.25,0,\n8,0.125,0,exact\n");
  }
}
