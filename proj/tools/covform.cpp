// covform command line: verify, converge, show-scenario.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 config parse error,
// 3 config validation error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "covform/report.hpp"

namespace {

constexpr int kFail = 1;
constexpr int kParse = 2;
constexpr int kInvalid = 3;

covform::Scenario load(const std::string& path, const std::optional<std::string>& suite,
                       const std::optional<std::uint64_t>& seed) {
  covform::Scenario s = covform::load_scenario(path);
  if (suite) s.suites = {*suite};
  // seeds the config leaves out are derived from the master seed during validation
  if (seed) s.seed = *seed;
  covform::validate_scenario(s);
  return s;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    covform::write_atomic(path, content);
  }
}

int verify(const std::string& config, const std::optional<std::string>& suite, const std::optional<std::uint64_t>& seed,
           const std::string& out, bool timings) {
  const covform::Scenario s = load(config, suite, seed);
  const covform::Report r = covform::run_suite(s);
  emit(out.empty() ? s.report_path : out, covform::report_json(r, timings));
  for (const auto& c : r.checks)
    if (c.status == covform::Status::fail)
      std::fprintf(stderr, "FAIL %s%s%s\n", c.name.c_str(), c.note.empty() ? "" : ": ", c.note.c_str());
  std::fprintf(stderr, "%s: %zu checks, %d pass, %d fail, %d skip\n", s.name.c_str(), r.checks.size(),
               r.count(covform::Status::pass), r.count(covform::Status::fail), r.count(covform::Status::skip));
  return r.all_pass() ? 0 : kFail;
}

int converge(const std::string& config, std::optional<int> levels, const std::string& out) {
  covform::Scenario s = load(config, std::nullopt, std::nullopt);
  const int k = levels.value_or(s.levels);
  covform::validate_study(s, k);
  const covform::Convergence c = covform::convergence_study(s, k);
  emit(out.empty() ? s.csv_path : out, covform::convergence_csv(c));
  const bool ok = covform::orders_within(c, s.tol.order_min, s.tol.order_max);
  std::fprintf(stderr, "%s: study %s over %d levels, %s\n", s.name.c_str(), s.study.c_str(), k,
               c.exact ? "exact" : (ok ? "orders within tolerance" : "orders outside tolerance"));
  return ok ? 0 : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covform: covariant field theory identities on periodic grids"};
  app.require_subcommand(1);

  std::string config, out;
  std::optional<std::string> suite;
  std::optional<std::uint64_t> seed;
  std::optional<int> levels;
  bool timings = false;

  auto* v = app.add_subcommand("verify", "run verification suites and write a JSON report");
  v->add_option("--config", config, "scenario JSON")->required();
  v->add_option("--suite", suite, "identities | momenta | field-equations | energy | gravity | all");
  v->add_option("--seed", seed, "master seed, overrides the scenario");
  v->add_option("--out", out, "report path, '-' for stdout");
  v->add_flag("--timings", timings, "include wall_ms per check (breaks byte-identical reruns)");

  auto* c = app.add_subcommand("converge", "run the scenario's convergence study and write a CSV table");
  c->add_option("--config", config, "scenario JSON")->required();
  c->add_option("--levels", levels, "number of grids, finest is the scenario N");
  c->add_option("--out", out, "CSV path, '-' for stdout");

  auto* show = app.add_subcommand("show-scenario", "print the resolved scenario");
  show->add_option("--config", config, "scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kParse;
  }

  try {
    if (*v) return verify(config, suite, seed, out, timings);
    if (*c) return converge(config, levels, out);
    if (*show) {
      std::cout << covform::scenario_json(load(config, std::nullopt, std::nullopt));
      return 0;
    }
  } catch (const covform::ConfigError& e) {
    std::fprintf(stderr, "covform: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "covform: %s\n", e.what());
    return kFail;
  }
  return kFail;
}
