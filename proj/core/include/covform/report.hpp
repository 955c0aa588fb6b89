#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "covform/scenario.hpp"

namespace covform {

enum class Status { pass, fail, skip };
std::string status_name(Status s);

// Residual sup-norms over a grid sequence. orders[i] = log2(residual[i] / residual[i+1]).
struct Convergence {
  std::vector<int> points;
  std::vector<double> h, residual, scale;
  std::vector<double> ratio, order;
  bool exact = false;  // every residual below the exact tolerance
};

struct LevelResult {
  double residual = 0.0;
  double scale = 1.0;  // magnitude the residual is judged against
};

Convergence measure_convergence(const std::vector<int>& points, double period,
                                const std::function<LevelResult(int)>& level, double exact_tol);
bool orders_within(const Convergence& c, double lo, double hi);

struct CheckRecord {
  std::string name;
  std::string anchor;  // short statement of the identity being checked
  Status status = Status::skip;
  std::vector<std::pair<std::string, double>> values;
  std::optional<Convergence> convergence;
  std::string note;
  double wall_ms = 0.0;
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<std::string> suites;
  std::vector<CheckRecord> checks;

  bool all_pass() const;
  int count(Status s) const;
};

// One deferred check; suites are lists of these.
struct Check {
  std::string name;
  std::function<CheckRecord()> run;
};

std::vector<Check> suite_checks(const Scenario& s, const std::string& suite);

// Runs the checks of every requested suite in parallel; records keep suite order.
Report run_suite(const Scenario& s);

std::string report_json(const Report& r, bool timings);

// Residual of a named study (see study_names) on a grid with `points` per axis.
LevelResult study_level(const Scenario& s, const std::string& study, int points);

// Convergence study on N / 2^(levels-1), ..., N.
Convergence convergence_study(const Scenario& s, int levels);
std::string convergence_csv(const Convergence& c);

// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace covform
