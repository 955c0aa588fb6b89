#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covform/dynamics.hpp"

namespace covform {

// Config problems carry the process exit code: 2 for parse errors (syntax,
// unknown keys, wrong types), 3 for values that parse but do not validate.
class ConfigError : public Error {
 public:
  ConfigError(int exit_code, const std::string& what) : Error(what), code_(exit_code) {}
  int exit_code() const { return code_; }

 private:
  int code_;
};

struct MetricSpec {
  std::string kind = "minkowski";  // minkowski | diagonal-analytic | sampled
  std::string profile = "frw";     // diagonal-analytic only
  double amplitude = 0.1;
  std::optional<std::uint64_t> seed;
};

struct ConnectionSpec {
  std::string kind = "zero";  // zero | abelian-profile | random-subalgebra | levi-civita
  std::string basis = "su2";
  std::optional<std::uint64_t> seed;
  int max_wavenumber = 1;
  double amplitude = 0.5;
  // spacetime connection used by the identity checks: zero | torsion-free | torsionful
  std::string spacetime = "torsionful";
};

struct FieldSpec {
  std::string kind = "random-trig";  // constant | plane-wave | random-trig
  cplx value{1.0, 0.0};
  std::vector<std::vector<int>> modes;  // integer wavenumbers, k_a = 2 pi n_a / L
  double amplitude = 1.0;
  std::optional<std::uint64_t> seed;
  int max_wavenumber = 1;
};

struct Tolerances {
  double identity = 1e-10;  // relative, algebraic identities
  double exact = 1e-12;     // relative, "exactly zero" results
  double momenta = 1e-8;
  double quadratic = 1e-10;
  double oracle = 1e-6;
  double order_min = 1.8;
  double order_max = 2.2;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 7;
  int m = 4;
  int n = 8;
  double period = 1.0;
  SectorSpec sector;
  MetricSpec metric;
  ConnectionSpec connection;
  FieldSpec field;
  std::vector<std::string> suites{"all"};
  Tolerances tol;
  int levels = 2;
  std::string study = "replacement";
  int samples = 20;
  int momenta_samples = 100;
  std::string report_path;
  std::string csv_path;

  double h() const { return period / n; }
};

const std::vector<std::string>& suite_names();  // without "all"
const std::vector<std::string>& study_names();

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
// Throws ConfigError(3). Fills seeds that were left out from the master seed.
void validate_scenario(Scenario& s);
// Levels for a convergence study: N divisible by 2^(levels-1), coarsest grid >= 4.
void validate_study(const Scenario& s, int levels);
std::string scenario_json(const Scenario& s);

// splitmix64 of (seed, salt); used for every derived seed
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

Chart scenario_chart(const Scenario& s, int points_per_axis);
Metric build_metric(const Scenario& s, const Chart& chart);

// A sampled field together with its exact derivatives per axis (empty when
// with_gradient is false).
struct SampledField {
  GridField value;
  Gradient grad;
};

SampledField build_field(const Scenario& s, const Chart& chart, const FiberSignature& sig, std::uint64_t salt,
                         bool with_gradient = true);

struct ScenarioConnection {
  LinearConnection kappa;
  Gradient dkappa;
};
ScenarioConnection build_connection(const Scenario& s, const Chart& chart, bool with_gradient = true);
std::optional<Subalgebra> scenario_algebra(const Scenario& s);

// Spacetime connection of the identity checks; "torsion-free" symmetrizes the
// random coefficients.
SpacetimeConnection build_spacetime(const Scenario& s, const Chart& chart, const std::string& kind);

struct MatterFields {
  GridField phi, phibar;
  Gradient dphi, dphibar;  // exact derivatives per axis when known, else empty
};
MatterFields build_matter(const Scenario& s, const Chart& chart);
DFState build_state(const Scenario& s, const Chart& chart);

// On-shell plane waves: amplitude sum_k u_k exp(-i 2 pi n.x / L) for every internal
// index. Boson u = 1; Dirac u = (gamma^a k_a + mass) chi for the unit chi that
// maximizes |u|. The partner is the complex conjugate (boson) or psi^dagger gamma^0.
MatterFields plane_wave(const SectorSpec& spec, const Chart& chart, const std::vector<std::vector<int>>& modes,
                        double amplitude);

}  // namespace covform
