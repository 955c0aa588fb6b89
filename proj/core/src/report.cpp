#include "covform/report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "covform/parallel.hpp"
#include "json.hpp"

namespace covform {
namespace {

using ordered = nlohmann::ordered_json;

ordered number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

ordered numbers(const std::vector<double>& v) {
  ordered a = ordered::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

ordered convergence_json(const Convergence& c) {
  ordered j;
  j["points"] = c.points;
  j["h"] = numbers(c.h);
  j["residual"] = numbers(c.residual);
  j["scale"] = numbers(c.scale);
  if (c.exact) {
    j["ratio"] = "exact";
    j["order"] = "exact";
  } else {
    j["ratio"] = numbers(c.ratio);
    j["order"] = numbers(c.order);
  }
  return j;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string status_name(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::skip: return "skip";
  }
  return "fail";
}

Convergence measure_convergence(const std::vector<int>& points, double period,
                                const std::function<LevelResult(int)>& level, double exact_tol) {
  Convergence c;
  c.points = points;
  bool exact = true;
  for (int n : points) {
    const LevelResult r = level(n);
    c.h.push_back(period / n);
    c.residual.push_back(r.residual);
    c.scale.push_back(r.scale);
    exact = exact && r.residual <= exact_tol * std::max(1.0, r.scale);
  }
  c.exact = exact;
  for (std::size_t i = 0; i + 1 < c.residual.size(); ++i) {
    const double ratio = c.residual[i + 1] > 0.0 ? c.residual[i] / c.residual[i + 1]
                                                  : std::numeric_limits<double>::infinity();
    c.ratio.push_back(ratio);
    c.order.push_back(std::log2(ratio) / std::log2(c.h[i] / c.h[i + 1]));
  }
  return c;
}

bool orders_within(const Convergence& c, double lo, double hi) {
  if (c.exact) return true;
  if (c.order.empty()) return false;
  for (double o : c.order)
    if (!(o >= lo && o <= hi)) return false;
  return true;
}

bool Report::all_pass() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.status == Status::fail; });
}

int Report::count(Status s) const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [s](const CheckRecord& r) { return r.status == s; }));
}

Report run_suite(const Scenario& s) {
  std::vector<std::string> suites;
  for (const auto& name : s.suites) {
    if (name == "all") {
      suites = suite_names();
      break;
    }
    if (std::find(suites.begin(), suites.end(), name) == suites.end()) suites.push_back(name);
  }
  std::vector<Check> checks;
  for (const auto& name : suites) {
    auto part = suite_checks(s, name);
    for (auto& c : part) checks.push_back(std::move(c));
  }

  std::vector<CheckRecord> records(checks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    SerialScope serial;
    for (std::size_t i = next++; i < checks.size(); i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      CheckRecord r;
      try {
        r = checks[i].run();
      } catch (const std::exception& e) {
        r.status = Status::fail;
        r.note = std::string("error: ") + e.what();
      }
      r.name = checks[i].name;
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      records[i] = std::move(r);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), checks.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  Report rep;
  rep.scenario = s.name;
  rep.seed = s.seed;
  rep.suites = suites;
  rep.checks = std::move(records);
  return rep;
}

std::string report_json(const Report& r, bool timings) {
  ordered j;
  j["schema"] = "covform-report/1";
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["suites"] = r.suites;
  j["summary"] = {{"checks", r.checks.size()},
                  {"pass", r.count(Status::pass)},
                  {"fail", r.count(Status::fail)},
                  {"skip", r.count(Status::skip)},
                  {"all_pass", r.all_pass()}};
  ordered checks = ordered::array();
  for (const auto& c : r.checks) {
    ordered e;
    e["name"] = c.name;
    e["anchor"] = c.anchor;
    e["status"] = status_name(c.status);
    ordered vals = ordered::object();
    for (const auto& [k, v] : c.values) vals[k] = number(v);
    e["values"] = vals;
    if (c.convergence) e["convergence"] = convergence_json(*c.convergence);
    if (!c.note.empty()) e["note"] = c.note;
    if (timings) e["wall_ms"] = c.wall_ms;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  return j.dump(2) + "\n";
}

Convergence convergence_study(const Scenario& s, int levels) {
  validate_study(s, levels);
  std::vector<int> pts;
  for (int l = levels - 1; l >= 0; --l) pts.push_back(s.n >> l);
  return measure_convergence(pts, s.period, [&](int n) { return study_level(s, s.study, n); }, s.tol.exact);
}

std::string convergence_csv(const Convergence& c) {
  std::ostringstream out;
  out << "points,h,residual,order\n";
  for (std::size_t i = 0; i < c.residual.size(); ++i) {
    out << c.points[i] << ',' << format_double(c.h[i]) << ',' << format_double(c.residual[i]) << ',';
    if (i > 0) out << (c.exact ? std::string("exact") : format_double(c.order[i - 1]));
    out << '\n';
  }
  return out.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename onto '" + path + "': " + ec.message());
  }
}

}  // namespace covform
