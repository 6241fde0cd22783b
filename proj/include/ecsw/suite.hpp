#pragma once

// Suite configuration, the named check catalogue and JSON reports.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ecsw/check.hpp"
#include "ecsw/metric.hpp"

namespace ecsw {

inline constexpr const char* kVersion = "0.1.0";

struct PointBox {
  std::pair<double, double> t{-3.0, 3.0};
  std::pair<double, double> s{-3.0, 3.0};
  std::pair<double, double> v{-2.0, 2.0};
};

using Json = nlohmann::ordered_json;

struct SuiteConfig {
  explicit SuiteConfig(RoterSpec s) : spec(std::move(s)) {}

  Json spec_json;
  RoterSpec spec;
  int sample_count = 20;
  PointBox point_box;
  std::uint64_t seed = 1;
  std::map<std::string, double> tolerances;  // overrides only
  std::vector<std::string> checks;           // empty: all
  int variation_count = 2;
  double geodesic_tdot = 0.1;                // bound on |dt/dtau| for geodesic samples
};

/// RoterSpec from {"n", "inner", "A", "f": {"family", ...}}. "inner" is either
/// a list of diagonal entries or a full matrix. Throws ConfigError on shape or
/// type problems and SpecError on violated invariants.
RoterSpec parse_spec(const Json& j);

/// Throws ConfigError (unknown keys, unknown check names, bad ranges) or
/// SpecError.
SuiteConfig parse_config(const Json& j);
SuiteConfig load_config(const std::string& path);

/// Applies ECSW_SEED when set; throws ConfigError when it is not an unsigned
/// integer.
void apply_seed_override(SuiteConfig& cfg);

struct CheckInfo {
  std::string name;
  std::string group;
  std::string property;
  double tolerance;
  bool lower_bound = false;
};

/// All checks in declaration order.
const std::vector<CheckInfo>& check_catalogue();
const CheckInfo& check_info(const std::string& name);
std::vector<std::string> check_groups();

double effective_tolerance(const SuiteConfig& cfg, const std::string& name);

/// Seeded points in the configured box.
std::vector<ChartPoint> sample_points(const SuiteConfig& cfg, std::uint64_t stream, int count);

/// Throws NumericalAbort when any block of the jet is not finite.
void require_finite(const MetricJet& jet);

/// Runs one group and returns the records of its selected checks in
/// declaration order. Throws NumericalAbort on non-finite curvature data.
std::vector<CheckRecord> run_group(const SuiteConfig& cfg, const std::string& group);

struct TimedRecord {
  CheckRecord record;
  std::optional<double> wall_seconds;
};

/// Runs every selected group on `jobs` worker threads; results come back in
/// declaration order whatever the scheduling.
std::vector<TimedRecord> run_suite(const SuiteConfig& cfg, int jobs, bool timings);

Json config_echo(const SuiteConfig& cfg);
Json make_report(const SuiteConfig& cfg, const std::vector<TimedRecord>& records);

/// JSON text with every floating-point number at 17 significant digits and
/// non-finite numbers written as null. Two-space indentation.
std::string dump_json(const Json& j);

}  // namespace ecsw
