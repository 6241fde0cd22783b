#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>

#include "ecsw/errors.hpp"
#include "ecsw/suite.hpp"

using ecsw::Json;

namespace {

Json base_config() {
  return Json::parse(R"({
    "spec": {"n": 4, "inner": [1, 1], "A": [[1, 0], [0, -1]],
             "f": {"family": "sinusoid", "amplitude": 1, "frequency": 1, "phase": 0}},
    "sample_count": 3,
    "seed": 7
  })");
}

}  // namespace

TEST(Config, ParsesMinimalConfig) {
  const auto cfg = ecsw::parse_config(base_config());
  EXPECT_EQ(cfg.spec.n, 4);
  EXPECT_EQ(cfg.sample_count, 3);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_TRUE(cfg.checks.empty());
  EXPECT_DOUBLE_EQ(cfg.point_box.v.second, 2.0);
}

TEST(Config, FullInnerMatrixAndPolynomialProfile) {
  Json j = base_config();
  j["spec"]["n"] = 5;
  j["spec"]["inner"] = Json::parse("[[2, 0, 0], [0, 1, 0], [0, 0, -1]]");
  j["spec"]["A"] = Json::parse("[[1, 0, 0], [0, 2, 0], [0, 0, -3]]");
  j["spec"]["f"] = Json::parse(R"({"family": "polynomial", "coeffs": [0, -1, 0, 1]})");
  const auto cfg = ecsw::parse_config(j);
  EXPECT_EQ(cfg.spec.inner.negatives(), 1);
  EXPECT_DOUBLE_EQ(cfg.spec.f(2.0), 6.0);
}

TEST(Config, Rejections) {
  auto expect_config_error = [](Json j) { EXPECT_THROW(ecsw::parse_config(j), ecsw::ConfigError) << j.dump(); };
  Json j = base_config();
  j["bogus"] = 1;
  expect_config_error(j);

  j = base_config();
  j["checks"] = Json::array({"no_such_check"});
  expect_config_error(j);

  j = base_config();
  j["spec"]["A"] = Json::parse("[[1, 0, 0], [0, -1, 0]]");
  expect_config_error(j);

  j = base_config();
  j["sample_count"] = 0;
  expect_config_error(j);

  j = base_config();
  j["tolerances"] = Json::parse(R"({"roter_scalar_vanishes": -1})");
  expect_config_error(j);

  j = base_config();
  j["point_box"] = Json::parse(R"({"t": [2, 1]})");
  expect_config_error(j);

  j = base_config();
  j["spec"]["f"]["family"] = "cosh";
  expect_config_error(j);

  j = base_config();
  j["spec"]["A"] = Json::parse("[[1, 0], [0, 1]]");
  EXPECT_THROW(ecsw::parse_config(j), ecsw::SpecError);

  EXPECT_THROW(ecsw::load_config("/nonexistent/config.json"), ecsw::ConfigError);
}

TEST(Config, TolerancesAndCatalogue) {
  Json j = base_config();
  j["tolerances"] = Json::parse(R"({"jet_fd_oracle": 1e-3})");
  const auto cfg = ecsw::parse_config(j);
  EXPECT_DOUBLE_EQ(ecsw::effective_tolerance(cfg, "jet_fd_oracle"), 1e-3);
  EXPECT_DOUBLE_EQ(ecsw::effective_tolerance(cfg, "roter_scalar_vanishes"),
                   ecsw::check_info("roter_scalar_vanishes").tolerance);
  EXPECT_THROW(ecsw::check_info("nope"), ecsw::ConfigError);

  std::set<std::string> names;
  for (const auto& c : ecsw::check_catalogue()) {
    EXPECT_TRUE(names.insert(c.name).second) << c.name;
    EXPECT_GT(c.tolerance, 0.0);
    EXPECT_FALSE(c.property.empty());
  }
}

TEST(Config, SeedOverride) {
  auto cfg = ecsw::parse_config(base_config());
  ::setenv("ECSW_SEED", "12345", 1);
  ecsw::apply_seed_override(cfg);
  EXPECT_EQ(cfg.seed, 12345u);
  ::setenv("ECSW_SEED", "twelve", 1);
  EXPECT_THROW(ecsw::apply_seed_override(cfg), ecsw::ConfigError);
  ::unsetenv("ECSW_SEED");
  ecsw::apply_seed_override(cfg);
  EXPECT_EQ(cfg.seed, 12345u);
}

TEST(Sampling, SeededAndInsideBox) {
  const auto cfg = ecsw::parse_config(base_config());
  const auto a = ecsw::sample_points(cfg, 3, 50);
  const auto b = ecsw::sample_points(cfg, 3, 50);
  const auto c = ecsw::sample_points(cfg, 4, 50);
  ASSERT_EQ(a.size(), 50u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].coords, b[i].coords);
    differs = differs || a[i].coords != c[i].coords;
    EXPECT_LE(std::abs(a[i].t()), 3.0);
    EXPECT_LE(a[i].v().cwiseAbs().maxCoeff(), 2.0);
  }
  EXPECT_TRUE(differs);
}

TEST(Report, DumpPrecisionAndNull) {
  Json j;
  j["a"] = 0.1;
  j["b"] = std::numeric_limits<double>::quiet_NaN();
  j["c"] = 3;
  const std::string text = ecsw::dump_json(j);
  EXPECT_NE(text.find("0.10000000000000001"), std::string::npos) << text;
  EXPECT_NE(text.find("\"b\": null"), std::string::npos) << text;
  EXPECT_NE(text.find("\"c\": 3"), std::string::npos) << text;
}

TEST(Suite, DeterministicAcrossJobCounts) {
  Json j = base_config();
  j["checks"] = Json::array({"roter_scalar_vanishes", "olszak_dimension", "a_recovery", "euler_form_vanishes",
                             "group_identity", "e_ode_wronskian", "jet_fd_oracle"});
  const auto cfg = ecsw::parse_config(j);
  const auto one = ecsw::make_report(cfg, ecsw::run_suite(cfg, 1, false));
  const auto four = ecsw::make_report(cfg, ecsw::run_suite(cfg, 4, false));
  EXPECT_EQ(ecsw::dump_json(one), ecsw::dump_json(four));
  EXPECT_EQ(one["checks"].size(), 7u);
  EXPECT_TRUE(one["summary"]["pass"].get<bool>());
  // declaration order, not selection order
  EXPECT_EQ(one["checks"][0]["name"], "roter_scalar_vanishes");
  EXPECT_EQ(one["checks"][6]["name"], "jet_fd_oracle");
}

TEST(Suite, OvertightToleranceFails) {
  Json j = base_config();
  j["checks"] = Json::array({"jet_fd_oracle"});
  j["tolerances"] = Json::parse(R"({"jet_fd_oracle": 1e-20})");
  const auto cfg = ecsw::parse_config(j);
  const auto records = ecsw::run_suite(cfg, 1, true);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_FALSE(records[0].record.pass);
  EXPECT_TRUE(records[0].wall_seconds.has_value());
}
