#pragma once

#include <vector>

#include "ecsw/metric.hpp"
#include "ecsw/rng.hpp"

namespace fixture {

inline ecsw::ScalarProfile sine() { return ecsw::ScalarProfile::sinusoid(1.0, 1.0, 0.0); }
inline ecsw::ScalarProfile cubic() { return ecsw::ScalarProfile::polynomial({0.0, -1.0, 0.0, 1.0}); }

inline ecsw::RoterSpec n4(ecsw::ScalarProfile f = sine()) {
  return ecsw::RoterSpec(ecsw::FibreMetric::diagonal({1, 1}), Eigen::MatrixXd(Eigen::Vector2d(1, -1).asDiagonal()),
                         f);
}

inline ecsw::RoterSpec n5(ecsw::ScalarProfile f = sine()) {
  return ecsw::RoterSpec(ecsw::FibreMetric::diagonal({1, 1, 1}),
                         Eigen::MatrixXd(Eigen::Vector3d(1, 2, -3).asDiagonal()), f);
}

inline ecsw::RoterSpec n6(ecsw::ScalarProfile f = sine()) {
  return ecsw::RoterSpec(ecsw::FibreMetric::diagonal({-1, 1, 1, 1}),
                         Eigen::MatrixXd(Eigen::Vector4d(1, -1, 2, -2).asDiagonal()), f);
}

inline std::vector<ecsw::RoterSpec> all_specs() {
  return {n4(), n5(), n6(), n4(cubic()), n5(cubic()), n6(cubic())};
}

inline ecsw::ChartPoint random_point(ecsw::Rng& rng, int n, double t = 3.0, double s = 3.0, double v = 2.0) {
  Eigen::VectorXd x(n);
  x(0) = rng.uniform(-t, t);
  x(1) = rng.uniform(-s, s);
  for (int i = 2; i < n; ++i) x(i) = rng.uniform(-v, v);
  return ecsw::ChartPoint(x);
}

}  // namespace fixture
