#pragma once

// Geodesics, parallel transport, the solution space E of u'' = f(t) u + A u,
// the group action on the Roter chart, and the completeness variation.

#include <array>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ecsw/check.hpp"
#include "ecsw/metric.hpp"

namespace ecsw {

/// Gamma(a, b) at x: the vector Gamma^k_ij a^i b^j.
using Connection =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Closed-form Roter connection (only Gamma^s_tt, Gamma^s_ta, Gamma^a_tt are nonzero).
Eigen::VectorXd roter_gamma(const RoterSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b);
Connection roter_connection(const RoterSpec& spec);
/// Generic connection from any provider's first-order jet.
Connection provider_connection(const MetricProvider& provider);

struct Trajectory {
  std::vector<double> tau;
  std::vector<ChartPoint> points;
  std::vector<Eigen::VectorXd> velocities;
  std::vector<Eigen::VectorXd> accelerations;  // coordinate second derivatives
  std::vector<double> g_xdot_xdot;
  std::vector<double> g_xdot_ds;

  std::size_t size() const { return tau.size(); }
};

/// x'' + Gamma(x', x') = 0 by classical RK4 over tau in [span.first, span.second].
/// Throws std::invalid_argument unless 0 < step <= 1e-2, NumericalAbort on NaN.
Trajectory integrate_geodesic(const RoterSpec& spec, const ChartPoint& x0, const Eigen::VectorXd& v0,
                              std::pair<double, double> span, double step);

/// Largest |q_k - q_0| / max(1, |q_0|) over the recorded conserved quantities.
double conserved_drift(const Trajectory& traj);
/// Max deviation of the t coordinate from its least-squares affine fit in tau.
double t_affinity_deviation(const Trajectory& traj);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Smooth curve given by position, velocity and acceleration functions.
struct Curve {
  std::function<Eigen::VectorXd(double)> pos;
  std::function<Eigen::VectorXd(double)> vel;
  std::function<Eigen::VectorXd(double)> acc;
};

/// Piecewise cubic Hermite curve through the trajectory samples.
Curve curve_from_trajectory(const Trajectory& traj);

/// Solves w' + Gamma(y', w) = 0 along `curve` from tau0 to tau1 (either
/// order) with RK4; returns w at every step, starting with w0.
std::vector<Eigen::VectorXd> parallel_transport(const RoterSpec& spec, const Curve& curve, double tau0,
                                                double tau1, double step, const Eigen::VectorXd& w0);
std::vector<Eigen::VectorXd> parallel_transport(const RoterSpec& spec, const Trajectory& base,
                                                const Eigen::VectorXd& w0);

/// Samples of a solution of u'' = f(t) u + A u on the grid t_k = k * step,
/// k_min <= k <= k_max, with u(0), u'(0) as initial data.
struct OdeSolution {
  double step = 0.0;
  long k_min = 0;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> udot;

  double t_begin() const { return static_cast<double>(k_min) * step; }
  double t_end() const { return static_cast<double>(k_min + static_cast<long>(u.size()) - 1) * step; }
  double time(std::size_t i) const { return static_cast<double>(k_min + static_cast<long>(i)) * step; }
  std::size_t index_of_zero() const { return static_cast<std::size_t>(-k_min); }
};

/// Integrates from t = 0 in both directions to cover [span.first, span.second]
/// (which must contain 0). Throws like integrate_geodesic.
OdeSolution solve_E_ode(const RoterSpec& spec, const Eigen::VectorXd& u0, const Eigen::VectorXd& udot0,
                        std::pair<double, double> span, double step);

/// Cubic Hermite interpolation of u and u' at t; throws std::out_of_range
/// outside the sampled span.
Eigen::VectorXd interpolate_u(const RoterSpec& spec, const OdeSolution& sol, double t);
Eigen::VectorXd interpolate_udot(const RoterSpec& spec, const OdeSolution& sol, double t);

/// max over interior grid points of |second difference - (f + A) u|, relative.
double ode_residual(const RoterSpec& spec, const OdeSolution& sol);
/// <u', w> - <u, w'> at every grid point of two solutions on the same grid.
std::vector<double> wronskian_series(const RoterSpec& spec, const OdeSolution& a, const OdeSolution& b);
/// Drift of the Wronskian series relative to the size of its two terms.
double wronskian_drift(const RoterSpec& spec, const OdeSolution& a, const OdeSolution& b);

struct GroupElement {
  double p = 0.0;
  double q = 0.0;
  OdeSolution u;
};

/// Validates that p is 0 or a period of f (|f(t+p) - f(t)| < 1e-10 at 100
/// sample points over the solution span); throws SpecError otherwise.
GroupElement make_group_element(const RoterSpec& spec, double p, double q, OdeSolution u);
GroupElement identity_element(const RoterSpec& spec, std::pair<double, double> span, double step);

/// (p,q,u) . (t,s,v) = (t+p, s+q-<u'(t), 2v+u(t)>, v+u(t)).
ChartPoint act(const RoterSpec& spec, const GroupElement& gel, const ChartPoint& x);
/// Differential of x -> gel . x.
Eigen::MatrixXd act_jacobian(const RoterSpec& spec, const GroupElement& gel, const ChartPoint& x);
/// max|J^T g(gel . x) J - g(x)| / max(1, max|g(x)|).
double pullback_residual(const RoterSpec& spec, const GroupElement& gel, const ChartPoint& x);

/// g1 g2, with u(t) = u2(t) + u1(t + p2) re-integrated from its data at 0
/// over the span where both pieces are sampled.
GroupElement compose(const RoterSpec& spec, const GroupElement& g1, const GroupElement& g2);

struct VariationOptions {
  double t_begin = 0.0;
  double t_end = 3.0;
  double step = 1e-3;         // w integration along y; also the t-difference spacing
  int exp_steps = 200;        // s-geodesic steps on [0, 1]
  int sample_stride = 10;     // evaluate x_tt every stride * step in t
  std::vector<double> s_levels{0.25, 0.5, 0.75};
  // Q(w) = c0 [<Aw,w>]' + c1 f [g(w,w)]' + c2 f' g(w,w). The values
  // (4, 4, 2) are the ones for which exp_y(w) is a geodesic; see
  // tests/test_dynamics.cpp for the check against an independent geodesic.
  std::array<double, 3> q_coefficients{4.0, 4.0, 2.0};
};

struct VariationResult {
  double max_xtt_s1 = 0.0;        // max |x_tt(t, 1)|
  double max_xtt_s0 = 0.0;        // max |x_tt(t, 0)| = max |nabla_y' y'|
  double max_identity = 0.0;      // max |x_tt + (s-1)[v - s Q u/4]| over s_levels
                                  // (records report this and max_xtt_s1 over max(1, max_xtt_s0))
  double max_Q_spread = 0.0;      // max |Q(x_s) - Q(w)| / max(1, |Q(w)|) over s
  double max_Dperp_leak = 0.0;    // max |dt(w)| along y
  std::vector<CheckRecord> records;
};

/// Integrates the variation ODE for w along the t-parametrized curve y
/// (initial data projected to D^perp), builds x(t,s) = exp_{y(t)}(s w(t)),
/// and measures x_tt at s = 1 and the intermediate identity.
/// Throws std::invalid_argument when y is not t-parametrized.
VariationResult completeness_variation_check(const RoterSpec& spec, const Curve& y,
                                             const Eigen::VectorXd& w0, const Eigen::VectorXd& wdot0,
                                             const VariationOptions& opt = {}, double tolerance = 5e-3);

}  // namespace ecsw
