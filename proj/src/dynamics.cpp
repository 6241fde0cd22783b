#include "ecsw/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "ecsw/curvature.hpp"
#include "ecsw/errors.hpp"

namespace ecsw {

namespace {

using Vec = Eigen::VectorXd;

template <class F>
Vec rk4_step(const F& rhs, double t, const Vec& y, double h) {
  const Vec k1 = rhs(t, y);
  const Vec k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
  const Vec k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
  const Vec k4 = rhs(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_step(double step) {
  if (!(step > 0.0 && step <= 1e-2)) {
    throw std::invalid_argument("integration step must lie in (0, 1e-2], got " + fmt::format("{}", step));
  }
}

void check_finite(const Vec& y, double t, const char* what) {
  if (!y.allFinite()) {
    throw NumericalAbort(fmt::format("{}: non-finite state at parameter {:.17g}", what, t));
  }
}

long steps_for(double length, double step) {
  return std::max(1L, static_cast<long>(std::ceil(length / step - 1e-9)));
}

Vec hermite(const Vec& p0, const Vec& m0, const Vec& p1, const Vec& m1, double h, double th) {
  const double t2 = th * th, t3 = t2 * th;
  return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + th) * h * m0 + (-2 * t3 + 3 * t2) * p1 +
         (t3 - t2) * h * m1;
}

Vec hermite_derivative(const Vec& p0, const Vec& m0, const Vec& p1, const Vec& m1, double h, double th) {
  const double t2 = th * th;
  return ((6 * t2 - 6 * th) * p0 + (-6 * t2 + 6 * th) * p1) / h + (3 * t2 - 4 * th + 1) * m0 +
         (3 * t2 - 2 * th) * m1;
}

Eigen::MatrixXd roter_g(const RoterSpec& spec, const Vec& x) {
  return roter_jet(spec, ChartPoint(x), 0).g;
}

// (R(X, Y) Z)^l = X^i Y^j Z^k R13(i,j,k,l)
Vec apply_riemann(const Tensor& R13, const Vec& X, const Vec& Y, const Vec& Z) {
  const int n = R13.dim();
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (X(i) == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      const double xy = X(i) * Y(j);
      if (xy == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        if (Z(k) == 0.0) continue;
        for (int l = 0; l < n; ++l) out(l) += xy * Z(k) * R13(i, j, k, l);
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Connections

Vec roter_gamma(const RoterSpec& spec, const Vec& x, const Vec& a, const Vec& b) {
  const int n = spec.n;
  const Eigen::MatrixXd& G = spec.inner.matrix();
  const Vec v = x.tail(n - 2);
  const double t = x(0);
  const double f = spec.f(t);
  const double fd = spec.f.derivative(t, 1);
  const Vec Gv = G * v;
  const double dk_t = fd * v.dot(Gv);
  const Vec dk_v = 2.0 * f * Gv + 2.0 * (spec.lowered_A() * v);
  Vec out = Vec::Zero(n);
  const double tt = a(0) * b(0);
  out(1) = dk_t * tt + dk_v.dot(a(0) * b.tail(n - 2) + b(0) * a.tail(n - 2));
  out.tail(n - 2) = -0.5 * tt * (spec.inner.inverse() * dk_v);
  return out;
}

Connection roter_connection(const RoterSpec& spec) {
  return [spec](const Vec& x, const Vec& a, const Vec& b) { return roter_gamma(spec, x, a, b); };
}

Connection provider_connection(const MetricProvider& provider) {
  return [&provider](const Vec& x, const Vec& a, const Vec& b) {
    const Tensor gam = christoffel(provider.jet(ChartPoint(x), 1));
    const int n = gam.dim();
    Vec out = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(k) += gam(k, i, j) * a(i) * b(j);
    return out;
  };
}

// ---------------------------------------------------------------------------
// Geodesics

Trajectory integrate_geodesic(const RoterSpec& spec, const ChartPoint& x0, const Vec& v0,
                              std::pair<double, double> span, double step) {
  check_step(step);
  const int n = spec.n;
  if (x0.dim() != n || v0.size() != n) throw std::invalid_argument("integrate_geodesic: dimension mismatch");
  if (!(span.second > span.first)) throw std::invalid_argument("integrate_geodesic: empty span");
  const long steps = steps_for(span.second - span.first, step);
  const double h = (span.second - span.first) / static_cast<double>(steps);
  auto rhs = [&](double, const Vec& y) {
    Vec d(2 * n);
    const Vec x = y.head(n), v = y.tail(n);
    d.head(n) = v;
    d.tail(n) = -roter_gamma(spec, x, v, v);
    return d;
  };
  Trajectory tr;
  auto record = [&](double tau, const Vec& y) {
    check_finite(y, tau, "geodesic");
    const Vec x = y.head(n), v = y.tail(n);
    const Eigen::MatrixXd g = roter_g(spec, x);
    tr.tau.push_back(tau);
    tr.points.emplace_back(x);
    tr.velocities.push_back(v);
    tr.accelerations.push_back(-roter_gamma(spec, x, v, v));
    tr.g_xdot_xdot.push_back(v.dot(g * v));
    tr.g_xdot_ds.push_back((g * v)(1));
  };
  Vec y(2 * n);
  y << x0.coords, v0;
  record(span.first, y);
  for (long k = 0; k < steps; ++k) {
    const double tau = span.first + static_cast<double>(k) * h;
    y = rk4_step(rhs, tau, y, h);
    record(span.first + static_cast<double>(k + 1) * h, y);
  }
  return tr;
}

double conserved_drift(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto* q : {&traj.g_xdot_xdot, &traj.g_xdot_ds}) {
    if (q->empty()) continue;
    const double q0 = q->front();
    for (double v : *q) worst = std::max(worst, std::abs(v - q0) / std::max(1.0, std::abs(q0)));
  }
  return worst;
}

double t_affinity_deviation(const Trajectory& traj) {
  const auto m = static_cast<Eigen::Index>(traj.size());
  Eigen::MatrixXd X(m, 2);
  Vec y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = traj.tau[static_cast<std::size_t>(i)];
    y(i) = traj.points[static_cast<std::size_t>(i)].t();
  }
  const Vec coef = X.colPivHouseholderQr().solve(y);
  return (X * coef - y).cwiseAbs().maxCoeff();
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.points.empty() ? 0 : traj.points.front().dim();
  os << "step,tau,t,s";
  for (int a = 1; a <= n - 2; ++a) os << ",v" << a;
  os << ",g_xdot_xdot,g_xdot_ds\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << k << ',' << fmt::format("{:.17g}", traj.tau[k]);
    const Vec& x = traj.points[k].coords;
    for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << fmt::format("{:.17g}", x(i));
    os << ',' << fmt::format("{:.17g}", traj.g_xdot_xdot[k]) << ','
       << fmt::format("{:.17g}", traj.g_xdot_ds[k]) << '\n';
  }
}

Curve curve_from_trajectory(const Trajectory& traj) {
  if (traj.size() < 2) throw std::invalid_argument("curve_from_trajectory: need at least two samples");
  auto tp = std::make_shared<const Trajectory>(traj);
  auto locate = [tp](double tau) {
    const Trajectory& traj = *tp;
    const double t0 = traj.tau.front();
    const double h = traj.tau[1] - t0;
    const double last = traj.tau.back();
    if (tau < t0 - 1e-12 || tau > last + 1e-12) {
      throw std::out_of_range(fmt::format("curve parameter {} outside [{}, {}]", tau, t0, last));
    }
    auto i = static_cast<std::size_t>(std::clamp((tau - t0) / h, 0.0, static_cast<double>(traj.size() - 2)));
    i = std::min(i, traj.size() - 2);
    return std::pair{i, (tau - traj.tau[i]) / h};
  };
  Curve c;
  c.pos = [tp, locate](double tau) {
    const Trajectory& traj = *tp;
    const auto [i, th] = locate(tau);
    const double h = traj.tau[i + 1] - traj.tau[i];
    return hermite(traj.points[i].coords, traj.velocities[i], traj.points[i + 1].coords,
                   traj.velocities[i + 1], h, th);
  };
  c.vel = [tp, locate](double tau) {
    const Trajectory& traj = *tp;
    const auto [i, th] = locate(tau);
    const double h = traj.tau[i + 1] - traj.tau[i];
    return hermite(traj.velocities[i], traj.accelerations[i], traj.velocities[i + 1],
                   traj.accelerations[i + 1], h, th);
  };
  c.acc = [tp, locate](double tau) {
    const Trajectory& traj = *tp;
    const auto [i, th] = locate(tau);
    const double h = traj.tau[i + 1] - traj.tau[i];
    return hermite_derivative(traj.velocities[i], traj.accelerations[i], traj.velocities[i + 1],
                              traj.accelerations[i + 1], h, th);
  };
  return c;
}

std::vector<Vec> parallel_transport(const RoterSpec& spec, const Curve& curve, double tau0, double tau1,
                                    double step, const Vec& w0) {
  check_step(step);
  const long steps = steps_for(std::abs(tau1 - tau0), step);
  const double h = (tau1 - tau0) / static_cast<double>(steps);
  auto rhs = [&](double tau, const Vec& w) -> Vec {
    return -roter_gamma(spec, curve.pos(tau), curve.vel(tau), w);
  };
  std::vector<Vec> out{w0};
  Vec w = w0;
  for (long k = 0; k < steps; ++k) {
    const double tau = tau0 + static_cast<double>(k) * h;
    w = rk4_step(rhs, tau, w, h);
    check_finite(w, tau + h, "parallel transport");
    out.push_back(w);
  }
  return out;
}

std::vector<Vec> parallel_transport(const RoterSpec& spec, const Trajectory& base, const Vec& w0) {
  const Curve c = curve_from_trajectory(base);
  const double h = base.tau[1] - base.tau[0];
  return parallel_transport(spec, c, base.tau.front(), base.tau.back(), h, w0);
}

// ---------------------------------------------------------------------------
// Solution space E

OdeSolution solve_E_ode(const RoterSpec& spec, const Vec& u0, const Vec& udot0,
                        std::pair<double, double> span, double step) {
  check_step(step);
  const int k = spec.n - 2;
  if (u0.size() != k || udot0.size() != k) throw std::invalid_argument("solve_E_ode: dimension mismatch");
  if (span.first > 0.0 || span.second < 0.0) {
    throw std::invalid_argument("solve_E_ode: span must contain t = 0");
  }
  auto rhs = [&](double t, const Vec& y) {
    Vec d(2 * k);
    d.head(k) = y.tail(k);
    d.tail(k) = spec.f(t) * y.head(k) + spec.A * y.head(k);
    return d;
  };
  const long fwd = span.second > 0.0 ? steps_for(span.second, step) : 0;
  const long bwd = span.first < 0.0 ? steps_for(-span.first, step) : 0;
  OdeSolution sol;
  sol.step = step;
  sol.k_min = -bwd;
  const auto total = static_cast<std::size_t>(fwd + bwd + 1);
  sol.u.resize(total);
  sol.udot.resize(total);
  Vec y0(2 * k);
  y0 << u0, udot0;
  auto store = [&](long idx, const Vec& y) {
    const auto i = static_cast<std::size_t>(idx - sol.k_min);
    sol.u[i] = y.head(k);
    sol.udot[i] = y.tail(k);
  };
  store(0, y0);
  Vec y = y0;
  for (long i = 0; i < fwd; ++i) {
    y = rk4_step(rhs, static_cast<double>(i) * step, y, step);
    check_finite(y, static_cast<double>(i + 1) * step, "E-ODE");
    store(i + 1, y);
  }
  y = y0;
  for (long i = 0; i < bwd; ++i) {
    y = rk4_step(rhs, -static_cast<double>(i) * step, y, -step);
    check_finite(y, -static_cast<double>(i + 1) * step, "E-ODE");
    store(-(i + 1), y);
  }
  return sol;
}

namespace {

std::pair<std::size_t, double> locate(const OdeSolution& sol, double t) {
  const double a = sol.t_begin(), b = sol.t_end();
  const double slack = 1e-9 * sol.step;
  if (t < a - slack || t > b + slack) {
    throw std::out_of_range(fmt::format("t = {} outside the sampled span [{}, {}]", t, a, b));
  }
  if (sol.u.size() < 2) return {0, 0.0};
  const double x = std::clamp((t - a) / sol.step, 0.0, static_cast<double>(sol.u.size() - 1));
  auto i = std::min(static_cast<std::size_t>(x), sol.u.size() - 2);
  return {i, x - static_cast<double>(i)};
}

Vec second_derivative(const RoterSpec& spec, const Vec& u, double t) {
  return spec.f(t) * u + spec.A * u;
}

}  // namespace

Vec interpolate_u(const RoterSpec&, const OdeSolution& sol, double t) {
  const auto [i, th] = locate(sol, t);
  if (sol.u.size() < 2) return sol.u.front();
  return hermite(sol.u[i], sol.udot[i], sol.u[i + 1], sol.udot[i + 1], sol.step, th);
}

Vec interpolate_udot(const RoterSpec& spec, const OdeSolution& sol, double t) {
  const auto [i, th] = locate(sol, t);
  if (sol.u.size() < 2) return sol.udot.front();
  return hermite(sol.udot[i], second_derivative(spec, sol.u[i], sol.time(i)), sol.udot[i + 1],
                 second_derivative(spec, sol.u[i + 1], sol.time(i + 1)), sol.step, th);
}

double ode_residual(const RoterSpec& spec, const OdeSolution& sol) {
  double worst = 0.0, scale = 1.0;
  const double h2 = sol.step * sol.step;
  for (std::size_t i = 1; i + 1 < sol.u.size(); ++i) {
    const Vec acc = second_derivative(spec, sol.u[i], sol.time(i));
    const Vec fd = (sol.u[i + 1] - 2.0 * sol.u[i] + sol.u[i - 1]) / h2;
    worst = std::max(worst, (fd - acc).cwiseAbs().maxCoeff());
    scale = std::max(scale, acc.cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

std::vector<double> wronskian_series(const RoterSpec& spec, const OdeSolution& a, const OdeSolution& b) {
  if (a.k_min != b.k_min || a.u.size() != b.u.size() || a.step != b.step) {
    throw std::invalid_argument("wronskian_series: solutions must share a grid");
  }
  const auto& G = spec.inner.matrix();
  std::vector<double> out(a.u.size());
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    out[i] = a.udot[i].dot(G * b.u[i]) - a.u[i].dot(G * b.udot[i]);
  }
  return out;
}

double wronskian_drift(const RoterSpec& spec, const OdeSolution& a, const OdeSolution& b) {
  const std::vector<double> w = wronskian_series(spec, a, b);
  const auto& G = spec.inner.matrix();
  double scale = 1.0, drift = 0.0;
  const std::size_t i0 = a.index_of_zero();
  for (std::size_t i = 0; i < w.size(); ++i) {
    scale = std::max(scale, std::abs(a.udot[i].dot(G * b.u[i])) + std::abs(a.u[i].dot(G * b.udot[i])));
    drift = std::max(drift, std::abs(w[i] - w[i0]));
  }
  return drift / scale;
}

// ---------------------------------------------------------------------------
// Group action

GroupElement make_group_element(const RoterSpec& spec, double p, double q, OdeSolution u) {
  if (u.u.empty() || u.u.front().size() != spec.n - 2) {
    throw SpecError("group element: solution must have n - 2 components");
  }
  if (p != 0.0) {
    const double a = u.t_begin(), b = u.t_end();
    for (int i = 0; i < 100; ++i) {
      const double t = a + (b - a) * i / 99.0;
      if (std::abs(spec.f(t + p) - spec.f(t)) >= 1e-10) {
        throw SpecError(fmt::format("group element: p = {} is not a period of f", p));
      }
    }
  }
  return GroupElement{p, q, std::move(u)};
}

GroupElement identity_element(const RoterSpec& spec, std::pair<double, double> span, double step) {
  const Vec z = Vec::Zero(spec.n - 2);
  return make_group_element(spec, 0.0, 0.0, solve_E_ode(spec, z, z, span, step));
}

ChartPoint act(const RoterSpec& spec, const GroupElement& gel, const ChartPoint& x) {
  const int n = spec.n;
  if (x.dim() != n) throw std::invalid_argument("act: dimension mismatch");
  const double t = x.t();
  const Vec u = interpolate_u(spec, gel.u, t);
  const Vec ud = interpolate_udot(spec, gel.u, t);
  const Vec v = x.v();
  const auto& G = spec.inner.matrix();
  Vec out(n);
  out(0) = t + gel.p;
  out(1) = x.s() + gel.q - ud.dot(G * (2.0 * v + u));
  out.tail(n - 2) = v + u;
  return ChartPoint(out);
}

Eigen::MatrixXd act_jacobian(const RoterSpec& spec, const GroupElement& gel, const ChartPoint& x) {
  const int n = spec.n;
  const double t = x.t();
  const Vec u = interpolate_u(spec, gel.u, t);
  const Vec ud = interpolate_udot(spec, gel.u, t);
  const Vec udd = second_derivative(spec, u, t);
  const Vec v = x.v();
  const auto& G = spec.inner.matrix();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  J(0, 0) = 1.0;
  J(1, 0) = -(udd.dot(G * (2.0 * v + u)) + ud.dot(G * ud));
  J(1, 1) = 1.0;
  J.block(1, 2, 1, n - 2) = -2.0 * (G * ud).transpose();
  J.block(2, 0, n - 2, 1) = ud;
  J.block(2, 2, n - 2, n - 2).setIdentity();
  return J;
}

double pullback_residual(const RoterSpec& spec, const GroupElement& gel, const ChartPoint& x) {
  const Eigen::MatrixXd J = act_jacobian(spec, gel, x);
  const Eigen::MatrixXd g1 = roter_g(spec, act(spec, gel, x).coords);
  const Eigen::MatrixXd g0 = roter_g(spec, x.coords);
  return (J.transpose() * g1 * J - g0).cwiseAbs().maxCoeff() / std::max(1.0, g0.cwiseAbs().maxCoeff());
}

GroupElement compose(const RoterSpec& spec, const GroupElement& g1, const GroupElement& g2) {
  const auto& G = spec.inner.matrix();
  const double p2 = g2.p;
  const Vec u2 = g2.u.u[g2.u.index_of_zero()];
  const Vec ud2 = g2.u.udot[g2.u.index_of_zero()];
  const Vec u1 = interpolate_u(spec, g1.u, p2);
  const Vec ud1 = interpolate_udot(spec, g1.u, p2);
  const double q = g1.q + g2.q + ud2.dot(G * u1) - ud1.dot(G * u2);
  const double lo = std::max(g2.u.t_begin(), g1.u.t_begin() - p2);
  const double hi = std::min(g2.u.t_end(), g1.u.t_end() - p2);
  if (lo > 0.0 || hi < 0.0) throw std::out_of_range("compose: sampled spans do not overlap at t = 0");
  // Trim by one step so every grid point stays inside both sampled spans.
  const double step = g2.u.step;
  OdeSolution u = solve_E_ode(spec, u2 + u1, ud2 + ud1, {std::min(0.0, lo + step), std::max(0.0, hi - step)},
                              step);
  return make_group_element(spec, g1.p + g2.p, q, std::move(u));
}

// ---------------------------------------------------------------------------
// Completeness variation

namespace {

struct ExpSamples {
  std::vector<Vec> x;   // positions at the requested s levels
  std::vector<Vec> xs;  // geodesic velocities at the requested s levels
  std::vector<Vec> v;   // transported vector at the requested s levels
};

// s-geodesic from p with initial velocity w, transporting `carry` along it.
ExpSamples exp_geodesic(const RoterSpec& spec, const Vec& p, const Vec& w, const Vec& carry, int steps,
                        const std::vector<int>& levels) {
  const int n = spec.n;
  const double h = 1.0 / steps;
  auto rhs = [&](double, const Vec& y) {
    const Vec x = y.head(n), xd = y.segment(n, n), c = y.tail(n);
    Vec d(3 * n);
    d.head(n) = xd;
    d.segment(n, n) = -roter_gamma(spec, x, xd, xd);
    d.tail(n) = -roter_gamma(spec, x, xd, c);
    return d;
  };
  Vec y(3 * n);
  y << p, w, carry;
  ExpSamples out;
  std::size_t next = 0;
  for (int k = 0; k <= steps; ++k) {
    while (next < levels.size() && levels[next] == k) {
      out.x.push_back(y.head(n));
      out.xs.push_back(y.segment(n, n));
      out.v.push_back(y.tail(n));
      ++next;
    }
    if (k < steps) y = rk4_step(rhs, k * h, y, h);
  }
  check_finite(y, 1.0, "exponential map");
  return out;
}

}  // namespace

VariationResult completeness_variation_check(const RoterSpec& spec, const Curve& y, const Vec& w0,
                                             const Vec& wdot0, const VariationOptions& opt,
                                             double tolerance) {
  const int n = spec.n;
  check_step(opt.step);
  if (w0.size() != n || wdot0.size() != n) throw std::invalid_argument("variation: dimension mismatch");
  for (int i = 0; i <= 10; ++i) {
    const double t = opt.t_begin + (opt.t_end - opt.t_begin) * i / 10.0;
    if (std::abs(y.pos(t)(0) - t) > 1e-9 || std::abs(y.vel(t)(0) - 1.0) > 1e-9) {
      throw std::invalid_argument("variation: curve is not parametrized by t");
    }
  }
  const Eigen::MatrixXd QA = spec.lowered_A();
  const auto tail = [n](const Vec& x) { return x.tail(n - 2); };

  auto accel = [&](double t) {
    const Vec yd = y.vel(t);
    return Vec(y.acc(t) + roter_gamma(spec, y.pos(t), yd, yd));
  };
  auto Q_of = [&](double t, const Vec& x, const Vec& w, const Vec& z) {
    const Eigen::MatrixXd g = roter_g(spec, x);
    const auto& c = opt.q_coefficients;
    return c[0] * 2.0 * tail(z).dot(QA * tail(w)) + c[1] * 2.0 * spec.f(t) * w.dot(g * z) +
           c[2] * spec.f.derivative(t, 1) * w.dot(g * w);
  };
  // State (w, z) with z = nabla_y' w.
  auto rhs = [&](double t, const Vec& st) {
    const Vec x = y.pos(t), yd = y.vel(t);
    const Vec w = st.head(n), z = st.tail(n);
    const Tensor R13 = riemann(roter_jet(spec, ChartPoint(x), 2)).first;
    Vec nz = -apply_riemann(R13, yd, w, yd) - accel(t);
    nz(1) -= 0.5 * Q_of(t, x, w, z);  // Q u / 4 with u = grad t = 2 d_s
    Vec d(2 * n);
    d.head(n) = z - roter_gamma(spec, x, yd, w);
    d.tail(n) = nz - roter_gamma(spec, x, yd, z);
    return d;
  };

  Vec w_init = w0, wd_init = wdot0;
  w_init(0) = 0.0;
  wd_init(0) = 0.0;
  const double h = opt.step;
  const long steps = steps_for(opt.t_end - opt.t_begin, h);
  const double dt = (opt.t_end - opt.t_begin) / static_cast<double>(steps);
  std::vector<Vec> states;
  Vec st(2 * n);
  st << w_init, wd_init + roter_gamma(spec, y.pos(opt.t_begin), y.vel(opt.t_begin), w_init);
  states.push_back(st);
  VariationResult res;
  for (long k = 0; k < steps; ++k) {
    const double t = opt.t_begin + static_cast<double>(k) * dt;
    st = rk4_step(rhs, t, st, dt);
    check_finite(st, t + dt, "variation ODE");
    states.push_back(st);
    res.max_Dperp_leak = std::max(res.max_Dperp_leak, std::abs(st(0)));
  }

  std::vector<double> s_all{0.0};
  s_all.insert(s_all.end(), opt.s_levels.begin(), opt.s_levels.end());
  s_all.push_back(1.0);
  std::vector<int> levels;
  for (double s : s_all) levels.push_back(static_cast<int>(std::lround(s * opt.exp_steps)));
  for (std::size_t i = 0; i < s_all.size(); ++i) s_all[i] = static_cast<double>(levels[i]) / opt.exp_steps;

  // Five-point central stencils in t: the fibre part of w grows roughly like
  // exp(sqrt(f + lambda) t), and the fourth t-derivative that controls the
  // three-point rule's error would dominate the tolerance.
  std::vector<long> centers;
  for (long k = 2; k + 2 <= steps; k += std::max(1, opt.sample_stride)) centers.push_back(k);
  if (centers.empty()) throw std::invalid_argument("variation: span shorter than the difference stencil");
  if (centers.back() != steps - 2) centers.push_back(steps - 2);
  const auto d1 = [dt](const auto& m2, const auto& m1, const auto& p1, const auto& p2) {
    return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * dt);
  };
  const auto d2 = [dt](const auto& m2, const auto& m1, const auto& c, const auto& p1, const auto& p2) {
    return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * dt * dt);
  };

  const Vec zero = Vec::Zero(n);
  for (long k : centers) {
    const double t = opt.t_begin + static_cast<double>(k) * dt;
    const Vec a = accel(t);
    ExpSamples e[5];
    for (int j = -2; j <= 2; ++j) {
      const double tj = t + j * dt;
      e[j + 2] = exp_geodesic(spec, y.pos(tj), states[static_cast<std::size_t>(k + j)].head(n),
                              j == 0 ? a : zero, opt.exp_steps, levels);
    }
    const Vec& w = states[static_cast<std::size_t>(k)].head(n);
    const Vec& z = states[static_cast<std::size_t>(k)].tail(n);
    const double q_state = Q_of(t, y.pos(t), w, z);
    for (std::size_t li = 0; li < s_all.size(); ++li) {
      const double s = s_all[li];
      const Vec& x0 = e[2].x[li];
      const Vec xt = d1(e[0].x[li], e[1].x[li], e[3].x[li], e[4].x[li]);
      const Vec xtt =
          d2(e[0].x[li], e[1].x[li], x0, e[3].x[li], e[4].x[li]) + roter_gamma(spec, x0, xt, xt);
      const double norm = xtt.cwiseAbs().maxCoeff();
      if (li == 0) res.max_xtt_s0 = std::max(res.max_xtt_s0, norm);
      if (li + 1 == s_all.size()) res.max_xtt_s1 = std::max(res.max_xtt_s1, norm);
      if (li != 0 && li + 1 != s_all.size()) {
        Vec bracket = e[2].v[li];
        bracket(1) -= s * q_state * 0.5;
        res.max_identity = std::max(res.max_identity, (xtt + (s - 1.0) * bracket).cwiseAbs().maxCoeff());
      }
      // Q(x_s) with t-derivatives from the same stencil.
      double gam[5], gg[5];
      for (int j = 0; j < 5; ++j) {
        const Vec& xs = e[j].xs[li];
        gam[j] = tail(xs).dot(QA * tail(xs));
        gg[j] = xs.dot(roter_g(spec, e[j].x[li]) * xs);
      }
      const auto& c = opt.q_coefficients;
      const double q_s = c[0] * d1(gam[0], gam[1], gam[3], gam[4]) +
                         c[1] * spec.f(t) * d1(gg[0], gg[1], gg[3], gg[4]) +
                         c[2] * spec.f.derivative(t, 1) * gg[2];
      res.max_Q_spread =
          std::max(res.max_Q_spread, std::abs(q_s - q_state) / std::max(1.0, std::abs(q_state)));
    }
  }
  const double rel = res.max_xtt_s1 / std::max(1.0, res.max_xtt_s0);
  res.records.push_back(make_check("completeness_xtt_vanishes_at_s1", "x_tt = 0 when s = 1", rel, tolerance));
  res.records.push_back(make_check("completeness_intermediate_identity",
                                   "x_tt + (s-1)[v - s Q(x_s) u/4] = 0",
                                   res.max_identity / std::max(1.0, res.max_xtt_s0), tolerance));
  res.records.push_back(make_check("completeness_Q_constant_in_s", "[Q(x_s)]_s = 0", res.max_Q_spread, tolerance));
  res.records.push_back(make_check("completeness_w_tangent_to_Dperp", "w stays tangent to D^perp",
                                   res.max_Dperp_leak, 1e-9));
  return res;
}

}  // namespace ecsw
