#include "ecsw/suite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "ecsw/charforms.hpp"
#include "ecsw/curvature.hpp"
#include "ecsw/dynamics.hpp"
#include "ecsw/errors.hpp"
#include "ecsw/olszak.hpp"
#include "ecsw/rng.hpp"

namespace ecsw {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Parsing helpers

template <class T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("{}: unexpected value {}", what, j.dump()));
  }
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(fmt::format("{}: missing \"{}\"", where, key));
  return obj.at(key);
}

double get_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(fmt::format("{}: expected a number, got {}", what, j.dump()));
  return j.get<double>();
}

Mat parse_matrix(const Json& j, int rows, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ConfigError(fmt::format("{}: expected {} rows", what, rows));
  Mat m(rows, rows);
  for (int i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != rows)
      throw ConfigError(fmt::format("{}: row {} must have {} entries", what, i, rows));
    for (int k = 0; k < rows; ++k) m(i, k) = get_number(row[static_cast<std::size_t>(k)], what);
  }
  return m;
}

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; }))
      throw ConfigError(fmt::format("{}: unknown key \"{}\"", where, item.key()));
  }
}

ScalarProfile parse_profile(const Json& j) {
  if (!j.is_object()) throw ConfigError("spec.f: expected an object");
  const auto family = get_as<std::string>(require(j, "family", "spec.f"), "spec.f.family");
  if (family == "sinusoid") {
    reject_unknown_keys(j, {"family", "amplitude", "frequency", "phase"}, "spec.f");
    const double phase = j.contains("phase") ? get_number(j.at("phase"), "spec.f.phase") : 0.0;
    return ScalarProfile::sinusoid(get_number(require(j, "amplitude", "spec.f"), "spec.f.amplitude"),
                                   get_number(require(j, "frequency", "spec.f"), "spec.f.frequency"), phase);
  }
  if (family == "polynomial") {
    reject_unknown_keys(j, {"family", "coeffs"}, "spec.f");
    const Json& c = require(j, "coeffs", "spec.f");
    if (!c.is_array() || c.empty()) throw ConfigError("spec.f.coeffs: expected a nonempty array");
    std::vector<double> coeffs;
    for (const auto& x : c) coeffs.push_back(get_number(x, "spec.f.coeffs"));
    return ScalarProfile::polynomial(std::move(coeffs));
  }
  if (family == "exponential") {
    reject_unknown_keys(j, {"family", "amplitude", "rate"}, "spec.f");
    return ScalarProfile::exponential(get_number(require(j, "amplitude", "spec.f"), "spec.f.amplitude"),
                                      get_number(require(j, "rate", "spec.f"), "spec.f.rate"));
  }
  throw ConfigError(fmt::format("spec.f.family: unknown family \"{}\"", family));
}

std::pair<double, double> parse_range(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(fmt::format("{}: expected [lo, hi]", what));
  const double lo = get_number(j[0], what), hi = get_number(j[1], what);
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ConfigError(fmt::format("{}: need finite lo <= hi", what));
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Catalogue

const std::vector<CheckInfo>& catalogue() {
  static const std::vector<CheckInfo> list = [] {
    std::vector<CheckInfo> c;
    auto add = [&c](const char* name, const char* group, const char* property, double tol, bool lower = false) {
      c.push_back({name, group, property, tol, lower});
    };
    add("roter_scalar_vanishes", "curvature", "scalar curvature s = 0", 1e-9);
    add("roter_ricci_closed_form", "curvature", "rho = (2-n) f(t) dt (x) dt", 1e-9);
    add("roter_riemann_decomposition", "curvature", "R = W + (n-2)^-1 g ^ rho (relative to |R|)", 1e-10);
    add("riemann_symmetries", "curvature", "R_ijkl = -R_jikl = -R_ijlk = R_klij and first Bianchi", 1e-10);
    add("weyl_trace_free", "curvature", "every metric trace of W vanishes", 1e-10);
    add("second_bianchi", "curvature", "cyclic sum of nabla R vanishes", 1e-7);
    add("roter_weyl_parallel", "curvature", "nabla W = 0 (relative to |W|)", 1e-8);
    add("roter_weyl_nonzero", "curvature", "min |W| over samples (not conformally flat)", 1e-3, true);
    add("roter_not_locally_symmetric", "curvature", "min |nabla R| where f' != 0 (not locally symmetric)", 1e-6,
        true);
    add("roter_ricci_codazzi", "curvature", "nabla rho is totally symmetric", 1e-8);
    add("roter_ricci_gradient", "curvature", "nabla rho = (2-n) f'(t) dt (x) dt (x) dt", 1e-8);
    add("roter_ricci_image_in_D", "curvature", "rho(e_i, .) raised lies in span(d_s)", 1e-9);

    add("olszak_dimension", "olszak", "dim D = 1 (residual max |dim D - 1|)", 0.5);
    add("olszak_axis_alignment", "olszak", "D is spanned by d_s (sine of angle)", 1e-8);
    add("olszak_nullity", "olszak", "D is null", 1e-10);
    add("olszak_parallel", "olszak", "D is parallel", 1e-9);
    add("olszak_ricci_image_in_D", "olszak", "(Ker rho)^perp is contained in D", 1e-9);
    add("olszak_D_in_Dperp", "olszak", "D is contained in D^perp", 1e-9);
    add("olszak_Dperp_in_ker_ricci", "olszak", "D^perp is contained in Ker rho", 1e-9);
    add("olszak_D_in_ker_weyl", "olszak", "D is contained in Ker W", 1e-9);
    add("olszak_weyl_on_Dperp", "olszak", "W(v, v', ., .) = 0 for v, v' in D^perp", 1e-9);
    add("olszak_riemann_on_Dperp", "olszak", "R(v, v', ., .) = 0 for v, v' in D^perp", 1e-9);

    add("a_recovery", "phi", "gamma^-1 Phi(lambda (x) lambda) = A (relative to |A|)", 1e-6);
    add("phi_norm_constant", "phi", "|Phi(lambda (x) lambda)|^-1/2 is point independent (relative spread)", 1e-7);
    add("recovered_A_traceless_selfadjoint", "phi", "recovered A is traceless and self-adjoint", 1e-8);

    add("euler_form_vanishes", "charforms", "Euler form = 0 on random bases", 1e-8);
    add("generating_form_vanishes", "charforms", "first generating form = 0 on random 4-tuples", 1e-8);

    add("group_identity", "isometry", "(0, 0, 0) acts as the identity", 1e-12);
    add("isometry_pullback", "isometry", "pullback of g under x -> gel x equals g", 1e-7);
    add("group_action_compatible", "isometry", "(g1 g2) x = g1 (g2 x)", 1e-8);
    add("group_associativity", "isometry", "((g1 g2) g3) x = (g1 (g2 g3)) x", 1e-8);

    add("geodesic_conserved_drift", "geodesic", "g(x', x') and g(x', d_s) are constant", 1e-7);
    add("geodesic_t_affine", "geodesic", "t is affine along geodesics", 1e-7);
    add("geodesic_s_lines", "geodesic", "v0 = d_s gives the straight s-line", 1e-9);
    add("geodesic_richardson_order", "geodesic", "|log2(drift(h) / drift(h/2)) - 4|", 0.5);

    add("transport_metric_preserved", "transport", "g(w, w) and g(w, d_s) are constant along transport", 1e-8);
    add("transport_reversible", "transport", "transport then reverse transport returns w0", 1e-8);
    add("transport_ds_fixed", "transport", "d_s is transported to itself", 1e-12);

    add("e_ode_residual", "e_ode", "u'' = f(t) u + A u at interior grid points", 1e-6);
    add("e_ode_wronskian", "e_ode", "<u', w> - <u, w'> is constant", 1e-8);
    add("e_ode_dimension", "e_ode", "min singular value of 2(n-2) stacked states", 1e-6, true);

    add("completeness_xtt_vanishes_at_s1", "completeness", "x_tt = 0 when s = 1 (relative to |x_tt(t, 0)|)",
        5e-3);
    add("completeness_intermediate_identity", "completeness",
        "x_tt + (s-1)[v - s Q(x_s) u/4] = 0 (relative to |x_tt(t, 0)|)", 5e-3);
    add("completeness_Q_constant_in_s", "completeness", "[Q(x_s)]_s = 0", 5e-3);
    add("completeness_w_tangent_to_Dperp", "completeness", "w stays tangent to D^perp", 1e-9);

    add("jet_fd_oracle", "oracle", "analytic jet = finite-difference jet (relative)", 1e-6);
    return c;
  }();
  return list;
}

// ---------------------------------------------------------------------------
// Aggregation of per-sample residuals into records

class Collector {
 public:
  Collector(const SuiteConfig& cfg, const std::string& group) : cfg_(cfg), group_(group) {}

  bool wanted(const std::string& name) const {
    return cfg_.checks.empty() || std::find(cfg_.checks.begin(), cfg_.checks.end(), name) != cfg_.checks.end();
  }

  void add(const std::string& name, double residual) {
    auto& slot = values_[name];
    const bool lower = check_info(name).lower_bound;
    if (!slot.seen) {
      slot.value = residual;
      slot.seen = true;
    } else if (std::isnan(slot.value) || std::isnan(residual)) {
      slot.value = std::numeric_limits<double>::quiet_NaN();
    } else {
      slot.value = lower ? std::min(slot.value, residual) : std::max(slot.value, residual);
    }
  }

  void skip(const std::string& name, std::string note) { values_[name].note = std::move(note); }

  std::vector<CheckRecord> records() const {
    std::vector<CheckRecord> out;
    for (const auto& info : catalogue()) {
      if (info.group != group_ || !wanted(info.name)) continue;
      auto it = values_.find(info.name);
      if (it == values_.end() || !it->second.seen) {
        const std::string note = it == values_.end() ? "no samples" : it->second.note;
        out.push_back(skipped_check(info.name, info.property, note));
        out.back().tolerance = effective_tolerance(cfg_, info.name);
        out.back().lower_bound = info.lower_bound;
        continue;
      }
      out.push_back(make_check(info.name, info.property, it->second.value, effective_tolerance(cfg_, info.name),
                               info.lower_bound));
      out.back().note = it->second.note;
    }
    return out;
  }

 private:
  struct Slot {
    double value = 0.0;
    bool seen = false;
    std::string note;
  };
  const SuiteConfig& cfg_;
  std::string group_;
  std::map<std::string, Slot> values_;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed * 0x9E3779B97F4A7C15ULL + stream;
}

std::uint64_t group_stream(const std::string& group) {
  const auto groups = check_groups();
  return static_cast<std::uint64_t>(std::find(groups.begin(), groups.end(), group) - groups.begin()) + 1;
}

void require_finite(const Tensor& t, const ChartPoint& p, const char* what) {
  for (double x : t.components()) {
    if (!std::isfinite(x)) {
      throw NumericalAbort(fmt::format("non-finite {} at t = {:.17g}", what, p.t()));
    }
  }
}

CurvaturePack pack_at(const RoterSpec& spec, const ChartPoint& p) {
  const MetricJet jet = roter_jet(spec, p, 3);
  require_finite(jet);
  CurvaturePack pack = compute_curvature(jet);
  require_finite(pack.riemann04, p, "Riemann tensor");
  require_finite(pack.nabla_riemann, p, "covariant derivative of Riemann");
  return pack;
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------
// Groups

std::vector<CheckRecord> run_curvature(const SuiteConfig& cfg) {
  Collector c(cfg, "curvature");
  const RoterSpec& spec = cfg.spec;
  const int n = spec.n;
  bool any_fdot = false;
  for (const auto& p : sample_points(cfg, group_stream("curvature"), cfg.sample_count)) {
    const CurvaturePack pack = pack_at(spec, p);
    const Tensor g = pack.metric_tensor();
    const double f = spec.f(p.t()), fd = spec.f.derivative(p.t(), 1);

    c.add("roter_scalar_vanishes", std::abs(pack.scalar));

    Tensor rho_exp = Tensor::covariant(n, 2);
    rho_exp(0, 0) = (2.0 - n) * f;
    c.add("roter_ricci_closed_form", relative(pack.ricci - rho_exp, rho_exp));

    const Tensor decomposition =
        pack.riemann04 - pack.weyl - (1.0 / (n - 2.0)) * kulkarni_nomizu(g, pack.ricci);
    c.add("roter_riemann_decomposition", relative(decomposition, pack.riemann04));

    const double rscale = std::max(1.0, pack.riemann04.max_abs());
    c.add("riemann_symmetries",
          std::max(riemann_pair_symmetry_residual(pack.riemann04), first_bianchi_residual(pack.riemann04)) /
              rscale);
    c.add("weyl_trace_free", trace_residual(pack.weyl, pack.g_inv) / std::max(1.0, pack.weyl.max_abs()));
    c.add("second_bianchi",
          second_bianchi_residual(pack.nabla_riemann) / std::max(1.0, pack.nabla_riemann.max_abs()));

    const double wnorm = pack.weyl.max_abs();
    c.add("roter_weyl_parallel", wnorm > 0.0 ? pack.nabla_weyl.max_abs() / wnorm
                                             : std::numeric_limits<double>::infinity());
    c.add("roter_weyl_nonzero", wnorm);
    if (std::abs(fd) > 1e-3) {
      any_fdot = true;
      c.add("roter_not_locally_symmetric", pack.nabla_riemann.max_abs());
    }

    c.add("roter_ricci_codazzi",
          total_symmetry_residual(pack.nabla_ricci) / std::max(1.0, pack.nabla_ricci.max_abs()));
    Tensor grad_exp(n, {Slot::Covariant, Slot::Covariant, Slot::Covariant});
    grad_exp(0, 0, 0) = (2.0 - n) * fd;
    c.add("roter_ricci_gradient", relative(pack.nabla_ricci - grad_exp, grad_exp));

    const Mat raised = pack.g_inv * pack.ricci.to_matrix();
    Mat off_D = raised;
    off_D.row(1).setZero();
    c.add("roter_ricci_image_in_D", max_abs(off_D) / std::max(1.0, pack.ricci.max_abs()));
  }
  if (!any_fdot) c.skip("roter_not_locally_symmetric", "no sample with |f'| > 1e-3");
  return c.records();
}

std::vector<CheckRecord> run_olszak(const SuiteConfig& cfg) {
  Collector c(cfg, "olszak");
  for (const auto& p : sample_points(cfg, group_stream("olszak"), cfg.sample_count)) {
    const CurvaturePack pack = pack_at(cfg.spec, p);
    const MetricJet jet = roter_jet(cfg.spec, p, 3);
    const DistributionBasis db = olszak_distribution(pack.weyl, pack.g, p);
    if (db.degenerate) {
      c.add("olszak_dimension", std::numeric_limits<double>::infinity());
      c.skip("olszak_dimension", "W vanishes at a sampled point");
      continue;
    }
    c.add("olszak_dimension", std::abs(db.dim_D - 1.0));
    if (db.dim_D == 1) c.add("olszak_axis_alignment", axis_misalignment(db.basis_D[0], 1));
    for (const auto& r : check_structure(db, pack, jet)) {
      if (!r.skipped) c.add(r.name, r.residual);
    }
  }
  return c.records();
}

std::vector<CheckRecord> run_phi(const SuiteConfig& cfg) {
  Collector c(cfg, "phi");
  const RoterSpec& spec = cfg.spec;
  const Mat& G = spec.inner.matrix();
  const double ascale = max_abs(spec.A);
  double nf_min = std::numeric_limits<double>::infinity(), nf_max = 0.0;
  bool any = false;
  for (const auto& p : sample_points(cfg, group_stream("phi"), cfg.sample_count)) {
    const CurvaturePack pack = pack_at(spec, p);
    const DistributionBasis db = olszak_distribution(pack.weyl, pack.g, p);
    if (db.degenerate || db.dim_D != 1) {
      c.skip("a_recovery", "dim D != 1 at a sampled point");
      continue;
    }
    PhiValue phi;
    Mat A_rec;
    try {
      std::tie(phi, A_rec) = phi_and_recover_A(pack, db, spec);
    } catch (const std::domain_error& e) {
      c.add("a_recovery", std::numeric_limits<double>::infinity());
      c.skip("a_recovery", e.what());
      continue;
    }
    any = true;
    c.add("a_recovery", max_abs(A_rec - spec.A) / ascale);
    nf_min = std::min(nf_min, phi.norm_factor);
    nf_max = std::max(nf_max, phi.norm_factor);
    const Mat lowered = G * A_rec;
    c.add("recovered_A_traceless_selfadjoint",
          std::max(std::abs(A_rec.trace()), max_abs(lowered - lowered.transpose())) / ascale);
  }
  if (any) c.add("phi_norm_constant", (nf_max - nf_min) / nf_max);
  return c.records();
}

std::vector<CheckRecord> run_charforms(const SuiteConfig& cfg) {
  Collector c(cfg, "charforms");
  const int n = cfg.spec.n;
  Rng rng(stream_seed(cfg.seed, 100 + group_stream("charforms")));
  const auto points = sample_points(cfg, group_stream("charforms"), std::min(cfg.sample_count, 20));
  for (std::size_t k = 0; k < points.size(); ++k) {
    const CurvaturePack pack = pack_at(cfg.spec, points[k]);
    std::vector<Vec> basis;
    for (int i = 0; i < n; ++i) basis.push_back(k == 0 ? Vec(Vec::Unit(n, i)) : rng.uniform_vector(n, -1, 1));
    if (n % 2 == 0) c.add("euler_form_vanishes", std::abs(euler_form_at(pack, basis)));
    c.add("generating_form_vanishes",
          std::abs(generating_form_at(pack, 1, {basis.begin(), basis.begin() + 4})));
  }
  if (n % 2 != 0) c.skip("euler_form_vanishes", "odd dimension");
  return c.records();
}

double point_distance(const ChartPoint& a, const ChartPoint& b) {
  return (a.coords - b.coords).cwiseAbs().maxCoeff() / std::max(1.0, b.coords.cwiseAbs().maxCoeff());
}

std::vector<CheckRecord> run_isometry(const SuiteConfig& cfg) {
  Collector c(cfg, "isometry");
  const RoterSpec& spec = cfg.spec;
  const int k = spec.n - 2;
  const double step = 1e-3;
  const auto period = spec.f.period();
  // u must be sampled at t and, for the second factor of a product, at t + p.
  const double shift = period ? *period : 0.0;
  const std::pair<double, double> span{std::min(0.0, cfg.point_box.t.first - 1.0),
                                       std::max(0.0, cfg.point_box.t.second + shift + 1.0)};
  Rng rng(stream_seed(cfg.seed, 100 + group_stream("isometry")));
  const int count = std::min(cfg.sample_count, 20);
  const auto points = sample_points(cfg, group_stream("isometry"), count);

  std::vector<GroupElement> elems;
  for (int i = 0; i < count; ++i) {
    const double p = (period && i % 2 == 1) ? *period : 0.0;
    const double q = rng.uniform(-1, 1);
    const Vec u0 = rng.uniform_vector(k, -1, 1), ud0 = rng.uniform_vector(k, -1, 1);
    elems.push_back(make_group_element(spec, p, q, solve_E_ode(spec, u0, ud0, span, step)));
  }
  const GroupElement e = identity_element(spec, span, step);
  for (const auto& x : points) c.add("group_identity", point_distance(act(spec, e, x), x));
  for (const auto& gel : elems)
    for (const auto& x : points) c.add("isometry_pullback", pullback_residual(spec, gel, x));

  std::vector<const GroupElement*> untranslated;
  for (const auto& gel : elems)
    if (gel.p == 0.0) untranslated.push_back(&gel);
  for (int i = 0; i < count; ++i) {
    const GroupElement& g1 = elems[static_cast<std::size_t>(i)];
    const GroupElement& g2 = elems[static_cast<std::size_t>((i + 1) % count)];
    // The third factor stays untranslated so that every factor is only
    // evaluated where it was sampled.
    const GroupElement& g3 = *untranslated[static_cast<std::size_t>(i) % untranslated.size()];
    const GroupElement g12 = compose(spec, g1, g2);
    const GroupElement left = compose(spec, g12, g3);
    const GroupElement right = compose(spec, g1, compose(spec, g2, g3));
    const ChartPoint& x = points[static_cast<std::size_t>(i)];
    c.add("group_action_compatible", point_distance(act(spec, g12, x), act(spec, g1, act(spec, g2, x))));
    c.add("group_associativity", point_distance(act(spec, left, x), act(spec, right, x)));
  }
  return c.records();
}

struct GeodesicSample {
  ChartPoint x0;
  Vec v0;
};

std::vector<GeodesicSample> geodesic_samples(const SuiteConfig& cfg, const std::string& group, int count) {
  Rng rng(stream_seed(cfg.seed, 100 + group_stream(group)));
  std::vector<GeodesicSample> out;
  for (const auto& p : sample_points(cfg, group_stream(group), count)) {
    Vec v0 = rng.uniform_vector(cfg.spec.n, -1, 1);
    v0(0) = cfg.geodesic_tdot;
    out.push_back({p, v0});
  }
  return out;
}

std::vector<CheckRecord> run_geodesic(const SuiteConfig& cfg) {
  Collector c(cfg, "geodesic");
  const RoterSpec& spec = cfg.spec;
  const int n = spec.n;
  const auto samples = geodesic_samples(cfg, "geodesic", std::min(cfg.sample_count, 10));
  for (const auto& smp : samples) {
    const Trajectory tr = integrate_geodesic(spec, smp.x0, smp.v0, {0.0, 10.0}, 1e-3);
    c.add("geodesic_conserved_drift", conserved_drift(tr));
    c.add("geodesic_t_affine", t_affinity_deviation(tr));
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(3, samples.size()); ++i) {
    const Vec ds = Vec::Unit(n, 1);
    const Trajectory tr = integrate_geodesic(spec, samples[i].x0, ds, {0.0, 10.0}, 1e-3);
    double dev = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const Vec line = samples[i].x0.coords + tr.tau[k] * ds;
      dev = std::max({dev, (tr.points[k].coords - line).cwiseAbs().maxCoeff(),
                      (tr.velocities[k] - ds).cwiseAbs().maxCoeff()});
    }
    c.add("geodesic_s_lines", dev);
  }
  if (!samples.empty()) {
    // Unit dt/dtau over a short span keeps the drift well above roundoff
    // without letting the fibre coordinates blow up.
    Vec v0 = samples.front().v0;
    v0(0) = 1.0;
    const double coarse = conserved_drift(integrate_geodesic(spec, samples.front().x0, v0, {0.0, 2.0}, 1e-2));
    const double fine = conserved_drift(integrate_geodesic(spec, samples.front().x0, v0, {0.0, 2.0}, 5e-3));
    if (coarse < 1e-11) {
      c.skip("geodesic_richardson_order", "drift at h = 1e-2 is at roundoff level");
    } else {
      c.add("geodesic_richardson_order", std::abs(std::log2(coarse / fine) - 4.0));
    }
  }
  return c.records();
}

std::vector<CheckRecord> run_transport(const SuiteConfig& cfg) {
  Collector c(cfg, "transport");
  const RoterSpec& spec = cfg.spec;
  const int n = spec.n;
  Rng rng(stream_seed(cfg.seed, 200 + group_stream("transport")));
  for (const auto& smp : geodesic_samples(cfg, "transport", std::min(cfg.sample_count, 3))) {
    const Trajectory tr = integrate_geodesic(spec, smp.x0, smp.v0, {0.0, 10.0}, 1e-3);
    const Vec w0 = rng.uniform_vector(n, -1, 1);
    const auto w = parallel_transport(spec, tr, w0);
    const auto ds = parallel_transport(spec, tr, Vec::Unit(n, 1));
    double metric = 0.0, fixed = 0.0;
    const Mat g0 = roter_jet(spec, tr.points.front(), 0).g;
    const double q0 = w0.dot(g0 * w0), p0 = w0.dot(g0.col(1));
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const Mat g = roter_jet(spec, tr.points[k], 0).g;
      metric = std::max({metric, std::abs(w[k].dot(g * w[k]) - q0) / std::max(1.0, std::abs(q0)),
                         std::abs(w[k].dot(g.col(1)) - p0) / std::max(1.0, std::abs(p0))});
      fixed = std::max(fixed, (ds[k] - Vec::Unit(n, 1)).cwiseAbs().maxCoeff());
    }
    c.add("transport_metric_preserved", metric);
    c.add("transport_ds_fixed", fixed);
    const Curve curve = curve_from_trajectory(tr);
    const double step = tr.tau[1] - tr.tau[0];
    const auto back = parallel_transport(spec, curve, tr.tau.back(), tr.tau.front(), step, w.back());
    c.add("transport_reversible", (back.back() - w0).cwiseAbs().maxCoeff() / std::max(1.0, max_abs(w0)));
  }
  return c.records();
}

std::vector<CheckRecord> run_e_ode(const SuiteConfig& cfg) {
  Collector c(cfg, "e_ode");
  const RoterSpec& spec = cfg.spec;
  const int k = spec.n - 2;
  Rng rng(stream_seed(cfg.seed, 100 + group_stream("e_ode")));
  const std::pair<double, double> span{std::min(0.0, cfg.point_box.t.first), std::max(0.0, cfg.point_box.t.second)};
  std::vector<OdeSolution> sols;
  for (int i = 0; i < 2 * k; ++i) {
    const Vec u0 = rng.uniform_vector(k, -1, 1), ud0 = rng.uniform_vector(k, -1, 1);
    sols.push_back(solve_E_ode(spec, u0, ud0, span, 1e-3));
    c.add("e_ode_residual", ode_residual(spec, sols.back()));
  }
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b) c.add("e_ode_wronskian", wronskian_drift(spec, sols[a], sols[b]));
  const std::size_t len = sols.front().u.size();
  for (std::size_t i = 0; i < len; i += std::max<std::size_t>(1, len / 60)) {
    Mat states(2 * k, 2 * k);
    for (int j = 0; j < 2 * k; ++j) {
      states.col(j) << sols[static_cast<std::size_t>(j)].u[i], sols[static_cast<std::size_t>(j)].udot[i];
    }
    c.add("e_ode_dimension", Eigen::JacobiSVD<Mat>(states).singularValues().minCoeff());
  }
  return c.records();
}

Curve analytic_curve(const RoterSpec& spec, Rng& rng, const PointBox& box) {
  const int n = spec.n;
  const double s0 = rng.uniform(box.s.first, box.s.second);
  const double a = rng.uniform(-0.5, 0.5);
  const Vec v0 = rng.uniform_vector(n - 2, box.v.first, box.v.second);
  const Vec b = rng.uniform_vector(n - 2, -0.5, 0.5);
  Curve y;
  y.pos = [=](double t) {
    Vec x(n);
    x << t, s0 + a * t * t, v0 + b * std::sin(t);
    return x;
  };
  y.vel = [=](double t) {
    Vec x(n);
    x << 1.0, 2.0 * a * t, b * std::cos(t);
    return x;
  };
  y.acc = [=](double t) {
    Vec x(n);
    x << 0.0, 2.0 * a, -b * std::sin(t);
    return x;
  };
  return y;
}

std::vector<CheckRecord> run_completeness(const SuiteConfig& cfg) {
  Collector c(cfg, "completeness");
  const RoterSpec& spec = cfg.spec;
  const int n = spec.n;
  Rng rng(stream_seed(cfg.seed, 100 + group_stream("completeness")));
  for (int i = 0; i < cfg.variation_count; ++i) {
    const Curve y = analytic_curve(spec, rng, cfg.point_box);
    const Vec w0 = rng.uniform_vector(n, -1, 1), wd0 = rng.uniform_vector(n, -1, 1);
    const VariationResult res = completeness_variation_check(spec, y, w0, wd0);
    for (const auto& r : res.records) c.add(r.name, r.residual);
  }
  if (cfg.variation_count == 0) {
    for (const auto& info : catalogue())
      if (info.group == "completeness") c.skip(info.name, "variation_count = 0");
  }
  return c.records();
}

std::vector<CheckRecord> run_oracle(const SuiteConfig& cfg) {
  Collector c(cfg, "oracle");
  const RoterMetric provider(cfg.spec);
  for (const auto& p : sample_points(cfg, group_stream("oracle"), std::min(cfg.sample_count, 20))) {
    const MetricJet analytic = provider.jet(p, 3);
    require_finite(analytic);
    const auto errs = jet_relative_errors(fd_jet_oracle(provider, p, 5e-3, 3), analytic);
    c.add("jet_fd_oracle", *std::max_element(errs.begin(), errs.end()));
  }
  return c.records();
}

// ---------------------------------------------------------------------------
// JSON output

void write_json(std::ostringstream& os, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& item : j.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(item.key()).dump() << ": ";
        write_json(os, item.value(), indent + 2);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& x) { return x.is_primitive(); });
      if (j.empty() || flat) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          write_json(os, j[i], indent + 2);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write_json(os, j[i], indent + 2);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isfinite(x)) {
        os << fmt::format("{:.17g}", x);
      } else {
        os << "null";
      }
      return;
    }
    default:
      os << j.dump();
  }
}

Json range_json(const std::pair<double, double>& r) { return Json::array({r.first, r.second}); }

}  // namespace

// ---------------------------------------------------------------------------

RoterSpec parse_spec(const Json& j) {
  if (!j.is_object()) throw ConfigError("spec: expected an object");
  reject_unknown_keys(j, {"n", "inner", "A", "f"}, "spec");
  const Json& jn = require(j, "n", "spec");
  if (!jn.is_number_integer()) throw ConfigError("spec.n: expected an integer");
  const int n = jn.get<int>();
  if (n < 4) throw SpecError(fmt::format("RoterSpec: dimension n = {} must be at least 4", n));
  const int k = n - 2;
  const Json& ji = require(j, "inner", "spec");
  Mat inner;
  if (ji.is_array() && !ji.empty() && ji[0].is_number()) {
    if (static_cast<int>(ji.size()) != k) throw ConfigError(fmt::format("spec.inner: expected {} entries", k));
    inner = Mat::Zero(k, k);
    for (int i = 0; i < k; ++i) inner(i, i) = get_number(ji[static_cast<std::size_t>(i)], "spec.inner");
  } else {
    inner = parse_matrix(ji, k, "spec.inner");
  }
  const Mat A = parse_matrix(require(j, "A", "spec"), k, "spec.A");
  ScalarProfile f = parse_profile(require(j, "f", "spec"));
  std::optional<FibreMetric> fibre;
  try {
    fibre.emplace(inner);
  } catch (const std::invalid_argument& e) {
    throw SpecError(fmt::format("RoterSpec: inner product: {}", e.what()));
  }
  return RoterSpec(*fibre, A, f);
}

SuiteConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown_keys(j,
                      {"spec", "sample_count", "point_box", "seed", "tolerances", "checks", "variation_count",
                       "geodesic_tdot"},
                      "config");
  SuiteConfig cfg(parse_spec(require(j, "spec", "config")));
  cfg.spec_json = j.at("spec");
  if (j.contains("sample_count")) {
    const Json& sc = j.at("sample_count");
    if (!sc.is_number_integer() || sc.get<long>() < 1 || sc.get<long>() > 100000)
      throw ConfigError("sample_count: expected an integer in [1, 100000]");
    cfg.sample_count = sc.get<int>();
  }
  if (j.contains("point_box")) {
    const Json& b = j.at("point_box");
    if (!b.is_object()) throw ConfigError("point_box: expected an object");
    reject_unknown_keys(b, {"t", "s", "v"}, "point_box");
    if (b.contains("t")) cfg.point_box.t = parse_range(b.at("t"), "point_box.t");
    if (b.contains("s")) cfg.point_box.s = parse_range(b.at("s"), "point_box.s");
    if (b.contains("v")) cfg.point_box.v = parse_range(b.at("v"), "point_box.v");
  }
  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("tolerances: expected an object");
    for (const auto& item : t.items()) {
      check_info(item.key());
      const double v = get_number(item.value(), "tolerances." + item.key());
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(fmt::format("tolerances.{}: must be positive and finite", item.key()));
      cfg.tolerances[item.key()] = v;
    }
  }
  if (j.contains("checks")) {
    const Json& c = j.at("checks");
    if (!c.is_array()) throw ConfigError("checks: expected an array of check names");
    std::set<std::string> seen;
    for (const auto& x : c) {
      const auto name = get_as<std::string>(x, "checks");
      check_info(name);
      if (seen.insert(name).second) cfg.checks.push_back(name);
    }
    // Declaration order, independent of the order in the file.
    std::vector<std::string> ordered;
    for (const auto& info : catalogue())
      if (seen.count(info.name)) ordered.push_back(info.name);
    cfg.checks = std::move(ordered);
  }
  if (j.contains("variation_count")) {
    const Json& v = j.at("variation_count");
    if (!v.is_number_integer() || v.get<long>() < 0 || v.get<long>() > 100)
      throw ConfigError("variation_count: expected an integer in [0, 100]");
    cfg.variation_count = v.get<int>();
  }
  if (j.contains("geodesic_tdot")) {
    cfg.geodesic_tdot = get_number(j.at("geodesic_tdot"), "geodesic_tdot");
    if (!(std::abs(cfg.geodesic_tdot) <= 10.0)) throw ConfigError("geodesic_tdot: expected |value| <= 10");
  }
  return cfg;
}

SuiteConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return parse_config(j);
}

void apply_seed_override(SuiteConfig& cfg) {
  const char* env = std::getenv("ECSW_SEED");
  if (env == nullptr || *env == '\0') return;
  const std::string text(env);
  if (text.find_first_not_of("0123456789") != std::string::npos || text.size() > 19)
    throw ConfigError(fmt::format("ECSW_SEED: expected an unsigned integer, got \"{}\"", text));
  cfg.seed = std::stoull(text);
}

const std::vector<CheckInfo>& check_catalogue() { return catalogue(); }

const CheckInfo& check_info(const std::string& name) {
  for (const auto& info : catalogue())
    if (info.name == name) return info;
  throw ConfigError(fmt::format("unknown check name \"{}\"", name));
}

std::vector<std::string> check_groups() {
  std::vector<std::string> groups;
  for (const auto& info : catalogue())
    if (std::find(groups.begin(), groups.end(), info.group) == groups.end()) groups.push_back(info.group);
  return groups;
}

double effective_tolerance(const SuiteConfig& cfg, const std::string& name) {
  auto it = cfg.tolerances.find(name);
  return it != cfg.tolerances.end() ? it->second : check_info(name).tolerance;
}

std::vector<ChartPoint> sample_points(const SuiteConfig& cfg, std::uint64_t stream, int count) {
  Rng rng(stream_seed(cfg.seed, stream));
  const auto& b = cfg.point_box;
  std::vector<ChartPoint> out;
  for (int i = 0; i < count; ++i) {
    Vec x(cfg.spec.n);
    x(0) = rng.uniform(b.t.first, b.t.second);
    x(1) = rng.uniform(b.s.first, b.s.second);
    for (int a = 2; a < cfg.spec.n; ++a) x(a) = rng.uniform(b.v.first, b.v.second);
    out.emplace_back(x);
  }
  return out;
}

void require_finite(const MetricJet& jet) {
  if (!jet.g.allFinite()) throw NumericalAbort(fmt::format("non-finite metric at t = {:.17g}", jet.point.t()));
  for (const Tensor* t : {&jet.dg, &jet.d2g, &jet.d3g}) require_finite(*t, jet.point, "metric derivative");
}

std::vector<CheckRecord> run_group(const SuiteConfig& cfg, const std::string& group) {
  if (group == "curvature") return run_curvature(cfg);
  if (group == "olszak") return run_olszak(cfg);
  if (group == "phi") return run_phi(cfg);
  if (group == "charforms") return run_charforms(cfg);
  if (group == "isometry") return run_isometry(cfg);
  if (group == "geodesic") return run_geodesic(cfg);
  if (group == "transport") return run_transport(cfg);
  if (group == "e_ode") return run_e_ode(cfg);
  if (group == "completeness") return run_completeness(cfg);
  if (group == "oracle") return run_oracle(cfg);
  throw ConfigError(fmt::format("unknown check group \"{}\"", group));
}

std::vector<TimedRecord> run_suite(const SuiteConfig& cfg, int jobs, bool timings) {
  std::vector<std::string> groups;
  for (const auto& g : check_groups()) {
    const bool selected = cfg.checks.empty() || std::any_of(cfg.checks.begin(), cfg.checks.end(), [&](const auto& n) {
                            return check_info(n).group == g;
                          });
    if (selected) groups.push_back(g);
  }
  std::vector<std::vector<CheckRecord>> results(groups.size());
  std::vector<double> seconds(groups.size(), 0.0);
  std::vector<std::exception_ptr> errors(groups.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < groups.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      try {
        results[i] = run_group(cfg, groups[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, groups.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<TimedRecord> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (auto& r : results[i]) {
      out.push_back({std::move(r), timings ? std::optional<double>(seconds[i]) : std::nullopt});
    }
  }
  return out;
}

Json config_echo(const SuiteConfig& cfg) {
  Json j;
  j["spec"] = cfg.spec_json;
  j["sample_count"] = cfg.sample_count;
  j["point_box"] = {{"t", range_json(cfg.point_box.t)},
                    {"s", range_json(cfg.point_box.s)},
                    {"v", range_json(cfg.point_box.v)}};
  j["seed"] = cfg.seed;
  Json tol = Json::object();
  for (const auto& [name, value] : cfg.tolerances) tol[name] = value;
  j["tolerances"] = tol;
  Json checks = Json::array();
  for (const auto& name : cfg.checks) checks.push_back(name);
  j["checks"] = checks;
  j["variation_count"] = cfg.variation_count;
  j["geodesic_tdot"] = cfg.geodesic_tdot;
  return j;
}

Json make_report(const SuiteConfig& cfg, const std::vector<TimedRecord>& records) {
  Json j;
  j["tool"] = "ecsw";
  j["version"] = kVersion;
  j["config"] = config_echo(cfg);
  Json checks = Json::array();
  int passed = 0, failed = 0, skipped = 0;
  for (const auto& tr : records) {
    const CheckRecord& r = tr.record;
    Json c;
    c["name"] = r.name;
    c["group"] = check_info(r.name).group;
    c["property"] = r.property;
    c["residual"] = r.skipped ? Json(nullptr) : Json(r.residual);
    c["tolerance"] = r.tolerance;
    c["comparison"] = r.lower_bound ? "greater" : "less";
    c["pass"] = r.pass;
    c["skipped"] = r.skipped;
    c["note"] = r.note;
    c["wall_seconds"] = tr.wall_seconds ? Json(*tr.wall_seconds) : Json(nullptr);
    checks.push_back(std::move(c));
    if (r.skipped) {
      ++skipped;
    } else if (r.pass) {
      ++passed;
    } else {
      ++failed;
    }
  }
  j["checks"] = std::move(checks);
  j["summary"] = {{"total", static_cast<int>(records.size())},
                  {"passed", passed},
                  {"failed", failed},
                  {"skipped", skipped},
                  {"pass", failed == 0}};
  return j;
}

std::string dump_json(const Json& j) {
  std::ostringstream os;
  write_json(os, j, 0);
  os << "\n";
  return os.str();
}

}  // namespace ecsw
