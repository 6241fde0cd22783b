// ecsw command line: verify, curvature, olszak, charforms, geodesic, oracle.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or spec
// error, 3 numerical abort.

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ecsw/charforms.hpp"
#include "ecsw/curvature.hpp"
#include "ecsw/dynamics.hpp"
#include "ecsw/errors.hpp"
#include "ecsw/olszak.hpp"
#include "ecsw/rng.hpp"
#include "ecsw/suite.hpp"

namespace {

using namespace ecsw;
using Vec = Eigen::VectorXd;

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

std::string num(double x) { return fmt::format("{:.17g}", x); }

// Accepts plain numbers and multiples of pi such as "pi/2", "-2pi", "0.5*pi".
double parse_scalar(const std::string& token) {
  static const std::regex pi_form(R"(^\s*([+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$)");
  std::smatch m;
  if (std::regex_match(token, m, pi_form)) {
    double factor = 1.0;
    const std::string lead = m[1].str();
    if (lead == "-") {
      factor = -1.0;
    } else if (!lead.empty() && lead != "+") {
      factor = std::stod(lead);
    }
    const double denom = m[2].matched ? std::stod(m[2].str()) : 1.0;
    return factor * std::numbers::pi / denom;
  }
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("cannot parse number \"{}\"", token));
  }
  if (token.find_first_not_of(" \t", used) != std::string::npos)
    throw ConfigError(fmt::format("cannot parse number \"{}\"", token));
  return value;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(parse_scalar(token));
  return out;
}

Vec parse_vector(const std::string& text, int n, const char* what) {
  const auto values = parse_list(text);
  if (static_cast<int>(values.size()) != n)
    throw ConfigError(fmt::format("{}: expected {} comma-separated values, got {}", what, n, values.size()));
  return Eigen::Map<const Vec>(values.data(), n);
}

std::string join(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v(i));
  return out;
}

std::string coord_name(int i) {
  if (i == 0) return "t";
  if (i == 1) return "s";
  return fmt::format("v{}", i - 1);
}

SuiteConfig config_from(const std::string& path) {
  SuiteConfig cfg = load_config(path);
  apply_seed_override(cfg);
  return cfg;
}

void print_matrix(std::ostream& os, const std::string& label, const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) os << fmt::format("{}({},{}) = {}\n", label, coord_name(i), coord_name(j), num(m(i, j)));
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string config;
  std::string report;
  int jobs = 1;
  bool timings = false;
};

int cmd_verify(const VerifyArgs& a) {
  const SuiteConfig cfg = config_from(a.config);
  const auto records = run_suite(cfg, a.jobs, a.timings);
  const Json report = make_report(cfg, records);
  const std::string text = dump_json(report);
  std::ostream& log = a.report.empty() ? std::cerr : std::cout;
  if (a.report.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(a.report, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write report {}", a.report));
    out << text;
  }
  for (const auto& tr : records) {
    const auto& r = tr.record;
    const char* status = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    log << fmt::format("{} {:<36} {:>12} {} {:.3g}\n", status, r.name, r.skipped ? "-" : fmt::format("{:.4g}", r.residual),
                       r.lower_bound ? ">" : "<", r.tolerance);
  }
  const auto& summary = report["summary"];
  log << fmt::format("{} checks: {} passed, {} failed, {} skipped\n", summary["total"].get<int>(),
                     summary["passed"].get<int>(), summary["failed"].get<int>(), summary["skipped"].get<int>());
  return summary["pass"].get<bool>() ? 0 : kExitFail;
}

int cmd_curvature(const std::string& config, const std::string& point) {
  const SuiteConfig cfg = config_from(config);
  const ChartPoint p(parse_vector(point, cfg.spec.n, "--point"));
  const MetricJet jet = roter_jet(cfg.spec, p, 3);
  require_finite(jet);
  const CurvaturePack pack = compute_curvature(jet);
  std::cout << "point = (" << join(p.coords) << ")\n";
  print_matrix(std::cout, "g", pack.g);
  const int n = pack.dim();
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (pack.christoffel(k, i, j) != 0.0)
          std::cout << fmt::format("Gamma^{}_({},{}) = {}\n", coord_name(k), coord_name(i), coord_name(j),
                                   num(pack.christoffel(k, i, j)));
  print_matrix(std::cout, "ricci", pack.ricci.to_matrix());
  std::cout << "scalar = " << num(pack.scalar) << "\n";
  std::cout << "max|R| = " << num(pack.riemann04.max_abs()) << "\n";
  std::cout << "max|W| = " << num(pack.weyl.max_abs()) << "\n";
  std::cout << "max|nabla R| = " << num(pack.nabla_riemann.max_abs()) << "\n";
  std::cout << "max|nabla W| = " << num(pack.nabla_weyl.max_abs()) << "\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (i < j && k < l && (i < k || (i == k && j <= l)) && pack.weyl(i, j, k, l) != 0.0)
            std::cout << fmt::format("W({},{},{},{}) = {}\n", coord_name(i), coord_name(j), coord_name(k),
                                     coord_name(l), num(pack.weyl(i, j, k, l)));
  return 0;
}

int cmd_olszak(const std::string& config, const std::string& point) {
  const SuiteConfig cfg = config_from(config);
  const ChartPoint p(parse_vector(point, cfg.spec.n, "--point"));
  const MetricJet jet = roter_jet(cfg.spec, p, 3);
  require_finite(jet);
  const CurvaturePack pack = compute_curvature(jet);
  const DistributionBasis db = olszak_distribution(pack.weyl, pack.g, p);
  std::cout << "degenerate = " << (db.degenerate ? "true" : "false") << "\n";
  std::cout << "dim D = " << db.dim_D << "\n";
  for (const auto& b : db.basis_D) std::cout << "D basis: " << join(b) << "\n";
  for (const auto& b : db.basis_Dperp) std::cout << "D^perp basis: " << join(b) << "\n";
  bool ok = true;
  for (const auto& r : check_structure(db, pack, jet)) {
    ok = ok && r.pass;
    std::cout << fmt::format("{} {:<28} {}\n", r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL"), r.name,
                             r.skipped ? r.note : num(r.residual));
  }
  if (!db.degenerate && db.dim_D == 1) {
    const auto [phi, A_rec] = phi_and_recover_A(pack, db, cfg.spec);
    for (int i = 0; i < phi.matrix.rows(); ++i)
      for (int j = 0; j < phi.matrix.cols(); ++j)
        std::cout << fmt::format("Phi(v{},v{}) = {}\n", i + 1, j + 1, num(phi.matrix(i, j)));
    std::cout << "norm factor |u| = " << num(phi.norm_factor) << "\n";
    for (int i = 0; i < A_rec.rows(); ++i)
      for (int j = 0; j < A_rec.cols(); ++j)
        std::cout << fmt::format("recovered A({},{}) = {}\n", i + 1, j + 1, num(A_rec(i, j)));
  }
  return ok ? 0 : kExitFail;
}

int cmd_charforms(const std::string& config, const std::string& point, int bases) {
  const SuiteConfig cfg = config_from(config);
  const int n = cfg.spec.n;
  const ChartPoint p(parse_vector(point, n, "--point"));
  const MetricJet jet = roter_jet(cfg.spec, p, 3);
  require_finite(jet);
  const CurvaturePack pack = compute_curvature(jet);
  Rng rng(cfg.seed);
  std::cout << "basis euler generating_1\n";
  for (int b = 0; b <= bases; ++b) {
    std::vector<Vec> vs;
    for (int i = 0; i < n; ++i) vs.push_back(b == 0 ? Vec(Vec::Unit(n, i)) : rng.uniform_vector(n, -1, 1));
    const std::string euler = n % 2 == 0 ? num(euler_form_at(pack, vs)) : "-";
    const double gen = generating_form_at(pack, 1, {vs.begin(), vs.begin() + 4});
    std::cout << fmt::format("{} {} {}\n", b == 0 ? "coordinate" : fmt::format("random{}", b), euler, num(gen));
  }
  return 0;
}

struct GeodesicArgs {
  std::string config, x0, v0, span = "0,10", out;
  double step = 1e-3;
};

int cmd_geodesic(const GeodesicArgs& a) {
  const SuiteConfig cfg = config_from(a.config);
  const int n = cfg.spec.n;
  const Vec x0 = a.x0.empty() ? Vec(Vec::Zero(n)) : parse_vector(a.x0, n, "--x0");
  const Vec v0 = parse_vector(a.v0, n, "--v0");
  const Vec span = parse_vector(a.span, 2, "--span");
  const Trajectory tr = integrate_geodesic(cfg.spec, ChartPoint(x0), v0, {span(0), span(1)}, a.step);
  if (a.out.empty()) {
    write_trajectory_csv(std::cout, tr);
  } else {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write {}", a.out));
    write_trajectory_csv(out, tr);
  }
  std::cerr << "conserved drift = " << num(conserved_drift(tr)) << "\n";
  std::cerr << "t affinity deviation = " << num(t_affinity_deviation(tr)) << "\n";
  return 0;
}

int cmd_oracle(const std::string& config, double step) {
  const SuiteConfig cfg = config_from(config);
  const int n = cfg.spec.n;
  const RoterMetric roter(cfg.spec);
  const ConstCurvatureMetric sphere(1.0, n);
  const RandomPerturbationMetric perturbed(cfg.seed, 0.1, n);
  const MetricProvider* providers[] = {&roter, &sphere, &perturbed};
  const auto points = sample_points(cfg, 1000, std::min(cfg.sample_count, 20));
  std::cout << "provider point order0 order1 order2 order3\n";
  double worst = 0.0;
  for (const MetricProvider* prov : providers) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      // The fixtures live near the origin; scale the sample into the unit box.
      const ChartPoint p = prov == &roter ? points[i] : ChartPoint(Vec(0.25 * points[i].coords));
      const MetricJet analytic = prov->jet(p, 3);
      require_finite(analytic);
      const auto errs = jet_relative_errors(fd_jet_oracle(*prov, p, step, 3), analytic);
      std::cout << prov->name() << " " << i;
      for (double e : errs) std::cout << " " << num(e);
      std::cout << "\n";
      for (double e : errs) worst = std::max(worst, e);
    }
  }
  std::cout << "max relative error = " << num(worst) << "\n";
  return worst < 1e-6 ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ecsw: curvature, Olszak distribution and dynamics checks for Roter metrics"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run the configured checks and write a JSON report");
  verify->add_option("--config", va.config, "suite config (JSON)")->required();
  verify->add_option("--report", va.report, "report path (default: stdout)");
  verify->add_option("--jobs", va.jobs, "worker threads")->check(CLI::Range(1, 256));
  verify->add_flag("--timings", va.timings, "record wall time per check (reports are then not byte-stable)");

  std::string config, point;
  auto* curvature = app.add_subcommand("curvature", "print metric, Christoffel symbols and curvature at a point");
  curvature->add_option("--config", config)->required();
  curvature->add_option("--point", point, "t,s,v1,... (pi multiples allowed)")->required();

  auto* olszak = app.add_subcommand("olszak", "Olszak distribution, structure checks and A recovery at a point");
  olszak->add_option("--config", config)->required();
  olszak->add_option("--point", point)->required();

  int bases = 5;
  auto* charforms = app.add_subcommand("charforms", "Euler and first generating form at a point");
  charforms->add_option("--config", config)->required();
  charforms->add_option("--point", point)->required();
  charforms->add_option("--bases", bases, "number of random bases")->check(CLI::Range(0, 1000));

  GeodesicArgs ga;
  auto* geodesic = app.add_subcommand("geodesic", "integrate a geodesic and export it as CSV");
  geodesic->add_option("--config", ga.config)->required();
  geodesic->add_option("--x0", ga.x0, "initial point (default: origin)");
  geodesic->add_option("--v0", ga.v0, "initial velocity")->required();
  geodesic->add_option("--span", ga.span, "parameter span a,b");
  geodesic->add_option("--step", ga.step, "RK4 step, at most 1e-2");
  geodesic->add_option("--out", ga.out, "CSV path (default: stdout)");

  double fd_step = 5e-3;
  auto* oracle = app.add_subcommand("oracle", "analytic jets against finite differences");
  oracle->add_option("--config", config)->required();
  oracle->add_option("--step", fd_step, "finite-difference spacing")->check(CLI::Range(1e-5, 1e-2));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*verify) return cmd_verify(va);
    if (*curvature) return cmd_curvature(config, point);
    if (*olszak) return cmd_olszak(config, point);
    if (*charforms) return cmd_charforms(config, point, bases);
    if (*geodesic) return cmd_geodesic(ga);
    if (*oracle) return cmd_oracle(config, fd_step);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitAbort;
  } catch (const SpecError& e) {
    std::cerr << "invalid spec: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitConfig;
}
