// Command line front end. Exit status: 0 on success, 1 for configuration or
// usage errors, 2 for numerical failures.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "checks.hpp"
#include "doilab/errors.hpp"
#include "doilab/harness.hpp"
#include "doilab/parallel.hpp"

namespace fs = std::filesystem;
using namespace doilab;

namespace {

struct Common {
  std::string config;
  std::optional<double> alpha;
  std::string out;
  std::optional<int> threads;
  std::optional<unsigned long> seed;
};

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.alpha) cfg.alpha = *c.alpha;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg, false);
  set_num_threads(cfg.threads);
  if (!cfg.output_dir.empty()) fs::create_directories(cfg.output_dir);
  return cfg;
}

KineticSolver make_solver(const ExperimentConfig& cfg) {
  SolverOptions opt;
  opt.lmax = cfg.lmax;
  opt.quadrature_factor = cfg.quadrature_factor;
  opt.cfl = cfg.cfl;
  return KineticSolver(TorusGrid(cfg.dim, cfg.length, cfg.n), KernelSpec::gaussian(cfg.kernel_a, cfg.dim),
                       cfg.alpha, opt);
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

double q_distance(const QTensorField& a, const QTensorField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.q.size(); ++i) s += (a.q[i] - b.q[i]).squaredNorm();
  return std::sqrt(s * a.grid.cell_volume());
}

// Advances f to time target in steps no larger than the stable step.
long advance(const KineticSolver& solver, DensityField& f, double target, double* dissipated) {
  long steps = 0;
  while (target - f.t > 1e-12 * std::max(1.0, target)) {
    steps += solver.step(f, std::min(solver.stable_dt(f), target - f.t), dissipated);
  }
  f.t = target;
  return steps;
}

int cmd_coefficients(const Common& c) {
  const auto cfg = resolve(c);
  validate(cfg, true);
  const auto coeff = lambda_coefficient(equilibrium_params(cfg.alpha), KernelSpec::gaussian(cfg.kernel_a, cfg.dim));
  const LimitCoefficients rows[] = {coeff};
  if (!cfg.output_dir.empty()) write_coefficients_csv(cfg.output_dir / "coefficients.csv", rows);
  std::cout << "alpha,eta,S2,Z,E0,gamma,mu,Lambda\n";
  for (double v : {coeff.alpha, coeff.eta, coeff.S2, coeff.Z, coeff.E0, coeff.gamma, coeff.mu})
    std::cout << format_double(v) << ',';
  std::cout << format_double(coeff.Lambda) << '\n';
  return 0;
}

int cmd_bifurcation(const Common& c, double lo, double hi, int count) {
  const auto cfg = resolve(c);
  const auto rows = bifurcation_table(lo, hi, count);
  if (!cfg.output_dir.empty()) {
    write_bifurcation_csv(cfg.output_dir / "bifurcation.csv", rows);
    std::cout << rows.size() << " roots written to " << (cfg.output_dir / "bifurcation.csv").string() << '\n';
  } else {
    std::cout << "alpha,eta,s2,branch\n";
    for (const auto& r : rows)
      std::cout << format_double(r.alpha) << ',' << format_double(r.eta) << ',' << format_double(r.s2) << ','
                << r.branch << '\n';
  }
  return 0;
}

// Relaxes a seeded random homogeneous density and compares its order
// parameter with the band-limited equilibrium.
int cmd_equilibrate(const Common& c, double t_end) {
  auto cfg = resolve(c);
  cfg.dim = 1;
  cfg.n = 2;
  const auto solver = make_solver(cfg);
  const auto params = equilibrium_params(cfg.alpha);

  DensityField f(solver.torus(), cfg.lmax);
  f.eps = 1.0;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(num_coeffs(cfg.lmax), 0.0);
  for (std::size_t i = 1; i < a.size(); ++i) a[i] = u(rng);
  auto vals = solver.sphere().synthesize(a, cfg.lmax);
  double amp = 0.0;
  for (double v : vals) amp = std::max(amp, std::abs(v));
  const double scale = 0.5 / (4 * std::numbers::pi) / amp;
  for (auto& x : a) x *= scale;
  a[0] = 1.0 / std::sqrt(4 * std::numbers::pi);
  for (int s = 0; s < solver.torus().size(); ++s) std::copy(a.begin(), a.end(), f.site(s).begin());

  std::unique_ptr<std::ofstream> csv;
  if (!cfg.output_dir.empty()) {
    csv = std::make_unique<std::ofstream>(open_csv(cfg.output_dir / "equilibrate.csv"));
    *csv << "t,bulk_excess,s2\n";
  }
  auto order = [&] {
    Eigen::SelfAdjointEigenSolver<Mat3> es(solver.q_field(f).q[0]);
    return 1.5 * es.eigenvalues()(2);
  };
  const int samples = 100;
  for (int k = 0; k <= samples; ++k) {
    if (k > 0) advance(solver, f, t_end * k / samples, nullptr);
    if (csv)
      *csv << format_double(f.t) << ',' << format_double(solver.energy_report(f).bulk_excess / solver.torus().length())
           << ',' << format_double(order()) << '\n';
  }
  std::cout << "alpha " << format_double(cfg.alpha) << "\n"
            << "eta " << format_double(params.eta) << "\n"
            << "S2 continuum " << format_double(params.S2) << "\n"
            << "S2 band-limited equilibrium " << format_double(solver.equilibrium_order()) << "\n"
            << "S2 after relaxation to t = " << format_double(t_end) << ": " << format_double(order()) << "\n";
  return 0;
}

int cmd_kinetic(const Common& c, std::optional<double> eps_opt) {
  const auto cfg = resolve(c);
  const auto solver = make_solver(cfg);
  const double eps = eps_opt.value_or(cfg.epsilons.front());
  auto f = well_prepared_init(initial_director(cfg), solver, eps);
  std::unique_ptr<EnergyCsv> csv;
  if (!cfg.output_dir.empty()) csv = std::make_unique<EnergyCsv>(cfg.output_dir / ("energy_" + eps_label(eps) + ".csv"));
  double cumulative = 0.0;
  long steps = 0;
  EnergyReport r;
  for (int k = 0; k <= cfg.samples; ++k) {
    if (k > 0) steps += advance(solver, f, cfg.t_final * k / cfg.samples, &cumulative);
    r = solver.energy_report(f);
    r.cumulative_dissipation = cumulative;
    if (csv) csv->append(r);
    if (!cfg.output_dir.empty() && cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)
      write_snapshot(cfg.output_dir / ("snap_" + eps_label(eps) + "_" + std::to_string(k) + ".doqs"), f);
  }
  std::cout << "eps " << format_double(eps) << ", t " << format_double(f.t) << ", steps " << steps << "\n"
            << "modulated energy " << format_double(r.modulated_total) << "\n"
            << "cumulative dissipation " << format_double(cumulative) << "\n";
  return 0;
}

// Closed moment flow next to the kinetic second moments and the limit flow.
int cmd_closure(const Common& c, std::optional<double> eps_opt) {
  const auto cfg = resolve(c);
  validate(cfg, true);
  const auto solver = make_solver(cfg);
  const double eps = eps_opt.value_or(cfg.epsilons.front());
  const auto n0 = initial_director(cfg);
  auto f = well_prepared_init(n0, solver, eps);
  auto Q = solver.q_field(f);
  const auto coeff = lambda_coefficient(equilibrium_params(cfg.alpha), KernelSpec::gaussian(cfg.kernel_a, cfg.dim));
  const auto limit = limit_trajectory(n0, coeff.Lambda, cfg.t_final, cfg.samples);
  std::unique_ptr<std::ofstream> csv;
  if (!cfg.output_dir.empty()) {
    csv = std::make_unique<std::ofstream>(open_csv(cfg.output_dir / ("closure_" + eps_label(eps) + ".csv")));
    *csv << "t,closure_vs_kinetic,closure_vs_limit,kinetic_vs_limit\n";
  }
  double worst = 0.0;
  for (int k = 0; k <= cfg.samples; ++k) {
    if (k > 0) {
      const double target = cfg.t_final * k / cfg.samples;
      while (target - f.t > 1e-12 * cfg.t_final) {
        const double dt = std::min(solver.stable_dt(f), target - f.t);
        solver.step(f, dt);
        Q = solver.q_closure_step(Q, dt, eps);
      }
      f.t = target;
    }
    const auto Qf = solver.q_field(f);
    const double dk = q_distance(Q, Qf);
    worst = std::max(worst, dk);
    if (csv)
      *csv << format_double(f.t) << ',' << format_double(dk) << ','
           << format_double(q_error(Q, limit[k], solver.equilibrium_order())) << ','
           << format_double(q_error(Qf, limit[k], solver.equilibrium_order())) << '\n';
  }
  std::cout << "eps " << format_double(eps) << ": largest closure vs kinetic distance " << format_double(worst) << "\n";
  return 0;
}

int cmd_hmhf(const Common& c, std::optional<double> lambda_opt) {
  const auto cfg = resolve(c);
  double Lambda = 0.0;
  if (lambda_opt) {
    Lambda = *lambda_opt;
    if (!(Lambda > 0.0)) throw ConfigError("Lambda must be positive");
  } else {
    validate(cfg, true);
    Lambda = lambda_coefficient(equilibrium_params(cfg.alpha), KernelSpec::gaussian(cfg.kernel_a, cfg.dim)).Lambda;
  }
  const auto traj = limit_trajectory(initial_director(cfg), Lambda, cfg.t_final, cfg.samples);
  std::unique_ptr<std::ofstream> csv;
  if (!cfg.output_dir.empty()) {
    csv = std::make_unique<std::ofstream>(open_csv(cfg.output_dir / "hmhf.csv"));
    *csv << "t,dirichlet_energy,unit_defect\n";
  }
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (csv)
      *csv << format_double(traj[k].t) << ',' << format_double(dirichlet_energy(traj[k])) << ','
           << format_double(traj[k].unit_defect()) << '\n';
    if (!cfg.output_dir.empty() && cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)
      write_director_snapshot(cfg.output_dir / ("snap_hmhf_" + std::to_string(k) + ".doqs"), traj[k]);
  }
  std::cout << "Lambda " << format_double(Lambda) << ", Dirichlet energy " << format_double(dirichlet_energy(traj.front()))
            << " -> " << format_double(dirichlet_energy(traj.back())) << "\n";
  return 0;
}

int cmd_sweep(const Common& c) {
  const auto cfg = resolve(c);
  const auto report = epsilon_sweep(cfg);
  std::printf("Lambda %.10g, Lambda/2 %.10g, S2 band-limited %.10g\n", report.coefficients.Lambda,
              report.solvability_lambda, report.discrete_order);
  std::printf("%-8s %-6s %-12s %-12s %-12s %-12s %s\n", "eps", "status", "sup_error", "final_error", "sup(L/2)",
              "E_mod(0)/eps", "steps");
  bool ok = true;
  for (const auto& r : report.rows) {
    std::printf("%-8g %-6s %-12.5e %-12.5e %-12.5e %-12.5e %ld\n", r.eps, r.status == "ok" ? "ok" : "failed",
                r.sup_error, r.final_error, r.sup_error_solvability, r.initial_modulated / r.eps, r.steps);
    if (r.status != "ok") {
      std::printf("  %s\n", r.status.c_str());
      ok = false;
    }
  }
  return ok ? 0 : 2;
}

int cmd_selftest(std::vector<int> only) {
  if (only.empty())
    for (int id = 1; id <= checks::kCriteria; ++id) only.push_back(id);
  int failed = 0;
  for (int id : only) {
    if (id < 1 || id > checks::kCriteria) throw ConfigError("criterion must be 1.." + std::to_string(checks::kCriteria));
    const auto r = checks::run_criterion(id);
    std::cout << checks::format_result(r) << std::endl;
    if (!r.pass) ++failed;
  }
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doi-Onsager kinetic solver and its small-Deborah limit"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "Experiment config file (key = value)");
  app.add_option("--alpha", common.alpha, "Interaction intensity, overrides the config");
  app.add_option("--out", common.out, "Output directory, overrides the config");
  app.add_option("--threads", common.threads, "Worker threads");
  app.add_option("--seed", common.seed, "Seed for random perturbations");

  int rc = 0;
  auto guard = [&rc](auto fn) {
    return [&rc, fn] { rc = fn(); };
  };

  double lo = 4.0, hi = 16.0;
  int count = 49;
  auto* bif = app.add_subcommand("bifurcation", "Roots of eta = alpha s2(eta) over an alpha range");
  bif->add_option("--alpha-min", lo, "Smallest alpha")->capture_default_str();
  bif->add_option("--alpha-max", hi, "Largest alpha")->capture_default_str();
  bif->add_option("--count", count, "Number of alpha values")->capture_default_str();
  bif->callback(guard([&] { return cmd_bifurcation(common, lo, hi, count); }));

  double t_end = 20.0;
  auto* eq = app.add_subcommand("equilibrate", "Relax a random homogeneous density to the nematic equilibrium");
  eq->add_option("--time", t_end, "Relaxation time")->capture_default_str();
  eq->callback(guard([&] { return cmd_equilibrate(common, t_end); }));

  std::optional<double> eps;
  auto* kin = app.add_subcommand("kinetic", "Kinetic run from well-prepared data");
  kin->add_option("--eps", eps, "Deborah number (default: first of the config list)");
  kin->callback(guard([&] { return cmd_kinetic(common, eps); }));

  auto* clo = app.add_subcommand("closure", "Closed moment flow against the kinetic moments");
  clo->add_option("--eps", eps, "Deborah number (default: first of the config list)");
  clo->callback(guard([&] { return cmd_closure(common, eps); }));

  std::optional<double> lambda;
  auto* hm = app.add_subcommand("hmhf", "Harmonic map heat flow from the initial director");
  hm->add_option("--lambda", lambda, "Flow coefficient (default: computed from alpha and the kernel)");
  hm->callback(guard([&] { return cmd_hmhf(common, lambda); }));

  auto* sw = app.add_subcommand("sweep", "Convergence of the kinetic solution to the limit flow over eps");
  sw->callback(guard([&] { return cmd_sweep(common); }));

  auto* co = app.add_subcommand("coefficients", "Limit coefficients for one alpha");
  co->callback(guard([&] { return cmd_coefficients(common); }));

  std::vector<int> only;
  auto* st = app.add_subcommand("selftest", "Run the acceptance checks");
  st->add_option("--only", only, "Criterion numbers to run");
  st->callback(guard([&] { return cmd_selftest(only); }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
