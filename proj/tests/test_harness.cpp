#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "doilab/errors.hpp"
#include "doilab/harness.hpp"

using namespace doilab;

namespace {

// Small enough to run a full sweep in a few seconds.
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.length = 5.0;
  cfg.n = 16;
  cfg.t_final = 0.02;
  cfg.samples = 4;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config text round trip") {
  const auto cfg = parse_config(R"(
# reference run
dimension = 2
length = 12.5
nodes = 32   # per axis
lmax = 6
quadrature_factor = 5
alpha = 10
kernel_a = 0.5
epsilons = 0.2, 0.1,0.05
cfl = 0.3
t_final = 0.1
samples = 7
snapshot_stride = 2
director_amplitude = 0.25
output_dir = out/run1
seed = 42
threads = 2
)");
  CHECK(cfg.dim == 2);
  CHECK(cfg.length == 12.5);
  CHECK(cfg.n == 32);
  CHECK(cfg.lmax == 6);
  CHECK(cfg.quadrature_factor == 5);
  CHECK(cfg.alpha == 10.0);
  CHECK(cfg.kernel_a == 0.5);
  CHECK(cfg.epsilons == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(cfg.cfl == 0.3);
  CHECK(cfg.t_final == 0.1);
  CHECK(cfg.samples == 7);
  CHECK(cfg.snapshot_stride == 2);
  CHECK(cfg.director_amplitude == 0.25);
  CHECK(cfg.output_dir == std::filesystem::path("out/run1"));
  CHECK(cfg.seed == 42);
  CHECK(cfg.threads == 2);

  const auto again = parse_config(format_config(cfg));
  CHECK(format_config(again) == format_config(cfg));
  CHECK(again.epsilons == cfg.epsilons);

  const auto defaults = parse_config("");
  CHECK(format_config(defaults) == format_config(ExperimentConfig{}));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("speed = 3"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha 8"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha ="), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha = 8x"), ConfigError);
  CHECK_THROWS_AS(parse_config("nodes = 2.5"), ConfigError);
  CHECK_THROWS_AS(parse_config("nodes = 48"), ConfigError);
  CHECK_THROWS_AS(parse_config("lmax = 3"), ConfigError);
  CHECK_THROWS_AS(parse_config("dimension = 3"), ConfigError);
  CHECK_THROWS_AS(parse_config("epsilons = 0.1, 0.1"), ConfigError);
  CHECK_THROWS_AS(parse_config("epsilons = 0.05, 0.1"), ConfigError);
  CHECK_THROWS_AS(parse_config("epsilons = 0.1, -0.05"), ConfigError);
  CHECK_THROWS_AS(parse_config("epsilons = 0.1,,0.05"), ConfigError);
  CHECK_THROWS_AS(parse_config("kernel_a = 4"), ConfigError);
  CHECK_THROWS_AS(parse_config("cfl = 0"), ConfigError);
  CHECK_THROWS_AS(parse_config("t_final = nan"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/doilab.cfg"), ConfigError);

  // Sub-critical alpha is a valid config but not a valid limit experiment.
  const auto cfg = parse_config("alpha = 5");
  CHECK_NOTHROW(validate(cfg, false));
  CHECK_THROWS_AS(validate(cfg, true), ConfigError);
  CHECK_THROWS_AS(epsilon_sweep(cfg), ConfigError);
}

TEST_CASE("initial director") {
  auto cfg = small_config();
  const auto n = initial_director(cfg);
  CHECK(n.unit_defect() < 1e-15);
  // Rotation about e1 keeps the first component zero.
  for (const auto& v : n.n) CHECK(v.x() == 0.0);
  cfg.director_amplitude = 0.0;
  for (const auto& v : initial_director(cfg).n) CHECK((v - Vec3::UnitZ()).norm() == 0.0);
}

TEST_CASE("well-prepared data") {
  const auto cfg = small_config();
  const TorusGrid torus(cfg.dim, cfg.length, cfg.n);
  SolverOptions opt;
  opt.lmax = cfg.lmax;
  const KineticSolver solver(torus, KernelSpec::gaussian(cfg.kernel_a, cfg.dim), cfg.alpha, opt);
  const auto n = initial_director(cfg);

  SUBCASE("Q is the uniaxial tensor of the director") {
    const auto f = well_prepared_init(n, solver, 0.05);
    const auto Q = solver.q_field(f);
    const double S2 = solver.equilibrium_order();
    for (int s = 0; s < torus.size(); ++s) {
      const QTensor target = S2 * (n.n[s] * n.n[s].transpose() - Mat3::Identity() / 3.0);
      CHECK((Q.q[s] - target).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK(q_error(Q, n, S2) < 1e-8);
  }

  SUBCASE("modulated energy is of order eps") {
    double lo = 1e300, hi = 0.0;
    for (double eps : {0.1, 0.05, 0.025}) {
      const auto r = solver.energy_report(well_prepared_init(n, solver, eps));
      CHECK(r.modulated_total > 0.0);
      lo = std::min(lo, r.modulated_total / eps);
      hi = std::max(hi, r.modulated_total / eps);
    }
    CHECK(hi < 2.0 * lo);
  }

  SUBCASE("input errors") {
    auto bad = n;
    bad.n[3] *= 1.001;
    CHECK_THROWS_AS(well_prepared_init(bad, solver, 0.05), ConfigError);
    DirectorField other(TorusGrid(1, cfg.length, 2 * cfg.n));
    CHECK_THROWS_AS(well_prepared_init(other, solver, 0.05), ConfigError);
  }
}

TEST_CASE("limit trajectory sampling") {
  const auto cfg = small_config();
  const auto n = initial_director(cfg);
  const auto traj = limit_trajectory(n, 4.0, 0.1, 5);
  REQUIRE(traj.size() == 6);
  for (int k = 0; k <= 5; ++k) CHECK(traj[k].t == doctest::Approx(0.02 * k).epsilon(1e-14));
  CHECK(traj.front().n == n.n);
  // The flow lowers the Dirichlet energy.
  CHECK(dirichlet_energy(traj.back()) < dirichlet_energy(traj.front()));
}

TEST_CASE("sweep with a constant director is exact") {
  auto cfg = small_config();
  cfg.director_amplitude = 0.0;
  const auto report = epsilon_sweep(cfg);
  REQUIRE(report.rows.size() == 3);
  for (const auto& r : report.rows) {
    CHECK(r.status == "ok");
    CHECK(r.sup_error < 1e-8);
    CHECK(r.final_error < 1e-8);
    CHECK(r.sup_error_solvability < 1e-8);
    CHECK(r.initial_modulated < 1e-12);
  }
}

TEST_CASE("sweep report, files and determinism") {
  auto cfg = small_config();
  cfg.snapshot_stride = 2;
  cfg.output_dir = fresh_dir("doilab_sweep_a");
  const auto report = epsilon_sweep(cfg);

  CHECK(report.coefficients.Lambda > 0.0);
  CHECK(report.solvability_lambda == doctest::Approx(0.5 * report.coefficients.Lambda).epsilon(1e-15));
  CHECK(report.discrete_order > 0.6);
  REQUIRE(report.rows.size() == cfg.epsilons.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    CHECK(r.eps == cfg.epsilons[i]);
    CHECK(r.status == "ok");
    CHECK(std::isfinite(r.sup_error));
    CHECK(r.final_error <= r.sup_error);
    CHECK(r.final_error_solvability <= r.sup_error_solvability);
    CHECK(r.max_modulated >= r.initial_modulated);
    CHECK(r.total_dissipation >= 0.0);
    CHECK(r.steps > 0);
  }
  // Smaller eps needs more steps.
  CHECK(report.rows[2].steps > report.rows[0].steps);

  const auto sweep = lines_of(slurp(cfg.output_dir / "sweep.csv"));
  REQUIRE(sweep.size() == 4);
  CHECK(sweep[0] ==
        "eps,status,sup_error,final_error,initial_modulated,max_modulated,total_dissipation,steps,"
        "sup_error_solvability,final_error_solvability");
  CHECK(sweep[1].rfind("0.10000000000000001,ok,", 0) == 0);
  CHECK(sweep[3].rfind("0.025000000000000001,ok,", 0) == 0);
  for (const char* label : {"0.1", "0.05", "0.025"}) {
    const auto energy = lines_of(slurp(cfg.output_dir / (std::string("energy_") + label + ".csv")));
    CHECK(energy.size() == static_cast<std::size_t>(cfg.samples + 2));
    for (int k : {0, 2, 4}) {
      const auto snap = cfg.output_dir / (std::string("snap_") + label + "_" + std::to_string(k) + ".doqs");
      REQUIRE(std::filesystem::exists(snap));
      CHECK(read_snapshot(snap, cfg.length).t == doctest::Approx(cfg.t_final * k / cfg.samples).epsilon(1e-14));
    }
    CHECK_FALSE(std::filesystem::exists(cfg.output_dir / (std::string("snap_") + label + "_1.doqs")));
  }

  auto second = cfg;
  second.output_dir = fresh_dir("doilab_sweep_b");
  epsilon_sweep(second);
  for (const auto& entry : std::filesystem::directory_iterator(cfg.output_dir)) {
    const auto name = entry.path().filename();
    CHECK_MESSAGE(slurp(entry.path()) == slurp(second.output_dir / name), name.string());
  }
  std::filesystem::remove_all(cfg.output_dir);
  std::filesystem::remove_all(second.output_dir);
}

TEST_CASE("bifurcation table") {
  const auto rows = bifurcation_table(6.0, 10.0, 5);
  int stable = 0;
  for (const auto& r : rows) {
    CHECK(std::abs(r.eta - r.alpha * r.s2) < 1e-10);
    if (r.branch == "stable") ++stable;
    if (r.branch == "isotropic") CHECK(r.eta == 0.0);
  }
  // alpha = 6 is below the saddle-node, so only the isotropic root exists.
  CHECK(rows.front().alpha == 6.0);
  CHECK(rows.front().branch == "isotropic");
  CHECK(rows[1].alpha == 7.0);
  CHECK(stable == 4);
  CHECK_THROWS_AS(bifurcation_table(8.0, 7.0, 3), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "doilab_bifurcation.csv";
  write_bifurcation_csv(path, rows);
  const auto lines = lines_of(slurp(path));
  CHECK(lines.size() == rows.size() + 1);
  CHECK(lines[0] == "alpha,eta,s2,branch");
  CHECK(lines[1] == "6,0,0,isotropic");
  std::filesystem::remove(path);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(8.0) == "8");
  CHECK(parse_config("alpha = " + format_double(0.1 + 0.2)).alpha == 0.1 + 0.2);
  CHECK(eps_label(0.025) == "0.025");
  CHECK(eps_label(0.1) == "0.1");
}
