#include "doilab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doilab/errors.hpp"
#include "doilab/parallel.hpp"

namespace doilab {

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eps_label(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for " + key);
    if (key == "dimension") cfg.dim = static_cast<int>(to_long(key, value));
    else if (key == "length") cfg.length = to_double(key, value);
    else if (key == "nodes") cfg.n = static_cast<int>(to_long(key, value));
    else if (key == "lmax") cfg.lmax = static_cast<int>(to_long(key, value));
    else if (key == "quadrature_factor") cfg.quadrature_factor = static_cast<int>(to_long(key, value));
    else if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "kernel_a") cfg.kernel_a = to_double(key, value);
    else if (key == "epsilons") cfg.epsilons = to_list(key, value);
    else if (key == "cfl") cfg.cfl = to_double(key, value);
    else if (key == "t_final") cfg.t_final = to_double(key, value);
    else if (key == "samples") cfg.samples = static_cast<int>(to_long(key, value));
    else if (key == "snapshot_stride") cfg.snapshot_stride = static_cast<int>(to_long(key, value));
    else if (key == "director_amplitude") cfg.director_amplitude = to_double(key, value);
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "seed") cfg.seed = static_cast<unsigned long>(to_long(key, value));
    else if (key == "threads") cfg.threads = static_cast<int>(to_long(key, value));
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  validate(cfg, false);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& cfg, bool limit_experiment) {
  if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("dimension must be 1 or 2");
  if (!(cfg.length > 0.0)) throw ConfigError("length must be positive");
  if (cfg.n < 2 || (cfg.n & (cfg.n - 1)) != 0) throw ConfigError("nodes must be a power of two");
  if (cfg.lmax < 4) throw ConfigError("lmax must be at least 4");
  if (cfg.quadrature_factor < 2) throw ConfigError("quadrature_factor must be at least 2");
  if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (limit_experiment && !(cfg.alpha > 7.5)) throw ConfigError("limit experiments need alpha > 7.5");
  if (!(cfg.kernel_a > 0.0 && cfg.kernel_a < kPi)) throw ConfigError("kernel_a must lie in (0, pi)");
  if (cfg.epsilons.empty()) throw ConfigError("epsilons must not be empty");
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    if (!(cfg.epsilons[i] > 0.0)) throw ConfigError("epsilons must be positive");
    if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1])) throw ConfigError("epsilons must be strictly decreasing");
  }
  if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw ConfigError("cfl must lie in (0, 1]");
  if (!(cfg.t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (cfg.samples < 1) throw ConfigError("samples must be at least 1");
  if (cfg.snapshot_stride < 0) throw ConfigError("snapshot_stride must be nonnegative");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "dimension = " << cfg.dim << "\n";
  out << "length = " << format_double(cfg.length) << "\n";
  out << "nodes = " << cfg.n << "\n";
  out << "lmax = " << cfg.lmax << "\n";
  out << "quadrature_factor = " << cfg.quadrature_factor << "\n";
  out << "alpha = " << format_double(cfg.alpha) << "\n";
  out << "kernel_a = " << format_double(cfg.kernel_a) << "\n";
  out << "epsilons = ";
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) out << (i ? ", " : "") << format_double(cfg.epsilons[i]);
  out << "\n";
  out << "cfl = " << format_double(cfg.cfl) << "\n";
  out << "t_final = " << format_double(cfg.t_final) << "\n";
  out << "samples = " << cfg.samples << "\n";
  out << "snapshot_stride = " << cfg.snapshot_stride << "\n";
  out << "director_amplitude = " << format_double(cfg.director_amplitude) << "\n";
  if (!cfg.output_dir.empty()) out << "output_dir = " << cfg.output_dir.string() << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "threads = " << cfg.threads << "\n";
  return out.str();
}

DirectorField initial_director(const ExperimentConfig& cfg) {
  DirectorField f(TorusGrid(cfg.dim, cfg.length, cfg.n));
  const auto& g = f.torus;
  for (int s = 0; s < g.size(); ++s) {
    const auto x = g.position(s);
    double t = cfg.director_amplitude * std::sin(2 * kPi * x[0] / g.length());
    if (g.dim() == 2) t += 0.6 * cfg.director_amplitude * std::cos(2 * kPi * x[1] / g.length());
    f.n[s] = Vec3(0.0, -std::sin(t), std::cos(t));
  }
  return f;
}

DensityField well_prepared_init(const DirectorField& n_in, const KineticSolver& solver, double eps) {
  if (!(n_in.torus == solver.torus())) throw ConfigError("director grid does not match the solver grid");
  if (n_in.unit_defect() > 1e-12) throw ConfigError("initial director must have unit length at every site");
  return solver.aligned_field(n_in.n, eps);
}

double q_error(const QTensorField& Q, const DirectorField& n, double S2) {
  double sum = 0.0;
  for (int s = 0; s < Q.grid.size(); ++s) {
    const QTensor target = S2 * (n.n[s] * n.n[s].transpose() - Mat3::Identity() / 3.0);
    sum += (Q.q[s] - target).squaredNorm();
  }
  return std::sqrt(sum * Q.grid.cell_volume());
}

std::vector<DirectorField> limit_trajectory(const DirectorField& n_in, double Lambda, double t_final, int samples) {
  const double interval = t_final / samples;
  const int sub = static_cast<int>(std::ceil(interval / (0.5 * hmhf_stable_dt(n_in.torus, Lambda))));
  const double dt = interval / sub;
  std::vector<DirectorField> out{n_in};
  out.front().t = 0.0;
  DirectorField f = out.front();
  for (int k = 1; k <= samples; ++k) {
    for (int j = 0; j < sub; ++j) hmhf_step(f, dt, Lambda);
    f.t = k * interval;
    out.push_back(f);
  }
  return out;
}

ConvergenceReport epsilon_sweep(const ExperimentConfig& cfg) {
  validate(cfg, true);
  set_num_threads(cfg.threads);
  const TorusGrid torus(cfg.dim, cfg.length, cfg.n);
  const auto kernel = KernelSpec::gaussian(cfg.kernel_a, cfg.dim);
  const auto params = equilibrium_params(cfg.alpha);
  ConvergenceReport report;
  report.coefficients = lambda_coefficient(params, kernel);

  SolverOptions opt;
  opt.lmax = cfg.lmax;
  opt.quadrature_factor = cfg.quadrature_factor;
  opt.cfl = cfg.cfl;
  const KineticSolver solver(torus, kernel, cfg.alpha, opt);
  report.discrete_order = solver.equilibrium_order();

  const auto n0 = initial_director(cfg);
  const auto limit = limit_trajectory(n0, report.coefficients.Lambda, cfg.t_final, cfg.samples);
  report.solvability_lambda = 0.5 * report.coefficients.Lambda;
  const auto limit_solv = limit_trajectory(n0, report.solvability_lambda, cfg.t_final, cfg.samples);
  const bool write = !cfg.output_dir.empty();
  if (write) std::filesystem::create_directories(cfg.output_dir);

  for (double eps : cfg.epsilons) {
    ConvergenceRow row;
    row.eps = eps;
    try {
      auto f = well_prepared_init(n0, solver, eps);
      std::unique_ptr<EnergyCsv> csv;
      if (write) csv = std::make_unique<EnergyCsv>(cfg.output_dir / ("energy_" + eps_label(eps) + ".csv"));
      double cumulative = 0.0;
      auto record = [&](int k) {
        auto r = solver.energy_report(f);
        r.cumulative_dissipation = cumulative;
        if (csv) csv->append(r);
        if (k == 0) row.initial_modulated = r.modulated_total;
        row.max_modulated = std::max(row.max_modulated, r.modulated_total);
        const auto Q = solver.q_field(f);
        const double err = q_error(Q, limit[k], report.discrete_order);
        row.sup_error = std::max(row.sup_error, err);
        row.final_error = err;
        const double err_solv = q_error(Q, limit_solv[k], report.discrete_order);
        row.sup_error_solvability = std::max(row.sup_error_solvability, err_solv);
        row.final_error_solvability = err_solv;
        if (write && cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)
          write_snapshot(cfg.output_dir / ("snap_" + eps_label(eps) + "_" + std::to_string(k) + ".doqs"), f);
      };
      record(0);
      for (int k = 1; k <= cfg.samples; ++k) {
        const double target = cfg.t_final * k / cfg.samples;
        while (target - f.t > 1e-12 * cfg.t_final) {
          const double dt = std::min(solver.stable_dt(f), target - f.t);
          row.steps += solver.step(f, dt, &cumulative);
        }
        f.t = target;
        record(k);
      }
      row.total_dissipation = cumulative;
    } catch (const NumericalError& e) {
      row.status = std::string("failed: ") + e.what();
    }
    report.rows.push_back(row);
  }
  if (write) write_sweep_csv(cfg.output_dir / "sweep.csv", report);
  return report;
}

void write_sweep_csv(const std::filesystem::path& path, const ConvergenceReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open sweep csv: " + path.string());
  out << "eps,status,sup_error,final_error,initial_modulated,max_modulated,total_dissipation,steps,"
         "sup_error_solvability,final_error_solvability\n";
  for (const auto& r : report.rows)
    out << format_double(r.eps) << ',' << csv_field(r.status) << ',' << format_double(r.sup_error) << ','
        << format_double(r.final_error) << ',' << format_double(r.initial_modulated) << ','
        << format_double(r.max_modulated) << ',' << format_double(r.total_dissipation) << ',' << r.steps << ','
        << format_double(r.sup_error_solvability) << ',' << format_double(r.final_error_solvability) << '\n';
}

std::vector<BifurcationRow> bifurcation_table(double alpha_min, double alpha_max, int count) {
  if (count < 1 || !(alpha_min > 0.0) || alpha_max < alpha_min) throw ConfigError("invalid alpha range");
  std::vector<BifurcationRow> rows;
  for (int i = 0; i < count; ++i) {
    const double alpha = count == 1 ? alpha_min : alpha_min + (alpha_max - alpha_min) * i / (count - 1);
    const auto roots = solve_eta(alpha);
    const double largest = roots.back();
    for (double eta : roots) {
      BifurcationRow r;
      r.alpha = alpha;
      r.eta = eta;
      r.s2 = s2(eta);
      r.branch = eta == 0.0 ? "isotropic" : (eta == largest ? "stable" : "unstable");
      rows.push_back(r);
    }
  }
  return rows;
}

void write_bifurcation_csv(const std::filesystem::path& path, std::span<const BifurcationRow> rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open bifurcation csv: " + path.string());
  out << "alpha,eta,s2,branch\n";
  for (const auto& r : rows)
    out << format_double(r.alpha) << ',' << format_double(r.eta) << ',' << format_double(r.s2) << ',' << r.branch << '\n';
}

}  // namespace doilab
