#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "doilab/doi_onsager.hpp"
#include "doilab/limit_flow.hpp"

namespace doilab {

struct ExperimentConfig {
  int dim = 1;
  double length = 20.0;
  int n = 64;
  int lmax = 8;
  int quadrature_factor = 4;
  double alpha = 8.0;
  double kernel_a = 1.0;
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  double cfl = 0.25;
  double t_final = 0.2;
  // Number of equal intervals at which both solutions are compared.
  int samples = 20;
  // Write a density snapshot every this many samples; 0 disables.
  int snapshot_stride = 0;
  // Amplitude of the director rotation about e1; 0 gives the constant e3.
  double director_amplitude = 0.5;
  std::filesystem::path output_dir;
  unsigned long seed = 0;
  int threads = 1;
};

// Flat "key = value" text with '#' comments and comma-separated lists.
// Throws ConfigError on unknown keys, malformed values or invalid settings.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Throws ConfigError when an invariant fails. Limit experiments need alpha > 7.5.
void validate(const ExperimentConfig& cfg, bool limit_experiment);
std::string format_config(const ExperimentConfig& cfg);

// Director rotated about e1 by amplitude sin(2 pi x / X), plus
// 0.6 amplitude cos(2 pi y / X) in two dimensions: n = (0, -sin t, cos t).
DirectorField initial_director(const ExperimentConfig& cfg);

// Rotated discrete equilibrium at every site. Throws ConfigError for
// non-unit directors or a grid mismatch.
DensityField well_prepared_init(const DirectorField& n_in, const KineticSolver& solver, double eps);

// sqrt(sum_x |Q(x) - S2 (n n - I/3)|^2 h^d), Frobenius over entries.
double q_error(const QTensorField& Q, const DirectorField& n, double S2);

// Director trajectory sampled at t = k t_final / samples, k = 0..samples.
std::vector<DirectorField> limit_trajectory(const DirectorField& n_in, double Lambda, double t_final, int samples);

struct ConvergenceRow {
  double eps = 0.0;
  std::string status = "ok";
  // Errors against the flow with the stated coefficient Lambda.
  double sup_error = 0.0;
  double final_error = 0.0;
  // Errors against the flow with the coefficient of the solvability
  // condition of the eps expansion, alpha mu S2^2 / (gamma d) = Lambda / 2.
  double sup_error_solvability = 0.0;
  double final_error_solvability = 0.0;
  double initial_modulated = 0.0;
  double max_modulated = 0.0;
  double total_dissipation = 0.0;
  long steps = 0;
};

struct ConvergenceReport {
  LimitCoefficients coefficients;
  double discrete_order = 0.0;  // S2 of the band-limited equilibrium
  double solvability_lambda = 0.0;
  std::vector<ConvergenceRow> rows;
};

// Runs the kinetic solver for each eps and compares with the limit flow.
// A failing eps is recorded in its row and the sweep continues. With an
// output directory set, writes sweep.csv, energy_<eps>.csv and snapshots.
ConvergenceReport epsilon_sweep(const ExperimentConfig& cfg);

void write_sweep_csv(const std::filesystem::path& path, const ConvergenceReport& report);

struct BifurcationRow {
  double alpha = 0.0;
  double eta = 0.0;
  double s2 = 0.0;
  std::string branch;  // isotropic, unstable or stable
};

// Roots of eta = alpha s2(eta) over an alpha range.
std::vector<BifurcationRow> bifurcation_table(double alpha_min, double alpha_max, int count);
void write_bifurcation_csv(const std::filesystem::path& path, std::span<const BifurcationRow> rows);

// Decimal text with 17 significant digits.
std::string format_double(double v);
// Label used in output file names, e.g. 0.025 -> "0.025".
std::string eps_label(double eps);

}  // namespace doilab
