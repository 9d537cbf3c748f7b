#pragma once

#include "coldplasma/diagnostics.hpp"
#include "coldplasma/freq_domain.hpp"

#include "json.hpp"

#include <optional>

namespace coldplasma {

using Json = nlohmann::json;

struct ProfileConfig {
  /// manufactured | vacuum | blobs | single_blob | file
  std::string preset = "manufactured";
  std::string file;
  double omega_c = 0.5;
  double nu_e = 0.0;
  /// Peak omega_p^2 of the blob presets; <= 0 keeps the preset default.
  double peak_omega_p2 = 0.0;
};

struct SourceConfig {
  /// manufactured | beam | none
  std::string type = "manufactured";
  Polarization polarization = Polarization::O;
  BeamParams beam{};
};

struct RunConfig {
  std::string mode = "converge";
  Box domain{{Interval{0.0, 3.0 * 3.14159265358979323846}, Interval{0.0, 2.0 * 3.14159265358979323846},
              Interval{0.0, 2.0 * 3.14159265358979323846}}};
  Index3 n_cells{15, 1, 1};
  Index3 degrees{3, 1, 1};
  std::array<bool, 3> periodic{false, true, true};
  std::vector<Scheme> schemes{Scheme::Poisson};
  /// Exactly one of cfl / ppp.
  std::optional<double> cfl = 0.25;
  std::optional<double> ppp;
  double n_periods = 3.0;
  ProfileConfig profile{};
  SourceConfig source{};
  SolverOptions solver{};
  std::vector<double> ppw_list{10, 20, 40};
  std::vector<double> cfl_list{0.25, 0.33, 0.5, 1.0};
  /// Slope window checked by the sweeps when `assert_slope` is set.
  bool assert_slope = false;
  double slope_min = 1.8, slope_max = 2.2;
  std::string output_dir = "out";
  std::vector<double> snapshot_times;
  /// Frequency-domain comparison in beam2d runs.
  bool frequency = true;
  int quad_points = 0;

  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  /// 2 pi / dx in x.
  double ppw() const;
  double dt() const;
};

Json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::string& path);

std::string build_id();

/// Profile and source of a configuration.
PlasmaProfile make_profile(const RunConfig& cfg);
std::optional<SourceSpec> make_source(const RunConfig& cfg, double dt);

/// Number of x cells of the manufactured 1D grid at a given PPW.
int cells_for_ppw(const Box& box, double ppw);

/// Result of one manufactured-solution run.
struct ManufacturedResult {
  Scheme scheme = Scheme::Poisson;
  double ppw = 0.0, cfl = 0.0, dt = 0.0, ppp = 0.0;
  int n_cells_x = 0, n_steps = 0, dim = 0;
  /// max over time of the combined (E, B, Y) errors over max over time of the exact norm
  double rel_total = 0.0, rel_solver = 0.0, rel_proj = 0.0;
  /// total error relative to the numerical solution norm
  double rel_total_numerical = 0.0;
  FieldErrors max_total, max_solver, max_proj;
  double energy_error = 0.0;
  double charge_error = 0.0;
  double div_b_max = 0.0;
  double energy_balance_max = 0.0;
  double max_abs = 0.0;
  bool diverged = false;
  std::string failure;
  /// Mean iterations over all steps in mvbp() order.
  double n1 = 0.0, n2 = 0.0;
  double mvbp_counted = 0.0, mvbp_formula = 0.0;
  int mvbp_mismatches = 0;
  /// Solve records whose products differ from 2+2n (PCG) or 2+4n (PBiCGStab).
  int counter_mismatches = 0;
  double seconds = 0.0;
};

struct ManufacturedOptions {
  Polarization polarization = Polarization::O;
  Scheme scheme = Scheme::Poisson;
  double ppw = 10.0;
  double cfl = 0.25;
  double n_periods = 3.0;
  Index3 degrees{3, 1, 1};
  SolverOptions solver{};
  /// Stop once the solution magnitude exceeds this value.
  double divergence_threshold = 1e10;
  /// Optional per-step CSV of diagnostics.
  std::string csv_path;
};

ManufacturedResult run_manufactured(const ManufacturedOptions& opt);

struct SweepReport {
  std::vector<ManufacturedResult> runs;
  /// slope per scheme name
  std::map<std::string, double> slopes;
  bool passed = true;
  std::vector<std::string> messages;
  Json to_json() const;
};

SweepReport run_convergence_study(const RunConfig& cfg);
SweepReport run_stability_scan(const RunConfig& cfg);
SweepReport run_conservation(const RunConfig& cfg);

std::vector<CostRecord> run_performance(const RunConfig& cfg, SweepReport* report = nullptr);

struct BeamReport {
  std::vector<double> times;
  std::vector<double> residual;
  /// residual sampled at whole periods, index k = t / 2 pi
  std::vector<double> residual_periods;
  std::vector<DiagnosticRecord> diagnostics;
  std::vector<std::string> snapshots;
  int dim = 0;
  double seconds = 0.0;
  double frequency_residual = 0.0;
  bool frequency_direct = false;
  Json to_json() const;
};

BeamReport run_beam_2d(const RunConfig& cfg);

/// Frequency-domain solve only; writes E_hat/B_hat/Y_hat snapshots.
FrequencySolution run_freqsolve(const RunConfig& cfg, std::vector<std::string>* written = nullptr);

/// Writes `<path>.bin` (8-byte floats) and `<path>.json` (shape, space, time); returns the .bin path.
std::string write_snapshot(const std::string& path, const std::string& field, const TensorSpace& space,
                           const Eigen::VectorXd& data, double t, const Json& extra = Json::object());

void write_json(const std::string& path, const Json& j);

}  // namespace coldplasma
