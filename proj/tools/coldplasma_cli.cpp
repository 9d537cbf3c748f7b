// Batch driver: converge, stability, conserve, perf, beam2d, freqsolve.
// Exit codes: 0 all checks passed, 2 a check failed, 1 runtime error.

#include "coldplasma/studies.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <numbers>
#include <iostream>

using namespace coldplasma;

namespace {

struct Overrides {
  std::string config;
  std::vector<double> ppw;
  std::vector<double> cfls;
  std::vector<std::string> schemes;
  std::string polarization;
  std::string out;
  double cfl = 0.0;
  double ppp = 0.0;
  double periods = 0.0;
  double tol = 0.0;
  bool assert_slope = false;
  std::vector<int> cells;
  std::string dump_config;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--ppw", o.ppw, "points per wavelength list");
  sub->add_option("--cfl-list", o.cfls, "CFL list (stability)");
  sub->add_option("--scheme", o.schemes, "poisson, hamiltonian or cn (repeatable)");
  sub->add_option("--polarization", o.polarization, "O or X");
  sub->add_option("--cfl", o.cfl, "Courant number");
  sub->add_option("--ppp", o.ppp, "time points per period");
  sub->add_option("--periods", o.periods, "number of periods");
  sub->add_option("--tol", o.tol, "inner solver tolerance");
  sub->add_option("--cells", o.cells, "n_cells triple")->expected(3);
  sub->add_option("-o,--out", o.out, "output directory");
  sub->add_flag("--assert-slope", o.assert_slope, "fail when a fitted slope leaves [slope_min, slope_max]");
  sub->add_option("--dump-config", o.dump_config, "write the effective configuration and exit");
}

RunConfig beam_defaults() {
  RunConfig c;
  const double L = 24.0 * std::numbers::pi;
  c.mode = "beam2d";
  c.domain = Box{{Interval{0.0, L}, Interval{0.0, L}, Interval{0.0, 2.0 * std::numbers::pi}}};
  c.n_cells = {72, 72, 1};
  c.degrees = {3, 3, 1};
  c.periodic = {false, false, true};
  c.cfl.reset();
  c.ppp = 32.0;
  c.n_periods = 25.0;
  c.profile.preset = "blobs";
  c.source.type = "beam";
  c.source.beam.ignore_z = true;
  return c;
}

RunConfig effective_config(const std::string& mode, const Overrides& o) {
  RunConfig c = (mode == "beam2d" || mode == "freqsolve") ? beam_defaults() : RunConfig{};
  if (!o.config.empty()) c = load_run_config(o.config);
  c.mode = mode;
  if (mode == "stability" && o.config.empty()) {
    c.source.polarization = Polarization::X;
    c.ppw_list = {10.0};
    c.schemes = {Scheme::Poisson, Scheme::Hamiltonian, Scheme::CrankNicolson};
  }
  if ((mode == "conserve" || mode == "perf") && o.config.empty()) {
    c.source.polarization = Polarization::X;
    c.schemes = {Scheme::Poisson, Scheme::Hamiltonian, Scheme::CrankNicolson};
  }
  if (!o.ppw.empty()) c.ppw_list = o.ppw;
  if (!o.cfls.empty()) c.cfl_list = o.cfls;
  if (!o.schemes.empty()) {
    c.schemes.clear();
    for (const auto& s : o.schemes) c.schemes.push_back(scheme_from_string(s));
  }
  if (!o.polarization.empty()) {
    c.source.polarization = (o.polarization == "X" || o.polarization == "x") ? Polarization::X : Polarization::O;
    if (c.source.type == "beam") c.source.beam.e = c.source.polarization == Polarization::X ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  }
  if (o.cfl > 0.0) {
    c.cfl = o.cfl;
    c.ppp.reset();
  }
  if (o.ppp > 0.0) {
    c.ppp = o.ppp;
    c.cfl.reset();
  }
  if (o.periods > 0.0) c.n_periods = o.periods;
  if (o.tol > 0.0) c.solver.tol = o.tol;
  if (o.cells.size() == 3) c.n_cells = {o.cells[0], o.cells[1], o.cells[2]};
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.assert_slope) c.assert_slope = true;
  c.validate();
  return c;
}

Json summary_base(const RunConfig& c) {
  return {{"build", build_id()},
          {"mode", c.mode},
          {"config", to_json(c)},
          {"cfl", c.cfl ? Json(*c.cfl) : Json(nullptr)},
          {"tolerance", c.solver.tol}};
}

int finish(const RunConfig& c, Json summary, bool passed, const std::vector<std::string>& messages) {
  summary["passed"] = passed;
  summary["messages"] = messages;
  std::filesystem::create_directories(c.output_dir);
  write_json((std::filesystem::path(c.output_dir) / "summary.json").string(), summary);
  for (const auto& m : messages) std::cout << "  " << m << '\n';
  std::cout << (passed ? "PASS" : "FAIL") << " (" << c.mode << ", summary in " << c.output_dir << "/summary.json)\n";
  return passed ? 0 : 2;
}

void print_sweep(const SweepReport& rep) {
  for (const auto& r : rep.runs)
    std::cout << to_string(r.scheme) << " ppw=" << r.ppw << " cfl=" << r.cfl << " rel_total=" << r.rel_total
              << " rel_solver=" << r.rel_solver << " energy=" << r.energy_error << " charge=" << r.charge_error
              << " divB=" << r.div_b_max << (r.diverged ? " DIVERGED" : "") << '\n';
  for (const auto& [k, v] : rep.slopes) std::cout << "slope " << k << " = " << v << '\n';
}

int run_mode(const std::string& mode, const Overrides& o) {
  const RunConfig c = effective_config(mode, o);
  if (!o.dump_config.empty()) {
    write_json(o.dump_config, to_json(c));
    return 0;
  }
  Json summary = summary_base(c);
  if (mode == "converge" || mode == "stability" || mode == "conserve") {
    const SweepReport rep = mode == "converge"    ? run_convergence_study(c)
                            : mode == "stability" ? run_stability_scan(c)
                                                  : run_conservation(c);
    print_sweep(rep);
    summary["report"] = rep.to_json();
    return finish(c, summary, rep.passed, rep.messages);
  }
  if (mode == "perf") {
    SweepReport rep;
    const std::vector<CostRecord> costs = run_performance(c, &rep);
    CsvWriter csv({"scheme", "ppp", "dim", "n1", "n2", "mvbp", "lfops"});
    Json rows = Json::array();
    for (const CostRecord& r : costs) {
      std::cout << to_string(r.scheme) << " ppp=" << r.ppp << " dim=" << r.dim << " n=(" << r.n1 << ", " << r.n2
                << ") mvbp=" << r.mvbp << " lfops=" << r.lfops << '\n';
      csv.add_row({static_cast<double>(r.scheme), r.ppp, static_cast<double>(r.dim), r.n1, r.n2, r.mvbp, r.lfops});
      rows.push_back({{"scheme", to_string(r.scheme)}, {"ppp", r.ppp}, {"dim", r.dim}, {"n1", r.n1},
                      {"n2", r.n2}, {"mvbp", r.mvbp}, {"lfops", r.lfops}});
    }
    std::filesystem::create_directories(c.output_dir);
    csv.write((std::filesystem::path(c.output_dir) / "perf.csv").string());
    summary["costs"] = rows;
    summary["report"] = rep.to_json();
    return finish(c, summary, rep.passed, rep.messages);
  }
  if (mode == "beam2d") {
    const BeamReport rep = run_beam_2d(c);
    for (std::size_t k = 0; k < rep.residual_periods.size(); ++k)
      std::cout << "period " << k << " R=" << rep.residual_periods[k] << '\n';
    summary["report"] = rep.to_json();
    return finish(c, summary, true, {});
  }
  if (mode == "freqsolve") {
    std::vector<std::string> files;
    const FrequencySolution fs = run_freqsolve(c, &files);
    std::cout << "residual " << fs.residual << (fs.direct ? " (direct)" : " (iterative)") << '\n';
    summary["residual"] = fs.residual;
    summary["direct"] = fs.direct;
    summary["files"] = files;
    return finish(c, summary, true, {});
  }
  throw std::invalid_argument("unknown mode " + mode);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cold-plasma FEEC solver studies"};
  app.require_subcommand(1);
  std::map<std::string, Overrides> opts;
  const std::vector<std::pair<std::string, std::string>> modes{
      {"converge", "manufactured-solution convergence sweep over PPW"},
      {"stability", "fixed-PPW sweep over CFL with divergence detection"},
      {"conserve", "energy, charge and div B errors over PPW"},
      {"perf", "iteration counts, MVBP and LFOps per scheme"},
      {"beam2d", "2D Gaussian beam run with the time-harmonic residual"},
      {"freqsolve", "frequency-domain solve only"}};
  for (const auto& [name, help] : modes) add_common(app.add_subcommand(name, help), opts[name]);
  CLI11_PARSE(app, argc, argv);
  try {
    for (const auto& [name, help] : modes)
      if (app.got_subcommand(name)) return run_mode(name, opts[name]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
