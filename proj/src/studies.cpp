#include "coldplasma/studies.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <numbers>
#include <sstream>

#ifndef COLDPLASMA_BUILD_ID
#define COLDPLASMA_BUILD_ID "unknown"
#endif

namespace coldplasma {

namespace {

constexpr double kPi = std::numbers::pi;

std::string polarization_name(Polarization p) { return p == Polarization::O ? "O" : "X"; }

Polarization polarization_from(const std::string& s) {
  if (s == "O" || s == "o") return Polarization::O;
  if (s == "X" || s == "x") return Polarization::X;
  throw std::invalid_argument("unknown polarization '" + s + "'");
}

Json box_json(const Box& b) {
  Json j = Json::array();
  for (int d = 0; d < 3; ++d) j.push_back({b[d].lo, b[d].hi});
  return j;
}

Box box_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("domain must be three [lo, hi] pairs");
  Box b;
  for (int d = 0; d < 3; ++d) b.sides[static_cast<std::size_t>(d)] = Interval{j[d].at(0).get<double>(), j[d].at(1).get<double>()};
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_pcg_flow(const std::string& flow) { return flow == "maxwell" || flow == "E"; }

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace

void RunConfig::validate() const {
  if (cfl.has_value() == ppp.has_value()) throw std::invalid_argument("config: give exactly one of cfl and ppp");
  if (cfl && !(*cfl > 0.0)) throw std::invalid_argument("config: cfl must be positive");
  if (ppp && !(*ppp > 0.0)) throw std::invalid_argument("config: ppp must be positive");
  for (int d = 0; d < 3; ++d) {
    if (n_cells[d] < 1) throw std::invalid_argument("config: n_cells must be positive");
    if (degrees[d] < 1) throw std::invalid_argument("config: degrees must be at least 1");
    if (!(domain[d].hi > domain[d].lo)) throw std::invalid_argument("config: empty domain side");
  }
  if (!(n_periods > 0.0)) throw std::invalid_argument("config: n_periods must be positive");
  if (schemes.empty()) throw std::invalid_argument("config: no scheme given");
  if (solver.tol <= 0.0 || solver.max_iter < 1) throw std::invalid_argument("config: invalid solver options");
}

double RunConfig::ppw() const { return 2.0 * kPi * n_cells[0] / domain[0].length(); }

double RunConfig::dt() const {
  if (ppp) return 2.0 * kPi / *ppp;
  return cfl.value_or(0.25) * domain[0].length() / n_cells[0];
}

Json to_json(const RunConfig& c) {
  Json j;
  j["mode"] = c.mode;
  j["domain"] = box_json(c.domain);
  j["n_cells"] = c.n_cells;
  j["degrees"] = c.degrees;
  j["periodic"] = c.periodic;
  Json s = Json::array();
  for (Scheme sc : c.schemes) s.push_back(to_string(sc));
  j["schemes"] = s;
  j["cfl"] = c.cfl ? Json(*c.cfl) : Json(nullptr);
  j["ppp"] = c.ppp ? Json(*c.ppp) : Json(nullptr);
  j["n_periods"] = c.n_periods;
  j["profile"] = {{"preset", c.profile.preset},
                  {"file", c.profile.file},
                  {"omega_c", c.profile.omega_c},
                  {"nu_e", c.profile.nu_e},
                  {"peak_omega_p2", c.profile.peak_omega_p2}};
  const BeamParams& b = c.source.beam;
  j["source"] = {{"type", c.source.type},
                 {"polarization", polarization_name(c.source.polarization)},
                 {"beam",
                  {{"w0", b.w0}, {"y0", b.y0}, {"z0", b.z0}, {"e", {b.e[0], b.e[1], b.e[2]}}, {"ignore_z", b.ignore_z}}}};
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
  j["ppw_list"] = c.ppw_list;
  j["cfl_list"] = c.cfl_list;
  j["assert_slope"] = c.assert_slope;
  j["slope_min"] = c.slope_min;
  j["slope_max"] = c.slope_max;
  j["output_dir"] = c.output_dir;
  j["snapshot_times"] = c.snapshot_times;
  j["frequency"] = c.frequency;
  j["quad_points"] = c.quad_points;
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const std::vector<std::string> known{
        "mode",     "domain",     "n_cells",      "degrees",   "periodic",  "schemes",      "cfl",
        "ppp",      "n_periods",  "profile",      "source",    "solver",    "ppw_list",     "cfl_list",
        "assert_slope", "slope_min", "slope_max", "output_dir", "snapshot_times", "frequency", "quad_points"};
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
  }
  c.mode = j.value("mode", c.mode);
  if (j.contains("domain")) c.domain = box_from(j["domain"]);
  if (j.contains("n_cells")) c.n_cells = j["n_cells"].get<Index3>();
  if (j.contains("degrees")) c.degrees = j["degrees"].get<Index3>();
  if (j.contains("periodic")) c.periodic = j["periodic"].get<std::array<bool, 3>>();
  if (j.contains("schemes")) {
    c.schemes.clear();
    for (const auto& s : j["schemes"]) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
  }
  // an explicit ppp without cfl switches the time step control
  if (j.contains("cfl")) c.cfl = j["cfl"].is_null() ? std::nullopt : std::optional<double>(j["cfl"].get<double>());
  if (j.contains("ppp")) {
    c.ppp = j["ppp"].is_null() ? std::nullopt : std::optional<double>(j["ppp"].get<double>());
    if (c.ppp && !j.contains("cfl")) c.cfl.reset();
  }
  c.n_periods = j.value("n_periods", c.n_periods);
  if (j.contains("profile")) {
    const Json& p = j["profile"];
    c.profile.preset = p.value("preset", c.profile.preset);
    c.profile.file = p.value("file", c.profile.file);
    c.profile.omega_c = p.value("omega_c", c.profile.omega_c);
    c.profile.nu_e = p.value("nu_e", c.profile.nu_e);
    c.profile.peak_omega_p2 = p.value("peak_omega_p2", c.profile.peak_omega_p2);
  }
  if (j.contains("source")) {
    const Json& s = j["source"];
    c.source.type = s.value("type", c.source.type);
    if (s.contains("polarization")) c.source.polarization = polarization_from(s["polarization"].get<std::string>());
    if (s.contains("beam")) {
      const Json& b = s["beam"];
      BeamParams& bp = c.source.beam;
      bp.w0 = b.value("w0", bp.w0);
      bp.y0 = b.value("y0", bp.y0);
      bp.z0 = b.value("z0", bp.z0);
      if (b.contains("e")) {
        const auto e = b["e"].get<std::array<double, 3>>();
        bp.e = Vec3(e[0], e[1], e[2]);
      }
      bp.ignore_z = b.value("ignore_z", bp.ignore_z);
    }
  }
  if (j.contains("solver")) {
    c.solver.tol = j["solver"].value("tol", c.solver.tol);
    c.solver.max_iter = j["solver"].value("max_iter", c.solver.max_iter);
  }
  c.ppw_list = j.value("ppw_list", c.ppw_list);
  c.cfl_list = j.value("cfl_list", c.cfl_list);
  c.assert_slope = j.value("assert_slope", c.assert_slope);
  c.slope_min = j.value("slope_min", c.slope_min);
  c.slope_max = j.value("slope_max", c.slope_max);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.snapshot_times = j.value("snapshot_times", c.snapshot_times);
  c.frequency = j.value("frequency", c.frequency);
  c.quad_points = j.value("quad_points", c.quad_points);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  return run_config_from_json(Json::parse(f));
}

std::string build_id() { return COLDPLASMA_BUILD_ID; }

PlasmaProfile make_profile(const RunConfig& cfg) {
  const ProfileConfig& p = cfg.profile;
  PlasmaProfile prof = PlasmaProfile::vacuum();
  const double wc = p.omega_c, nu = p.nu_e;
  prof.omega_c = [wc](const Vec3&) { return wc; };
  prof.nu_e = [nu](const Vec3&) { return nu; };
  if (p.preset == "manufactured") {
    prof.omega_p = [](const Vec3& x) { return ManufacturedSolution::omega_p(x); };
  } else if (p.preset == "vacuum") {
  } else if (p.preset == "blobs" || p.preset == "single_blob") {
    BlobDensity d = p.preset == "blobs" ? BlobDensity::turbulent(cfg.domain)
                                        : BlobDensity::single_below_axis(cfg.domain, cfg.source.beam.y0);
    if (p.peak_omega_p2 > 0.0) d.peak_omega_p2 = p.peak_omega_p2;
    prof.omega_p = d.omega_p(cfg.domain);
  } else if (p.preset == "file") {
    // the file holds omega_p^2
    const auto g = std::make_shared<GriddedScalar>(GriddedScalar::from_csv(p.file));
    prof.omega_p = [g](const Vec3& x) { return std::sqrt(std::max(0.0, (*g)(x))); };
  } else {
    throw std::invalid_argument("unknown profile preset '" + p.preset + "'");
  }
  return prof;
}

std::optional<SourceSpec> make_source(const RunConfig& cfg, double dt) {
  const std::string& t = cfg.source.type;
  if (t == "none") return std::nullopt;
  if (t == "manufactured") return manufactured_source(ManufacturedSolution(cfg.source.polarization, cfg.profile.omega_c));
  if (t == "beam") return beam_source(cfg.source.beam, cfg.domain[0].lo, dt);
  throw std::invalid_argument("unknown source type '" + t + "'");
}

int cells_for_ppw(const Box& box, double ppw) {
  if (!(ppw > 0.0)) throw std::invalid_argument("ppw must be positive");
  return std::max(1, static_cast<int>(std::lround(box[0].length() * ppw / (2.0 * kPi))));
}

ManufacturedResult run_manufactured(const ManufacturedOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const Box box{{Interval{0.0, 3.0 * kPi}, Interval{0.0, 2.0 * kPi}, Interval{0.0, 2.0 * kPi}}};
  const int nx = cells_for_ppw(box, opt.ppw);
  const DeRhamComplex cx = build_complex({nx, 1, 1}, opt.degrees, {false, true, true}, box);
  const ManufacturedSolution sol(opt.polarization);
  const SystemOperators ops = assemble_system(cx, sol.profile(), manufactured_source(sol));
  const ExactSolution exact = [&](double t, const Vec3& x) { return sol.fields(t, x); };

  ManufacturedResult r;
  r.scheme = opt.scheme;
  r.n_cells_x = nx;
  const double dx = box[0].length() / nx;
  const double t_end = opt.n_periods * 2.0 * kPi;
  r.n_steps = static_cast<int>(std::ceil(t_end / (opt.cfl * dx) - 1e-9));
  r.dt = t_end / r.n_steps;
  r.cfl = r.dt / dx;
  r.ppw = 2.0 * kPi / dx;
  r.ppp = 2.0 * kPi / r.dt;
  r.dim = ops.dim_E();

  SchemeConfig sc;
  sc.scheme = opt.scheme;
  sc.dt = r.dt;
  sc.solver = opt.solver;
  Integrator integ(ops, sc);
  const ErrorEvaluator ev(ops);

  std::unique_ptr<CsvWriter> csv;
  if (!opt.csv_path.empty())
    csv = std::make_unique<CsvWriter>(std::vector<std::string>{
        "t", "H", "Q", "divB_max", "err_total_E", "err_total_B", "err_total_Y", "err_solver_E", "err_solver_B",
        "err_solver_Y", "err_proj_E", "err_proj_B", "err_proj_Y", "energy_balance", "n1", "n2", "mvbp"});

  StateU u = ev.project(exact, 0.0);
  double exact_max = 0.0, num_max = 0.0, total_max = 0.0, solver_max = 0.0, proj_max = 0.0;
  double sum_n1 = 0.0, sum_n2 = 0.0, sum_counted = 0.0, sum_formula = 0.0;
  const auto track = [&](const StateU& s, const StateU& ref, double balance, double n1, double n2, double cost) {
    const ErrorNorms e = ev.errors(s, ref, exact);
    exact_max = std::max(exact_max, e.exact_norm.combined());
    total_max = std::max(total_max, e.total.combined());
    solver_max = std::max(solver_max, e.solver.combined());
    proj_max = std::max(proj_max, e.proj.combined());
    num_max = std::max(num_max, std::sqrt(2.0 * hamiltonian(s, ops)));
    const auto upd = [](FieldErrors& m, const FieldErrors& v) {
      m.E = std::max(m.E, v.E);
      m.B = std::max(m.B, v.B);
      m.Y = std::max(m.Y, v.Y);
    };
    upd(r.max_total, e.total);
    upd(r.max_solver, e.solver);
    upd(r.max_proj, e.proj);
    const DiagnosticRecord d = diagnose(s, ops);
    r.energy_error = std::max(r.energy_error, std::abs(d.hamiltonian - sol.hamiltonian(s.t, box)));
    r.charge_error = std::max(r.charge_error, std::abs(d.total_charge - sol.total_charge(s.t, box)));
    r.div_b_max = std::max(r.div_b_max, d.div_b_max);
    if (csv)
      csv->add_row({s.t, d.hamiltonian, d.total_charge, d.div_b_max, e.total.E, e.total.B, e.total.Y, e.solver.E,
                    e.solver.B, e.solver.Y, e.proj.E, e.proj.B, e.proj.Y, balance, n1, n2, cost});
  };
  track(u, u, 0.0, 0.0, 0.0, 0.0);

  int done = 0;
  try {
    for (int n = 0; n < r.n_steps; ++n) {
      const StateU prev = u;
      const StepRecord rec = integ.step(u);
      ++done;
      for (const SolveRecord& s : rec.solves) {
        const int expected = is_pcg_flow(s.flow) ? 2 + 2 * s.stats.iterations : 2 + 4 * s.stats.iterations;
        if (s.stats.total_products() != expected) ++r.counter_mismatches;
      }
      const auto [n1, n2] = step_iterations(opt.scheme, rec);
      const int counted = mvbp_counted(opt.scheme, rec);
      const double formula = mvbp(opt.scheme, n1, n2);
      if (std::abs(counted - formula) > 1e-9) ++r.mvbp_mismatches;
      sum_n1 += n1;
      sum_n2 += n2;
      sum_counted += counted;
      sum_formula += formula;

      r.max_abs = std::max(r.max_abs, u.max_abs());
      if (!u.finite() || u.max_abs() > opt.divergence_threshold) {
        r.diverged = true;
        break;
      }
      const double balance = energy_balance_residual({prev, u}, ops).front();
      r.energy_balance_max = std::max(r.energy_balance_max, std::abs(balance));
      track(u, ev.project(exact, u.t), balance, n1, n2, counted);
    }
  } catch (const SolveFailure& e) {
    r.failure = e.what();
    r.diverged = !u.finite() || u.max_abs() > opt.divergence_threshold;
  }
  if (done > 0) {
    r.n1 = sum_n1 / done;
    r.n2 = sum_n2 / done;
    r.mvbp_counted = sum_counted / done;
    r.mvbp_formula = sum_formula / done;
  }
  r.rel_total = total_max / exact_max;
  r.rel_solver = solver_max / exact_max;
  r.rel_proj = proj_max / exact_max;
  r.rel_total_numerical = num_max > 0.0 ? total_max / num_max : 0.0;
  if (r.diverged) r.rel_total = r.rel_total_numerical = std::numeric_limits<double>::infinity();
  if (csv) csv->write(opt.csv_path);
  r.seconds = seconds_since(t0);
  return r;
}

namespace {

Json result_json(const ManufacturedResult& r) {
  const auto fe = [](const FieldErrors& f) { return Json{{"E", f.E}, {"B", f.B}, {"Y", f.Y}}; };
  const auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"scheme", to_string(r.scheme)},
          {"ppw", r.ppw},
          {"cfl", r.cfl},
          {"dt", r.dt},
          {"ppp", r.ppp},
          {"n_cells_x", r.n_cells_x},
          {"n_steps", r.n_steps},
          {"dim", r.dim},
          {"rel_total", num(r.rel_total)},
          {"rel_solver", num(r.rel_solver)},
          {"rel_proj", num(r.rel_proj)},
          {"rel_total_numerical", num(r.rel_total_numerical)},
          {"max_total", fe(r.max_total)},
          {"max_solver", fe(r.max_solver)},
          {"max_proj", fe(r.max_proj)},
          {"energy_error", r.energy_error},
          {"charge_error", r.charge_error},
          {"div_b_max", r.div_b_max},
          {"energy_balance_max", r.energy_balance_max},
          {"max_abs", num(r.max_abs)},
          {"diverged", r.diverged},
          {"failure", r.failure},
          {"n1", r.n1},
          {"n2", r.n2},
          {"mvbp_counted", r.mvbp_counted},
          {"mvbp_formula", r.mvbp_formula},
          {"mvbp_mismatches", r.mvbp_mismatches},
          {"counter_mismatches", r.counter_mismatches},
          {"seconds", r.seconds}};
}

ManufacturedOptions options_from(const RunConfig& cfg, Scheme s, double ppw, double cfl) {
  ManufacturedOptions o;
  o.polarization = cfg.source.polarization;
  o.scheme = s;
  o.ppw = ppw;
  o.cfl = cfl;
  o.n_periods = cfg.n_periods;
  o.degrees = cfg.degrees;
  o.solver = cfg.solver;
  return o;
}

std::string run_csv_path(const RunConfig& cfg, const std::string& tag) {
  if (cfg.output_dir.empty()) return {};
  ensure_dir(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / (tag + ".csv")).string();
}

void check_slope(SweepReport& rep, const RunConfig& cfg, const std::string& label, double slope) {
  rep.slopes[label] = slope;
  if (cfg.assert_slope && !(slope >= cfg.slope_min && slope <= cfg.slope_max)) {
    rep.passed = false;
    std::ostringstream m;
    m << label << " slope " << slope << " outside [" << cfg.slope_min << ", " << cfg.slope_max << "]";
    rep.messages.push_back(m.str());
  }
}

}  // namespace

Json SweepReport::to_json() const {
  Json j;
  j["runs"] = Json::array();
  for (const auto& r : runs) j["runs"].push_back(result_json(r));
  j["slopes"] = slopes;
  j["passed"] = passed;
  j["messages"] = messages;
  return j;
}

SweepReport run_convergence_study(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.source.type != "manufactured") throw std::invalid_argument("converge: needs a manufactured source");
  const double cfl = cfg.cfl.value_or(0.25);
  SweepReport rep;
  std::map<double, std::map<Scheme, double>> by_ppw;
  for (Scheme s : cfg.schemes) {
    std::vector<double> dx, err;
    for (double ppw : cfg.ppw_list) {
      ManufacturedOptions o = options_from(cfg, s, ppw, cfl);
      std::ostringstream tag;
      tag << "converge_" << to_string(s) << "_ppw" << ppw;
      o.csv_path = run_csv_path(cfg, tag.str());
      ManufacturedResult r = run_manufactured(o);
      if (!r.failure.empty()) throw std::runtime_error(to_string(s) + " run failed: " + r.failure);
      dx.push_back(2.0 * kPi / r.ppw);
      err.push_back(r.rel_total);
      by_ppw[ppw][s] = r.rel_total;
      if (r.rel_solver > r.rel_total) {
        rep.messages.push_back(to_string(s) + ": solver error above total error at PPW " + std::to_string(ppw));
      }
      rep.runs.push_back(std::move(r));
    }
    if (dx.size() >= 2) check_slope(rep, cfg, to_string(s), loglog_slope(dx, err));
  }
  for (const auto& [ppw, m] : by_ppw) {
    const auto p = m.find(Scheme::Poisson), c = m.find(Scheme::CrankNicolson);
    if (p != m.end() && c != m.end() && p->second > c->second)
      rep.messages.push_back("Poisson error above CN error at PPW " + std::to_string(ppw));
  }
  return rep;
}

SweepReport run_stability_scan(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.source.type != "manufactured") throw std::invalid_argument("stability: needs a manufactured source");
  const double ppw = cfg.ppw_list.empty() ? 10.0 : cfg.ppw_list.front();
  SweepReport rep;
  for (Scheme s : cfg.schemes) {
    std::vector<double> dts, errs;
    for (double cfl : cfg.cfl_list) {
      ManufacturedOptions o = options_from(cfg, s, ppw, cfl);
      std::ostringstream tag;
      tag << "stability_" << to_string(s) << "_cfl" << cfl;
      o.csv_path = run_csv_path(cfg, tag.str());
      ManufacturedResult r = run_manufactured(o);
      if (!r.failure.empty() && !r.diverged) throw std::runtime_error(to_string(s) + " run failed: " + r.failure);
      if (!r.diverged) {
        dts.push_back(r.dt);
        errs.push_back(r.rel_total);
      } else {
        std::ostringstream m;
        m << to_string(s) << " diverged at CFL " << cfl << " (max |u| " << r.max_abs << ")";
        rep.messages.push_back(m.str());
      }
      rep.runs.push_back(std::move(r));
    }
    if (dts.size() >= 2) check_slope(rep, cfg, to_string(s), loglog_slope(dts, errs));
  }
  return rep;
}

SweepReport run_conservation(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.source.type != "manufactured") throw std::invalid_argument("conserve: needs a manufactured source");
  const double cfl = cfg.cfl.value_or(0.25);
  SweepReport rep;
  for (Scheme s : cfg.schemes) {
    std::vector<double> dx, energy, charge;
    for (double ppw : cfg.ppw_list) {
      ManufacturedOptions o = options_from(cfg, s, ppw, cfl);
      std::ostringstream tag;
      tag << "conserve_" << to_string(s) << "_ppw" << ppw;
      o.csv_path = run_csv_path(cfg, tag.str());
      ManufacturedResult r = run_manufactured(o);
      if (!r.failure.empty()) throw std::runtime_error(to_string(s) + " run failed: " + r.failure);
      dx.push_back(2.0 * kPi / r.ppw);
      energy.push_back(r.energy_error);
      charge.push_back(r.charge_error);
      if (r.div_b_max > 1e-12) {
        rep.passed = false;
        rep.messages.push_back(to_string(s) + ": div B above 1e-12 at PPW " + std::to_string(ppw));
      }
      rep.runs.push_back(std::move(r));
    }
    if (dx.size() >= 2) {
      check_slope(rep, cfg, to_string(s) + "_energy", loglog_slope(dx, energy));
      check_slope(rep, cfg, to_string(s) + "_charge", loglog_slope(dx, charge));
    }
  }
  return rep;
}

std::vector<CostRecord> run_performance(const RunConfig& cfg, SweepReport* report) {
  cfg.validate();
  const double cfl = cfg.cfl.value_or(0.25);
  std::vector<CostRecord> out;
  SweepReport rep;
  for (Scheme s : cfg.schemes)
    for (double ppw : cfg.ppw_list) {
      ManufacturedResult r = run_manufactured(options_from(cfg, s, ppw, cfl));
      if (!r.failure.empty()) throw std::runtime_error(to_string(s) + " run failed: " + r.failure);
      CostRecord c;
      c.scheme = s;
      c.ppp = r.ppp;
      c.dim = r.dim;
      c.n1 = r.n1;
      c.n2 = r.n2;
      c.mvbp = r.mvbp_counted;
      c.lfops = lfops(c.ppp, c.mvbp, c.dim);
      if (r.mvbp_mismatches > 0 || r.counter_mismatches > 0) {
        rep.passed = false;
        rep.messages.push_back(to_string(s) + ": instrumented products disagree with the cost formulas");
      }
      out.push_back(c);
      rep.runs.push_back(std::move(r));
    }
  if (report) *report = std::move(rep);
  return out;
}

Json BeamReport::to_json() const {
  return {{"times", times},
          {"residual", residual},
          {"residual_periods", residual_periods},
          {"snapshots", snapshots},
          {"dim", dim},
          {"seconds", seconds},
          {"frequency_residual", frequency_residual},
          {"frequency_direct", frequency_direct}};
}

std::string write_snapshot(const std::string& path, const std::string& field, const TensorSpace& space,
                           const Eigen::VectorXd& data, double t, const Json& extra) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  const std::string bin = path + ".bin";
  std::ofstream f(bin, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + bin);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  Json h = extra;
  h["field"] = field;
  h["form_degree"] = space.form_degree();
  h["time"] = t;
  h["dtype"] = "float64";
  h["layout"] = "row-major (i*ny + j)*nz + k, components stacked";
  h["length"] = data.size();
  Json comps = Json::array();
  for (int c = 0; c < space.n_components(); ++c)
    comps.push_back({{"offset", space.offset(c)}, {"shape", space.component(c).shape()}});
  h["components"] = comps;
  write_json(path + ".json", h);
  return bin;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

namespace {

FrequencySolution frequency_for(const RunConfig& cfg, const SystemOperators& ops) {
  const PlasmaProfile prof = make_profile(cfg);
  const CSpMat eps = assemble_dielectric_mass(prof, ops.complex->V(1), cfg.quad_points);
  const FrequencySystem sys = assemble_frequency_system(ops, eps);
  FrequencyOptions fo;
  fo.tol = std::max(cfg.solver.tol, 1e-10);
  return solve_frequency(sys, fo);
}

void write_complex(const std::string& base, const std::string& name, const TensorSpace& space, const CVector& v,
                   std::vector<std::string>& written) {
  written.push_back(write_snapshot(base + "_re", name + ".re", space, v.real(), 0.0));
  written.push_back(write_snapshot(base + "_im", name + ".im", space, v.imag(), 0.0));
}

}  // namespace

BeamReport run_beam_2d(const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const DeRhamComplex cx = build_complex(cfg.n_cells, cfg.degrees, cfg.periodic, cfg.domain);
  const double dt = cfg.dt();
  const PlasmaProfile prof = make_profile(cfg);
  const SystemOperators ops = assemble_system(cx, prof, make_source(cfg, dt), cfg.quad_points);
  ensure_dir(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);

  BeamReport rep;
  rep.dim = ops.dim_E();
  std::optional<HarmonicResidual> hr;
  if (cfg.frequency) {
    const FrequencySolution fs = frequency_for(cfg, ops);
    rep.frequency_residual = fs.residual;
    rep.frequency_direct = fs.direct;
    write_complex((dir / "freq_E").string(), "E_hat", cx.V(1), fs.E_hat, rep.snapshots);
    hr.emplace(ops, fs.E_hat);
  }

  SchemeConfig sc;
  sc.scheme = cfg.schemes.front();
  sc.dt = dt;
  sc.solver = cfg.solver;
  Integrator integ(ops, sc);
  StateU u = StateU::zeros(ops);
  const int n_steps = static_cast<int>(std::lround(cfg.n_periods * 2.0 * kPi / dt));
  const int per_period = static_cast<int>(std::lround(2.0 * kPi / dt));

  CsvWriter csv({"t", "H", "Q", "divB_max", "boundary_dissipation", "source_power", "R", "n1", "n2", "mvbp"});
  std::vector<double> snaps = cfg.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  const auto record = [&](double n1, double n2, double cost) {
    const DiagnosticRecord d = diagnose(u, ops);
    double R = std::numeric_limits<double>::quiet_NaN();
    if (hr) {
      R = (*hr)(u.E, u.t);
      rep.times.push_back(u.t);
      rep.residual.push_back(R);
    }
    rep.diagnostics.push_back(d);
    csv.add_row({d.t, d.hamiltonian, d.total_charge, d.div_b_max, d.boundary_dissipation, d.source_power, R, n1, n2,
                 cost});
    while (next_snap < snaps.size() && u.t >= snaps[next_snap] - 0.5 * dt) {
      std::ostringstream base;
      base << "snap_t" << std::fixed << std::setprecision(2) << u.t;
      const std::string b = (dir / base.str()).string();
      rep.snapshots.push_back(write_snapshot(b + "_E", "E", cx.V(1), u.E, u.t));
      rep.snapshots.push_back(write_snapshot(b + "_B", "B", cx.V(2), u.B, u.t));
      rep.snapshots.push_back(write_snapshot(b + "_Y", "Y", cx.V(1), u.Y, u.t));
      ++next_snap;
    }
  };
  record(0.0, 0.0, 0.0);
  if (hr) rep.residual_periods.push_back(rep.residual.back());
  for (int n = 1; n <= n_steps; ++n) {
    const StepRecord rec = integ.step(u);
    if (!u.finite()) throw std::runtime_error("beam2d: non-finite state at step " + std::to_string(n));
    const auto [n1, n2] = step_iterations(sc.scheme, rec);
    record(n1, n2, mvbp_counted(sc.scheme, rec));
    if (hr && per_period > 0 && n % per_period == 0) rep.residual_periods.push_back(rep.residual.back());
  }
  csv.write((dir / "beam2d.csv").string());
  rep.seconds = seconds_since(t0);
  return rep;
}

FrequencySolution run_freqsolve(const RunConfig& cfg, std::vector<std::string>* written) {
  cfg.validate();
  const DeRhamComplex cx = build_complex(cfg.n_cells, cfg.degrees, cfg.periodic, cfg.domain);
  const SystemOperators ops = assemble_system(cx, make_profile(cfg), make_source(cfg, cfg.dt()), cfg.quad_points);
  FrequencySolution fs = frequency_for(cfg, ops);
  std::vector<std::string> files;
  const std::filesystem::path dir(cfg.output_dir);
  ensure_dir(cfg.output_dir);
  write_complex((dir / "freq_E").string(), "E_hat", cx.V(1), fs.E_hat, files);
  write_complex((dir / "freq_B").string(), "B_hat", cx.V(2), fs.B_hat, files);
  write_complex((dir / "freq_Y").string(), "Y_hat", cx.V(1), fs.Y_hat, files);
  if (written) *written = files;
  return fs;
}

}  // namespace coldplasma
