#include "doctest.h"
#include "oracles.hpp"

#include "coldplasma/studies.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace coldplasma;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("studies") {

TEST_CASE("config round-trips through JSON") {
  RunConfig c;
  c.schemes = {Scheme::CrankNicolson, Scheme::Hamiltonian};
  c.cfl.reset();
  c.ppp = 40.0;
  c.profile.preset = "vacuum";
  c.ppw_list = {7.0, 14.0};
  c.snapshot_times = {1.0, 2.5};
  const Json j = to_json(c);
  const RunConfig back = run_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.dt() == doctest::Approx(2.0 * std::numbers::pi / 40.0));
}

TEST_CASE("unknown keys and contradictory settings are rejected") {
  Json j = to_json(RunConfig{});
  j["ppw_lsit"] = {10, 20};
  CHECK_THROWS_AS(run_config_from_json(j), std::invalid_argument);

  RunConfig c;
  c.ppp = 32.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.cfl.reset();
  CHECK_NOTHROW(c.validate());
  c.n_periods = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("cells per wavelength") {
  const Box box{{Interval{0.0, 3 * std::numbers::pi}, Interval{0, 1}, Interval{0, 1}}};
  CHECK(cells_for_ppw(box, 10.0) == 15);
  CHECK(cells_for_ppw(box, 20.0) == 30);
  CHECK_THROWS_AS(cells_for_ppw(box, 0.0), std::invalid_argument);
}

TEST_CASE("gridded profiles hold omega_p squared") {
  const auto path = std::filesystem::temp_directory_path() / "coldplasma_wp2.csv";
  {
    std::ofstream out(path);
    out << "x,v\n0,0\n1,4\n";
  }
  RunConfig c;
  c.profile.preset = "file";
  c.profile.file = path.string();
  const PlasmaProfile p = make_profile(c);
  CHECK(p.omega_p(Vec3(1.0, 0.0, 0.0)) == doctest::Approx(2.0));
  CHECK(p.omega_p(Vec3(0.25, 0.0, 0.0)) == doctest::Approx(1.0));
  std::filesystem::remove(path);
  c.profile.preset = "swamp";
  CHECK_THROWS_AS(make_profile(c), std::invalid_argument);
}

TEST_CASE("short manufactured run is accurate, counted and deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "coldplasma_studies";
  std::filesystem::create_directories(dir);
  ManufacturedOptions o;
  o.polarization = Polarization::O;
  o.ppw = 10.0;
  o.n_periods = 0.5;
  o.csv_path = (dir / "a.csv").string();
  const ManufacturedResult a = run_manufactured(o);
  o.csv_path = (dir / "b.csv").string();
  const ManufacturedResult b = run_manufactured(o);
  CHECK_FALSE(a.diverged);
  CHECK(a.failure.empty());
  CHECK(a.n_cells_x == 15);
  CHECK(a.rel_total < 1e-2);
  CHECK(a.rel_solver <= a.rel_total);
  CHECK(a.mvbp_mismatches == 0);
  CHECK(a.counter_mismatches == 0);
  CHECK(a.div_b_max < 1e-12);
  CHECK(a.rel_total == b.rel_total);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary carries the build identifier") {
  CHECK_FALSE(build_id().empty());
  const auto path = std::filesystem::temp_directory_path() / "coldplasma_summary.json";
  write_json(path.string(), Json{{"build", build_id()}});
  CHECK(Json::parse(slurp(path))["build"] == build_id());
  std::filesystem::remove(path);
}

}
