#include "coldplasma/plasma.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace coldplasma {

namespace {

const Complex I(0.0, 1.0);

bool sign_change(double a, double b) { return (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(std::remove_if(cell.begin(), cell.end(), [](unsigned char c) { return std::isspace(c); }),
               cell.end());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

PlasmaProfile PlasmaProfile::vacuum() {
  return {[](const Vec3&) { return 0.0; }, [](const Vec3&) { return 0.0; },
          [](const Vec3&) { return Vec3(0.0, 0.0, 1.0); }, [](const Vec3&) { return 0.0; }};
}

PlasmaProfile PlasmaProfile::manufactured() { return ManufacturedSolution(Polarization::O).profile(); }

void PlasmaProfile::validate(const std::vector<Vec3>& samples) const {
  for (const Vec3& x : samples) {
    if (std::abs(b0(x).norm() - 1.0) > 1e-12) throw std::invalid_argument("PlasmaProfile: |b0| != 1");
    if (nu_e(x) < 0.0) throw std::invalid_argument("PlasmaProfile: negative collision frequency");
  }
}

StixPoint stix(double omega_p, double omega_c, double nu_e) {
  const Complex g(1.0, nu_e);
  const Complex den = g * g - omega_c * omega_c;
  const double wp2 = omega_p * omega_p;
  if (std::abs(den) < 1e-14) {
    if (wp2 == 0.0) return {};
    std::ostringstream msg;
    msg << "stix: cyclotron resonance at omega_c = " << omega_c;
    throw CyclotronResonance(msg.str());
  }
  StixPoint s;
  s.S = 1.0 - g * wp2 / den;
  s.D = omega_c * wp2 / den;
  s.P = 1.0 - wp2 / g;
  return s;
}

StixPoint stix(const PlasmaProfile& profile, const Vec3& x) {
  return stix(profile.omega_p(x), profile.omega_c(x), profile.nu_e(x));
}

CVec3 cross(const CVec3& a, const CVec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

CVec3 dielectric_apply(const StixPoint& s, const Vec3& b0, const CVec3& v) {
  const CVec3 b = b0.cast<Complex>();
  const Complex bv = b.transpose() * v;
  return s.S * v - I * s.D * cross(b, v) + (s.P - s.S) * bv * b;
}

CMat3 dielectric_tensor(const StixPoint& s, const Vec3& b0) {
  CMat3 bx;
  bx << 0.0, -b0[2], b0[1], b0[2], 0.0, -b0[0], -b0[1], b0[0], 0.0;
  const CVec3 b = b0.cast<Complex>();
  return s.S * CMat3::Identity() - I * s.D * bx + (s.P - s.S) * b * b.transpose();
}

DispersionScan dispersion_scan(const PlasmaProfile& profile, const std::vector<Vec3>& points, Polarization mode) {
  DispersionScan scan;
  std::vector<double> S;
  for (const Vec3& x : points) {
    const StixPoint s = stix(profile.omega_p(x), profile.omega_c(x), 0.0);
    const double sr = s.S.real(), dr = s.D.real(), pr = s.P.real();
    S.push_back(sr);
    scan.n2.push_back(mode == Polarization::O ? pr : sr - dr * dr / sr);
  }
  const std::size_t n = points.size();
  scan.cutoff.assign(n, false);
  scan.resonance.assign(n, false);
  for (std::size_t i = 1; i < n; ++i) {
    const bool s_flip = mode == Polarization::X && sign_change(S[i - 1], S[i]);
    scan.resonance[i] = s_flip;
    scan.cutoff[i] = !s_flip && sign_change(scan.n2[i - 1], scan.n2[i]);
  }
  return scan;
}

CVec3 gaussian_beam_E(const BeamParams& p, const Vec3& x) {
  const double xr = p.rayleigh_range();
  const double s = x[0];
  const double dy = x[1] - p.y0;
  const double dz = p.ignore_z ? 0.0 : x[2] - p.z0;
  const double r2 = dy * dy + dz * dz;
  const double w2 = p.w0 * p.w0 * (1.0 + (s / xr) * (s / xr));
  const double kappa = s / (s * s + xr * xr);
  double psi = std::atan(s / xr);
  double amp = p.w0 / std::sqrt(w2);
  if (p.ignore_z) {
    // line focus: amplitude (w0/w)^(1/2), half Gouy phase
    amp = std::sqrt(amp);
    psi *= 0.5;
  }
  const Complex phase = std::exp(Complex(-r2 / w2, s + 0.5 * kappa * r2 - psi));
  return p.e.cast<Complex>() * (amp * phase);
}

BeamFields gaussian_beam_fields(const BeamParams& params, const Vec3& x, double h) {
  // d[j] = dE/dx_j
  std::array<CVec3, 3> d;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = h;
    d[j] = (-gaussian_beam_E(params, x + 2.0 * e) + 8.0 * gaussian_beam_E(params, x + e) -
            8.0 * gaussian_beam_E(params, x - e) + gaussian_beam_E(params, x - 2.0 * e)) /
           (12.0 * h);
  }
  CVec3 curl;
  curl << d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0];
  return {gaussian_beam_E(params, x), -I * curl};
}

double envelope(double t, double dt) { return 2.0 / std::numbers::pi * std::atan(t / (20.0 * dt)); }

PlasmaProfile ManufacturedSolution::profile() const {
  const double wc = omega_c_;
  return {[](const Vec3& x) { return omega_p(x); }, [wc](const Vec3&) { return wc; },
          [](const Vec3&) { return Vec3(0.0, 0.0, 1.0); }, [](const Vec3&) { return 0.0; }};
}

FieldTriple ManufacturedSolution::fields(double t, const Vec3& x) const {
  FieldTriple f;
  const double wp = omega_p(x);
  const double s = x[0];
  if (mode_ == Polarization::O) {
    f.E = Vec3(0.0, 0.0, std::cos(s - t));
    f.B = Vec3(0.0, -std::cos(s - t), 0.0);
    f.Y = Vec3(0.0, 0.0, wp * std::sin(t - s));
  } else {
    const double wc = omega_c_;
    f.E = Vec3(-std::cos(s) * std::sin(t), -wc * std::cos(s) * std::cos(t), 0.0);
    f.B = Vec3(0.0, 0.0, -wc * std::sin(s) * std::sin(t));
    f.Y = Vec3(wp * std::cos(s) * std::cos(t), 0.0, 0.0);
  }
  return f;
}

Vec3 ManufacturedSolution::volume_R(const Vec3& x) const {
  const double wp2 = omega_p(x) * omega_p(x);
  if (mode_ == Polarization::O) return Vec3(0.0, 0.0, -wp2 * std::sin(x[0]));
  return Vec3((wp2 - 1.0) * std::cos(x[0]), 0.0, 0.0);
}

Vec3 ManufacturedSolution::volume_I(const Vec3& x) const {
  const double wp2 = omega_p(x) * omega_p(x);
  if (mode_ == Polarization::O) return Vec3(0.0, 0.0, wp2 * std::cos(x[0]));
  return Vec3::Zero();
}

Vec3 ManufacturedSolution::boundary_R(const Vec3& x, const Vec3& nu) const {
  const double nu1 = nu[0];
  if (mode_ == Polarization::O) return Vec3(0.0, 0.0, (1.0 - nu1) * std::cos(x[0]));
  return Vec3(0.0, -omega_c_ * std::cos(x[0]), 0.0);
}

Vec3 ManufacturedSolution::boundary_I(const Vec3& x, const Vec3& nu) const {
  const double nu1 = nu[0];
  if (mode_ == Polarization::O) return Vec3(0.0, 0.0, (1.0 - nu1) * std::sin(x[0]));
  return Vec3(0.0, omega_c_ * nu1 * std::sin(x[0]), 0.0);
}

double ManufacturedSolution::hamiltonian(double t, const Box& box) const {
  const double area = box[1].length() * box[2].length();
  const int cells = 64;
  std::vector<double> breaks;
  for (int k = 0; k <= cells; ++k) breaks.push_back(box[0].lo + box[0].length() * k / cells);
  const QuadratureRule rule = gauss_rule(10, breaks);
  double sum = 0.0;
  for (int k = 0; k < rule.n_cells(); ++k)
    for (int q = 0; q < rule.n_points; ++q) {
      const FieldTriple f = fields(t, Vec3(rule.points(k, q), box[1].lo, box[2].lo));
      sum += rule.weights(k, q) * (f.E.squaredNorm() + f.B.squaredNorm() + f.Y.squaredNorm());
    }
  return 0.5 * area * sum;
}

double ManufacturedSolution::total_charge(double t, const Box& box) const {
  // fields depend on x only: int div E = area * (E_x(x_hi) - E_x(x_lo))
  const double area = box[1].length() * box[2].length();
  const Vec3 lo(box[0].lo, box[1].lo, box[2].lo), hi(box[0].hi, box[1].lo, box[2].lo);
  return area * (E(t, hi)[0] - E(t, lo)[0]);
}

GriddedScalar GriddedScalar::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("GriddedScalar: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("GriddedScalar: empty file " + path);
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 2) throw std::runtime_error("GriddedScalar: need coordinate and value columns");

  GriddedScalar g;
  const std::size_t n_coords = header.size() - 1;
  for (std::size_t c = 0; c < n_coords; ++c) {
    if (header[c] == "x") g.coord_index_.push_back(0);
    else if (header[c] == "y") g.coord_index_.push_back(1);
    else if (header[c] == "z") g.coord_index_.push_back(2);
    else throw std::runtime_error("GriddedScalar: unknown coordinate column '" + header[c] + "'");
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) throw std::runtime_error("GriddedScalar: ragged row in " + path);
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(std::stod(c));
    rows.push_back(std::move(r));
  }
  g.axes_.resize(n_coords);
  for (std::size_t c = 0; c < n_coords; ++c) {
    for (const auto& r : rows) g.axes_[c].push_back(r[c]);
    std::sort(g.axes_[c].begin(), g.axes_[c].end());
    g.axes_[c].erase(std::unique(g.axes_[c].begin(), g.axes_[c].end()), g.axes_[c].end());
  }
  std::size_t total = 1;
  for (const auto& a : g.axes_) total *= a.size();
  if (total != rows.size()) throw std::runtime_error("GriddedScalar: rows do not form a full tensor grid");
  g.values_.assign(total, 0.0);
  for (const auto& r : rows) {
    std::size_t flat = 0;
    for (std::size_t c = 0; c < n_coords; ++c) {
      const auto& a = g.axes_[c];
      flat = flat * a.size() + static_cast<std::size_t>(std::lower_bound(a.begin(), a.end(), r[c]) - a.begin());
    }
    g.values_[flat] = r.back();
  }
  return g;
}

double GriddedScalar::operator()(const Vec3& x) const {
  const std::size_t n = axes_.size();
  std::vector<std::size_t> lo(n);
  std::vector<double> frac(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& a = axes_[c];
    const double v = std::clamp(x[coord_index_[c]], a.front(), a.back());
    if (a.size() == 1) {
      lo[c] = 0;
      frac[c] = 0.0;
      continue;
    }
    std::size_t i = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), v) - a.begin());
    i = std::clamp<std::size_t>(i, 1, a.size() - 1) - 1;
    lo[c] = i;
    frac[c] = (v - a[i]) / (a[i + 1] - a[i]);
  }
  double sum = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t c = 0; c < n; ++c) {
      const bool up = (corner >> c) & 1U;
      const std::size_t idx = std::min(lo[c] + (up ? 1 : 0), axes_[c].size() - 1);
      w *= up ? frac[c] : 1.0 - frac[c];
      flat = flat * axes_[c].size() + idx;
    }
    if (w != 0.0) sum += w * values_[flat];
  }
  return sum;
}

ScalarFunction BlobDensity::omega_p(const Box& box, int samples) const {
  const Interval bx = box[0];
  const auto raw = [blobs = blobs, bx](const Vec3& x) {
    double s = 0.0;
    for (const Blob& b : blobs) {
      const double r2 = (x[0] - b.x) * (x[0] - b.x) + (x[1] - b.y) * (x[1] - b.y);
      s += b.amplitude * std::exp(-r2 / (b.width * b.width));
    }
    return std::max(0.0, (x[0] - bx.lo) / bx.length()) * s;
  };
  double peak = 0.0;
  for (int i = 0; i <= samples; ++i)
    for (int j = 0; j <= samples; ++j) {
      const Vec3 x(bx.lo + bx.length() * i / samples, box[1].lo + box[1].length() * j / samples, box[2].lo);
      peak = std::max(peak, raw(x));
    }
  const double scale = peak > 0.0 ? peak_omega_p2 / peak : 0.0;
  return [raw, scale](const Vec3& x) { return std::sqrt(scale * raw(x)); };
}

BlobDensity BlobDensity::turbulent(const Box& box) {
  const double lx = box[0].length(), ly = box[1].length();
  const double x0 = box[0].lo, y0 = box[1].lo;
  BlobDensity d;
  const double rel[][4] = {{0.55, 0.30, 1.0, 0.10}, {0.65, 0.62, 0.9, 0.08}, {0.80, 0.45, 1.0, 0.12},
                           {0.75, 0.85, 0.8, 0.09}, {0.90, 0.20, 0.9, 0.10}, {0.95, 0.65, 1.0, 0.11}};
  for (const auto& r : rel) d.blobs.push_back({x0 + r[0] * lx, y0 + r[1] * ly, r[2], r[3] * std::min(lx, ly)});
  d.peak_omega_p2 = 1.3;
  return d;
}

BlobDensity BlobDensity::single_below_axis(const Box& box, double beam_y) {
  const double lx = box[0].length(), ly = box[1].length();
  BlobDensity d;
  d.blobs.push_back({box[0].lo + 0.6 * lx, beam_y - 0.06 * ly, 1.0, 0.12 * std::min(lx, ly)});
  d.peak_omega_p2 = 0.45;
  return d;
}

}  // namespace coldplasma
