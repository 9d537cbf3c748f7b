#pragma once

#include "coldplasma/derham.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace coldplasma {

using Complex = std::complex<double>;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;
using ScalarFunction = std::function<double(const Vec3&)>;

/// Normalized background parameters. Every entry is a pointwise function of position.
struct PlasmaProfile {
  ScalarFunction omega_p;
  ScalarFunction omega_c;
  VectorFunction b0;
  ScalarFunction nu_e;

  static PlasmaProfile vacuum();
  /// Constant omega_c = 0.5, b0 = e_z, nu_e = 0 and omega_p = x / 100.
  static PlasmaProfile manufactured();

  /// omega_c * b0
  Vec3 rotation(const Vec3& x) const { return omega_c(x) * b0(x); }
  /// Throws std::invalid_argument if |b0| deviates from 1 or nu_e < 0 at any sample point.
  void validate(const std::vector<Vec3>& samples) const;
};

struct StixPoint {
  Complex S{1.0, 0.0};
  Complex D{0.0, 0.0};
  Complex P{1.0, 0.0};
};

class CyclotronResonance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

StixPoint stix(double omega_p, double omega_c, double nu_e);
StixPoint stix(const PlasmaProfile& profile, const Vec3& x);

/// a x b without conjugation (Eigen's cross() conjugates complex results).
CVec3 cross(const CVec3& a, const CVec3& b);

/// eps v = S v - i D b0 x v + (P - S) b0 (b0 . v)
CVec3 dielectric_apply(const StixPoint& s, const Vec3& b0, const CVec3& v);
CMat3 dielectric_tensor(const StixPoint& s, const Vec3& b0);

enum class Polarization { O, X };

struct DispersionScan {
  std::vector<double> n2;
  std::vector<bool> cutoff;
  std::vector<bool> resonance;
};

/// Local perpendicular dispersion relation along a sequence of points.
/// cutoff[i] (resonance[i]) marks a sign change of n^2 (of S) between points i-1 and i.
DispersionScan dispersion_scan(const PlasmaProfile& profile, const std::vector<Vec3>& points, Polarization mode);

struct BeamParams {
  double w0 = 4.0 * 3.14159265358979323846;
  double y0 = 12.0 * 3.14159265358979323846;
  double z0 = 0.0;
  Vec3 e{0.0, 0.0, 1.0};
  /// Beam with a line focus (z-independent), for runs with a single periodic cell in z.
  bool ignore_z = false;

  double rayleigh_range() const { return 0.5 * w0 * w0; }
};

struct BeamFields {
  CVec3 E;
  CVec3 B;
};

CVec3 gaussian_beam_E(const BeamParams& params, const Vec3& x);
/// E from the closed form, B = -i curl E by 4th-order central differences.
BeamFields gaussian_beam_fields(const BeamParams& params, const Vec3& x, double fd_step = 1e-3);

/// 2/pi atan(t / (20 dt))
double envelope(double t, double dt);

/// Real fields of the model at one point.
struct FieldTriple {
  Vec3 E = Vec3::Zero();
  Vec3 B = Vec3::Zero();
  Vec3 Y = Vec3::Zero();
};

/// Exact time-periodic solutions of the forced model with omega_p = x/100, omega_c, b0 = e_z.
/// Forcing: a volume current in the E equation and Silver-Mueller boundary data on x faces,
/// both of the form f_R cos t + f_I sin t.
class ManufacturedSolution {
 public:
  ManufacturedSolution(Polarization mode, double omega_c = 0.5) : mode_(mode), omega_c_(omega_c) {}

  Polarization mode() const { return mode_; }
  double omega_c() const { return omega_c_; }
  static double omega_p(const Vec3& x) { return x[0] / 100.0; }
  PlasmaProfile profile() const;

  FieldTriple fields(double t, const Vec3& x) const;
  Vec3 E(double t, const Vec3& x) const { return fields(t, x).E; }
  Vec3 B(double t, const Vec3& x) const { return fields(t, x).B; }
  Vec3 Y(double t, const Vec3& x) const { return fields(t, x).Y; }

  Vec3 volume_R(const Vec3& x) const;
  Vec3 volume_I(const Vec3& x) const;
  /// Boundary data on a face with outward normal nu (only nu x s matters).
  Vec3 boundary_R(const Vec3& x, const Vec3& nu) const;
  Vec3 boundary_I(const Vec3& x, const Vec3& nu) const;

  /// 1/2 int (|E|^2 + |B|^2 + |Y|^2) over the box, by Gauss quadrature in x.
  double hamiltonian(double t, const Box& box) const;
  /// int div E over the box.
  double total_charge(double t, const Box& box) const;

 private:
  Polarization mode_;
  double omega_c_;
};

/// Scalar field sampled on a regular grid, multilinear interpolation, clamped outside.
/// CSV: header with coordinate columns among x, y, z and one value column (last).
class GriddedScalar {
 public:
  static GriddedScalar from_csv(const std::string& path);
  double operator()(const Vec3& x) const;
  int n_axes() const { return static_cast<int>(axes_.size()); }

 private:
  std::vector<int> coord_index_;
  std::vector<std::vector<double>> axes_;
  std::vector<double> values_;
};

struct Blob {
  double x = 0.0;
  double y = 0.0;
  double amplitude = 1.0;
  double width = 1.0;
};

/// omega_p^2 = scale * (x - x_lo)/L_x * sum_k a_k exp(-|r - c_k|^2 / w_k^2), with scale such
/// that the maximum over a sample grid equals peak_omega_p2.
struct BlobDensity {
  std::vector<Blob> blobs;
  double peak_omega_p2 = 1.3;

  ScalarFunction omega_p(const Box& box, int samples = 200) const;
  static BlobDensity turbulent(const Box& box);
  static BlobDensity single_below_axis(const Box& box, double beam_y);
};

}  // namespace coldplasma
