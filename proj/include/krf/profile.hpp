#pragma once

#include <functional>
#include <span>
#include <vector>

namespace krf {

/// Uniform grid in the symmetry variable rho on [-R, R].
///
/// Bounded grids have nodes rho_j = -R + 2Rj/(N-1). Periodic grids (used by
/// the flat torus model) identify -R with R and have nodes rho_j = -R + 2Rj/N.
class RhoGrid {
 public:
  static constexpr int kMinNodes = 64;
  static constexpr double kMinHalfWidth = 8.0;

  RhoGrid() : RhoGrid(kMinHalfWidth, kMinNodes) {}
  RhoGrid(double half_width, int nodes, bool periodic = false);

  double half_width() const { return half_width_; }
  int size() const { return nodes_; }
  bool periodic() const { return periodic_; }
  double spacing() const { return spacing_; }
  double node(int j) const { return -half_width_ + spacing_ * j; }
  std::vector<double> nodes() const;
  /// Index of the node nearest to rho (clamped).
  int nearest(double rho) const;

  friend bool operator==(const RhoGrid& a, const RhoGrid& b) {
    return a.half_width_ == b.half_width_ && a.nodes_ == b.nodes_ && a.periodic_ == b.periodic_;
  }

 private:
  double half_width_;
  int nodes_;
  bool periodic_;
  double spacing_;
};

/// Real function sampled on a RhoGrid.
class Profile {
 public:
  Profile() : Profile(RhoGrid()) {}
  explicit Profile(RhoGrid grid, double fill = 0.0);
  Profile(RhoGrid grid, std::vector<double> values);

  static Profile sample(const RhoGrid& grid, const std::function<double(double)>& fn);

  const RhoGrid& grid() const { return grid_; }
  int size() const { return grid_.size(); }
  double operator[](int j) const { return values_[static_cast<std::size_t>(j)]; }
  double& operator[](int j) { return values_[static_cast<std::size_t>(j)]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

  /// Second-order centered differences; one-sided second order at the ends of
  /// a bounded grid, wrap-around on a periodic grid.
  Profile derivative() const;
  /// Compact three-point second difference; one-sided second order
  /// (2f0 - 5f1 + 4f2 - f3)/h^2 at the ends of a bounded grid.
  Profile second_derivative() const;

  double min() const;
  double max() const;
  int argmin() const;
  int argmax() const;
  double sup_norm() const;
  bool all_finite() const;

  /// Trapezoid integral over the grid (full period on periodic grids).
  double integral() const;
  /// Mean with respect to a nonnegative density.
  double weighted_mean(const Profile& density) const;
  /// F(rho_j) = anchor + int_{-R}^{rho_j} this, by cumulative trapezoid.
  Profile cumulative_integral(double anchor = 0.0) const;

  /// Cubic Lagrange interpolation at an arbitrary rho inside the grid.
  double interpolate(double rho) const;

  Profile map(const std::function<double(double)>& fn) const;

  friend bool operator==(const Profile& a, const Profile& b) {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

  Profile& operator+=(const Profile& other);
  Profile& operator-=(const Profile& other);
  Profile& operator*=(double s);
  Profile& operator+=(double c);

  friend Profile operator+(Profile a, const Profile& b) { return a += b; }
  friend Profile operator-(Profile a, const Profile& b) { return a -= b; }
  friend Profile operator*(double s, Profile a) { return a *= s; }
  friend Profile operator*(Profile a, double s) { return a *= s; }
  friend Profile operator+(Profile a, double c) { return a += c; }
  friend Profile operator-(Profile a) { return a *= -1.0; }

  /// Nodewise product and quotient.
  friend Profile hadamard(const Profile& a, const Profile& b);
  friend Profile quotient(const Profile& a, const Profile& b);

 private:
  void require_compatible(const Profile& other) const;

  RhoGrid grid_;
  std::vector<double> values_;
};

Profile hadamard(const Profile& a, const Profile& b);
Profile quotient(const Profile& a, const Profile& b);

/// Sup-norm distance between profiles that may live on different grids:
/// the finer profile is interpolated onto the nodes of the coarser one.
double sup_distance(const Profile& a, const Profile& b);

}  // namespace krf
