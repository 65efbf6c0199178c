#include "krf/profile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace krf {

RhoGrid::RhoGrid(double half_width, int nodes, bool periodic)
    : half_width_(half_width), nodes_(nodes), periodic_(periodic) {
  if (nodes < kMinNodes)
    throw std::invalid_argument("grid needs at least " + std::to_string(kMinNodes) + " nodes, got " +
                                std::to_string(nodes));
  if (!(half_width >= kMinHalfWidth))
    throw std::invalid_argument("grid half-width must be >= 8, got " + std::to_string(half_width));
  spacing_ = periodic ? 2.0 * half_width / nodes : 2.0 * half_width / (nodes - 1);
}

std::vector<double> RhoGrid::nodes() const {
  std::vector<double> out(static_cast<std::size_t>(nodes_));
  for (int j = 0; j < nodes_; ++j) out[static_cast<std::size_t>(j)] = node(j);
  return out;
}

int RhoGrid::nearest(double rho) const {
  const long j = std::lround((rho + half_width_) / spacing_);
  return static_cast<int>(std::clamp<long>(j, 0, nodes_ - 1));
}

Profile::Profile(RhoGrid grid, double fill) : grid_(grid), values_(static_cast<std::size_t>(grid.size()), fill) {}

Profile::Profile(RhoGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_.size())
    throw std::invalid_argument("profile length " + std::to_string(values_.size()) + " does not match grid size " +
                                std::to_string(grid_.size()));
}

Profile Profile::sample(const RhoGrid& grid, const std::function<double(double)>& fn) {
  Profile p(grid);
  for (int j = 0; j < grid.size(); ++j) p[j] = fn(grid.node(j));
  return p;
}

Profile Profile::derivative() const {
  const int n = size();
  const double h = grid_.spacing();
  Profile d(grid_);
  if (grid_.periodic()) {
    for (int j = 0; j < n; ++j) d[j] = ((*this)[(j + 1) % n] - (*this)[(j - 1 + n) % n]) / (2.0 * h);
    return d;
  }
  for (int j = 1; j < n - 1; ++j) d[j] = ((*this)[j + 1] - (*this)[j - 1]) / (2.0 * h);
  d[0] = (-3.0 * (*this)[0] + 4.0 * (*this)[1] - (*this)[2]) / (2.0 * h);
  d[n - 1] = (3.0 * (*this)[n - 1] - 4.0 * (*this)[n - 2] + (*this)[n - 3]) / (2.0 * h);
  return d;
}

Profile Profile::second_derivative() const {
  const int n = size();
  const double h2 = grid_.spacing() * grid_.spacing();
  const auto& f = *this;
  Profile d(grid_);
  if (grid_.periodic()) {
    for (int j = 0; j < n; ++j) d[j] = (f[(j + 1) % n] - 2.0 * f[j] + f[(j - 1 + n) % n]) / h2;
    return d;
  }
  for (int j = 1; j < n - 1; ++j) d[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
  d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  return d;
}

double Profile::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Profile::max() const { return *std::max_element(values_.begin(), values_.end()); }
int Profile::argmin() const {
  return static_cast<int>(std::min_element(values_.begin(), values_.end()) - values_.begin());
}
int Profile::argmax() const {
  return static_cast<int>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

double Profile::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Profile::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Profile::integral() const {
  const double h = grid_.spacing();
  double sum = 0.0;
  for (double v : values_) sum += v;
  if (!grid_.periodic()) sum -= 0.5 * (values_.front() + values_.back());
  return sum * h;
}

double Profile::weighted_mean(const Profile& density) const {
  require_compatible(density);
  const double mass = density.integral();
  if (!(mass > 0.0)) throw std::invalid_argument("weighted_mean: density has no mass");
  return hadamard(*this, density).integral() / mass;
}

Profile Profile::cumulative_integral(double anchor) const {
  const double h = grid_.spacing();
  Profile out(grid_);
  out[0] = anchor;
  for (int j = 1; j < size(); ++j) out[j] = out[j - 1] + 0.5 * h * ((*this)[j - 1] + (*this)[j]);
  return out;
}

double Profile::interpolate(double rho) const {
  const int n = size();
  const double h = grid_.spacing();
  const double x = (rho + grid_.half_width()) / h;
  int base = static_cast<int>(std::floor(x)) - 1;
  if (grid_.periodic()) {
    double value = 0.0;
    for (int m = 0; m < 4; ++m) {
      double w = 1.0;
      for (int l = 0; l < 4; ++l)
        if (l != m) w *= (x - (base + l)) / static_cast<double>(m - l);
      value += w * (*this)[((base + m) % n + n) % n];
    }
    return value;
  }
  base = std::clamp(base, 0, n - 4);
  double value = 0.0;
  for (int m = 0; m < 4; ++m) {
    double w = 1.0;
    for (int l = 0; l < 4; ++l)
      if (l != m) w *= (x - (base + l)) / static_cast<double>(m - l);
    value += w * (*this)[base + m];
  }
  return value;
}

Profile Profile::map(const std::function<double(double)>& fn) const {
  Profile out(grid_);
  for (int j = 0; j < size(); ++j) out[j] = fn((*this)[j]);
  return out;
}

void Profile::require_compatible(const Profile& other) const {
  if (!(grid_ == other.grid_)) throw std::invalid_argument("profiles live on different grids");
}

Profile& Profile::operator+=(const Profile& other) {
  require_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Profile& Profile::operator-=(const Profile& other) {
  require_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Profile& Profile::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Profile& Profile::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

Profile hadamard(const Profile& a, const Profile& b) {
  a.require_compatible(b);
  Profile out(a.grid_);
  for (std::size_t i = 0; i < a.values_.size(); ++i) out.values_[i] = a.values_[i] * b.values_[i];
  return out;
}

Profile quotient(const Profile& a, const Profile& b) {
  a.require_compatible(b);
  Profile out(a.grid_);
  for (std::size_t i = 0; i < a.values_.size(); ++i) out.values_[i] = a.values_[i] / b.values_[i];
  return out;
}

double sup_distance(const Profile& a, const Profile& b) {
  const Profile& coarse = a.size() <= b.size() ? a : b;
  const Profile& fine = a.size() <= b.size() ? b : a;
  if (coarse.grid().half_width() != fine.grid().half_width())
    throw std::invalid_argument("sup_distance: grids cover different intervals");
  double worst = 0.0;
  for (int j = 0; j < coarse.size(); ++j)
    worst = std::max(worst, std::abs(coarse[j] - fine.interpolate(coarse.grid().node(j))));
  return worst;
}

}  // namespace krf
