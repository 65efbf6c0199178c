#pragma once

// Rotation-invariant (1,1)-forms on the Hirzebruch surfaces F_k in the
// symmetry variable rho (rho -> -inf is the zero section E, rho -> +inf the
// section at infinity). A form is the pair (p, q) meaning
//
//   p(rho) * k * omega_FS + q(rho) * d rho ^ d^c rho,
//
// closed iff q = p'. A Kahler metric is the form of a momentum potential U
// with p = U' > 0 and q = U'' > 0; ddc F = (F', F'').
//
// The flat torus is handled by a second chart: a function of one flat real
// coordinate contributes (0, F'') and p is a constant base direction.

#include "krf/picard.hpp"
#include "krf/profile.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace krf {

enum class Chart { hirzebruch, flat };

struct InvariantForm {
  Profile p;
  Profile q;
  int k = 1;
  Chart chart = Chart::hirzebruch;

  /// The closed form with the given base coefficient, q = p'.
  static InvariantForm closed(Profile p, int k);
  static InvariantForm zero(const RhoGrid& grid, int k, Chart chart = Chart::hirzebruch);

  const RhoGrid& grid() const { return p.grid(); }
  /// max_j |q - p'| (hirzebruch), max_j |p - mean p| (flat).
  double closedness_defect() const;
  bool is_closed(double relative_tol = 1e-6) const;
  bool nonnegative() const;

  InvariantForm& operator+=(const InvariantForm& other);
  InvariantForm& operator-=(const InvariantForm& other);
  InvariantForm& operator*=(double s);
  friend InvariantForm operator+(InvariantForm a, const InvariantForm& b) { return a += b; }
  friend InvariantForm operator-(InvariantForm a, const InvariantForm& b) { return a -= b; }
  friend InvariantForm operator*(double s, InvariantForm a) { return a *= s; }
  friend InvariantForm operator-(InvariantForm a) { return a *= -1.0; }
};

/// A Kahler metric in the ansatz: slope = U', curvature = U''.
class MetricProfile {
 public:
  explicit MetricProfile(InvariantForm form);
  static MetricProfile from_potential(const Profile& potential, int k);

  const InvariantForm& form() const { return form_; }
  const Profile& slope() const { return form_.p; }
  const Profile& curvature() const { return form_.q; }
  int k() const { return form_.k; }
  const RhoGrid& grid() const { return form_.grid(); }

  bool positive() const;
  /// min_j min(U'/U'_ref, U''/U''_ref).
  double positivity_margin(const MetricProfile& reference) const;
  /// Nodewise U' U'' (the ansatz density of the volume form, up to a constant).
  Profile volume_density() const;
  MetricProfile scaled(double c) const;

 private:
  InvariantForm form_;
};

InvariantForm form_of_potential(const Profile& potential, int k, Chart chart = Chart::hirzebruch);

/// Integrates p back to a potential, additive constant fixed so that the
/// density-weighted mean equals `gauge`. Rejects forms failing closedness.
Profile potential_of_form(const InvariantForm& form, double gauge, const Profile& density);
Profile potential_of_form(const InvariantForm& form, double gauge);

/// Pairings with the Mori generators of the surface, in curve_basis order.
std::vector<double> pairings_of(const InvariantForm& form, const SurfaceModel& surface);
/// Cohomology class reconstructed from the pairings (real coefficients).
std::vector<double> class_of(const InvariantForm& form, const SurfaceModel& surface);

/// Ric = -ddc log det g. Throws std::domain_error if g is not positive.
InvariantForm ricci_form(const MetricProfile& g);

/// det(g / g_ref) nodewise.
Profile det_ratio(const MetricProfile& g, const MetricProfile& reference);

/// Everything the flow needs about one (surface, initial class) pair.
struct Scenario {
  SurfaceModel surface;
  DivisorClass ample;
  ContractionInfo contraction;
  RhoGrid grid;
  MetricProfile g0;
  InvariantForm eta_L;  // nonnegative representative of L (of K when K is nef)
  InvariantForm eta;    // representative of K - A used in g0(t) = g0 + a(t) eta
  Profile f;            // eta_0 = eta + ddc f, eta_0 = -g0 - Ric(g0)
  Profile density;      // dV_0 in the rho variable
  int dimension = 2;

  bool finite_time() const { return !contraction.threshold.infinite(); }
  double nef_threshold() const;  // +inf when K is nef
  double singular_time() const { return contraction.threshold.singular_time(); }
  /// Scale and decay in det(g0(t)/g0) >= (b(t)/scale)^n: finite r uses
  /// b = (r+1)e^{-t} - 1 and scale r; K nef uses b = e^{-t} and scale 1.
  double b(double t) const;
  double b_scale() const;
  /// g0(t) = g0 + a(t) eta.
  InvariantForm reference_form(double t) const;
  /// Stable identity of the scenario inputs (surface, class, grid).
  std::uint64_t hash() const;
};

/// Default construction: U0' a logistic between the class slopes, eta_L the
/// canonical semipositive representative, eta = (eta_L - (r+1) g0)/r
/// (eta = eta_L - g0 when K is nef), f from the Ricci form of g0.
Scenario build_scenario(const SurfaceModel& surface, const DivisorClass& ample, const RhoGrid& grid);

/// Same flow with (eta, f) replaced by (eta - ddc h, f + h).
Scenario with_gauge(const Scenario& scenario, const Profile& h);

double logistic(double x);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace krf
