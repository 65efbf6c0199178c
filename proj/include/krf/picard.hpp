#pragma once

// Exact intersection theory on the catalog surfaces: P^2, the Hirzebruch
// surfaces F_k and the principally polarized abelian surface. Every routine
// here works in exact rational arithmetic.

#include "krf/rational.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace krf {

/// A divisor class as a coefficient vector in the surface's lattice basis.
class DivisorClass {
 public:
  DivisorClass() = default;
  explicit DivisorClass(std::vector<Rational> coeffs) : coeffs_(std::move(coeffs)) {}
  DivisorClass(std::initializer_list<Rational> coeffs) : coeffs_(coeffs) {}

  static DivisorClass zero(std::size_t rank) { return DivisorClass(std::vector<Rational>(rank)); }

  std::size_t rank() const { return coeffs_.size(); }
  const std::vector<Rational>& coeffs() const { return coeffs_; }
  const Rational& operator[](std::size_t i) const { return coeffs_.at(i); }
  bool is_zero() const;

  DivisorClass& operator+=(const DivisorClass& other);
  DivisorClass& operator-=(const DivisorClass& other);
  DivisorClass& operator*=(const Rational& s);

  friend DivisorClass operator+(DivisorClass a, const DivisorClass& b) { return a += b; }
  friend DivisorClass operator-(DivisorClass a, const DivisorClass& b) { return a -= b; }
  friend DivisorClass operator*(const Rational& s, DivisorClass a) { return a *= s; }
  friend DivisorClass operator-(DivisorClass a) { return a *= Rational(-1); }
  friend bool operator==(const DivisorClass&, const DivisorClass&) = default;

  std::vector<double> to_doubles() const;

 private:
  std::vector<Rational> coeffs_;
};

/// "(4, -1)" style rendering with labelled basis, e.g. "4H - E".
std::string format_class(const DivisorClass& d, const std::vector<std::string>& labels);

enum class SurfaceKind { projective_plane, hirzebruch, torus };

struct CurveClass {
  std::string label;
  DivisorClass cls;
};

struct ExceptionalDivisor {
  std::string label;
  DivisorClass cls;
  Rational discrepancy;  // multiplicity in the relative canonical class
};

struct SurfaceModel {
  SurfaceKind kind = SurfaceKind::projective_plane;
  int index = 0;  // k for Hirzebruch(k), complex dimension for Torus(n)
  std::vector<std::string> basis_labels;
  std::vector<std::vector<Rational>> intersection_matrix;
  DivisorClass canonical_class;
  std::vector<CurveClass> curve_basis;  // generators of the Mori cone
  std::vector<ExceptionalDivisor> exceptional_data;

  std::size_t picard_rank() const { return basis_labels.size(); }
  std::string name() const;  // "P2", "F1", "T2"
};

/// P^2 with basis (H), K = -3H.
SurfaceModel projective_plane();
/// F_k with basis (H, E): H the section at infinity (H^2 = k), E the zero
/// section (E^2 = -k), H.E = 0. The fiber is F = (H - E)/k. For k = 1 this is
/// the blow-up of P^2 in a point with its usual (H, E) basis.
SurfaceModel hirzebruch(int k);
/// Principally polarized abelian surface: basis (Theta), Theta^2 = 2, K = 0.
/// Only n = 2 is a surface; other n are rejected.
SurfaceModel torus(int n);
/// Accepts "P2", "F<k>", "T<n>" (also "Torus2", "Hirzebruch1").
SurfaceModel surface_from_name(std::string_view name);

/// Parses a comma separated coefficient list, e.g. "4,-1" or "3/2,-1/2".
DivisorClass parse_class(std::string_view text, const SurfaceModel& surface);

Rational intersect(const DivisorClass& d1, const DivisorClass& d2, const SurfaceModel& surface);
double intersect(const std::vector<double>& d1, const std::vector<double>& d2, const SurfaceModel& surface);

bool is_nef(const DivisorClass& d, const SurfaceModel& surface);
/// Nakai-type test: positive on every Mori generator and positive square.
bool is_ample(const DivisorClass& d, const SurfaceModel& surface);

/// The largest s with A + sK nef; empty when K is nef.
struct NefThreshold {
  std::optional<Rational> value;

  bool infinite() const { return !value.has_value(); }
  /// log(r + 1), or +inf.
  double singular_time() const;
};

/// Throws std::invalid_argument when A is not ample (message lists the pairings).
NefThreshold nef_threshold(const DivisorClass& ample, const SurfaceModel& surface);

enum class ContractionKind { divisorial, fiber_type, point_collapse, none_needed };
std::string to_string(ContractionKind kind);

struct ContractionInfo {
  ContractionKind kind = ContractionKind::none_needed;
  std::optional<CurveClass> contracted_ray;
  std::optional<DivisorClass> semiample;  // L = A + rK
  NefThreshold threshold;
  std::optional<Rational> discrepancy;  // for divisorial contractions
};

ContractionInfo classify_contraction(const DivisorClass& ample, const SurfaceModel& surface);

/// A(t) = A + (1 - e^{-t})(K - A), real coefficients.
std::vector<double> class_path(const DivisorClass& ample, const SurfaceModel& surface, double t);

/// A class path written as constant + e^{-t} * decay, both exact.
struct AffineClassPath {
  DivisorClass constant;
  DivisorClass decay;
  friend bool operator==(const AffineClassPath&, const AffineClassPath&) = default;
};

/// A(t) expanded directly: K + e^{-t}(A - K).
AffineClassPath class_path_affine(const DivisorClass& ample, const SurfaceModel& surface);
/// A(t) expanded through (1/r)(a(t) L + b(t) A), b(t) = (r+1)e^{-t} - 1. Requires finite r.
AffineClassPath class_path_via_semiample(const DivisorClass& ample, const SurfaceModel& surface);

}  // namespace krf
