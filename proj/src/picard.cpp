#include "krf/picard.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace krf {

namespace {

void require_same_rank(const DivisorClass& a, std::size_t rank, const char* what) {
  if (a.rank() != rank) {
    std::ostringstream msg;
    msg << what << ": class has " << a.rank() << " coefficients, surface has Picard rank " << rank;
    throw std::invalid_argument(msg.str());
  }
}

std::string describe_pairings(const DivisorClass& d, const SurfaceModel& s) {
  std::ostringstream out;
  for (std::size_t i = 0; i < s.curve_basis.size(); ++i) {
    if (i) out << ", ";
    out << "D." << s.curve_basis[i].label << " = " << to_string(intersect(d, s.curve_basis[i].cls, s));
  }
  out << ", D^2 = " << to_string(intersect(d, d, s));
  return out.str();
}

}  // namespace

bool DivisorClass::is_zero() const {
  for (const auto& c : coeffs_)
    if (c != 0) return false;
  return true;
}

DivisorClass& DivisorClass::operator+=(const DivisorClass& other) {
  require_same_rank(other, rank(), "class addition");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

DivisorClass& DivisorClass::operator-=(const DivisorClass& other) {
  require_same_rank(other, rank(), "class subtraction");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

DivisorClass& DivisorClass::operator*=(const Rational& s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

std::vector<double> DivisorClass::to_doubles() const {
  std::vector<double> out;
  out.reserve(coeffs_.size());
  for (const auto& c : coeffs_) out.push_back(to_double(c));
  return out;
}

std::string format_class(const DivisorClass& d, const std::vector<std::string>& labels) {
  std::ostringstream out;
  bool first = true;
  for (std::size_t i = 0; i < d.rank(); ++i) {
    const Rational& c = d[i];
    if (c == 0) continue;
    const Rational mag = c < 0 ? Rational(-c) : c;
    if (first) {
      if (c < 0) out << "-";
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    if (mag != 1) out << to_string(mag);
    out << (i < labels.size() ? labels[i] : "e" + std::to_string(i));
    first = false;
  }
  if (first) out << "0";
  return out.str();
}

std::string SurfaceModel::name() const {
  switch (kind) {
    case SurfaceKind::projective_plane: return "P2";
    case SurfaceKind::hirzebruch: return "F" + std::to_string(index);
    case SurfaceKind::torus: return "T" + std::to_string(index);
  }
  return "?";
}

SurfaceModel projective_plane() {
  SurfaceModel s;
  s.kind = SurfaceKind::projective_plane;
  s.index = 2;
  s.basis_labels = {"H"};
  s.intersection_matrix = {{Rational(1)}};
  s.canonical_class = DivisorClass{Rational(-3)};
  s.curve_basis = {{"line", DivisorClass{Rational(1)}}};
  return s;
}

SurfaceModel hirzebruch(int k) {
  if (k < 1) throw std::invalid_argument("Hirzebruch index must be >= 1, got " + std::to_string(k));
  const Rational kk(k);
  SurfaceModel s;
  s.kind = SurfaceKind::hirzebruch;
  s.index = k;
  s.basis_labels = {"H", "E"};
  s.intersection_matrix = {{kk, Rational(0)}, {Rational(0), -kk}};
  // K = -2E - (k+2)F with F = (H - E)/k.
  s.canonical_class = DivisorClass{Rational(-(k + 2), k), Rational(2 - k, k)};
  s.curve_basis = {{"E", DivisorClass{Rational(0), Rational(1)}},
                   {"F", DivisorClass{Rational(1, k), Rational(-1, k)}}};
  if (k == 1) s.exceptional_data = {{"E", DivisorClass{Rational(0), Rational(1)}, Rational(1)}};
  return s;
}

SurfaceModel torus(int n) {
  if (n != 2) throw std::invalid_argument("only the complex 2-torus is a catalog surface, got T" + std::to_string(n));
  SurfaceModel s;
  s.kind = SurfaceKind::torus;
  s.index = n;
  s.basis_labels = {"Theta"};
  s.intersection_matrix = {{Rational(2)}};
  s.canonical_class = DivisorClass{Rational(0)};
  s.curve_basis = {{"Theta", DivisorClass{Rational(1)}}};
  return s;
}

SurfaceModel surface_from_name(std::string_view name) {
  auto suffix_int = [&](std::string_view prefix) -> std::optional<int> {
    if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
    const auto digits = name.substr(prefix.size());
    if (digits.empty()) return std::nullopt;
    int value = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') return std::nullopt;
      value = value * 10 + (c - '0');
      if (value > 1000) return std::nullopt;
    }
    return value;
  };
  if (name == "P2") return projective_plane();
  if (auto k = suffix_int("Hirzebruch")) return hirzebruch(*k);
  if (auto n = suffix_int("Torus")) return torus(*n);
  if (auto k = suffix_int("F")) return hirzebruch(*k);
  if (auto n = suffix_int("T")) return torus(*n);
  throw std::invalid_argument("unknown surface '" + std::string(name) + "' (expected P2, F<k> or T2)");
}

DivisorClass parse_class(std::string_view text, const SurfaceModel& surface) {
  std::vector<Rational> coeffs;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    coeffs.push_back(parse_rational(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  DivisorClass d(std::move(coeffs));
  require_same_rank(d, surface.picard_rank(), "class parsing");
  return d;
}

Rational intersect(const DivisorClass& d1, const DivisorClass& d2, const SurfaceModel& surface) {
  const auto rank = surface.picard_rank();
  require_same_rank(d1, rank, "intersect");
  require_same_rank(d2, rank, "intersect");
  Rational sum(0);
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < rank; ++j) sum += d1[i] * surface.intersection_matrix[i][j] * d2[j];
  return sum;
}

double intersect(const std::vector<double>& d1, const std::vector<double>& d2, const SurfaceModel& surface) {
  const auto rank = surface.picard_rank();
  if (d1.size() != rank || d2.size() != rank) throw std::invalid_argument("intersect: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < rank; ++j) sum += d1[i] * to_double(surface.intersection_matrix[i][j]) * d2[j];
  return sum;
}

bool is_nef(const DivisorClass& d, const SurfaceModel& surface) {
  for (const auto& c : surface.curve_basis)
    if (intersect(d, c.cls, surface) < 0) return false;
  return true;
}

bool is_ample(const DivisorClass& d, const SurfaceModel& surface) {
  for (const auto& c : surface.curve_basis)
    if (intersect(d, c.cls, surface) <= 0) return false;
  return intersect(d, d, surface) > 0;
}

double NefThreshold::singular_time() const {
  if (!value) return std::numeric_limits<double>::infinity();
  return std::log1p(to_double(*value));
}

NefThreshold nef_threshold(const DivisorClass& ample, const SurfaceModel& surface) {
  if (!is_ample(ample, surface))
    throw std::invalid_argument("class " + format_class(ample, surface.basis_labels) +
                                " is not ample: " + describe_pairings(ample, surface));
  NefThreshold out;
  for (const auto& c : surface.curve_basis) {
    const Rational k_dot = intersect(surface.canonical_class, c.cls, surface);
    if (k_dot >= 0) continue;
    const Rational ratio = intersect(ample, c.cls, surface) / (-k_dot);
    if (!out.value || ratio < *out.value) out.value = ratio;
  }
  return out;
}

std::string to_string(ContractionKind kind) {
  switch (kind) {
    case ContractionKind::divisorial: return "divisorial";
    case ContractionKind::fiber_type: return "fiber_type";
    case ContractionKind::point_collapse: return "point_collapse";
    case ContractionKind::none_needed: return "none_needed";
  }
  return "?";
}

ContractionInfo classify_contraction(const DivisorClass& ample, const SurfaceModel& surface) {
  ContractionInfo info;
  info.threshold = nef_threshold(ample, surface);
  if (info.threshold.infinite()) {
    info.kind = ContractionKind::none_needed;
    return info;
  }
  const Rational r = *info.threshold.value;
  const DivisorClass L = ample + r * surface.canonical_class;
  info.semiample = L;

  for (const auto& c : surface.curve_basis) {
    if (intersect(L, c.cls, surface) != 0) continue;
    info.contracted_ray = c;
    break;
  }
  if (!info.contracted_ray) throw std::logic_error("nef threshold class annihilates no Mori generator");

  if (L.is_zero()) {
    info.kind = ContractionKind::point_collapse;
    return info;
  }
  const Rational self = intersect(info.contracted_ray->cls, info.contracted_ray->cls, surface);
  if (self < 0) {
    info.kind = ContractionKind::divisorial;
    for (const auto& e : surface.exceptional_data)
      if (e.cls == info.contracted_ray->cls) info.discrepancy = e.discrepancy;
  } else if (self == 0) {
    info.kind = ContractionKind::fiber_type;
  } else {
    throw std::logic_error("contracted ray with positive self-intersection");
  }
  return info;
}

std::vector<double> class_path(const DivisorClass& ample, const SurfaceModel& surface, double t) {
  require_same_rank(ample, surface.picard_rank(), "class_path");
  const double a = -std::expm1(-t);
  const auto A = ample.to_doubles();
  const auto K = surface.canonical_class.to_doubles();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + a * (K[i] - A[i]);
  return out;
}

AffineClassPath class_path_affine(const DivisorClass& ample, const SurfaceModel& surface) {
  require_same_rank(ample, surface.picard_rank(), "class_path_affine");
  const auto& K = surface.canonical_class;
  return {K, ample - K};
}

AffineClassPath class_path_via_semiample(const DivisorClass& ample, const SurfaceModel& surface) {
  const auto threshold = nef_threshold(ample, surface);
  if (threshold.infinite()) throw std::invalid_argument("class_path_via_semiample requires a finite nef threshold");
  const Rational r = *threshold.value;
  const DivisorClass L = ample + r * surface.canonical_class;
  // a(t) = 1 - x, b(t) = (r+1)x - 1 with x = e^{-t}.
  const Rational inv_r = Rational(1) / r;
  const DivisorClass constant = inv_r * (L - ample);
  const DivisorClass decay = inv_r * ((r + 1) * ample - L);
  return {constant, decay};
}

}  // namespace krf
