#include "doctest.h"
#include "krf/picard.hpp"

#include <cmath>

using namespace krf;

namespace {

Rational q(long n, long d = 1) { return Rational(n, d); }

// Oracle: evaluate (A.C)/(-K.C) over the Mori generators directly from the
// intersection matrix, without nef_threshold.
Rational threshold_by_enumeration(const DivisorClass& A, const SurfaceModel& s) {
  bool have = false;
  Rational best;
  for (const auto& c : s.curve_basis) {
    Rational kc = 0, ac = 0;
    for (std::size_t i = 0; i < s.picard_rank(); ++i)
      for (std::size_t j = 0; j < s.picard_rank(); ++j) {
        kc += s.canonical_class[i] * s.intersection_matrix[i][j] * c.cls[j];
        ac += A[i] * s.intersection_matrix[i][j] * c.cls[j];
      }
    if (kc >= 0) continue;
    const Rational ratio = ac / (-kc);
    if (!have || ratio < best) best = ratio;
    have = true;
  }
  REQUIRE(have);
  return best;
}

}  // namespace

TEST_CASE("rationals parse and print") {
  CHECK(parse_rational("3/6") == q(1, 2));
  CHECK(parse_rational(" -4 ") == q(-4));
  CHECK(to_string(q(-6, 4)) == "-3/2");
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("1.5"), std::invalid_argument);
}

TEST_CASE("intersection pairing on F1") {
  const auto s = hirzebruch(1);
  const DivisorClass H{q(1), q(0)}, E{q(0), q(1)};
  CHECK(intersect(H, H, s) == 1);
  CHECK(intersect(E, E, s) == -1);
  CHECK(intersect(H, E, s) == 0);
  const DivisorClass A{q(4), q(-1)};
  CHECK(intersect(A, E, s) == 1);
  CHECK(intersect(A, H - E, s) == 3);
  CHECK_THROWS_AS(intersect(DivisorClass{q(1)}, H, s), std::invalid_argument);
}

TEST_CASE("zero canonical class on the torus pairs to zero") {
  const auto t = torus(2);
  CHECK(intersect(t.canonical_class, DivisorClass{q(7, 3)}, t) == 0);
  CHECK_THROWS(torus(3));
}

TEST_CASE("Hirzebruch catalog relations") {
  for (int k = 1; k <= 4; ++k) {
    const auto s = hirzebruch(k);
    const auto& E = s.curve_basis[0].cls;
    const auto& F = s.curve_basis[1].cls;
    CHECK(intersect(E, E, s) == -k);
    CHECK(intersect(F, F, s) == 0);
    CHECK(intersect(E, F, s) == 1);
    // adjunction: K.C + C.C = -2 for rational curves
    CHECK(intersect(s.canonical_class, E, s) + intersect(E, E, s) == -2);
    CHECK(intersect(s.canonical_class, F, s) + intersect(F, F, s) == -2);
    CHECK(intersect(s.canonical_class, s.canonical_class, s) == 8);
  }
}

TEST_CASE("nef tests on F1") {
  const auto s = hirzebruch(1);
  CHECK(is_nef(DivisorClass{q(1), q(0)}, s));
  CHECK(is_nef(DivisorClass{q(2), q(-1)}, s));
  CHECK_FALSE(is_nef(DivisorClass{q(1), q(-2)}, s));
  CHECK_FALSE(is_nef(s.canonical_class, s));
  CHECK(intersect(s.canonical_class, s.curve_basis[1].cls, s) == -2);
}

TEST_CASE("nef thresholds match generator enumeration") {
  const auto f1 = hirzebruch(1);
  const DivisorClass A1{q(4), q(-1)}, A2{q(2), q(-1)};
  CHECK(*nef_threshold(A1, f1).value == 1);
  CHECK(nef_threshold(A1, f1).singular_time() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(*nef_threshold(A2, f1).value == q(1, 2));
  CHECK(nef_threshold(A2, f1).singular_time() == doctest::Approx(std::log(1.5)).epsilon(1e-15));
  CHECK(*nef_threshold(DivisorClass{q(1)}, projective_plane()).value == q(1, 3));
  CHECK(nef_threshold(DivisorClass{q(1)}, torus(2)).infinite());
  CHECK(std::isinf(nef_threshold(DivisorClass{q(5, 2)}, torus(2)).singular_time()));

  for (int a = 2; a <= 9; ++a)
    for (int b = 1; b < a; ++b) {
      const DivisorClass A{q(a), q(-b)};
      CHECK(*nef_threshold(A, f1).value == threshold_by_enumeration(A, f1));
    }
  CHECK_THROWS_AS(nef_threshold(DivisorClass{q(1), q(0)}, f1), std::invalid_argument);
  CHECK_THROWS_AS(nef_threshold(DivisorClass{q(1), q(-2)}, f1), std::invalid_argument);
}

TEST_CASE("nef threshold is scale equivariant and sharp") {
  const auto f1 = hirzebruch(1);
  for (int a = 2; a <= 7; ++a)
    for (int b = 1; b < a; ++b) {
      const DivisorClass A{q(a), q(-b)};
      const Rational r = *nef_threshold(A, f1).value;
      for (const Rational m : {q(1, 3), q(2), q(7, 5)}) CHECK(*nef_threshold(m * A, f1).value == m * r);
      CHECK(is_nef(A + r * f1.canonical_class, f1));
      CHECK_FALSE(is_nef(A + (r + q(1, 1000)) * f1.canonical_class, f1));
      for (const Rational s : {q(0), r / 2, r - q(1, 1000)}) CHECK(is_nef(A + s * f1.canonical_class, f1));
    }
}

TEST_CASE("contraction classification") {
  const auto f1 = hirzebruch(1);
  SUBCASE("blow-down of the exceptional curve") {
    const auto info = classify_contraction(DivisorClass{q(4), q(-1)}, f1);
    CHECK(info.kind == ContractionKind::divisorial);
    CHECK(*info.semiample == DivisorClass{q(1), q(0)});
    CHECK(info.contracted_ray->label == "E");
    REQUIRE(info.discrepancy);
    CHECK(*info.discrepancy == 1);
    CHECK(intersect(*info.semiample, info.contracted_ray->cls, f1) == 0);
    CHECK(is_nef(*info.semiample, f1));
  }
  SUBCASE("ruling to P1") {
    const auto info = classify_contraction(DivisorClass{q(2), q(-1)}, f1);
    CHECK(info.kind == ContractionKind::fiber_type);
    CHECK(*info.semiample == DivisorClass{q(1, 2), q(-1, 2)});
    CHECK(info.contracted_ray->label == "F");
    CHECK_FALSE(info.discrepancy);
  }
  SUBCASE("P2 collapses to a point") {
    const auto info = classify_contraction(DivisorClass{q(1)}, projective_plane());
    CHECK(info.kind == ContractionKind::point_collapse);
    CHECK(info.semiample->is_zero());
  }
  SUBCASE("torus needs no contraction") {
    const auto info = classify_contraction(DivisorClass{q(1)}, torus(2));
    CHECK(info.kind == ContractionKind::none_needed);
    CHECK_FALSE(info.semiample);
  }
  SUBCASE("higher Hirzebruch surfaces only contract the ruling") {
    const auto f2 = hirzebruch(2);
    const auto info = classify_contraction(DivisorClass{q(3), q(-1)}, f2);
    CHECK(info.kind == ContractionKind::fiber_type);
  }
}

TEST_CASE("class path") {
  const auto f1 = hirzebruch(1);
  const DivisorClass A{q(4), q(-1)};
  const auto at0 = class_path(A, f1, 0.0);
  CHECK(at0[0] == 4.0);
  CHECK(at0[1] == -1.0);
  const auto atT = class_path(A, f1, std::log(2.0));
  CHECK(atT[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(atT[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

  SUBCASE("b(T) vanishes and the decomposition is exact") {
    for (int a = 2; a <= 7; ++a)
      for (int b = 1; b < a; ++b) {
        const DivisorClass Ab{q(a), q(-b)};
        CHECK(class_path_affine(Ab, f1) == class_path_via_semiample(Ab, f1));
        const Rational r = *nef_threshold(Ab, f1).value;
        const double T = std::log1p(to_double(r));
        CHECK((to_double(r) + 1.0) * std::exp(-T) - 1.0 == doctest::Approx(0.0).scale(1.0));
      }
  }

  SUBCASE("A(t) stays ample before T and annihilates the ray at T") {
    for (const auto& A2 : {DivisorClass{q(4), q(-1)}, DivisorClass{q(2), q(-1)}}) {
      const auto info = classify_contraction(A2, f1);
      const double T = info.threshold.singular_time();
      for (int i = 0; i < 100; ++i) {
        const double t = T * i / 100.0;
        const auto At = class_path(A2, f1, t);
        for (const auto& c : f1.curve_basis) CHECK(intersect(At, c.cls.to_doubles(), f1) > 0.0);
        CHECK(intersect(At, At, f1) > 0.0);
      }
      const auto AT = class_path(A2, f1, T);
      CHECK(std::abs(intersect(AT, info.contracted_ray->cls.to_doubles(), f1)) < 1e-14);
    }
  }
}

TEST_CASE("surface names and class parsing") {
  CHECK(surface_from_name("F1").name() == "F1");
  CHECK(surface_from_name("Hirzebruch3").index == 3);
  CHECK(surface_from_name("T2").kind == SurfaceKind::torus);
  CHECK_THROWS_AS(surface_from_name("K3"), std::invalid_argument);
  const auto f1 = hirzebruch(1);
  CHECK(parse_class("4,-1", f1) == DivisorClass{q(4), q(-1)});
  CHECK(parse_class("3/2, -1/2", f1) == DivisorClass{q(3, 2), q(-1, 2)});
  CHECK_THROWS_AS(parse_class("1", f1), std::invalid_argument);
  CHECK(format_class(DivisorClass{q(4), q(-1)}, f1.basis_labels) == "4H - E");
  CHECK(format_class(DivisorClass{q(-1, 2), q(0)}, f1.basis_labels) == "-1/2H");
}
