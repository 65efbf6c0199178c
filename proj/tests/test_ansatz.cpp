#include "doctest.h"
#include "krf/ansatz.hpp"

#include <cmath>
#include <random>

using namespace krf;

namespace {

double sigma(double x) { return logistic(x); }

// Randomized positive momentum profile U' = a + sum_i w_i sigma(rho - c_i).
// Unit-rate logistics keep U'' ~ e^{+-rho} at the ends, i.e. the metric
// closes up smoothly over both sections.
struct LogisticMixture {
  double base;
  std::vector<double> weights, centers;

  double slope(double x) const {
    double s = base;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * sigma(x - centers[i]);
    return s;
  }
  double curvature(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double g = sigma(x - centers[i]);
      s += weights[i] * g * (1.0 - g);
    }
    return s;
  }
};

LogisticMixture random_mixture(std::mt19937_64& rng, double R) {
  std::uniform_real_distribution<double> base(0.3, 2.0), weight(0.2, 1.0), center(-0.5, 0.5);
  std::uniform_int_distribution<int> count(1, 3);
  for (;;) {
    LogisticMixture m{base(rng), {}, {}};
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      m.weights.push_back(weight(rng));
      m.centers.push_back(center(rng));
    }
    // precondition of the Ricci class property: U' has settled at both ends
    if (m.curvature(-R) <= 1e-6 && m.curvature(R) <= 1e-6) return m;
  }
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(RhoGrid(15.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(RhoGrid(4.0, 128), std::invalid_argument);
  const RhoGrid g(15.0, 2048);
  CHECK(g.node(0) == -15.0);
  CHECK(g.node(2047) == doctest::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("form_of_potential") {
  const RhoGrid grid(15.0, 2048);
  SUBCASE("constant potential") {
    const auto form = form_of_potential(Profile(grid, 3.7), 1);
    CHECK(form.p.sup_norm() < 1e-12);
    CHECK(form.q.sup_norm() < 1e-9);
  }
  SUBCASE("linear potential") {
    const auto form = form_of_potential(Profile::sample(grid, [](double x) { return x; }), 1);
    CHECK((form.p + (-1.0)).sup_norm() < 1e-10);
    CHECK(form.q.sup_norm() < 1e-8);
  }
  SUBCASE("Fubini-Study potential pulled back to F1") {
    const auto form = form_of_potential(Profile::sample(grid, [](double x) { return std::log1p(std::exp(x)); }), 1);
    const auto p_exact = Profile::sample(grid, sigma);
    const auto q_exact = Profile::sample(grid, [](double x) { return sigma(x) * (1.0 - sigma(x)); });
    CHECK((form.p - p_exact).sup_norm() < 1e-4);
    CHECK((form.q - q_exact).sup_norm() < 1e-4);
    CHECK(form.is_closed());
  }
}

TEST_CASE("potential_of_form") {
  const RhoGrid grid(15.0, 1024);
  const auto F = Profile::sample(grid, [](double x) { return std::log1p(std::exp(x)); });
  const Profile uniform(grid, 1.0);
  const double mean = F.weighted_mean(uniform);
  const auto back = potential_of_form(form_of_potential(F, 1), mean);
  CHECK((back - F).sup_norm() <= 1e-4);

  const auto zero = potential_of_form(InvariantForm::zero(grid, 1), 0.0);
  CHECK(zero.sup_norm() == 0.0);

  const auto form = form_of_potential(F, 1);
  const auto a = potential_of_form(form, 2.5);
  const auto b = potential_of_form(form, -0.75);
  CHECK(((a - b) + (-3.25)).sup_norm() < 1e-12);

  InvariantForm broken = form;
  broken.q += 0.1;
  CHECK_THROWS_AS(potential_of_form(broken, 0.0), std::invalid_argument);
}

TEST_CASE("class_of on F1") {
  const auto f1 = hirzebruch(1);
  const RhoGrid grid(15.0, 2048);
  SUBCASE("metric with slopes 1 -> 4") {
    // U' = 1 + 3 sigma; the truncation leaves 3 sigma(-15) ~ 9e-7 at the ends.
    const auto g = InvariantForm::closed(Profile::sample(grid, [](double x) { return 1.0 + 3.0 * sigma(x); }), 1);
    const auto pair = pairings_of(g, f1);
    CHECK(pair[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(pair[1] == doctest::Approx(3.0).epsilon(1e-5));
    const auto cls = class_of(g, f1);
    CHECK(cls[0] == doctest::Approx(4.0).epsilon(1e-5));
    CHECK(cls[1] == doctest::Approx(-1.0).epsilon(1e-5));
  }
  SUBCASE("constant base coefficient is H - E") {
    const auto cls = class_of(InvariantForm::closed(Profile(grid, 1.0), 1), f1);
    CHECK(cls[0] == doctest::Approx(1.0));
    CHECK(cls[1] == doctest::Approx(-1.0));
  }
  SUBCASE("zero form") {
    const auto cls = class_of(InvariantForm::zero(grid, 1), f1);
    CHECK(cls[0] == 0.0);
    CHECK(cls[1] == 0.0);
  }
  SUBCASE("wrong model is rejected") {
    CHECK_THROWS_AS(class_of(InvariantForm::zero(grid, 2), f1), std::invalid_argument);
    CHECK_THROWS_AS(class_of(InvariantForm::zero(grid, 1), projective_plane()), std::invalid_argument);
  }
}

TEST_CASE("ddc-exact forms have zero class") {
  const auto f1 = hirzebruch(1);
  const RhoGrid grid(15.0, 2048);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> amp(-2.0, 2.0), center(-4.0, 4.0), width(0.5, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a1 = amp(rng), c1 = center(rng), w1 = width(rng);
    const double a2 = amp(rng), c2 = center(rng), w2 = width(rng);
    const auto F = Profile::sample(grid, [&](double x) {
      return a1 * std::exp(-std::pow((x - c1) / w1, 2)) + a2 * std::exp(-std::pow((x - c2) / w2, 2));
    });
    const auto form = form_of_potential(F, 1);
    const auto cls = class_of(form, f1);
    const double tol = 1e-6 * form.q.sup_norm();
    CHECK(std::abs(cls[0]) <= tol);
    CHECK(std::abs(cls[1]) <= tol);
  }
}

TEST_CASE("Ricci form represents -K") {
  const auto f1 = hirzebruch(1);
  const RhoGrid grid(15.0, 2048);
  SUBCASE("reference metric of 4H - E") {
    const auto g0 =
        MetricProfile(InvariantForm::closed(Profile::sample(grid, [](double x) { return 1.0 + 3.0 * sigma(x); }), 1));
    const auto cls = class_of(ricci_form(g0), f1);
    CHECK(std::abs(cls[0] - 3.0) <= 1e-3);
    CHECK(std::abs(cls[1] + 1.0) <= 1e-3);
  }
  SUBCASE("randomized logistic mixtures") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = random_mixture(rng, 15.0);
      const auto g = MetricProfile(InvariantForm::closed(Profile::sample(grid, [&](double x) { return m.slope(x); }), 1));
      REQUIRE(g.positive());
      const auto cls = class_of(ricci_form(g), f1);
      const auto K = f1.canonical_class.to_doubles();
      CHECK(std::abs(cls[0] + K[0]) <= 1e-3);
      CHECK(std::abs(cls[1] + K[1]) <= 1e-3);
    }
  }
  SUBCASE("scaling the metric leaves the Ricci form unchanged") {
    const auto g = MetricProfile(InvariantForm::closed(Profile::sample(grid, [](double x) { return 2.0 + sigma(x); }), 1));
    const auto r1 = ricci_form(g);
    // powers of two scale without rounding, so the identity is exact
    for (double c : {4.0, 0.5}) {
      const auto r2 = ricci_form(g.scaled(c));
      CHECK((r1.p - r2.p).sup_norm() == 0.0);
      CHECK((r1.q - r2.q).sup_norm() == 0.0);
    }
    CHECK((r1.p - ricci_form(g.scaled(3.5)).p).sup_norm() < 1e-3);
  }
  SUBCASE("flat torus") {
    const RhoGrid periodic(8.0, 64, true);
    const auto g = MetricProfile(InvariantForm{Profile(periodic, 1.0), Profile(periodic, 1.0), 1, Chart::flat});
    const auto ric = ricci_form(g);
    CHECK(ric.p.sup_norm() == 0.0);
    CHECK(ric.q.sup_norm() == 0.0);
  }
  SUBCASE("degenerate metric is rejected") {
    const auto g = MetricProfile(InvariantForm::closed(Profile::sample(grid, [](double x) { return x; }), 1));
    CHECK_THROWS_AS(ricci_form(g), std::domain_error);
  }
}

TEST_CASE("det_ratio") {
  const RhoGrid grid(15.0, 1024);
  const auto form = [&](double lo, double hi, double shift) {
    return InvariantForm{Profile::sample(grid, [=](double x) { return lo + (hi - lo) * sigma(x - shift); }),
                         Profile::sample(grid, [=](double x) {
                           const double s = sigma(x - shift);
                           return (hi - lo) * s * (1.0 - s);
                         }),
                         1, Chart::hirzebruch};
  };
  const MetricProfile g(form(1.0, 4.0, 0.0));
  CHECK((det_ratio(g, g) + (-1.0)).sup_norm() < 1e-15);
  CHECK((det_ratio(g.scaled(3.0), g) + (-9.0)).sup_norm() < 1e-12);

  const MetricProfile shifted(form(1.0, 4.0, 0.7));
  const auto ratio = det_ratio(shifted, g);
  double worst = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const double x = grid.node(j);
    const double s0 = sigma(x), s1 = sigma(x - 0.7);
    const double exact = ((1.0 + 3.0 * s1) * s1 * (1.0 - s1)) / ((1.0 + 3.0 * s0) * s0 * (1.0 - s0));
    worst = std::max(worst, std::abs(ratio[j] - exact) / exact);
  }
  CHECK(worst <= 1e-6);

  const MetricProfile third(form(0.5, 2.0, -1.3));
  const auto product = hadamard(det_ratio(shifted, g), det_ratio(g, third));
  const auto direct = det_ratio(shifted, third);
  for (int j = 0; j < grid.size(); ++j) CHECK(std::abs(product[j] - direct[j]) <= 1e-12 * std::abs(direct[j]));
}

TEST_CASE("scenario construction on F1") {
  const auto f1 = hirzebruch(1);
  const RhoGrid grid(15.0, 2048);
  SUBCASE("divisorial") {
    const auto sc = build_scenario(f1, DivisorClass{Rational(4), Rational(-1)}, grid);
    const auto g0 = class_of(sc.g0.form(), f1);
    const auto L = class_of(sc.eta_L, f1);
    const auto eta = class_of(sc.eta, f1);
    CHECK(std::abs(g0[0] - 4.0) <= 1e-3);
    CHECK(std::abs(g0[1] + 1.0) <= 1e-3);
    CHECK(std::abs(L[0] - 1.0) <= 1e-3);
    CHECK(std::abs(L[1]) <= 1e-3);
    CHECK(std::abs(eta[0] + 7.0) <= 1e-3);
    CHECK(std::abs(eta[1] - 2.0) <= 1e-3);
    CHECK(sc.eta_L.nonnegative());

    const InvariantForm eta0 = -sc.g0.form() - ricci_form(sc.g0);
    const auto exact = class_of(eta0 - sc.eta, f1);
    CHECK(std::abs(exact[0]) <= 1e-3);
    CHECK(std::abs(exact[1]) <= 1e-3);
    CHECK(std::abs(sc.f.weighted_mean(sc.density)) < 1e-12);
    CHECK(sc.singular_time() == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("fiber type") {
    const auto sc = build_scenario(f1, DivisorClass{Rational(2), Rational(-1)}, grid);
    CHECK(sc.contraction.kind == ContractionKind::fiber_type);
    CHECK(sc.eta_L.nonnegative());
    CHECK(sc.eta_L.q.sup_norm() < 1e-15);
  }
  SUBCASE("positivity of g0(t) before the singular time") {
    for (const auto& A : {DivisorClass{Rational(4), Rational(-1)}, DivisorClass{Rational(2), Rational(-1)}}) {
      const auto sc = build_scenario(f1, A, grid);
      const double T = sc.singular_time();
      for (int i = 0; i < 200; ++i) {
        const double t = (T - 1e-3) * i / 199.0;
        CHECK(MetricProfile(sc.reference_form(t)).positive());
        // (1/r)(a eta_L + b g0) agrees with g0 + a eta
        const double a = -std::expm1(-t);
        const auto alt = (1.0 / sc.nef_threshold()) * (a * sc.eta_L + sc.b(t) * sc.g0.form());
        CHECK((alt.p - sc.reference_form(t).p).sup_norm() < 1e-12);
      }
    }
  }
  SUBCASE("torus and rejected inputs") {
    const RhoGrid periodic(8.0, 64, true);
    const auto sc = build_scenario(torus(2), DivisorClass{Rational(1)}, periodic);
    CHECK(sc.f.sup_norm() == 0.0);
    CHECK_FALSE(sc.finite_time());
    CHECK_THROWS_AS(build_scenario(torus(2), DivisorClass{Rational(1)}, grid), std::invalid_argument);
    CHECK_THROWS_AS(build_scenario(projective_plane(), DivisorClass{Rational(1)}, grid), std::invalid_argument);
    CHECK_THROWS_AS(build_scenario(f1, DivisorClass{Rational(1), Rational(0)}, grid), std::invalid_argument);
  }
}
