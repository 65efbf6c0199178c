#include "doctest.h"
#include "krf/certificates.hpp"

#include <cmath>

using namespace krf;

namespace {

Scenario divisorial(int N) { return build_scenario(hirzebruch(1), DivisorClass({4, -1}), RhoGrid(15.0, N)); }
Scenario fiber(int N) { return build_scenario(hirzebruch(1), DivisorClass({2, -1}), RhoGrid(15.0, N)); }
Scenario flat_torus() { return build_scenario(torus(2), DivisorClass({1}), RhoGrid(8.0, 64, true)); }

// Independent closed form: with y = e^s,
// int e^s log(((r+1)e^{-s} - 1)/r) ds = G(e^t) - G(1) - log(r)(e^t - 1),
// G(y) = -(c - y) log(c - y) - y log y, c = r + 1.
double u_minus_oracle(double r, double n, double K_inf, double t) {
  const double c = r + 1.0;
  auto G = [c](double y) {
    const double w = c - y;
    return (w > 0 ? -w * std::log(w) : 0.0) - y * std::log(y);
  };
  const double y = std::exp(t);
  const double integral = G(y) - G(1.0) - std::log(r) * (y - 1.0);
  return std::exp(-t) * (n * integral + K_inf * (y - 1.0));
}

RunLedger run_default(const Scenario& sc) { return run_flow(sc, FlowConfig::defaults_for(sc)); }

}  // namespace

TEST_CASE("log b integral") {
  // int_0^{log 2} log(2e^{-t} - 1) dt = -pi^2/12
  CHECK(integrate_log_b(1.0, std::log(2.0)) == doctest::Approx(-M_PI * M_PI / 12.0).epsilon(1e-12));
  CHECK(std::isfinite(integrate_log_b(0.5, std::log(1.5))));
  CHECK(integrate_log_b(1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(integrate_log_b(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("envelope") {
  const auto sc = divisorial(512);
  const auto env = build_envelope(sc);
  CHECK(env.u_plus(0.0) == 0.0);
  CHECK(env.u_minus(0.0) == 0.0);
  CHECK(env.u_plus(std::log(2.0)) == doctest::Approx(env.K_sup / 2));
  CHECK(env.K_sup >= sc.f.max());
  CHECK(env.K_inf == sc.f.min());

  SUBCASE("sub-solution matches the closed form") {
    for (double r : {1.0, 0.5, 1.0 / 3.0}) {
      Envelope e = env;
      e.threshold = r;
      e.singular_time = std::log1p(r);
      for (int i = 1; i <= 20; ++i) {
        const double t = e.singular_time * i / 20.0;
        CHECK(e.u_minus(t) == doctest::Approx(u_minus_oracle(r, 2.0, e.K_inf, t)).epsilon(1e-10));
      }
    }
  }
  SUBCASE("envelopes solve their ODEs") {
    const double h = 1e-5;
    for (int i = 1; i < 10; ++i) {
      const double t = std::log(2.0) * i / 10.0;
      const double dplus = (env.u_plus(t + h) - env.u_plus(t - h)) / (2 * h);
      CHECK(std::abs(dplus + env.u_plus(t) - env.K_sup) <= 1e-8);
      const double dminus = (env.u_minus(t + h) - env.u_minus(t - h)) / (2 * h);
      CHECK(std::abs(dminus + env.u_minus(t) - env.log_b_term(t) - env.K_inf) <= 1e-8);
    }
  }
  SUBCASE("immortal branch") {
    const auto te = build_envelope(flat_torus());
    CHECK(te.K_sup == doctest::Approx(0.0));
    for (double t : {0.5, 1.0, 3.0}) CHECK(te.u_minus(t) == doctest::Approx(2.0 * (1.0 - t - std::exp(-t))));
  }
}

TEST_CASE("sandwich on all three scenarios") {
  for (const auto& sc : {divisorial(512), fiber(512), flat_torus()}) {
    const auto run = run_default(sc);
    const auto rec = check_sandwich(run, build_envelope(sc));
    CHECK_MESSAGE(rec.passed, sc.surface.name() << " " << format_class(sc.ample, sc.surface.basis_labels) << " margin "
                                                << rec.worst_margin);
    CHECK(rec.worst_margin >= -kSandwichSlack);
  }
}

TEST_CASE("sandwich harness self-test") {
  const auto sc = divisorial(256);
  auto run = run_default(sc);
  const auto env = build_envelope(sc);
  // initial margins are exactly zero
  RunLedger first = run;
  first.steps.resize(1);
  CHECK(check_sandwich(first, env).worst_margin == 0.0);
  for (auto& s : run.steps) {
    s.u_min *= 1.5;
    s.u_max *= 1.5;
  }
  const auto rec = check_sandwich(run, env);
  CHECK_FALSE(rec.passed);
  CHECK(rec.worst_margin < 0.0);
  run.scenario.hash ^= 1;
  CHECK_THROWS_AS(check_sandwich(run, env), std::invalid_argument);
}

TEST_CASE("v bounds") {
  SUBCASE("torus matches the closed form") {
    const auto run = run_default(flat_torus());
    for (const auto& s : run.steps) {
      CHECK(std::abs(s.v_max - 2.0 * std::expm1(-s.t)) <= 1e-6);
      CHECK(std::abs(s.v_min - 2.0 * std::expm1(-s.t)) <= 1e-6);
    }
    const auto recs = check_v_bounds(run);
    CHECK(recs[0].passed);
    CHECK(recs[1].passed);
  }
  SUBCASE("divisorial min v is resolution stable") {
    const auto coarse = run_default(divisorial(1024));
    const auto fine = run_default(divisorial(2048));
    CHECK(coarse.steps.front().v_max == coarse.steps.front().v_max);
    const auto recs = check_v_bounds(coarse, &fine);
    CHECK(recs[0].name == "v-upper");
    CHECK(recs[0].passed);
    CHECK_MESSAGE(recs[1].passed, recs[1].detail);
  }
}

TEST_CASE("metric equivalence") {
  const auto sc = divisorial(512);
  const auto run = run_default(sc);
  const auto early = equivalence_bounds(run, 0.0);
  CHECK(early.C0 == 1.0);
  CHECK(early.C1 == 1.0);
  const auto recs = check_metric_equivalence(run, sc, std::log(2.0) - 0.05);
  CHECK(recs[0].passed);
  CHECK(recs[0].worst_margin > 0.0);
  CHECK(recs[1].passed);
  CHECK_THROWS_AS(check_metric_equivalence(run, sc, std::log(2.0)), std::invalid_argument);

  SUBCASE("fiber degeneration onset") {
    const auto fsc = fiber(512);
    const auto frun = run_default(fsc);
    const double T = std::log(1.5);
    double previous = 2.0;
    for (double gap : {0.2, 0.1, 0.05, 0.02, 0.01}) {
      const double c0 = equivalence_bounds(frun, T - gap).C0;
      CHECK(c0 > 0.0);
      CHECK(c0 < previous);
      previous = c0;
    }
  }
}

TEST_CASE("determinant against the moving reference") {
  for (const auto& sc : {divisorial(512), fiber(512)}) {
    const auto run = run_default(sc);
    const double T = sc.singular_time();
    double lowest = 1.0;
    for (const auto& s : run.steps)
      if (s.t <= T - 0.05) lowest = std::min(lowest, s.det_t_min);
    CHECK(lowest > 0.0);
  }
}

TEST_CASE("certify collects every applicable check") {
  const auto sc = flat_torus();
  const auto run = run_default(sc);
  const auto report = certify(run, sc);
  CHECK(report.passed());
  CHECK(report.checks.size() == all_certificate_names().size() - 1);
  CHECK_THROWS_AS(report.check("rescale-covariance"), std::out_of_range);
  CertifyOptions opts;
  opts.enabled = {"sandwich", "rescale-covariance"};
  const auto partial = certify(run, sc, opts);
  CHECK(partial.checks.size() == 2);
  CHECK_FALSE(partial.check("rescale-covariance").passed);
  opts.enabled = {"nonsense"};
  CHECK_THROWS_AS(certify(run, sc, opts), std::invalid_argument);
}
