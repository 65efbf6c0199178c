#include "doctest.h"
#include "krf/flow.hpp"

#include <cmath>
#include <random>

using namespace krf;

namespace {

Scenario divisorial(int N) { return build_scenario(hirzebruch(1), DivisorClass({4, -1}), RhoGrid(15.0, N)); }
Scenario fiber(int N) { return build_scenario(hirzebruch(1), DivisorClass({2, -1}), RhoGrid(15.0, N)); }
Scenario flat_torus(int N = 64) { return build_scenario(torus(2), DivisorClass({1}), RhoGrid(8.0, N, true)); }

double torus_u(double t) { return 2.0 * (1.0 - t - std::exp(-t)); }
double torus_v(double t) { return 2.0 * std::expm1(-t); }

// Bounded gauge with h' -> 0 at both ends: c log((1 + e^{x - s1}) / (1 + e^{x - s2})).
Profile bounded_gauge(const RhoGrid& grid, double c, double s1, double s2) {
  return Profile::sample(grid, [=](double x) {
    auto softplus = [](double y) { return y > 0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y)); };
    return c * (softplus(x - s1) - softplus(x - s2));
  });
}

double metric_distance(const Snapshot& a, const Snapshot& b) {
  return std::max((a.slope - b.slope).sup_norm(), (a.curvature - b.curvature).sup_norm());
}

}  // namespace

TEST_CASE("flow config validation") {
  FlowConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dt_min = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FlowConfig{};
  cfg.positivity_floor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FlowConfig{};
  cfg.newton_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(parse_scheme("explicit_rk4") == Scheme::explicit_rk4);
  CHECK_THROWS_AS(parse_scheme("euler"), std::invalid_argument);
  CHECK(parse_termination(to_string(Termination::volume_drift)) == Termination::volume_drift);
}

TEST_CASE("initial state") {
  const auto sc = divisorial(512);
  const auto s = initial_state(sc, FlowConfig::defaults_for(sc));
  CHECK(s.u.sup_norm() == 0.0);
  CHECK((s.v - sc.f).sup_norm() <= 1e-12);
  CHECK(s.phi_residual <= 1e-6);
  CHECK(gauge_change(s.u, sc.f, 0.0) == s.u);
  CHECK(gauge_change(sc.f, Profile(sc.grid), 0.7) == sc.f);
}

TEST_CASE("torus closed form") {
  const auto sc = flat_torus();
  FlowConfig cfg = FlowConfig::defaults_for(sc);
  REQUIRE(cfg.scheme == Scheme::explicit_rk4);
  cfg.t_end = 1.0;
  const auto run = run_flow(sc, cfg);
  CHECK(run.termination == Termination::reached_t_end);
  for (const auto& snap : run.snapshots) {
    CHECK((snap.u + (-torus_u(snap.t))).sup_norm() <= 1e-6);
    CHECK((snap.v + (-torus_v(snap.t))).sup_norm() <= 1e-6);
  }
  CHECK(run.t_numeric == 1.0);
  for (const auto& rec : run.steps) CHECK(rec.phi_residual <= 1e-8);

  SUBCASE("implicit Euler is first order on the torus") {
    cfg.scheme = Scheme::backward_euler_newton;
    const auto be = run_flow(sc, cfg);
    const double err = (be.terminal.u + (-torus_u(1.0))).sup_norm();
    CHECK(err <= 1e-4);
    CHECK(err >= 1e-7);
  }
}

TEST_CASE("torus gauge invariance exercises the periodic solver") {
  const auto sc = flat_torus(128);
  const auto h = Profile::sample(sc.grid, [](double x) { return 0.2 * std::cos(2.0 * M_PI * x / 16.0); });
  FlowConfig cfg = FlowConfig::defaults_for(sc);
  cfg.scheme = Scheme::backward_euler_newton;
  cfg.t_end = 1.0;
  const auto plain = run_flow(sc, cfg);
  const auto gauged = run_flow(with_gauge(sc, h), cfg);
  const auto& a = plain.snapshot_at(0.5);
  const auto& b = gauged.snapshot_at(0.5);
  CHECK(metric_distance(a, b) <= 1e-4);
  CHECK((b.u - gauge_change(a.u, h, 0.5)).sup_norm() <= 1e-4);
  CHECK(b.u.max() - b.u.min() > 1e-2);
}

TEST_CASE("divisorial run") {
  const auto sc = divisorial(1024);
  const auto cfg = FlowConfig::defaults_for(sc);
  const auto run = run_flow(sc, cfg);
  const double T = std::log(2.0);
  CHECK(run.termination == Termination::degenerate_margin);
  CHECK(std::abs(run.t_numeric - T) <= 0.05);

  double worst_class = 0.0;
  double t_prev = -1.0;
  for (const auto& rec : run.steps) {
    CHECK(rec.t > t_prev);
    t_prev = rec.t;
    const auto expected = class_path(sc.ample, sc.surface, rec.t);
    for (std::size_t i = 0; i < expected.size(); ++i)
      worst_class = std::max(worst_class, std::abs(rec.class_coeffs[i] - expected[i]));
    if (rec.t < run.t_numeric) CHECK(rec.det_min > 0.0);
    CHECK(rec.phi_residual <= 1e-2);
  }
  CHECK(worst_class <= 1e-3);

  // volume identity at T/2
  const auto& half = run.snapshot_at(T / 2);
  FlowState s{half.t, half.u, half.v, half.metric(1, Chart::hirzebruch), 0.0, 0, false, 0.0, 0};
  CHECK(volume_identity_residual(s, sc) <= 1e-3);

  // the exceptional end degenerates first
  CHECK(run.terminal.slope.argmin() == 0);
}

TEST_CASE("fiber run collapses the fibers") {
  const auto sc = fiber(512);
  const auto run = run_flow(sc, FlowConfig::defaults_for(sc));
  CHECK(run.termination == Termination::degenerate_margin);
  CHECK(std::abs(run.t_numeric - std::log(1.5)) <= 0.05);
  CHECK(run.terminal.curvature.max() <= 0.05 * sc.g0.curvature().max());
  CHECK(run.terminal.slope.min() > 0.1);
}

TEST_CASE("resolution convergence of u at T - 0.1") {
  const double t = std::log(2.0) - 0.1;
  std::vector<Profile> u;
  for (int N : {512, 1024, 2048}) {
    const auto sc = divisorial(N);
    FlowConfig cfg = FlowConfig::defaults_for(sc);
    cfg.t_end = t;
    u.push_back(run_flow(sc, cfg).snapshot_at(t).u);
  }
  const double coarse = sup_distance(u[0], u[1]);
  const double fine = sup_distance(u[1], u[2]);
  MESSAGE("u differences " << coarse << " -> " << fine);
  CHECK(fine * 3.0 <= coarse);
}

TEST_CASE("gauge invariance of the metric") {
  const auto sc = divisorial(512);
  FlowConfig cfg = FlowConfig::defaults_for(sc);
  cfg.t_end = 0.5;
  const auto plain = run_flow(sc, cfg);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amp(-0.5, 0.5), lo(-6.0, 0.0), width(1.0, 6.0);
  for (int trial = 0; trial < 3; ++trial) {
    const double s1 = lo(rng);
    const auto h = bounded_gauge(sc.grid, amp(rng), s1, s1 + width(rng));
    const auto gauged = run_flow(with_gauge(sc, h), cfg);
    const auto& a = plain.snapshot_at(0.5);
    const auto& b = gauged.snapshot_at(0.5);
    CHECK(metric_distance(a, b) <= 1e-4);
    CHECK((b.u - gauge_change(a.u, h, 0.5)).sup_norm() <= 1e-4);
  }
}

TEST_CASE("rescaled runs") {
  const auto sc = divisorial(512);
  const auto cfg = FlowConfig::defaults_for(sc);
  SUBCASE("K = 1 is the identity") {
    const auto rep = rescaled_run(Rational(1), sc, cfg, 4);
    CHECK(rep.defect <= 1e-12);
  }
  SUBCASE("K = 2") {
    const auto rep = rescaled_run(Rational(2), sc, cfg);
    CHECK(rep.defect <= 1e-3);
    CHECK(std::abs(rep.t_numeric_rescaled - std::log(3.0)) <= 0.05);
    CHECK(rep.samples.size() == 10);
  }
  SUBCASE("K = 1/2 and K = 5") {
    for (const char* K : {"1/2", "5"}) {
      const auto rep = rescaled_run(parse_rational(K), sc, cfg, 5);
      CHECK_MESSAGE(rep.defect <= 1e-3, "K = " << K << " defect " << rep.defect);
    }
  }
  CHECK(rescale_time(2.0, 0.0) == 0.0);
  CHECK(rescale_factor(2.0, 0.0) == 2.0);
}

TEST_CASE("stepping a degenerate state is a logic error") {
  const auto sc = divisorial(256);
  const auto cfg = FlowConfig::defaults_for(sc);
  auto s = initial_state(sc, cfg);
  s.degenerate = true;
  CHECK_THROWS_AS(step(s, cfg, sc, 0.1), std::logic_error);
}
