#include "krf/ansatz.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace krf {

namespace {

constexpr double kClassTolerance = 1e-3;

void require_same_chart(const InvariantForm& a, const InvariantForm& b) {
  if (a.chart != b.chart || a.k != b.k) throw std::invalid_argument("forms belong to different models");
}

Profile constant_profile(const RhoGrid& grid, double c) { return Profile(grid, c); }

std::string format_vector(const std::vector<double>& v) {
  std::ostringstream out;
  out.precision(8);
  out << "(";
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ")";
  return out.str();
}

void require_class(const InvariantForm& form, const DivisorClass& expected, const SurfaceModel& surface,
                   const char* what) {
  const auto measured = class_of(form, surface);
  const auto target = expected.to_doubles();
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (std::abs(measured[i] - target[i]) > kClassTolerance) {
      throw std::runtime_error(std::string(what) + " has class " + format_vector(measured) + ", expected " +
                               format_vector(target) + "; pairings " +
                               format_vector(pairings_of(form, surface)));
    }
  }
}

}  // namespace

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

InvariantForm InvariantForm::closed(Profile p, int k) {
  Profile q = p.derivative();
  return InvariantForm{std::move(p), std::move(q), k, Chart::hirzebruch};
}

InvariantForm InvariantForm::zero(const RhoGrid& grid, int k, Chart chart) {
  return InvariantForm{Profile(grid), Profile(grid), k, chart};
}

double InvariantForm::closedness_defect() const {
  if (chart == Chart::flat) {
    const double mean = p.integral() / (2.0 * p.grid().half_width());
    return (p + (-mean)).sup_norm();
  }
  return (q - p.derivative()).sup_norm();
}

bool InvariantForm::is_closed(double relative_tol) const {
  const double scale = chart == Chart::flat ? p.sup_norm() : q.sup_norm();
  return closedness_defect() <= relative_tol * scale + 1e-300;
}

bool InvariantForm::nonnegative() const { return p.min() >= 0.0 && q.min() >= 0.0; }

InvariantForm& InvariantForm::operator+=(const InvariantForm& other) {
  require_same_chart(*this, other);
  p += other.p;
  q += other.q;
  return *this;
}

InvariantForm& InvariantForm::operator-=(const InvariantForm& other) {
  require_same_chart(*this, other);
  p -= other.p;
  q -= other.q;
  return *this;
}

InvariantForm& InvariantForm::operator*=(double s) {
  p *= s;
  q *= s;
  return *this;
}

MetricProfile::MetricProfile(InvariantForm form) : form_(std::move(form)) {}

MetricProfile MetricProfile::from_potential(const Profile& potential, int k) {
  return MetricProfile(form_of_potential(potential, k));
}

bool MetricProfile::positive() const { return form_.p.min() > 0.0 && form_.q.min() > 0.0; }

double MetricProfile::positivity_margin(const MetricProfile& reference) const {
  double margin = INFINITY;
  for (int j = 0; j < grid().size(); ++j) {
    margin = std::min(margin, slope()[j] / reference.slope()[j]);
    margin = std::min(margin, curvature()[j] / reference.curvature()[j]);
  }
  return margin;
}

Profile MetricProfile::volume_density() const { return hadamard(form_.p, form_.q); }

MetricProfile MetricProfile::scaled(double c) const { return MetricProfile(c * form_); }

InvariantForm form_of_potential(const Profile& potential, int k, Chart chart) {
  Profile first = potential.derivative();
  Profile second = first.derivative();
  if (chart == Chart::flat) return InvariantForm{Profile(potential.grid()), std::move(second), k, chart};
  return InvariantForm{std::move(first), std::move(second), k, chart};
}

Profile potential_of_form(const InvariantForm& form, double gauge, const Profile& density) {
  if (!form.is_closed()) {
    std::ostringstream msg;
    msg << "form is not closed: defect " << form.closedness_defect();
    throw std::invalid_argument(msg.str());
  }
  Profile potential(form.grid());
  if (form.chart == Chart::flat) {
    const double period = 2.0 * form.grid().half_width();
    Profile gradient = (form.q + (-form.q.integral() / period)).cumulative_integral();
    gradient += -gradient.integral() / period;
    potential = gradient.cumulative_integral();
  } else {
    potential = form.p.cumulative_integral();
  }
  potential += gauge - potential.weighted_mean(density);
  return potential;
}

Profile potential_of_form(const InvariantForm& form, double gauge) {
  return potential_of_form(form, gauge, constant_profile(form.grid(), 1.0));
}

std::vector<double> pairings_of(const InvariantForm& form, const SurfaceModel& surface) {
  if (surface.kind == SurfaceKind::hirzebruch) {
    if (form.chart != Chart::hirzebruch || form.k != surface.index)
      throw std::invalid_argument("form does not live on " + surface.name());
    // curve_basis order is (E, F).
    return {form.k * form.p.front(), form.p.back() - form.p.front()};
  }
  if (surface.kind == SurfaceKind::torus) {
    if (form.chart != Chart::flat) throw std::invalid_argument("form does not live on " + surface.name());
    const double period = 2.0 * form.grid().half_width();
    return {form.p.integral() / period + form.q.integral() / period};
  }
  throw std::invalid_argument("no invariant model for " + surface.name());
}

std::vector<double> class_of(const InvariantForm& form, const SurfaceModel& surface) {
  const auto m = pairings_of(form, surface);
  const std::size_t rank = surface.picard_rank();
  // B[i][j] = e_i . C_j ; solve sum_i d_i B[i][j] = m_j.
  std::vector<std::vector<double>> B(rank, std::vector<double>(rank));
  for (std::size_t i = 0; i < rank; ++i) {
    DivisorClass e = DivisorClass::zero(rank);
    std::vector<Rational> unit(rank);
    unit[i] = 1;
    e = DivisorClass(unit);
    for (std::size_t j = 0; j < rank; ++j) B[i][j] = to_double(intersect(e, surface.curve_basis[j].cls, surface));
  }
  if (rank == 1) {
    if (B[0][0] == 0.0) throw std::runtime_error("singular pairing system");
    return {m[0] / B[0][0]};
  }
  if (rank == 2) {
    const double det = B[0][0] * B[1][1] - B[1][0] * B[0][1];
    if (det == 0.0) throw std::runtime_error("singular pairing system");
    // d0*B00 + d1*B10 = m0 ; d0*B01 + d1*B11 = m1
    const double d0 = (m[0] * B[1][1] - B[1][0] * m[1]) / det;
    const double d1 = (B[0][0] * m[1] - B[0][1] * m[0]) / det;
    return {d0, d1};
  }
  throw std::runtime_error("class_of supports Picard rank <= 2");
}

InvariantForm ricci_form(const MetricProfile& g) {
  if (!g.positive()) throw std::domain_error("ricci_form: metric is not positive at every node");
  if (g.form().chart == Chart::flat) {
    const Profile log_det = g.volume_density().map([](double x) { return std::log(x); });
    return InvariantForm{Profile(g.grid()), -log_det.second_derivative(), g.k(), Chart::flat};
  }
  const int k = g.k();
  // log det g = log(U'U'') - rho + (k-2) log(1+|z|^2) + const and
  // (log U'U'')' = U''/U' + U'''/U''. U''' is the second difference of U' so
  // that no one-sided end stencil gets applied twice.
  const Profile& slope = g.slope();
  const Profile& curvature = g.curvature();
  const Profile third = slope.second_derivative();
  const double offset = 1.0 - static_cast<double>(k - 2) / k;
  Profile p(g.grid());
  for (int j = 0; j < p.size(); ++j) p[j] = offset - curvature[j] / slope[j] - third[j] / curvature[j];
  return InvariantForm::closed(std::move(p), k);
}

Profile det_ratio(const MetricProfile& g, const MetricProfile& reference) {
  return quotient(g.volume_density(), reference.volume_density());
}

double Scenario::nef_threshold() const {
  if (!finite_time()) return INFINITY;
  return to_double(*contraction.threshold.value);
}

double Scenario::b(double t) const {
  if (!finite_time()) return std::exp(-t);
  return (nef_threshold() + 1.0) * std::exp(-t) - 1.0;
}

double Scenario::b_scale() const { return finite_time() ? nef_threshold() : 1.0; }

InvariantForm Scenario::reference_form(double t) const { return g0.form() + (-std::expm1(-t)) * eta; }

std::uint64_t Scenario::hash() const {
  std::ostringstream key;
  key.precision(17);
  key << surface.name() << '|';
  for (const auto& c : ample.coeffs()) key << to_string(c) << ',';
  key << '|' << grid.half_width() << '|' << grid.size() << '|' << grid.periodic();
  return fnv1a64(key.str());
}

Scenario build_scenario(const SurfaceModel& surface, const DivisorClass& ample, const RhoGrid& grid) {
  if (surface.kind == SurfaceKind::projective_plane)
    throw std::invalid_argument("P2 has no rotation-invariant flow model; use F1 or T2");
  ContractionInfo contraction = classify_contraction(ample, surface);

  std::optional<MetricProfile> g0;
  std::optional<InvariantForm> eta_L;
  std::optional<InvariantForm> eta;

  if (surface.kind == SurfaceKind::hirzebruch) {
    if (grid.periodic()) throw std::invalid_argument("Hirzebruch scenarios need a bounded grid");
    const int k = surface.index;
    const auto& E = surface.curve_basis[0].cls;
    const auto& F = surface.curve_basis[1].cls;
    // Logistic rescaled to run from exactly 0 to 1 over [-R, R], so the end
    // values of U0' reproduce the class pairings without truncation error.
    const double R = grid.half_width();
    const double s_lo = logistic(-R), s_span = logistic(R) - logistic(-R);
    auto step = [&](double x) { return (logistic(x) - s_lo) / s_span; };
    const double lo = to_double(intersect(ample, E, surface)) / k;
    const double hi = lo + to_double(intersect(ample, F, surface));
    g0.emplace(InvariantForm::closed(Profile::sample(grid, [&](double x) { return lo + (hi - lo) * step(x); }), k));

    // Every F_k has a K-negative fiber, so the threshold is always finite here.
    const Rational r = *contraction.threshold.value;
    const DivisorClass& L = *contraction.semiample;
    const double l_base = to_double(intersect(L, E, surface)) / k;
    const double l_fiber = to_double(intersect(L, F, surface));
    eta_L.emplace(
        InvariantForm::closed(Profile::sample(grid, [&](double x) { return l_base + l_fiber * step(x); }), k));
    const double rr = to_double(r);
    eta.emplace((1.0 / rr) * (*eta_L - (rr + 1.0) * g0->form()));
  } else {
    if (!grid.periodic()) throw std::invalid_argument("torus scenarios need a periodic grid");
    const double x = to_double(ample[0]);
    g0.emplace(InvariantForm{Profile(grid, x), Profile(grid, x), 1, Chart::flat});
    eta_L.emplace(InvariantForm::zero(grid, 1, Chart::flat));
    eta.emplace(*eta_L - g0->form());
  }

  const InvariantForm eta0 = -g0->form() - ricci_form(*g0);
  Profile density = g0->volume_density();
  Profile f = potential_of_form(eta0 - *eta, 0.0, density);

  require_class(g0->form(), ample, surface, "g0");
  require_class(*eta, surface.canonical_class - ample, surface, "eta");
  if (contraction.semiample) require_class(*eta_L, *contraction.semiample, surface, "eta_L");

  return Scenario{surface, ample, std::move(contraction), grid, std::move(*g0), std::move(*eta_L),
                  std::move(*eta), std::move(f), std::move(density), 2};
}

Scenario with_gauge(const Scenario& scenario, const Profile& h) {
  Scenario out = scenario;
  out.eta = scenario.eta - form_of_potential(h, scenario.g0.k(), scenario.g0.form().chart);
  out.f = scenario.f + h;
  return out;
}

}  // namespace krf
