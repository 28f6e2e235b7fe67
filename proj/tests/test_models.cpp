#include <cmath>

#include "doctest.h"
#include "pfimex/models.hpp"
#include "test_util.hpp"

using namespace pfimex;
using testutil::cosine_mode;
using testutil::max_diff;
using testutil::mode_ksq;
using testutil::random_field;

namespace {

std::vector<ModelSpec> all_presets() {
  return {presets::classic_ch(0.1), presets::thin_film(0.1), presets::chvm(0.95, 0.1)};
}

double numeric_derivative(const ScalarFn& f, double u) {
  const double d = 1e-5 * std::max(1.0, std::abs(u));
  return (f(u + d) - f(u - d)) / (2.0 * d);
}

double scaled_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("preset scalar functions are mutually consistent") {
  for (const auto& m : all_presets()) {
    CAPTURE(m.name);
    const double lo = m.admissible_lo, hi = m.admissible_hi;
    for (int i = 1; i < 40; ++i) {
      const double u = lo + (hi - lo) * i / 40.0;
      CAPTURE(u);
      CHECK(scaled_gap(numeric_derivative(m.potential, u), m.potential_deriv(u)) < 1e-6);
      CHECK(scaled_gap(numeric_derivative(m.g_fun, u), m.g_deriv(u)) < 1e-6);
      // G' = M W''
      const double w2 = numeric_derivative(m.potential_deriv, u);
      CHECK(scaled_gap(m.mobility(u) * w2, m.g_deriv(u)) < 1e-5);
    }
  }
}

TEST_CASE("preset constants") {
  CHECK(presets::classic_ch(0.02).mobility(0.3) == doctest::Approx(4e-4));
  CHECK(presets::thin_film(0.1).mobility(0.5) == doctest::Approx(0.125));
  CHECK(presets::chvm(0.95, 0.1).mobility(1.0) == doctest::Approx(1.0 - 0.9025));
  CHECK(presets::chvm(0.95, 0.1).gradient_coeff == doctest::Approx(0.01));
  CHECK(presets::thin_film(0.1).gradient_coeff == 1.0);
  CHECK(presets::classic_ch(0.1).gradient_coeff == 1.0);
  CHECK(presets::thin_film(0.1).positivity_floor.has_value());
  CHECK_THROWS_AS(make_preset("nope", 0.1, 0.9), ConfigError);
  CHECK(make_preset("chvm", 0.1, 0.9).name == "chvm");
}

TEST_CASE("rhs conserves mass") {
  auto g = SpectralGrid::create({32, 32}, {6.0 * M_PI, 6.0 * M_PI});
  for (const auto& m : all_presets()) {
    CAPTURE(m.name);
    const double mean = m.name == "thin_film" ? 0.5 : 0.1;
    const Field u = random_field(g, 5, mean, 0.05);
    const Field f = eval_rhs(m, u, 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i];
    CHECK(std::abs(s / f.size()) < 1e-12 * std::max(1.0, f.max_abs()));
  }
}

TEST_CASE("rhs of a constant state vanishes") {
  auto g = SpectralGrid::create({16, 16}, {1.0, 1.0});
  for (const auto& m : all_presets()) {
    const Field u(g, m.name == "thin_film" ? 0.4 : 0.2);
    CHECK(eval_rhs(m, u, 0.0).max_abs() < 1e-12);
  }
}

TEST_CASE("linearization about a uniform state matches the dispersion relation") {
  auto g = SpectralGrid::create({32, 32}, {6.0 * M_PI, 6.0 * M_PI});
  const std::array<long, 3> mode{2, 1, 0};
  const double k2 = mode_ksq(g, mode);
  const double delta = 1e-6;
  for (const auto& m : all_presets()) {
    CAPTURE(m.name);
    const double ubar = m.name == "thin_film" ? 0.5 : 0.2;
    const Field base(g, ubar);
    const Field pert = cosine_mode(g, mode, delta, ubar);
    Field d = eval_rhs(m, pert, 0.0) - eval_rhs(m, base, 0.0);
    d *= 1.0 / delta;
    const double wpp = numeric_derivative(m.potential_deriv, ubar);
    const double rate = -m.mobility(ubar) * (wpp * k2 + m.gradient_coeff * k2 * k2);
    const Field expect = cosine_mode(g, mode, rate);
    CHECK(max_diff(d, expect) < 1e-4 * std::max(1.0, std::abs(rate)));
  }
}

TEST_CASE("forced preset makes the manufactured solution exact") {
  auto g = SpectralGrid::create({64, 64}, {2.0 * M_PI, 2.0 * M_PI});
  const ModelSpec m = presets::forced_thin_film(0.1);
  for (double t : {0.0, 0.7, 1.4}) {
    const Field u = presets::manufactured_solution(g, t);
    const Field dudt = presets::manufactured_time_derivative(g, t);
    CHECK(max_diff(eval_rhs(m, u, t), dudt) < 1e-12);
  }
  auto g3 = SpectralGrid::create({8, 8, 8}, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(presets::manufactured_solution(g3, 0.0), ConfigError);
}

TEST_CASE("manufactured time derivative is consistent") {
  auto g = SpectralGrid::create({16, 16}, {2.0 * M_PI, 2.0 * M_PI});
  const double t = 0.3, d = 1e-6;
  Field fd = presets::manufactured_solution(g, t + d) - presets::manufactured_solution(g, t - d);
  fd *= 0.5 / d;
  CHECK(max_diff(fd, presets::manufactured_time_derivative(g, t)) < 1e-8);
}

TEST_CASE("energy, mass and chemical potential of simple states") {
  auto g = SpectralGrid::create({16, 16}, {2.0, 3.0});
  const ModelSpec m = presets::chvm(0.95, 0.1);
  const Field c(g, 0.3);
  CHECK(energy(m, c) == doctest::Approx(m.potential(0.3) * 6.0));
  CHECK(mass(c) == doctest::Approx(0.3 * 6.0));
  CHECK(max_diff(chemical_potential(m, c), Field(g, m.potential_deriv(0.3))) < 1e-14);
  CHECK(mobility_max(m, Field(g, 0.0)) == doctest::Approx(1.0));

  // gradient energy of a single mode: kappa/2 * |k|^2 * amp^2/2 * volume
  const ModelSpec lin = testutil::linear_model(0.0, 1.0);
  const Field u = cosine_mode(g, {1, 2, 0}, 0.1);
  const double k2 = mode_ksq(g, {1, 2, 0});
  CHECK(energy(lin, u) == doctest::Approx(0.5 * k2 * 0.005 * 6.0).epsilon(1e-12));
}

TEST_CASE("thin film positivity is enforced") {
  auto g = SpectralGrid::create({8, 8}, {1.0, 1.0});
  const ModelSpec m = presets::thin_film(0.1);
  Field u(g, 0.5);
  u[9] = -0.01;
  try {
    eval_rhs(m, u, 0.0);
    FAIL("expected PositivityViolation");
  } catch (const PositivityViolation& e) {
    CHECK(e.index() == 9);
    CHECK(e.min_value() == doctest::Approx(-0.01));
  }
  CHECK_NOTHROW(check_positivity(presets::classic_ch(0.1), u.values()));
}

TEST_CASE("non-finite states are reported as blowup") {
  auto g = SpectralGrid::create({8, 8}, {1.0, 1.0});
  Field u(g, 0.1);
  u[0] = INFINITY;
  CHECK_THROWS_AS(eval_rhs(presets::classic_ch(0.1), u, 0.0), BlowupDetected);
}

TEST_CASE("evaluator counts evaluations") {
  auto g = SpectralGrid::create({16, 16}, {1.0, 1.0});
  RhsEvaluator ev(presets::classic_ch(0.1), g);
  const Field u = random_field(g, 1, 0.0, 0.1);
  std::vector<cplx> a(g->spectral_size()), b(g->spectral_size());
  ev.evaluate(u.values(), 0.0, a, b);
  ev.evaluate(u.values(), 0.0, a, b);
  CHECK(ev.evaluations() == 2);
  const Field f = inverse_transform(SpectralField(g, b));
  CHECK(max_diff(f, eval_rhs(presets::classic_ch(0.1), u, 0.0)) < 1e-12);
}
