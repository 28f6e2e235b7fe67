#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pfimex/diagnostics.hpp"
#include "pfimex/steppers.hpp"
#include "test_util.hpp"

using namespace pfimex;
using testutil::cosine_mode;
using testutil::max_diff;
using testutil::mode_ksq;

TEST_CASE("l1 error is a cell-volume weighted sum") {
  auto g = SpectralGrid::create({8, 16}, {2.0, 3.0});
  const Field a(g, 0.25), b(g, 0.75);
  CHECK(l1_error(a, b) == doctest::Approx(0.5 * 6.0));
  CHECK(l1_error(a, a) == 0.0);
  auto other = SpectralGrid::create({8, 8}, {2.0, 3.0});
  CHECK_THROWS_AS(l1_error(a, Field(other)), GridError);
}

TEST_CASE("energy stability check") {
  RunRecord r;
  r.steps = 3;
  r.energy = {1.0, 0.9, 0.8, 0.8};
  r.max_energy_rise = -0.05;
  CHECK(check_energy_stability(r, 1e-12));

  r.energy = {1.0, 0.9, 0.9 + 1e-10, 0.8};
  CHECK_FALSE(check_energy_stability(r, 1e-12));
  CHECK(check_energy_stability(r, 1e-9));

  r.energy = {1.0, 0.9, 0.8, 0.7};
  r.max_energy_rise = 1e-6;
  CHECK_FALSE(check_energy_stability(r, 1e-12));

  r.max_energy_rise = -1.0;
  r.energy.back() = NAN;
  CHECK_FALSE(check_energy_stability(r, 1e-12));

  r.energy.back() = 0.7;
  r.failure = RunFailure{"blowup", 2, 0.2};
  CHECK_FALSE(check_energy_stability(r, 1e-12));
}

TEST_CASE("record csv keeps full precision") {
  RunRecord r;
  r.times = {0.0, 0.1};
  r.energy = {-1.0 / 3.0, -0.5};
  r.mass = {1.0, 1.0};
  r.mobility_max = {0.1, 0.2};
  r.umin = {0.0, 0.0};
  r.umax = {1.0, 1.0};
  std::ostringstream os;
  write_record_csv(r, os);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  CHECK(header == "t,energy,mass,mobility_max,umin,umax");
  std::getline(is, line);
  const double e = std::stod(line.substr(line.find(',') + 1));
  CHECK(e == -1.0 / 3.0);
}

TEST_CASE("richardson reference removes the leading error term") {
  auto g = SpectralGrid::create({16, 16}, {2.0 * M_PI, 2.0 * M_PI});
  const std::array<long, 3> mode{1, 0, 0};
  const double k2 = mode_ksq(g, mode);
  const double b = -0.2, c = 0.3;
  const ModelSpec model = testutil::linear_model(b, c);
  const double lam = -b * k2 - c * k2 * k2;
  const Field u0 = cosine_mode(g, mode, 1.0);
  const double T = 1.0, h = 0.05;
  const Field exact = cosine_mode(g, mode, std::exp(lam * T));

  const SchemeConfig be = SchemeConfig::be(1);
  const SplitConfig split = static_split(0.2);
  AdvanceOptions opt;
  opt.track_energy = false;
  const RunRecord plain = advance(be, split, model, u0, 0.0, T, h, opt);
  double mmax = 0.0;
  const Field rich = richardson_reference(model, be, split, u0, 0.0, T, h, &mmax);
  CHECK(mmax == doctest::Approx(c));
  const double e_plain = max_diff(*plain.final_state, exact);
  const double e_rich = max_diff(rich, exact);
  CHECK(e_rich < 0.1 * e_plain);

  CHECK_THROWS_AS(richardson_reference(model, be, split, u0, 0.0, T, 0.3), ConfigError);
}
