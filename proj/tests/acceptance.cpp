// Acceptance checks for the solver.  Prints one PASS/FAIL line per criterion;
// pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pfimex/config.hpp"
#include "pfimex/experiments.hpp"
#include "pfimex/steppers.hpp"

#ifndef PFIMEX_CONFIG_DIR
#define PFIMEX_CONFIG_DIR "configs"
#endif

using namespace pfimex;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << "[failed: " << what << "] ";
    }
  }
};

ExperimentSpec load(const std::string& name) {
  ExperimentSpec s = parse_config_file(std::string(PFIMEX_CONFIG_DIR) + "/" + name);
  s.threads = 0;
  return s;
}

std::string fmt(double v, const char* f = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Field random_field(const GridPtr& g, std::uint64_t seed, double mean, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = mean + amp * d(rng);
  return f;
}

Field mode_field(const GridPtr& g, const std::array<long, 3>& m, double amp) {
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto x = g->point(i);
    double phase = 0.0;
    for (int a = 0; a < g->dim(); ++a) phase += 2.0 * M_PI * m[a] / g->length(a) * x[a];
    f[i] = amp * std::cos(phase);
  }
  return f;
}

double mode_ksq(const GridPtr& g, const std::array<long, 3>& m) {
  double s = 0.0;
  for (int a = 0; a < g->dim(); ++a) s += std::pow(2.0 * M_PI * m[a] / g->length(a), 2);
  return s;
}

double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

const ConvergenceCurve& curve(const ConvergenceResult& r, const std::string& label) {
  for (const auto& c : r.curves) {
    if (c.label == label) return c;
  }
  throw Error("no curve " + label);
}

// 1 ------------------------------------------------------------------------

void spectral_suite(Outcome& o) {
  std::vector<GridPtr> grids;
  for (std::size_t n : {8u, 16u, 64u, 256u}) grids.push_back(SpectralGrid::create({n}, {2.0 * M_PI}));
  for (std::size_t n : {8u, 32u, 128u, 256u}) grids.push_back(SpectralGrid::create({n, n}, {12.0 * M_PI, 12.0 * M_PI}));
  grids.push_back(SpectralGrid::create({64, 32}, {3.0, 7.0}));
  for (std::size_t n : {8u, 32u, 64u}) grids.push_back(SpectralGrid::create({n, n, n}, {2.0 * M_PI, 2.0 * M_PI, 2.0 * M_PI}));

  double worst_rt = 0.0, worst_op = 0.0, worst_div = 0.0;
  std::uint64_t seed = 1;
  for (const auto& g : grids) {
    const Field u = random_field(g, seed++, 0.2, 1.0);
    const Field back = inverse_transform(forward_transform(u));
    worst_rt = std::max(worst_rt, max_diff(u, back) / u.max_abs());

    // Errors are measured against the largest symbol of each operator on the
    // grid, the scale of its roundoff.
    const double k2max = *std::max_element(g->ksq().begin(), g->ksq().end());
    const double k4max = *std::max_element(g->k4().begin(), g->k4().end());
    for (long frac : {1L, 3L, 7L}) {
      std::array<long, 3> m{0, 0, 0};
      for (int a = 0; a < g->dim(); ++a) m[a] = std::max(1L, static_cast<long>(g->n(a)) * frac / 16) - a;
      const double k2 = mode_ksq(g, m);
      const Field f = mode_field(g, m, 1.0);
      worst_op = std::max(worst_op, max_diff(apply_laplacian(f), mode_field(g, m, -k2)) / k2max);
      worst_op = std::max(worst_op, max_diff(apply_biharmonic(f), mode_field(g, m, k2 * k2)) / k4max);
    }

    std::vector<Field> v;
    for (int a = 0; a < g->dim(); ++a) v.push_back(random_field(g, seed++, 0.1, 1.0));
    const Field d = divergence(v);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += d[i];
    worst_div = std::max(worst_div, std::abs(s / d.size()) / std::max(1.0, d.max_abs()));
  }
  o.require(worst_rt <= 1e-12, "round trip");
  o.require(worst_op <= 1e-12, "single-mode operators");
  o.require(worst_div <= 1e-13, "divergence mean");
  o.note << "round trip " << fmt(worst_rt) << ", operators " << fmt(worst_op) << ", div mean " << fmt(worst_div);
}

// 2 ------------------------------------------------------------------------

double scalar_step(const SchemeConfig& sc, double a, double lam, double s, double h) {
  const double e = lam + s;
  switch (sc.kind) {
    case SchemeKind::BackwardEuler: {
      double v = a;
      for (int j = 0; j < sc.iterations; ++j) v = (a + h * e * v) / (1.0 + h * s);
      return v;
    }
    case SchemeKind::CrankNicolson: {
      double v = a;
      for (int j = 0; j < sc.iterations; ++j) v = (a + 0.5 * h * (e * v + lam * a)) / (1.0 + 0.5 * h * s);
      return v;
    }
    case SchemeKind::Imex1: {
      const double v1 = (a + h * e * a) / (1.0 + h * s);
      const double v2 = (1.5 * a - 0.5 * v1 + 0.5 * h * e * v1) / (1.0 + 0.5 * h * s);
      return (v2 + h * e * v2) / (1.0 + h * s);
    }
    case SchemeKind::Imex2: {
      const double g = 1.0 - 1.0 / std::sqrt(2.0);
      const double d = -1.0 / std::sqrt(2.0);
      const double v1 = (a + h * g * e * a) / (1.0 + h * g * s);
      return (a + h * (d * e * a + (1.0 - d) * e * v1 - (1.0 - g) * s * v1)) / (1.0 + h * g * s);
    }
  }
  return 0.0;
}

void scheme_identities(Outcome& o) {
  auto g = SpectralGrid::create({128, 128}, {12.0 * M_PI, 12.0 * M_PI});
  const ModelSpec tf = presets::thin_film(0.1);
  const Field u = random_field(g, 7, 0.4, 0.1);
  double worst_cn = 0.0;
  for (double m2 : {0.05, 0.32275, 5.0}) {
    for (double h : {1e-3, 0.125, 2.0}) {
      const Field cn = step_cn(SchemeConfig::cn(1), static_split(m2), tf, u, nullptr, 0.0, h).u_next;
      const Field be = step_be(SchemeConfig::be(1), static_split(0.5 * m2), tf, u, nullptr, 0.0, h).u_next;
      worst_cn = std::max(worst_cn, max_diff(cn, be));
    }
  }

  // u_t = b Lap u - c Lap^2 u on one Fourier mode.
  const double b = 0.4, c = 0.3;
  ModelSpec lin;
  lin.name = "linear";
  lin.mobility = [c](double) { return c; };
  lin.mobility_is_constant = true;
  lin.potential = [b, c](double v) { return 0.5 * b / c * v * v; };
  lin.potential_deriv = [b, c](double v) { return b / c * v; };
  lin.g_fun = [b](double v) { return b * v; };
  lin.g_deriv = [b](double) { return b; };
  auto g2 = SpectralGrid::create({32, 32}, {2.0 * M_PI, 2.0 * M_PI});
  const std::array<long, 3> m{1, 2, 0};
  const double k2 = mode_ksq(g2, m);
  const double lam = -b * k2 - c * k2 * k2;
  const Field u1 = mode_field(g2, m, 0.8);
  double worst_oracle = 0.0;
  for (const SplitConfig& split : {static_split(0.5), static_split(0.1, 0.3, 0.05), dynamic_split(1.7)}) {
    const double m2 = resolve_m2(split, lin, u1);
    const double s = split.m0 + split.m1 * k2 + m2 * k2 * k2;
    for (const auto& sc : {SchemeConfig::be(1), SchemeConfig::be(3), SchemeConfig::cn(1), SchemeConfig::cn(4),
                           SchemeConfig::imex1(), SchemeConfig::imex2()}) {
      for (double h : {0.01, 0.1, 0.7}) {
        Stepper st(sc, split, lin, g2);
        const Field out = st.step(u1, nullptr, 0.0, h).u_next;
        worst_oracle = std::max(worst_oracle, max_diff(out, mode_field(g2, m, scalar_step(sc, 0.8, lam, s, h))));
      }
    }
  }
  o.require(worst_cn <= 1e-12, "CN1 vs BE1(m2/2)");
  o.require(worst_oracle <= 1e-13, "one-mode oracles");
  o.note << "CN1-BE1 " << fmt(worst_cn) << ", oracle " << fmt(worst_oracle);
}

// 3 ------------------------------------------------------------------------

void temporal_order(Outcome& o) {
  const ConvergenceResult r = run_convergence(load("forced_converge.json"));
  for (const auto& c : r.curves) {
    const double target = (c.label == "BE1" || c.label == "CN1") ? 1.0 : 2.0;
    o.require(std::abs(c.slope - target) <= 0.3, c.label + " slope");
    o.note << c.label << " " << fmt(c.slope, "%.2f") << "  ";
  }
  const auto& i1 = curve(r, "IMEX1");
  const auto& i2 = curve(r, "IMEX2");
  bool below = true;
  for (std::size_t k = 0; k < i1.rows.size(); ++k) below = below && i2.rows[k].error <= i1.rows[k].error;
  o.require(below, "IMEX2 error <= IMEX1 error");
  o.note << "IMEX2<=IMEX1 " << (below ? "yes" : "no");
}

// 4 ------------------------------------------------------------------------

void iteration_benefit(Outcome& o) {
  ExperimentSpec s = load("test1_converge.json");
  s.schemes = {SchemeConfig::be(1), SchemeConfig::be(2), SchemeConfig::be(4), SchemeConfig::be(8)};
  const ConvergenceResult r = run_convergence(s);
  bool ordered = true;
  for (std::size_t k = 0; k < s.h_list.size(); ++k) {
    for (std::size_t j = 1; j < r.curves.size(); ++j) {
      const double prev = r.curves[j - 1].rows[k].error, cur = r.curves[j].rows[k].error;
      if (!(cur < 1.05 * prev)) ordered = false;
    }
  }
  o.require(ordered, "error decreasing in J at every h");
  o.note << "h=" << fmt(s.h_list.front()) << ": ";
  for (const auto& c : r.curves) o.note << c.label << " " << fmt(c.rows.front().error) << " ";

  ExperimentSpec f = load("forced_converge.json");
  f.schemes = {SchemeConfig::imex2()};
  f.h_list = {0.1};
  const double mmax = run_convergence(f).mobility_max0;
  f = load("forced_converge.json");
  f.schemes = {SchemeConfig::be(8)};
  f.split = static_split(0.57 * mmax);
  const ConvergenceResult low = run_convergence(f);
  const double slope = fit_slope(f.h_list, [&] {
    std::vector<double> e;
    for (const auto& row : low.curves[0].rows) e.push_back(row.error);
    return e;
  }(), 0.0, 0.0125);
  o.require(std::abs(slope - 1.0) <= 0.3, "BE8 first-order slope at alpha 0.57");
  o.note << "| BE8 small-h slope " << fmt(slope, "%.2f");
}

// 5 ------------------------------------------------------------------------

void dynamic_vs_static(Outcome& o) {
  const ConvergenceResult dyn = run_convergence(load("forced_dynamic.json"));
  ExperimentSpec s = load("forced_dynamic.json");
  s.split = static_split(dyn.mobility_max0);
  const ConvergenceResult sta = run_convergence(s);
  const auto& d = dyn.curves[0].rows;
  const auto& st = sta.curves[0].rows;
  bool never_worse = true;
  double best = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    never_worse = never_worse && d[k].error <= st[k].error;
    best = std::max(best, st[k].error / d[k].error);
  }
  o.require(never_worse, "dynamic error <= static error at every h");
  o.require(best >= 1.3, "improvement factor >= 1.3");
  o.note << "static m2 " << fmt(dyn.mobility_max0) << ", best improvement " << fmt(best, "%.3f");
}

// 6 ------------------------------------------------------------------------

void sweep_thresholds(Outcome& o) {
  const SweepResult r = run_m2_sweep(load("test1_m2sweep.json"));
  const std::vector<std::pair<std::string, double>> expected{{"BE1", 0.43}, {"IMEX1", 0.51}, {"IMEX2", 0.97}};
  std::vector<std::optional<double>> found;
  for (const auto& [label, target] : expected) {
    const SweepCurve* c = nullptr;
    for (const auto& cc : r.curves) {
      if (cc.label == label) c = &cc;
    }
    if (c == nullptr) throw Error("sweep is missing " + label);
    found.push_back(c->alpha_star);
    if (c->alpha_star) {
      o.note << label << " " << fmt(*c->alpha_star) << "+/-" << fmt(c->uncertainty / r.mobility_max0) << "  ";
      o.require(std::abs(*c->alpha_star / target - 1.0) <= 0.3, label + " within 30% of " + fmt(target));
    } else {
      o.note << label << " not bracketed  ";
      o.require(false, label + " threshold found");
    }
  }
  const bool ordered = found[0] && found[1] && found[2] && *found[0] < *found[1] && *found[1] < *found[2];
  o.require(ordered, "BE1 < IMEX1 < IMEX2");
  o.note << "max M " << fmt(r.mobility_max0);
}

// 7 ------------------------------------------------------------------------

void map_test3(Outcome& o) {
  const StabilityMap m = run_stability_map(load("test3_stabmap.json"));
  bool high_stable = true, low_unstable_somewhere = false, boundary_ok = true;
  for (std::size_t ih = 0; ih < m.h_list.size(); ++ih) {
    for (std::size_t ip = 0; ip < m.param_list.size(); ++ip) {
      const double p = m.param_list[ip];
      const bool stable = m.at(ih, ip).stable;
      if (p >= 1.5 && !stable) high_stable = false;
      if (p <= 0.5 && m.h_list[ih] >= 1.0 && !stable) low_unstable_somewhere = true;
    }
    if (m.h_list[ih] >= 1.0) {
      const auto& b = m.boundary[ih];
      if (!b || *b < 0.5 || *b > 1.5) boundary_ok = false;
    }
  }
  o.require(high_stable, "M1 >= 1.5 stable for all h");
  o.require(low_unstable_somewhere, "instability for M1 <= 0.5 at large h");
  o.require(boundary_ok, "boundary in [0.5, 1.5] at large h");
  o.note << "boundary at h=" << fmt(m.h_list.back()) << ": "
         << (m.boundary.back() ? fmt(*m.boundary.back()) : std::string("none"));
}

// 8 ------------------------------------------------------------------------

// Largest sampled h below which every sampled h is stable.
double max_stable_h(const StabilityMap& m, std::size_t ip) {
  double best = 0.0;
  for (std::size_t ih = 0; ih < m.h_list.size(); ++ih) {
    if (!m.at(ih, ip).stable) break;
    best = m.h_list[ih];
  }
  return best;
}

void map_test4(Outcome& o) {
  const ExperimentSpec sa = load("test4_stabmap_alpha.json");
  const StabilityMap a = run_stability_map(sa);

  // Explicit limit of the fourth-order term for the initial mobility.
  const ModelSpec model = build_model(sa);
  const GridPtr grid = build_grid(sa);
  const Field u0 = initial_state(sa, model, grid);
  const double k4max = *std::max_element(grid->k4().begin(), grid->k4().end());
  const double h_explicit = 2.0 / (mobility_max(model, u0) * k4max);

  bool high_ok = true, low_ok = true;
  for (std::size_t ip = 0; ip < a.param_list.size(); ++ip) {
    const double alpha = a.param_list[ip];
    bool moderate_stable = false;
    for (std::size_t ih = 0; ih < a.h_list.size(); ++ih) {
      const double h = a.h_list[ih];
      const bool stable = a.at(ih, ip).stable;
      if (h >= 1e-2 && h <= 1.0 && stable) moderate_stable = true;
      if (alpha <= 0.3 + 1e-12 && stable && h > 10.0 * h_explicit) low_ok = false;
    }
    if (alpha >= 0.5 - 1e-12 && !moderate_stable) high_ok = false;
  }
  o.require(high_ok, "alpha >= 0.5 stable at moderate h");
  o.require(low_ok, "alpha <= 0.3 unstable beyond explicit-scale h");

  const StabilityMap m = run_stability_map(load("test4_stabmap_m1.json"));
  std::size_t i0 = 0, i1000 = 0;
  for (std::size_t ip = 0; ip < m.param_list.size(); ++ip) {
    if (m.param_list[ip] == 0.0) i0 = ip;
    if (m.param_list[ip] == 1000.0) i1000 = ip;
  }
  const double h0 = max_stable_h(m, i0), h1000 = max_stable_h(m, i1000);
  o.require(h0 > 0.0 && h1000 >= 10.0 * h0, "M1=1000 extends max stable h by 10x");
  o.note << "explicit h " << fmt(h_explicit) << ", max stable h: M1=0 " << fmt(h0) << ", M1=1000 " << fmt(h1000)
         << " (largest sampled " << fmt(m.h_list.back()) << ")";
}

// 9, 10 --------------------------------------------------------------------

void check_long_run(Outcome& o, ExperimentSpec s, bool positive, double bound) {
  s.snapshot_times.clear();
  s.sample_every = 1;
  const SimulationResult r = run_simulate(s, false);
  const RunRecord& rec = r.record;
  if (rec.failure) {
    o.require(false, "run completes");
    o.note << "stopped at t=" << fmt(rec.failure->time) << " (" << rec.failure->reason << ") ";
  }
  double drift = 0.0;
  for (double m : rec.mass) drift = std::max(drift, std::abs(m - rec.mass.front()) / std::abs(rec.mass.front()));
  const double umin = *std::min_element(rec.umin.begin(), rec.umin.end());
  const double umax = *std::max_element(rec.umax.begin(), rec.umax.end());
  o.require(drift <= 1e-9, "mass drift <= 1e-9");
  o.require(check_energy_stability(rec, 1e-12), "energy non-increasing");
  if (positive) o.require(umin > 0.0, "min u > 0");
  if (bound > 0.0) o.require(umin > -bound && umax < bound, "solution within (-1.1, 1.1)");
  o.note << "steps " << rec.steps << ", mass drift " << fmt(drift) << ", max energy rise "
         << fmt(rec.max_energy_rise) << ", u in [" << fmt(umin, "%.4f") << ", " << fmt(umax, "%.4f") << "]";
}

void thin_film_long(Outcome& o) {
  ExperimentSpec s = load("thin_film_long.json");
  s.grid.n = {128, 128};
  s.grid.length = {12.0 * M_PI, 12.0 * M_PI};
  s.t_end = 400.0;
  check_long_run(o, s, true, 0.0);
}

void chvm_smoke(Outcome& o) {
  ExperimentSpec s = load("chvm_3d.json");
  s.t_end = 20.0;
  check_long_run(o, s, false, 1.1);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"spectral property suite", spectral_suite},
      {"scheme identities and one-mode oracles", scheme_identities},
      {"temporal order on the manufactured problem", temporal_order},
      {"iteration benefit for BE_J", iteration_benefit},
      {"dynamic vs static splitting", dynamic_vs_static},
      {"m2 sweep thresholds", sweep_thresholds},
      {"energy-stability map, classic CH", map_test3},
      {"energy-stability map, thin film", map_test4},
      {"long thin-film run invariants", thin_film_long},
      {"3D CHVM smoke run", chvm_smoke},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s (%.0fs): %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                o.note.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
