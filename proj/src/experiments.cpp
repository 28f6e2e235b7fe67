#include "pfimex/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "pfimex/snapshot.hpp"

namespace pfimex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Failure messages go into CSV cells.
std::string cell_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

// Reference state at spec.t_end plus the largest mobility seen along the way.
struct Reference {
  Field u;
  double mobility_max = 0.0;
};

Reference build_reference(const ExperimentSpec& spec, const ModelSpec& model, const Field& u0) {
  const GridPtr& grid = u0.grid_ptr();
  if (spec.reference.kind == ReferenceKind::Manufactured) {
    if (!model.forcing) throw ConfigError("manufactured reference requires the forced_thin_film model");
    Reference ref{presets::manufactured_solution(grid, spec.t_end), 0.0};
    constexpr int samples = 200;
    for (int i = 0; i <= samples; ++i) {
      const double t = spec.t0 + (spec.t_end - spec.t0) * i / samples;
      ref.mobility_max = std::max(ref.mobility_max, mobility_max(model, presets::manufactured_solution(grid, t)));
    }
    return ref;
  }
  const SchemeConfig scheme = spec.reference.scheme.value_or(SchemeConfig::imex2());
  double mmax = 0.0;
  Field u = richardson_reference(model, scheme, spec.split, u0, spec.t0, spec.t_end - spec.t0, spec.reference.h_fine,
                                 &mmax);
  return {std::move(u), mmax};
}

struct RunOutcome {
  double error = kInf;
  long steps = 0;
  long fex_evals = 0;
  std::string failure;
};

RunOutcome run_against(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                       const Field& u0, const ExperimentSpec& spec, double h, const Field& ref) {
  AdvanceOptions opts;
  opts.track_energy = false;
  opts.sample_every = std::numeric_limits<long>::max();
  RunOutcome out;
  RunRecord rec;
  try {
    rec = advance(scheme, split, model, u0, spec.t0, spec.t_end, h, opts);
  } catch (const ConfigError& e) {
    out.failure = e.what();
    return out;
  }
  out.steps = rec.steps;
  out.fex_evals = rec.fex_evals;
  if (rec.failure) {
    out.failure = rec.failure->reason;
    return out;
  }
  const double err = l1_error(*rec.final_state, ref);
  if (std::isfinite(err)) {
    out.error = err;
  } else {
    out.failure = "non-finite error";
  }
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Converge: return "converge";
    case ExperimentKind::M2Sweep: return "m2sweep";
    case ExperimentKind::StabilityMap: return "stabmap";
    case ExperimentKind::Simulate: return "simulate";
  }
  return "?";
}

ModelSpec build_model(const ExperimentSpec& spec) {
  return make_preset(spec.model.preset, spec.model.eps, spec.model.omega);
}

GridPtr build_grid(const ExperimentSpec& spec) {
  return SpectralGrid::create(spec.grid.n, spec.grid.length, spec.grid.dealias);
}

Field make_initial(const InitialCondition& ic, const GridPtr& grid) {
  Field u(grid);
  if (const auto* c = std::get_if<CosineIC>(&ic)) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto p = grid->point(i);
      double s = 0.0;
      for (int a = 0; a < grid->dim(); ++a) s += p[a];
      u[i] = c->mean + c->amp * std::cos(c->wavenumber * s);
    }
  } else if (const auto* r = std::get_if<RandomIC>(&ic)) {
    std::mt19937_64 rng(r->seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = r->mean + r->eta * dist(rng);
  } else if (const auto* s = std::get_if<SnapshotIC>(&ic)) {
    u = read_snapshot(s->path, grid);
  } else {
    u = presets::manufactured_solution(grid, std::get<ManufacturedIC>(ic).t0);
  }
  return u;
}

Field prepare_state(const ModelSpec& model, const GridPtr& grid, const InitialCondition& ic, const Preparation& prep) {
  if (!prep.cache.empty() && std::filesystem::exists(prep.cache)) {
    try {
      Snapshot s = read_snapshot(prep.cache);
      if (s.field.grid().same_shape(*grid) && s.header.model_name == model.name && s.header.t == prep.t_end) {
        Field u(grid);
        std::copy(s.field.values().begin(), s.field.values().end(), u.values().begin());
        return u;
      }
    } catch (const Error&) {
      // Stale or damaged cache: recompute below.
    }
  }
  const Field u0 = make_initial(ic, grid);
  AdvanceOptions opts;
  opts.track_energy = false;
  opts.sample_every = std::numeric_limits<long>::max();
  RunRecord rec = advance(SchemeConfig::imex2(), dynamic_split(1.0), model, u0, 0.0, prep.t_end, prep.h, opts);
  if (rec.failure) {
    std::ostringstream os;
    os << "preparation run failed at t = " << rec.failure->time << ": " << rec.failure->reason;
    throw NumericalFailure(os.str());
  }
  if (!prep.cache.empty()) {
    const auto parent = std::filesystem::path(prep.cache).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_snapshot(*rec.final_state, prep.cache, prep.t_end, model.name);
  }
  return *rec.final_state;
}

Field initial_state(const ExperimentSpec& spec, const ModelSpec& model, const GridPtr& grid) {
  if (spec.prepare) return prepare_state(model, grid, spec.initial, *spec.prepare);
  return make_initial(spec.initial, grid);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double fit_slope(const std::vector<double>& h, const std::vector<double>& error, double h_min, double h_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < h.size() && i < error.size(); ++i) {
    if (!(h[i] >= h_min && h[i] <= h_max) || !std::isfinite(error[i]) || !(error[i] > 0.0)) continue;
    const double x = std::log(h[i]);
    const double y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------

ConvergenceResult run_convergence(const ExperimentSpec& spec) {
  if (spec.h_list.empty()) throw ConfigError("converge: h_list is empty");
  const ModelSpec model = build_model(spec);
  const GridPtr grid = build_grid(spec);
  const Field u0 = initial_state(spec, model, grid);
  const Reference ref = build_reference(spec, model, u0);

  ConvergenceResult result;
  result.mobility_max0 = ref.mobility_max;
  const std::size_t nh = spec.h_list.size();
  result.curves.resize(spec.schemes.size());
  for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
    result.curves[s].label = spec.schemes[s].label();
    result.curves[s].rows.resize(nh);
  }
  parallel_for(spec.schemes.size() * nh, spec.threads, [&](std::size_t idx) {
    const std::size_t s = idx / nh;
    const std::size_t i = idx % nh;
    const RunOutcome o = run_against(spec.schemes[s], spec.split, model, u0, spec, spec.h_list[i], ref.u);
    result.curves[s].rows[i] = {spec.h_list[i], o.error, o.steps, o.fex_evals, o.failure};
  });
  for (auto& c : result.curves) {
    std::vector<double> hs, es;
    for (const auto& r : c.rows) {
      hs.push_back(r.h);
      es.push_back(r.error);
    }
    c.slope = fit_slope(hs, es, spec.fit_h_min.value_or(0.0), spec.fit_h_max.value_or(1e300));
  }
  return result;
}

// ---------------------------------------------------------------------------

SweepResult run_m2_sweep(const ExperimentSpec& spec) {
  if (spec.m2_list.empty() == spec.alpha_list.empty()) {
    throw ConfigError("m2sweep: exactly one of m2_list and alpha_list must be given");
  }
  const ModelSpec model = build_model(spec);
  const GridPtr grid = build_grid(spec);
  const Field u0 = initial_state(spec, model, grid);
  const Reference ref = build_reference(spec, model, u0);
  const double mmax = ref.mobility_max;

  std::vector<double> m2s = spec.m2_list;
  if (m2s.empty()) {
    for (double a : spec.alpha_list) m2s.push_back(a * mmax);
  }
  std::sort(m2s.begin(), m2s.end(), std::greater<>());

  SweepResult result;
  result.mobility_max0 = mmax;
  const std::size_t nm = m2s.size();
  result.curves.resize(spec.schemes.size());
  for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
    result.curves[s].label = spec.schemes[s].label();
    result.curves[s].rows.resize(nm);
  }
  parallel_for(spec.schemes.size() * nm, spec.threads, [&](std::size_t idx) {
    const std::size_t s = idx / nm;
    const std::size_t i = idx % nm;
    SplitConfig split = spec.split;
    split.m2_rule = StaticM2{m2s[i]};
    const RunOutcome o = run_against(spec.schemes[s], split, model, u0, spec, spec.h, ref.u);
    SweepRow& row = result.curves[s].rows[i];
    row.m2 = m2s[i];
    row.alpha_bar = m2s[i] / mmax;
    row.error = o.error;
    row.failure = o.failure;
  });

  for (auto& c : result.curves) {
    double best = kInf;
    std::optional<std::size_t> first_unstable;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      SweepRow& r = c.rows[i];
      r.unstable = !std::isfinite(r.error) || (std::isfinite(best) && r.error > spec.instability_factor * best);
      if (r.unstable) {
        if (!first_unstable) first_unstable = i;
        continue;
      }
      if (!first_unstable) {
        if (std::isfinite(best) && r.error > 1.01 * best) c.monotone_above = false;
        best = std::min(best, r.error);
      }
    }
    if (first_unstable && *first_unstable > 0) {
      const double hi = c.rows[*first_unstable - 1].m2;
      const double lo = c.rows[*first_unstable].m2;
      c.m2_star = 0.5 * (hi + lo);
      c.alpha_star = *c.m2_star / mmax;
      c.uncertainty = 0.5 * (hi - lo);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

StabilityMap run_stability_map(const ExperimentSpec& spec) {
  if (spec.h_list.empty() || spec.param_list.empty()) throw ConfigError("stabmap: h_list and param_list must be nonempty");
  if (spec.steps < 1) throw ConfigError("stabmap: steps must be >= 1");
  const ModelSpec model = build_model(spec);
  const GridPtr grid = build_grid(spec);
  const Field u0 = initial_state(spec, model, grid);
  const SchemeConfig scheme = spec.schemes.front();

  StabilityMap map;
  map.h_list = spec.h_list;
  map.param_list = spec.param_list;
  std::sort(map.param_list.begin(), map.param_list.end());
  const std::size_t np = map.param_list.size();
  map.cells.resize(map.h_list.size() * np);

  parallel_for(map.cells.size(), spec.threads, [&](std::size_t idx) {
    MapCell& cell = map.cells[idx];
    cell.h = map.h_list[idx / np];
    cell.param = map.param_list[idx % np];
    SplitConfig split = spec.split;
    if (spec.map_axis == MapAxis::M1) {
      split.m1 = cell.param;
    } else {
      split.m2_rule = DynamicM2{cell.param};
    }
    AdvanceOptions opts;
    opts.energy_tol = spec.energy_tol;
    opts.stop_on_energy_rise = true;
    opts.sample_every = spec.steps;
    const double t_end = spec.t0 + static_cast<double>(spec.steps) * cell.h;
    RunRecord rec;
    try {
      rec = advance(scheme, split, model, u0, spec.t0, t_end, cell.h, opts);
    } catch (const ConfigError& e) {
      cell.failure = e.what();
      return;
    }
    cell.stable = check_energy_stability(rec, spec.energy_tol);
    cell.steps = rec.steps;
    cell.max_energy_rise = rec.max_energy_rise;
    cell.final_energy = rec.energy.empty() ? std::numeric_limits<double>::quiet_NaN() : rec.energy.back();
    if (rec.failure) cell.failure = rec.failure->reason;
  });

  for (std::size_t ih = 0; ih < map.h_list.size(); ++ih) {
    std::optional<double> boundary;
    for (std::size_t ip = np; ip-- > 0;) {
      if (!map.at(ih, ip).stable) break;
      boundary = map.param_list[ip];
    }
    bool seen_stable = false, non_monotone = false;
    for (std::size_t ip = 0; ip < np; ++ip) {
      if (map.at(ih, ip).stable) {
        seen_stable = true;
      } else if (seen_stable) {
        non_monotone = true;
      }
    }
    map.boundary.push_back(boundary);
    map.non_monotone.push_back(non_monotone);
  }
  return map;
}

// ---------------------------------------------------------------------------

SimulationResult run_simulate(const ExperimentSpec& spec, bool write_files) {
  const ModelSpec model = build_model(spec);
  const GridPtr grid = build_grid(spec);
  const Field u0 = initial_state(spec, model, grid);

  SimulationResult result;
  auto snap = [&](double t, const Field& u) {
    std::string path;
    if (write_files) {
      std::filesystem::create_directories(spec.out_dir);
      char name[64];
      std::snprintf(name, sizeof(name), "snapshot_t%012.4f.bin", t);
      path = (std::filesystem::path(spec.out_dir) / name).string();
      write_snapshot(u, path, t, model.name);
    }
    result.snapshots.emplace_back(t, path);
  };
  snap(spec.t0, u0);

  std::vector<double> pending;
  for (double ts : spec.snapshot_times) {
    if (ts > spec.t0 && ts <= spec.t_end) pending.push_back(ts);
  }
  std::sort(pending.begin(), pending.end());
  std::size_t next = 0;

  AdvanceOptions opts;
  opts.energy_tol = spec.energy_tol;
  opts.sample_every = spec.sample_every;
  opts.observers.push_back([&](long, double t, const Field& u) {
    while (next < pending.size() && t >= pending[next] - 1e-9 * std::max(1.0, std::abs(pending[next]))) {
      snap(t, u);
      ++next;
    }
  });
  result.record = advance(spec.schemes.front(), spec.split, model, u0, spec.t0, spec.t_end, spec.h, opts);
  return result;
}

// ---------------------------------------------------------------------------

void write_convergence_csv(const ConvergenceResult& r, const std::string& path) {
  auto os = open_out(path);
  os << "scheme,h,error,steps,fex_evals,failure\n";
  for (const auto& c : r.curves) {
    for (const auto& row : c.rows) {
      os << c.label << ',' << fmt17(row.h) << ',' << fmt17(row.error) << ',' << row.steps << ',' << row.fex_evals
         << ',' << cell_text(row.failure) << '\n';
    }
  }
}

void write_sweep_csv(const SweepResult& r, const std::string& path) {
  auto os = open_out(path);
  os << "scheme,m2,alpha_bar,error,unstable,failure\n";
  for (const auto& c : r.curves) {
    for (const auto& row : c.rows) {
      os << c.label << ',' << fmt17(row.m2) << ',' << fmt17(row.alpha_bar) << ',' << fmt17(row.error) << ','
         << (row.unstable ? 1 : 0) << ',' << cell_text(row.failure) << '\n';
    }
  }
}

void write_map_csv(const StabilityMap& m, const std::string& matrix_path, const std::string& cells_path,
                   const std::string& boundary_path) {
  {
    auto os = open_out(matrix_path);
    os << "h";
    for (double p : m.param_list) os << ',' << fmt17(p);
    os << '\n';
    for (std::size_t ih = 0; ih < m.h_list.size(); ++ih) {
      os << fmt17(m.h_list[ih]);
      for (std::size_t ip = 0; ip < m.param_list.size(); ++ip) os << ',' << (m.at(ih, ip).stable ? 1 : 0);
      os << '\n';
    }
  }
  {
    auto os = open_out(cells_path);
    os << "cell,h,param,stable,steps,max_energy_rise,final_energy,failure\n";
    for (std::size_t i = 0; i < m.cells.size(); ++i) {
      const MapCell& c = m.cells[i];
      os << i << ',' << fmt17(c.h) << ',' << fmt17(c.param) << ',' << (c.stable ? 1 : 0) << ',' << c.steps << ','
         << fmt17(c.max_energy_rise) << ',' << fmt17(c.final_energy) << ',' << cell_text(c.failure) << '\n';
    }
  }
  auto os = open_out(boundary_path);
  os << "h,boundary,non_monotone\n";
  for (std::size_t ih = 0; ih < m.h_list.size(); ++ih) {
    os << fmt17(m.h_list[ih]) << ',' << (m.boundary[ih] ? fmt17(*m.boundary[ih]) : std::string("nan")) << ','
       << (m.non_monotone[ih] ? 1 : 0) << '\n';
  }
}

}  // namespace pfimex
