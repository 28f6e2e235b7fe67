#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pfimex/steppers.hpp"

namespace pfimex {

enum class ExperimentKind { Converge, M2Sweep, StabilityMap, Simulate };

struct ModelChoice {
  std::string preset = "thin_film";
  double eps = 0.1;
  double omega = 0.95;
  bool operator==(const ModelChoice&) const = default;
};

struct GridSpec {
  std::vector<std::size_t> n{128, 128};
  std::vector<double> length;
  bool dealias = false;
  bool operator==(const GridSpec&) const = default;
};

/// u0 = mean + amp cos(wavenumber * (x + y [+ z]))
struct CosineIC {
  double mean = 0.35;
  double amp = 0.1;
  double wavenumber = 1.0;
  bool operator==(const CosineIC&) const = default;
};

/// u0 = mean + eta * U(-1, 1), independently per grid point.
struct RandomIC {
  double mean = 0.0;
  double eta = 0.05;
  std::uint64_t seed = 1;
  bool operator==(const RandomIC&) const = default;
};

struct SnapshotIC {
  std::string path;
  bool operator==(const SnapshotIC&) const = default;
};

/// Samples the manufactured solution of the forced thin-film preset.
struct ManufacturedIC {
  double t0 = 0.0;
  bool operator==(const ManufacturedIC&) const = default;
};

using InitialCondition = std::variant<CosineIC, RandomIC, SnapshotIC, ManufacturedIC>;

/// Evolves the initial condition before the experiment proper (IMEX2 with
/// dynamic alpha = 1).  The result is cached as a snapshot when `cache` is set.
struct Preparation {
  double t_end = 100.0;
  double h = 0.01;
  std::string cache;
  bool operator==(const Preparation&) const = default;
};

enum class ReferenceKind { Manufactured, Richardson };

struct ReferenceSpec {
  ReferenceKind kind = ReferenceKind::Manufactured;
  double h_fine = 1e-4;
  /// Scheme used for the Richardson runs; IMEX2 if unset.
  std::optional<SchemeConfig> scheme;
  bool operator==(const ReferenceSpec&) const = default;
};

enum class MapAxis { M1, Alpha };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Simulate;
  ModelChoice model;
  GridSpec grid;
  InitialCondition initial = CosineIC{};
  std::optional<Preparation> prepare;

  /// Schemes compared by converge / m2sweep; the first one is used by
  /// simulate and stabmap.
  std::vector<SchemeConfig> schemes{SchemeConfig::imex2()};
  SplitConfig split;

  double t0 = 0.0;
  double t_end = 1.0;
  double h = 0.01;

  // converge
  std::vector<double> h_list;
  ReferenceSpec reference;
  /// Slope fit restricted to h in [fit_h_min, fit_h_max] when set.
  std::optional<double> fit_h_min;
  std::optional<double> fit_h_max;

  // m2sweep: either explicit m2 values or ratios to max M(U0).
  std::vector<double> m2_list;
  std::vector<double> alpha_list;
  /// A swept run counts as unstable when its error exceeds this factor times
  /// the smallest error seen at larger m2.
  double instability_factor = 2.0;

  // stabmap
  MapAxis map_axis = MapAxis::M1;
  std::vector<double> param_list;
  long steps = 500;

  // simulate
  std::vector<double> snapshot_times;
  long sample_every = 1;

  double energy_tol = 1e-12;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";

  bool operator==(const ExperimentSpec&) const = default;
};

std::string to_string(ExperimentKind kind);

ModelSpec build_model(const ExperimentSpec& spec);
GridPtr build_grid(const ExperimentSpec& spec);
Field make_initial(const InitialCondition& ic, const GridPtr& grid);

/// Initial field with the preparation stage applied (and cached) if present.
Field initial_state(const ExperimentSpec& spec, const ModelSpec& model, const GridPtr& grid);

/// Test problem 1 state: thin film from `ic`, evolved to prep.t_end.  Reads
/// prep.cache if it holds a matching snapshot, otherwise computes and writes it.
Field prepare_state(const ModelSpec& model, const GridPtr& grid, const InitialCondition& ic, const Preparation& prep);

/// Runs fn(0..count-1) on up to `threads` workers (0 = hardware concurrency).
/// Exceptions from fn are rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Least-squares slope of log(error) against log(h) over finite, positive
/// errors with h in [h_min, h_max].  NaN when fewer than two points remain.
double fit_slope(const std::vector<double>& h, const std::vector<double>& error, double h_min = 0.0,
                 double h_max = 1e300);

struct ConvergenceRow {
  double h = 0.0;
  double error = 0.0;  // +inf for failed runs
  long steps = 0;
  long fex_evals = 0;
  std::string failure;
};

struct ConvergenceCurve {
  std::string label;
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceCurve> curves;
  double mobility_max0 = 0.0;
};

ConvergenceResult run_convergence(const ExperimentSpec& spec);

struct SweepRow {
  double m2 = 0.0;
  double alpha_bar = 0.0;
  double error = 0.0;
  bool unstable = false;
  std::string failure;
};

struct SweepCurve {
  std::string label;
  std::vector<SweepRow> rows;  // descending m2
  /// Midpoint between the smallest stable and the largest unstable m2 below
  /// it; nullopt when no unstable value was sampled.
  std::optional<double> m2_star;
  std::optional<double> alpha_star;
  /// Half the sample spacing around the threshold.
  double uncertainty = 0.0;
  /// Errors decrease (within 1%) along the stable part of the sweep.
  bool monotone_above = true;
};

struct SweepResult {
  std::vector<SweepCurve> curves;
  double mobility_max0 = 0.0;
};

SweepResult run_m2_sweep(const ExperimentSpec& spec);

struct MapCell {
  double h = 0.0;
  double param = 0.0;
  bool stable = false;
  long steps = 0;
  double max_energy_rise = 0.0;
  double final_energy = 0.0;
  std::string failure;
};

struct StabilityMap {
  std::vector<double> h_list;
  std::vector<double> param_list;
  std::vector<MapCell> cells;  // row-major: index = i_h * params + i_param
  /// Per h: smallest param from which every larger sampled param is stable.
  std::vector<std::optional<double>> boundary;
  /// Per h: stable/unstable pattern along the param axis is not a single step.
  std::vector<bool> non_monotone;

  const MapCell& at(std::size_t ih, std::size_t ip) const { return cells[ih * param_list.size() + ip]; }
};

StabilityMap run_stability_map(const ExperimentSpec& spec);

struct SimulationResult {
  RunRecord record;
  std::vector<std::pair<double, std::string>> snapshots;
};

/// Writes snapshots into spec.out_dir when `write_files` is set.
SimulationResult run_simulate(const ExperimentSpec& spec, bool write_files = true);

// CSV writers (17 significant digits).
void write_convergence_csv(const ConvergenceResult& r, const std::string& path);
void write_sweep_csv(const SweepResult& r, const std::string& path);
void write_map_csv(const StabilityMap& m, const std::string& matrix_path, const std::string& cells_path,
                   const std::string& boundary_path);

}  // namespace pfimex
