#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pfimex/splitting.hpp"

namespace pfimex {

struct SchemeConfig;

struct RunFailure {
  std::string reason;
  long step = 0;
  double time = 0.0;
};

/// Time series of observables for one run.  All sequences share a length.
struct RunRecord {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> mass;
  std::vector<double> mobility_max;
  std::vector<double> umin;
  std::vector<double> umax;

  /// Largest per-step (E_{n+1} - E_n) / (1 + |E_n|), tracked every step
  /// regardless of the sampling stride.
  double max_energy_rise = -std::numeric_limits<double>::infinity();
  /// Outcome of the monotonicity test at `energy_tol` over every step.
  bool energy_monotone = true;
  double energy_tol = 1e-12;

  long steps = 0;
  long fex_evals = 0;
  /// Some BE_J/CN_J step had non-decreasing iterate changes.
  bool residual_warning = false;
  std::optional<RunFailure> failure;
  /// Last good state and its time.
  std::optional<Field> final_state;
  double final_time = 0.0;

  std::size_t samples() const { return times.size(); }
  void add_sample(double t, const ModelSpec& model, const Field& u, double e);
};

/// True iff the run did not fail, every energy is finite and no step raised
/// the energy by more than tol * (1 + |E_n|).
bool check_energy_stability(const RunRecord& record, double tol);

/// Cell-volume weighted sum of |u - u_ref|.  Throws GridError on mismatch.
double l1_error(const Field& u, const Field& u_ref);

/// Writes `t,energy,mass,mobility_max,umin,umax` with 17 significant digits.
void write_record_csv(const RunRecord& record, std::ostream& os);

/*!
 * Richardson-extrapolated reference at t0 + T from runs with h_fine and
 * h_fine/2, combined with the scheme's nominal order p:
 * (2^p U_{h/2} - U_h) / (2^p - 1).  Throws NumericalFailure if either run
 * fails.  mobility_max_out receives max|M(u)| over the h_fine trajectory.
 */
Field richardson_reference(const ModelSpec& model, const SchemeConfig& scheme, const SplitConfig& split,
                           const Field& u0, double t0, double T, double h_fine, double* mobility_max_out = nullptr);

}  // namespace pfimex
