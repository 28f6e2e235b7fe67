#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pfimex/diagnostics.hpp"
#include "pfimex/splitting.hpp"

namespace pfimex {

enum class SchemeKind { BackwardEuler, CrankNicolson, Imex1, Imex2 };

enum class InitialIterate {
  Previous,      // U_(0) = U_n
  Extrapolated,  // U_(0) = 2 U_n - U_{n-1} once a previous step exists
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::Imex2;
  /// Fixed iteration count J for BE/CN.
  int iterations = 1;
  InitialIterate initial_iterate = InitialIterate::Previous;

  bool operator==(const SchemeConfig&) const = default;

  static SchemeConfig be(int j) { return {SchemeKind::BackwardEuler, j, InitialIterate::Previous}; }
  static SchemeConfig cn(int j) { return {SchemeKind::CrankNicolson, j, InitialIterate::Previous}; }
  static SchemeConfig imex1() { return {SchemeKind::Imex1, 1, InitialIterate::Previous}; }
  static SchemeConfig imex2() { return {SchemeKind::Imex2, 1, InitialIterate::Previous}; }

  /// "BE1", "CN4", "IMEX1", ...
  std::string label() const;
  /// 1 for BE_J and CN_1, 2 otherwise.
  int nominal_order() const;
  void validate() const;
};

namespace imex2_constants {
inline const double gamma = 1.0 - 1.0 / std::sqrt(2.0);
inline const double delta = -1.0 / std::sqrt(2.0);
}  // namespace imex2_constants

struct StepResult {
  Field u_next;
  double t_next = 0.0;
  /// Number of F_ex evaluations actually performed.
  int fex_evals = 0;
  /// max|U_(j) - U_(j-1)| per iteration (BE/CN only).
  std::vector<double> iterate_residuals;
  bool residuals_non_monotone = false;
  double m2 = 0.0;
};

/*!
 * \brief Reusable one-step integrator for a fixed (scheme, split, model, grid).
 *
 * Stage algebra runs on half spectra: the implicit solves are divisions by
 * 1 + h w s(k), and every F_ex evaluation costs one physical-space evaluation
 * of F.  Not thread-safe; one instance per concurrent run.
 */
class Stepper {
 public:
  Stepper(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model, GridPtr grid);

  /// Advances u_n from t by h.  u_prev is used only by the extrapolated
  /// initial iterate of BE/CN.
  StepResult step(const Field& u_n, const Field* u_prev, double t, double h);

  const SchemeConfig& scheme() const { return scheme_; }
  const SplitConfig& split() const { return split_; }
  const ModelSpec& model() const { return evaluator_.model(); }

 private:
  using Spectrum = std::vector<cplx>;

  // Writes the F_ex spectrum of `u` (physical) and u's own spectrum.
  void eval_fex(std::span<const double> u, double t, Spectrum& u_hat, Spectrum& fex_hat);
  void solve(const Spectrum& rhs, double hw, Spectrum& out) const;
  void to_physical(const Spectrum& hat, std::vector<double>& out);

  StepResult step_be(const Field& u_n, const Field* u_prev, double t, double h);
  StepResult step_cn(const Field& u_n, const Field* u_prev, double t, double h);
  StepResult step_imex1(const Field& u_n, double t, double h);
  StepResult step_imex2(const Field& u_n, double t, double h);
  Field finish(const std::vector<double>& u, const Field& like) const;

  SchemeConfig scheme_;
  SplitConfig split_;
  RhsEvaluator evaluator_;
  GridPtr grid_;
  std::vector<double> symbol_;
  int fex_count_ = 0;
  Spectrum scratch_;
};

StepResult step_be(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                   const Field& u_n, const Field* u_prev, double t, double h);
StepResult step_cn(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                   const Field& u_n, const Field* u_prev, double t, double h);
StepResult step_imex1(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                      const Field& u_n, double t, double h);
StepResult step_imex2(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                      const Field& u_n, double t, double h);

/// Called after every accepted step with the step index, time and state.
using Observer = std::function<void(long step, double t, const Field& u)>;

struct AdvanceOptions {
  /// Record a diagnostics sample every this many steps (the last step is
  /// always sampled).  Energy monotonicity is still checked every step.
  long sample_every = 1;
  double energy_tol = 1e-12;
  long max_steps = 100'000'000;
  /// Skip energy evaluation entirely (convergence runs do not need it).
  bool track_energy = true;
  /// End the run (recorded as a failure) at the first step whose energy rise
  /// exceeds energy_tol.
  bool stop_on_energy_rise = false;
  std::vector<Observer> observers;
};

/*!
 * Steps from t0 to t_end with step h.  If h divides the interval (to 1e-9
 * relative) all steps are equal; otherwise the last step is shortened to land
 * on t_end.  Numerical failures are caught and recorded in the RunRecord
 * together with the last good state.  Throws ConfigError when the step budget
 * is exceeded or h <= 0.
 */
RunRecord advance(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                  const Field& u0, double t0, double t_end, double h, const AdvanceOptions& options = {});

}  // namespace pfimex
