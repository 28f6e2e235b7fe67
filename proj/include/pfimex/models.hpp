#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pfimex/spectral_grid.hpp"

namespace pfimex {

using ScalarFn = std::function<double(double)>;
/// Space-time source term sampled on a grid.
using ForcingFn = std::function<Field(const GridPtr&, double t)>;

/*!
 * \brief A fourth-order phase-field model in re-expanded form
 *
 *   u_t = Lap G(u) - kappa div( M(u) grad Lap u ) + f(x, t),
 *   G(u) = int M(u) W''(u) du,
 *
 * with chemical potential w = W'(u) - kappa Lap u and energy
 * E = int W(u) + kappa/2 |grad u|^2.  kappa is 1 for the thin-film and
 * classic Cahn-Hilliard presets and eps^2 for the variable-mobility
 * Cahn-Hilliard preset.
 */
struct ModelSpec {
  std::string name;
  ScalarFn mobility;
  bool mobility_is_constant = false;
  ScalarFn potential;
  ScalarFn potential_deriv;
  ScalarFn g_fun;
  ScalarFn g_deriv;
  double gradient_coeff = 1.0;
  /// Thin-film models require u > floor everywhere.
  std::optional<double> positivity_floor;
  /// Range on which invariants are sampled; exits are not errors.
  double admissible_lo = -1.0;
  double admissible_hi = 1.0;
  /// Preset parameter (eps, or omega for CHVM) kept for manifests.
  std::vector<double> parameters;
  ForcingFn forcing;
};

namespace presets {

/// M = eps^2, W = (u^4 - 2u^2)/(4 eps^2), G = u^3 - u.
ModelSpec classic_ch(double eps);
/// M = u^3, W' = eps^2/u^3 - eps^3/u^4, G = -4 eps^3/u - 3 eps^2 ln u.
ModelSpec thin_film(double eps);
/// M = 1 - omega^2 u^2, W = u^4/4 - u^2/2, kappa = eps^2.
ModelSpec chvm(double omega, double eps);
/// thin_film plus the source that makes manufactured_solution exact for the
/// semi-discrete operator.
ModelSpec forced_thin_film(double eps);

/// 0.3 + 0.1 sin(x) sin(y) e^{t/2} sampled on a 2D grid.
Field manufactured_solution(const GridPtr& grid, double t);
Field manufactured_time_derivative(const GridPtr& grid, double t);

}  // namespace presets

/// Looks up a preset by its config name ("classic_ch", "thin_film", "chvm",
/// "forced_thin_film").  Throws ConfigError on unknown names.
ModelSpec make_preset(const std::string& name, double eps, double omega);

/*!
 * \brief Evaluates F(u) in spectral form with reusable scratch buffers.
 *
 * Not thread-safe; give each concurrent solver its own evaluator.
 */
class RhsEvaluator {
 public:
  RhsEvaluator(const ModelSpec& model, GridPtr grid);

  /// Writes u_hat = FFT(u) and f_hat = FFT(F(u, t)).  Throws
  /// PositivityViolation or BlowupDetected.
  void evaluate(std::span<const double> u, double t, std::span<cplx> u_hat, std::span<cplx> f_hat);

  const ModelSpec& model() const { return model_; }
  const GridPtr& grid() const { return grid_; }
  long evaluations() const { return evaluations_; }

 private:
  void forcing_hat(double t, std::span<cplx> out);

  ModelSpec model_;
  GridPtr grid_;
  std::vector<double> g_vals_;
  std::vector<double> m_vals_;
  std::vector<double> work_real_;
  std::vector<cplx> work_hat_;
  std::vector<cplx> lap_hat_;
  long evaluations_ = 0;
  struct CachedForcing {
    double t;
    std::vector<cplx> hat;
  };
  std::vector<CachedForcing> forcing_cache_;
};

/// F(u) = Lap G(u) - kappa div(M grad Lap u) + f.
Field eval_rhs(const ModelSpec& model, const Field& u, double t);
/// w = W'(u) - kappa Lap u.
Field chemical_potential(const ModelSpec& model, const Field& u);
/// Grid quadrature of W(u) + kappa/2 |grad u|^2.
double energy(const ModelSpec& model, const Field& u);
double mass(const Field& u);
/// max over the grid of |M(u)|.
double mobility_max(const ModelSpec& model, const Field& u);

/// Throws PositivityViolation if the model has a floor and min(u) <= floor.
void check_positivity(const ModelSpec& model, std::span<const double> u);

}  // namespace pfimex
