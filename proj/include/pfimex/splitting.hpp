#pragma once

#include <variant>

#include "pfimex/models.hpp"

namespace pfimex {

struct StaticM2 {
  double value = 0.0;
  bool operator==(const StaticM2&) const = default;
};

/// m2 = alpha * max|M(U_n)|, re-evaluated at the start of every step.
struct DynamicM2 {
  double alpha = 1.0;
  bool operator==(const DynamicM2&) const = default;
};

/// Coefficients of the implicit operator F_im(u) = -m0 u + m1 Lap u - m2 Lap^2 u.
struct SplitConfig {
  double m0 = 0.0;
  double m1 = 0.0;
  std::variant<StaticM2, DynamicM2> m2_rule = StaticM2{};
  /// Permits m2 = 0, i.e. an explicit scheme for the fourth-order term.
  bool explicit_baseline = false;

  bool operator==(const SplitConfig&) const = default;

  /// Throws ConfigError for negative coefficients or a non-positive ratio.
  void validate() const;
};

SplitConfig static_split(double m2, double m1 = 0.0, double m0 = 0.0);
SplitConfig dynamic_split(double alpha, double m1 = 0.0, double m0 = 0.0);

/// Throws ConfigError if the resolved value is not positive (unless the
/// config is an explicit baseline).
double resolve_m2(const SplitConfig& cfg, const ModelSpec& model, const Field& u);

/// Symbol s(k) = m0 + m1 k^2 + m2 k^4, so that F_im(u)^ = -s u^.
void implicit_symbol(const SplitConfig& cfg, double m2, const SpectralGrid& grid, std::span<double> out);

Field apply_f_im(const SplitConfig& cfg, double m2, const Field& u);
/// F(u) - F_im(u), evaluated as that exact difference.
Field apply_f_ex(const SplitConfig& cfg, double m2, const ModelSpec& model, const Field& u, double t);
/// Solves v - h*weight*F_im(v) = rhs.
Field implicit_solve(const SplitConfig& cfg, double m2, const Field& rhs, double weight, double h);

/// max over the grid's wavenumbers of |1 - h c0 k^4 / (1 + h m2 k^4)|.
double amplification_bound(double m2, double c0, double h, const SpectralGrid& grid);

}  // namespace pfimex
