#include "pfimex/splitting.hpp"

#include <cmath>

namespace pfimex {

void SplitConfig::validate() const {
  if (!(m0 >= 0.0) || !(m1 >= 0.0)) throw ConfigError("split: m0 and m1 must be nonnegative");
  if (const auto* s = std::get_if<StaticM2>(&m2_rule)) {
    if (!(s->value >= 0.0)) throw ConfigError("split: static m2 must be nonnegative");
  } else {
    const auto& d = std::get<DynamicM2>(m2_rule);
    if (!(d.alpha > 0.0)) throw ConfigError("split: dynamic ratio alpha must be positive");
  }
}

SplitConfig static_split(double m2, double m1, double m0) {
  SplitConfig c;
  c.m0 = m0;
  c.m1 = m1;
  c.m2_rule = StaticM2{m2};
  return c;
}

SplitConfig dynamic_split(double alpha, double m1, double m0) {
  SplitConfig c;
  c.m0 = m0;
  c.m1 = m1;
  c.m2_rule = DynamicM2{alpha};
  return c;
}

double resolve_m2(const SplitConfig& cfg, const ModelSpec& model, const Field& u) {
  double m2 = 0.0;
  if (const auto* s = std::get_if<StaticM2>(&cfg.m2_rule)) {
    m2 = s->value;
  } else {
    m2 = std::get<DynamicM2>(cfg.m2_rule).alpha * mobility_max(model, u);
  }
  if (!(m2 > 0.0) && !cfg.explicit_baseline) {
    throw ConfigError("resolved m2 is not positive while the biharmonic term is active");
  }
  return m2;
}

void implicit_symbol(const SplitConfig& cfg, double m2, const SpectralGrid& grid, std::span<double> out) {
  const auto ksq = grid.ksq();
  const auto k4 = grid.k4();
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = cfg.m0 + cfg.m1 * ksq[s] + m2 * k4[s];
}

Field apply_f_im(const SplitConfig& cfg, double m2, const Field& u) {
  const SpectralGrid& g = u.grid();
  std::vector<double> sym(g.spectral_size());
  implicit_symbol(cfg, m2, g, sym);
  SpectralField hat = forward_transform(u);
  for (std::size_t s = 0; s < sym.size(); ++s) hat[s] *= -sym[s];
  Field out(u.grid_ptr());
  g.inverse_destructive(hat.coeffs(), out.values());
  return out;
}

Field apply_f_ex(const SplitConfig& cfg, double m2, const ModelSpec& model, const Field& u, double t) {
  Field out = eval_rhs(model, u, t);
  out -= apply_f_im(cfg, m2, u);
  return out;
}

Field implicit_solve(const SplitConfig& cfg, double m2, const Field& rhs, double weight, double h) {
  const SpectralGrid& g = rhs.grid();
  std::vector<double> sym(g.spectral_size());
  implicit_symbol(cfg, m2, g, sym);
  SpectralField hat = forward_transform(rhs);
  const double hw = h * weight;
  for (std::size_t s = 0; s < sym.size(); ++s) hat[s] /= 1.0 + hw * sym[s];
  Field out(rhs.grid_ptr());
  g.inverse_destructive(hat.coeffs(), out.values());
  return out;
}

double amplification_bound(double m2, double c0, double h, const SpectralGrid& grid) {
  double bound = 0.0;
  for (double k4 : grid.k4()) {
    const double sigma = 1.0 - h * c0 * k4 / (1.0 + h * m2 * k4);
    bound = std::max(bound, std::abs(sigma));
  }
  return bound;
}

}  // namespace pfimex
