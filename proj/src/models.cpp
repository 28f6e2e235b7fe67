#include "pfimex/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pfimex {

namespace presets {

ModelSpec classic_ch(double eps) {
  const double e2 = eps * eps;
  ModelSpec m;
  m.name = "classic_ch";
  m.mobility = [e2](double) { return e2; };
  m.mobility_is_constant = true;
  m.potential = [e2](double u) { return (u * u * u * u - 2.0 * u * u) / (4.0 * e2); };
  m.potential_deriv = [e2](double u) { return (u * u * u - u) / e2; };
  m.g_fun = [](double u) { return u * u * u - u; };
  m.g_deriv = [](double u) { return 3.0 * u * u - 1.0; };
  m.admissible_lo = -1.0;
  m.admissible_hi = 1.0;
  m.parameters = {eps};
  return m;
}

ModelSpec thin_film(double eps) {
  const double e2 = eps * eps;
  const double e3 = e2 * eps;
  ModelSpec m;
  m.name = "thin_film";
  m.mobility = [](double u) { return u * u * u; };
  m.potential = [e2, e3](double u) { return -e2 / (2.0 * u * u) + e3 / (3.0 * u * u * u); };
  // Disjoining pressure.
  m.potential_deriv = [e2, e3](double u) {
    const double u3 = u * u * u;
    return e2 / u3 - e3 / (u3 * u);
  };
  m.g_fun = [e2, e3](double u) { return -4.0 * e3 / u - 3.0 * e2 * std::log(u); };
  m.g_deriv = [e2, e3](double u) { return 4.0 * e3 / (u * u) - 3.0 * e2 / u; };
  m.positivity_floor = 0.0;
  m.admissible_lo = 0.5 * eps;
  m.admissible_hi = 2.0;
  m.parameters = {eps};
  return m;
}

ModelSpec chvm(double omega, double eps) {
  const double w2 = omega * omega;
  ModelSpec m;
  m.name = "chvm";
  m.mobility = [w2](double u) { return 1.0 - w2 * u * u; };
  m.potential = [](double u) { return 0.25 * u * u * u * u - 0.5 * u * u; };
  m.potential_deriv = [](double u) { return u * u * u - u; };
  // int (1 - w^2 u^2)(3u^2 - 1) du
  m.g_fun = [w2](double u) {
    const double u2 = u * u;
    return (1.0 + w2 / 3.0) * u2 * u - u - 0.6 * w2 * u2 * u2 * u;
  };
  m.g_deriv = [w2](double u) { return (1.0 - w2 * u * u) * (3.0 * u * u - 1.0); };
  m.gradient_coeff = eps * eps;
  m.admissible_lo = -1.0;
  m.admissible_hi = 1.0;
  m.parameters = {omega, eps};
  return m;
}

Field manufactured_solution(const GridPtr& grid, double t) {
  if (grid->dim() != 2) throw ConfigError("manufactured solution is defined on 2D grids");
  Field u(grid);
  const double amp = 0.1 * std::exp(0.5 * t);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto p = grid->point(i);
    u[i] = 0.3 + amp * std::sin(p[0]) * std::sin(p[1]);
  }
  return u;
}

Field manufactured_time_derivative(const GridPtr& grid, double t) {
  if (grid->dim() != 2) throw ConfigError("manufactured solution is defined on 2D grids");
  Field u(grid);
  const double amp = 0.05 * std::exp(0.5 * t);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto p = grid->point(i);
    u[i] = amp * std::sin(p[0]) * std::sin(p[1]);
  }
  return u;
}

ModelSpec forced_thin_film(double eps) {
  ModelSpec m = thin_film(eps);
  const ModelSpec base = m;
  m.name = "forced_thin_film";
  // Built from the discrete operator so the sampled exact solution solves the
  // semi-discrete system exactly.
  m.forcing = [base](const GridPtr& grid, double t) {
    Field ue = manufactured_solution(grid, t);
    Field f = manufactured_time_derivative(grid, t);
    f -= eval_rhs(base, ue, t);
    return f;
  };
  return m;
}

}  // namespace presets

ModelSpec make_preset(const std::string& name, double eps, double omega) {
  if (name == "classic_ch") return presets::classic_ch(eps);
  if (name == "thin_film") return presets::thin_film(eps);
  if (name == "chvm") return presets::chvm(omega, eps);
  if (name == "forced_thin_film") return presets::forced_thin_film(eps);
  throw ConfigError("unknown model preset '" + name + "'");
}

void check_positivity(const ModelSpec& model, std::span<const double> u) {
  if (!model.positivity_floor) return;
  const auto it = std::min_element(u.begin(), u.end());
  if (*it <= *model.positivity_floor || !std::isfinite(*it)) {
    const auto index = static_cast<std::size_t>(it - u.begin());
    std::ostringstream os;
    os << "positivity violated: min(u) = " << *it << " at point " << index;
    throw PositivityViolation(os.str(), *it, index);
  }
}

// ---------------------------------------------------------------------------

RhsEvaluator::RhsEvaluator(const ModelSpec& model, GridPtr grid)
    : model_(model),
      grid_(std::move(grid)),
      g_vals_(grid_->size()),
      m_vals_(grid_->size()),
      work_real_(grid_->size()),
      work_hat_(grid_->spectral_size()),
      lap_hat_(grid_->spectral_size()) {}

void RhsEvaluator::forcing_hat(double t, std::span<cplx> out) {
  for (const auto& c : forcing_cache_) {
    if (c.t == t) {
      std::copy(c.hat.begin(), c.hat.end(), out.begin());
      return;
    }
  }
  Field f = model_.forcing(grid_, t);
  if (!f.is_finite()) throw BlowupDetected("forcing term is not finite");
  CachedForcing entry{t, std::vector<cplx>(grid_->spectral_size())};
  grid_->forward(f.values(), entry.hat);
  std::copy(entry.hat.begin(), entry.hat.end(), out.begin());
  if (forcing_cache_.size() >= 4) forcing_cache_.erase(forcing_cache_.begin());
  forcing_cache_.push_back(std::move(entry));
}

void RhsEvaluator::evaluate(std::span<const double> u, double t, std::span<cplx> u_hat,
                            std::span<cplx> f_hat) {
  const SpectralGrid& g = *grid_;
  const std::size_t n = g.size();
  const std::size_t ns = g.spectral_size();
  ++evaluations_;

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(u[i])) throw BlowupDetected("solution became non-finite");
  }
  check_positivity(model_, u);

  const double kappa = model_.gradient_coeff;
  for (std::size_t i = 0; i < n; ++i) {
    g_vals_[i] = model_.g_fun(u[i]);
    m_vals_[i] = kappa * model_.mobility(u[i]);
    if (!std::isfinite(g_vals_[i]) || !std::isfinite(m_vals_[i])) {
      throw BlowupDetected("non-finite G(u) or M(u) while evaluating F(u)");
    }
  }

  g.forward(u, u_hat);
  const auto ksq = g.ksq();
  const auto mask = g.dealias_mask();
  const bool dealias = g.dealias();
  for (std::size_t s = 0; s < ns; ++s) lap_hat_[s] = -ksq[s] * u_hat[s];

  // Lap G(u) taken as div(grad G): on Nyquist planes the symbol then drops the
  // same axis the flux term below loses, so the two terms stay balanced there.
  g.forward(g_vals_, f_hat);
  for (std::size_t s = 0; s < ns; ++s) {
    double sym = 0.0;
    for (int a = 0; a < g.dim(); ++a) sym += g.kderiv(a)[s] * g.kderiv(a)[s];
    f_hat[s] *= -sym;
    if (dealias) f_hat[s] *= mask[s];
  }

  // - div( kappa M(u) grad Lap u )
  for (int a = 0; a < g.dim(); ++a) {
    const auto k = g.kderiv(a);
    for (std::size_t s = 0; s < ns; ++s) work_hat_[s] = cplx(-k[s] * lap_hat_[s].imag(), k[s] * lap_hat_[s].real());
    g.inverse_destructive(work_hat_, work_real_);
    for (std::size_t i = 0; i < n; ++i) work_real_[i] *= m_vals_[i];
    g.forward(work_real_, work_hat_);
    for (std::size_t s = 0; s < ns; ++s) {
      cplx flux = work_hat_[s];
      if (dealias) flux *= mask[s];
      f_hat[s] -= cplx(-k[s] * flux.imag(), k[s] * flux.real());
    }
  }

  if (model_.forcing) {
    forcing_hat(t, work_hat_);
    for (std::size_t s = 0; s < ns; ++s) f_hat[s] += work_hat_[s];
  }
}

// ---------------------------------------------------------------------------

Field eval_rhs(const ModelSpec& model, const Field& u, double t) {
  RhsEvaluator ev(model, u.grid_ptr());
  const SpectralGrid& g = u.grid();
  std::vector<cplx> u_hat(g.spectral_size());
  std::vector<cplx> f_hat(g.spectral_size());
  ev.evaluate(u.values(), t, u_hat, f_hat);
  Field out(u.grid_ptr());
  g.inverse_destructive(f_hat, out.values());
  return out;
}

Field chemical_potential(const ModelSpec& model, const Field& u) {
  if (!u.is_finite()) throw BlowupDetected("chemical_potential: non-finite field");
  check_positivity(model, u.values());
  Field w = apply_laplacian(u);
  w *= -model.gradient_coeff;
  for (std::size_t i = 0; i < u.size(); ++i) w[i] += model.potential_deriv(u[i]);
  if (!w.is_finite()) throw BlowupDetected("chemical_potential: non-finite result");
  return w;
}

double energy(const ModelSpec& model, const Field& u) {
  if (!u.is_finite()) throw BlowupDetected("energy: non-finite field");
  check_positivity(model, u.values());
  const auto grad = gradient(u);
  double sum = 0.0;
  const double half_kappa = 0.5 * model.gradient_coeff;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double g2 = 0.0;
    for (const Field& d : grad) g2 += d[i] * d[i];
    sum += model.potential(u[i]) + half_kappa * g2;
  }
  return sum * u.grid().cell_volume();
}

double mass(const Field& u) {
  double sum = 0.0;
  for (double v : u.values()) sum += v;
  return sum * u.grid().cell_volume();
}

double mobility_max(const ModelSpec& model, const Field& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(model.mobility(v)));
  return m;
}

}  // namespace pfimex
