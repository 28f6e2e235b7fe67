#include "pfimex/steppers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pfimex {

std::string SchemeConfig::label() const {
  switch (kind) {
    case SchemeKind::BackwardEuler:
      return "BE" + std::to_string(iterations);
    case SchemeKind::CrankNicolson:
      return "CN" + std::to_string(iterations);
    case SchemeKind::Imex1:
      return "IMEX1";
    case SchemeKind::Imex2:
      return "IMEX2";
  }
  return "?";
}

int SchemeConfig::nominal_order() const {
  switch (kind) {
    case SchemeKind::BackwardEuler:
      return 1;
    case SchemeKind::CrankNicolson:
      return iterations >= 2 ? 2 : 1;
    case SchemeKind::Imex1:
    case SchemeKind::Imex2:
      return 2;
  }
  return 1;
}

void SchemeConfig::validate() const {
  if ((kind == SchemeKind::BackwardEuler || kind == SchemeKind::CrankNicolson) && iterations < 1) {
    throw ConfigError("scheme: iteration count J must be >= 1");
  }
}

// ---------------------------------------------------------------------------

Stepper::Stepper(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model, GridPtr grid)
    : scheme_(scheme),
      split_(split),
      evaluator_(model, grid),
      grid_(std::move(grid)),
      symbol_(grid_->spectral_size()),
      scratch_(grid_->spectral_size()) {
  scheme_.validate();
  split_.validate();
}

void Stepper::eval_fex(std::span<const double> u, double t, Spectrum& u_hat, Spectrum& fex_hat) {
  evaluator_.evaluate(u, t, u_hat, fex_hat);
  ++fex_count_;
  // F_ex = F - F_im = F + s(k) u
  for (std::size_t s = 0; s < symbol_.size(); ++s) fex_hat[s] += symbol_[s] * u_hat[s];
}

void Stepper::solve(const Spectrum& rhs, double hw, Spectrum& out) const {
  for (std::size_t s = 0; s < symbol_.size(); ++s) out[s] = rhs[s] / (1.0 + hw * symbol_[s]);
}

void Stepper::to_physical(const Spectrum& hat, std::vector<double>& out) {
  std::copy(hat.begin(), hat.end(), scratch_.begin());
  out.resize(grid_->size());
  grid_->inverse_destructive(scratch_, out);
}

Field Stepper::finish(const std::vector<double>& u, const Field& like) const {
  for (double v : u) {
    if (!std::isfinite(v)) throw BlowupDetected("solution became non-finite");
  }
  return Field(like.grid_ptr(), u);
}

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool non_monotone(const std::vector<double>& r, double floor) {
  for (std::size_t j = 1; j < r.size(); ++j) {
    if (r[j] > r[j - 1] && r[j] > floor) return true;
  }
  return false;
}

}  // namespace

StepResult Stepper::step(const Field& u_n, const Field* u_prev, double t, double h) {
  require_same_grid(*grid_, u_n.grid());
  if (!(h >= 0.0)) throw ConfigError("step size must be nonnegative");
  const double m2 = resolve_m2(split_, evaluator_.model(), u_n);
  implicit_symbol(split_, m2, *grid_, symbol_);
  fex_count_ = 0;

  StepResult r{u_n, t + h, 0, {}, false, m2};
  switch (scheme_.kind) {
    case SchemeKind::BackwardEuler:
      r = step_be(u_n, u_prev, t, h);
      break;
    case SchemeKind::CrankNicolson:
      r = step_cn(u_n, u_prev, t, h);
      break;
    case SchemeKind::Imex1:
      r = step_imex1(u_n, t, h);
      break;
    case SchemeKind::Imex2:
      r = step_imex2(u_n, t, h);
      break;
  }
  r.t_next = t + h;
  r.fex_evals = fex_count_;
  r.m2 = m2;
  return r;
}

StepResult Stepper::step_be(const Field& u_n, const Field* u_prev, double t, double h) {
  const std::size_t ns = grid_->spectral_size();
  Spectrum un_hat(ns), it_hat(ns), fex(ns), rhs(ns);
  std::vector<double> prev(u_n.values().begin(), u_n.values().end());
  double t_iter = t;

  if (scheme_.initial_iterate == InitialIterate::Extrapolated && u_prev != nullptr) {
    for (std::size_t i = 0; i < prev.size(); ++i) prev[i] = 2.0 * u_n[i] - (*u_prev)[i];
    grid_->forward(u_n.values(), un_hat);
    t_iter = t + h;
    eval_fex(prev, t_iter, it_hat, fex);
  } else {
    eval_fex(prev, t_iter, un_hat, fex);
  }

  StepResult r{u_n, t + h, 0, {}, false, 0.0};
  std::vector<double> cur;
  for (int j = 1; j <= scheme_.iterations; ++j) {
    if (j > 1) eval_fex(prev, t + h, it_hat, fex);
    for (std::size_t s = 0; s < ns; ++s) rhs[s] = un_hat[s] + h * fex[s];
    solve(rhs, h, it_hat);
    to_physical(it_hat, cur);
    r.iterate_residuals.push_back(max_abs_diff(cur, prev));
    std::swap(prev, cur);
  }
  r.u_next = finish(prev, u_n);
  r.residuals_non_monotone = non_monotone(r.iterate_residuals, 1e-13 * (1.0 + r.u_next.max_abs()));
  return r;
}

StepResult Stepper::step_cn(const Field& u_n, const Field* u_prev, double t, double h) {
  const std::size_t ns = grid_->spectral_size();
  Spectrum un_hat(ns), fn_hat(ns), it_hat(ns), fex(ns), rhs(ns);
  std::vector<double> prev(u_n.values().begin(), u_n.values().end());

  // F(U_n) once per step; F_ex(U_n) follows from it without another evaluation.
  evaluator_.evaluate(u_n.values(), t, un_hat, fn_hat);
  ++fex_count_;
  const bool extrapolate = scheme_.initial_iterate == InitialIterate::Extrapolated && u_prev != nullptr;
  if (extrapolate) {
    for (std::size_t i = 0; i < prev.size(); ++i) prev[i] = 2.0 * u_n[i] - (*u_prev)[i];
    eval_fex(prev, t + h, it_hat, fex);
  } else {
    for (std::size_t s = 0; s < ns; ++s) fex[s] = fn_hat[s] + symbol_[s] * un_hat[s];
  }

  StepResult r{u_n, t + h, 0, {}, false, 0.0};
  std::vector<double> cur;
  for (int j = 1; j <= scheme_.iterations; ++j) {
    if (j > 1) eval_fex(prev, t + h, it_hat, fex);
    for (std::size_t s = 0; s < ns; ++s) rhs[s] = un_hat[s] + 0.5 * h * (fex[s] + fn_hat[s]);
    solve(rhs, 0.5 * h, it_hat);
    to_physical(it_hat, cur);
    r.iterate_residuals.push_back(max_abs_diff(cur, prev));
    std::swap(prev, cur);
  }
  r.u_next = finish(prev, u_n);
  r.residuals_non_monotone = non_monotone(r.iterate_residuals, 1e-13 * (1.0 + r.u_next.max_abs()));
  return r;
}

StepResult Stepper::step_imex1(const Field& u_n, double t, double h) {
  const std::size_t ns = grid_->spectral_size();
  Spectrum u0_hat(ns), u1_hat(ns), u2_hat(ns), u3_hat(ns), tmp_hat(ns), fex(ns), rhs(ns);
  std::vector<double> u1, u2, u3;

  // U1 = U0 + h (F_ex(U0) + F_im(U1))
  eval_fex(u_n.values(), t, u0_hat, fex);
  for (std::size_t s = 0; s < ns; ++s) rhs[s] = u0_hat[s] + h * fex[s];
  solve(rhs, h, u1_hat);
  to_physical(u1_hat, u1);

  // U2 = 3/2 U0 - 1/2 U1 + h/2 (F_ex(U1) + F_im(U2)); U1 sits at t + h.
  eval_fex(u1, t + h, tmp_hat, fex);
  for (std::size_t s = 0; s < ns; ++s) rhs[s] = 1.5 * u0_hat[s] - 0.5 * u1_hat[s] + 0.5 * h * fex[s];
  solve(rhs, 0.5 * h, u2_hat);
  to_physical(u2_hat, u2);

  // U3 = U2 + h (F_ex(U2) + F_im(U3)); U2 sits at t.
  eval_fex(u2, t, tmp_hat, fex);
  for (std::size_t s = 0; s < ns; ++s) rhs[s] = u2_hat[s] + h * fex[s];
  solve(rhs, h, u3_hat);
  to_physical(u3_hat, u3);

  return StepResult{finish(u3, u_n), t + h, 0, {}, false, 0.0};
}

StepResult Stepper::step_imex2(const Field& u_n, double t, double h) {
  const std::size_t ns = grid_->spectral_size();
  const double g = imex2_constants::gamma;
  const double d = imex2_constants::delta;
  Spectrum u0_hat(ns), u1_hat(ns), u2_hat(ns), tmp_hat(ns), fex0(ns), fex1(ns), rhs(ns);
  std::vector<double> u1, u2;

  // U1 = U0 + h (g F_ex(U0) + g F_im(U1))
  eval_fex(u_n.values(), t, u0_hat, fex0);
  for (std::size_t s = 0; s < ns; ++s) rhs[s] = u0_hat[s] + h * g * fex0[s];
  solve(rhs, g * h, u1_hat);
  to_physical(u1_hat, u1);

  // U2 = U0 + h (d F_ex(U0) + (1-d) F_ex(U1) + (1-g) F_im(U1) + g F_im(U2))
  eval_fex(u1, t + g * h, tmp_hat, fex1);
  for (std::size_t s = 0; s < ns; ++s) {
    const cplx fim1 = -symbol_[s] * u1_hat[s];
    rhs[s] = u0_hat[s] + h * (d * fex0[s] + (1.0 - d) * fex1[s] + (1.0 - g) * fim1);
  }
  solve(rhs, g * h, u2_hat);
  to_physical(u2_hat, u2);

  return StepResult{finish(u2, u_n), t + h, 0, {}, false, 0.0};
}

// ---------------------------------------------------------------------------

StepResult step_be(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                   const Field& u_n, const Field* u_prev, double t, double h) {
  SchemeConfig s = scheme;
  s.kind = SchemeKind::BackwardEuler;
  return Stepper(s, split, model, u_n.grid_ptr()).step(u_n, u_prev, t, h);
}

StepResult step_cn(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                   const Field& u_n, const Field* u_prev, double t, double h) {
  SchemeConfig s = scheme;
  s.kind = SchemeKind::CrankNicolson;
  return Stepper(s, split, model, u_n.grid_ptr()).step(u_n, u_prev, t, h);
}

StepResult step_imex1(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                      const Field& u_n, double t, double h) {
  SchemeConfig s = scheme;
  s.kind = SchemeKind::Imex1;
  return Stepper(s, split, model, u_n.grid_ptr()).step(u_n, nullptr, t, h);
}

StepResult step_imex2(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                      const Field& u_n, double t, double h) {
  SchemeConfig s = scheme;
  s.kind = SchemeKind::Imex2;
  return Stepper(s, split, model, u_n.grid_ptr()).step(u_n, nullptr, t, h);
}

// ---------------------------------------------------------------------------

RunRecord advance(const SchemeConfig& scheme, const SplitConfig& split, const ModelSpec& model,
                  const Field& u0, double t0, double t_end, double h, const AdvanceOptions& options) {
  if (!(h > 0.0)) throw ConfigError("advance: step size h must be positive");
  if (!(t_end >= t0)) throw ConfigError("advance: t_end precedes t0");
  if (options.sample_every < 1) throw ConfigError("advance: sample_every must be >= 1");

  const double span = t_end - t0;
  const double ratio = span / h;
  long n_full = std::lround(ratio);
  bool equal_steps = std::abs(ratio - static_cast<double>(n_full)) <= 1e-9 * std::max(1.0, ratio);
  if (!equal_steps) n_full = static_cast<long>(std::floor(ratio));
  const long n_steps = equal_steps ? n_full : n_full + 1;
  if (n_steps > options.max_steps) {
    std::ostringstream os;
    os << "advance: " << n_steps << " steps exceed the budget of " << options.max_steps;
    throw ConfigError(os.str());
  }

  RunRecord rec;
  rec.energy_tol = options.energy_tol;
  Stepper stepper(scheme, split, model, u0.grid_ptr());

  Field u = u0;
  std::optional<Field> prev;
  double t = t0;
  double e_old = std::numeric_limits<double>::quiet_NaN();

  auto fail = [&](const std::string& reason, long step) {
    rec.failure = RunFailure{reason, step, t};
    rec.energy_monotone = false;
  };

  try {
    e_old = options.track_energy ? energy(model, u) : std::numeric_limits<double>::quiet_NaN();
    rec.add_sample(t, model, u, e_old);
  } catch (const NumericalFailure& e) {
    fail(e.what(), 0);
  }

  for (long n = 1; n <= n_steps && !rec.failure; ++n) {
    const double t_next = (n == n_steps) ? t_end : t0 + static_cast<double>(n) * h;
    try {
      StepResult r = stepper.step(u, prev ? &*prev : nullptr, t, t_next - t);
      check_positivity(model, r.u_next.values());
      rec.fex_evals += r.fex_evals;
      rec.residual_warning = rec.residual_warning || r.residuals_non_monotone;
      double e_new = std::numeric_limits<double>::quiet_NaN();
      if (options.track_energy) {
        e_new = energy(model, r.u_next);
        const double rise = (e_new - e_old) / (1.0 + std::abs(e_old));
        if (!std::isfinite(rise)) {
          rec.energy_monotone = false;
          rec.max_energy_rise = std::numeric_limits<double>::infinity();
        } else {
          rec.max_energy_rise = std::max(rec.max_energy_rise, rise);
          if (rise > options.energy_tol) rec.energy_monotone = false;
        }
      }
      if (options.stop_on_energy_rise && !rec.energy_monotone) {
        rec.failure = RunFailure{"energy increased", n, t_next};
        break;
      }
      if (scheme.initial_iterate == InitialIterate::Extrapolated) prev = std::move(u);
      u = std::move(r.u_next);
      t = t_next;
      e_old = e_new;
      rec.steps = n;
      if (n % options.sample_every == 0 || n == n_steps) rec.add_sample(t, model, u, e_new);
      for (const auto& obs : options.observers) obs(n, t, u);
    } catch (const NumericalFailure& e) {
      fail(e.what(), n);
    }
  }

  rec.final_state = u;
  rec.final_time = t;
  return rec;
}

}  // namespace pfimex
