#include "pfimex/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "pfimex/steppers.hpp"

namespace pfimex {

void RunRecord::add_sample(double t, const ModelSpec& model, const Field& u, double e) {
  times.push_back(t);
  energy.push_back(e);
  mass.push_back(pfimex::mass(u));
  mobility_max.push_back(pfimex::mobility_max(model, u));
  umin.push_back(u.min());
  umax.push_back(u.max());
}

bool check_energy_stability(const RunRecord& record, double tol) {
  if (record.failure) return false;
  for (double e : record.energy) {
    if (!std::isfinite(e)) return false;
  }
  if (record.steps > 0 && record.max_energy_rise > tol) return false;
  for (std::size_t i = 1; i < record.energy.size(); ++i) {
    const double prev = record.energy[i - 1];
    if (record.energy[i] > prev + tol * (1.0 + std::abs(prev))) return false;
  }
  return true;
}

double l1_error(const Field& u, const Field& u_ref) {
  require_same_grid(u.grid(), u_ref.grid());
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += std::abs(u[i] - u_ref[i]);
  return sum * u.grid().cell_volume();
}

void write_record_csv(const RunRecord& record, std::ostream& os) {
  os << "t,energy,mass,mobility_max,umin,umax\n";
  char buf[64];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << (last ? '\n' : ',');
  };
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    put(record.times[i], false);
    put(record.energy[i], false);
    put(record.mass[i], false);
    put(record.mobility_max[i], false);
    put(record.umin[i], false);
    put(record.umax[i], true);
  }
}

Field richardson_reference(const ModelSpec& model, const SchemeConfig& scheme, const SplitConfig& split,
                           const Field& u0, double t0, double T, double h_fine, double* mobility_max_out) {
  const double ratio = T / h_fine;
  if (!(h_fine > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("richardson_reference: h_fine must divide T");
  }
  AdvanceOptions opts;
  opts.track_energy = false;
  RunRecord coarse = advance(scheme, split, model, u0, t0, t0 + T, h_fine, opts);
  if (coarse.failure) throw NumericalFailure("richardson_reference: run at h_fine failed: " + coarse.failure->reason);
  if (mobility_max_out) {
    *mobility_max_out = 0.0;
    for (double m : coarse.mobility_max) *mobility_max_out = std::max(*mobility_max_out, m);
  }
  RunRecord fine = advance(scheme, split, model, u0, t0, t0 + T, 0.5 * h_fine, opts);
  if (fine.failure) throw NumericalFailure("richardson_reference: run at h_fine/2 failed: " + fine.failure->reason);

  const double w = std::ldexp(1.0, scheme.nominal_order());
  Field out = *fine.final_state;
  const Field& c = *coarse.final_state;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (w * out[i] - c[i]) / (w - 1.0);
  return out;
}

}  // namespace pfimex
