#include "pfimex/spectral_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

namespace pfimex {

namespace {

// FFTW's planner is not re-entrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(std::size_t v) { return v >= 2 && (v & (v - 1)) == 0; }

long signed_mode(std::size_t index, std::size_t n) {
  return index < n / 2 ? static_cast<long>(index) : static_cast<long>(index) - static_cast<long>(n);
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

SpectralGrid::SpectralGrid(std::vector<std::size_t> n, std::vector<double> length, bool dealias)
    : dim_(static_cast<int>(n.size())), n_(std::move(n)), length_(std::move(length)), dealias_(dealias) {
  if (dim_ < 1 || dim_ > 3) {
    throw ConfigError("grid dimension must be 1, 2 or 3");
  }
  if (length_.size() != n_.size()) {
    throw ConfigError("grid needs one length per axis");
  }
  for (int a = 0; a < dim_; ++a) {
    if (!is_power_of_two(n_[a])) {
      std::ostringstream os;
      os << "grid size " << n_[a] << " on axis " << a << " is not a power of two >= 2";
      throw ConfigError(os.str());
    }
    if (!(length_[a] > 0.0) || !std::isfinite(length_[a])) {
      throw ConfigError("grid lengths must be positive and finite");
    }
    size_ *= n_[a];
    cell_volume_ *= length_[a] / static_cast<double>(n_[a]);
    volume_ *= length_[a];
  }
  const std::size_t last = n_[dim_ - 1];
  spectral_size_ = size_ / last * (last / 2 + 1);

  for (int a = 0; a < dim_; ++a) {
    auto& w = wavenumbers_[a];
    w.resize(n_[a]);
    const double base = 2.0 * std::numbers::pi / length_[a];
    for (std::size_t i = 0; i < n_[a]; ++i) {
      w[i] = base * static_cast<double>(signed_mode(i, n_[a]));
    }
  }

  ksq_.assign(spectral_size_, 0.0);
  k4_.assign(spectral_size_, 0.0);
  mask_.assign(spectral_size_, 1.0);
  for (int a = 0; a < dim_; ++a) kderiv_[a].assign(spectral_size_, 0.0);

  for (std::size_t s = 0; s < spectral_size_; ++s) {
    const auto mode = mode_of(s);
    double k2 = 0.0;
    bool keep = true;
    for (int a = 0; a < dim_; ++a) {
      const long m = mode[a];
      const double k = 2.0 * std::numbers::pi / length_[a] * static_cast<double>(m);
      k2 += k * k;
      const bool nyquist = (m == -static_cast<long>(n_[a] / 2));
      kderiv_[a][s] = nyquist ? 0.0 : k;
      if (std::labs(m) > static_cast<long>(n_[a] / 3)) keep = false;
    }
    ksq_[s] = k2;
    k4_[s] = k2 * k2;
    mask_[s] = keep ? 1.0 : 0.0;
  }

  std::array<int, 3> dims{};
  for (int a = 0; a < dim_; ++a) dims[a] = static_cast<int>(n_[a]);

  std::lock_guard<std::mutex> lock(planner_mutex());
  double* real_buf = fftw_alloc_real(size_);
  fftw_complex* spec_buf = fftw_alloc_complex(spectral_size_);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_r2c(dim_, dims.data(), real_buf, spec_buf, flags);
  inverse_plan_ = fftw_plan_dft_c2r(dim_, dims.data(), spec_buf, real_buf, flags);
  fftw_free(real_buf);
  fftw_free(spec_buf);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
    throw Error("FFTW planning failed");
  }
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

std::shared_ptr<const SpectralGrid> SpectralGrid::create(std::vector<std::size_t> n,
                                                         std::vector<double> length, bool dealias) {
  return std::make_shared<const SpectralGrid>(std::move(n), std::move(length), dealias);
}

std::vector<double> SpectralGrid::coordinates(int axis) const {
  std::vector<double> x(n_[axis]);
  const double dx = length_[axis] / static_cast<double>(n_[axis]);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = dx * static_cast<double>(i);
  return x;
}

std::array<double, 3> SpectralGrid::point(std::size_t index) const {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int a = dim_ - 1; a >= 0; --a) {
    const std::size_t i = index % n_[a];
    index /= n_[a];
    p[a] = length_[a] / static_cast<double>(n_[a]) * static_cast<double>(i);
  }
  return p;
}

std::array<long, 3> SpectralGrid::mode_of(std::size_t spectral_index) const {
  std::array<long, 3> mode{0, 0, 0};
  const std::size_t last = n_[dim_ - 1] / 2 + 1;
  std::size_t rest = spectral_index;
  const std::size_t j = rest % last;
  rest /= last;
  // The last axis stores 0..n/2; index n/2 is the Nyquist mode -n/2.
  mode[dim_ - 1] = signed_mode(j, n_[dim_ - 1]);
  for (int a = dim_ - 2; a >= 0; --a) {
    mode[a] = signed_mode(rest % n_[a], n_[a]);
    rest /= n_[a];
  }
  return mode;
}

void SpectralGrid::forward(std::span<const double> values, std::span<cplx> spectrum) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(values.data()),
                       as_fftw(spectrum.data()));
}

void SpectralGrid::inverse_destructive(std::span<cplx> spectrum, std::span<double> values) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), as_fftw(spectrum.data()), values.data());
  const double scale = 1.0 / static_cast<double>(size_);
  for (double& v : values) v *= scale;
}

bool SpectralGrid::same_shape(const SpectralGrid& other) const {
  return this == &other || (n_ == other.n_ && length_ == other.length_);
}

// ---------------------------------------------------------------------------

Field::Field(GridPtr grid, double value) : grid_(std::move(grid)), values_(grid_->size(), value) {}

Field::Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) {
    throw GridError("field value count does not match grid size");
  }
}

bool Field::is_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*grid_, other.grid());
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*grid_, other.grid());
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

SpectralField::SpectralField(GridPtr grid) : grid_(std::move(grid)), coeffs_(grid_->spectral_size()) {}

SpectralField::SpectralField(GridPtr grid, std::vector<cplx> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_->spectral_size()) {
    throw GridError("spectral coefficient count does not match grid");
  }
}

void require_same_grid(const SpectralGrid& a, const SpectralGrid& b) {
  if (!a.same_shape(b)) throw GridError("fields live on different grids");
}

// ---------------------------------------------------------------------------

namespace {

void require_finite(const Field& f, const char* op) {
  if (!f.is_finite()) {
    throw InvalidField(std::string(op) + ": field contains non-finite values");
  }
}

void check_hermitian(const SpectralField& f) {
  const SpectralGrid& g = f.grid();
  const int dim = g.dim();
  const std::size_t last_n = g.n(dim - 1);
  const std::size_t last = last_n / 2 + 1;
  double scale = 0.0;
  for (const cplx& c : f.coeffs()) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return;
  if (!std::isfinite(scale)) throw SpectrumError("spectrum contains non-finite coefficients");
  const double tol = 1e-10 * scale;

  // Only the planes j_last = 0 and j_last = n/2 pair with themselves under k -> -k.
  std::size_t outer = g.spectral_size() / last;
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t partner = 0;
    std::size_t rest = o;
    std::size_t stride = 1;
    for (int a = dim - 2; a >= 0; --a) {
      const std::size_t i = rest % g.n(a);
      rest /= g.n(a);
      partner += ((g.n(a) - i) % g.n(a)) * stride;
      stride *= g.n(a);
    }
    for (std::size_t j : {std::size_t{0}, last_n / 2}) {
      const cplx a = f[o * last + j];
      const cplx b = f[partner * last + j];
      if (std::abs(a - std::conj(b)) > tol) {
        throw SpectrumError("spectrum is not conjugate-symmetric; it does not describe a real field");
      }
    }
  }
}

}  // namespace

SpectralField forward_transform(const Field& f) {
  require_finite(f, "forward_transform");
  SpectralField out(f.grid_ptr());
  f.grid().forward(f.values(), out.coeffs());
  return out;
}

Field inverse_transform(const SpectralField& f) {
  check_hermitian(f);
  std::vector<cplx> scratch(f.coeffs().begin(), f.coeffs().end());
  Field out(f.grid_ptr());
  f.grid().inverse_destructive(scratch, out.values());
  return out;
}

namespace {

template <typename Symbol>
Field apply_symbol(const Field& f, Symbol&& symbol) {
  require_finite(f, "spectral operator");
  const SpectralGrid& g = f.grid();
  std::vector<cplx> spec(g.spectral_size());
  g.forward(f.values(), spec);
  for (std::size_t s = 0; s < spec.size(); ++s) spec[s] *= symbol(s);
  Field out(f.grid_ptr());
  g.inverse_destructive(spec, out.values());
  return out;
}

}  // namespace

Field apply_laplacian(const Field& f) {
  const auto ksq = f.grid().ksq();
  return apply_symbol(f, [&](std::size_t s) { return cplx(-ksq[s], 0.0); });
}

Field apply_biharmonic(const Field& f) {
  const auto k4 = f.grid().k4();
  return apply_symbol(f, [&](std::size_t s) { return cplx(k4[s], 0.0); });
}

std::vector<Field> gradient(const Field& f) {
  require_finite(f, "gradient");
  const SpectralGrid& g = f.grid();
  std::vector<cplx> spec(g.spectral_size());
  std::vector<cplx> work(g.spectral_size());
  g.forward(f.values(), spec);
  std::vector<Field> out;
  out.reserve(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const auto k = g.kderiv(a);
    for (std::size_t s = 0; s < spec.size(); ++s) work[s] = cplx(0.0, k[s]) * spec[s];
    Field d(f.grid_ptr());
    g.inverse_destructive(work, d.values());
    out.push_back(std::move(d));
  }
  return out;
}

Field divergence(const std::vector<Field>& v) {
  if (v.empty()) throw ArityError("divergence needs one component per axis");
  const SpectralGrid& g = v.front().grid();
  if (static_cast<int>(v.size()) != g.dim()) {
    throw ArityError("divergence needs one component per axis");
  }
  std::vector<cplx> acc(g.spectral_size(), cplx(0.0, 0.0));
  std::vector<cplx> work(g.spectral_size());
  for (int a = 0; a < g.dim(); ++a) {
    require_same_grid(g, v[a].grid());
    require_finite(v[a], "divergence");
    g.forward(v[a].values(), work);
    const auto k = g.kderiv(a);
    for (std::size_t s = 0; s < acc.size(); ++s) acc[s] += cplx(0.0, k[s]) * work[s];
  }
  acc[0] = cplx(0.0, 0.0);
  Field out(v.front().grid_ptr());
  g.inverse_destructive(acc, out.values());
  return out;
}

}  // namespace pfimex
