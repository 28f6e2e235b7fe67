#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "pfimex/errors.hpp"

namespace pfimex {

using cplx = std::complex<double>;

/*!
 * \brief Periodic uniform box with Fourier wavenumber tables in 1, 2 or 3
 * dimensions.
 *
 * Physical values are stored row-major with axis 0 (x) slowest.  Spectral
 * coefficients use the real-to-complex half layout: the last axis keeps only
 * indices 0..n/2, every other axis keeps all n indices.
 *
 * Transform convention: the forward transform is unnormalized,
 * \f$\hat u_k = \sum_x u(x) e^{-ik\cdot x}\f$, and the inverse divides by the
 * total number of points.  The mean of a field is therefore
 * \f$\mathrm{Re}\,\hat u_0 / N\f$.
 *
 * The Nyquist index of an axis (wavenumber -n/2) has a zero first-derivative
 * symbol while k^2 and k^4 keep its value.
 *
 * Instances are immutable after construction and safe to share between
 * threads; transforms use the caller's buffers.
 */
class SpectralGrid {
 public:
  /// n must hold 1..3 powers of two (>= 2); length the matching box sizes.
  SpectralGrid(std::vector<std::size_t> n, std::vector<double> length, bool dealias = false);
  ~SpectralGrid();

  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  static std::shared_ptr<const SpectralGrid> create(std::vector<std::size_t> n,
                                                    std::vector<double> length,
                                                    bool dealias = false);

  int dim() const { return dim_; }
  std::size_t n(int axis) const { return n_[axis]; }
  double length(int axis) const { return length_[axis]; }
  const std::vector<std::size_t>& n_per_axis() const { return n_; }
  const std::vector<double>& length_per_axis() const { return length_; }
  bool dealias() const { return dealias_; }

  /// Number of physical grid points.
  std::size_t size() const { return size_; }
  /// Number of stored half-spectrum coefficients.
  std::size_t spectral_size() const { return spectral_size_; }
  double cell_volume() const { return cell_volume_; }
  double volume() const { return volume_; }

  /// Physical wavenumbers 2*pi*m/L for m = 0..n/2-1, -n/2..-1 (FFT order).
  std::span<const double> wavenumbers(int axis) const { return wavenumbers_[axis]; }
  /// Sample coordinates i*L/n along an axis.
  std::vector<double> coordinates(int axis) const;
  /// Coordinates of physical point `index` (unused axes are zero).
  std::array<double, 3> point(std::size_t index) const;

  /// k^2 over the half spectrum.
  std::span<const double> ksq() const { return ksq_; }
  /// k^4 over the half spectrum.
  std::span<const double> k4() const { return k4_; }
  /// First-derivative wavenumber per axis over the half spectrum (Nyquist zeroed).
  std::span<const double> kderiv(int axis) const { return kderiv_[axis]; }
  /// 1 where the coefficient survives 2/3-rule truncation, else 0.
  std::span<const double> dealias_mask() const { return mask_; }

  /// Indices of the half-spectrum entry: per-axis integer mode numbers.
  std::array<long, 3> mode_of(std::size_t spectral_index) const;

  void forward(std::span<const double> values, std::span<cplx> spectrum) const;
  /// Inverse transform, including the 1/N normalization.  Clobbers `spectrum`.
  void inverse_destructive(std::span<cplx> spectrum, std::span<double> values) const;

  /// Structural equality (same dims, sizes and lengths).
  bool same_shape(const SpectralGrid& other) const;

 private:
  int dim_;
  std::vector<std::size_t> n_;
  std::vector<double> length_;
  bool dealias_;
  std::size_t size_ = 1;
  std::size_t spectral_size_ = 1;
  double cell_volume_ = 1.0;
  double volume_ = 1.0;
  std::array<std::vector<double>, 3> wavenumbers_;
  std::vector<double> ksq_;
  std::vector<double> k4_;
  std::array<std::vector<double>, 3> kderiv_;
  std::vector<double> mask_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

/// Real grid function.
class Field {
 public:
  explicit Field(GridPtr grid, double value = 0.0);
  Field(GridPtr grid, std::vector<double> values);

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool is_finite() const;
  double min() const;
  double max() const;
  double max_abs() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Half-spectrum coefficients of a real field.
class SpectralField {
 public:
  explicit SpectralField(GridPtr grid);
  SpectralField(GridPtr grid, std::vector<cplx> coeffs);

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<cplx> coeffs() { return coeffs_; }
  std::span<const cplx> coeffs() const { return coeffs_; }
  cplx& operator[](std::size_t i) { return coeffs_[i]; }
  cplx operator[](std::size_t i) const { return coeffs_[i]; }

 private:
  GridPtr grid_;
  std::vector<cplx> coeffs_;
};

/// Throws GridError unless both fields live on grids of identical shape.
void require_same_grid(const SpectralGrid& a, const SpectralGrid& b);

/// Throws InvalidField on NaN/Inf.
SpectralField forward_transform(const Field& f);
/// Throws SpectrumError if the self-conjugate planes are not Hermitian to
/// 1e-10 relative.
Field inverse_transform(const SpectralField& f);

Field apply_laplacian(const Field& f);
Field apply_biharmonic(const Field& f);
std::vector<Field> gradient(const Field& f);
/// Throws ArityError unless there is one component per axis.
Field divergence(const std::vector<Field>& v);

}  // namespace pfimex
