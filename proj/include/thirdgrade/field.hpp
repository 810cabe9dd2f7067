#pragma once

#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "thirdgrade/basis.hpp"

namespace thirdgrade {

// Velocity field in the Galerkin span, stored as V-orthonormal coefficients:
// y = sum_i c_i e_i with (e_i, e_j)_V = delta_ij. Divergence-free and
// boundary-condition-satisfying by construction.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(BasisPtr basis);
  SpectralField(BasisPtr basis, std::vector<double> coeffs);

  const BasisPtr& basis() const { return basis_; }
  std::size_t size() const { return coeffs_.size(); }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  double& operator[](std::size_t i) { return coeffs_[i]; }

  bool is_finite() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

  bool operator==(const SpectralField& other) const { return coeffs_ == other.coeffs_; }

 private:
  BasisPtr basis_;
  std::vector<double> coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// Basis element e_i as a SpectralField.
SpectralField unit_field(const BasisPtr& basis, std::size_t i);

// Samples on the N x N grid x = 2 pi (j1, j2) / N, row-major with x2 fastest.
struct ScalarField {
  int n = 0;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(int n_) : n(n_), values(std::size_t(n_) * n_, 0.0) {}
  double& at(int j1, int j2) { return values[std::size_t(j1) * n + j2]; }
  double at(int j1, int j2) const { return values[std::size_t(j1) * n + j2]; }
};

struct PhysicalField {
  int n = 0;
  std::array<std::vector<double>, 2> comp;

  PhysicalField() = default;
  explicit PhysicalField(int n_);
};

// 2 x 2 tensor field; comp[2 * i + j] holds the (i, j) entry.
struct TensorField {
  int n = 0;
  std::array<std::vector<double>, 4> comp;

  TensorField() = default;
  explicit TensorField(int n_);
  std::vector<double>& operator()(int i, int j) { return comp[2 * i + j]; }
  const std::vector<double>& operator()(int i, int j) const { return comp[2 * i + j]; }
};

struct NormReport {
  double l2 = 0.0;       // ||y||_2
  double v_norm = 0.0;   // ||y||_V
  double w_tilde = 0.0;  // (||y||_V^2 + ||curl v(y)||_2^2)^{1/2}
  double w24 = 0.0;      // ||y||_{W^{2,4}}
};

// FFT scratch space bound to one basis. Not thread-safe; use one per worker.
//
// Fields are reconstructed from the streamfunction spectrum psi_hat, where
// y = (d2 psi, -d1 psi). Any derivative of y or of v(y) = y - alpha1 Lap y is
// a multiplier on psi_hat followed by one inverse real FFT.
class SpectralWorkspace {
 public:
  using cplx = std::complex<double>;

  explicit SpectralWorkspace(BasisPtr basis);
  ~SpectralWorkspace();
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const BasisPtr& basis() const { return basis_; }
  const GalerkinBasis& basis_ref() const { return *basis_; }
  int n() const { return n_; }
  std::size_t points() const { return std::size_t(n_) * n_; }
  std::size_t spectrum_size() const { return std::size_t(n_) * (n_ / 2 + 1); }

  // Builds psi_hat from the coefficients of y.
  void load(const SpectralField& y);

  // out = d1^a d2^b of component `comp` (0 or 1) of y, or of v(y) when
  // `vmap` is set. Requires a prior load().
  void velocity_derivative(int comp, int a, int b, bool vmap, std::span<double> out);
  // out = d1^a d2^b (-Lap)^p psi, times (1 + alpha1 |k|^2) when `vmap` is
  // set. curl y = -Lap psi, so curl v(y) is psi_derivative(0, 0, 1, true).
  void psi_derivative(int a, int b, int p, bool vmap, std::span<double> out);

  // Normalised forward transform: out[k] = (1/N^2) sum_x f(x) e^{-ik.x}.
  void forward(std::span<const double> in, std::span<cplx> out);

  // (f, e_i) for every basis mode, f given by the spectra of its components.
  void pair_vector(std::span<const cplx> f1, std::span<const cplx> f2, std::span<double> out) const;
  // (div T, e_i) for every basis mode, (div T)_i = sum_j d_j T_ij.
  void pair_divergence(std::span<const cplx> t11, std::span<const cplx> t12,
                       std::span<const cplx> t21, std::span<const cplx> t22,
                       std::span<double> out) const;

  // Quadrature of f over the physical domain.
  double integrate(std::span<const double> f) const;
  double cell_weight() const;

  // Signed wavenumber for a grid index.
  int wavenumber(int index) const { return index <= n_ / 2 ? index : index - n_; }

 private:
  struct TermSlot {
    std::size_t index;
    bool conjugate;
    double k1, k2;
    cplx phi;
  };
  std::size_t slot_for(int k1, int k2, bool& conjugate) const;
  cplx lookup(std::span<const cplx> f, const TermSlot& s) const;

  BasisPtr basis_;
  int n_;
  double alpha1_;
  std::vector<std::vector<TermSlot>> slots_;
  void* plan_r2c_ = nullptr;
  void* plan_c2r_ = nullptr;
  double* real_buf_ = nullptr;
  cplx* cplx_buf_ = nullptr;
  std::vector<cplx> psi_hat_;
};

// A per-thread workspace for `basis`, created on first use.
SpectralWorkspace& workspace_for(const BasisPtr& basis);

// Physical grid samples of y.
PhysicalField synthesize(SpectralWorkspace& ws, const SpectralField& y);
PhysicalField synthesize(const SpectralField& y);
// Physical grid samples of v(y) = y - alpha1 Lap y.
PhysicalField synthesize_v(SpectralWorkspace& ws, const SpectralField& y);

// grad(y)(i, j) = d_j y_i.
TensorField grad(SpectralWorkspace& ws, const SpectralField& y);
TensorField sym_D(SpectralWorkspace& ws, const SpectralField& y);
// A(y) = grad y + grad y^T = 2 D(y).
TensorField A_of(SpectralWorkspace& ws, const SpectralField& y);
PhysicalField laplacian(SpectralWorkspace& ws, const SpectralField& y);
// Scalar curl d1 y2 - d2 y1.
ScalarField curl2d(SpectralWorkspace& ws, const SpectralField& y);
// curl v(y) with v(y) = y - alpha1 Lap y.
ScalarField curl_v(SpectralWorkspace& ws, const SpectralField& y);

TensorField grad(const SpectralField& y);
TensorField sym_D(const SpectralField& y);
TensorField A_of(const SpectralField& y);
PhysicalField laplacian(const SpectralField& y);
ScalarField curl2d(const SpectralField& y);

// ||u||_{W^{2,4}}^4 = sum over components i and multi-indices |g| <= 2 of
// the integral of |d^g u_i|^4.
double w24_norm(SpectralWorkspace& ws, const SpectralField& y);

// l2 and v_norm from the coefficients; w_tilde and w24 by quadrature.
NormReport norms(SpectralWorkspace& ws, const SpectralField& y);
NormReport norms(const SpectralField& y);

// ||y||_V^2 = sum c_i^2, ||y||_2^2 = sum c_i^2 / v_factor_i,
// ||y||_{W~}^2 = sum lambda_i c_i^2.
double v_norm_squared(const SpectralField& y);
double l2_norm_squared(const SpectralField& y);
double w_tilde_norm_squared(const SpectralField& y);
// (y, z)_V = sum c_i d_i.
double v_inner(const SpectralField& y, const SpectralField& z);

// (f, e_i) for every mode, by quadrature.
std::vector<double> l2_pairings(SpectralWorkspace& ws, const PhysicalField& f);

// V-orthogonal projection P_n f: c_i = (f, e_i)_V = v_factor_i (f, e_i).
// Throws GridMismatch if f is not sampled on the workspace grid.
SpectralField project_V(SpectralWorkspace& ws, const PhysicalField& f);
SpectralField project_V(const PhysicalField& f, const BasisPtr& basis);

// Quadrature inner products over the physical domain.
double l2_inner(SpectralWorkspace& ws, const PhysicalField& f, const PhysicalField& g);
double integrate(SpectralWorkspace& ws, const ScalarField& f);

// Samples fn(x1, x2) -> (u1, u2) on the workspace grid. On the channel the
// function is evaluated on (0, pi) and extended with u1 even, u2 odd in x2.
PhysicalField sample_field(const GalerkinBasis& basis,
                           const std::function<std::array<double, 2>(double, double)>& fn);

// CSV exports. Channel snapshots list only points with x2 in [0, pi].
void write_field_csv(const GalerkinBasis& basis, const PhysicalField& f, std::ostream& out);
void write_coefficients_csv(const SpectralField& y, std::ostream& out);

}  // namespace thirdgrade
