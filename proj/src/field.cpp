#include "thirdgrade/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "thirdgrade/errors.hpp"

namespace thirdgrade {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

cplx i_power(int p) {
  switch (((p % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

double int_power(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

void require_basis(const SpectralField& y) {
  if (!y.basis()) throw std::invalid_argument("SpectralField has no basis");
}

}  // namespace

// --- SpectralField --------------------------------------------------------

SpectralField::SpectralField(BasisPtr basis)
    : basis_(std::move(basis)), coeffs_(basis_ ? basis_->size() : 0, 0.0) {}

SpectralField::SpectralField(BasisPtr basis, std::vector<double> coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (basis_ && coeffs_.size() != basis_->size())
    throw std::invalid_argument("coefficient vector does not match basis size");
}

bool SpectralField::is_finite() const {
  for (double c : coeffs_)
    if (!std::isfinite(c)) return false;
  return true;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

SpectralField unit_field(const BasisPtr& basis, std::size_t i) {
  SpectralField e(basis);
  e[i] = 1.0;
  return e;
}

PhysicalField::PhysicalField(int n_) : n(n_) {
  for (auto& c : comp) c.assign(std::size_t(n_) * n_, 0.0);
}

TensorField::TensorField(int n_) : n(n_) {
  for (auto& c : comp) c.assign(std::size_t(n_) * n_, 0.0);
}

// --- SpectralWorkspace ----------------------------------------------------

SpectralWorkspace::SpectralWorkspace(BasisPtr basis)
    : basis_(std::move(basis)), n_(basis_->grid_size()), alpha1_(basis_->alpha1()) {
  real_buf_ = fftw_alloc_real(points());
  cplx_buf_ = reinterpret_cast<cplx*>(fftw_alloc_complex(spectrum_size()));
  {
    // FFTW_ESTIMATE keeps plan selection, and therefore rounding,
    // identical from run to run.
    std::lock_guard lock(planner_mutex());
    plan_r2c_ = fftw_plan_dft_r2c_2d(n_, n_, real_buf_,
                                     reinterpret_cast<fftw_complex*>(cplx_buf_), FFTW_ESTIMATE);
    plan_c2r_ = fftw_plan_dft_c2r_2d(n_, n_, reinterpret_cast<fftw_complex*>(cplx_buf_),
                                     real_buf_, FFTW_ESTIMATE);
  }
  psi_hat_.assign(spectrum_size(), cplx{});

  slots_.resize(basis_->size());
  for (std::size_t i = 0; i < basis_->size(); ++i) {
    const Mode& m = basis_->mode(i);
    for (int t = 0; t < m.n_terms; ++t) {
      const auto& term = m.terms[t];
      TermSlot s;
      s.index = slot_for(term.k1, term.k2, s.conjugate);
      s.k1 = term.k1;
      s.k2 = term.k2;
      s.phi = term.phi;
      slots_[i].push_back(s);
    }
  }
}

SpectralWorkspace::~SpectralWorkspace() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_r2c_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_c2r_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

std::size_t SpectralWorkspace::slot_for(int k1, int k2, bool& conjugate) const {
  const int nc = n_ / 2 + 1;
  conjugate = k2 < 0;
  if (conjugate) {
    k1 = -k1;
    k2 = -k2;
  }
  const int j1 = ((k1 % n_) + n_) % n_;
  return std::size_t(j1) * nc + k2;
}

SpectralWorkspace::cplx SpectralWorkspace::lookup(std::span<const cplx> f, const TermSlot& s) const {
  return s.conjugate ? std::conj(f[s.index]) : f[s.index];
}

void SpectralWorkspace::load(const SpectralField& y) {
  if (y.size() != basis_->size()) throw GridMismatch("field does not belong to this basis");
  std::fill(psi_hat_.begin(), psi_hat_.end(), cplx{});
  const int nc = n_ / 2 + 1;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const double c = y[i];
    if (c == 0.0) continue;
    const Mode& m = basis_->mode(i);
    for (int t = 0; t < m.n_terms; ++t) {
      const auto& term = m.terms[t];
      const cplx a = 0.5 * c * term.phi;
      if (term.k2 > 0) {
        const int j1 = ((term.k1 % n_) + n_) % n_;
        psi_hat_[std::size_t(j1) * nc + term.k2] += a;
      } else if (term.k2 < 0) {
        const int j1 = (((-term.k1) % n_) + n_) % n_;
        psi_hat_[std::size_t(j1) * nc - term.k2] += std::conj(a);
      } else {
        const int jp = ((term.k1 % n_) + n_) % n_;
        const int jm = (((-term.k1) % n_) + n_) % n_;
        psi_hat_[std::size_t(jp) * nc] += a;
        psi_hat_[std::size_t(jm) * nc] += std::conj(a);
      }
    }
  }
}

void SpectralWorkspace::psi_derivative(int a, int b, int p, bool vmap, std::span<double> out) {
  const int nc = n_ / 2 + 1;
  const cplx ip = i_power(a + b);
  for (int j1 = 0; j1 < n_; ++j1) {
    const double k1 = wavenumber(j1);
    const double f1 = int_power(k1, a);
    for (int j2 = 0; j2 < nc; ++j2) {
      const std::size_t idx = std::size_t(j1) * nc + j2;
      const cplx v = psi_hat_[idx];
      if (v == cplx{}) {
        cplx_buf_[idx] = cplx{};
        continue;
      }
      const double k2 = j2;
      const double kk = k1 * k1 + k2 * k2;
      double mult = f1 * int_power(k2, b) * int_power(kk, p);
      if (vmap) mult *= 1.0 + alpha1_ * kk;
      cplx_buf_[idx] = ip * mult * v;
    }
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_),
                       reinterpret_cast<fftw_complex*>(cplx_buf_), real_buf_);
  std::copy(real_buf_, real_buf_ + points(), out.begin());
}

void SpectralWorkspace::velocity_derivative(int comp, int a, int b, bool vmap,
                                            std::span<double> out) {
  if (comp == 0) {
    psi_derivative(a, b + 1, 0, vmap, out);
  } else {
    psi_derivative(a + 1, b, 0, vmap, out);
    for (double& x : out) x = -x;
  }
}

void SpectralWorkspace::forward(std::span<const double> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), real_buf_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), real_buf_,
                       reinterpret_cast<fftw_complex*>(cplx_buf_));
  const double scale = 1.0 / (double(n_) * n_);
  for (std::size_t i = 0; i < spectrum_size(); ++i) out[i] = cplx_buf_[i] * scale;
}

void SpectralWorkspace::pair_vector(std::span<const cplx> f1, std::span<const cplx> f2,
                                    std::span<double> out) const {
  const double w = basis_->domain_factor() * 4.0 * kPi * kPi;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    double s = 0.0;
    for (const auto& slot : slots_[i]) {
      const cplx g = slot.k2 * lookup(f1, slot) - slot.k1 * lookup(f2, slot);
      s += (cplx(0.0, -1.0) * std::conj(slot.phi) * g).real();
    }
    out[i] = w * s;
  }
}

void SpectralWorkspace::pair_divergence(std::span<const cplx> t11, std::span<const cplx> t12,
                                        std::span<const cplx> t21, std::span<const cplx> t22,
                                        std::span<double> out) const {
  const double w = basis_->domain_factor() * 4.0 * kPi * kPi;
  const cplx I(0.0, 1.0);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    double s = 0.0;
    for (const auto& slot : slots_[i]) {
      const cplx d1 = I * (slot.k1 * lookup(t11, slot) + slot.k2 * lookup(t12, slot));
      const cplx d2 = I * (slot.k1 * lookup(t21, slot) + slot.k2 * lookup(t22, slot));
      const cplx g = slot.k2 * d1 - slot.k1 * d2;
      s += (-I * std::conj(slot.phi) * g).real();
    }
    out[i] = w * s;
  }
}

double SpectralWorkspace::cell_weight() const {
  const double h = 2.0 * kPi / n_;
  return basis_->domain_factor() * h * h;
}

double SpectralWorkspace::integrate(std::span<const double> f) const {
  double s = 0.0;
  for (double x : f) s += x;
  return s * cell_weight();
}

SpectralWorkspace& workspace_for(const BasisPtr& basis) {
  thread_local std::vector<std::unique_ptr<SpectralWorkspace>> cache;
  for (auto& ws : cache)
    if (ws->basis() == basis) return *ws;
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.push_back(std::make_unique<SpectralWorkspace>(basis));
  return *cache.back();
}

// --- calculus ---------------------------------------------------------------

PhysicalField synthesize(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  PhysicalField f(ws.n());
  ws.velocity_derivative(0, 0, 0, false, f.comp[0]);
  ws.velocity_derivative(1, 0, 0, false, f.comp[1]);
  return f;
}

PhysicalField synthesize_v(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  PhysicalField f(ws.n());
  ws.velocity_derivative(0, 0, 0, true, f.comp[0]);
  ws.velocity_derivative(1, 0, 0, true, f.comp[1]);
  return f;
}

TensorField grad(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  TensorField g(ws.n());
  for (int i = 0; i < 2; ++i) {
    ws.velocity_derivative(i, 1, 0, false, g(i, 0));
    ws.velocity_derivative(i, 0, 1, false, g(i, 1));
  }
  return g;
}

TensorField sym_D(SpectralWorkspace& ws, const SpectralField& y) {
  TensorField g = grad(ws, y);
  TensorField d(ws.n());
  for (std::size_t p = 0; p < ws.points(); ++p) {
    d(0, 0)[p] = g(0, 0)[p];
    d(1, 1)[p] = g(1, 1)[p];
    d(0, 1)[p] = d(1, 0)[p] = 0.5 * (g(0, 1)[p] + g(1, 0)[p]);
  }
  return d;
}

TensorField A_of(SpectralWorkspace& ws, const SpectralField& y) {
  TensorField d = sym_D(ws, y);
  for (auto& c : d.comp)
    for (double& x : c) x *= 2.0;
  return d;
}

PhysicalField laplacian(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  PhysicalField f(ws.n());
  std::vector<double> tmp(ws.points());
  for (int i = 0; i < 2; ++i) {
    ws.velocity_derivative(i, 2, 0, false, f.comp[i]);
    ws.velocity_derivative(i, 0, 2, false, tmp);
    for (std::size_t p = 0; p < ws.points(); ++p) f.comp[i][p] += tmp[p];
  }
  return f;
}

ScalarField curl2d(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  ScalarField c(ws.n());
  ws.psi_derivative(0, 0, 1, false, c.values);
  return c;
}

ScalarField curl_v(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  ScalarField c(ws.n());
  ws.psi_derivative(0, 0, 1, true, c.values);
  return c;
}

PhysicalField synthesize(const SpectralField& y) {
  require_basis(y);
  return synthesize(workspace_for(y.basis()), y);
}
TensorField grad(const SpectralField& y) {
  require_basis(y);
  return grad(workspace_for(y.basis()), y);
}
TensorField sym_D(const SpectralField& y) {
  require_basis(y);
  return sym_D(workspace_for(y.basis()), y);
}
TensorField A_of(const SpectralField& y) {
  require_basis(y);
  return A_of(workspace_for(y.basis()), y);
}
PhysicalField laplacian(const SpectralField& y) {
  require_basis(y);
  return laplacian(workspace_for(y.basis()), y);
}
ScalarField curl2d(const SpectralField& y) {
  require_basis(y);
  return curl2d(workspace_for(y.basis()), y);
}

double w24_norm(SpectralWorkspace& ws, const SpectralField& y) {
  ws.load(y);
  static constexpr int kMultiIndex[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  std::vector<double> buf(ws.points());
  double sum = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    for (const auto& g : kMultiIndex) {
      ws.velocity_derivative(comp, g[0], g[1], false, buf);
      double s = 0.0;
      for (double x : buf) {
        const double x2 = x * x;
        s += x2 * x2;
      }
      sum += s;
    }
  }
  return std::sqrt(std::sqrt(sum * ws.cell_weight()));
}

double v_norm_squared(const SpectralField& y) {
  double s = 0.0;
  for (double c : y.coeffs()) s += c * c;
  return s;
}

double l2_norm_squared(const SpectralField& y) {
  double s = 0.0;
  const auto& b = *y.basis();
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * y[i] / b.mode(i).v_factor;
  return s;
}

double w_tilde_norm_squared(const SpectralField& y) {
  double s = 0.0;
  const auto& b = *y.basis();
  for (std::size_t i = 0; i < y.size(); ++i) s += b.mode(i).lambda * y[i] * y[i];
  return s;
}

double v_inner(const SpectralField& y, const SpectralField& z) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * z[i];
  return s;
}

NormReport norms(SpectralWorkspace& ws, const SpectralField& y) {
  NormReport r;
  r.l2 = std::sqrt(l2_norm_squared(y));
  const double v2 = v_norm_squared(y);
  r.v_norm = std::sqrt(v2);
  const ScalarField cv = curl_v(ws, y);
  double c2 = 0.0;
  for (double x : cv.values) c2 += x * x;
  r.w_tilde = std::sqrt(v2 + c2 * ws.cell_weight());
  r.w24 = w24_norm(ws, y);
  return r;
}

NormReport norms(const SpectralField& y) {
  require_basis(y);
  return norms(workspace_for(y.basis()), y);
}

std::vector<double> l2_pairings(SpectralWorkspace& ws, const PhysicalField& f) {
  if (f.n != ws.n()) throw GridMismatch("physical field grid does not match the basis grid");
  std::vector<cplx> f1(ws.spectrum_size()), f2(ws.spectrum_size());
  ws.forward(f.comp[0], f1);
  ws.forward(f.comp[1], f2);
  std::vector<double> out(ws.basis_ref().size());
  ws.pair_vector(f1, f2, out);
  return out;
}

SpectralField project_V(SpectralWorkspace& ws, const PhysicalField& f) {
  std::vector<double> c = l2_pairings(ws, f);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= ws.basis_ref().mode(i).v_factor;
  return SpectralField(ws.basis(), std::move(c));
}

SpectralField project_V(const PhysicalField& f, const BasisPtr& basis) {
  return project_V(workspace_for(basis), f);
}

double l2_inner(SpectralWorkspace& ws, const PhysicalField& f, const PhysicalField& g) {
  if (f.n != ws.n() || g.n != ws.n()) throw GridMismatch("grid mismatch in l2_inner");
  double s = 0.0;
  for (int c = 0; c < 2; ++c)
    for (std::size_t p = 0; p < ws.points(); ++p) s += f.comp[c][p] * g.comp[c][p];
  return s * ws.cell_weight();
}

double integrate(SpectralWorkspace& ws, const ScalarField& f) {
  if (f.n != ws.n()) throw GridMismatch("grid mismatch in integrate");
  return ws.integrate(f.values);
}

PhysicalField sample_field(const GalerkinBasis& basis,
                           const std::function<std::array<double, 2>(double, double)>& fn) {
  const int n = basis.grid_size();
  const double h = 2.0 * kPi / n;
  PhysicalField f(n);
  const bool channel = basis.kind() == DomainKind::channel;
  for (int j1 = 0; j1 < n; ++j1) {
    for (int j2 = 0; j2 < n; ++j2) {
      const double x1 = j1 * h;
      double x2 = j2 * h;
      double parity = 1.0;
      if (channel && x2 > kPi) {
        x2 = 2.0 * kPi - x2;
        parity = -1.0;
      }
      auto u = fn(x1, x2);
      const std::size_t p = std::size_t(j1) * n + j2;
      f.comp[0][p] = u[0];
      f.comp[1][p] = parity * u[1];
    }
  }
  return f;
}

void write_field_csv(const GalerkinBasis& basis, const PhysicalField& f, std::ostream& out) {
  const int n = f.n;
  const double h = 2.0 * kPi / n;
  out << "x1,x2,u1,u2\n";
  char buf[160];
  for (int j1 = 0; j1 < n; ++j1) {
    for (int j2 = 0; j2 < n; ++j2) {
      const double x2 = j2 * h;
      if (basis.kind() == DomainKind::channel && x2 > kPi + 1e-12) continue;
      const std::size_t p = std::size_t(j1) * n + j2;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", j1 * h, x2, f.comp[0][p],
                    f.comp[1][p]);
      out << buf;
    }
  }
}

void write_coefficients_csv(const SpectralField& y, std::ostream& out) {
  out << "i,c_i\n";
  char buf[64];
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, y[i]);
    out << buf;
  }
}

}  // namespace thirdgrade
