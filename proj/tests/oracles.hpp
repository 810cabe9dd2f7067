#pragma once

// Independent reference computations for the tests: pointwise evaluation of
// Galerkin fields straight from their streamfunction terms, finite
// differences, and direct quadrature. Nothing here goes through the FFT path.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <type_traits>
#include <vector>

#include "thirdgrade/field.hpp"

namespace oracle {

using thirdgrade::GalerkinBasis;
using thirdgrade::SpectralField;
using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

constexpr double kPi = std::numbers::pi;

// e = (d2 psi, -d1 psi) with psi = sum Re(phi exp(i k.x)).
inline Vec2 basis_value(const thirdgrade::Mode& m, double x1, double x2) {
  Vec2 u{0.0, 0.0};
  for (int t = 0; t < m.n_terms; ++t) {
    const auto& term = m.terms[t];
    const std::complex<double> e =
        term.phi * std::exp(std::complex<double>(0.0, term.k1 * x1 + term.k2 * x2));
    const std::complex<double> ik(0.0, 1.0);
    u[0] += std::real(ik * double(term.k2) * e);
    u[1] -= std::real(ik * double(term.k1) * e);
  }
  return u;
}

inline Vec2 eval(const SpectralField& y, double x1, double x2) {
  Vec2 u{0.0, 0.0};
  const auto& b = *y.basis();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    const Vec2 e = basis_value(b.mode(i), x1, x2);
    u[0] += y[i] * e[0];
    u[1] += y[i] * e[1];
  }
  return u;
}

// y = (0, cos x1), the manufactured torus field.
inline SpectralField shear(const thirdgrade::BasisPtr& b) {
  const std::size_t i = std::size_t(b->find(thirdgrade::ModeKind::cosine, 1, 0));
  return (1.0 / basis_value(b->mode(i), 0.0, 0.0)[1]) * thirdgrade::unit_field(b, i);
}

// d1^a d2^c of the velocity, differentiating each stream term symbolically.
inline Vec2 deriv(const SpectralField& y, int a, int c, double x1, double x2) {
  Vec2 u{0.0, 0.0};
  const std::complex<double> I(0.0, 1.0);
  const auto& b = *y.basis();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    const auto& m = b.mode(i);
    for (int t = 0; t < m.n_terms; ++t) {
      const auto& term = m.terms[t];
      const std::complex<double> e = term.phi * std::exp(I * double(term.k1 * x1 + term.k2 * x2)) *
                                     std::pow(I * double(term.k1), a) * std::pow(I * double(term.k2), c);
      u[0] += y[i] * std::real(I * double(term.k2) * e);
      u[1] -= y[i] * std::real(I * double(term.k1) * e);
    }
  }
  return u;
}

using VecFn = std::function<Vec2(double, double)>;
using MatFn = std::function<Mat2(double, double)>;

// Fourth-order central difference of f along direction `dir`.
template <class F>
auto fd(const F& f, double x1, double x2, int dir, double h) {
  auto at = [&](double s) { return dir == 0 ? f(x1 + s, x2) : f(x1, x2 + s); };
  const auto a = at(2 * h), b = at(h), c = at(-h), d = at(-2 * h);
  auto r = a;
  using R = decltype(r);
  if constexpr (std::is_same_v<R, double>) {
    return (-a + 8 * b - 8 * c + d) / (12 * h);
  } else if constexpr (std::is_same_v<R, Vec2>) {
    for (int i = 0; i < 2; ++i) r[i] = (-a[i] + 8 * b[i] - 8 * c[i] + d[i]) / (12 * h);
    return r;
  } else {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r[i][j] = (-a[i][j] + 8 * b[i][j] - 8 * c[i][j] + d[i][j]) / (12 * h);
    return r;
  }
}

// G[i][j] = d_j u_i by finite differences.
inline Mat2 fd_grad(const VecFn& u, double x1, double x2, double h) {
  const Vec2 d1 = fd(u, x1, x2, 0, h), d2 = fd(u, x1, x2, 1, h);
  return {{{d1[0], d2[0]}, {d1[1], d2[1]}}};
}

inline Mat2 fd_A(const VecFn& u, double x1, double x2, double h) {
  const Mat2 g = fd_grad(u, x1, x2, h);
  Mat2 a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a[i][j] = g[i][j] + g[j][i];
  return a;
}

// (div T)_i = d_j T_ij by finite differences.
inline Vec2 fd_div(const MatFn& t, double x1, double x2, double h) {
  const Mat2 d1 = fd(t, x1, x2, 0, h), d2 = fd(t, x1, x2, 1, h);
  return {d1[0][0] + d2[0][1], d1[1][0] + d2[1][1]};
}

inline Mat2 mul(const Mat2& a, const Mat2& b) {
  Mat2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline double frob2(const Mat2& a) {
  return a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1];
}

// Random coefficients on the modes with |k|^2 <= kmax2, from a generator
// unrelated to the library's counter-based one.
inline SpectralField random_low_modes(const thirdgrade::BasisPtr& basis, double kmax2, unsigned seed,
                                      double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  SpectralField y(basis);
  for (std::size_t i = 0; i < y.size(); ++i)
    if (basis->mode(i).mu <= kmax2 + 1e-12) y[i] = scale * n01(gen);
  return y;
}

inline SpectralField random_field(const thirdgrade::BasisPtr& basis, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  SpectralField y(basis);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = n01(gen) * std::exp(-basis->mode(i).mu / 8.0);
  return y;
}

// Periodic rectangle rule on an n x n grid of [0, 2pi)^2, exact for trig
// polynomials of degree < n in each direction.
inline double integrate(const std::function<double(double, double)>& f, int n) {
  const double h = 2 * kPi / n;
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) s += f(a * h, b * h);
  return s * h * h;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace oracle
