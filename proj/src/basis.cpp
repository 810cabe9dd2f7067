#include "thirdgrade/basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace thirdgrade {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

bool is_smooth_size(int n) {
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

// ||e||_2^2 of the unscaled field built from `terms`. Distinct terms never
// share a wavevector up to sign, so the cross terms integrate to zero.
double l2_norm_squared(const Mode& m, double domain_factor) {
  double s = 0.0;
  for (int t = 0; t < m.n_terms; ++t) {
    const auto& term = m.terms[t];
    const double k2 = double(term.k1) * term.k1 + double(term.k2) * term.k2;
    s += k2 * std::norm(term.phi) / 2.0;
  }
  return domain_factor * 4.0 * kPi * kPi * s;
}

std::vector<Mode> torus_modes(int n) {
  std::vector<Mode> modes;
  for (int k1 = 0; k1 <= n; ++k1) {
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const double norm_k = std::sqrt(double(k1) * k1 + double(k2) * k2);
      for (ModeKind kind : {ModeKind::cosine, ModeKind::sine}) {
        Mode m;
        m.kind = kind;
        m.k1 = k1;
        m.k2 = k2;
        m.mu = double(k1) * k1 + double(k2) * k2;
        // cosine: psi = -sin(k.x)/|k| = Re(i e^{ik.x})/|k|
        // sine:   psi =  cos(k.x)/|k| = Re(e^{ik.x})/|k|
        const cplx phi = kind == ModeKind::cosine ? cplx(0.0, 1.0 / norm_k) : cplx(1.0 / norm_k, 0.0);
        m.terms[0] = {k1, k2, phi};
        m.n_terms = 1;
        modes.push_back(m);
      }
    }
  }
  return modes;
}

std::vector<Mode> channel_modes(int n) {
  std::vector<Mode> modes;
  for (int k = 0; k <= n; ++k) {
    for (int m = 1; m <= n; ++m) {
      for (ModeKind kind : {ModeKind::cosine, ModeKind::sine}) {
        if (k == 0 && kind == ModeKind::sine) continue;
        Mode md;
        md.kind = kind;
        md.k1 = k;
        md.k2 = m;
        md.mu = double(k) * k + double(m) * m;
        if (k == 0) {
          // psi = sin(m x2) = Re(-i e^{i m x2})
          md.terms[0] = {0, m, cplx(0.0, -1.0)};
          md.n_terms = 1;
        } else if (kind == ModeKind::cosine) {
          // cos(a) sin(b) = [sin(a+b) - sin(a-b)] / 2
          md.terms[0] = {k, m, cplx(0.0, -0.5)};
          md.terms[1] = {k, -m, cplx(0.0, 0.5)};
          md.n_terms = 2;
        } else {
          // sin(a) sin(b) = [cos(a-b) - cos(a+b)] / 2
          md.terms[0] = {k, m, cplx(-0.5, 0.0)};
          md.terms[1] = {k, -m, cplx(0.5, 0.0)};
          md.n_terms = 2;
        }
        modes.push_back(md);
      }
    }
  }
  return modes;
}

}  // namespace

int quadrature_grid_size(const DomainSpec& spec, int n) {
  int min_points = std::max(spec.quadrature_oversample * n, 2 * spec.dealias_factor * n) + 1;
  int size = std::max(min_points, 4);
  while (!is_smooth_size(size)) ++size;
  return size;
}

GalerkinBasis::GalerkinBasis(DomainSpec spec, double alpha1, int n)
    : spec_(spec), alpha1_(alpha1), n_(n), grid_(quadrature_grid_size(spec, n)) {
  if (n < 1) throw std::invalid_argument("basis truncation must be >= 1");
  if (!(alpha1 > 0.0)) throw std::invalid_argument("basis requires alpha1 > 0");

  modes_ = spec.kind == DomainKind::torus ? torus_modes(n) : channel_modes(n);
  std::stable_sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
    return std::tie(a.mu, a.k1, a.k2, a.kind) < std::tie(b.mu, b.k1, b.k2, b.kind);
  });

  const double df = domain_factor();
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    Mode& m = modes_[i];
    m.index = static_cast<int>(i);
    m.v_factor = 1.0 + alpha1 * m.mu;
    // curl e = -Lap psi = mu psi and ||e||_2^2 = mu ||psi||_2^2, hence
    // ||curl v(e)||^2 = v_factor^2 mu ||e||_2^2 = v_factor mu.
    m.lambda = 1.0 + m.mu * m.v_factor;
    const double scale = 1.0 / std::sqrt(l2_norm_squared(m, df) * m.v_factor);
    for (int t = 0; t < m.n_terms; ++t) m.terms[t].phi *= scale;
  }
}

int GalerkinBasis::find(ModeKind kind, int k1, int k2) const {
  for (const auto& m : modes_)
    if (m.kind == kind && m.k1 == k1 && m.k2 == k2) return m.index;
  return -1;
}

BasisPtr build_basis(const DomainSpec& spec, double alpha1, int n) {
  return std::make_shared<const GalerkinBasis>(spec, alpha1, n);
}

void write_basis_csv(const GalerkinBasis& basis, std::ostream& out) {
  out << "index,kind,k,m,mu,v_factor,lambda\n";
  char buf[256];
  for (const auto& m : basis.modes()) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.17g,%.17g,%.17g\n", m.index,
                  m.kind == ModeKind::cosine ? "cos" : "sin", m.k1, m.k2, m.mu, m.v_factor,
                  m.lambda);
    out << buf;
  }
}

}  // namespace thirdgrade
