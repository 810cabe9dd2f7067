#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <memory>
#include <vector>

#include "thirdgrade/params.hpp"

namespace thirdgrade {

// Geometry and quadrature settings.
//
// Torus: [0, 2pi)^2, periodic.
// Channel: [0, 2pi) x (0, pi), periodic in x1, flat walls at x2 = 0 and
// x2 = pi. On a flat wall the normal is (0, +-1), so y.n = 0 gives u2 = 0,
// and the tangential part of n.D(y) is D12 = (d2 u1 + d1 u2) / 2; since
// u2 vanishes along the wall, d1 u2 = 0 there and the Navier-slip condition
// reduces to the free-slip pair u2 = 0, d2 u1 = 0.
//
// Channel fields are stored on the reflected domain [0, 2pi)^2, with u1 even
// and u2 odd in x2. All quadratures over the channel are half the
// quadrature over the reflected domain.
struct DomainSpec {
  DomainKind kind = DomainKind::torus;
  int quadrature_oversample = 4;
  int dealias_factor = 2;
};

enum class ModeKind { cosine, sine };

// One complex exponential of a streamfunction: Re(phi * exp(i k.x)).
struct StreamTerm {
  int k1 = 0;
  int k2 = 0;
  std::complex<double> phi;
};

// A basis field e = grad^perp psi = (d2 psi, -d1 psi), where psi is a sum of
// at most two StreamTerms. Amplitudes are scaled so that ||e||_V = 1.
//
// Torus, wavevector (k1, k2) in the half plane k1 > 0 or (k1 = 0, k2 > 0):
//   cosine: e ~ k^perp/|k| cos(k.x),   sine: e ~ k^perp/|k| sin(k.x)
// Channel, mode numbers (k, m), 0 <= k, 1 <= m:
//   cosine: psi ~ cos(k x1) sin(m x2)   (k = 0 gives the shear (cos(m x2), 0))
//   sine:   psi ~ sin(k x1) sin(m x2)   (k >= 1)
struct Mode {
  int index = 0;
  ModeKind kind = ModeKind::cosine;
  int k1 = 0;
  int k2 = 0;
  double mu = 0.0;        // Laplacian eigenvalue, -Lap e = mu e
  double v_factor = 1.0;  // 1 + alpha1 mu; also 1 / ||e||_2^2
  double lambda = 1.0;    // (z, e)_{W~} = lambda (z, e)_V
  std::array<StreamTerm, 2> terms{};
  int n_terms = 0;
};

class GalerkinBasis {
 public:
  GalerkinBasis(DomainSpec spec, double alpha1, int n);

  DomainKind kind() const { return spec_.kind; }
  const DomainSpec& spec() const { return spec_; }
  double alpha1() const { return alpha1_; }
  int truncation() const { return n_; }
  std::size_t size() const { return modes_.size(); }
  const Mode& mode(std::size_t i) const { return modes_[i]; }
  const std::vector<Mode>& modes() const { return modes_; }

  // Points per direction of the quadrature grid on [0, 2pi)^2.
  int grid_size() const { return grid_; }
  // 1 on the torus, 1/2 on the channel (reflected-domain quadrature).
  double domain_factor() const { return spec_.kind == DomainKind::torus ? 1.0 : 0.5; }

  // Index of the mode with the given kind and mode numbers, or -1.
  int find(ModeKind kind, int k1, int k2) const;

 private:
  DomainSpec spec_;
  double alpha1_;
  int n_;
  int grid_;
  std::vector<Mode> modes_;
};

using BasisPtr = std::shared_ptr<const GalerkinBasis>;

// Modes sorted by ascending mu, ties broken lexicographically by
// (k1, k2, kind). Requires n >= 1 and alpha1 > 0.
BasisPtr build_basis(const DomainSpec& spec, double alpha1, int n);

// Smallest 2^a 3^b 5^c >= max(oversample * n, 2 * dealias * n) + 1.
int quadrature_grid_size(const DomainSpec& spec, int n);

// CSV: index,kind,k,m,mu,v_factor,lambda
void write_basis_csv(const GalerkinBasis& basis, std::ostream& out);

}  // namespace thirdgrade
