#pragma once

#include <optional>
#include <vector>

#include "thirdgrade/cutoff.hpp"
#include "thirdgrade/field.hpp"
#include "thirdgrade/params.hpp"

namespace thirdgrade {

// The drift of the Galerkin system, split by physical origin. Every part is
// a vector of L2 pairings (term, e_i); the nonlinear parts already carry the
// cut-off factor theta. Since the coefficients are V-orthonormal, the
// coefficient ODE is dc_i/dt = total()[i]. Pressure never appears: it is a
// gradient and pairs to zero with every divergence-free e_i.
struct RhsBreakdown {
  std::vector<double> viscous;         // (nu Lap y, e_i)
  std::vector<double> transport;       // -theta ((y.grad) v, e_i)
  std::vector<double> vortex_stretch;  // -theta (sum_j v_j grad y_j, e_i)
  std::vector<double> grade2;          // (a1 + a2) theta (div A^2, e_i)
  std::vector<double> grade3;          // beta theta (div |A|^2 A, e_i)
  std::vector<double> forcing;         // (U, e_i)

  double theta = 1.0;
  double w24 = 0.0;        // ||y||_{W^{2,4}}, the cut-off argument
  double dy_squared = 0.0; // ||D y||_2^2
  double a4 = 0.0;         // int |A|^4
  double a2_grad = 0.0;    // (A^2, grad y)
  double u_y = 0.0;        // (U, y)
  double u_squared = 0.0;  // ||U||_2^2

  std::vector<double> nonlinear() const;  // transport + vortex + grade2 + grade3
  std::vector<double> total() const;
};

// v(y) = y - alpha1 Lap y. On the basis this multiplies coefficient i by
// 1 + alpha1 mu_i.
SpectralField v_map(const SpectralField& y);

// Solution h of h - alpha1 Lap h + grad p = f projected on the basis. Since
// (v(h), e_i) = (h, e_i)_V, the V-coefficients of h are the L2 pairings
// (f, e_i); in the L2 convention this is the division by 1 + alpha1 mu_i.
SpectralField stokes_inverse(SpectralWorkspace& ws, const PhysicalField& f);
SpectralField stokes_inverse(const PhysicalField& f, const BasisPtr& basis);

// b(y, z, phi) = ((y.grad) z, phi) by quadrature (exact for the basis span).
double trilinear_b(SpectralWorkspace& ws, const SpectralField& y, const SpectralField& z,
                   const SpectralField& phi);
double trilinear_b(const SpectralField& y, const SpectralField& z, const SpectralField& phi);

// Pointwise div(A^2) and div(|A|^2 A), product rule on exact spectral
// derivatives.
PhysicalField div_A2(SpectralWorkspace& ws, const SpectralField& y);
PhysicalField div_A2A(SpectralWorkspace& ws, const SpectralField& y);
PhysicalField div_A2(const SpectralField& y);
PhysicalField div_A2A(const SpectralField& y);

// S(y) = beta |A|^2 A and
// N(y) = alpha1 (y.grad A + (grad y)^T A + A grad y) + alpha2 A^2.
TensorField S_of(SpectralWorkspace& ws, const SpectralField& y, double beta);
TensorField N_of(SpectralWorkspace& ws, const SpectralField& y, const FluidParams& p);
TensorField S_of(const SpectralField& y, double beta);
TensorField N_of(const SpectralField& y, const FluidParams& p);

// Divergence of a tensor field paired with every basis mode: (div T, e_i).
std::vector<double> pair_tensor_divergence(SpectralWorkspace& ws, const TensorField& t);

// U is given in V-coefficients. theta_override replaces theta_M(||y||_{W^{2,4}})
// (1 gives the uncut system, 0 the linear one). Throws NumericalBlowup
// if the drift is not finite.
RhsBreakdown assemble_rhs(SpectralWorkspace& ws, const SpectralField& y, const SpectralField& U,
                          const FluidParams& p, const CutoffFn& cut,
                          std::optional<double> theta_override = std::nullopt);
RhsBreakdown assemble_rhs(const SpectralField& y, const SpectralField& U, const FluidParams& p,
                          const CutoffFn& cut,
                          std::optional<double> theta_override = std::nullopt);

}  // namespace thirdgrade
