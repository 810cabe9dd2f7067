#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "thirdgrade/field.hpp"
#include "thirdgrade/params.hpp"

namespace thirdgrade {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
// the output is a pure function of (key, counter).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Standard normal keyed by (seed, path, step, k).
double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t k);

// Per-path Brownian driver. Increments for step m are N(0, dt), independent
// across k and m, and derivable from the key alone, so paths can be
// computed in any order on any worker.
class WienerState {
 public:
  WienerState() = default;
  WienerState(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path() const { return path_; }
  std::uint64_t step() const { return step_; }
  double time() const { return time_; }

  // Writes out.size() increments for the current step, then advances.
  void sample_increments(double dt, std::span<double> out);
  std::vector<double> sample_increments(double dt, int K);

  // Increments of step `step` without touching the state.
  void peek_increments(std::uint64_t step, double dt, std::span<double> out) const;

  bool operator==(const WienerState&) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t path_ = 0;
  std::uint64_t step_ = 0;
  double time_ = 0.0;
};

// Truncated noise operator G(y) e_k = sigma_k(., y) for k < drivers().
//   diagonal:    sigma_k(t, lambda) = a_k g(lambda) componentwise,
//                a_k = sqrt(6L) / (pi k), g = identity or lambda / (1 + |lambda|)
//   linear_vmap: one driver, sigma = v(y)
//   additive:    sigma_k = amplitude_k e_{mode_k}, independent of y
struct NoiseModel {
  NoiseKind kind = NoiseKind::off;
  double L = 0.0;
  NoiseProfile profile = NoiseProfile::identity;
  std::vector<double> a;                // diagonal family coefficients
  std::vector<ModeAmplitude> additive;  // additive family

  int drivers() const;
  double sum_a_squared() const;
  // L - sum_{k <= K} a_k^2, the part of the full series dropped by truncation.
  double truncation_tail() const;
};

std::vector<double> diagonal_coefficients(double L, int K);
double profile_value(NoiseProfile profile, double lambda);
NoiseModel make_noise_model(const NoiseSpec& spec);

// g[k][i] = (sigma_k(., y), e_i), stored row-major (drivers x basis size).
struct DiffusionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t k, std::size_t i) const { return data[k * cols + i]; }
  double& operator()(std::size_t k, std::size_t i) { return data[k * cols + i]; }
};

// The cut-off factor is applied by the caller.
DiffusionMatrix diffusion_pairings(SpectralWorkspace& ws, const SpectralField& y,
                                   const NoiseModel& model);
DiffusionMatrix diffusion_pairings(const SpectralField& y, const NoiseModel& model);

// Largest sampled ratio sum_k |sigma_k(l) - sigma_k(m)|^2 / |l - m|^2
// (coefficient-space ratio for linear_vmap). Throws LipschitzViolation when
// it exceeds the model's L by more than a relative 1e-9.
double verify_lipschitz(const NoiseModel& model, int trials, std::uint64_t seed = 0);

// Monte Carlo check of E|sum_k int_0^T g[k][i] dbeta_k|^2 = T sum_k g[k][i]^2
// for a frozen state.
struct IsometryCheck {
  double mean_square = 0.0;
  double expected = 0.0;
  double standard_error = 0.0;
  bool within(double n_sigma) const;
};
IsometryCheck ito_isometry(const DiffusionMatrix& g, std::size_t mode, double T, int steps,
                           int paths, std::uint64_t seed);

}  // namespace thirdgrade
