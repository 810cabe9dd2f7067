#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thirdgrade/cutoff.hpp"
#include "thirdgrade/noise.hpp"
#include "thirdgrade/operators.hpp"
#include "thirdgrade/params.hpp"

namespace thirdgrade {

// Everything that defines one path's dynamics apart from the initial datum
// and the path index.
struct SimSetup {
  BasisPtr basis;
  FluidParams fluid;
  CutoffFn cut;
  NoiseModel noise;
  double dt = 1e-3;
  double t_end = 1.0;
  TimeScheme scheme = TimeScheme::semi_implicit;
  std::uint64_t seed = 0;
  SpectralField U;  // constant forcing, V-coefficients
  // Optional time-dependent forcing; overwrites U before each step.
  std::function<void(double t, SpectralField& U)> forcing_at;
  // theta = 1 gives the uncut system, theta = 0 the linear one.
  std::optional<double> theta_override;

  std::size_t steps() const;
};

SimSetup make_setup(const Config& cfg);
SpectralField initial_field(const Config& cfg, const BasisPtr& basis);
SpectralField forcing_field(const Config& cfg, const BasisPtr& basis);
// Smooth random field with V-norm `amplitude`: Gaussian coefficients damped
// by exp(-mu / 4), keyed by `seed`.
SpectralField random_smooth_field(const BasisPtr& basis, double amplitude, std::uint64_t seed);

struct SimState {
  double t = 0.0;
  std::size_t step = 0;
  SpectralField y;
  WienerState wiener;
  std::optional<double> tau_M_hit;
  std::optional<SpectralField> frozen;  // y(tau_M), immutable once set
};

SimState initial_state(const SimSetup& setup, SpectralField y0, std::uint64_t path);

struct StepInfo {
  double theta = 1.0;
  double w24 = 0.0;              // pre-step ||y||_{W^{2,4}}
  double energy_residual = 0.0;  // discrete minus continuous energy rate
  double dy_squared = 0.0;
  double a4 = 0.0;
  double u_squared = 0.0;
};

// One Euler-Maruyama step of the cut-off Galerkin SDE in V-coefficients:
//   c_i <- [c_i + dt (N_i + F_i) + theta sum_k g[k][i] dW_k] / (1 + dt nu mu_i / v_i)
// (semi-implicit), or c_i <- c_i + dt f_i + theta sum_k g[k][i] dW_k (explicit).
// theta is evaluated at the pre-step W^{2,4} norm.
class Stepper {
 public:
  explicit Stepper(const SimSetup& setup);

  // Advances y with the given Brownian increments (size noise.drivers()).
  // Throws NumericalBlowup tagged with `step_index` on NaN/Inf.
  StepInfo advance(SpectralField& y, const SpectralField& U, std::span<const double> dW,
                   std::size_t step_index = 0);

  // Draws the increments from state.wiener and updates t, step, tau_M and the
  // frozen copy.
  StepInfo step(SimState& state);

  const RhsBreakdown& last_rhs() const { return rhs_; }

 private:
  const SimSetup& setup_;
  SpectralWorkspace& ws_;
  SpectralField U_;
  RhsBreakdown rhs_;
  std::vector<double> dW_;
};

struct Sample {
  double t = 0.0;
  double v_norm = 0.0;
  double w_tilde = 0.0;
  double w24 = 0.0;
  double theta = 1.0;
  bool tau_M_hit = false;
  double energy_residual = 0.0;
  double frozen_v_norm = 0.0;  // ||y(t ^ tau_M)||_V
};

struct StoppingTime {
  double level = 0.0;
  double time = 0.0;  // t_end when never reached
  bool hit = false;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  std::vector<Sample> samples;
  StoppingTime tau_M;
  std::vector<StoppingTime> tau_N;  // on ||y||_V

  double y0_v2 = 0.0;
  double sup_v2 = 0.0;        // max over grid times of ||y||_V^2
  double sup_w_tilde2 = 0.0;  // of ||y||_W~^2
  double sup_w24 = 0.0;
  double sup_frozen_v2 = 0.0;
  double int_dy2 = 0.0;       // int_0^T ||D y||_2^2 dt
  double int_theta_a4 = 0.0;  // int_0^T theta int |A|^4 dx dt
  double int_u2 = 0.0;        // int_0^T ||U||_2^2 dt
  std::size_t steps = 0;
  double t_final = 0.0;

  bool blowup = false;
  std::size_t blowup_step = 0;
  std::string blowup_message;

  SpectralField final_y;
  SpectralField frozen_y;  // y(T ^ tau_M)
  std::uint64_t terminal_hash = 0;
};

struct RunOptions {
  int sample_stride = 10;
  std::vector<double> tau_N_levels = {0.5, 1.0, 2.0, 4.0, 8.0};
  // Custom increments: fill dW for the given step. Defaults to the keyed
  // Wiener stream of (seed, path).
  std::function<void(std::size_t step, std::span<double> dW)> increments;
  // Called with the state after every step (and once with the initial
  // state); used for coefficient snapshots and full-trajectory capture.
  std::function<void(const SimState&)> observer;
  // Rethrow NumericalBlowup instead of recording it.
  bool throw_on_blowup = false;
};

// Integrates one path to t_end. Records the cut-off trajectory, the frozen
// local solution y(t ^ tau_M), and the first grid times with ||y||_V >= N and
// ||y||_{W^{2,4}} >= M (t = 0 included).
TrajectoryRecord run(const SimSetup& setup, const SpectralField& y0, std::uint64_t path,
                     const RunOptions& options = {});

std::uint64_t field_hash(const SpectralField& y);

// The fixed-point map of the Galerkin system on a fixed Brownian path:
//   (S u)(t_{m+1}) = y0 + sum_{j <= m} [f(u_j) dt + theta(u_j) G(u_j) dW_j],
// with the drift and diffusion built from u. `u` holds the trajectory at
// t_0..t_M and `dW` the increments row-major (M x drivers).
std::vector<SpectralField> picard_map(const SimSetup& setup, const SpectralField& y0,
                                      const std::vector<SpectralField>& u,
                                      std::span<const double> dW);

// Keyed increments for `steps` steps of a path, row-major (steps x drivers).
std::vector<double> path_increments(const SimSetup& setup, std::uint64_t path, std::size_t steps);

double sup_v_distance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b);

}  // namespace thirdgrade
