#include "thirdgrade/dynamics.hpp"

#include <cmath>
#include <cstring>

#include "thirdgrade/errors.hpp"

namespace thirdgrade {

std::size_t SimSetup::steps() const {
  return std::size_t(std::llround(t_end / dt));
}

SpectralField random_smooth_field(const BasisPtr& basis, double amplitude, std::uint64_t seed) {
  SpectralField y(basis);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = keyed_normal(seed, 0xffffffffu, 0, i) * std::exp(-basis->mode(i).mu / 4.0);
    s += y[i] * y[i];
  }
  if (s > 0.0) y *= amplitude / std::sqrt(s);
  return y;
}

namespace {

SpectralField from_table(const std::vector<ModeAmplitude>& table, const BasisPtr& basis,
                         const char* what) {
  SpectralField y(basis);
  for (const auto& ma : table) {
    if (ma.mode < 0 || std::size_t(ma.mode) >= basis->size())
      throw ConstraintViolation(std::string(what) + " mode " + std::to_string(ma.mode) +
                                " outside the basis (size " + std::to_string(basis->size()) + ")");
    y[std::size_t(ma.mode)] += ma.amplitude;
  }
  return y;
}

}  // namespace

SpectralField initial_field(const Config& cfg, const BasisPtr& basis) {
  if (!cfg.initial.modes.empty()) return from_table(cfg.initial.modes, basis, "initial");
  return random_smooth_field(basis, cfg.initial.amplitude, cfg.initial.seed);
}

SpectralField forcing_field(const Config& cfg, const BasisPtr& basis) {
  return from_table(cfg.forcing, basis, "forcing");
}

SimSetup make_setup(const Config& cfg) {
  validate_config(cfg);
  SimSetup s;
  DomainSpec spec;
  spec.kind = cfg.run.domain;
  spec.quadrature_oversample = cfg.run.quadrature_oversample;
  spec.dealias_factor = cfg.run.dealias_factor;
  s.basis = build_basis(spec, cfg.fluid.alpha1, cfg.run.n_modes);
  s.fluid = cfg.fluid;
  s.cut = CutoffFn{cfg.cutoff.M};
  s.noise = make_noise_model(cfg.noise);
  for (const auto& ma : s.noise.additive)
    if (ma.mode < 0 || std::size_t(ma.mode) >= s.basis->size())
      throw ConstraintViolation("additive noise mode " + std::to_string(ma.mode) +
                                " outside the basis (size " + std::to_string(s.basis->size()) + ")");
  s.dt = cfg.run.dt;
  s.t_end = cfg.run.t_end;
  s.scheme = cfg.run.scheme;
  s.seed = cfg.run.seed;
  s.U = forcing_field(cfg, s.basis);
  return s;
}

SimState initial_state(const SimSetup& setup, SpectralField y0, std::uint64_t path) {
  SimState s;
  s.y = std::move(y0);
  s.wiener = WienerState(setup.seed, path);
  return s;
}

// --- stepping ------------------------------------------------------------------

Stepper::Stepper(const SimSetup& setup)
    : setup_(setup), ws_(workspace_for(setup.basis)), U_(setup.U), dW_(setup.noise.drivers()) {
  if (U_.size() != setup.basis->size()) U_ = SpectralField(setup.basis);
}

StepInfo Stepper::advance(SpectralField& y, const SpectralField& U, std::span<const double> dW,
                          std::size_t step_index) {
  const GalerkinBasis& basis = *setup_.basis;
  const std::size_t n = basis.size();
  const double dt = setup_.dt;
  const FluidParams& p = setup_.fluid;

  try {
    rhs_ = assemble_rhs(ws_, y, U, p, setup_.cut, setup_.theta_override);
  } catch (const NumericalBlowup& e) {
    throw NumericalBlowup("non-finite drift", step_index);
  }
  const double th = rhs_.theta;

  StepInfo info;
  info.theta = th;
  info.w24 = rhs_.w24;
  info.dy_squared = rhs_.dy_squared;
  info.a4 = rhs_.a4;
  info.u_squared = rhs_.u_squared;

  thread_local std::vector<double> noise;
  noise.assign(n, 0.0);
  double quad_var = 0.0;  // sum_k sum_i (theta g[k][i])^2, the Ito correction
  double noise_y = 0.0;   // sum_i c_i theta sum_k g[k][i] dW_k
  const int K = setup_.noise.drivers();
  if (K > 0 && th != 0.0) {
    const DiffusionMatrix g = diffusion_pairings(ws_, y, setup_.noise);
    for (int k = 0; k < K; ++k) {
      const double w = th * dW[k];
      for (std::size_t i = 0; i < n; ++i) {
        noise[i] += g(k, i) * w;
        quad_var += th * th * g(k, i) * g(k, i);
      }
    }
    for (std::size_t i = 0; i < n; ++i) noise_y += y[i] * noise[i];
  }

  double old_v2 = 0.0, new_v2 = 0.0;
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Mode& m = basis.mode(i);
    const double c = y[i];
    old_v2 += c * c;
    double next;
    if (setup_.scheme == TimeScheme::semi_implicit) {
      const double explicit_part = rhs_.transport[i] + rhs_.vortex_stretch[i] + rhs_.grade2[i] +
                                   rhs_.grade3[i] + rhs_.forcing[i];
      next = (c + dt * explicit_part + noise[i]) / (1.0 + dt * p.nu * m.mu / m.v_factor);
    } else {
      const double total = rhs_.viscous[i] + rhs_.transport[i] + rhs_.vortex_stretch[i] +
                           rhs_.grade2[i] + rhs_.grade3[i] + rhs_.forcing[i];
      next = c + dt * total + noise[i];
    }
    finite = finite && std::isfinite(next);
    y[i] = next;
    new_v2 += next * next;
  }
  if (!finite) throw NumericalBlowup("non-finite coefficients", step_index);

  // Continuous energy rate from the J1 decomposition of 2(f, y).
  const double j1 = -4.0 * p.nu * rhs_.dy_squared - 2.0 * (p.alpha1 + p.alpha2) * th * rhs_.a2_grad -
                    p.beta * th * rhs_.a4 + 2.0 * rhs_.u_y;
  info.energy_residual = (new_v2 - old_v2) / dt - (j1 + 2.0 * noise_y / dt + quad_var);
  return info;
}

StepInfo Stepper::step(SimState& state) {
  if (setup_.forcing_at) setup_.forcing_at(state.t, U_);
  state.wiener.sample_increments(setup_.dt, dW_);
  const SpectralField before = state.y;
  StepInfo info = advance(state.y, U_, dW_, state.step);
  if (!state.tau_M_hit && info.w24 >= setup_.cut.M) {
    state.tau_M_hit = state.t;
    state.frozen = before;
  }
  ++state.step;
  state.t = double(state.step) * setup_.dt;
  return info;
}

// --- trajectories --------------------------------------------------------------

std::uint64_t field_hash(const SpectralField& y) {
  std::uint64_t h = 1469598103934665603ull;
  for (double c : y.coeffs()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &c, sizeof c);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

TrajectoryRecord run(const SimSetup& setup, const SpectralField& y0, std::uint64_t path,
                     const RunOptions& options) {
  TrajectoryRecord rec;
  rec.seed = setup.seed;
  rec.path = path;
  rec.tau_M = {setup.cut.M, setup.t_end, false};
  for (double N : options.tau_N_levels) rec.tau_N.push_back({N, setup.t_end, false});

  Stepper stepper(setup);
  SpectralWorkspace& ws = workspace_for(setup.basis);
  SimState state = initial_state(setup, y0, path);
  SpectralField U = setup.U.size() == setup.basis->size() ? setup.U : SpectralField(setup.basis);
  std::vector<double> dW(setup.noise.drivers());
  const std::size_t steps = setup.steps();
  const int stride = std::max(1, options.sample_stride);

  rec.y0_v2 = v_norm_squared(y0);
  if (options.observer) options.observer(state);

  // Grid-time bookkeeping shared by the pre-step states and the final state.
  auto visit = [&](double t, const SpectralField& y, double w24, double theta, double residual,
                   bool sample) {
    const double v2 = v_norm_squared(y);
    if (!rec.tau_M.hit && w24 >= setup.cut.M) {
      rec.tau_M.hit = true;
      rec.tau_M.time = t;
      state.tau_M_hit = t;
      state.frozen = y;
    }
    for (auto& tn : rec.tau_N) {
      if (!tn.hit && std::sqrt(v2) >= tn.level) {
        tn.hit = true;
        tn.time = t;
      }
    }
    const double frozen_v2 = state.frozen ? v_norm_squared(*state.frozen) : v2;
    rec.sup_v2 = std::max(rec.sup_v2, v2);
    rec.sup_w_tilde2 = std::max(rec.sup_w_tilde2, w_tilde_norm_squared(y));
    rec.sup_w24 = std::max(rec.sup_w24, w24);
    rec.sup_frozen_v2 = std::max(rec.sup_frozen_v2, frozen_v2);
    if (sample) {
      Sample s;
      s.t = t;
      s.v_norm = std::sqrt(v2);
      s.w_tilde = std::sqrt(w_tilde_norm_squared(y));
      s.w24 = w24;
      s.theta = theta;
      s.tau_M_hit = rec.tau_M.hit;
      s.energy_residual = residual;
      s.frozen_v_norm = std::sqrt(frozen_v2);
      rec.samples.push_back(s);
    }
  };

  double last_residual = 0.0;
  try {
    for (std::size_t m = 0; m < steps; ++m) {
      const double t = double(m) * setup.dt;
      if (setup.forcing_at) setup.forcing_at(t, U);
      if (options.increments) options.increments(m, dW);
      else state.wiener.sample_increments(setup.dt, dW);
      const SpectralField before = state.y;
      const StepInfo info = stepper.advance(state.y, U, dW, m);
      visit(t, before, info.w24, info.theta, info.energy_residual, m % stride == 0);
      last_residual = info.energy_residual;
      rec.int_dy2 += info.dy_squared * setup.dt;
      rec.int_theta_a4 += info.theta * info.a4 * setup.dt;
      rec.int_u2 += info.u_squared * setup.dt;
      state.step = m + 1;
      state.t = double(state.step) * setup.dt;
      if (options.observer) options.observer(state);
    }
    const double w24 = w24_norm(ws, state.y);
    const double th = setup.theta_override ? *setup.theta_override : setup.cut(w24);
    visit(state.t, state.y, w24, th, last_residual, true);
  } catch (const NumericalBlowup& e) {
    if (options.throw_on_blowup) throw;
    rec.blowup = true;
    rec.blowup_step = e.step();
    rec.blowup_message = e.what();
  }

  rec.steps = state.step;
  rec.t_final = state.t;
  rec.final_y = state.y;
  rec.frozen_y = state.frozen ? *state.frozen : state.y;
  rec.terminal_hash = field_hash(state.y);
  return rec;
}

std::vector<double> path_increments(const SimSetup& setup, std::uint64_t path, std::size_t steps) {
  const std::size_t K = std::size_t(setup.noise.drivers());
  std::vector<double> dW(steps * K);
  WienerState w(setup.seed, path);
  for (std::size_t m = 0; m < steps; ++m)
    w.sample_increments(setup.dt, std::span<double>(dW.data() + m * K, K));
  return dW;
}

std::vector<SpectralField> picard_map(const SimSetup& setup, const SpectralField& y0,
                                      const std::vector<SpectralField>& u,
                                      std::span<const double> dW) {
  SpectralWorkspace& ws = workspace_for(setup.basis);
  const std::size_t K = std::size_t(setup.noise.drivers());
  const std::size_t n = setup.basis->size();
  const std::size_t M = u.empty() ? 0 : u.size() - 1;
  if (dW.size() < M * K) throw std::invalid_argument("picard_map: not enough increments");

  std::vector<SpectralField> out;
  out.reserve(M + 1);
  out.push_back(y0);
  for (std::size_t j = 0; j < M; ++j) {
    const RhsBreakdown r = assemble_rhs(ws, u[j], setup.U.size() == n ? setup.U : SpectralField(setup.basis),
                                        setup.fluid, setup.cut, setup.theta_override);
    const std::vector<double> f = r.total();
    SpectralField next = out.back();
    for (std::size_t i = 0; i < n; ++i) next[i] += setup.dt * f[i];
    if (K > 0 && r.theta != 0.0) {
      const DiffusionMatrix g = diffusion_pairings(ws, u[j], setup.noise);
      for (std::size_t k = 0; k < K; ++k) {
        const double w = r.theta * dW[j * K + k];
        for (std::size_t i = 0; i < n; ++i) next[i] += g(k, i) * w;
      }
    }
    out.push_back(std::move(next));
  }
  return out;
}

double sup_v_distance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b) {
  double worst = 0.0;
  for (std::size_t m = 0; m < std::min(a.size(), b.size()); ++m)
    worst = std::max(worst, std::sqrt(v_norm_squared(a[m] - b[m])));
  return worst;
}

}  // namespace thirdgrade
