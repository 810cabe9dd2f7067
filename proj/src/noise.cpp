#include "thirdgrade/noise.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "thirdgrade/errors.hpp"

namespace thirdgrade {

namespace {

constexpr double kPi = std::numbers::pi;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t(a) * b;
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

// Uniform in (0, 1) with 53 random bits; never returns 0.
inline double open_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = (std::uint64_t(a >> 5) << 26) | (b >> 6);
  return (double(bits) + 0.5) / 9007199254740992.0;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(M0, c[0], hi0, lo0);
    mulhilo(M1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t k) {
  const auto r = philox4x32({std::uint32_t(k >> 1), std::uint32_t(step), std::uint32_t(step >> 32),
                             std::uint32_t(path)},
                            {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  const double u1 = open_unit(r[0], r[1]);
  const double u2 = open_unit(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  return (k & 1) ? rad * std::sin(2.0 * kPi * u2) : rad * std::cos(2.0 * kPi * u2);
}

void WienerState::peek_increments(std::uint64_t step, double dt, std::span<double> out) const {
  const double s = std::sqrt(dt);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = s * keyed_normal(seed_, path_, step, k);
}

void WienerState::sample_increments(double dt, std::span<double> out) {
  peek_increments(step_, dt, out);
  ++step_;
  time_ += dt;
}

std::vector<double> WienerState::sample_increments(double dt, int K) {
  std::vector<double> out(std::size_t(std::max(K, 0)));
  sample_increments(dt, out);
  return out;
}

// --- noise model -------------------------------------------------------------

int NoiseModel::drivers() const {
  switch (kind) {
    case NoiseKind::off: return 0;
    case NoiseKind::diagonal: return int(a.size());
    case NoiseKind::linear_vmap: return 1;
    case NoiseKind::additive: return int(additive.size());
  }
  return 0;
}

double NoiseModel::sum_a_squared() const {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

double NoiseModel::truncation_tail() const {
  return kind == NoiseKind::diagonal ? L - sum_a_squared() : 0.0;
}

std::vector<double> diagonal_coefficients(double L, int K) {
  std::vector<double> a(std::size_t(std::max(K, 0)));
  const double c = std::sqrt(6.0 * L) / kPi;
  for (int k = 1; k <= K; ++k) a[k - 1] = c / k;
  return a;
}

double profile_value(NoiseProfile profile, double lambda) {
  return profile == NoiseProfile::identity ? lambda : lambda / (1.0 + std::abs(lambda));
}

NoiseModel make_noise_model(const NoiseSpec& spec) {
  NoiseModel m;
  m.kind = spec.kind;
  m.profile = spec.profile;
  switch (spec.kind) {
    case NoiseKind::off:
      break;
    case NoiseKind::diagonal:
      m.L = spec.L;
      m.a = diagonal_coefficients(spec.L, spec.K);
      break;
    case NoiseKind::linear_vmap:
      // H(u) dB = v(u) dB with a unit-amplitude scalar Brownian motion.
      m.L = 1.0;
      break;
    case NoiseKind::additive:
      m.additive = spec.additive;
      break;
  }
  return m;
}

DiffusionMatrix diffusion_pairings(SpectralWorkspace& ws, const SpectralField& y,
                                   const NoiseModel& model) {
  const GalerkinBasis& basis = ws.basis_ref();
  DiffusionMatrix g;
  g.rows = std::size_t(model.drivers());
  g.cols = basis.size();
  g.data.assign(g.rows * g.cols, 0.0);

  switch (model.kind) {
    case NoiseKind::off:
      break;
    case NoiseKind::diagonal: {
      // sigma_k = a_k g(y), so every row is a multiple of (g(y), e_i).
      std::vector<double> p(g.cols);
      if (model.profile == NoiseProfile::identity) {
        for (std::size_t i = 0; i < g.cols; ++i) p[i] = y[i] / basis.mode(i).v_factor;
      } else {
        PhysicalField f = synthesize(ws, y);
        for (auto& c : f.comp)
          for (double& x : c) x = profile_value(model.profile, x);
        p = l2_pairings(ws, f);
      }
      for (std::size_t k = 0; k < g.rows; ++k)
        for (std::size_t i = 0; i < g.cols; ++i) g(k, i) = model.a[k] * p[i];
      break;
    }
    case NoiseKind::linear_vmap:
      // (v(y), e_i) = (y, e_i)_V = c_i
      for (std::size_t i = 0; i < g.cols; ++i) g(0, i) = y[i];
      break;
    case NoiseKind::additive:
      for (std::size_t k = 0; k < g.rows; ++k) {
        const auto& ma = model.additive[k];
        if (ma.mode < 0 || std::size_t(ma.mode) >= g.cols)
          throw ConstraintViolation("additive noise mode " + std::to_string(ma.mode) +
                                    " outside the basis");
        g(k, std::size_t(ma.mode)) = ma.amplitude / basis.mode(std::size_t(ma.mode)).v_factor;
      }
      break;
  }
  return g;
}

DiffusionMatrix diffusion_pairings(const SpectralField& y, const NoiseModel& model) {
  return diffusion_pairings(workspace_for(y.basis()), y, model);
}

double verify_lipschitz(const NoiseModel& model, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("verify_lipschitz needs trials >= 1");
  double worst = 0.0;
  std::mt19937_64 rng(seed);
  switch (model.kind) {
    case NoiseKind::off:
    case NoiseKind::additive:
      return 0.0;
    case NoiseKind::linear_vmap:
      // pairings are the coefficients themselves: the ratio is exactly 1
      worst = 1.0;
      break;
    case NoiseKind::diagonal: {
      std::normal_distribution<double> scale(0.0, 1.0);
      const double a2 = model.sum_a_squared();
      for (int t = 0; t < trials; ++t) {
        // mix scales so that both the linear and saturated regimes are probed
        const double s = std::exp(2.0 * scale(rng));
        const double l = s * scale(rng), m = s * scale(rng);
        if (l == m) continue;
        const double d = profile_value(model.profile, l) - profile_value(model.profile, m);
        worst = std::max(worst, a2 * d * d / ((l - m) * (l - m)));
      }
      break;
    }
  }
  if (worst > model.L * (1.0 + 1e-9)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "noise Lipschitz ratio " << worst << " exceeds L = " << model.L;
    throw LipschitzViolation(msg.str());
  }
  return worst;
}

bool IsometryCheck::within(double n_sigma) const {
  return std::abs(mean_square - expected) <= n_sigma * standard_error;
}

IsometryCheck ito_isometry(const DiffusionMatrix& g, std::size_t mode, double T, int steps,
                           int paths, std::uint64_t seed) {
  const double dt = T / steps;
  IsometryCheck r;
  for (std::size_t k = 0; k < g.rows; ++k) r.expected += T * g(k, mode) * g(k, mode);
  std::vector<double> dW(g.rows);
  double sum = 0.0, sum2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    WienerState w(seed, std::uint64_t(p));
    double x = 0.0;
    for (int m = 0; m < steps; ++m) {
      w.sample_increments(dt, dW);
      for (std::size_t k = 0; k < g.rows; ++k) x += g(k, mode) * dW[k];
    }
    sum += x * x;
    sum2 += x * x * x * x;
  }
  r.mean_square = sum / paths;
  const double var = std::max(0.0, sum2 / paths - r.mean_square * r.mean_square);
  r.standard_error = std::sqrt(var / std::max(1, paths - 1));
  return r;
}

}  // namespace thirdgrade
