// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Runs at desk scale (torus, n_modes = 8, dt = 1e-3) except
// where a criterion states its own setting.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "thirdgrade/diagnostics.hpp"
#include "thirdgrade/errors.hpp"
#include "thirdgrade/operators.hpp"

using namespace thirdgrade;
using oracle::Mat2;
using oracle::Vec2;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Config desk() {
  Config c;
  c.run.n_modes = 8;
  c.run.dt = 1e-3;
  c.run.t_end = 1.0;
  c.run.seed = 2024;
  return c;
}

BasisPtr desk_basis() { return build_basis(DomainSpec{}, 1.0, 8); }

double xs(const PhysicalField& f, std::size_t p) { return double(p / f.n) * 2 * oracle::kPi / f.n; }
double ys(const PhysicalField& f, std::size_t p) { return double(p % f.n) * 2 * oracle::kPi / f.n; }

double max_abs(const PhysicalField& f) {
  double m = 0.0;
  for (int c = 0; c < 2; ++c)
    for (double v : f.comp[c]) m = std::max(m, std::abs(v));
  return m;
}

Vec2 fd_div_tensor(const oracle::VecFn& u, double x1, double x2, double h, bool grade3) {
  oracle::MatFn t = [&](double a, double c) {
    Mat2 A = oracle::fd_A(u, a, c, h);
    if (!grade3) return oracle::mul(A, A);
    const double s = oracle::frob2(A);
    for (auto& row : A)
      for (auto& v : row) v *= s;
    return A;
  };
  return oracle::fd_div(t, x1, x2, h);
}

Outcome operator_oracles() {
  const BasisPtr b = desk_basis();
  auto& ws = workspace_for(b);
  const SpectralField y = oracle::shear(b);
  const PhysicalField d2 = div_A2(ws, y), d3 = div_A2A(ws, y);
  double shear_err = 0.0;
  for (std::size_t p = 0; p < d2.comp[0].size(); ++p) {
    const double x = xs(d2, p), s = std::sin(x), c = std::cos(x);
    shear_err = std::max({shear_err, std::abs(d2.comp[0][p] - std::sin(2 * x)), std::abs(d2.comp[1][p]),
                          std::abs(d3.comp[0][p]), std::abs(d3.comp[1][p] + 6 * s * s * c)});
  }
  // the symbolic fields have unit size, so absolute and relative agree
  const BasisPtr low = build_basis(DomainSpec{}, 1.0, 4);
  double fd_err = 0.0;
  for (unsigned s = 0; s < 5; ++s) {
    const SpectralField r = oracle::random_low_modes(low, 4.0, 100 + s);
    oracle::VecFn u = [&](double x1, double x2) { return oracle::eval(r, x1, x2); };
    const PhysicalField a2 = div_A2(r), a3 = div_A2A(r);
    double e2 = 0.0, e3 = 0.0;
    for (std::size_t p = 0; p < a2.comp[0].size(); p += 7) {
      const Vec2 f2 = fd_div_tensor(u, xs(a2, p), ys(a2, p), 2e-3, false);
      const Vec2 f3 = fd_div_tensor(u, xs(a2, p), ys(a2, p), 2e-3, true);
      for (int c = 0; c < 2; ++c) {
        e2 = std::max(e2, std::abs(a2.comp[c][p] - f2[c]));
        e3 = std::max(e3, std::abs(a3.comp[c][p] - f3[c]));
      }
    }
    fd_err = std::max({fd_err, e2 / max_abs(a2), e3 / max_abs(a3)});
  }
  return {shear_err < 1e-10 && fd_err < 1e-6,
          "shear max err " + fmt(shear_err) + " (tol 1e-10), finite-difference rel err " + fmt(fd_err) +
              " (tol 1e-6)"};
}

Outcome antisymmetry() {
  const BasisPtr b = desk_basis();
  auto& ws = workspace_for(b);
  double worst = 0.0;
  for (unsigned s = 0; s < 100; ++s) {
    const SpectralField y = oracle::random_field(b, 3 * s), z = oracle::random_field(b, 3 * s + 1),
                        phi = oracle::random_field(b, 3 * s + 2);
    worst = std::max({worst, std::abs(trilinear_b(ws, y, z, z)),
                      std::abs(trilinear_b(ws, y, z, phi) + trilinear_b(ws, y, phi, z))});
  }
  return {worst < 1e-10, "max |b| residual over 100 triples " + fmt(worst) + " (tol 1e-10)"};
}

Outcome dissipativity() {
  const BasisPtr b = desk_basis();
  auto& ws = workspace_for(b);
  const FluidParams p{0.0, 1.0, -1.0, 1.0};
  double rel = 0.0, mono = -1e300;
  for (unsigned s = 0; s < 100; ++s) {
    const SpectralField y = oracle::random_field(b, 500 + s);
    const RhsBreakdown r = assemble_rhs(ws, y, SpectralField(b), p, CutoffFn{}, 1.0);
    double g = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) g += r.grade3[i] * y[i];
    rel = std::max(rel, std::abs(g + 0.5 * r.a4) / (0.5 * r.a4));

    const SpectralField y1 = oracle::random_field(b, 900 + 2 * s),
                        y2 = (0.1 + 0.05 * s) * oracle::random_field(b, 901 + 2 * s);
    const auto a = pair_tensor_divergence(ws, S_of(ws, y1, 1.0));
    const auto c = pair_tensor_divergence(ws, S_of(ws, y2, 1.0));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m += (a[i] - c[i]) * (y1[i] - y2[i]);
    mono = std::max(mono, m);
  }
  return {rel < 1e-8 && mono <= 1e-10,
          "dissipation rel err " + fmt(rel) + " (tol 1e-8), max monotonicity pairing " + fmt(mono) +
              " (tol 1e-10)"};
}

Outcome energy_identity() {
  const BasisPtr b = desk_basis();
  auto& ws = workspace_for(b);
  const FluidParams p{0.3, 0.8, -0.3, 0.4};
  double worst = 0.0;
  for (unsigned s = 0; s < 20; ++s) {
    const SpectralField y = oracle::random_field(b, 40 + s);
    const SpectralField U = oracle::random_field(b, 1040 + s);
    // half of the fields sit inside the cut-off transition
    const CutoffFn cut{s % 2 ? 1e9 : 0.7 * w24_norm(ws, y)};
    const RhsBreakdown r = assemble_rhs(ws, y, U, p, cut);
    double lhs = 0.0;
    const auto f = r.total();
    for (std::size_t i = 0; i < y.size(); ++i) lhs += 2 * f[i] * y[i];
    const double rhs = -4 * p.nu * r.dy_squared - 2 * (p.alpha1 + p.alpha2) * r.theta * r.a2_grad -
                       p.beta * r.theta * r.a4 + 2 * r.u_y;
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return {worst < 1e-8, "max rel err over 20 fields " + fmt(worst) + " (tol 1e-8)"};
}

Outcome deterministic_decay() {
  Config c = desk();
  c.noise.kind = NoiseKind::off;
  c.run.t_end = 10.0;  // 1e4 steps
  validate_params(c.fluid);
  const SimSetup s = make_setup(c);
  std::size_t increases = 0, steps = 0;
  double worst = 0.0;
  for (std::uint64_t ic = 0; ic < 10; ++ic) {
    const SpectralField y0 = random_smooth_field(s.basis, 0.5 + 0.25 * double(ic), 100 + ic);
    double prev = v_norm_squared(y0);
    RunOptions o;
    o.sample_stride = 1000;
    o.observer = [&](const SimState& st) {
      const double now = v_norm_squared(st.y);
      if (now > prev) {
        ++increases;
        worst = std::max(worst, (now - prev) / prev);
      }
      prev = now;
    };
    const TrajectoryRecord r = run(s, y0, 0, o);
    steps += r.steps;
    if (r.blowup) ++increases;
  }
  return {increases == 0 && steps == 10 * 10000,
          std::to_string(steps) + " steps, " + std::to_string(increases) + " increases of ||y||_V (worst rel " +
              fmt(worst) + ")"};
}

Outcome stokes() {
  const BasisPtr b = desk_basis();
  auto& ws = workspace_for(b);
  double inv = 0.0;
  for (unsigned s = 0; s < 10; ++s) {
    const SpectralField y = oracle::random_field(b, s);
    // v_map in coefficients, then synthesised and inverted by quadrature
    const SpectralField back = stokes_inverse(ws, synthesize(ws, v_map(y)));
    // and through the pointwise v(y) = y - alpha1 Lap y
    const SpectralField direct = stokes_inverse(ws, synthesize_v(ws, y));
    for (std::size_t i = 0; i < y.size(); ++i)
      inv = std::max({inv, std::abs(back[i] - y[i]), std::abs(direct[i] - y[i])});
  }
  // variational residual (v(h), e_i) - (f, e_i) by direct quadrature
  const BasisPtr lb = build_basis(DomainSpec{}, 0.9, 4);
  auto& lws = workspace_for(lb);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n01;
  double var = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::array<double, 4>> c(25);
    for (auto& r : c)
      for (auto& v : r) v = n01(gen);
    const PhysicalField f = sample_field(*lb, [&](double x1, double x2) {
      Vec2 u{0, 0};
      for (int k = 0; k < 5; ++k)
        for (int m = 0; m < 5; ++m) {
          const auto& r = c[k * 5 + m];
          u[0] += r[0] * std::cos(k * x1 + r[1]) * std::cos(m * x2);
          u[1] += r[2] * std::cos(k * x1 + r[3]) * std::sin(m * x2);
        }
      return u;
    });
    const SpectralField h = stokes_inverse(lws, f);
    const auto pair = l2_pairings(lws, f);
    for (std::size_t i = 0; i < lb->size(); ++i) {
      const Mode& m = lb->mode(i);
      auto vh_e = [&](double x1, double x2) {
        const Vec2 u = oracle::deriv(h, 0, 0, x1, x2), l1 = oracle::deriv(h, 2, 0, x1, x2),
                   l2 = oracle::deriv(h, 0, 2, x1, x2), e = oracle::basis_value(m, x1, x2);
        double s = 0.0;
        for (int k = 0; k < 2; ++k) s += (u[k] - lb->alpha1() * (l1[k] + l2[k])) * e[k];
        return s;
      };
      var = std::max(var, std::abs(lb->domain_factor() * oracle::integrate(vh_e, 24) - pair[i]));
    }
  }
  return {inv < 1e-12 && var < 1e-10,
          "inverse residual " + fmt(inv) + " (tol 1e-12), variational residual " + fmt(var) + " (tol 1e-10)"};
}

Outcome cutoff_consistency() {
  Config c = desk();
  c.cutoff.M = 50.0;
  c.run.t_end = 0.2;
  const SimSetup cut = make_setup(c);
  SimSetup uncut = cut;
  uncut.theta_override = 1.0;
  const SpectralField y0 = initial_field(c, cut.basis);
  std::size_t identical = 0, below = 0;
  for (std::uint64_t p = 0; p < 32; ++p) {
    const TrajectoryRecord a = run(cut, y0, p), b = run(uncut, y0, p);
    if (a.sup_w24 < c.cutoff.M) ++below;
    if (a.final_y == b.final_y && a.terminal_hash == b.terminal_hash) ++identical;
  }
  const CutoffFn th{c.cutoff.M};
  const bool ends = th(th.M) == 1.0 && th(2 * th.M) == 0.0;
  return {below == 32 && identical == 32 && ends,
          std::to_string(identical) + "/32 bit-identical (" + std::to_string(below) +
              " below M), theta(M) = " + fmt(th(th.M)) + ", theta(2M) = " + fmt(th(2 * th.M))};
}

Outcome contraction() {
  const Config c = desk();
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const auto rows = contraction_study(s, y0, random_smooth_field(s.basis, 1e-3, 3), {0.08, 0.04, 0.02}, 64, 32);
  bool ok = rows.size() == 3;
  std::string d = "ratios";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double q = rows[i - 1].factor / rows[i].factor;
    ok = ok && q >= 1.6 && q <= 2.4;
    d += " " + fmt(q);
  }
  Config pc = c;
  pc.run.t_end = 0.05;
  const SimSetup ps = make_setup(pc);
  const PicardResult pr = picard_fixed_point(ps, initial_field(pc, ps.basis), 200, 1e-13);
  ok = ok && pr.residual < 1e-8;
  return {ok, d + " (want [1.6, 2.4]), Picard residual " + fmt(pr.residual) + " after " +
                  std::to_string(pr.iterations) + " iterations (tol 1e-8)"};
}

// RMS terminal V-error against a dt_min / 64 reference driven by the same
// fine increments, summed per coarse step.
Outcome strong_order() {
  Config c = desk();
  c.run.n_modes = 4;
  c.run.t_end = 0.064;
  c.noise.kind = NoiseKind::diagonal;
  c.noise.L = 4.0;
  c.noise.K = 4;
  c.initial.amplitude = 1.0;
  const std::vector<double> dts = {4e-3, 2e-3, 1e-3};
  const double dt_ref = dts.back() / 64;
  const SimSetup base = make_setup(c);
  const SpectralField y0 = initial_field(c, base.basis);
  const int K = base.noise.drivers();
  const std::size_t paths = 64;
  std::vector<double> sq(dts.size(), 0.0);
  for (std::uint64_t p = 0; p < paths; ++p) {
    auto fine = [&](std::size_t step, int k) {
      return keyed_normal(c.run.seed, p, step, std::uint64_t(k)) * std::sqrt(dt_ref);
    };
    SimSetup rs = base;
    rs.dt = dt_ref;
    RunOptions ro;
    ro.sample_stride = 1 << 20;
    ro.increments = [&](std::size_t step, std::span<double> dW) {
      for (int k = 0; k < K; ++k) dW[k] = fine(step, k);
    };
    const SpectralField ref = run(rs, y0, p, ro).final_y;
    for (std::size_t j = 0; j < dts.size(); ++j) {
      SimSetup cs = base;
      cs.dt = dts[j];
      const std::size_t r = std::size_t(std::llround(dts[j] / dt_ref));
      RunOptions co = ro;
      co.increments = [&](std::size_t step, std::span<double> dW) {
        for (int k = 0; k < K; ++k) {
          double acc = 0.0;
          for (std::size_t q = 0; q < r; ++q) acc += fine(step * r + q, k);
          dW[k] = acc;
        }
      };
      sq[j] += v_norm_squared(run(cs, y0, p, co).final_y - ref);
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::string d = "rms";
  for (std::size_t j = 0; j < dts.size(); ++j) {
    const double e = std::sqrt(sq[j] / double(paths));
    d += " " + fmt(e);
    const double x = std::log(dts[j]), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(dts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope >= 0.35 && slope <= 0.65, d + ", fitted slope " + fmt(slope) + " (want [0.35, 0.65])"};
}

Outcome stability() {
  Config c = desk();
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const StabilityReport same = stability_study(s, y0, s, y0, 8);
  const SpectralField dir = random_smooth_field(s.basis, 1.0, 77);
  std::vector<double> ratios;
  bool within = true;
  std::string d = "identical data bit-identical: " + std::string(same.identical ? "yes" : "no") + ", ratios";
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const StabilityReport r = stability_study(s, y0, s, y0 + eps * dir, 4);
    within = within && r.pass;
    ratios.push_back(r.max_sup_diff / eps);
    d += " " + fmt(ratios.back());
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = (*hi - *lo) / *lo;
  return {same.identical && spread < 0.1 && within,
          d + ", variation " + fmt(spread) + " (tol 0.1), stability bound " + (within ? "held" : "violated")};
}

Outcome energy_audit_case() {
  Config c = desk();
  c.noise.kind = NoiseKind::diagonal;
  c.noise.L = 0.1;
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  std::vector<PathSummary> ps;
  for (std::uint64_t p = 0; p < 128; ++p) ps.push_back(summarize(run(s, y0, p)));
  const EnsembleReport r = aggregate(ps, c.fluid, c.noise.L, c.run.t_end, c.run.p_exponent);
  const AuditResult a = energy_audit(r);
  return {a.pass && r.blowups == 0,
          "E[LHS] " + fmt(a.lhs) + " +- " + fmt(a.lhs_stderr) + " vs bound " + fmt(a.rhs) + " (c = " + fmt(a.c) +
              "), margin " + fmt(a.margin)};
}

Outcome isometry() {
  const BasisPtr b = desk_basis();
  const SpectralField y = oracle::random_field(b, 5);
  NoiseSpec ns;
  ns.kind = NoiseKind::diagonal;
  ns.L = 0.1;
  const DiffusionMatrix g = diffusion_pairings(y, make_noise_model(ns));
  const IsometryCheck c = ito_isometry(g, 2, 1.0, 50, 1000, 11);
  return {c.expected > 0.0 && c.within(3.0), "mean square " + fmt(c.mean_square) + " vs " + fmt(c.expected) +
                                                 " (3 stderr = " + fmt(3 * c.standard_error) + ")"};
}

Outcome census() {
  Config c = desk();
  c.run.t_end = 0.1;
  c.initial.amplitude = 0.2;
  c.forcing = {{0, 300.0}, {3, -200.0}, {10, 150.0}};
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  try {
    const CensusReport r = blowup_census(s, y0, {1, 2, 4, 8}, 64);
    std::size_t violations = 0, hits = 0;
    for (std::size_t p = 0; p < r.tau.size(); ++p) {
      for (std::size_t l = 1; l < r.levels.size(); ++l) violations += r.tau[p][l - 1] > r.tau[p][l];
      for (bool h : r.hit[p]) hits += h;
    }
    return {violations == 0 && r.violations == 0 && hits > 0,
            std::to_string(violations) + " violations over 64 paths, " + std::to_string(hits) + "/256 levels hit"};
  } catch (const MonotonicityViolation& e) {
    return {false, e.what()};
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"operator oracles", operator_oracles},
      {"trilinear antisymmetry", antisymmetry},
      {"grade-3 dissipativity and monotonicity", dissipativity},
      {"energy identity", energy_identity},
      {"deterministic decay", deterministic_decay},
      {"Stokes inverse", stokes},
      {"cut-off consistency", cutoff_consistency},
      {"contraction", contraction},
      {"strong order", strong_order},
      {"stability", stability},
      {"energy estimate audit", energy_audit_case},
      {"Ito isometry", isometry},
      {"stopping-time monotonicity", census},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << " [" << fmt(secs) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
