#include "thirdgrade/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "thirdgrade/errors.hpp"

namespace thirdgrade {

PathSummary summarize(const TrajectoryRecord& rec) {
  PathSummary s;
  s.path = rec.path;
  s.y0_v2 = rec.y0_v2;
  s.sup_v2 = rec.sup_v2;
  s.int_dy2 = rec.int_dy2;
  s.int_theta_a4 = rec.int_theta_a4;
  s.int_u2 = rec.int_u2;
  s.sup_w_tilde2 = rec.sup_w_tilde2;
  s.sup_w24 = rec.sup_w24;
  s.tau_M = rec.tau_M.time;
  s.tau_M_hit = rec.tau_M.hit;
  s.blowup = rec.blowup;
  s.terminal_hash = rec.terminal_hash;
  return s;
}

Estimate estimate(const std::vector<double>& xs) {
  Estimate e;
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.stderr_ = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  }
  return e;
}

double gronwall_constant(const FluidParams& p, double L) {
  const double a = p.alpha1 + p.alpha2;
  const double grade2 = a == 0.0 ? 0.0 : 2.0 * a * a / (p.alpha1 * p.beta);
  return 2.0 * (1.0 + grade2 + L * (1.0 + 2.0 * kBdgConstant * kBdgConstant));
}

EnsembleReport aggregate(const std::vector<PathSummary>& paths, const FluidParams& fluid,
                         double noise_L, double T, double p_exponent) {
  EnsembleReport r;
  r.paths = paths.size();
  r.T = T;
  r.p = p_exponent;
  std::vector<double> sup, diss, g3, lhs, wt2, wtp, y0, u2, tau;
  for (const auto& s : paths) {
    if (s.blowup) {
      ++r.blowups;
      continue;
    }
    sup.push_back(s.sup_v2);
    diss.push_back(4.0 * fluid.nu * s.int_dy2);
    g3.push_back(0.5 * fluid.beta * s.int_theta_a4);
    lhs.push_back(sup.back() + diss.back() + g3.back());
    wt2.push_back(s.sup_w_tilde2);
    wtp.push_back(std::pow(s.sup_w_tilde2, p_exponent / 2.0));
    y0.push_back(s.y0_v2);
    u2.push_back(s.int_u2);
    tau.push_back(s.tau_M);
  }
  r.sup_v2 = estimate(sup);
  r.dissipation = estimate(diss);
  r.grade3 = estimate(g3);
  r.lhs = estimate(lhs);
  r.sup_w_tilde2 = estimate(wt2);
  r.sup_w_tilde_p = estimate(wtp);
  r.y0_v2 = estimate(y0);
  r.int_u2 = estimate(u2);
  r.tau_M = estimate(tau);
  r.gronwall_c = gronwall_constant(fluid, noise_L);
  r.bound = 2.0 * std::exp(r.gronwall_c * T) * (r.y0_v2.mean + r.int_u2.mean);
  return r;
}

AuditResult energy_audit(const EnsembleReport& report, bool deterministic_decay) {
  AuditResult a;
  a.c = report.gronwall_c;
  a.lhs = report.lhs.mean;
  a.lhs_stderr = report.lhs.stderr_;
  // Without noise and forcing the energy balance is exact: sup ||y||_V^2 and
  // the dissipation integrals are each bounded by ||y0||_V^2.
  a.rhs = deterministic_decay ? 2.0 * report.y0_v2.mean : report.bound;
  a.margin = a.rhs - (a.lhs + 3.0 * a.lhs_stderr);
  a.pass = std::isfinite(a.lhs) && a.margin >= 0.0 && report.blowups == 0;
  if (!a.pass) {
    if (report.blowups > 0) a.failing_term = "blowup";
    else if (report.sup_v2.mean > a.rhs) a.failing_term = "sup ||y||_V^2";
    else if (report.sup_v2.mean + report.dissipation.mean > a.rhs) a.failing_term = "4 nu int ||Dy||^2";
    else a.failing_term = "(beta/2) int theta int |A|^4";
  }
  return a;
}

void enforce(const AuditResult& audit) {
  if (audit.pass) return;
  char buf[256];
  std::snprintf(buf, sizeof buf, "energy estimate violated: lhs %.17g (stderr %.17g) > bound %.17g",
                audit.lhs, audit.lhs_stderr, audit.rhs);
  throw EstimateViolation(audit.failing_term, buf);
}

// --- stability -----------------------------------------------------------------

StabilityReport stability_study(const SimSetup& setup_a, const SpectralField& y0_a,
                                const SimSetup& setup_b, const SpectralField& y0_b,
                                std::size_t paths) {
  StabilityReport r;
  r.paths = paths;
  r.identical = true;
  const double dt = setup_a.dt;
  SpectralField dU = setup_a.U - setup_b.U;
  double du2 = 0.0;
  for (std::size_t i = 0; i < dU.size(); ++i)
    du2 += dU[i] * dU[i] / setup_a.basis->mode(i).v_factor;

  std::vector<double> sups, datas;
  double max_rate = 0.0;
  for (std::size_t p = 0; p < paths; ++p) {
    std::vector<SpectralField> ta, tb;
    RunOptions oa, ob;
    oa.sample_stride = ob.sample_stride = 1 << 30;
    oa.observer = [&](const SimState& s) { ta.push_back(s.y); };
    ob.observer = [&](const SimState& s) { tb.push_back(s.y); };
    const TrajectoryRecord ra = run(setup_a, y0_a, p, oa);
    const TrajectoryRecord rb = run(setup_b, y0_b, p, ob);
    const double t_stop = std::min(ra.tau_M.time, rb.tau_M.time);

    double sup = 0.0;
    double prev = -1.0;
    for (std::size_t m = 0; m < std::min(ta.size(), tb.size()); ++m) {
      if (double(m) * dt > t_stop + 1e-12) break;
      const double d2 = v_norm_squared(ta[m] - tb[m]);
      if (!(ta[m] == tb[m])) r.identical = false;
      sup = std::max(sup, d2);
      if (prev > 0.0) max_rate = std::max(max_rate, (d2 - prev) / (dt * prev));
      prev = d2;
    }
    sups.push_back(sup);
    r.max_sup_diff = std::max(r.max_sup_diff, std::sqrt(sup));
    datas.push_back(v_norm_squared(y0_a - y0_b) + t_stop * du2);
  }
  r.sup_diff2 = estimate(sups);
  r.data_diff = estimate(datas);
  const double M = setup_a.cut.M;
  r.M0 = max_rate / (2.0 * M + 1.0);
  r.bound = std::exp((r.M0 * (2.0 * M + 1.0) + 1.0) * setup_a.t_end) * r.data_diff.mean;
  r.pass = r.sup_diff2.mean <= r.bound * (1.0 + 1e-12);
  return r;
}

// --- Galerkin convergence ----------------------------------------------------------

namespace {

std::vector<int> mode_map(const GalerkinBasis& from, const GalerkinBasis& to) {
  std::map<std::tuple<int, int, int>, int> index;
  for (const auto& m : from.modes()) index[{int(m.kind), m.k1, m.k2}] = m.index;
  std::vector<int> map(to.size(), -1);
  for (const auto& m : to.modes()) {
    auto it = index.find({int(m.kind), m.k1, m.k2});
    if (it != index.end()) map[std::size_t(m.index)] = it->second;
  }
  return map;
}

SpectralField apply_map(const SpectralField& y, const std::vector<int>& map, const BasisPtr& target) {
  SpectralField out(target);
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] >= 0) out[i] = y[std::size_t(map[i])];
  return out;
}

}  // namespace

SpectralField transfer(const SpectralField& y, const BasisPtr& target) {
  if (y.basis() == target) return y;
  return apply_map(y, mode_map(*y.basis(), *target), target);
}

std::vector<ConvergenceRow> galerkin_convergence(const Config& cfg, const std::vector<int>& ladder,
                                                 std::size_t paths,
                                                 std::optional<double> theta_override) {
  if (ladder.empty()) return {};
  if (!std::is_sorted(ladder.begin(), ladder.end()))
    throw std::invalid_argument("n ladder must be increasing");
  Config ref_cfg = cfg;
  ref_cfg.run.n_modes = 2 * ladder.back();
  SimSetup ref = make_setup(ref_cfg);
  ref.theta_override = theta_override;
  const SpectralField y0_ref = initial_field(ref_cfg, ref.basis);

  auto trajectory = [&](const SimSetup& s, const SpectralField& y0, std::size_t path) {
    std::vector<SpectralField> traj;
    RunOptions o;
    o.sample_stride = 1 << 30;
    o.observer = [&](const SimState& st) { traj.push_back(st.y); };
    run(s, y0, path, o);
    return traj;
  };

  std::vector<std::vector<SpectralField>> ref_traj(paths);
  for (std::size_t p = 0; p < paths; ++p) ref_traj[p] = trajectory(ref, y0_ref, p);

  std::vector<ConvergenceRow> rows;
  for (int n : ladder) {
    Config c = cfg;
    c.run.n_modes = n;
    c.initial.modes.clear();
    c.forcing.clear();
    SimSetup s = make_setup(c);
    s.theta_override = theta_override;
    const auto down = mode_map(*ref.basis, *s.basis);
    const auto up = mode_map(*s.basis, *ref.basis);
    s.U = apply_map(ref.U, down, s.basis);
    const SpectralField y0 = apply_map(y0_ref, down, s.basis);
    std::vector<double> errs;
    for (std::size_t p = 0; p < paths; ++p) {
      const auto traj = trajectory(s, y0, p);
      double worst = 0.0;
      for (std::size_t m = 0; m < std::min(traj.size(), ref_traj[p].size()); ++m)
        worst = std::max(worst, std::sqrt(v_norm_squared(apply_map(traj[m], up, ref.basis) -
                                                         ref_traj[p][m])));
      errs.push_back(worst);
    }
    rows.push_back({n, estimate(errs)});
  }
  return rows;
}

// --- stopping-time census ------------------------------------------------------------

CensusReport blowup_census(const SimSetup& setup, const SpectralField& y0,
                           const std::vector<double>& levels, std::size_t paths, int bins) {
  CensusReport r;
  r.levels = levels;
  std::sort(r.levels.begin(), r.levels.end());
  const std::size_t L = r.levels.size();
  r.tau.assign(paths, std::vector<double>(L, setup.t_end));
  r.hit.assign(paths, std::vector<bool>(L, false));
  r.max_w24.assign(paths, std::vector<double>(L, 0.0));
  r.histogram.assign(L, std::vector<std::size_t>(std::size_t(std::max(bins, 1)), 0));

  RunOptions opts;
  opts.sample_stride = 1 << 30;
  opts.tau_N_levels.clear();
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t l = 0; l < L; ++l) {
      SimSetup s = setup;
      s.cut.M = r.levels[l];
      const TrajectoryRecord rec = run(s, y0, p, opts);
      r.tau[p][l] = rec.tau_M.time;
      r.hit[p][l] = rec.tau_M.hit;
      r.max_w24[p][l] = rec.sup_w24;
      if (rec.tau_M.hit) {
        std::size_t b = std::size_t(rec.tau_M.time / setup.t_end * double(bins));
        r.histogram[l][std::min(b, r.histogram[l].size() - 1)]++;
      }
    }
    for (std::size_t l = 1; l < L; ++l)
      if (r.tau[p][l - 1] > r.tau[p][l]) ++r.violations;
  }
  if (r.violations > 0)
    throw MonotonicityViolation(std::to_string(r.violations) +
                                " stopping-time pairs decrease with M");
  return r;
}

// --- contraction ------------------------------------------------------------------

std::vector<ContractionRow> contraction_study(const SimSetup& setup, const SpectralField& y0,
                                              const SpectralField& delta,
                                              const std::vector<double>& horizons, int steps,
                                              std::size_t paths) {
  std::vector<ContractionRow> rows;
  const std::size_t K = std::size_t(setup.noise.drivers());
  const SpectralField y1 = y0 + delta;
  for (double T : horizons) {
    SimSetup s = setup;
    s.dt = T / steps;
    s.t_end = T;
    const std::vector<SpectralField> u1(std::size_t(steps) + 1, y0), u2(std::size_t(steps) + 1, y1);
    const double sq = std::sqrt(s.dt);
    double num = 0.0, den = 0.0;
    std::vector<double> dW(std::size_t(steps) * K);
    for (std::size_t p = 0; p < paths; ++p) {
      for (int m = 0; m < steps; ++m)
        for (std::size_t k = 0; k < K; ++k)
          dW[std::size_t(m) * K + k] = sq * keyed_normal(s.seed, p, std::uint64_t(m), k);
      const auto s1 = picard_map(s, y0, u1, dW);
      // the map keeps the datum y0 fixed; only the input trajectory differs
      const auto s2 = picard_map(s, y0, u2, dW);
      const double a = sup_v_distance(s1, s2);
      num += a * a;
      const double b = sup_v_distance(u1, u2);
      den += b * b;
    }
    rows.push_back({T, num / den, num / double(paths), den / double(paths)});
  }
  return rows;
}

PicardResult picard_fixed_point(const SimSetup& setup, const SpectralField& y0, int max_iter,
                                double tol) {
  SimSetup s = setup;
  s.scheme = TimeScheme::explicit_euler;
  const std::size_t steps = s.steps();
  const std::vector<double> dW = path_increments(s, 0, steps);

  std::vector<SpectralField> stepped;
  RunOptions o;
  o.sample_stride = 1 << 30;
  o.observer = [&](const SimState& st) { stepped.push_back(st.y); };
  o.increments = [&](std::size_t m, std::span<double> out) {
    std::copy_n(dW.begin() + std::ptrdiff_t(m * out.size()), out.size(), out.begin());
  };
  run(s, y0, 0, o);

  PicardResult r;
  std::vector<SpectralField> u(steps + 1, y0);
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    auto next = picard_map(s, y0, u, dW);
    r.last_change = sup_v_distance(next, u);
    u = std::move(next);
    if (r.last_change < tol) break;
  }
  r.iterations = std::min(r.iterations, max_iter);
  r.residual = sup_v_distance(u, stepped);
  return r;
}

// --- reports ----------------------------------------------------------------------

void write_report_csv(const EnsembleReport& r, const AuditResult& a, std::ostream& out) {
  out << "name,value,bound,margin,stderr\n";
  char buf[256];
  auto row = [&](const char* name, const Estimate& e, double bound) {
    const double margin = std::isfinite(bound) ? bound - e.mean : NAN;
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g\n", name, e.mean, bound, margin,
                  e.stderr_);
    out << buf;
  };
  row("E_sup_v2", r.sup_v2, NAN);
  row("4nu_E_int_Dy2", r.dissipation, NAN);
  row("beta_half_E_int_theta_A4", r.grade3, NAN);
  std::snprintf(buf, sizeof buf, "energy_lhs,%.17g,%.17g,%.17g,%.17g\n", a.lhs, a.rhs, a.margin,
                a.lhs_stderr);
  out << buf;
  row("E_sup_w_tilde2", r.sup_w_tilde2, NAN);
  row("E_sup_w_tilde_p", r.sup_w_tilde_p, NAN);
  row("E_y0_v2", r.y0_v2, NAN);
  row("E_int_U2", r.int_u2, NAN);
  row("E_tau_M", r.tau_M, r.T);
}

std::string report_json(const EnsembleReport& r, const AuditResult& a, std::uint64_t seed) {
  auto est = [](const Estimate& e) { return nlohmann::json{{"mean", e.mean}, {"stderr", e.stderr_}}; };
  nlohmann::json j;
  j["seed"] = seed;
  j["paths"] = r.paths;
  j["blowups"] = r.blowups;
  j["T"] = r.T;
  j["p"] = r.p;
  j["E_sup_v2"] = est(r.sup_v2);
  j["4nu_E_int_Dy2"] = est(r.dissipation);
  j["beta_half_E_int_theta_A4"] = est(r.grade3);
  j["energy_lhs"] = est(r.lhs);
  j["E_sup_w_tilde2"] = est(r.sup_w_tilde2);
  j["E_sup_w_tilde_p"] = est(r.sup_w_tilde_p);
  j["E_y0_v2"] = est(r.y0_v2);
  j["E_int_U2"] = est(r.int_u2);
  j["E_tau_M"] = est(r.tau_M);
  j["gronwall_c"] = r.gronwall_c;
  j["bound"] = r.bound;
  j["audit"] = {{"pass", a.pass}, {"lhs", a.lhs}, {"rhs", a.rhs}, {"margin", a.margin},
                {"c", a.c}, {"failing_term", a.failing_term}};
  return j.dump(2);
}

}  // namespace thirdgrade
