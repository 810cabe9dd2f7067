#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "thirdgrade/diagnostics.hpp"
#include "thirdgrade/ensemble.hpp"
#include "thirdgrade/errors.hpp"

namespace thirdgrade::cli {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Random vector trig polynomial with u1 even and u2 odd in x2, so that it is
// also a valid channel sample. Not divergence-free.
PhysicalField random_forcing(const GalerkinBasis& basis, std::uint64_t seed) {
  const int n = basis.truncation();
  struct Term { int k, m; double a1, p1, a2, p2; };
  std::vector<Term> terms;
  std::uint64_t idx = 0;
  for (int k = -n; k <= n; ++k)
    for (int m = 0; m <= n; ++m)
      terms.push_back({k, m, keyed_normal(seed, 7, 0, idx++), keyed_normal(seed, 7, 1, idx++),
                       keyed_normal(seed, 7, 2, idx++), keyed_normal(seed, 7, 3, idx++)});
  return sample_field(basis, [&](double x1, double x2) {
    std::array<double, 2> u{0.0, 0.0};
    for (const auto& t : terms) {
      u[0] += t.a1 * std::cos(t.k * x1 + t.p1) * std::cos(t.m * x2);
      u[1] += t.a2 * std::cos(t.k * x1 + t.p2) * std::sin(t.m * x2);
    }
    return u;
  });
}

}  // namespace

std::vector<CheckRow> operator_checks(const Config& cfg, int trials) {
  std::vector<CheckRow> rows;
  auto add = [&](std::string name, double residual, double tol) {
    rows.push_back({std::move(name), residual, tol, std::isfinite(residual) && residual <= tol});
  };

  // Manufactured field y = (0, cos x1) on the torus.
  {
    DomainSpec torus;
    const auto basis = build_basis(torus, cfg.fluid.alpha1, cfg.run.n_modes);
    const SpectralField e = unit_field(basis, std::size_t(basis->find(ModeKind::cosine, 1, 0)));
    // rescale so that y = (0, cos x1) whatever the sign and alpha1 normalisation
    const SpectralField y = (1.0 / synthesize(e).comp[1][0]) * e;
    const PhysicalField d2 = div_A2(y), d3 = div_A2A(y);
    const int n = basis->grid_size();
    const double h = 2.0 * kPi / n;
    double e2 = 0.0, e3 = 0.0;
    for (int j1 = 0; j1 < n; ++j1) {
      const double x = j1 * h, s = std::sin(x), c = std::cos(x);
      for (int j2 = 0; j2 < n; ++j2) {
        const std::size_t p = std::size_t(j1) * n + j2;
        e2 = std::max({e2, std::abs(d2.comp[0][p] - std::sin(2 * x)), std::abs(d2.comp[1][p])});
        e3 = std::max({e3, std::abs(d3.comp[0][p]), std::abs(d3.comp[1][p] + 6 * s * s * c)});
      }
    }
    add("div(A^2) vs (sin 2x1, 0)", e2, 1e-10);
    add("div(|A|^2 A) vs (0, -6 sin^2 x1 cos x1)", e3, 1e-10);
  }

  const SimSetup setup = make_setup(cfg);
  const auto& basis = setup.basis;
  SpectralWorkspace& ws = workspace_for(basis);
  const CutoffFn cut = setup.cut;
  const SpectralField zero(basis);

  double anti_zz = 0.0, anti = 0.0, dissip = 0.0, j1 = 0.0, stokes = 0.0, varres = 0.0;
  double vinner = 0.0, dgrad = 0.0, mono = -INFINITY, homog = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = std::uint64_t(3 * t + 11);
    const SpectralField y = random_smooth_field(basis, 1.0, s);
    const SpectralField z = random_smooth_field(basis, 1.0, s + 1);
    const SpectralField phi = random_smooth_field(basis, 1.0, s + 2);

    anti_zz = std::max(anti_zz, std::abs(trilinear_b(ws, y, z, z)));
    anti = std::max(anti, std::abs(trilinear_b(ws, y, z, phi) + trilinear_b(ws, y, phi, z)));

    FluidParams unit = setup.fluid;
    unit.beta = 1.0;
    const RhsBreakdown r3 = assemble_rhs(ws, y, zero, unit, cut, 1.0);
    dissip = std::max(dissip, std::abs(dot(r3.grade3, y.coeffs()) + 0.5 * r3.a4) / (0.5 * r3.a4));

    const SpectralField U = random_smooth_field(basis, 0.3, s + 3);
    const RhsBreakdown r = assemble_rhs(ws, y, U, setup.fluid, cut);
    const auto f = r.total();
    const double lhs = 2.0 * dot(f, y.coeffs());
    const auto& p = setup.fluid;
    const double rhs = -4.0 * p.nu * r.dy_squared - 2.0 * (p.alpha1 + p.alpha2) * r.theta * r.a2_grad -
                       p.beta * r.theta * r.a4 + 2.0 * r.u_y;
    j1 = std::max(j1, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));

    const SpectralField back = stokes_inverse(ws, synthesize_v(ws, y));
    const SpectralField gap = back - y;
    stokes = std::max(stokes, max_abs({gap.coeffs().begin(), gap.coeffs().end()}));

    const PhysicalField force = random_forcing(*basis, s);
    const SpectralField hsol = stokes_inverse(ws, force);
    const auto lhs_pair = l2_pairings(ws, synthesize_v(ws, hsol));
    const auto rhs_pair = l2_pairings(ws, force);
    double res = 0.0;
    for (std::size_t i = 0; i < lhs_pair.size(); ++i) res = std::max(res, std::abs(lhs_pair[i] - rhs_pair[i]));
    varres = std::max(varres, res / std::max(1.0, max_abs(rhs_pair)));

    const double by_coeff = v_inner(y, z);
    const double by_quad = l2_inner(ws, synthesize_v(ws, y), synthesize(ws, z));
    vinner = std::max(vinner, std::abs(by_coeff - by_quad) / std::max(1.0, std::abs(by_coeff)));

    const TensorField g = grad(ws, y);
    const TensorField d = sym_D(ws, y);
    double g2 = 0.0, d2 = 0.0;
    for (std::size_t q = 0; q < ws.points(); ++q)
      for (int c = 0; c < 4; ++c) {
        g2 += g.comp[c][q] * g.comp[c][q];
        d2 += d.comp[c][q] * d.comp[c][q];
      }
    dgrad = std::max(dgrad, std::abs(2.0 * d2 - g2) / g2);

    const SpectralField diff = y - z;
    const auto s1 = pair_tensor_divergence(ws, S_of(ws, y, 1.0));
    const auto s2 = pair_tensor_divergence(ws, S_of(ws, z, 1.0));
    double m = 0.0;
    for (std::size_t i = 0; i < s1.size(); ++i) m += (s1[i] - s2[i]) * diff[i];
    mono = std::max(mono, m);

    const PhysicalField a = div_A2A(ws, y);
    const PhysicalField b = div_A2A(ws, 2.0 * y);
    double hmax = 0.0, amax = 0.0;
    for (int c = 0; c < 2; ++c)
      for (std::size_t q = 0; q < ws.points(); ++q) {
        hmax = std::max(hmax, std::abs(b.comp[c][q] - 8.0 * a.comp[c][q]));
        amax = std::max(amax, std::abs(8.0 * a.comp[c][q]));
      }
    homog = std::max(homog, hmax / amax);
  }
  add("|b(y,z,z)|", anti_zz, 1e-10);
  add("|b(y,z,phi) + b(y,phi,z)|", anti, 1e-10);
  add("(div |A|^2 A, y) + 1/2 int |A|^4, relative", dissip, 1e-8);
  add("J1 energy identity, relative", j1, 1e-8);
  add("stokes_inverse(v(y)) - y", stokes, 1e-12);
  add("variational residual (v(h) - Pf, e_i)", varres, 1e-10);
  add("(u,z)_V coefficients vs quadrature", vinner, 1e-10);
  add("2||Dy||^2 - ||grad y||^2, relative", dgrad, 1e-10);
  add("max (div S(y1) - div S(y2), y1 - y2)", mono, 1e-10);
  add("div(|A(2y)|^2 A(2y)) - 8 div(|A|^2 A), relative", homog, 1e-12);

  const double ratio = verify_lipschitz(make_noise_model(cfg.noise), 1000, cfg.run.seed);
  const double L = make_noise_model(cfg.noise).L;
  rows.push_back({"noise Lipschitz ratio / L", L > 0 ? ratio / L : 0.0, 1.0 + 1e-9, true});
  return rows;
}

namespace {

void print_table(const std::vector<CheckRow>& rows, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-48s %-24s %-10s %s\n", "check", "residual", "tolerance", "status");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-48s %-24.17g %-10.1e %s\n", r.name.c_str(), r.residual,
                  r.tolerance, r.pass ? "ok" : "FAIL");
    out << buf;
  }
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral Galerkin simulator for the stochastic third-grade fluid equations",
               "thirdgrade"};
  app.fallthrough();
  app.require_subcommand(1);
  app.footer(
      "Configuration: `key = value` lines in --config; every key also has a flag of the same\n"
      "name, and a flag wins over the file. Exit codes: 0 ok, 1 validation error,\n"
      "2 estimate or property violation, 3 numerical blow-up (simulate --fail-on-blowup).");

  std::string config_path;
  app.add_option("--config", config_path, "configuration file");
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> flags;
  for (const auto& k : config_keys()) {
    std::string names = "--" + k.key;
    if (k.key == "output_path") names += ",--output,-o";
    flags[k.key] = app.add_option(names, values[k.key],
                                  k.description + " [default: " +
                                      (k.default_value.empty() ? "empty" : k.default_value) + "]");
  }

  auto* sim = app.add_subcommand("simulate", "integrate one path and write its trajectory JSONL");
  bool fail_on_blowup = false;
  int snapshot_every = 0;
  std::string snapshot_dir = ".";
  std::string field_csv;
  sim->add_flag("--fail-on-blowup", fail_on_blowup, "exit 3 on numerical blow-up");
  sim->add_option("--snapshot-every", snapshot_every, "write coefficient CSV every k steps (0: never)");
  sim->add_option("--snapshot-dir", snapshot_dir, "directory for coefficient snapshots");
  sim->add_option("--field-csv", field_csv, "write the final velocity field as CSV");

  auto* ens = app.add_subcommand("ensemble", "Monte Carlo ensemble with energy-estimate audit");
  std::size_t n_paths = 64;
  std::string ens_dir = "ensemble_out";
  int workers = 1;
  bool do_resume = false;
  ens->add_option("--paths", n_paths, "number of paths")->capture_default_str();
  ens->add_option("--dir", ens_dir, "output directory")->capture_default_str();
  ens->add_option("--workers", workers, "worker threads")->capture_default_str();
  ens->add_flag("--resume", do_resume, "complete a previous run in --dir");

  auto* chk = app.add_subcommand("check-operators", "print the operator invariant residuals");
  int trials = 20;
  chk->add_option("--trials", trials, "random fields per check")->capture_default_str();

  auto* conv = app.add_subcommand("convergence", "Galerkin convergence ladder");
  std::vector<int> ladder = {2, 4, 8};
  std::size_t conv_paths = 4;
  bool linear = false;
  conv->add_option("--ladder", ladder, "increasing truncations")->delimiter(',')->capture_default_str();
  conv->add_option("--paths", conv_paths, "coupled paths")->capture_default_str();
  conv->add_flag("--linear", linear, "force theta = 0 (nonlinearity off)");

  auto* stab = app.add_subcommand("stability", "coupled-run stability study");
  double eps = 1e-3, forcing_delta = 0.0;
  std::size_t stab_paths = 8;
  stab->add_option("--eps", eps, "V-norm of the initial perturbation")->capture_default_str();
  stab->add_option("--forcing-delta", forcing_delta, "V-norm of the forcing perturbation")
      ->capture_default_str();
  stab->add_option("--paths", stab_paths, "coupled paths")->capture_default_str();

  auto* con = app.add_subcommand("contraction", "empirical contraction factor of the fixed-point map");
  std::vector<double> horizons = {0.08, 0.04, 0.02};
  int con_steps = 64;
  std::size_t con_paths = 32;
  double delta_norm = 1e-3;
  con->add_option("--horizons", horizons, "horizons T*")->delimiter(',')->capture_default_str();
  con->add_option("--steps", con_steps, "steps per horizon")->capture_default_str();
  con->add_option("--paths", con_paths, "paths")->capture_default_str();
  con->add_option("--delta", delta_norm, "V-norm of u1 - u2")->capture_default_str();

  auto* cen = app.add_subcommand("blowup-census", "stopping times over an M ladder");
  std::vector<double> levels = {1, 2, 4, 8};
  std::size_t cen_paths = 16;
  int bins = 10;
  cen->add_option("--levels", levels, "M ladder")->delimiter(',')->capture_default_str();
  cen->add_option("--paths", cen_paths, "coupled paths")->capture_default_str();
  cen->add_option("--bins", bins, "histogram bins")->capture_default_str();

  auto* dump = app.add_subcommand("dump-basis", "write the mode table as CSV");
  std::string basis_csv;
  dump->add_option("--csv", basis_csv, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    std::vector<ConfigOverride> overrides;
    for (const auto& k : config_keys())
      if (flags[k.key]->count() > 0) overrides.emplace_back(k.key, values[k.key]);
    const Config cfg = parse_config(config_path.empty() ? std::string() : read_file(config_path),
                                    overrides);
    const std::uint64_t seed = cfg.run.seed;

    if (sim->parsed()) {
      const SimSetup setup = make_setup(cfg);
      const SpectralField y0 = initial_field(cfg, setup.basis);
      RunOptions opts;
      opts.sample_stride = cfg.run.sample_stride;
      if (snapshot_every > 0) {
        std::filesystem::create_directories(snapshot_dir);
        opts.observer = [&](const SimState& s) {
          if (s.step % std::size_t(snapshot_every) != 0) return;
          std::ofstream f(std::filesystem::path(snapshot_dir) /
                          ("coeffs_" + std::to_string(s.step) + ".csv"));
          write_coefficients_csv(s.y, f);
        };
      }
      const TrajectoryRecord rec = run(setup, y0, 0, opts);
      {
        std::ofstream f(cfg.output_path);
        if (!f) throw IoError("cannot write " + cfg.output_path);
        write_trajectory_jsonl(rec, config_hash(cfg), f);
      }
      if (!field_csv.empty()) {
        std::ofstream f(field_csv);
        write_field_csv(*setup.basis, synthesize(rec.final_y), f);
      }
      out << "seed = " << seed << "\nsteps = " << rec.steps << "\nt = " << fmt(rec.t_final)
          << "\nfinal_v_norm = " << fmt(std::sqrt(v_norm_squared(rec.final_y)))
          << "\nsup_w24 = " << fmt(rec.sup_w24) << "\ntau_M = " << fmt(rec.tau_M.time)
          << (rec.tau_M.hit ? "" : " (not reached)") << "\nterminal_hash = " << rec.terminal_hash
          << "\ntrajectory = " << cfg.output_path << "\n";
      if (rec.blowup) {
        err << "numerical blow-up: " << rec.blowup_message << "\n";
        if (fail_on_blowup) return kBlowup;
      }
      return kOk;
    }

    if (ens->parsed()) {
      EnsembleSpec spec;
      spec.n_paths = n_paths;
      spec.seed = seed;
      spec.config = cfg;
      spec.dir = ens_dir;
      spec.sample_stride = cfg.run.sample_stride;
      spec.workers = workers;
      const EnsembleResult res = do_resume ? resume(spec) : run_ensemble(spec);
      out << report_json(res.report, res.audit, seed) << "\n";
      out << "computed " << res.computed << " of " << spec.n_paths << " paths in " << ens_dir << "\n";
      if (!res.audit.pass) {
        err << "energy estimate audit failed: " << res.audit.failing_term << "\n";
        return kViolation;
      }
      return kOk;
    }

    if (chk->parsed()) {
      const auto rows = operator_checks(cfg, trials);
      out << "seed = " << seed << "\n";
      print_table(rows, out);
      for (const auto& r : rows)
        if (!r.pass) return kViolation;
      return kOk;
    }

    if (conv->parsed()) {
      const auto rows = galerkin_convergence(cfg, ladder, conv_paths,
                                             linear ? std::optional<double>(0.0) : std::nullopt);
      out << "seed = " << seed << "\nreference n = " << 2 * ladder.back() << "\n";
      out << "n,sup_error,stderr\n";
      bool monotone = true;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out << rows[i].n << "," << fmt(rows[i].sup_error.mean) << "," << fmt(rows[i].sup_error.stderr_) << "\n";
        if (i > 0 && rows[i].sup_error.mean > rows[i - 1].sup_error.mean) monotone = false;
      }
      if (!monotone) {
        err << "Galerkin errors do not decrease with n\n";
        return kViolation;
      }
      return kOk;
    }

    if (stab->parsed()) {
      const SimSetup a = make_setup(cfg);
      const SpectralField y0a = initial_field(cfg, a.basis);
      SimSetup b = a;
      b.U += random_smooth_field(a.basis, forcing_delta, cfg.initial.seed + 2);
      const SpectralField y0b = y0a + random_smooth_field(a.basis, eps, cfg.initial.seed + 1);
      const StabilityReport same = stability_study(a, y0a, a, y0a, std::min<std::size_t>(stab_paths, 2));
      const StabilityReport rep = stability_study(a, y0a, b, y0b, stab_paths);
      out << "seed = " << seed << "\nidentical_data_bit_identical = " << (same.identical ? "yes" : "no")
          << "\nE_sup_diff2 = " << fmt(rep.sup_diff2.mean) << " (stderr " << fmt(rep.sup_diff2.stderr_)
          << ")\ndata_diff = " << fmt(rep.data_diff.mean) << "\nM0 = " << fmt(rep.M0)
          << "\nbound = " << fmt(rep.bound) << "\nmax_sup_diff_over_eps = "
          << fmt(eps > 0 ? rep.max_sup_diff / eps : NAN) << "\n";
      if (!same.identical || !rep.pass) {
        err << "stability estimate violated\n";
        return kViolation;
      }
      return kOk;
    }

    if (con->parsed()) {
      const SimSetup s = make_setup(cfg);
      const SpectralField y0 = initial_field(cfg, s.basis);
      const SpectralField delta = random_smooth_field(s.basis, delta_norm, cfg.initial.seed + 1);
      const auto rows = contraction_study(s, y0, delta, horizons, con_steps, con_paths);
      out << "seed = " << seed << "\nT_star,factor,E_sup_Su_diff2,E_sup_u_diff2\n";
      for (const auto& r : rows)
        out << fmt(r.T_star) << "," << fmt(r.factor) << "," << fmt(r.numerator) << ","
            << fmt(r.denominator) << "\n";
      bool ok = true;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const double q = rows[i - 1].factor / rows[i].factor;
        out << "ratio " << fmt(rows[i - 1].T_star) << "/" << fmt(rows[i].T_star) << " = " << fmt(q) << "\n";
        const double expect = rows[i - 1].T_star / rows[i].T_star;
        if (q < 0.8 * expect || q > 1.2 * expect) ok = false;
      }
      SimSetup ps = s;
      ps.t_end = horizons.front();
      ps.dt = horizons.front() / con_steps;
      const PicardResult pr = picard_fixed_point(ps, y0, 4 * con_steps, 1e-13);
      out << "picard_iterations = " << pr.iterations << "\npicard_residual = " << fmt(pr.residual) << "\n";
      if (pr.residual >= 1e-8) ok = false;
      return ok ? kOk : kViolation;
    }

    if (cen->parsed()) {
      const SimSetup s = make_setup(cfg);
      const SpectralField y0 = initial_field(cfg, s.basis);
      out << "seed = " << seed << "\n";
      try {
        const CensusReport r = blowup_census(s, y0, levels, cen_paths, bins);
        out << "M,hits,mean_tau,histogram\n";
        for (std::size_t l = 0; l < r.levels.size(); ++l) {
          std::size_t hits = 0;
          double mean = 0.0;
          for (std::size_t p = 0; p < r.tau.size(); ++p) {
            hits += r.hit[p][l];
            mean += r.tau[p][l] / double(r.tau.size());
          }
          out << fmt(r.levels[l]) << "," << hits << "," << fmt(mean) << ",";
          for (std::size_t b = 0; b < r.histogram[l].size(); ++b) out << (b ? " " : "") << r.histogram[l][b];
          out << "\n";
        }
        out << "violations = 0\n";
      } catch (const MonotonicityViolation& e) {
        err << e.what() << "\n";
        return kViolation;
      }
      return kOk;
    }

    if (dump->parsed()) {
      DomainSpec spec;
      spec.kind = cfg.run.domain;
      spec.quadrature_oversample = cfg.run.quadrature_oversample;
      spec.dealias_factor = cfg.run.dealias_factor;
      const auto basis = build_basis(spec, cfg.fluid.alpha1, cfg.run.n_modes);
      if (basis_csv.empty()) {
        write_basis_csv(*basis, out);
      } else {
        std::ofstream f(basis_csv);
        if (!f) throw IoError("cannot write " + basis_csv);
        write_basis_csv(*basis, f);
      }
      return kOk;
    }
  } catch (const ParseError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kValidation;
  } catch (const ConstraintViolation& e) {
    err << "constraint violation: " << e.what() << "\n";
    return kValidation;
  } catch (const ManifestCorrupt& e) {
    err << "manifest error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kValidation;
  } catch (const EstimateViolation& e) {
    err << "estimate violated: " << e.what() << "\n";
    return kViolation;
  } catch (const LipschitzViolation& e) {
    err << "noise Lipschitz bound violated: " << e.what() << "\n";
    return kViolation;
  } catch (const NumericalBlowup& e) {
    err << "numerical blow-up: " << e.what() << "\n";
    return kBlowup;
  }
  return kOk;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("thirdgrade");
  for (const auto& a : args) argv.push_back(a.c_str());
  return main(int(argv.size()), argv.data(), out, err);
}

}  // namespace thirdgrade::cli
