#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "thirdgrade/diagnostics.hpp"
#include "thirdgrade/errors.hpp"

using namespace thirdgrade;

namespace {

Config small(int n = 4) {
  Config c;
  c.run.n_modes = n;
  c.run.dt = 1e-3;
  c.run.t_end = 0.1;
  c.run.seed = 5;
  return c;
}

std::vector<PathSummary> ensemble(const SimSetup& s, const SpectralField& y0, std::size_t paths) {
  std::vector<PathSummary> out;
  for (std::size_t p = 0; p < paths; ++p) out.push_back(summarize(run(s, y0, p)));
  return out;
}

}  // namespace

TEST(Estimate, MeanAndStandardError) {
  const Estimate e = estimate({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.stderr_, std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0));
  EXPECT_EQ(estimate({7.0}).stderr_, 0.0);
  EXPECT_EQ(estimate({}).mean, 0.0);
}

TEST(Gronwall, ConstantFromTheEnergyChain) {
  const FluidParams p{0.5, 1.0, -0.5, 0.5};
  const double a = 0.5;
  EXPECT_DOUBLE_EQ(gronwall_constant(p, 0.1), 2.0 * (1.0 + 2 * a * a / (1.0 * 0.5) + 0.1 * (1 + 2 * 9.0)));
  EXPECT_DOUBLE_EQ(gronwall_constant(FluidParams{1, 1, -1, 0}, 0.0), 2.0);
}

TEST(Aggregate, BlowupsExcludedAndCounted) {
  std::vector<PathSummary> ps(3);
  for (std::size_t i = 0; i < 3; ++i) {
    ps[i].path = i;
    ps[i].sup_v2 = double(i + 1);
    ps[i].y0_v2 = 1.0;
  }
  ps[1].blowup = true;
  const EnsembleReport r = aggregate(ps, FluidParams{}, 0.1, 1.0, 6.0);
  EXPECT_EQ(r.paths, 3u);
  EXPECT_EQ(r.blowups, 1u);
  EXPECT_DOUBLE_EQ(r.sup_v2.mean, 2.0);
  const AuditResult a = energy_audit(r);
  EXPECT_FALSE(a.pass);
  EXPECT_EQ(a.failing_term, "blowup");
}

TEST(Aggregate, SinglePathEqualsItsOwnStatistics) {
  const Config c = small();
  const SimSetup s = make_setup(c);
  const TrajectoryRecord rec = run(s, initial_field(c, s.basis), 0);
  const EnsembleReport r = aggregate({summarize(rec)}, c.fluid, c.noise.L, c.run.t_end, 6.0);
  EXPECT_EQ(r.sup_v2.mean, rec.sup_v2);
  EXPECT_EQ(r.dissipation.mean, 4 * c.fluid.nu * rec.int_dy2);
  EXPECT_EQ(r.grade3.mean, 0.5 * c.fluid.beta * rec.int_theta_a4);
  EXPECT_EQ(r.sup_w_tilde_p.mean, std::pow(rec.sup_w_tilde2, 3.0));
  EXPECT_EQ(r.sup_v2.stderr_, 0.0);
}

TEST(EnergyAudit, DecayCase) {
  Config c = small();
  c.noise.kind = NoiseKind::off;
  c.run.t_end = 0.5;
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const auto ps = ensemble(s, y0, 2);
  const EnsembleReport r = aggregate(ps, c.fluid, 0.0, c.run.t_end, 6.0);
  // exact balance: sup is attained at t = 0 and the dissipation never
  // exceeds the initial energy
  EXPECT_DOUBLE_EQ(r.sup_v2.mean, v_norm_squared(y0));
  EXPECT_LE(r.dissipation.mean + r.grade3.mean, v_norm_squared(y0) * (1 + 1e-3));
  const AuditResult a = energy_audit(r, true);
  EXPECT_TRUE(a.pass);
  EXPECT_GE(a.margin, 0.0);
  EXPECT_NO_THROW(enforce(a));
}

TEST(EnergyAudit, DiagonalNoiseEnsemble) {
  Config c = small();
  c.noise.L = 0.1;
  const SimSetup s = make_setup(c);
  const auto ps = ensemble(s, initial_field(c, s.basis), 64);
  const EnsembleReport r = aggregate(ps, c.fluid, c.noise.L, c.run.t_end, 6.0);
  const AuditResult a = energy_audit(r);
  EXPECT_TRUE(a.pass) << a.lhs << " " << a.rhs;
  EXPECT_GT(a.margin, 0.0);
  EXPECT_DOUBLE_EQ(a.c, gronwall_constant(c.fluid, 0.1));
}

TEST(EnergyAudit, NegatedViscosityIsCaught) {
  Config c = small();
  c.noise.kind = NoiseKind::off;
  c.run.t_end = 0.2;
  SimSetup s = make_setup(c);
  s.fluid.nu = -20.0;  // fixture: anti-dissipative dynamics
  const auto ps = ensemble(s, initial_field(c, s.basis), 1);
  const EnsembleReport r = aggregate(ps, c.fluid, 0.0, c.run.t_end, 6.0);
  const AuditResult a = energy_audit(r, true);
  EXPECT_FALSE(a.pass);
  EXPECT_LT(a.margin, 0.0);
  try {
    enforce(a);
    FAIL();
  } catch (const EstimateViolation& e) {
    EXPECT_EQ(e.term(), "sup ||y||_V^2");
  }
}

TEST(Stability, IdenticalDataIdenticalPaths) {
  const Config c = small();
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const StabilityReport r = stability_study(s, y0, s, y0, 3);
  EXPECT_TRUE(r.identical);
  EXPECT_EQ(r.sup_diff2.mean, 0.0);
  EXPECT_EQ(r.max_sup_diff, 0.0);
}

TEST(Stability, LinearResponseInEpsilon) {
  Config c = small();
  c.noise.kind = NoiseKind::off;
  c.initial.amplitude = 1.0;
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const SpectralField dir = random_smooth_field(s.basis, 1.0, 77);
  std::vector<double> ratios;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const StabilityReport r = stability_study(s, y0, s, y0 + eps * dir, 1);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.data_diff.mean, eps * eps, 1e-12 * eps * eps + 1e-20);
    ratios.push_back(r.max_sup_diff / eps);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LT((*hi - *lo) / *lo, 0.1);
}

TEST(Stability, ForcingPerturbationControlled) {
  Config c = small();
  c.noise.kind = NoiseKind::off;
  const SimSetup a = make_setup(c);
  SimSetup b = a;
  b.U += random_smooth_field(a.basis, 1e-3, 9);
  const SpectralField y0 = initial_field(c, a.basis);
  const StabilityReport r = stability_study(a, y0, b, y0, 1);
  EXPECT_GT(r.sup_diff2.mean, 0.0);
  EXPECT_GT(r.data_diff.mean, 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.sup_diff2.mean, r.bound);
}

TEST(Convergence, ClosedSubspaceHasZeroError) {
  Config c = small(2);
  c.noise.kind = NoiseKind::linear_vmap;
  c.initial.modes = {{0, 0.3}, {5, -0.2}};  // modes of the n = 2 basis
  // initial modes are indices of the reference basis (n = 4); the first
  // entries of both bases coincide because modes are sorted by |k|
  const auto rows = galerkin_convergence(c, {2}, 2, 0.0);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LT(rows[0].sup_error.mean, 1e-14);
}

TEST(Convergence, ErrorsDecreaseWithN) {
  Config c = small(4);
  c.run.t_end = 0.05;
  const auto rows = galerkin_convergence(c, {1, 2, 4}, 2);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[0].sup_error.mean, rows[1].sup_error.mean);
  EXPECT_GT(rows[1].sup_error.mean, rows[2].sup_error.mean);
}

TEST(Convergence, TransferRoundTrip) {
  const auto small_b = build_basis(DomainSpec{}, 1.0, 3), big_b = build_basis(DomainSpec{}, 1.0, 6);
  const SpectralField y = oracle::random_field(small_b, 3);
  EXPECT_EQ(transfer(y, small_b), y);
  EXPECT_EQ(transfer(transfer(y, big_b), small_b), y);
  EXPECT_NEAR(v_norm_squared(transfer(y, big_b)), v_norm_squared(y), 1e-15);
}

TEST(Census, DecayingFlowNeverHits) {
  Config c = small();
  c.noise.kind = NoiseKind::off;
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  ASSERT_LT(norms(y0).w24, 1.0);
  const CensusReport r = blowup_census(s, y0, {1, 2, 4, 8}, 2);
  for (const auto& row : r.tau)
    for (double t : row) EXPECT_EQ(t, c.run.t_end);
  EXPECT_EQ(r.violations, 0u);
}

TEST(Census, StrongForcingMonotone) {
  Config c = small();
  c.initial.amplitude = 0.2;
  c.forcing = {{0, 300.0}, {3, -200.0}, {10, 150.0}};
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const CensusReport r = blowup_census(s, y0, {1, 2, 4, 8}, 4);
  std::size_t hits = 0;
  for (std::size_t p = 0; p < r.tau.size(); ++p) {
    for (std::size_t l = 1; l < r.levels.size(); ++l) EXPECT_LE(r.tau[p][l - 1], r.tau[p][l]);
    for (bool h : r.hit[p]) hits += h;
  }
  EXPECT_GT(hits, 4u);  // the fixture actually crosses some levels
}

TEST(Census, LevelBelowInitialNormStopsAtZero) {
  Config c = small();
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const CensusReport r = blowup_census(s, y0, {0.5 * norms(y0).w24}, 1);
  EXPECT_TRUE(r.hit[0][0]);
  EXPECT_EQ(r.tau[0][0], 0.0);
  EXPECT_EQ(r.histogram[0][0], 1u);
}

TEST(Contraction, FactorLinearInHorizon) {
  const Config c = small();
  const SimSetup s = make_setup(c);
  const SpectralField y0 = initial_field(c, s.basis);
  const auto rows = contraction_study(s, y0, random_smooth_field(s.basis, 1e-3, 3), {0.08, 0.04, 0.02}, 64, 32);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double q = rows[i - 1].factor / rows[i].factor;
    EXPECT_GE(q, 1.6);
    EXPECT_LE(q, 2.4);
  }
  for (const auto& r : rows) EXPECT_LT(r.factor, 1.0);
}

TEST(Contraction, PicardConverges) {
  Config c = small();
  c.run.t_end = 0.05;
  const SimSetup s = make_setup(c);
  const PicardResult r = picard_fixed_point(s, initial_field(c, s.basis), 100, 1e-13);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_LT(r.last_change, 1e-13);
  EXPECT_LT(r.iterations, 100);
}

TEST(Reports, CsvAndJson) {
  const Config c = small();
  const SimSetup s = make_setup(c);
  const auto ps = ensemble(s, initial_field(c, s.basis), 4);
  const EnsembleReport r = aggregate(ps, c.fluid, c.noise.L, c.run.t_end, 6.0);
  const AuditResult a = energy_audit(r);
  std::ostringstream csv;
  write_report_csv(r, a, csv);
  EXPECT_EQ(csv.str().rfind("name,value,bound,margin,stderr\n", 0), 0u);
  EXPECT_NE(csv.str().find("energy_lhs,"), std::string::npos);
  const auto j = nlohmann::json::parse(report_json(r, a, 99));
  EXPECT_EQ(j["seed"], 99);
  EXPECT_EQ(j["paths"], 4);
  EXPECT_EQ(j["audit"]["pass"], a.pass);
  EXPECT_DOUBLE_EQ(j["bound"].get<double>(), r.bound);
}
