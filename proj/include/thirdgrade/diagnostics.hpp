#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "thirdgrade/dynamics.hpp"

namespace thirdgrade {

// Per-path scalars that the ensemble statistics are built from. This is
// what each path file stores in its summary line.
struct PathSummary {
  std::uint64_t path = 0;
  double y0_v2 = 0.0;
  double sup_v2 = 0.0;
  double int_dy2 = 0.0;
  double int_theta_a4 = 0.0;
  double int_u2 = 0.0;
  double sup_w_tilde2 = 0.0;
  double sup_w24 = 0.0;
  double tau_M = 0.0;
  bool tau_M_hit = false;
  bool blowup = false;
  std::uint64_t terminal_hash = 0;

  bool operator==(const PathSummary&) const = default;
};

PathSummary summarize(const TrajectoryRecord& rec);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;

  bool operator==(const Estimate&) const = default;
};

// Mean and standard error, summed in the given order.
Estimate estimate(const std::vector<double>& xs);

struct EnsembleReport {
  std::size_t paths = 0;
  std::size_t blowups = 0;
  double T = 0.0;
  double p = 6.0;
  Estimate sup_v2;             // E sup ||y||_V^2
  Estimate dissipation;        // 4 nu E int ||D y||_2^2
  Estimate grade3;             // (beta / 2) E int theta int |A|^4
  Estimate lhs;                // sum of the three, per path
  Estimate sup_w_tilde2;       // E sup ||y||_W~^2
  Estimate sup_w_tilde_p;      // E sup ||y||_W~^p
  Estimate y0_v2;              // E ||y0||_V^2
  Estimate int_u2;             // E int ||U||_2^2
  Estimate tau_M;
  double gronwall_c = 0.0;
  double bound = 0.0;          // 2 e^{cT} (E ||y0||_V^2 + E int ||U||^2)

  bool operator==(const EnsembleReport&) const = default;
};

// Gronwall constant of the implemented energy chain:
//   2 (U, y)                      <= ||U||^2 + ||y||_V^2
//   2 |a1 + a2| |(A^2, grad y)|   <= (beta / 2) int |A|^4 + 2 (a1 + a2)^2 / (a1 beta) ||y||_V^2
//   Ito correction                <= L ||y||_V^2
//   E sup |martingale| (BDG, C=3) <= (1/2) E sup ||y||_V^2 + 2 C^2 L E int ||y||_V^2
// Absorbing the half sup gives
//   c = 2 (1 + 2 (a1 + a2)^2 / (a1 beta) + L (1 + 2 C^2))
// and an overall factor 2 on the data.
double gronwall_constant(const FluidParams& p, double L);
constexpr double kBdgConstant = 3.0;

EnsembleReport aggregate(const std::vector<PathSummary>& paths, const FluidParams& fluid,
                         double noise_L, double T, double p_exponent);

struct AuditResult {
  bool pass = false;
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - (lhs + 3 stderr)
  double c = 0.0;
  std::string failing_term;
};

// Energy estimate audit: passes when E[LHS] + 3 stderr <= bound. In the
// deterministic decay case (zero noise and forcing) the bound is
// 2 ||y0||_V^2: the supremum and the dissipation integrals are each at most
// ||y0||_V^2, and the supremum alone already equals it at t = 0.
AuditResult energy_audit(const EnsembleReport& report, bool deterministic_decay = false);
// Throws EstimateViolation naming the failing term.
void enforce(const AuditResult& audit);

// Coupled runs for the stability estimate. Both solutions share Wiener keys.
struct StabilityReport {
  std::size_t paths = 0;
  Estimate sup_diff2;   // E sup_{t <= tau1 ^ tau2} ||y1 - y2||_V^2
  Estimate data_diff;   // E ||y0^1 - y0^2||_V^2 + E int ||U1 - U2||_2^2
  double M0 = 0.0;      // empirical growth constant
  double bound = 0.0;   // e^{(M0 (2M + 1) + 1) T} * data_diff
  double max_sup_diff = 0.0;  // max over paths of sup ||y1 - y2||_V
  bool identical = false;     // all paths bit-identical
  bool pass = false;
};

StabilityReport stability_study(const SimSetup& setup_a, const SpectralField& y0_a,
                                const SimSetup& setup_b, const SpectralField& y0_b,
                                std::size_t paths);

// sup_t ||y_n(t) - y_ref(t)||_V for each n of the ladder against n_ref =
// 2 max(ladder), on coupled Wiener paths. y0 and the forcing are given on
// the reference basis and restricted to each truncation.
struct ConvergenceRow {
  int n = 0;
  Estimate sup_error;
};
std::vector<ConvergenceRow> galerkin_convergence(const Config& cfg, const std::vector<int>& ladder,
                                                 std::size_t paths,
                                                 std::optional<double> theta_override = {});

// Restriction / extension of coefficients between bases by mode identity.
SpectralField transfer(const SpectralField& y, const BasisPtr& target);

// Stopping times tau_M over a ladder of M on coupled paths.
struct CensusReport {
  std::vector<double> levels;
  std::vector<std::vector<double>> tau;       // [path][level]
  std::vector<std::vector<bool>> hit;         // [path][level]
  std::vector<std::vector<double>> max_w24;   // [path][level]
  std::size_t violations = 0;
  // histogram of tau per level over `bins` equal bins of [0, T]
  std::vector<std::vector<std::size_t>> histogram;
};
// Throws MonotonicityViolation if some path has tau_{M1} > tau_{M2}, M1 < M2.
CensusReport blowup_census(const SimSetup& setup, const SpectralField& y0,
                           const std::vector<double>& levels, std::size_t paths, int bins = 10);

// Empirical contraction factor E sup ||S u1 - S u2||_V^2 / E sup ||u1 - u2||_V^2
// for the constant trajectories u1 = y0, u2 = y0 + delta on [0, T*], with
// `steps` steps per horizon so every T* reuses the same standard normals.
struct ContractionRow {
  double T_star = 0.0;
  double factor = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};
std::vector<ContractionRow> contraction_study(const SimSetup& setup, const SpectralField& y0,
                                              const SpectralField& delta,
                                              const std::vector<double>& horizons, int steps,
                                              std::size_t paths);

// Iterates the fixed-point map from the constant trajectory y0 on path 0 and
// compares with the step-by-step (explicit) trajectory.
struct PicardResult {
  int iterations = 0;
  double last_change = 0.0;
  double residual = 0.0;  // sup_t ||u_k - y_step||_V
};
PicardResult picard_fixed_point(const SimSetup& setup, const SpectralField& y0, int max_iter,
                                double tol);

// Report emission: CSV rows (name,value,bound,margin,stderr) and JSON.
void write_report_csv(const EnsembleReport& r, const AuditResult& a, std::ostream& out);
std::string report_json(const EnsembleReport& r, const AuditResult& a, std::uint64_t seed);

}  // namespace thirdgrade
