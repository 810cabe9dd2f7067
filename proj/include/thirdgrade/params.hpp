#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace thirdgrade {

// Material moduli of the third-grade fluid, all nondimensional.
struct FluidParams {
  double nu = 0.5;       // viscosity, >= 0
  double alpha1 = 1.0;   // first normal-stress modulus, > 0
  double alpha2 = -1.0;  // second normal-stress modulus
  double beta = 0.5;     // third-grade modulus, >= 0

  bool operator==(const FluidParams&) const = default;
};

// Throws ConstraintViolation naming the first violated inequality among
// nu >= 0, alpha1 > 0, beta >= 0 and |alpha1 + alpha2| <= sqrt(24 nu beta).
// The last one is checked with a relative tolerance of 1e-12 so that the
// boundary case is accepted.
void validate_params(const FluidParams& p);

// Threshold M on the W^{2,4} norm at which the cut-off starts to act.
struct CutoffConfig {
  double M = 10.0;

  bool operator==(const CutoffConfig&) const = default;
};

enum class DomainKind { torus, channel };

enum class TimeScheme { semi_implicit, explicit_euler };

struct RunConfig {
  int n_modes = 8;
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  double p_exponent = 6.0;  // moment exponent, diagnostic only
  DomainKind domain = DomainKind::torus;
  int dealias_factor = 2;
  int quadrature_oversample = 4;
  int sample_stride = 10;
  TimeScheme scheme = TimeScheme::semi_implicit;

  bool operator==(const RunConfig&) const = default;
};

enum class NoiseKind { off, diagonal, linear_vmap, additive };

// Pointwise profile g of the diagonal family sigma_k(t, lambda) = a_k g(lambda).
enum class NoiseProfile { identity, bounded };

// One entry of a mode/amplitude table; `mode` is a basis enumeration index.
struct ModeAmplitude {
  int mode = 0;
  double amplitude = 0.0;

  bool operator==(const ModeAmplitude&) const = default;
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::diagonal;
  double L = 0.1;  // Lipschitz constant of the diagonal family
  int K = 16;      // truncation of the Wiener sum
  NoiseProfile profile = NoiseProfile::identity;
  std::vector<ModeAmplitude> additive;  // sigma_k = amplitude_k * e_{mode_k}

  bool operator==(const NoiseSpec&) const = default;
};

// Initial datum: an explicit V-coefficient table, or (when the table is
// empty) a random smooth field with V-norm `amplitude`.
struct InitialSpec {
  std::vector<ModeAmplitude> modes;
  double amplitude = 0.5;
  std::uint64_t seed = 1;

  bool operator==(const InitialSpec&) const = default;
};

struct Config {
  FluidParams fluid;
  CutoffConfig cutoff;
  RunConfig run;
  NoiseSpec noise;
  InitialSpec initial;
  std::vector<ModeAmplitude> forcing;  // constant-in-time U, V-coefficients
  std::string output_path = "trajectory.jsonl";

  bool operator==(const Config&) const = default;
};

struct ConfigKeyDoc {
  std::string key;
  std::string default_value;
  std::string description;
};

// Every recognised key with its default, in file order.
const std::vector<ConfigKeyDoc>& config_keys();

// Applies one `key = value` assignment. `line` is used for error messages
// (0 for command-line overrides). Throws ParseError.
void apply_assignment(Config& cfg, std::string_view key, std::string_view value,
                      int line = 0);

// Parses a flat key-value document: one `key = value` per line, `#` starts a
// comment, blank lines ignored. The result is validated.
Config parse_config(std::string_view text);

// Same, with `key = value` overrides applied after the document (a flag
// wins over the file). alpha2 falls back to -alpha1 only when neither sets it.
using ConfigOverride = std::pair<std::string, std::string>;
Config parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides);
Config load_config(const std::filesystem::path& path);

// Run-level invariants raise ParseError; fluid invariants raise
// ConstraintViolation.
void validate_config(const Config& cfg);

// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const Config& cfg);

// FNV-1a hash of the canonical text with `seed` and `output_path` removed.
std::uint64_t config_hash(const Config& cfg);

std::string to_string(DomainKind kind);
std::string to_string(NoiseKind kind);
std::string to_string(NoiseProfile profile);
std::string to_string(TimeScheme scheme);

std::string format_mode_table(const std::vector<ModeAmplitude>& table);
std::vector<ModeAmplitude> parse_mode_table(std::string_view text, int line = 0,
                                            std::string_view field = {});

}  // namespace thirdgrade
