#include "thirdgrade/params.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "thirdgrade/errors.hpp"

namespace thirdgrade {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view text, int line, std::string_view field) {
  const std::string s(trim(text));
  if (s.empty()) throw ParseError(std::string(field) + ": empty value", line, std::string(field));
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw ParseError(std::string(field) + ": not a number: '" + s + "'", line, std::string(field));
  return x;
}

long long parse_integer(std::string_view text, int line, std::string_view field) {
  const auto s = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(std::string(field) + ": not an integer: '" + std::string(s) + "'", line,
                     std::string(field));
  return value;
}

std::uint64_t parse_unsigned(std::string_view text, int line, std::string_view field) {
  const auto s = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(std::string(field) + ": not an unsigned integer: '" + std::string(s) + "'",
                     line, std::string(field));
  return value;
}

}  // namespace

void validate_params(const FluidParams& p) {
  if (!std::isfinite(p.nu) || !std::isfinite(p.alpha1) || !std::isfinite(p.alpha2) ||
      !std::isfinite(p.beta))
    throw ConstraintViolation("fluid parameters must be finite");
  if (p.nu < 0.0) throw ConstraintViolation("nu >= 0 violated (nu = " + fmt_double(p.nu) + ")");
  if (p.alpha1 <= 0.0)
    throw ConstraintViolation("alpha1 > 0 violated (alpha1 = " + fmt_double(p.alpha1) + ")");
  if (p.beta < 0.0)
    throw ConstraintViolation("beta >= 0 violated (beta = " + fmt_double(p.beta) + ")");
  const double lhs = std::abs(p.alpha1 + p.alpha2);
  const double rhs = std::sqrt(24.0 * p.nu * p.beta);
  if (lhs > rhs * (1.0 + 1e-12))
    throw ConstraintViolation("|alpha1 + alpha2| <= sqrt(24 nu beta) violated (" +
                              fmt_double(lhs) + " > " + fmt_double(rhs) + ")");
}

const std::vector<ConfigKeyDoc>& config_keys() {
  static const std::vector<ConfigKeyDoc> keys = {
      {"nu", "0.5", "viscosity (>= 0)"},
      {"alpha1", "1", "first normal-stress modulus (> 0)"},
      {"alpha2", "-alpha1", "second normal-stress modulus"},
      {"beta", "0.5", "third-grade modulus (>= 0); |alpha1+alpha2| <= sqrt(24 nu beta)"},
      {"cutoff_M", "10", "cut-off threshold M on the W^{2,4} norm (> 0)"},
      {"n_modes", "8", "Galerkin truncation per dimension (>= 1)"},
      {"dt", "0.001", "time step (> 0)"},
      {"t_end", "1", "time horizon T (> 0)"},
      {"seed", "0", "64-bit seed of the Wiener increments"},
      {"noise_kind", "diagonal", "off | diagonal | linear_vmap | additive"},
      {"noise_L", "0.1", "Lipschitz constant L of the diagonal noise (>= 0)"},
      {"noise_K", "16", "number of Brownian motions kept in the Wiener sum (>= 0)"},
      {"noise_g", "identity", "profile of the diagonal noise: identity | bounded"},
      {"noise_additive", "", "additive noise fields as 'mode:amplitude, ...'"},
      {"p_exponent", "6", "moment exponent p (> 4)"},
      {"domain", "torus", "torus | channel"},
      {"dealias_factor", "2", "zero-padding factor for cubic products (>= 1)"},
      {"quadrature_oversample", "4", "quadrature grid oversampling for quartic integrands (>= 1)"},
      {"sample_stride", "10", "steps between trajectory records (>= 1)"},
      {"scheme", "semi_implicit", "semi_implicit | explicit"},
      {"initial_modes", "", "initial V-coefficients as 'mode:amplitude, ...'"},
      {"initial_amplitude", "0.5", "V-norm of the random initial field (used when initial_modes is empty)"},
      {"initial_seed", "1", "seed of the random initial field"},
      {"forcing_modes", "", "constant forcing U as 'mode:amplitude, ...' (V-coefficients)"},
      {"output_path", "trajectory.jsonl", "trajectory output file"},
  };
  return keys;
}

std::string to_string(DomainKind kind) {
  return kind == DomainKind::torus ? "torus" : "channel";
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::off: return "off";
    case NoiseKind::diagonal: return "diagonal";
    case NoiseKind::linear_vmap: return "linear_vmap";
    case NoiseKind::additive: return "additive";
  }
  return "off";
}

std::string to_string(NoiseProfile profile) {
  return profile == NoiseProfile::identity ? "identity" : "bounded";
}

std::string to_string(TimeScheme scheme) {
  return scheme == TimeScheme::semi_implicit ? "semi_implicit" : "explicit";
}

std::string format_mode_table(const std::vector<ModeAmplitude>& table) {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(table[i].mode) + ":" + fmt_double(table[i].amplitude);
  }
  return out;
}

std::vector<ModeAmplitude> parse_mode_table(std::string_view text, int line,
                                            std::string_view field) {
  std::vector<ModeAmplitude> table;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto entry = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    if (colon == std::string_view::npos)
      throw ParseError(std::string(field) + ": expected 'mode:amplitude', got '" +
                           std::string(entry) + "'",
                       line, std::string(field));
    ModeAmplitude ma;
    const long long mode = parse_integer(entry.substr(0, colon), line, field);
    if (mode < 0) throw ParseError(std::string(field) + ": mode index must be >= 0", line,
                                   std::string(field));
    ma.mode = static_cast<int>(mode);
    ma.amplitude = parse_double(entry.substr(colon + 1), line, field);
    if (!std::isfinite(ma.amplitude))
      throw ParseError(std::string(field) + ": amplitude must be finite", line, std::string(field));
    table.push_back(ma);
  }
  return table;
}

void apply_assignment(Config& cfg, std::string_view key_in, std::string_view value,
                      int line) {
  const std::string key(trim(key_in));
  value = trim(value);
  auto num = [&] { return parse_double(value, line, key); };
  auto integer = [&] {
    const long long v = parse_integer(value, line, key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      throw ParseError(key + ": out of range", line, key);
    return static_cast<int>(v);
  };

  if (key == "nu") {
    cfg.fluid.nu = num();
  } else if (key == "alpha1") {
    cfg.fluid.alpha1 = num();
  } else if (key == "alpha2") {
    cfg.fluid.alpha2 = num();
  } else if (key == "beta") {
    cfg.fluid.beta = num();
  } else if (key == "cutoff_M") {
    cfg.cutoff.M = num();
  } else if (key == "n_modes") {
    cfg.run.n_modes = integer();
  } else if (key == "dt") {
    cfg.run.dt = num();
  } else if (key == "t_end") {
    cfg.run.t_end = num();
  } else if (key == "seed") {
    cfg.run.seed = parse_unsigned(value, line, key);
  } else if (key == "noise_kind") {
    if (value == "off") cfg.noise.kind = NoiseKind::off;
    else if (value == "diagonal" || value == "diagonal_lipschitz") cfg.noise.kind = NoiseKind::diagonal;
    else if (value == "linear_vmap") cfg.noise.kind = NoiseKind::linear_vmap;
    else if (value == "additive") cfg.noise.kind = NoiseKind::additive;
    else throw ParseError("noise_kind: unknown value '" + std::string(value) + "'", line, key);
  } else if (key == "noise_L") {
    cfg.noise.L = num();
  } else if (key == "noise_K") {
    cfg.noise.K = integer();
  } else if (key == "noise_g") {
    if (value == "identity") cfg.noise.profile = NoiseProfile::identity;
    else if (value == "bounded") cfg.noise.profile = NoiseProfile::bounded;
    else throw ParseError("noise_g: unknown value '" + std::string(value) + "'", line, key);
  } else if (key == "noise_additive") {
    cfg.noise.additive = parse_mode_table(value, line, key);
  } else if (key == "p_exponent") {
    cfg.run.p_exponent = num();
  } else if (key == "domain") {
    if (value == "torus") cfg.run.domain = DomainKind::torus;
    else if (value == "channel") cfg.run.domain = DomainKind::channel;
    else throw ParseError("domain: unknown value '" + std::string(value) + "'", line, key);
  } else if (key == "dealias_factor") {
    cfg.run.dealias_factor = integer();
  } else if (key == "quadrature_oversample") {
    cfg.run.quadrature_oversample = integer();
  } else if (key == "sample_stride") {
    cfg.run.sample_stride = integer();
  } else if (key == "scheme") {
    if (value == "semi_implicit") cfg.run.scheme = TimeScheme::semi_implicit;
    else if (value == "explicit") cfg.run.scheme = TimeScheme::explicit_euler;
    else throw ParseError("scheme: unknown value '" + std::string(value) + "'", line, key);
  } else if (key == "initial_modes") {
    cfg.initial.modes = parse_mode_table(value, line, key);
  } else if (key == "initial_amplitude") {
    cfg.initial.amplitude = num();
  } else if (key == "initial_seed") {
    cfg.initial.seed = parse_unsigned(value, line, key);
  } else if (key == "forcing_modes") {
    cfg.forcing = parse_mode_table(value, line, key);
  } else if (key == "output_path") {
    cfg.output_path = std::string(value);
  } else {
    throw ParseError("unknown key '" + key + "'", line, key);
  }
}

void validate_config(const Config& cfg) {
  const auto& r = cfg.run;
  if (!(r.dt > 0.0) || !std::isfinite(r.dt)) throw ParseError("dt must be > 0", 0, "dt");
  if (!(r.t_end > 0.0) || !std::isfinite(r.t_end))
    throw ParseError("t_end must be > 0", 0, "t_end");
  if (r.n_modes < 1) throw ParseError("n_modes must be >= 1", 0, "n_modes");
  if (!(r.p_exponent > 4.0)) throw ParseError("p must exceed 4", 0, "p_exponent");
  if (r.dealias_factor < 1) throw ParseError("dealias_factor must be >= 1", 0, "dealias_factor");
  if (r.quadrature_oversample < 1)
    throw ParseError("quadrature_oversample must be >= 1", 0, "quadrature_oversample");
  if (r.sample_stride < 1) throw ParseError("sample_stride must be >= 1", 0, "sample_stride");
  if (!(cfg.cutoff.M > 0.0) || !std::isfinite(cfg.cutoff.M))
    throw ParseError("cutoff_M must be > 0 and finite", 0, "cutoff_M");
  if (!(cfg.noise.L >= 0.0) || !std::isfinite(cfg.noise.L))
    throw ParseError("noise_L must be >= 0", 0, "noise_L");
  if (cfg.noise.K < 0) throw ParseError("noise_K must be >= 0", 0, "noise_K");
  if (!(cfg.initial.amplitude >= 0.0) || !std::isfinite(cfg.initial.amplitude))
    throw ParseError("initial_amplitude must be >= 0", 0, "initial_amplitude");
  validate_params(cfg.fluid);
}

Config parse_config(std::string_view text) { return parse_config(text, {}); }

Config parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides) {
  Config cfg;
  bool alpha2_given = false;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    if (key == "alpha2") alpha2_given = true;
    apply_assignment(cfg, key, line.substr(eq + 1), line_no);
  }
  for (const auto& [key, value] : overrides) {
    if (key == "alpha2") alpha2_given = true;
    apply_assignment(cfg, key, value, 0);
  }
  if (!alpha2_given) cfg.fluid.alpha2 = -cfg.fluid.alpha1;
  validate_config(cfg);
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const Config& cfg) {
  std::ostringstream out;
  auto put = [&](const char* key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  put("nu", fmt_double(cfg.fluid.nu));
  put("alpha1", fmt_double(cfg.fluid.alpha1));
  put("alpha2", fmt_double(cfg.fluid.alpha2));
  put("beta", fmt_double(cfg.fluid.beta));
  put("cutoff_M", fmt_double(cfg.cutoff.M));
  put("n_modes", std::to_string(cfg.run.n_modes));
  put("dt", fmt_double(cfg.run.dt));
  put("t_end", fmt_double(cfg.run.t_end));
  put("seed", std::to_string(cfg.run.seed));
  put("noise_kind", to_string(cfg.noise.kind));
  put("noise_L", fmt_double(cfg.noise.L));
  put("noise_K", std::to_string(cfg.noise.K));
  put("noise_g", to_string(cfg.noise.profile));
  put("noise_additive", format_mode_table(cfg.noise.additive));
  put("p_exponent", fmt_double(cfg.run.p_exponent));
  put("domain", to_string(cfg.run.domain));
  put("dealias_factor", std::to_string(cfg.run.dealias_factor));
  put("quadrature_oversample", std::to_string(cfg.run.quadrature_oversample));
  put("sample_stride", std::to_string(cfg.run.sample_stride));
  put("scheme", to_string(cfg.run.scheme));
  put("initial_modes", format_mode_table(cfg.initial.modes));
  put("initial_amplitude", fmt_double(cfg.initial.amplitude));
  put("initial_seed", std::to_string(cfg.initial.seed));
  put("forcing_modes", format_mode_table(cfg.forcing));
  put("output_path", cfg.output_path);
  return out.str();
}

std::uint64_t config_hash(const Config& cfg) {
  Config c = cfg;
  c.run.seed = 0;
  c.output_path.clear();
  const std::string text = to_config_text(c);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace thirdgrade
