#include "thirdgrade/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "thirdgrade/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace thirdgrade {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "1e999" : "-1e999";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double as_double(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Config effective_config(const EnsembleSpec& spec) {
  Config c = spec.config;
  c.run.seed = spec.seed;
  c.run.sample_stride = spec.sample_stride;
  return c;
}

json manifest_json(const EnsembleSpec& spec) {
  const Config c = effective_config(spec);
  return json{{"seed", spec.seed},
              {"n_paths", spec.n_paths},
              {"config_hash", config_hash(c)},
              {"stride", spec.sample_stride},
              {"config", to_config_text(c)}};
}

void write_text(const fs::path& file, const std::string& text) {
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

// Integrates the paths whose summaries are missing, in parallel.
std::size_t fill_paths(const EnsembleSpec& spec, std::vector<std::optional<PathSummary>>& slots) {
  const Config cfg = effective_config(spec);
  const SimSetup setup = make_setup(cfg);
  const SpectralField y0 = initial_field(cfg, setup.basis);
  const std::uint64_t hash = config_hash(cfg);

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (!slots[i]) todo.push_back(i);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    RunOptions opts;
    opts.sample_stride = spec.sample_stride;
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= todo.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const std::size_t i = todo[j];
      try {
        const TrajectoryRecord rec = run(setup, y0, i, opts);
        std::ostringstream text;
        write_trajectory_jsonl(rec, hash, text);
        write_text(path_file(spec.dir, i), text.str());
        slots[i] = summarize(rec);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(spec.workers, int(todo.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return todo.size();
}

EnsembleResult finish(const EnsembleSpec& spec, std::vector<std::optional<PathSummary>>& slots,
                      std::size_t computed) {
  const Config cfg = effective_config(spec);
  EnsembleResult res;
  res.computed = computed;
  for (auto& s : slots) res.paths.push_back(*s);
  const double L = cfg.noise.kind == NoiseKind::diagonal ? cfg.noise.L
                   : cfg.noise.kind == NoiseKind::linear_vmap ? 1.0
                                                               : 0.0;
  res.report = aggregate(res.paths, cfg.fluid, L, cfg.run.t_end, cfg.run.p_exponent);
  const bool decay = cfg.noise.kind == NoiseKind::off && cfg.forcing.empty();
  res.audit = energy_audit(res.report, decay);

  std::ostringstream csv;
  write_report_csv(res.report, res.audit, csv);
  write_text(spec.dir / "report.csv", csv.str());
  write_text(spec.dir / "report.json", report_json(res.report, res.audit, spec.seed) + "\n");
  return res;
}

std::vector<std::optional<PathSummary>> load_existing(const EnsembleSpec& spec) {
  std::vector<std::optional<PathSummary>> slots(spec.n_paths);
  for (std::size_t i = 0; i < spec.n_paths; ++i) slots[i] = read_path_summary(path_file(spec.dir, i));
  return slots;
}

void check_manifest(const EnsembleSpec& spec) {
  const fs::path file = spec.dir / "manifest.json";
  std::ifstream in(file);
  if (!in) throw ManifestCorrupt("no manifest in " + spec.dir.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw ManifestCorrupt("unreadable manifest: " + std::string(e.what()));
  }
  const json expect = manifest_json(spec);
  for (const char* key : {"seed", "n_paths", "config_hash"}) {
    if (!m.contains(key) || m[key] != expect[key])
      throw ManifestCorrupt(std::string("manifest ") + key + " mismatch (found " +
                            (m.contains(key) ? m[key].dump() : "nothing") + ", expected " +
                            expect[key].dump() + ")");
  }
}

}  // namespace

fs::path path_file(const fs::path& dir, std::size_t index) {
  return dir / ("path_" + std::to_string(index) + ".jsonl");
}

void write_trajectory_jsonl(const TrajectoryRecord& rec, std::uint64_t config_hash,
                            std::ostream& out) {
  out << "{\"seed\":" << rec.seed << ",\"path\":" << rec.path << ",\"config_hash\":" << config_hash
      << "}\n";
  for (const auto& s : rec.samples) {
    out << "{\"t\":" << num(s.t) << ",\"v_norm\":" << num(s.v_norm) << ",\"w_tilde\":"
        << num(s.w_tilde) << ",\"w24\":" << num(s.w24) << ",\"theta\":" << num(s.theta)
        << ",\"tau_M_hit\":" << (s.tau_M_hit ? "true" : "false")
        << ",\"energy_residual\":" << num(s.energy_residual)
        << ",\"frozen_v_norm\":" << num(s.frozen_v_norm) << "}\n";
  }
  const PathSummary p = summarize(rec);
  out << "{\"summary\":{\"seed\":" << rec.seed << ",\"path\":" << p.path
      << ",\"y0_v2\":" << num(p.y0_v2) << ",\"sup_v2\":" << num(p.sup_v2)
      << ",\"int_dy2\":" << num(p.int_dy2) << ",\"int_theta_a4\":" << num(p.int_theta_a4)
      << ",\"int_u2\":" << num(p.int_u2) << ",\"sup_w_tilde2\":" << num(p.sup_w_tilde2)
      << ",\"sup_w24\":" << num(p.sup_w24) << ",\"tau_M\":" << num(p.tau_M)
      << ",\"tau_M_hit\":" << (p.tau_M_hit ? "true" : "false")
      << ",\"tau_N\":[";
  for (std::size_t i = 0; i < rec.tau_N.size(); ++i)
    out << (i ? "," : "") << "{\"N\":" << num(rec.tau_N[i].level) << ",\"t\":"
        << num(rec.tau_N[i].time) << ",\"hit\":" << (rec.tau_N[i].hit ? "true" : "false") << "}";
  out << "],\"blowup\":" << (p.blowup ? "true" : "false")
      << ",\"blowup_step\":" << rec.blowup_step
      << ",\"terminal_hash\":" << p.terminal_hash << "}}\n";
}

std::optional<PathSummary> read_path_summary(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  json j;
  try {
    j = json::parse(last);
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (!j.contains("summary")) return std::nullopt;
  const json& s = j["summary"];
  PathSummary p;
  p.path = s["path"].get<std::uint64_t>();
  p.y0_v2 = as_double(s["y0_v2"]);
  p.sup_v2 = as_double(s["sup_v2"]);
  p.int_dy2 = as_double(s["int_dy2"]);
  p.int_theta_a4 = as_double(s["int_theta_a4"]);
  p.int_u2 = as_double(s["int_u2"]);
  p.sup_w_tilde2 = as_double(s["sup_w_tilde2"]);
  p.sup_w24 = as_double(s["sup_w24"]);
  p.tau_M = as_double(s["tau_M"]);
  p.tau_M_hit = s["tau_M_hit"].get<bool>();
  p.blowup = s["blowup"].get<bool>();
  p.terminal_hash = s["terminal_hash"].get<std::uint64_t>();
  return p;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
  if (spec.n_paths < 1) throw ConstraintViolation("n_paths must be >= 1");
  std::error_code ec;
  fs::create_directories(spec.dir, ec);
  if (ec) throw IoError("cannot create " + spec.dir.string() + ": " + ec.message());
  write_text(spec.dir / "manifest.json", manifest_json(spec).dump(2) + "\n");
  std::vector<std::optional<PathSummary>> slots(spec.n_paths);
  const std::size_t computed = fill_paths(spec, slots);
  return finish(spec, slots, computed);
}

EnsembleResult resume(const EnsembleSpec& spec) {
  check_manifest(spec);
  auto slots = load_existing(spec);
  const std::size_t computed = fill_paths(spec, slots);
  return finish(spec, slots, computed);
}

EnsembleResult reaggregate(const EnsembleSpec& spec) {
  check_manifest(spec);
  auto slots = load_existing(spec);
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (!slots[i]) throw ManifestCorrupt("path file " + std::to_string(i) + " missing or incomplete");
  return finish(spec, slots, 0);
}

}  // namespace thirdgrade
