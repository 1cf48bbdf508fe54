#pragma once

// Declarative experiment runner: JSON config in, CSV reports out.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <cstring>
#include <thread>
#include <vector>

#include "flowsmooth/core.hpp"
#include "flowsmooth/diagnostics.hpp"
#include "flowsmooth/fields.hpp"
#include "flowsmooth/rng.hpp"
#include "flowsmooth/samplers.hpp"
#include "flowsmooth/schedules.hpp"
#include "json.hpp"

namespace flowsmooth {

// ---------------------------------------------------------------------------
// Config types
// ---------------------------------------------------------------------------

class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& message, std::optional<int> line)
      : InvalidArgument(line ? "line " + std::to_string(*line) + ": " + message : message), line_(line) {}

  std::optional<int> line() const noexcept { return line_; }

 private:
  std::optional<int> line_;
};

struct GridSpec {
  std::size_t n_steps = 25;
  bool sigma_shift = false;
  double shift = 3.0;

  TimeGrid build() const {
    return sigma_shift ? make_time_grid(n_steps, SigmaShiftSchedule{shift}) : make_time_grid(n_steps);
  }
};

struct SamplerEntry {
  std::string name;
  SamplerConfig config;
};

struct ExperimentConfig {
  VelocityFieldSpec field{GaussianRfField{}, std::nullopt};
  GridSpec grid;
  SnrSchedule snr = SnrSchedule::rectified_flow();
  std::vector<SamplerEntry> samplers;
  std::size_t ensemble_size = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "flowsmooth_out";
  std::optional<std::vector<double>> z_init;
  bool dump_trajectories = false;
};

namespace detail {

// Maps JSON pointers ("/samplers/1/gamma_interp") to the 1-based source line
// where the value starts. Assumes `text` already parsed as valid JSON.
class JsonLineIndex {
 public:
  explicit JsonLineIndex(const std::string& text) : text_(text) {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

  std::optional<int> line_of(const std::string& pointer) const {
    // Fall back to the closest enclosing value.
    std::string p = pointer;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      if (p.empty()) return std::nullopt;
      p.erase(p.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out.push_back(text_[pos_++]);
    }
    ++pos_;  // closing quote
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out.push_back(c);
    }
    return out;
  }

  void value(const std::string& path) {
    skip_ws();
    lines_[path] = line_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      while (true) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] == '}') break;
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        value(path + "/" + escape(key));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      for (std::size_t i = 0;; ++i) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] == ']') break;
        value(path + "/" + std::to_string(i));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && !std::strchr(",]} \t\r\n", text_[pos_])) ++pos_;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

// Cursor over the parsed document that reports errors with source lines.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& node, std::string pointer, const JsonLineIndex& index)
      : node_(node), pointer_(std::move(pointer)), index_(index) {}

  [[noreturn]] void fail(const std::string& message) const {
    const std::string where = pointer_.empty() ? "config" : pointer_;
    throw ConfigError(where + ": " + message, index_.line_of(pointer_));
  }

  const nlohmann::json& node() const { return node_; }
  const std::string& pointer() const { return pointer_; }

  ConfigReader child(const std::string& key) const {
    return ConfigReader(node_.at(key), pointer_ + "/" + key, index_);
  }
  ConfigReader element(std::size_t i) const {
    return ConfigReader(node_.at(i), pointer_ + "/" + std::to_string(i), index_);
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  void require_object(const std::set<std::string>& allowed) const {
    if (!node_.is_object()) fail("expected an object");
    for (const auto& [key, _] : node_.items()) {
      if (!allowed.count(key)) {
        ConfigReader(node_.at(key), pointer_ + "/" + key, index_).fail("unknown key \"" + key + "\"");
      }
    }
  }

  double number() const {
    if (!node_.is_number()) fail("expected a number");
    return node_.get<double>();
  }

  std::uint64_t unsigned_integer() const {
    if (!node_.is_number_unsigned()) fail("expected a non-negative integer");
    return node_.get<std::uint64_t>();
  }

  std::string string() const {
    if (!node_.is_string()) fail("expected a string");
    return node_.get<std::string>();
  }

  bool boolean() const {
    if (!node_.is_boolean()) fail("expected true or false");
    return node_.get<bool>();
  }

  std::vector<double> number_array() const {
    if (!node_.is_array()) fail("expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node_.size(); ++i) out.push_back(element(i).number());
    return out;
  }

  double number_or(const std::string& key, double fallback) const { return has(key) ? child(key).number() : fallback; }

 private:
  const nlohmann::json& node_;
  std::string pointer_;
  const JsonLineIndex& index_;
};

inline VelocityFieldSpec parse_field(const ConfigReader& r) {
  if (!r.node().is_object()) r.fail("expected an object");
  if (!r.has("name")) r.fail("missing \"name\"");
  const std::string name = r.child("name").string();
  VelocityFieldSpec spec{GaussianRfField{}, std::nullopt};
  if (name == "gaussian_rf") {
    r.require_object({"name", "s0", "dim", "conditioning"});
    GaussianRfField f;
    f.s0 = r.number_or("s0", 1.0);
    if (!(f.s0 > 0.0)) r.child("s0").fail("s0 must be > 0");
    f.dim = r.has("dim") ? r.child("dim").unsigned_integer() : 1;
    if (f.dim == 0) r.child("dim").fail("dim must be >= 1");
    spec.field = f;
  } else if (name == "linear_matrix") {
    r.require_object({"name", "matrix", "conditioning"});
    if (!r.has("matrix")) r.fail("missing \"matrix\"");
    const ConfigReader m = r.child("matrix");
    if (!m.node().is_array() || m.node().empty()) m.fail("expected a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < m.node().size(); ++i) {
      rows.push_back(m.element(i).number_array());
      if (rows.back().size() != m.node().size()) m.element(i).fail("matrix must be square");
    }
    spec.field = LinearMatrixField{SquareMatrix::from_rows(rows)};
  } else if (name == "stiff_tracking") {
    r.require_object({"name", "stiffness", "dim", "conditioning"});
    StiffTrackingField f;
    f.stiffness = r.number_or("stiffness", 50.0);
    if (!(f.stiffness > 0.0)) r.child("stiffness").fail("stiffness must be > 0");
    f.dim = r.has("dim") ? r.child("dim").unsigned_integer() : 2;
    if (f.dim == 0) r.child("dim").fail("dim must be >= 1");
    spec.field = f;
  } else {
    r.child("name").fail("unknown field \"" + name + "\" (expected gaussian_rf, linear_matrix or stiff_tracking)");
  }
  if (r.has("conditioning")) spec.conditioning = r.child("conditioning").string();
  return spec;
}

inline GridSpec parse_grid(const ConfigReader& r) {
  r.require_object({"n_steps", "kind", "shift"});
  GridSpec g;
  if (!r.has("n_steps")) r.fail("missing \"n_steps\"");
  g.n_steps = r.child("n_steps").unsigned_integer();
  if (g.n_steps == 0) r.child("n_steps").fail("n_steps must be >= 1");
  const std::string kind = r.has("kind") ? r.child("kind").string() : "uniform";
  if (kind == "sigma_shift") {
    g.sigma_shift = true;
    g.shift = r.number_or("shift", 3.0);
    if (!(g.shift > 0.0)) r.child("shift").fail("shift must be > 0");
  } else if (kind != "uniform") {
    r.child("kind").fail("unknown grid kind \"" + kind + "\" (expected uniform or sigma_shift)");
  } else if (r.has("shift")) {
    r.child("shift").fail("shift only applies to sigma_shift grids");
  }
  return g;
}

inline SnrSchedule parse_snr(const ConfigReader& r) {
  r.require_object({"kind", "alpha_bar"});
  const std::string kind = r.has("kind") ? r.child("kind").string() : "rectified_flow";
  if (kind == "rectified_flow") {
    if (r.has("alpha_bar")) r.child("alpha_bar").fail("alpha_bar only applies to diffusion schedules");
    return SnrSchedule::rectified_flow();
  }
  if (kind != "diffusion") r.child("kind").fail("unknown schedule \"" + kind + "\"");
  if (!r.has("alpha_bar")) r.fail("diffusion schedules need \"alpha_bar\" as [[t, alpha_bar], ...]");
  const ConfigReader table = r.child("alpha_bar");
  if (!table.node().is_array()) table.fail("expected an array of [t, alpha_bar] pairs");
  std::vector<std::pair<double, double>> knots;
  for (std::size_t i = 0; i < table.node().size(); ++i) {
    const auto pair = table.element(i).number_array();
    if (pair.size() != 2) table.element(i).fail("expected [t, alpha_bar]");
    knots.emplace_back(pair[0], pair[1]);
  }
  try {
    return SnrSchedule::diffusion(std::move(knots));
  } catch (const InvalidArgument& e) {
    table.fail(e.what());
  }
}

inline SamplerEntry parse_sampler(const ConfigReader& r) {
  r.require_object({"name", "algorithm", "tau_curv", "gamma_interp", "lambda_blend", "gamma_max", "beta_steepness",
                    "xi_star", "beta1", "epsilon", "peek_mode", "decay_sign"});
  if (!r.has("algorithm")) r.fail("missing \"algorithm\"");
  SamplerEntry e;
  const std::string algo = r.child("algorithm").string();
  if (algo == "euler") e.config.algorithm = Algorithm::euler;
  else if (algo == "look_ahead") e.config.algorithm = Algorithm::look_ahead;
  else if (algo == "look_back") e.config.algorithm = Algorithm::look_back;
  else if (algo == "momentum") e.config.algorithm = Algorithm::momentum;
  else r.child("algorithm").fail("unknown algorithm \"" + algo + "\"");

  e.name = r.has("name") ? r.child("name").string() : algo;
  if (e.name.empty() || e.name.find_first_of("/\\,\"\n\r") != std::string::npos) {
    (r.has("name") ? r.child("name") : r).fail("sampler name must be non-empty and free of / \\ , \" or newlines");
  }

  SamplerConfig& c = e.config;
  if (r.has("tau_curv")) {
    const ConfigReader tau = r.child("tau_curv");
    if (tau.node().is_string()) {
      if (tau.string() != "inf") tau.fail("tau_curv must be a positive number or \"inf\"");
      c.tau_curv = kInfiniteThreshold;
    } else {
      c.tau_curv = tau.number();
    }
  }
  c.gamma_interp = r.number_or("gamma_interp", c.gamma_interp);
  c.lambda_blend = r.number_or("lambda_blend", c.lambda_blend);
  c.gamma_max = r.number_or("gamma_max", c.gamma_max);
  c.beta_steepness = r.number_or("beta_steepness", c.beta_steepness);
  c.xi_star = r.number_or("xi_star", c.xi_star);
  c.beta1 = r.number_or("beta1", c.beta1);
  c.epsilon = r.number_or("epsilon", c.epsilon);
  if (r.has("peek_mode")) {
    const std::string mode = r.child("peek_mode").string();
    if (mode == "finite_difference") c.peek_mode = PeekMode::finite_difference;
    else if (mode == "model_eval") c.peek_mode = PeekMode::model_eval;
    else r.child("peek_mode").fail("peek_mode must be finite_difference or model_eval");
  }
  if (r.has("decay_sign")) {
    const std::string sign = r.child("decay_sign").string();
    if (sign == "prose") c.decay_sign = DecaySign::prose;
    else if (sign == "printed") c.decay_sign = DecaySign::printed;
    else r.child("decay_sign").fail("decay_sign must be prose or printed");
  }
  try {
    c.validate();
  } catch (const InvalidArgument& err) {
    // Point at the offending key when the message names one.
    const std::string msg = err.what();
    for (const auto& [key, _] : r.node().items()) {
      if (msg.rfind(key, 0) == 0) r.child(key).fail(msg);
    }
    r.fail(msg);
  }
  return e;
}

}  // namespace detail

// Parses and validates a JSON experiment config. Errors carry the source line.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports "... at line L, column C: ..."
    std::optional<int> line;
    const std::string msg = e.what();
    if (auto p = msg.find("at line "); p != std::string::npos) line = std::atoi(msg.c_str() + p + 8);
    throw ConfigError("malformed JSON: " + msg, line);
  }

  const detail::JsonLineIndex index(text);
  const detail::ConfigReader root(doc, "", index);
  root.require_object({"field", "grid", "snr", "samplers", "ensemble_size", "seed", "output_dir", "z_init",
                       "dump_trajectories"});

  ExperimentConfig cfg;
  if (!root.has("field")) root.fail("missing \"field\"");
  cfg.field = detail::parse_field(root.child("field"));
  if (!root.has("grid")) root.fail("missing \"grid\"");
  cfg.grid = detail::parse_grid(root.child("grid"));
  if (root.has("snr")) cfg.snr = detail::parse_snr(root.child("snr"));

  if (!root.has("samplers")) root.fail("missing \"samplers\"");
  const detail::ConfigReader list = root.child("samplers");
  if (!list.node().is_array() || list.node().empty()) list.fail("expected a non-empty array of samplers");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list.node().size(); ++i) {
    SamplerEntry e = detail::parse_sampler(list.element(i));
    if (!names.insert(e.name).second) list.element(i).fail("duplicate sampler name \"" + e.name + "\"");
    cfg.samplers.push_back(std::move(e));
  }

  if (root.has("ensemble_size")) {
    cfg.ensemble_size = root.child("ensemble_size").unsigned_integer();
    if (cfg.ensemble_size == 0) root.child("ensemble_size").fail("ensemble_size must be >= 1");
  }
  if (root.has("seed")) cfg.seed = root.child("seed").unsigned_integer();
  if (root.has("output_dir")) cfg.output_dir = root.child("output_dir").string();
  if (root.has("z_init")) {
    cfg.z_init = root.child("z_init").number_array();
    if (cfg.z_init->size() != cfg.field.dim()) {
      root.child("z_init").fail("z_init has " + std::to_string(cfg.z_init->size()) + " coordinates, field dimension is " +
                                std::to_string(cfg.field.dim()));
    }
  }
  if (root.has("dump_trajectories")) cfg.dump_trajectories = root.child("dump_trajectories").boolean();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string(), std::nullopt);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct MemberOutcome {
  std::optional<TrajectoryReport> report;  // empty on numeric failure
  std::optional<Trajectory> trajectory;    // kept only when dumping
  std::string failure;
  std::size_t rejected_steps = 0;
};

struct SamplerSummary {
  std::string name;
  SamplerConfig config;
  std::vector<MemberOutcome> members;
  double wall_seconds = 0.0;

  std::size_t completed() const {
    return static_cast<std::size_t>(
        std::count_if(members.begin(), members.end(), [](const MemberOutcome& m) { return m.report.has_value(); }));
  }
};

struct ExperimentResult {
  std::size_t n_steps = 0;
  std::size_t ensemble_size = 0;
  std::vector<SamplerSummary> samplers;

  bool all_failed() const {
    return std::all_of(samplers.begin(), samplers.end(), [](const SamplerSummary& s) { return s.completed() == 0; });
  }
};

// Worker count: FLOWSMOOTH_THREADS when set to a positive integer, otherwise
// the hardware concurrency.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLOWSMOOTH_THREADS")) {
    const long requested = std::strtol(env, nullptr, 10);
    if (requested > 0) n = static_cast<std::size_t>(requested);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs every sampler over every ensemble member. Member i draws its initial
// latent from RNG stream i, so results do not depend on the sampler list or
// on thread scheduling.
inline ExperimentResult execute_experiment(const ExperimentConfig& cfg) {
  const TimeGrid grid = cfg.grid.build();
  const std::size_t dim = cfg.field.dim();
  const std::size_t members = cfg.ensemble_size;

  std::vector<StateVector> inits;
  std::vector<std::optional<StateVector>> oracles;
  inits.reserve(members);
  for (std::size_t i = 0; i < members; ++i) {
    inits.push_back(cfg.z_init ? StateVector(*cfg.z_init) : sample_standard_normal(cfg.seed, i, dim));
  }
  oracles.resize(members);

  ExperimentResult result;
  result.n_steps = grid.num_steps();
  result.ensemble_size = members;
  for (const auto& entry : cfg.samplers) {
    result.samplers.push_back(SamplerSummary{entry.name, entry.config, std::vector<MemberOutcome>(members), 0.0});
  }

  auto parallel_for = [&](std::size_t jobs, auto&& fn) {
    const std::size_t workers = worker_count(jobs);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < jobs; i = next++) fn(i);
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  };

  // Reference endpoints are shared by all samplers; identical z_init members
  // share a single computation.
  if (cfg.z_init) {
    try {
      const StateVector ref = reference_endpoint(cfg.field, inits.front());
      std::fill(oracles.begin(), oracles.end(), ref);
    } catch (const NumericFailure&) {
    }
  } else {
    parallel_for(members, [&](std::size_t i) {
      try {
        oracles[i] = reference_endpoint(cfg.field, inits[i]);
      } catch (const NumericFailure&) {
      }
    });
  }

  for (std::size_t s = 0; s < cfg.samplers.size(); ++s) {
    SamplerSummary& summary = result.samplers[s];
    const auto start = std::chrono::steady_clock::now();
    parallel_for(members, [&](std::size_t i) {
      MemberOutcome& out = summary.members[i];
      try {
        Trajectory traj = run_sampler(summary.config, cfg.field, cfg.snr, grid, inits[i]);
        out.report = make_report(traj, oracles[i]);
        out.rejected_steps = static_cast<std::size_t>(std::count_if(
            traj.steps.begin(), traj.steps.end(),
            [](const StepRecord& r) { return r.accepted_full_step.has_value() && !*r.accepted_full_step; }));
        if (cfg.dump_trajectories) out.trajectory = std::move(traj);
      } catch (const NumericFailure& e) {
        out.failure = e.what();
      }
    });
    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace csv {

// 17 significant digits; round-trips every double.
inline std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// RFC 4180 quoting.
inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

inline std::string optional_number(const std::optional<double>& x) { return x ? number(*x) : std::string(); }

}  // namespace csv

inline constexpr const char* kSummaryHeader =
    "sampler,algorithm,peek_mode,n_steps,ensemble_size,completed,status,endpoint_error_mean,endpoint_error_std,"
    "oscillation_energy_mean,path_length_mean,kappa_min,kappa_max,kappa_mean,rejected_steps,total_calls,failure";

inline void write_summary_csv(const ExperimentResult& result, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const auto& s : result.samplers) {
    std::vector<double> errors;
    double energy_sum = 0.0;
    double length_sum = 0.0;
    std::optional<KappaStats> kappa;
    double kappa_mean_sum = 0.0;
    std::size_t kappa_members = 0;
    std::size_t rejected = 0;
    std::uint64_t calls = 0;
    std::string first_failure;

    for (const auto& m : s.members) {
      if (!m.report) {
        if (first_failure.empty()) first_failure = m.failure;
        continue;
      }
      const TrajectoryReport& r = *m.report;
      if (r.endpoint_error) errors.push_back(*r.endpoint_error);
      energy_sum += r.oscillation_energy;
      length_sum += r.path_length;
      calls += r.total_model_calls;
      rejected += m.rejected_steps;
      if (r.kappa_stats) {
        if (!kappa) {
          kappa = *r.kappa_stats;
        } else {
          kappa->min = std::min(kappa->min, r.kappa_stats->min);
          kappa->max = std::max(kappa->max, r.kappa_stats->max);
        }
        kappa_mean_sum += r.kappa_stats->mean;
        ++kappa_members;
      }
    }

    const std::size_t completed = s.completed();
    std::optional<double> err_mean, err_std, energy_mean, length_mean;
    if (!errors.empty()) {
      double sum = 0.0;
      for (double e : errors) sum += e;
      err_mean = sum / static_cast<double>(errors.size());
      if (errors.size() >= 2) {
        double ss = 0.0;
        for (double e : errors) ss += (e - *err_mean) * (e - *err_mean);
        err_std = std::sqrt(ss / static_cast<double>(errors.size() - 1));
      }
    }
    if (completed > 0) {
      energy_mean = energy_sum / static_cast<double>(completed);
      length_mean = length_sum / static_cast<double>(completed);
    }
    if (kappa) kappa->mean = kappa_mean_sum / static_cast<double>(kappa_members);

    const bool is_look_ahead = s.config.algorithm == Algorithm::look_ahead;
    out << csv::field(s.name) << ',' << to_string(s.config.algorithm) << ','
        << (is_look_ahead ? to_string(s.config.peek_mode) : "") << ',' << result.n_steps << ','
        << result.ensemble_size << ',' << completed << ',' << (first_failure.empty() ? "ok" : "numeric_failure")
        << ',' << csv::optional_number(err_mean) << ',' << csv::optional_number(err_std) << ','
        << csv::optional_number(energy_mean) << ',' << csv::optional_number(length_mean) << ','
        << (kappa ? csv::number(kappa->min) : "") << ',' << (kappa ? csv::number(kappa->max) : "") << ','
        << (kappa ? csv::number(kappa->mean) : "") << ',' << (is_look_ahead ? std::to_string(rejected) : "")
        << ',' << calls << ',' << csv::field(first_failure) << '\n';
  }
}

inline void write_timing_csv(const ExperimentResult& result, std::ostream& out) {
  out << "sampler,wall_seconds\n";
  for (const auto& s : result.samplers) out << csv::field(s.name) << ',' << csv::number(s.wall_seconds) << '\n';
}

// Row k holds z_k and t_k; rows k >= 1 also carry the record of the step that
// produced z_k.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const std::size_t dim = traj.states.front().dim();
  out << "k,t";
  for (std::size_t i = 0; i < dim; ++i) out << ",z" << i;
  out << ",kappa,accepted,gamma_t,calls\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k << ',' << csv::number(traj.times[k]);
    for (std::size_t i = 0; i < dim; ++i) out << ',' << csv::number(traj.states[k][i]);
    if (k == 0) {
      out << ",,,,\n";
      continue;
    }
    const StepRecord& r = traj.steps[k - 1];
    out << ',' << csv::optional_number(r.kappa) << ','
        << (r.accepted_full_step ? (*r.accepted_full_step ? "1" : "0") : "") << ','
        << csv::optional_number(r.gamma_t) << ',' << r.model_calls << '\n';
  }
}

enum ExitCode : int { kExitOk = 0, kExitConfigError = 2, kExitNumericFailure = 3 };

// Executes the experiment and writes summary.csv, timing.csv and (optionally)
// traj_<sampler>_<i>.csv into cfg.output_dir. summary.csv is a pure function of
// the config; wall-clock times go to timing.csv.
inline int run_experiment(const ExperimentConfig& cfg, ExperimentResult* result_out = nullptr) {
  ExperimentResult result = execute_experiment(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  auto open = [&](const std::string& name) {
    std::ofstream f(cfg.output_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (cfg.output_dir / name).string());
    return f;
  };
  {
    auto f = open("summary.csv");
    write_summary_csv(result, f);
  }
  {
    auto f = open("timing.csv");
    write_timing_csv(result, f);
  }
  if (cfg.dump_trajectories) {
    for (const auto& s : result.samplers) {
      for (std::size_t i = 0; i < s.members.size(); ++i) {
        if (!s.members[i].trajectory) continue;
        auto f = open("traj_" + s.name + "_" + std::to_string(i) + ".csv");
        write_trajectory_csv(*s.members[i].trajectory, f);
      }
    }
  }
  const int code = result.all_failed() ? kExitNumericFailure : kExitOk;
  if (result_out) *result_out = std::move(result);
  return code;
}

}  // namespace flowsmooth
