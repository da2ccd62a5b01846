#include "regreadout/harness.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#ifndef REGREADOUT_VERSION
#define REGREADOUT_VERSION "0.0.0"
#endif

namespace regreadout {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view library_version() { return REGREADOUT_VERSION; }

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    auto piece = trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!piece.empty()) parts.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void write_json(const fs::path& path, const json& j) {
  auto os = open_output(path);
  os << j.dump(2) << '\n';
}

void prepare_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

std::string config_to_text(const ExperimentConfig& c) {
  std::string eps;
  for (std::size_t k = 0; k < c.epsilons.size(); ++k) eps += (k ? "," : "") + num(c.epsilons[k]);
  std::string text;
  text += fmt::format("n = {}\n", c.num_qubits);
  text += fmt::format("gamma = {}\n", num(c.gamma));
  text += fmt::format("dt = {}\n", num(c.dt));
  text += fmt::format("max_time = {}\n", num(c.max_time));
  text += fmt::format("integrator = {}\n", to_string(c.integrator));
  text += fmt::format("policy = {}\n", to_string(c.policy));
  if (c.cycle_file) text += fmt::format("cycle_file = {}\n", c.cycle_file->string());
  text += fmt::format("epsilons = {}\n", eps);
  text += fmt::format("count = {}\n", c.count);
  text += fmt::format("seed = {}\n", c.seed);
  text += fmt::format("stop_epsilon = {}\n", num(c.stop_epsilon));
  text += fmt::format("sample_interval = {}\n", num(c.sample_interval));
  text += fmt::format("fit_window = {},{}\n", num(c.fit_window.first), num(c.fit_window.second));
  return text;
}

json bounds_json(const SpeedupBounds& b) { return {{"lower", b.lower}, {"upper", b.upper}}; }

json speedup_json(const SpeedupEstimate& s) {
  json j{{"value", s.value}, {"stderr", s.std_error}, {"method", to_string(s.method)}};
  if (s.epsilon_range) j["epsilon_range"] = {s.epsilon_range->first, s.epsilon_range->second};
  return j;
}

json manifest(std::string_view command, const ExperimentConfig& config, double wall_seconds,
              const std::vector<fs::path>& files, json extra) {
  json j{{"tool", "regreadout"},
         {"version", library_version()},
         {"command", command},
         {"config", config_to_json(config)},
         {"integrator", to_string(config.integrator)},
         {"wall_time_s", wall_seconds}};
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  names.push_back("manifest.json");
  j["outputs"] = names;
  j.update(extra);
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    simulation_params().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (count < 2) throw ConfigError("count must be at least 2");
  if (epsilons.empty()) throw ConfigError("epsilon grid is empty");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] >= stop_epsilon && epsilons[k] < 1.0)) {
      throw ConfigError(fmt::format("epsilon {} lies outside [stop_epsilon, 1)", epsilons[k]));
    }
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) {
      throw ConfigError("epsilons must be strictly descending");
    }
  }
  const auto [lo, hi] = fit_window;
  if (!(lo >= 0.0 && hi > lo)) throw ConfigError("fit_window must satisfy 0 <= start < end");
  if (hi / gamma > max_time) throw ConfigError("fit_window ends after max_time");
  if (policy == PolicyKind::fixed_cycle && !cycle_file && num_qubits != 2) {
    throw ConfigError("fixed_cycle needs cycle_file unless n = 2");
  }
}

SimulationParams ExperimentConfig::simulation_params() const {
  SimulationParams p;
  p.num_qubits = num_qubits;
  p.gamma = gamma;
  p.dt = dt;
  p.max_time = max_time;
  p.integrator = integrator;
  p.stop_epsilon = stop_epsilon;
  p.sample_interval = sample_interval;
  p.min_time = fit_window.second / gamma;
  return p;
}

ControlPolicy ExperimentConfig::control_policy() const {
  ControlPolicy policy{this->policy, {}};
  if (this->policy == PolicyKind::fixed_cycle) {
    try {
      policy.cycle = cycle_file ? load_cycle_file(*cycle_file) : std::vector{cycle_3124()};
      policy.validate(register_dimension(num_qubits));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return policy;
}

EnsembleOptions ExperimentConfig::ensemble_options() const {
  EnsembleOptions o;
  o.count = count;
  o.master_seed = seed;
  o.threads = threads;
  o.slope_window = std::pair{fit_window.first / gamma, fit_window.second / gamma};
  return o;
}

std::vector<double> parse_epsilon_list(std::string_view text) {
  if (trim(text) == "default") return default_epsilon_grid();
  std::vector<double> eps;
  for (auto piece : split(text, ',')) eps.push_back(parse_number<double>("epsilons", piece));
  if (eps.empty()) throw ConfigError("epsilons: empty list");
  return eps;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> values;
  for (auto piece : split(text, ',')) {
    const auto dash = piece.find('-', 1);
    if (dash != std::string_view::npos) {
      const int lo = parse_number<int>("range", piece.substr(0, dash));
      const int hi = parse_number<int>("range", piece.substr(dash + 1));
      if (hi < lo) throw ConfigError(fmt::format("empty range '{}'", piece));
      for (int v = lo; v <= hi; ++v) values.push_back(v);
    } else {
      values.push_back(parse_number<int>("list", piece));
    }
  }
  if (values.empty()) throw ConfigError("empty integer list");
  return values;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  try {
    if (key == "n") {
      c.num_qubits = parse_number<int>(key, value);
    } else if (key == "gamma") {
      c.gamma = parse_number<double>(key, value);
    } else if (key == "dt") {
      c.dt = parse_number<double>(key, value);
    } else if (key == "max_time") {
      c.max_time = parse_number<double>(key, value);
    } else if (key == "integrator") {
      c.integrator = parse_integrator(value);
    } else if (key == "policy") {
      c.policy = parse_policy_kind(value);
    } else if (key == "cycle_file") {
      c.cycle_file = fs::path(std::string(value));
    } else if (key == "epsilons") {
      c.epsilons = parse_epsilon_list(value);
    } else if (key == "count") {
      c.count = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "out") {
      c.out = fs::path(std::string(value));
    } else if (key == "stop_epsilon") {
      c.stop_epsilon = parse_number<double>(key, value);
    } else if (key == "sample_interval") {
      c.sample_interval = parse_number<double>(key, value);
    } else if (key == "fit_window") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw ConfigError("fit_window: expected 'start,end'");
      c.fit_window = {parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])};
    } else if (key == "threads") {
      c.threads = parse_number<unsigned>(key, value);
    } else {
      throw ConfigError(fmt::format("unknown key '{}'", key));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

ExperimentConfig parse_config(std::string_view text, std::string_view source, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    try {
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      apply_setting(base, trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config_file(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), std::move(base));
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"n", c.num_qubits},
         {"gamma", c.gamma},
         {"dt", c.dt},
         {"max_time", c.max_time},
         {"integrator", to_string(c.integrator)},
         {"policy", to_string(c.policy)},
         {"cycle_file", c.cycle_file ? json(c.cycle_file->string()) : json(nullptr)},
         {"epsilons", c.epsilons},
         {"count", c.count},
         {"seed", c.seed},
         {"out", c.out.string()},
         {"stop_epsilon", c.stop_epsilon},
         {"sample_interval", c.sample_interval},
         {"fit_window", {c.fit_window.first, c.fit_window.second}}};
  return j;
}

void write_trajectories_csv(std::ostream& os, const EnsembleStats& stats) {
  os << kTrajectoriesHeader << '\n';
  for (std::size_t s = 0; s < stats.sample_times.size(); ++s) {
    fmt::print(os, "{},{},{}\n", num(stats.sample_times[s]), num(stats.mean_ln_delta[s]),
               num(stats.ln_delta_stderr[s]));
  }
}

void write_first_passage_csv(std::ostream& os, const EnsembleStats& stats) {
  os << kFirstPassageHeader << '\n';
  for (std::size_t e = 0; e < stats.epsilons.size(); ++e) {
    fmt::print(os, "{},{},{},{}\n", num(stats.epsilons[e]), num(stats.mean_time[e]),
               num(stats.time_stderr[e]), num(stats.censored_fraction[e]));
  }
}

void write_sweep_csv(std::ostream& os, std::span<const SweepResult> sweeps) {
  os << kSweepHeader << '\n';
  for (const auto& sweep : sweeps) {
    for (const auto& p : sweep.points) {
      fmt::print(os, "{},{},{},{},{},{}\n", to_string(sweep.policy), p.num_qubits, num(p.speedup.value),
                 num(p.speedup.std_error), num(p.bounds.lower), num(p.bounds.upper));
    }
  }
}

json ensemble_summary(const EnsembleStats& stats) {
  const auto& p = stats.params;
  json j{{"n", p.num_qubits},
         {"gamma", p.gamma},
         {"policy", to_string(stats.policy)},
         {"integrator", to_string(p.integrator)},
         {"trajectory_count", stats.trajectory_count},
         {"seed", stats.master_seed},
         {"max_censored_fraction", stats.max_censored_fraction()},
         {"excessive_censoring", stats.excessive_censoring()},
         {"coarse_step", p.coarse_step()}};
  if (stats.ln_delta_slope) {
    j["ln_delta_slope"] = {{"value", stats.ln_delta_slope->mean},
                           {"stderr", stats.ln_delta_slope->std_error},
                           {"window", {stats.slope_window->first, stats.slope_window->second}},
                           {"no_control_theory", -16.0 * p.gamma}};
  } else {
    j["ln_delta_slope"] = nullptr;
  }
  try {
    const auto reg = mean_time_regression(stats);
    j["mean_time_regression"] = {{"slope", reg.fit.slope},
                                 {"stderr", reg.slope.std_error},
                                 {"intercept", reg.fit.intercept},
                                 {"epsilon_range", {kAsymptoticEpsLo, kAsymptoticEpsHi}},
                                 {"points", reg.x.size()},
                                 {"no_control_theory", 1.0 / (16.0 * p.gamma)}};
  } catch (const std::exception&) {
    j["mean_time_regression"] = nullptr;
  }
  return j;
}

RunOutputs cmd_run(const ExperimentConfig& config) {
  config.validate();
  const auto policy = config.control_policy();
  const auto start = std::chrono::steady_clock::now();
  prepare_directory(config.out);

  RunOutputs run;
  run.stats = run_ensemble(config.simulation_params(), policy, config.epsilons, config.ensemble_options());
  run.summary = ensemble_summary(run.stats);

  const fs::path traj = config.out / "trajectories.csv";
  const fs::path fp = config.out / "first_passage.csv";
  const fs::path summary = config.out / "summary.json";
  const fs::path cfg = config.out / "config.txt";
  {
    auto os = open_output(traj);
    write_trajectories_csv(os, run.stats);
  }
  {
    auto os = open_output(fp);
    write_first_passage_csv(os, run.stats);
  }
  write_json(summary, run.summary);
  {
    auto os = open_output(cfg);
    os << config_to_text(config);
  }
  run.files = {traj, fp, summary, cfg};
  const json extra{{"censored_fraction", run.stats.censored_fraction},
                   {"trajectory_count", run.stats.trajectory_count}};
  write_json(config.out / "manifest.json", manifest("run", config, seconds_since(start), run.files, extra));
  run.files.push_back(config.out / "manifest.json");
  return run;
}

void check_run(const RunOutputs& run) {
  const auto& stats = run.stats;
  if (stats.max_censored_fraction() >= kSpeedupCensoringLimit) {
    throw CheckFailure(fmt::format("censoring {:.4g} reaches the 0.1% limit", stats.max_censored_fraction()));
  }
  if (stats.policy == PolicyKind::none && stats.ln_delta_slope) {
    const double expected = -16.0 * stats.params.gamma;
    const double rel = std::abs(stats.ln_delta_slope->mean / expected - 1.0);
    if (rel > 0.05) {
      throw CheckFailure(fmt::format("ln(infidelity) slope {:.4f} is {:.1f}% away from {:.4f}",
                                     stats.ln_delta_slope->mean, 100.0 * rel, expected));
    }
  }
}

SweepOutputs cmd_sweep(const ExperimentConfig& config, std::span<const int> n_values,
                       std::span<const PolicyKind> policies, bool allow_large_n) {
  if (n_values.empty()) throw ConfigError("sweep needs at least one n");
  if (policies.empty()) throw ConfigError("sweep needs at least one policy");
  for (int n : n_values) {
    if (n < 1 || n > kMaxQubits) throw ConfigError(fmt::format("n = {} is outside [1, {}]", n, kMaxQubits));
    if (n > kSafeSweepMaxQubits && !allow_large_n) {
      throw ConfigError(fmt::format("n = {} exceeds {}; pass --unsafe-large-n to run it", n, kSafeSweepMaxQubits));
    }
  }
  for (auto kind : policies) {
    if (kind == PolicyKind::fixed_cycle && !config.cycle_file &&
        std::any_of(n_values.begin(), n_values.end(), [](int n) { return n != 2; })) {
      throw ConfigError("fixed_cycle sweeps beyond n = 2 need a cycle file");
    }
  }
  const auto start = std::chrono::steady_clock::now();
  prepare_directory(config.out);

  SweepOutputs out;
  SimulationParams base = config.simulation_params();
  base.min_time = 0.0;
  EnsembleOptions options = config.ensemble_options();
  options.slope_window.reset();
  for (auto kind : policies) {
    ExperimentConfig per_policy = config;
    per_policy.policy = kind;
    ControlPolicy policy{kind, {}};
    if (kind == PolicyKind::fixed_cycle) {
      per_policy.num_qubits = n_values.front();
      policy = per_policy.control_policy();
    }
    out.sweeps.push_back(speedup_scaling_sweep(n_values, policy, base, options));
  }

  json policies_json = json::array();
  for (const auto& sweep : out.sweeps) {
    json points = json::array();
    for (const auto& p : sweep.points) {
      points.push_back({{"n", p.num_qubits}, {"speedup", speedup_json(p.speedup)}, {"bounds", bounds_json(p.bounds)}});
    }
    json entry{{"policy", to_string(sweep.policy)}, {"points", points}};
    if (sweep.fit) {
      entry["linear_fit"] = {{"slope", sweep.fit->slope},
                             {"slope_stderr", sweep.fit->slope_stderr},
                             {"intercept", sweep.fit->intercept},
                             {"intercept_stderr", sweep.fit->intercept_stderr},
                             {"covariance", sweep.fit->covariance},
                             {"chi_square", sweep.fit->chi_square}};
    } else {
      entry["linear_fit"] = nullptr;
    }
    policies_json.push_back(entry);
  }
  out.summary = {{"count", config.count}, {"seed", config.seed}, {"sweeps", policies_json}};

  const fs::path csv = config.out / "sweep.csv";
  const fs::path js = config.out / "sweep.json";
  {
    auto os = open_output(csv);
    write_sweep_csv(os, out.sweeps);
  }
  write_json(js, out.summary);
  out.files = {csv, js};
  json extra{{"n_values", std::vector<int>(n_values.begin(), n_values.end())}};
  json names = json::array();
  for (auto k : policies) names.push_back(to_string(k));
  extra["policies"] = names;
  write_json(config.out / "manifest.json", manifest("sweep", config, seconds_since(start), out.files, extra));
  out.files.push_back(config.out / "manifest.json");
  return out;
}

void check_sweep(const SweepOutputs& sweep) {
  for (const auto& s : sweep.sweeps) {
    for (const auto& p : s.points) {
      const double tol = 3.0 * p.speedup.std_error;
      if (p.speedup.value < p.bounds.lower - tol || p.speedup.value > p.bounds.upper + tol) {
        throw CheckFailure(fmt::format("{} n={}: speed-up {:.4f} +- {:.4f} outside [{:.4f}, {:.4f}]",
                                       to_string(s.policy), p.num_qubits, p.speedup.value,
                                       p.speedup.std_error, p.bounds.lower, p.bounds.upper));
      }
    }
  }
}

json bounds_report(int n_lo, int n_hi) {
  if (n_lo < 1 || n_hi < n_lo || n_hi > kMaxQubits) {
    throw ConfigError(fmt::format("n range must lie inside [1, {}]", kMaxQubits));
  }
  json rows = json::array();
  for (int n = n_lo; n <= n_hi; ++n) {
    rows.push_back({{"n", n},
                    {"locally_optimal", bounds_json(speedup_bounds_lo(n))},
                    {"random_permutation", bounds_json(speedup_bounds_rp(n))},
                    {"mean_hamming_distance", mean_random_hamming_distance(n)}});
  }
  return {{"bounds", rows}, {"large_n", "0.25n <= S_RP <= 0.5n"}};
}

void print_bounds(std::ostream& os, const json& report) {
  fmt::print(os, "{:>3}  {:>18}  {:>18}\n", "n", "S_LO [lo, hi]", "S_RP [lo, hi]");
  for (const auto& row : report["bounds"]) {
    const auto& lo = row["locally_optimal"];
    const auto& rp = row["random_permutation"];
    fmt::print(os, "{:>3}  [{:7.4f}, {:7.4f}]  [{:7.4f}, {:7.4f}]\n", row["n"].get<int>(),
               lo["lower"].get<double>(), lo["upper"].get<double>(), rp["lower"].get<double>(),
               rp["upper"].get<double>());
  }
  fmt::print(os, "large n: {}\n", report["large_n"].get<std::string>());
}

json identities_report(std::span<const std::size_t> dims) {
  json entries = json::array();
  bool all = true;
  for (auto d : dims) {
    IdentityReport r;
    try {
      r = permutation_sum_identities(d);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    // Every (r, i) and (r, i, j) is checked; the first of each is echoed.
    const auto& sq = r.square_sums.front();
    const auto& cr = r.cross_sums.front();
    entries.push_back({{"D", d},
                       {"group_order", r.group_order},
                       {"square_sum", {{"qubit", sq.qubit}, {"i", sq.i}, {"value", sq.value}, {"expected", sq.expected}}},
                       {"cross_sum", {{"qubit", cr.qubit}, {"i", cr.i}, {"j", cr.j}, {"value", cr.value}, {"expected", cr.expected}}},
                       {"checked", r.square_sums.size() + r.cross_sums.size()},
                       {"pass", r.all_pass()}});
    all = all && r.all_pass();
  }
  return {{"identities", entries}, {"pass", all}};
}

void print_identities(std::ostream& os, const json& report) {
  for (const auto& e : report["identities"]) {
    const auto& sq = e["square_sum"];
    const auto& cr = e["cross_sum"];
    fmt::print(os, "D={}: sum (Z_ii)^2 = {} (expected {}), sum Z_ii Z_jj = {} (expected {}), {} sums checked: {}\n",
               e["D"].get<std::size_t>(), sq["value"].get<std::int64_t>(), sq["expected"].get<std::int64_t>(),
               cr["value"].get<std::int64_t>(), cr["expected"].get<std::int64_t>(), e["checked"].get<std::size_t>(),
               e["pass"].get<bool>() ? "PASS" : "FAIL");
  }
}

}  // namespace regreadout
