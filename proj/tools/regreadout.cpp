// regreadout: command-line front end for the register readout simulator.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "regreadout/harness.hpp"

namespace rr = regreadout;

namespace {

// Flags that mirror config-file keys. Values are applied as settings after
// the config file so they always win.
struct SettingFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_file, "key = value configuration file");
    static const std::pair<const char*, const char*> flags[] = {
        {"n", "number of qubits"},
        {"gamma", "measurement strength"},
        {"dt", "time step"},
        {"max-time", "trajectory cutoff"},
        {"integrator", "exact or euler"},
        {"policy", "none, h_ordering, random_permutation or fixed_cycle"},
        {"cycle-file", "permutation cycle, one image array per line"},
        {"epsilons", "comma-separated targets, or 'default'"},
        {"count", "trajectories per ensemble"},
        {"seed", "master seed"},
        {"out", "output directory"},
        {"stop-epsilon", "smallest target infidelity"},
        {"sample-interval", "spacing of the stored infidelity curve"},
        {"fit-window", "ln(infidelity) fit window 'start,end' in units of 1/gamma"},
        {"threads", "worker threads (0: all cores)"},
    };
    for (const auto& [name, help] : flags) {
      std::string key = name;
      for (auto& c : key) c = c == '-' ? '_' : c;
      app.add_option_function<std::string>(
          std::string("--") + name, [this, key](const std::string& v) { values[key] = v; }, help);
    }
  }

  rr::ExperimentConfig build() const {
    rr::ExperimentConfig config;
    if (!config_file.empty()) config = rr::load_config_file(config_file);
    for (const auto& [key, value] : values) {
      try {
        rr::apply_setting(config, key, value);
      } catch (const rr::ConfigError& e) {
        throw rr::ConfigError(fmt::format("--{}: {}", key, e.what()));
      }
    }
    return config;
  }
};

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return rr::kExitOk;
  } catch (const rr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return rr::kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return rr::kExitConfig;
  } catch (const rr::CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return rr::kExitCheck;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rr::kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-measurement readout of a qubit register"};
  app.set_version_flag("--version", std::string(rr::library_version()));
  app.require_subcommand(1);

  SettingFlags run_flags;
  bool run_check = false;
  auto* run = app.add_subcommand("run", "simulate one ensemble and write curves, first passages and a manifest");
  run_flags.add_to(*run);
  run->add_flag("--check", run_check, "exit 3 on excessive censoring or a no-control slope off by >5%");

  SettingFlags sweep_flags;
  std::string n_list = "2-5";
  std::string policy_list = "random_permutation";
  bool unsafe_large_n = false;
  bool sweep_check = false;
  auto* sweep = app.add_subcommand("sweep", "asymptotic speed-up against n for one or more policies");
  sweep_flags.add_to(*sweep);
  sweep->add_option("--n-list", n_list, "qubit counts, e.g. 2-5 or 2,3")->capture_default_str();
  sweep->add_option("--policies", policy_list, "comma-separated policy names")->capture_default_str();
  sweep->add_flag("--unsafe-large-n", unsafe_large_n, "allow n > 5");
  sweep->add_flag("--check", sweep_check, "exit 3 when a point leaves its analytic band by >3 stderr");

  std::string n_range = "1-8";
  std::string bounds_json;
  auto* bounds = app.add_subcommand("bounds", "analytic speed-up bounds");
  bounds->add_option("--n", n_range, "qubit range, e.g. 1-8")->capture_default_str();
  bounds->add_option("--json", bounds_json, "also write the report to this file");

  std::string dims = "4,8";
  std::string identities_json;
  bool identities_check = false;
  auto* identities = app.add_subcommand("verify-identities", "exact permutation-group sums by enumeration");
  identities->add_option("--D", dims, "dimensions, each a power of two up to 8")->capture_default_str();
  identities->add_option("--json", identities_json, "also write the report to this file");
  identities->add_flag("--check", identities_check, "exit 3 if any sum differs");

  CLI11_PARSE(app, argc, argv);

  auto write_report = [](const std::string& path, const nlohmann::json& report) {
    if (path.empty()) return;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << report.dump(2) << '\n';
  };

  if (*run) {
    return run_guarded([&] {
      const auto config = run_flags.build();
      const auto result = rr::cmd_run(config);
      std::cout << result.summary.dump(2) << '\n';
      if (run_check) rr::check_run(result);
    });
  }
  if (*sweep) {
    return run_guarded([&] {
      const auto config = sweep_flags.build();
      const auto ns = rr::parse_int_list(n_list);
      std::vector<rr::PolicyKind> kinds;
      for (const auto& name : CLI::detail::split(policy_list, ',')) {
        kinds.push_back(rr::parse_policy_kind(CLI::detail::trim_copy(name)));
      }
      const auto result = rr::cmd_sweep(config, ns, kinds, unsafe_large_n);
      rr::write_sweep_csv(std::cout, result.sweeps);
      if (sweep_check) rr::check_sweep(result);
    });
  }
  if (*bounds) {
    return run_guarded([&] {
      const auto ns = rr::parse_int_list(n_range);
      const auto report = rr::bounds_report(ns.front(), ns.back());
      rr::print_bounds(std::cout, report);
      write_report(bounds_json, report);
    });
  }
  return run_guarded([&] {
    std::vector<std::size_t> ds;
    for (int d : rr::parse_int_list(dims)) {
      if (d < 2) throw rr::ConfigError(fmt::format("D = {} is not a register dimension", d));
      ds.push_back(static_cast<std::size_t>(d));
    }
    const auto report = rr::identities_report(ds);
    rr::print_identities(std::cout, report);
    write_report(identities_json, report);
    if (identities_check && !report["pass"].get<bool>()) throw rr::CheckFailure("identity mismatch");
  });
}
