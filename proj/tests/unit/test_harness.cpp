#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "regreadout/harness.hpp"

using namespace regreadout;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("regreadout_test_" + name);
  fs::remove_all(dir);
  return dir;
}

// Parses a CSV file, checks the header and that every row has that many
// numeric fields; returns the rows.
std::vector<std::vector<double>> read_csv(const fs::path& p, std::string_view header) {
  std::istringstream in(slurp(p));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == header);
  const auto cols = std::count(header.begin(), header.end(), ',') + 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream fields(line);
    std::string f;
    while (std::getline(fields, f, ',')) row.push_back(std::stod(f));
    CHECK(static_cast<long>(row.size()) == cols);
    rows.push_back(row);
  }
  return rows;
}

std::string config_error(std::string_view text) {
  try {
    parse_config(text, "exp.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# experiment\n"
      "n = 3\n"
      "gamma = 2.5   # strong\n"
      "policy = random_permutation\n"
      "integrator = euler\n"
      "epsilons = 1e-2, 1e-3\n"
      "count = 50\n"
      "seed = 12345678901\n"
      "fit_window = 0.25,0.5\n");
  CHECK(c.num_qubits == 3);
  CHECK(c.gamma == 2.5);
  CHECK(c.policy == PolicyKind::random_permutation);
  CHECK(c.integrator == Integrator::euler);
  CHECK(c.epsilons == std::vector<double>{1e-2, 1e-3});
  CHECK(c.count == 50);
  CHECK(c.seed == 12345678901ULL);
  CHECK(c.fit_window.second == 0.5);
  CHECK(c.simulation_params().min_time == doctest::Approx(0.2));

  CHECK(config_error("n = 2\ngamma = fast\n").rfind("exp.cfg:2: gamma", 0) == 0);
  CHECK(config_error("\n\ncolour = red\n").rfind("exp.cfg:3:", 0) == 0);
  CHECK(config_error("n 2\n").rfind("exp.cfg:1:", 0) == 0);
  CHECK(config_error("policy = greedy\n").rfind("exp.cfg:1: policy", 0) == 0);

  ExperimentConfig bad;
  bad.epsilons = {1e-3, 1e-2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.num_qubits = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.policy = PolicyKind::fixed_cycle;
  bad.num_qubits = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(parse_int_list("2-5") == std::vector<int>{2, 3, 4, 5});
  CHECK(parse_int_list("2,3") == std::vector<int>{2, 3});
  CHECK(parse_epsilon_list("default").size() == 66);
}

TEST_CASE("run writes reproducible, schema-valid outputs") {
  ExperimentConfig c;
  c.count = 2000;
  c.out = scratch("run_a");
  const auto run = cmd_run(c);
  for (const char* f : {"trajectories.csv", "first_passage.csv", "summary.json", "manifest.json", "config.txt"}) {
    CHECK(fs::exists(c.out / f));
  }
  const auto traj = read_csv(c.out / "trajectories.csv", kTrajectoriesHeader);
  CHECK(traj.size() == run.stats.sample_times.size());
  const auto fp = read_csv(c.out / "first_passage.csv", kFirstPassageHeader);
  CHECK(fp.size() == 66);
  CHECK(fp.back()[0] == doctest::Approx(1e-6));

  const auto summary = nlohmann::json::parse(slurp(c.out / "summary.json"));
  CHECK(summary["ln_delta_slope"]["value"].get<double>() == doctest::Approx(-16.0).epsilon(0.1));
  const auto manifest = nlohmann::json::parse(slurp(c.out / "manifest.json"));
  CHECK(manifest["config"]["seed"] == kDefaultMasterSeed);
  CHECK(manifest["version"] == std::string(library_version()));
  CHECK(manifest.contains("wall_time_s"));
  CHECK_NOTHROW(check_run(run));

  // second run, and a replay from the echoed config
  ExperimentConfig again = c;
  again.out = scratch("run_b");
  cmd_run(again);
  auto replay = load_config_file(c.out / "config.txt");
  replay.out = scratch("run_c");
  cmd_run(replay);
  for (const char* f : {"trajectories.csv", "first_passage.csv", "summary.json"}) {
    CHECK(slurp(c.out / f) == slurp(again.out / f));
    CHECK(slurp(c.out / f) == slurp(replay.out / f));
  }
}

TEST_CASE("run errors") {
  ExperimentConfig c;
  c.count = 20;
  c.num_qubits = 2;
  c.policy = PolicyKind::fixed_cycle;
  const auto cycle = scratch("cycle") += ".txt";
  {
    std::ofstream os(cycle);
    os << "2 0 1 3\n2 0 1\n";
  }
  c.cycle_file = cycle;
  c.out = scratch("run_err");
  try {
    cmd_run(c);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(cycle.string() + ":2:") != std::string::npos);
  }

  ExperimentConfig blocked;
  blocked.count = 20;
  const auto file = scratch("blocker");
  { std::ofstream(file) << "x"; }
  blocked.out = file / "sub";
  CHECK_THROWS_AS(cmd_run(blocked), std::runtime_error);
}

TEST_CASE("sweep") {
  ExperimentConfig c;
  c.count = 100;
  c.out = scratch("sweep");
  const std::vector<int> ns{2, 3};
  const std::vector<PolicyKind> kinds{PolicyKind::none, PolicyKind::random_permutation};
  const auto s = cmd_sweep(c, ns, kinds, false);
  const auto rows = [&] {
    std::istringstream in(slurp(c.out / "sweep.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == kSweepHeader);
    std::vector<std::string> out;
    while (std::getline(in, line)) out.push_back(line);
    return out;
  }();
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("none,2,1,", 0) == 0);
  CHECK(rows[2].rfind("random_permutation,2,", 0) == 0);
  CHECK(fs::exists(c.out / "sweep.json"));
  CHECK(fs::exists(c.out / "manifest.json"));

  const std::vector<int> big{6};
  CHECK_THROWS_AS(cmd_sweep(c, big, kinds, false), ConfigError);
  const std::vector<PolicyKind> cyc{PolicyKind::fixed_cycle};
  CHECK_THROWS_AS(cmd_sweep(c, ns, cyc, false), ConfigError);
}

TEST_CASE("reports") {
  const auto b = bounds_report(1, 3);
  CHECK(b["bounds"][1]["random_permutation"]["lower"].get<double>() == doctest::Approx(8.0 / 9.0));
  CHECK(b["bounds"][1]["random_permutation"]["upper"].get<double>() == doctest::Approx(4.0 / 3.0));
  CHECK(b["large_n"] == "0.25n <= S_RP <= 0.5n");
  std::ostringstream os;
  print_bounds(os, b);
  CHECK(os.str().find("0.8889") != std::string::npos);

  const std::vector<std::size_t> dims{4, 8};
  const auto r = identities_report(dims);
  CHECK(r["pass"] == true);
  CHECK(r["identities"][0]["square_sum"]["value"] == 48);
  CHECK(r["identities"][0]["cross_sum"]["value"] == 16);
  std::ostringstream ids;
  print_identities(ids, r);
  CHECK(ids.str().find("PASS") != std::string::npos);
  const std::vector<std::size_t> huge{16};
  CHECK_THROWS_AS(identities_report(huge), ConfigError);
}
