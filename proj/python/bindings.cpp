#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "regreadout/ensemble.hpp"
#include "regreadout/harness.hpp"
#include "regreadout/theory.hpp"

namespace py = pybind11;
using namespace regreadout;

namespace {

std::vector<BasisIndex> image_of(const Permutation& p) { return {p.image().begin(), p.image().end()}; }
std::vector<double> probs_of(const DiagonalState& s) { return {s.probs().begin(), s.probs().end()}; }

std::string csv(void (*writer)(std::ostream&, const EnsembleStats&), const EnsembleStats& stats) {
  std::ostringstream os;
  writer(os, stats);
  return os.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continuous-measurement readout of a qubit register";
  m.attr("__version__") = std::string(library_version());
  m.attr("REFERENCE_TIME_STEP") = kReferenceTimeStep;
  m.attr("DEFAULT_SEED") = kDefaultMasterSeed;

  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);

  // register
  m.def("register_dimension", &register_dimension, py::arg("n"));
  m.def("hamming_distance", &hamming_distance, py::arg("a"), py::arg("b"));
  m.def(
      "z_eigenvalue",
      [](int n, int qubit, BasisIndex i, bool shifted) { return z_eigenvalue({n, qubit, shifted}, i); },
      py::arg("n"), py::arg("qubit"), py::arg("i"), py::arg("shifted") = false);

  py::class_<Permutation>(m, "Permutation")
      .def(py::init<std::vector<BasisIndex>>(), py::arg("image"))
      .def_static("identity", &Permutation::identity, py::arg("dim"))
      .def_property_readonly("image", &image_of)
      .def("__len__", &Permutation::size)
      .def("__call__", &Permutation::operator(), py::arg("i"))
      .def("is_identity", &Permutation::is_identity)
      .def(py::self == py::self)
      .def("__repr__", [](const Permutation& p) {
        std::string s = "Permutation([";
        for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + std::to_string(p(i));
        return s + "])";
      });
  m.def("compose", &compose, py::arg("p"), py::arg("q"), "(p o q)(i) = p(q(i))");
  m.def("invert", &invert, py::arg("p"));
  m.def("cycle_3124", &cycle_3124);
  m.def(
      "sample_uniform_permutation",
      [](std::uint64_t seed, std::size_t dim) {
        Rng rng(seed);
        return sample_uniform_permutation(rng, dim);
      },
      py::arg("seed"), py::arg("dim"));

  py::class_<DiagonalState>(m, "DiagonalState")
      .def(py::init<int, std::vector<double>>(), py::arg("n"), py::arg("probs"))
      .def_static("maximally_mixed", &DiagonalState::maximally_mixed, py::arg("n"))
      .def_static("basis_state", &DiagonalState::basis_state, py::arg("n"), py::arg("index"))
      .def_property_readonly("n", &DiagonalState::num_qubits)
      .def_property_readonly("probs", &probs_of)
      .def("argmax", &DiagonalState::argmax)
      .def("infidelity", &DiagonalState::infidelity);
  m.def(
      "expectation_z",
      [](const DiagonalState& s, int qubit, bool shifted) {
        return expectation_z(s, {s.num_qubits(), qubit, shifted});
      },
      py::arg("state"), py::arg("qubit"), py::arg("shifted") = false);
  m.def("apply_permutation", &apply_permutation, py::arg("state"), py::arg("p"));

  // control
  m.def("h_order", &h_order, py::arg("state"));
  m.def("h_order_targets", &h_order_targets, py::arg("n"));
  m.def("load_cycle_file", &load_cycle_file, py::arg("path"));

  // measurement
  py::class_<SimulationParams>(m, "SimulationParams")
      .def(py::init([](int n, double gamma, double dt, double max_time, const std::string& integrator,
                       double stop_epsilon, double min_time, double sample_interval) {
             SimulationParams p;
             p.num_qubits = n;
             p.gamma = gamma;
             p.dt = dt;
             p.max_time = max_time;
             p.integrator = parse_integrator(integrator);
             p.stop_epsilon = stop_epsilon;
             p.min_time = min_time;
             p.sample_interval = sample_interval;
             p.validate();
             return p;
           }),
           py::arg("n") = 1, py::arg("gamma") = 1.0, py::arg("dt") = kReferenceTimeStep,
           py::arg("max_time") = 10.0, py::arg("integrator") = "exact", py::arg("stop_epsilon") = 1e-6,
           py::arg("min_time") = 0.0, py::arg("sample_interval") = 0.01)
      .def_readonly("n", &SimulationParams::num_qubits)
      .def_readonly("gamma", &SimulationParams::gamma)
      .def_readonly("dt", &SimulationParams::dt)
      .def_readonly("max_time", &SimulationParams::max_time)
      .def_property_readonly("integrator", [](const SimulationParams& p) { return std::string(to_string(p.integrator)); })
      .def_readonly("stop_epsilon", &SimulationParams::stop_epsilon)
      .def_readonly("min_time", &SimulationParams::min_time);

  py::class_<StepIncrements>(m, "StepIncrements")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("dW"), py::arg("dR"))
      .def_readonly("dW", &StepIncrements::dW)
      .def_readonly("dR", &StepIncrements::dR);
  m.def(
      "generate_increments",
      [](const DiagonalState& s, const SimulationParams& p, std::uint64_t seed) {
        Rng rng(seed);
        return generate_increments(s, p, rng);
      },
      py::arg("state"), py::arg("params"), py::arg("seed"));
  m.def("euler_step", &euler_step, py::arg("state"), py::arg("increments"), py::arg("params"));
  m.def("exact_step", &exact_step, py::arg("state"), py::arg("increments"), py::arg("params"));

  auto make_policy = [](const std::string& name, std::vector<Permutation> cycle) {
    ControlPolicy p{parse_policy_kind(name), std::move(cycle)};
    if (p.kind == PolicyKind::fixed_cycle && p.cycle.empty()) p.cycle = {cycle_3124()};
    return p;
  };

  py::class_<TrajectoryResult>(m, "TrajectoryResult")
      .def_readonly("sample_times", &TrajectoryResult::sample_times)
      .def_readonly("infidelity", &TrajectoryResult::infidelity)
      .def_readonly("epsilons", &TrajectoryResult::epsilons)
      .def_readonly("first_passage", &TrajectoryResult::first_passage)
      .def_readonly("final_index", &TrajectoryResult::final_index)
      .def_readonly("cumulative_control", &TrajectoryResult::cumulative_control)
      .def_readonly("final_time", &TrajectoryResult::final_time)
      .def_readonly("steps", &TrajectoryResult::steps)
      .def_readonly("reached_stop", &TrajectoryResult::reached_stop)
      .def("retrodicted_index", &TrajectoryResult::retrodicted_index);
  m.def(
      "simulate_trajectory",
      [make_policy](const SimulationParams& params, const std::string& policy, std::vector<double> epsilons,
                    std::uint64_t seed, std::uint64_t index, std::optional<DiagonalState> initial,
                    std::vector<Permutation> cycle) {
        TrajectoryOptions opts;
        opts.initial_state = std::move(initial);
        py::gil_scoped_release release;
        return simulate_trajectory(params, make_policy(policy, std::move(cycle)), epsilons, seed, index, opts);
      },
      py::arg("params"), py::arg("policy") = "none", py::arg("epsilons") = std::vector<double>{},
      py::arg("seed") = kDefaultMasterSeed, py::arg("index") = 0, py::arg("initial_state") = py::none(),
      py::arg("cycle") = std::vector<Permutation>{});

  // ensemble
  py::class_<MeanError>(m, "MeanError")
      .def_readonly("mean", &MeanError::mean)
      .def_readonly("stderr", &MeanError::std_error);
  py::class_<EnsembleStats>(m, "EnsembleStats")
      .def_readonly("trajectory_count", &EnsembleStats::trajectory_count)
      .def_readonly("sample_times", &EnsembleStats::sample_times)
      .def_readonly("mean_ln_delta", &EnsembleStats::mean_ln_delta)
      .def_readonly("ln_delta_stderr", &EnsembleStats::ln_delta_stderr)
      .def_readonly("epsilons", &EnsembleStats::epsilons)
      .def_readonly("mean_time", &EnsembleStats::mean_time)
      .def_readonly("time_stderr", &EnsembleStats::time_stderr)
      .def_readonly("censored_fraction", &EnsembleStats::censored_fraction)
      .def_readonly("retrodicted", &EnsembleStats::retrodicted)
      .def_readonly("ln_delta_slope", &EnsembleStats::ln_delta_slope)
      .def("trajectories_csv", [](const EnsembleStats& s) { return csv(&write_trajectories_csv, s); })
      .def("first_passage_csv", [](const EnsembleStats& s) { return csv(&write_first_passage_csv, s); })
      .def("summary_json", [](const EnsembleStats& s) { return ensemble_summary(s).dump(); });
  m.def("default_epsilon_grid", &default_epsilon_grid);
  m.def(
      "run_ensemble",
      [make_policy](const SimulationParams& params, const std::string& policy, std::optional<std::vector<double>> epsilons,
                    std::size_t count, std::uint64_t seed, std::optional<std::pair<double, double>> slope_window,
                    std::vector<Permutation> cycle, unsigned threads) {
        EnsembleOptions o;
        o.count = count;
        o.master_seed = seed;
        o.slope_window = slope_window;
        o.threads = threads;
        const auto eps = epsilons.value_or(default_epsilon_grid());
        py::gil_scoped_release release;
        return run_ensemble(params, make_policy(policy, std::move(cycle)), eps, o);
      },
      py::arg("params"), py::arg("policy") = "none", py::arg("epsilons") = py::none(), py::arg("count") = 1000,
      py::arg("seed") = kDefaultMasterSeed, py::arg("slope_window") = py::none(),
      py::arg("cycle") = std::vector<Permutation>{}, py::arg("threads") = 0);

  py::class_<SpeedupEstimate>(m, "SpeedupEstimate")
      .def("__repr__", [](const SpeedupEstimate& s) {
        return "SpeedupEstimate(value=" + py::repr(py::float_(s.value)).cast<std::string>() +
               ", stderr=" + py::repr(py::float_(s.std_error)).cast<std::string>() + ")";
      })
      .def_readonly("value", &SpeedupEstimate::value)
      .def_readonly("stderr", &SpeedupEstimate::std_error)
      .def_property_readonly("method", [](const SpeedupEstimate& s) { return std::string(to_string(s.method)); })
      .def_readonly("epsilon_range", &SpeedupEstimate::epsilon_range);
  m.def("speedup_fixed_epsilon", &speedup_fixed_epsilon, py::arg("no_control"), py::arg("controlled"),
        py::arg("epsilon"));
  m.def("asymptotic_speedup", &asymptotic_speedup, py::arg("no_control"), py::arg("controlled"),
        py::arg("eps_lo") = kAsymptoticEpsLo, py::arg("eps_hi") = kAsymptoticEpsHi);

  // theory
  py::class_<SpeedupBounds>(m, "SpeedupBounds")
      .def_readonly("lower", &SpeedupBounds::lower)
      .def_readonly("upper", &SpeedupBounds::upper)
      .def("__iter__", [](const SpeedupBounds& b) { return py::iter(py::make_tuple(b.lower, b.upper)); })
      .def("__repr__", [](const SpeedupBounds& b) {
        return "SpeedupBounds(lower=" + py::repr(py::float_(b.lower)).cast<std::string>() +
               ", upper=" + py::repr(py::float_(b.upper)).cast<std::string>() + ")";
      });
  m.def("nofb_log_infidelity", &nofb_log_infidelity, py::arg("t"), py::arg("n"), py::arg("gamma") = 1.0);
  m.def("mean_time_nofb", &mean_time_nofb, py::arg("epsilon"), py::arg("gamma") = 1.0);
  m.def(
      "log_infidelity_rate", [](const DiagonalState& s, double g) { return log_infidelity_rate(s, g).value; },
      py::arg("state"), py::arg("gamma") = 1.0);
  m.def(
      "permutation_averaged_rate",
      [](const DiagonalState& s, double g) { return permutation_averaged_rate(s, g).value; }, py::arg("state"),
      py::arg("gamma") = 1.0);
  m.def("zsum_bounds", &zsum_bounds, py::arg("delta"), py::arg("n"));
  m.def("speedup_bounds_lo", &speedup_bounds_lo, py::arg("n"));
  m.def("speedup_bounds_rp", &speedup_bounds_rp, py::arg("n"));
  m.def("two_level_state", &two_level_state, py::arg("n"), py::arg("delta"));
  m.def("flat_state", &flat_state, py::arg("n"), py::arg("delta"));
  m.def("mean_random_hamming_distance", &mean_random_hamming_distance, py::arg("n"));
  m.def(
      "linear_trajectory_state",
      [](std::vector<double> records, double gamma) {
        RecordAccumulator acc(static_cast<int>(records.size()));
        acc.add({std::vector<double>(records.size(), 0.0), records}, 0.0);
        return linear_trajectory_state(acc, gamma);
      },
      py::arg("records"), py::arg("gamma") = 1.0);
  m.def(
      "verify_identities",
      [](std::vector<std::size_t> dims) { return identities_report(dims).dump(); }, py::arg("dims"),
      "JSON report of the exact permutation-group sums");
}
