#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mwsla/config.hpp"
#include "mwsla/errors.hpp"
#include "mwsla/experiment.hpp"
#include "mwsla/metrics.hpp"
#include "mwsla/offline.hpp"
#include "mwsla/policies.hpp"
#include "mwsla/projection.hpp"
#include "mwsla/workloads.hpp"

namespace py = pybind11;
using namespace mwsla;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

LoadMatrix to_loads(const Array& a) {
  if (a.ndim() != 2) throw StructuralError("loads must be a 2-D array (steps x users)");
  LoadMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  auto r = a.unchecked<2>();
  for (py::ssize_t k = 0; k < a.shape(0); ++k) {
    for (py::ssize_t i = 0; i < a.shape(1); ++i) {
      m.at(static_cast<std::size_t>(k), static_cast<std::size_t>(i)) = r(k, i);
    }
  }
  return m;
}

Array to_array(const LoadMatrix& m) {
  Array out({m.steps(), m.users()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

// Columns of a stride-1 trace as numpy arrays.
py::dict trace_dict(const SimulationTrace& t) {
  const std::size_t n = t.users(), k = t.records();
  Array alloc({k, n}), work({k, n}), queue({k, n});
  py::array_t<std::size_t> steps(k);
  for (std::size_t r = 0; r < k; ++r) {
    const auto v = t.record(r);
    steps.mutable_at(r) = v.t;
    std::copy(v.allocation.begin(), v.allocation.end(), alloc.mutable_data() + r * n);
    std::copy(v.work.begin(), v.work.end(), work.mutable_data() + r * n);
    std::copy(v.queue_after.begin(), v.queue_after.end(), queue.mutable_data() + r * n);
  }
  py::dict d;
  d["policy"] = t.policy();
  d["steps"] = steps;
  d["allocation"] = alloc;
  d["work"] = work;
  d["queue"] = queue;
  d["total_work"] = t.total_work();
  d["final_queue"] = std::vector<double>(t.final_queue().begin(), t.final_queue().end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_mwsla, m) {
  m.doc() = "Multiplicative-weight SLA allocation: simulator, policies and offline optimum";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<DegenerateSlaError>(m, "DegenerateSlaError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def(
      "project",
      [](const std::vector<double>& y, double epsilon) {
        return project_truncated_simplex(y, epsilon).x;
      },
      py::arg("y"), py::arg("epsilon"),
      "KL projection of a positive vector onto the truncated simplex.");
  m.def(
      "kl_divergence",
      [](const std::vector<double>& x, const std::vector<double>& y) { return kl_divergence(x, y); },
      py::arg("x"), py::arg("y"));

  m.def(
      "offline_optimum",
      [](const Array& loads, double epsilon) { return offline_optimal_value(to_loads(loads), epsilon); },
      py::arg("loads"), py::arg("epsilon") = 0.0);

  m.def(
      "simulate",
      [](const std::string& policy, const Array& loads, const std::vector<double>& sla,
         std::map<std::string, std::string> params) {
        const SlaVector s(sla);
        const LoadMatrix l = to_loads(loads);
        if (policy == "pg" || policy == "restpg") {
          const double eps = params.count("epsilon") ? std::stod(params["epsilon"]) : 0.02;
          return trace_dict(proportional_greedy(l, s, policy == "pg" ? 1.0 : 1.0 - eps));
        }
        if (policy == "greedy") return trace_dict(simple_greedy(l, 1.0));
        auto p = make_policy({policy, policy, std::move(params)}, s);
        MatrixLoadSource src(l);
        return trace_dict(simulate(*p, src, s, l.steps()));
      },
      py::arg("policy"), py::arg("loads"), py::arg("sla"),
      py::arg("params") = std::map<std::string, std::string>{},
      "Runs one policy on a steps x users load array.");

  m.def(
      "synthetic_gamma",
      [](const std::vector<double>& sla, std::size_t steps, std::uint64_t seed, double shape) {
        SyntheticGammaConfig c;
        c.steps = steps;
        c.seed = seed;
        c.shape = shape;
        return to_array(synthetic_gamma(SlaVector(sla), c));
      },
      py::arg("sla") = std::vector<double>{0.2, 0.3, 0.5}, py::arg("steps") = 60000,
      py::arg("seed") = 1, py::arg("shape") = 2000.0);
  m.def(
      "example1", [](std::size_t steps) { return to_array(example1_instance(steps)); },
      py::arg("steps"));
  m.def(
      "read_trace_csv", [](const std::filesystem::path& p) { return to_array(read_trace_csv(p)); },
      py::arg("path"));

  m.def(
      "validate_config",
      [](const std::filesystem::path& path) {
        Diagnostics d;
        try {
          load_config(path, &d);
        } catch (const ConfigError&) {
        }
        return py::make_tuple(d.errors, d.warnings);
      },
      py::arg("path"), "Returns (errors, warnings) for a config file; raises on I/O failure.");
  m.def(
      "run_experiment",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> output_dir) {
        ExperimentConfig c = load_config(path);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        if (output_dir) write_outputs(r, *output_dir);
        py::dict totals;
        for (const auto& p : r.summary.policies) totals[py::str(p.label)] = p.total_work;
        py::dict d;
        d["summary"] = r.summary.to_text();
        d["total_work"] = totals;
        d["offline_optimal_eps0"] = r.summary.offline_optimal_eps0;
        d["offline_optimal_eps"] = r.summary.offline_optimal_eps;
        return d;
      },
      py::arg("config"), py::arg("output_dir") = std::nullopt,
      "Runs a config file; writes the usual outputs when output_dir is given.");
}
