// SPDX-License-Identifier: Apache-2.0
//
// Python extension. Structured values cross the boundary as JSON text using
// the same encodings as the CLI; the package wrapper converts them to dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "arguagent/grouping.hpp"
#include "arguagent/json_io.hpp"
#include "arguagent/metrics.hpp"
#include "arguagent/scoring.hpp"
#include "arguagent/simulation.hpp"
#include "arguagent/stance.hpp"

namespace py = pybind11;
using namespace arguagent;

namespace {

std::string dump(const Json& j) { return j.dump(); }

const MarkerRuleSet& stance_rules() {
  static const MarkerRuleSet rules = MarkerRuleSet::load();
  return rules;
}

std::vector<StudentResponse> roster_from(const std::string& text) {
  const auto j = parse_json(text, "roster");
  const Json& students = j.is_object() ? j.at("students") : j;
  return validate_class(decode<std::vector<StudentResponse>>(students, "roster"));
}

}  // namespace

PYBIND11_MODULE(_arguagent, m) {
  m.doc() = "ArguAgent core bindings";

  // kept alive for the life of the process; the translator may run late
  static const auto* error = new py::object(py::exception<Error>(m, "ArguAgentError"));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto message = std::string(to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error->ptr(), message.c_str());
    }
  });

  m.def("group_score", [](const std::string& members) {
    const auto v = decode<std::vector<GroupMember>>(parse_json(members), "members");
    return dump(grouping::group_score(v));
  });
  m.def("group_sizes", &grouping::group_sizes, py::arg("class_size"), py::arg("group_size") = 3);
  m.def(
      "form_groups",
      [](const std::string& input, int group_size, std::uint64_t seed, int restarts) {
        const auto in = decode<grouping::GroupingInput>(parse_json(input), "grouping input");
        py::gil_scoped_release release;
        return dump(grouping::form_groups(in, {group_size, seed, restarts}));
      },
      py::arg("input"), py::arg("group_size") = 3, py::arg("seed") = 0, py::arg("restarts") = 5);
  m.def(
      "random_grouping",
      [](const std::string& input, int group_size, std::uint64_t seed) {
        const auto in = decode<grouping::GroupingInput>(parse_json(input), "grouping input");
        return dump(grouping::random_grouping(in, group_size, seed));
      },
      py::arg("input"), py::arg("group_size") = 3, py::arg("seed") = 0);
  m.def(
      "run_simulation",
      [](const std::string& config, int threads) {
        const auto c = decode<sim::SimulationConfig>(parse_json(config), "simulation config");
        py::gil_scoped_release release;
        return dump(sim::run_simulation(c, threads));
      },
      py::arg("config") = "{}", py::arg("threads") = 0);

  m.def(
      "quadratic_weighted_kappa",
      [](const std::vector<int>& a, const std::vector<int>& b, int k) {
        return metrics::quadratic_weighted_kappa(a, b, k);
      },
      py::arg("a"), py::arg("b"), py::arg("k") = 5);
  m.def("krippendorff_alpha_ordinal", [](const std::string& matrix) {
    return metrics::krippendorff_alpha_ordinal(decode<metrics::RatingMatrix>(parse_json(matrix), "rating matrix"));
  });
  m.def("cohens_kappa_nominal", [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return metrics::cohens_kappa_nominal(a, b);
  });
  m.def("agreement_report", [](const std::vector<int>& human, const std::vector<int>& ai) {
    return dump(metrics::agreement_report(human, ai));
  });
  m.def("improvement_decomposition", [](double uncalibrated, double calibrated_small, double calibrated_large) {
    return dump(metrics::improvement_decomposition(uncalibrated, calibrated_small, calibrated_large));
  });

  m.def("classify_stance",
        [](const std::string& claim) { return std::string(to_string(*classify_stance(claim, stance_rules()).category)); });
  m.def(
      "score",
      [](const std::string& roster, const std::string& backend, bool calibrated) {
        const auto students = roster_from(roster);
        const auto prompt = build_prompt(PromptAssets::load().default_task, calibrated);
        auto b = make_backend(backend);
        py::gil_scoped_release release;
        return dump(score_class(students, prompt, *b));
      },
      py::arg("roster"), py::arg("backend") = "heuristic", py::arg("calibrated") = true);
}
