// Python bindings for the main operations: answer extraction and equality,
// voting, equilibrium filtering, prompt rendering, scripted/live backends,
// the strategy runners, and the accuracy simulator.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nashcot/bench.hpp"
#include "nashcot/dataset.hpp"
#include "nashcot/engine.hpp"
#include "nashcot/simulator.hpp"

namespace py = pybind11;
using namespace nashcot;

namespace {

std::optional<CanonicalAnswer> py_extract(const std::string& text, TaskKind kind,
                                          std::optional<int> options) {
    Extraction extraction = extract(text, kind, options);
    return extraction.answer;
}

py::dict result_to_dict(const StrategyResult& result) {
    py::module_ json = py::module_::import("json");
    return json.attr("loads")(to_json(result).dump());
}

Trajectory py_trajectory(std::optional<CanonicalAnswer> guided,
                         std::vector<std::optional<CanonicalAnswer>> batch) {
    return make_trajectory(std::move(guided), std::move(batch));
}

}  // namespace

PYBIND11_MODULE(nashcot, m) {
    m.doc() = "template-guided multi-path decoding with equilibrium answer filtering";
    m.attr("__version__") = "0.1.0";

    py::enum_<TaskKind>(m, "TaskKind")
        .value("NUMERIC", TaskKind::Numeric)
        .value("MULTIPLE_CHOICE", TaskKind::MultipleChoice)
        .value("BINARY", TaskKind::Binary)
        .value("FREE_FORM", TaskKind::FreeForm);

    py::enum_<Strategy>(m, "Strategy")
        .value("ZERO_SHOT", Strategy::ZeroShot)
        .value("ZERO_SHOT_COT", Strategy::ZeroShotCot)
        .value("SELF_CONSISTENCY", Strategy::SelfConsistency)
        .value("NASH_COT", Strategy::NashCot);

    py::class_<CanonicalAnswer>(m, "CanonicalAnswer")
        .def(py::init([](TaskKind kind, const std::string& value) {
                 auto canon = canonicalize(kind, value);
                 if (!canon) throw py::value_error("no valid payload for this kind");
                 return *canon;
             }),
             py::arg("kind"), py::arg("value"))
        .def_readonly("kind", &CanonicalAnswer::kind)
        .def_readonly("value", &CanonicalAnswer::value)
        .def("equals",
             [](const CanonicalAnswer& self, const CanonicalAnswer& other) {
                 return canonical_equal(self, other);
             })
        .def("__repr__", [](const CanonicalAnswer& self) {
            return "CanonicalAnswer(" + std::string(to_string(self.kind)) + ", '" + self.value +
                   "')";
        });

    m.def(
        "canonicalize",
        [](TaskKind kind, const std::string& raw) { return canonicalize(kind, raw); },
        py::arg("kind"), py::arg("raw"),
        "Normalize a raw payload; None when it holds no valid answer.");
    m.def("canonical_equal", &canonical_equal, py::arg("a"), py::arg("b"));
    m.def("extract", &py_extract, py::arg("text"), py::arg("kind"),
          py::arg("options") = std::nullopt,
          "Parse a completion into a CanonicalAnswer; None means abstention.");
    m.def("majority_vote", &majority_vote, py::arg("answers"));

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init(&py_trajectory), py::arg("guided"), py::arg("batch"));
    m.def(
        "filter",
        [](const std::vector<Trajectory>& trajectories) { return filter(trajectories); },
        py::arg("trajectories"),
        "Equilibrium filtering over [guided, batch] trajectories.");

    py::class_<PlayerTemplate>(m, "PlayerTemplate")
        .def(py::init([](int id, const std::string& name, const std::string& description) {
                 return PlayerTemplate{id, name, description};
             }),
             py::arg("id"), py::arg("name"), py::arg("description"))
        .def_readonly("id", &PlayerTemplate::id)
        .def_readonly("name", &PlayerTemplate::name)
        .def_readonly("description", &PlayerTemplate::description);

    py::class_<PlayerRegistry>(m, "PlayerRegistry")
        .def_static("builtin", [] { return builtin_registry(); })
        .def_static("load", &load_registry, py::arg("path"))
        .def("without", &PlayerRegistry::without, py::arg("name"))
        .def_property_readonly("players",
                               [](const PlayerRegistry& self) { return self.players; })
        .def("__len__", [](const PlayerRegistry& self) { return self.size(); });

    py::class_<Question>(m, "Question")
        .def(py::init([](const std::string& id, const std::string& text, TaskKind kind,
                         const std::string& gold, std::vector<std::string> options) {
                 Question q;
                 q.id = id;
                 q.text = text;
                 q.kind = kind;
                 q.options = std::move(options);
                 auto canon = canonicalize(kind, gold);
                 if (!canon) throw py::value_error("gold does not parse under this kind");
                 q.gold = *canon;
                 q.validate();
                 return q;
             }),
             py::arg("id"), py::arg("text"), py::arg("kind"), py::arg("gold"),
             py::arg("options") = std::vector<std::string>{})
        .def_readonly("id", &Question::id)
        .def_readonly("text", &Question::text)
        .def_readonly("kind", &Question::kind);

    py::class_<EngineConfig>(m, "EngineConfig")
        .def(py::init<>())
        .def_readwrite("n_outer", &EngineConfig::n_outer)
        .def_readwrite("n_mini", &EngineConfig::n_mini)
        .def_readwrite("sc_paths", &EngineConfig::sc_paths)
        .def_readwrite("temperature", &EngineConfig::temperature)
        .def_readwrite("seed", &EngineConfig::seed)
        .def_readwrite("accumulate_batches", &EngineConfig::accumulate_batches);
    m.def("nash_logical_paths", &nash_logical_paths, py::arg("config"));

    py::class_<Backend, std::shared_ptr<Backend>>(m, "Backend");
    py::class_<ScriptedBackend, Backend, std::shared_ptr<ScriptedBackend>>(m, "ScriptedBackend")
        .def_static(
            "from_queue",
            [](std::vector<std::string> responses, double latency_ms) {
                return std::shared_ptr<ScriptedBackend>(
                    ScriptedBackend::from_queue(std::move(responses), latency_ms));
            },
            py::arg("responses"), py::arg("fixed_latency_ms") = 0.0)
        .def_static(
            "from_callback",
            [](std::function<std::string(std::string)> callback, double latency_ms) {
                auto generator = [callback =
                                      std::move(callback)](const CompletionRequest& request) {
                    py::gil_scoped_acquire gil;
                    return callback(request.messages.back().text);
                };
                return std::shared_ptr<ScriptedBackend>(
                    ScriptedBackend::from_generator(generator, latency_ms));
            },
            py::arg("callback"), py::arg("fixed_latency_ms") = 0.0,
            "Scripted backend driven by a python callable over the last message text.")
        .def("calls_served", &ScriptedBackend::calls_served);

    py::class_<HttpBackendConfig>(m, "HttpBackendConfig")
        .def(py::init<>())
        .def_readwrite("base_url", &HttpBackendConfig::base_url)
        .def_readwrite("model", &HttpBackendConfig::model)
        .def_readwrite("api_key", &HttpBackendConfig::api_key)
        .def_readwrite("max_retries", &HttpBackendConfig::max_retries);
    py::class_<HttpBackend, Backend, std::shared_ptr<HttpBackend>>(m, "HttpBackend")
        .def(py::init<HttpBackendConfig>(), py::arg("config"));

    m.def(
        "run_strategy",
        [](Strategy strategy, const Question& question, std::shared_ptr<Backend> backend,
           const EngineConfig& config, std::optional<PlayerRegistry> registry) {
            py::gil_scoped_release release;
            StrategyResult result = run_strategy(strategy, question, *backend, config,
                                                 registry ? *registry : builtin_registry());
            py::gil_scoped_acquire acquire;
            return result_to_dict(result);
        },
        py::arg("strategy"), py::arg("question"), py::arg("backend"),
        py::arg("config") = EngineConfig{}, py::arg("registry") = std::nullopt,
        "Run one strategy on one question; returns the audit record as a dict.");

    m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("kind_hint") = std::nullopt);
    m.def("sample", &sample, py::arg("questions"), py::arg("n"), py::arg("seed"));

    // simulator
    py::class_<sim::PathModel>(m, "PathModel")
        .def(py::init([](int alphabet, double p_correct) {
                 return sim::PathModel{alphabet, p_correct};
             }),
             py::arg("alphabet"), py::arg("p_correct"));
    py::class_<sim::TemplateModel>(m, "TemplateModel")
        .def(py::init([](double p_match, double p_guided, double p_misled) {
                 return sim::TemplateModel{p_match, p_guided, p_misled};
             }),
             py::arg("p_match"), py::arg("p_correct_guided"), py::arg("p_correct_misled"));
    py::class_<sim::SimReport>(m, "SimReport")
        .def_readonly("strategy", &sim::SimReport::strategy)
        .def_readonly("path_budget", &sim::SimReport::path_budget)
        .def_readonly("trials", &sim::SimReport::trials)
        .def_readonly("accuracy", &sim::SimReport::accuracy)
        .def_readonly("ci_half_width", &sim::SimReport::ci_half_width)
        .def_readonly("seed", &sim::SimReport::seed);

    m.def("exact_vote_accuracy", &sim::exact_vote_accuracy, py::arg("model"), py::arg("k"));
    m.def("simulate_self_consistency", &sim::simulate_self_consistency, py::arg("model"),
          py::arg("k"), py::arg("trials"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("simulate_nash", &sim::simulate_nash, py::arg("model"), py::arg("template_model"),
          py::arg("n_outer"), py::arg("n_mini"), py::arg("trials"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
}
