#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "acgen/corpus/dataset.hpp"
#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/evaluation/metrics.hpp"
#include "acgen/pipeline/config.hpp"
#include "acgen/pipeline/pipeline.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using nlohmann::json;

namespace {

// JSON crosses the boundary through the stdlib json module; the payloads are small.
py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::list criteria_to_py(const std::vector<acgen::corpus::AcceptanceCriterion>& acs) {
  py::list out;
  for (const auto& ac : acs) out.append(to_py(acgen::corpus::to_json(ac)));
  return out;
}

std::vector<acgen::corpus::AcceptanceCriterion> criteria_from_py(const py::iterable& items) {
  std::vector<acgen::corpus::AcceptanceCriterion> acs;
  for (const auto& it : items) acs.push_back(acgen::corpus::criterion_from_json(from_py(it)));
  return acs;
}

py::dict prf(const acgen::evaluation::Prf& p) { return py::dict("precision"_a = p.precision, "recall"_a = p.recall, "f1"_a = p.f1); }

acgen::evaluation::RougeMode rouge_mode(const std::string& s) {
  if (s == "1") return acgen::evaluation::RougeMode::N1;
  if (s == "2") return acgen::evaluation::RougeMode::N2;
  if (s == "L" || s == "l") return acgen::evaluation::RougeMode::L;
  throw acgen::Error(acgen::ErrorCode::InvalidArgument, "rouge mode must be 1, 2 or L");
}

class PyPipeline {
 public:
  PyPipeline(const std::filesystem::path& config, std::optional<std::filesystem::path> run_dir,
             std::optional<std::filesystem::path> cache_dir, std::optional<std::string> cache_mode)
      : p_(make(config, run_dir, cache_dir, cache_mode)) {}

  std::string run_id() const { return p_.run_id(); }
  std::filesystem::path run_path(const std::string& run_id) const { return p_.run_path(run_id.empty() ? p_.run_id() : run_id); }
  py::object run(const std::string& command, const std::string& run_id) {
    json out;
    {
      py::gil_scoped_release release;
      if (command == "index") out = p_.cmd_index();
      else if (command == "generate") out = p_.cmd_generate();
      else if (command == "polish") out = p_.cmd_polish(run_id.empty() ? p_.run_id() : run_id);
      else if (command == "eval-retrieval") out = p_.cmd_eval_retrieval();
      else if (command == "eval-acs") out = p_.cmd_eval_acs(run_id.empty() ? p_.run_id() : run_id);
      else if (command == "report") out = p_.cmd_report(run_id.empty() ? p_.run_id() : run_id);
      else if (command == "all") out = p_.cmd_all();
      else throw acgen::Error(acgen::ErrorCode::InvalidArgument, "unknown command '" + command + "'");
    }
    return to_py(out);
  }

 private:
  static acgen::pipeline::PipelineConfig make(const std::filesystem::path& config,
                                              const std::optional<std::filesystem::path>& run_dir,
                                              const std::optional<std::filesystem::path>& cache_dir,
                                              const std::optional<std::string>& cache_mode) {
    auto cfg = acgen::pipeline::load_config(config);
    if (run_dir) cfg.run_dir = *run_dir;
    if (cache_dir) cfg.cache_dir = *cache_dir;
    if (cache_mode) cfg.cache_mode = acgen::providers::cache_mode_from_string(*cache_mode);
    return cfg;
  }

  acgen::pipeline::Pipeline p_;
};

}  // namespace

PYBIND11_MODULE(_acgen, m) {
  m.doc() = "Acceptance criteria generation, scoring and evaluation";

  // Leaked on purpose: the translator may run during interpreter shutdown.
  static py::handle error = py::exception<acgen::Error>(m, "Error").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const acgen::Error& e) {
      py::object exc = error(e.what());
      exc.attr("code") = std::string(acgen::to_string(e.code()));
      exc.attr("details") = to_py(e.details());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("parse_gherkin", [](const std::string& text) { return criteria_to_py(acgen::corpus::parse_gherkin(text)); },
        "text"_a);
  m.def("render", [](const py::iterable& acs) { return acgen::corpus::render(criteria_from_py(acs)); }, "acs"_a);
  m.def("atomicize", [](const py::iterable& acs) { return criteria_to_py(acgen::corpus::atomicize_all(criteria_from_py(acs))); },
        "acs"_a);

  m.def("ranking_metrics",
        [](const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k) {
          return to_py(acgen::evaluation::to_json(acgen::evaluation::ranking_metrics(ranked, relevant, k)));
        },
        "ranked"_a, "relevant"_a, "k"_a);
  m.def("rouge",
        [](const std::string& cand, const std::string& ref, const std::string& mode) {
          return prf(acgen::evaluation::rouge(cand, ref, rouge_mode(mode)));
        },
        "candidate"_a, "reference"_a, "mode"_a = "L");
  m.def("bleu", &acgen::evaluation::bleu, "candidate"_a, "references"_a);
  m.def("levenshtein", [](const std::string& a, const std::string& b) { return acgen::evaluation::levenshtein(a, b); },
        "a"_a, "b"_a);

  m.def("load_dataset_json", [](const std::filesystem::path& path) {
    return to_py(acgen::corpus::dataset_to_json(acgen::corpus::load_dataset(path)));
  }, "path"_a);
  m.def("default_prompts", [] { return to_py(acgen::pipeline::to_json(acgen::pipeline::Prompts{})); });

  py::class_<PyPipeline>(m, "Pipeline")
      .def(py::init<const std::filesystem::path&, std::optional<std::filesystem::path>,
                    std::optional<std::filesystem::path>, std::optional<std::string>>(),
           "config"_a, "run_dir"_a = py::none(), "cache_dir"_a = py::none(), "cache_mode"_a = py::none())
      .def_property_readonly("run_id", &PyPipeline::run_id)
      .def("run_path", &PyPipeline::run_path, "run_id"_a = "")
      .def("run", &PyPipeline::run, "command"_a, "run_id"_a = "",
           "Runs one stage ('index', 'generate', 'polish', 'eval-retrieval', 'eval-acs', 'report' or 'all').");
}
