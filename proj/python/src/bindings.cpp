#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "evadebench/attacks.hpp"
#include "evadebench/blending.hpp"
#include "evadebench/corpus.hpp"
#include "evadebench/detectors.hpp"
#include "evadebench/errors.hpp"
#include "evadebench/evaluation.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/pipeline.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/synthetic.hpp"
#include "evadebench/text.hpp"

namespace py = pybind11;
using namespace evadebench;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
json parse(const std::string& s) { return s.empty() ? json::object() : json::parse(s); }

std::string split_corpus(const std::string& jsonl, double ratio, std::uint64_t seed) {
  std::istringstream in(jsonl);
  const auto corpus = assign_splits(ingest_stream(in, "corpus"), ratio, seed);
  std::ostringstream out;
  serialize(corpus, out);
  return out.str();
}

pipeline::Overrides overrides_from(const json& j) {
  pipeline::Overrides o;
  if (j.contains("dataset")) o.dataset = j.at("dataset").get<std::string>();
  o.detectors = j.value("detectors", std::vector<std::string>{});
  o.attacks = j.value("attacks", std::vector<std::string>{});
  o.qpa = j.value("qpa", false);
  o.blend = j.value("blend", std::vector<std::string>{});
  if (j.contains("blend_policy")) o.blend_policy = j.at("blend_policy").get<std::string>();
  if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
  o.trace = j.value("trace", false);
  return o;
}

std::string run_command(const std::string& command, const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir, const std::string& overrides) {
  const auto config = pipeline::load_config(config_path);
  py::gil_scoped_release release;
  return pipeline::run_command(command, config, config_path.parent_path(), out_dir, overrides_from(parse(overrides)))
      .dump();
}

double metric_score(const std::string& detector, const lm::NgramModel& scoring, const std::string& text,
                    const lm::NgramModel* reference) {
  detectors::MetricBackends b{&scoring, reference, &scoring, reference};
  return detectors::MetricDetector(detector, b).score(text);
}

std::vector<std::string> blend_assignment(const std::string& text, const std::vector<std::string>& attack_ids) {
  const auto split = blending::segment_sentences(text);
  return blending::assign_by_policy(split.sentences, attack_ids, blending::Policy::alternate).assignment;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Benchmark harness for detector-evading attacks on machine-generated text";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<BackendError> backend_error(m, "BackendError", error.ptr());
  static py::exception<DegenerateError> degenerate_error(m, "DegenerateError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      PyErr_SetString(input_error.ptr(), e.what());
    } catch (const BackendError& e) {
      PyErr_SetString(backend_error.ptr(), e.what());
    } catch (const DegenerateError& e) {
      PyErr_SetString(degenerate_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    } catch (const json::exception& e) {
      PyErr_SetString(input_error.ptr(), e.what());
    }
  });

  m.def("tokenize", &text::token_strings, py::arg("text"));
  m.def("split_sentences", [](const std::string& t) { return text::split_sentences(t).sentences; }, py::arg("text"));
  m.def("split_corpus", &split_corpus, py::arg("jsonl"), py::arg("ratio") = 0.8, py::arg("seed") = 0,
        "Assign stratified train/test splits to a JSON Lines corpus.");

  m.def(
      "compute_auc",
      [](const std::vector<double>& pos, const std::vector<double>& neg, const std::string& direction) {
        return evaluation::compute_auc(pos, neg, detectors::parse_direction(direction));
      },
      py::arg("pos"), py::arg("neg"), py::arg("direction") = "higher_is_mgt");
  m.def(
      "optimal_f1_threshold",
      [](const std::vector<double>& pos, const std::vector<double>& neg, const std::string& direction) {
        return evaluation::optimal_f1_threshold(pos, neg, detectors::parse_direction(direction));
      },
      py::arg("pos"), py::arg("neg"), py::arg("direction") = "higher_is_mgt");

  m.def("rouge_l", &quality::rouge_l, py::arg("reference"), py::arg("candidate"));
  m.def("flesch_reading_ease", &quality::flesch_reading_ease, py::arg("text"));
  m.def("raft_budget", &attacks::raft_budget, py::arg("word_count"), py::arg("proportion"));
  m.def("blend_assignment", &blend_assignment, py::arg("text"), py::arg("attack_ids"));
  m.def("metric_detector_names", &detectors::metric_detector_names);
  m.def("detector_direction", [](const std::string& d) { return detectors::to_string(detectors::direction_of(d)); },
        py::arg("detector"));

  py::class_<lm::NgramModel>(m, "NgramModel")
      .def_static(
          "train",
          [](const std::vector<std::string>& texts, int order, bool add_unk, const std::string& id) {
            lm::NgramOptions o;
            o.order = order;
            o.add_unk = add_unk;
            o.id = id;
            return lm::NgramModel::train_texts(texts, o);
          },
          py::arg("texts"), py::arg("order") = 2, py::arg("add_unk") = true, py::arg("id") = "ngram")
      .def_static("load", &lm::NgramModel::load, py::arg("path"))
      .def("save", &lm::NgramModel::save, py::arg("path"))
      .def_property_readonly("vocabulary", &lm::NgramModel::vocabulary)
      .def("perplexity", [](const lm::NgramModel& self, const std::string& t) { return quality::perplexity(self, t); })
      .def("score_text", [](const lm::NgramModel& self, const std::string& t) {
        std::vector<py::dict> out;
        for (const auto& s : self.score_text(t).tokens) {
          py::dict d;
          d["token"] = s.token;
          d["logprob"] = s.logprob;
          d["rank"] = s.rank;
          d["entropy"] = s.entropy;
          out.push_back(d);
        }
        return out;
      });

  m.def("metric_score", &metric_score, py::arg("detector"), py::arg("scoring"), py::arg("text"),
        py::arg("reference") = nullptr, "Score one text with a metric detector on n-gram backends.");

  m.def(
      "write_synthetic",
      [](const std::filesystem::path& dir, std::uint64_t seed, std::size_t per_class) {
        synthetic::SyntheticOptions o;
        o.seed = seed;
        o.n_human = o.n_machine = per_class;
        return synthetic::write_benchmark(dir, o).dump();
      },
      py::arg("dir"), py::arg("seed") = 1, py::arg("per_class") = 200);
  m.def("command_names", &pipeline::command_names);
  m.def("run_command", &run_command, py::arg("command"), py::arg("config_path"), py::arg("out_dir"),
        py::arg("overrides") = "");
}
