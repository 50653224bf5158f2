#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "ragfb/config.hpp"
#include "ragfb/content_ingest.hpp"
#include "ragfb/embeddings.hpp"
#include "ragfb/errors.hpp"
#include "ragfb/feedback_core.hpp"
#include "ragfb/lms_sync.hpp"
#include "ragfb/pipeline.hpp"
#include "ragfb/retrieval.hpp"
#include "ragfb/rubric_eval.hpp"
#include "ragfb/vector_index.hpp"
#include "ragfb/version.hpp"

namespace py = pybind11;
using namespace ragfb;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

EmbeddingVector vec_from(const std::vector<float>& values) {
    EmbeddingVector v;
    v.values = values;
    return v;
}

}  // namespace

PYBIND11_MODULE(_ragfb, m) {
    m.doc() = "course-grounded quiz feedback pipeline";
    m.attr("__version__") = kPipelineVersion;

    py::register_exception<Error>(m, "PipelineError");

    // content ingest
    py::class_<Section>(m, "Section")
        .def_readonly("section_id", &Section::section_id)
        .def_readonly("heading", &Section::heading)
        .def_readonly("body", &Section::body)
        .def_readonly("module_id", &Section::module_id)
        .def_readonly("week", &Section::week)
        .def("__repr__", [](const Section& s) {
            return "<Section " + s.section_id + " '" + s.heading + "'>";
        });

    py::class_<CourseChunk>(m, "CourseChunk")
        .def_readonly("chunk_id", &CourseChunk::chunk_id)
        .def_readonly("text", &CourseChunk::text)
        .def_readonly("section_ref", &CourseChunk::section_ref)
        .def_readonly("token_estimate", &CourseChunk::token_estimate)
        .def_readonly("char_start", &CourseChunk::char_start)
        .def_readonly("char_end", &CourseChunk::char_end)
        .def("__repr__", [](const CourseChunk& c) {
            return "<CourseChunk " + c.chunk_id + ", " + std::to_string(c.text.size()) +
                   " chars>";
        });

    m.def(
        "parse_html", [](const std::string& html) { return parse_html(html); }, py::arg("html"),
        "Strip markup from an HTML fragment into plain text blocks.");
    m.def("split_sections", &split_sections, py::arg("text"), py::arg("module_id"),
          py::arg("week"), "Split parsed text into numbered sections.");
    m.def(
        "chunk_section",
        [](const Section& section, std::size_t target_chars, std::size_t overlap_chars) {
            return chunk_section(section, ChunkPolicy{target_chars, overlap_chars});
        },
        py::arg("section"), py::arg("target_chars") = 800, py::arg("overlap_chars") = 200);
    m.def("estimate_tokens", &estimate_tokens, py::arg("text"));
    m.def(
        "ingest_course_export",
        [](const std::filesystem::path& path, std::size_t target_chars,
           std::size_t overlap_chars) {
            auto pages = load_course_export(path);
            return ingest_course(pages, ChunkPolicy{target_chars, overlap_chars}).chunks;
        },
        py::arg("path"), py::arg("target_chars") = 800, py::arg("overlap_chars") = 200,
        "Parse, section and chunk a whole course export file.");

    // embeddings
    m.def(
        "local_embed",
        [](const std::string& text, std::size_t dim) { return local_embed(text, dim).values; },
        py::arg("text"), py::arg("dim") = 256,
        "Deterministic hashing embedding, L2-normalised.");

    // vector index
    py::class_<SearchHit>(m, "SearchHit")
        .def_readonly("chunk_id", &SearchHit::chunk_id)
        .def_readonly("score", &SearchHit::score)
        .def_readonly("rank", &SearchHit::rank)
        .def("__repr__", [](const SearchHit& h) {
            return "<SearchHit #" + std::to_string(h.rank) + " " + h.chunk_id + " " +
                   std::to_string(h.score) + ">";
        });

    py::class_<VectorIndex>(m, "VectorIndex")
        .def(py::init([](const std::string& metric) {
                 return VectorIndex(metric_from_string(metric));
             }),
             py::arg("metric") = "euclidean")
        .def(
            "add",
            [](VectorIndex& self, const std::string& chunk_id,
               const std::vector<float>& vector) { self.add(chunk_id, vec_from(vector)); },
            py::arg("chunk_id"), py::arg("vector"))
        .def(
            "search",
            [](const VectorIndex& self, const std::vector<float>& query, int k) {
                return self.search(vec_from(query), k);
            },
            py::arg("query"), py::arg("k") = 4)
        .def("save", &VectorIndex::save, py::arg("path"))
        .def_static("load", &VectorIndex::load, py::arg("path"))
        .def_property_readonly("size", &VectorIndex::size)
        .def_property_readonly("dim", &VectorIndex::dim)
        .def_property_readonly("metric",
                               [](const VectorIndex& self) { return to_string(self.metric()); });

    // feedback parsing
    py::class_<FeedbackRecord>(m, "FeedbackRecord")
        .def_readonly("question_id", &FeedbackRecord::question_id)
        .def_property_readonly(
            "classification",
            [](const FeedbackRecord& r) { return std::string(to_string(r.classification)); })
        .def_readonly("marks_awarded", &FeedbackRecord::marks_awarded)
        .def_readonly("marks_max", &FeedbackRecord::marks_max)
        .def_property_readonly("chapter_ref",
                               [](const FeedbackRecord& r) -> py::object {
                                   if (!r.chapter_ref) return py::none();
                                   return py::make_tuple(r.chapter_ref->section_id,
                                                         r.chapter_ref->heading);
                               })
        .def_readonly("full_text", &FeedbackRecord::full_text)
        .def_readonly("warnings", &FeedbackRecord::warnings)
        .def_property_readonly("mcq_result",
                               [](const FeedbackRecord& r) -> py::object {
                                   if (!r.mcq_result) return py::none();
                                   return py::bool_(*r.mcq_result);
                               })
        .def("to_dict", [](const FeedbackRecord& r) { return to_py(json(r)); });

    m.def("parse_free_text_feedback", &parse_free_text_feedback, py::arg("text"),
          py::arg("marks_max") = 0,
          "Extract classification, marks and chapter citation from feedback text.");
    m.def("parse_mcq_feedback", &parse_mcq_feedback, py::arg("text"));

    // anonymisation
    m.def("anonymize", &anonymize, py::arg("student_id"), py::arg("salt"),
          "Salted 16-hex-digit pseudonym for a student id.");

    // whole-pipeline runs driven by a config file
    m.def(
        "run_feedback",
        [](const std::filesystem::path& config_path,
           const std::filesystem::path& attempts_path,
           const std::vector<std::string>& overrides) {
            PipelineConfig config = load_config(config_path, overrides);
            Pipeline pipeline(config);
            std::string salt = pipeline.salt();
            auto attempts = import_attempts(attempts_path, salt, &pipeline.quiz());
            auto envelopes = pipeline.run(attempts);
            json out{{"envelopes", json::array()}, {"manifest", json(pipeline.manifest())}};
            for (const auto& envelope : envelopes) out["envelopes"].push_back(json(envelope));
            return to_py(out);
        },
        py::arg("config_path"), py::arg("attempts_path"),
        py::arg("overrides") = std::vector<std::string>{},
        "Run the full pipeline over an attempts file; returns envelopes and the manifest.");

    m.def(
        "evaluate_run",
        [](const std::filesystem::path& config_path,
           const std::filesystem::path& attempts_path, const std::filesystem::path& gold_path,
           const std::filesystem::path& judgments_path,
           const std::vector<std::string>& overrides) {
            PipelineConfig config = load_config(config_path, overrides);
            Pipeline pipeline(config);
            std::string salt = pipeline.salt();
            auto attempts = import_attempts(attempts_path, salt, &pipeline.quiz());
            auto envelopes = pipeline.run(attempts);
            return to_py(pipeline.evaluate(envelopes, gold_path, judgments_path));
        },
        py::arg("config_path"), py::arg("attempts_path"), py::arg("gold_path"),
        py::arg("judgments_path"), py::arg("overrides") = std::vector<std::string>{},
        "Run the pipeline, then score the free-text half against gold and judgments.");
}
