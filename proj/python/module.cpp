// pybind11 bindings for the main operations: corpus generation, signal
// preprocessing, embedding, training, sampling and evaluation metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gazediff/pipeline.hpp"
#include "gazediff/signal.hpp"

namespace py = pybind11;
using namespace gazediff;

PYBIND11_MODULE(_gazediff, m) {
  m.doc() = "user-specific eye-movement synthesis via conditional diffusion";

  py::class_<GazeSequence>(m, "GazeSequence")
      .def(py::init<>())
      .def_readwrite("sample_rate", &GazeSequence::sample_rate)
      .def_readwrite("x", &GazeSequence::x)
      .def_readwrite("y", &GazeSequence::y)
      .def_readwrite("valid", &GazeSequence::valid)
      .def("__len__", &GazeSequence::length);

  py::class_<VelocitySequence>(m, "VelocitySequence")
      .def(py::init<>())
      .def_readwrite("sample_rate", &VelocitySequence::sample_rate)
      .def_readwrite("vx", &VelocitySequence::vx)
      .def_readwrite("vy", &VelocitySequence::vy)
      .def("__len__", &VelocitySequence::length);

  py::class_<corpus::CorpusConfig>(m, "CorpusConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &corpus::CorpusConfig::n_users)
      .def_readwrite("sequences_per_user", &corpus::CorpusConfig::sequences_per_user)
      .def_readwrite("sequence_length", &corpus::CorpusConfig::sequence_length)
      .def_readwrite("sample_rate", &corpus::CorpusConfig::sample_rate)
      .def_readwrite("seed", &corpus::CorpusConfig::seed);

  py::class_<corpus::Corpus>(m, "Corpus")
      .def_readonly("config", &corpus::Corpus::config)
      .def("sequence",
           [](const corpus::Corpus& c, int user, int k) {
             return c.sequences.at(static_cast<std::size_t>(user))
                 .at(static_cast<std::size_t>(k));
           });

  m.def("generate_corpus", &corpus::generate, py::arg("config"));
  m.def("save_corpus", &corpus::save, py::arg("corpus"), py::arg("dir"));
  m.def("load_corpus", &corpus::load, py::arg("dir"));
  m.def("load_csv", &corpus::load_csv, py::arg("path"));
  m.def("save_csv", &corpus::save_csv, py::arg("gaze"), py::arg("path"));

  m.def("savgol_derivative", &signal::savgol_derivative, py::arg("gaze"));
  m.def("preprocess_gaze", &training::preprocess_gaze, py::arg("gaze"));
  m.def("remove_identity", &signal::remove_identity, py::arg("velocity"),
        py::arg("low_rate") = 20.0);
  m.def(
      "highpass_inject",
      [](const GazeSequence& base, const GazeSequence& target, double cutoff) {
        return signal::highpass_inject(base, target, cutoff);
      },
      py::arg("base"), py::arg("target"), py::arg("cutoff") = 20.0);
  m.def("integrate", &signal::integrate, py::arg("velocity"), py::arg("x0"),
        py::arg("y0"));
  m.def("denormalize", &signal::denormalize, py::arg("velocity"));

  py::class_<pipeline::EmbedderCheckpoint>(m, "Embedder")
      .def("embed",
           [](const pipeline::EmbedderCheckpoint& e, const VelocitySequence& v) {
             return embedder::embed(e.config, e.params, v).values;
           });
  m.def("load_embedder", &pipeline::load_embedder, py::arg("path"));

  py::class_<pipeline::DenoiserCheckpoint>(m, "Denoiser");
  m.def("load_denoiser", &pipeline::load_denoiser, py::arg("path"));

  m.def(
      "synthesize",
      [](const pipeline::DenoiserCheckpoint& model,
         const pipeline::EmbedderCheckpoint& emb, const GazeSequence& base,
         const GazeSequence& target, uint64_t seed) {
        diffusion::ConditioningBundle cond;
        cond.observation = training::preprocess_gaze(base);
        cond.user_embedding = embedder::embed(emb.config, emb.params,
                                              training::preprocess_gaze(target));
        const diffusion::DenoiserFn fn =
            [&](const diffusion::Tensor2L& x_t, int t,
                const diffusion::ConditioningBundle& cc) {
              return denoiser::forward(model.config, model.params, x_t, t, cc);
            };
        return diffusion::sample(cond, fn, model.schedule, seed);
      },
      py::arg("model"), py::arg("embedder"), py::arg("base"), py::arg("target"),
      py::arg("seed") = 0);

  m.def(
      "cosine_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        UserEmbedding ea, eb;
        ea.values = a;
        eb.values = b;
        return embedder::cosine_similarity(ea, eb);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "js_divergence",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return eval::js_divergence(p, q);
      },
      py::arg("p"), py::arg("q"));
}
