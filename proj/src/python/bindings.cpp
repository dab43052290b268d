#include <iostream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dbaug/boundary/boundary.hpp"
#include "dbaug/cli/cli.hpp"
#include "dbaug/decoding/decoding.hpp"
#include "dbaug/error.hpp"
#include "dbaug/model/checkpoint.hpp"
#include "dbaug/pipeline/attack.hpp"
#include "dbaug/pipeline/augmentation.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/pipeline/report.hpp"
#include "dbaug/training/losses.hpp"
#include "dbaug/training/trainer.hpp"

namespace py = pybind11;
using namespace dbaug;

namespace {

std::vector<pipeline::CorpusRecord> to_records(const std::vector<std::pair<std::string, std::size_t>>& rows) {
  std::vector<pipeline::CorpusRecord> out;
  for (const auto& [text, label] : rows) out.push_back({text, label});
  return out;
}

decoding::DecodingStrategy strategy(const std::string& name, std::size_t k, std::size_t k_prime,
                                    double threshold, std::size_t max_len) {
  auto s = decoding::strategy_from_name(name);
  if (name == "top_k") s.variant = decoding::TopK{k};
  if (name == "mid_k") s.variant = decoding::MidK{k, k_prime, threshold, false};
  s.max_len = max_len;
  return s;
}

}  // namespace

PYBIND11_MODULE(_dbaug, m) {
  m.doc() = "Boundary-aware text augmentation (C++ core)";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ValueError>(m, "ValueError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_IOError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);

  m.def("version", &pipeline::version);

  m.def(
      "generate_toy_corpus",
      [](std::size_t n_per_class, std::uint64_t seed) {
        std::vector<std::pair<std::string, std::size_t>> out;
        for (auto& r : pipeline::generate_toy_corpus(n_per_class, seed)) out.emplace_back(r.text, r.label);
        return out;
      },
      py::arg("n_per_class"), py::arg("seed"));

  // pybind11 has no caster for std::span, so these take vectors.
  m.def(
      "classification_loss",
      [](const std::vector<double>& predicted, std::size_t true_class, double eps) {
        return training::classification_loss(predicted, true_class, eps);
      },
      py::arg("predicted"), py::arg("true_class"), py::arg("eps"));
  m.def(
      "reconstruction_loss",
      [](const std::vector<std::vector<double>>& steps, const std::vector<model::TokenId>& tokens,
         double eps) { return training::reconstruction_loss(steps, tokens, eps); },
      py::arg("per_step_predictions"), py::arg("true_tokens"), py::arg("eps"));
  m.def("curriculum_steps", &pipeline::curriculum_steps, py::arg("epoch"), py::arg("n0") = 1);

  m.def(
      "mid_k_samples",
      [](const std::vector<double>& dist, std::size_t k, std::size_t k_prime, double threshold,
         std::uint64_t seed, std::size_t draws, bool literal) {
        Rng rng(seed);
        std::vector<std::size_t> out(draws);
        for (auto& t : out) t = decoding::mid_k_sample(dist, k, k_prime, threshold, rng, literal);
        return out;
      },
      py::arg("dist"), py::arg("k"), py::arg("k_prime"), py::arg("threshold"), py::arg("seed"),
      py::arg("draws"), py::arg("literal_pseudocode") = false);
  m.def(
      "greedy_pick", [](const std::vector<double>& dist) { return decoding::greedy_pick(dist); },
      py::arg("dist"));

  m.def(
      "attack_rates",
      [](std::size_t total, std::size_t clean_correct, std::size_t flipped) {
        pipeline::AttackStats s{total, clean_correct, flipped};
        return py::make_tuple(s.clean_accuracy(), s.aua(), s.asr());
      },
      py::arg("total"), py::arg("clean_correct"), py::arg("flipped"),
      "(clean accuracy, AUA, ASR) from attack counts.");

  py::class_<model::Model>(m, "Model")
      .def_static(
          "train",
          [](const std::vector<std::pair<std::string, std::size_t>>& rows, std::size_t epochs1,
             std::size_t epochs2, double lr, std::uint64_t seed) {
            const auto records = to_records(rows);
            const auto vocab = pipeline::build_vocabulary(records);
            model::ModelConfig mc;
            mc.vocab_size = vocab.size();
            mc.num_classes = pipeline::num_classes_of(records);
            training::TrainConfig tc;
            tc.epochs_stage1 = epochs1;
            tc.epochs_stage2 = epochs2;
            tc.learning_rate = lr;
            tc.seed = seed;
            const auto seqs = pipeline::to_sequences(records, vocab);
            py::gil_scoped_release release;
            auto s1 = training::train_stage1(seqs, mc, tc);
            auto s2 = training::train_stage2(seqs, s1.encoder, mc, tc);
            return model::Model{mc, vocab, std::move(s1.encoder), std::move(s1.classifier),
                                std::move(s2.decoder)};
          },
          py::arg("corpus"), py::arg("epochs1") = 50, py::arg("epochs2") = 100,
          py::arg("lr") = 0.5, py::arg("seed") = 1,
          "Both training stages on [(text, label), ...].")
      .def_static("load", [](const std::string& path) { return model::load_checkpoint(path); })
      .def("save", [](const model::Model& self, const std::string& path) {
        model::save_checkpoint(self, path);
      })
      .def_property_readonly("vocab_size", [](const model::Model& self) { return self.vocab.size(); })
      .def_property_readonly("num_classes",
                             [](const model::Model& self) { return self.classifier.num_classes(); })
      .def("encode",
           [](const model::Model& self, const std::string& text) {
             return model::encode(self.vocab.encode(text), self.encoder).values;
           })
      .def("classify",
           [](const model::Model& self, const std::vector<double>& z) {
             return model::classify(model::LatentVector{z}, self.classifier);
           })
      .def("score",
           [](const model::Model& self, const std::string& text) {
             return boundary::score_soft_label(self.vocab.encode(text), self.encoder,
                                               self.classifier);
           })
      .def(
          "modify_latent",
          [](const model::Model& self, const std::vector<double>& z, double lambda,
             std::size_t steps) {
            return boundary::modify_latent(model::LatentVector{z}, self.classifier,
                                           boundary::ModificationConfig{lambda, steps})
                .values;
          },
          py::arg("z"), py::arg("lam") = 0.1, py::arg("steps") = 3)
      .def(
          "augment",
          [](const model::Model& self, const std::string& text, std::size_t steps, double lambda,
             const std::string& strategy_name, std::size_t k, std::size_t k_prime,
             double threshold, std::uint64_t seed) {
            Rng rng(seed);
            auto pair = boundary::augment_sentence(
                self.vocab.encode(text), self,
                boundary::ModificationConfig{lambda, steps},
                strategy(strategy_name, k, k_prime, threshold, self.config.max_len), rng);
            return py::make_tuple(self.vocab.decode(pair.tokens), pair.soft_label);
          },
          py::arg("text"), py::arg("n") = 3, py::arg("lam") = 0.1,
          py::arg("strategy") = "mid_k", py::arg("k") = 10, py::arg("k_prime") = 2,
          py::arg("threshold") = 0.7, py::arg("seed") = 1,
          "Returns (generated text, soft label).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args, std::cout, std::cerr);
      },
      py::arg("args"), "Runs the command-line tool in-process; returns its exit code.");
}
