#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dbaug/pipeline/experiment.hpp"

namespace dbaug::cli {

/// Everything a CLI run needs. Each field has a flag of the same name
/// (dashes for underscores); a config file may set any of them.
struct RunConfig {
  std::string corpus;
  std::string checkpoint;
  std::string augmented;
  std::string out_dir = ".";

  // Toy corpus (gen-corpus, or any run without --corpus).
  std::size_t n_per_class = 100;

  model::ModelConfig model;
  training::TrainConfig train;
  boundary::ModificationConfig modification;
  decoding::DecodingStrategy strategy;
  std::size_t multiplier = 32;
  pipeline::LabelMode label_mode = pipeline::LabelMode::kSoft;
  bool curriculum = false;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double train_fraction = 0.8;
  double low_resource_fraction = 0.01;
  std::size_t floor_per_class = 2;
  pipeline::DownstreamConfig downstream;
  pipeline::AttackConfig attack;
  std::size_t threads = 1;

  void validate() const;
};

/// Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags,
/// missing inputs or checkpoint).
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, const char* const* argv);
/// Same, with explicit streams; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbaug::cli
