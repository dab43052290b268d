#pragma once

#include <filesystem>
#include <string>

#include "dbaug/model/model.hpp"

namespace dbaug::model {

inline constexpr int kCheckpointVersion = 1;

/// JSON document: format tag and version, hyperparameters, vocabulary and
/// every parameter array. Doubles are written with round-trip precision, so
/// a reload reproduces every value exactly.
std::string serialize(const Model& m);
Model deserialize(const std::string& text);

void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace dbaug::model
