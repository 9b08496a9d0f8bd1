#pragma once

#include <filesystem>
#include <string>

#include "swmlp/association.hpp"
#include "swmlp/neuralnet.hpp"

namespace swmlp {

/// A trained model together with the association scheme it was trained on.
struct Checkpoint {
  nn::Model model;
  SchemeConfig scheme;
};

inline constexpr int kCheckpointVersion = 1;

/// JSON: {"format":"swmlp-checkpoint","version":1,"architecture",...,"blocks":[...]}.
/// Weights are stored row-major per block; doubles round-trip exactly.
std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& text, const std::string& source_name = "<memory>");
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swmlp
