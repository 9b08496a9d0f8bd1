#include "swmlp/checkpoint.hpp"

#include "json.hpp"
#include "swmlp/errors.hpp"
#include "swmlp/text_io.hpp"

namespace swmlp {

using nlohmann::ordered_json;

namespace {

std::vector<std::string> block_names(nn::Architecture arch) {
  if (arch == nn::Architecture::Swmlp)
    return {"embed_1", "embed_2", "embed_3", "shared", "head_1", "head_2",
            "head_3",  "head_4",  "head_5",  "output"};
  return {"layer_1", "layer_2", "layer_3", "layer_4", "layer_5", "output"};
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  const auto arch = nn::architecture_of(ck.model);
  ordered_json j;
  j["format"] = "swmlp-checkpoint";
  j["version"] = kCheckpointVersion;
  j["architecture"] = nn::architecture_name(arch);
  std::visit([&](const auto& m) { j["activation"] = nn::activation_name(m.activation); }, ck.model);
  j["scheme"] = scheme_name(ck.scheme.scheme);
  j["pup_offsets"] = {ck.scheme.pup_near, ck.scheme.pup_far};

  const auto names = block_names(arch);
  ordered_json blocks = ordered_json::array();
  std::vector<const nn::DenseLayer*> layers;
  std::visit([&](const auto& m) { layers = m.blocks(); }, ck.model);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = *layers[i];
    ordered_json b;
    b["name"] = names[i];
    b["inputs"] = l.inputs();
    b["outputs"] = l.outputs();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    b["weights"] = w;
    b["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    blocks.push_back(std::move(b));
  }
  j["blocks"] = std::move(blocks);
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text, const std::string& source_name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source_name, 1, e.what());
  }
  try {
    if (j.at("format") != "swmlp-checkpoint") throw ParseError(source_name, 1, "not a checkpoint");
    if (j.at("version") != kCheckpointVersion)
      throw ParseError(source_name, 1, "unsupported checkpoint version " + j.at("version").dump());

    const auto arch_name = j.at("architecture").get<std::string>();
    nn::Architecture arch;
    if (arch_name == "swmlp") arch = nn::Architecture::Swmlp;
    else if (arch_name == "baseline") arch = nn::Architecture::Baseline;
    else throw ParseError(source_name, 1, "unknown architecture '" + arch_name + "'");

    auto act = nn::parse_activation(j.at("activation").get<std::string>());
    if (!act) throw ParseError(source_name, 1, "unknown activation");
    auto scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (!scheme) throw ParseError(source_name, 1, "unknown scheme");

    Checkpoint ck{nn::init_model(0, arch, *act), {}};
    ck.scheme.scheme = *scheme;
    const auto offsets = j.at("pup_offsets").get<std::vector<int>>();
    if (offsets.size() != 2) throw ParseError(source_name, 1, "pup_offsets needs two entries");
    ck.scheme.pup_near = offsets[0];
    ck.scheme.pup_far = offsets[1];

    std::vector<nn::DenseLayer*> layers;
    std::visit([&](auto& m) { layers = m.blocks(); }, ck.model);
    const auto& blocks = j.at("blocks");
    if (blocks.size() != layers.size())
      throw ParseError(source_name, 1, "expected " + std::to_string(layers.size()) + " blocks");
    const auto names = block_names(arch);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& b = blocks[i];
      auto& l = *layers[i];
      if (b.at("name") != names[i] || b.at("inputs") != l.inputs() || b.at("outputs") != l.outputs())
        throw ParseError(source_name, 1, "block " + std::to_string(i) + " does not match the architecture");
      const auto w = b.at("weights").get<std::vector<double>>();
      const auto bias = b.at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(l.weights.size()) ||
          bias.size() != static_cast<std::size_t>(l.bias.size()))
        throw ParseError(source_name, 1, "block " + names[i] + " has the wrong parameter count");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = w[k++];
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = bias[static_cast<std::size_t>(r)];
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source_name, 1, e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  text::write_file(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(text::read_file(path), path.string());
}

}  // namespace swmlp
