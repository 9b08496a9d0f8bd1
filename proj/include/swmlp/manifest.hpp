#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace swmlp {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written once per CLI run.
class Manifest {
public:
  explicit Manifest(std::string subcommand);

  void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  nlohmann::ordered_json& extra() { return extra_; }

  nlohmann::ordered_json to_json() const;
  /// Stamps the wall-clock duration since construction and writes the file.
  void write(const std::filesystem::path& path) const;

private:
  std::string subcommand_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
  std::chrono::steady_clock::time_point start_;
};

/// `<file>.manifest.json` next to a primary output.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace swmlp
