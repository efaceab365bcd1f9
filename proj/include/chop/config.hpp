#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "chop/vocabulary.hpp"

namespace chop {

enum class Protocol { kTopK, kBullseye };

// Throws protocol-unknown.
Protocol parse_protocol(const std::string& name);

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path output;
  TrainConfig train;
  // Training images taken per category after a seeded shuffle; 0 keeps all.
  int per_category = 0;
  std::uint64_t split_seed = 1;
  Protocol protocol = Protocol::kBullseye;
  int k = 4;
  int dimension = 32;
  // Descriptor layer; 0 picks the top nonempty layer.
  int descriptor_layer = 0;
};

// Flat "section.key" -> value map from TOML-style text: `[section]` headers,
// `key = value` lines, `#` comments, optional double quotes around values.
// Throws config-invalid on malformed lines.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Applies one setting, e.g. "miner.beam" = "32". Keys of the training section
// may be given bare or under [train]. Throws config-invalid.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace chop
