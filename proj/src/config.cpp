#include "chop/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "chop/error.hpp"
#include "chop/serialization.hpp"

namespace chop {

Protocol parse_protocol(const std::string& name) {
  if (name == "topk") return Protocol::kTopK;
  if (name == "bullseye") return Protocol::kBullseye;
  throw Error(ErrorCode::kProtocolUnknown, "'" + name + "' (expected topk or bullseye)");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void invalid(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kConfigInvalid, "bad value for " + key + ": '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) invalid(key, value);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    invalid(key, value);
  }
  if (used != value.size()) invalid(key, value);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter integer(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

Setter integer_at(std::function<int&(ExperimentConfig&)> field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { field(c) = parse_number<int>(k, v); };
}

Setter real_at(std::function<double&(ExperimentConfig&)> field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { field(c) = parse_real(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"theta_count", integer_at([](ExperimentConfig& c) -> int& { return c.train.theta_count; })},
      {"activation_fraction", real_at([](ExperimentConfig& c) -> double& { return c.train.activation_fraction; })},
      {"nms_radius", real_at([](ExperimentConfig& c) -> double& { return c.train.nms_radius; })},
      {"neighborhood_radius", real_at([](ExperimentConfig& c) -> double& { return c.train.neighborhood_radius; })},
      {"inhibition_radius", real_at([](ExperimentConfig& c) -> double& { return c.train.inhibition_radius; })},
      {"sigma", real_at([](ExperimentConfig& c) -> double& { return c.train.sigma; })},
      {"max_layers", integer_at([](ExperimentConfig& c) -> int& { return c.train.max_layers; })},
      {"jobs", integer_at([](ExperimentConfig& c) -> int& { return c.train.jobs; })},
      {"seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.train.seed = parse_number<std::uint64_t>(k, v);
       }},
      {"gabor.kernel_size", integer_at([](ExperimentConfig& c) -> int& { return c.train.gabor.kernel_size; })},
      {"gabor.wavelength", real_at([](ExperimentConfig& c) -> double& { return c.train.gabor.wavelength; })},
      {"gabor.envelope_sigma", real_at([](ExperimentConfig& c) -> double& { return c.train.gabor.envelope_sigma; })},
      {"gabor.aspect_ratio", real_at([](ExperimentConfig& c) -> double& { return c.train.gabor.aspect_ratio; })},
      {"gabor.phase", real_at([](ExperimentConfig& c) -> double& { return c.train.gabor.phase; })},
      {"clustering.k_max", integer_at([](ExperimentConfig& c) -> int& { return c.train.clustering.k_max; })},
      {"clustering.max_iters", integer_at([](ExperimentConfig& c) -> int& { return c.train.clustering.max_iters; })},
      {"clustering.bin_width", real_at([](ExperimentConfig& c) -> double& { return c.train.clustering.bin_width; })},
      {"clustering.min_weight", real_at([](ExperimentConfig& c) -> double& { return c.train.clustering.min_weight; })},
      {"clustering.min_samples",
       integer_at([](ExperimentConfig& c) -> int& { return c.train.clustering.min_samples; })},
      {"miner.beam", integer_at([](ExperimentConfig& c) -> int& { return c.train.miner.beam; })},
      {"miner.num_best", integer_at([](ExperimentConfig& c) -> int& { return c.train.miner.num_best; })},
      {"miner.best_part_size", integer_at([](ExperimentConfig& c) -> int& { return c.train.miner.best_part_size; })},
      {"miner.min_seed_frequency",
       integer_at([](ExperimentConfig& c) -> int& { return c.train.miner.min_seed_frequency; })},
      {"experiment.dataset",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset = v; }},
      {"experiment.output", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output = v; }},
      {"split.per_category", integer(&ExperimentConfig::per_category)},
      {"split.seed", integer(&ExperimentConfig::split_seed)},
      {"retrieval.protocol",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.protocol = parse_protocol(v); }},
      {"retrieval.k", integer(&ExperimentConfig::k)},
      {"retrieval.dimension", integer(&ExperimentConfig::dimension)},
      {"retrieval.layer", integer(&ExperimentConfig::descriptor_layer)},
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::kConfigInvalid, "line " + std::to_string(number) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kConfigInvalid, "line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  std::string name = key;
  if (name.rfind("train.", 0) == 0) name = name.substr(6);
  const auto& table = setters();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::kConfigInvalid, "unknown key '" + key + "'");
  it->second(config, key, value);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kConfigInvalid, "config file not found: " + path.string());
  }
  ExperimentConfig config;
  for (const auto& [key, value] : parse_key_values(read_text(path))) apply_setting(config, key, value);
  return config;
}

}  // namespace chop
