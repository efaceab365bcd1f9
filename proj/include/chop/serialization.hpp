#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chop/graphs.hpp"
#include "chop/imaging.hpp"
#include "chop/relations.hpp"
#include "chop/retrieval.hpp"
#include "chop/vocabulary.hpp"

namespace chop {

inline constexpr int kVocabularyFormatVersion = 1;
inline constexpr int kInferenceFormatVersion = 1;

std::string vocabulary_to_json(const Vocabulary& vocab);
// Throws artifact-corrupt on malformed input, version-mismatch on a different
// format version.
Vocabulary vocabulary_from_json(const std::string& text);

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
// Throws missing-artifacts when the file does not exist.
Vocabulary load_vocabulary(const std::filesystem::path& path);

std::string inference_to_json(const InferenceGraph& graph);
InferenceGraph inference_from_json(const std::string& text);

// Training graphs plus the ground-truth tags of each image, kept so later
// commands can compute shareability without the images.
struct TrainingRecord {
  std::string id;
  std::string category;
  std::string object_id;
  std::string view_id;
  int category_label = 1;
  double infer_ms = 0.0;
  InferenceGraph graph;
};

std::string training_to_json(std::span<const TrainingRecord> records);
std::vector<TrainingRecord> training_from_json(const std::string& text);

std::string features_csv(const std::string& image_id, std::span<const Feature> features, bool header = true);
std::string modes_csv(const Vocabulary& vocab);
std::string descriptors_csv(std::span<const ShapeDescriptor> descriptors);
std::string ranked_csv(std::span<const RetrievalResult> results);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace chop
