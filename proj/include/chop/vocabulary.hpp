#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chop/graphs.hpp"
#include "chop/imaging.hpp"
#include "chop/miner.hpp"
#include "chop/relations.hpp"

namespace chop {

struct TrainConfig {
  int theta_count = 6;
  GaborParams gabor;
  // Features below this fraction of the image's max response are dropped.
  double activation_fraction = 0.1;
  double nms_radius = 2.0;
  double neighborhood_radius = 5.0;
  ClusteringParams clustering;
  MinerParams miner;
  double inhibition_radius = 2.0;
  double sigma = 0.5;
  // Safety bound on depth; discovery normally stops the loop first.
  int max_layers = 16;
  std::uint64_t seed = 1;
  int jobs = 0;

  // Throws config-invalid on out-of-range values.
  void validate() const;
  // Copy with every real rounded to the precision of the vocabulary file.
  TrainConfig quantized() const;
};

struct VocabularyLayer {
  int layer = 1;
  std::vector<Part> parts;  // label i at index i - 1
  ModeSet modes;
};

struct Vocabulary {
  TrainConfig config;
  std::vector<VocabularyLayer> layers;  // layers[0] is layer 1

  int depth() const { return static_cast<int>(layers.size()); }
  const VocabularyLayer& layer(int l) const { return layers.at(static_cast<std::size_t>(l - 1)); }
  const Part* find_part(int layer, PartLabel label) const;
};

struct LayerStats {
  int layer = 1;
  std::size_t part_count = 0;
  std::size_t mode_count = 0;
  std::size_t realization_count = 0;
  // Mean value of the ten best parts; 0 at layer 1.
  double mean_best_mdl = 0.0;
};

struct TrainingResult {
  Vocabulary vocabulary;
  // Per training image, the object graphs built during learning.
  std::vector<InferenceGraph> training_graphs;
  std::vector<std::string> miner_trace;
  std::vector<LayerStats> stats;
};

// Sorts by value with the miner's tie-break and sets labels 1..n.
std::vector<Part> assign_part_labels(std::vector<Part> parts);

// Greedy sweep in ascending label order: a realization survives unless an
// already surviving one of strictly lower label lies within `radius`. Only
// realizations of the same image interact. Input order is preserved.
std::vector<PartRealization> local_inhibition(std::span<const PartRealization> realizations, double radius);

std::vector<PartRealization> subsample_positions(std::vector<PartRealization> realizations, double sigma);

std::vector<Part> layer_one_parts(int theta_count);

// Thresholded, suppressed Gabor features as layer-1 realizations with ids
// first_id, first_id + 1, ...
std::vector<PartRealization> layer_one_realizations(const ShapeImage& image, const GaborBank& bank,
                                                    const TrainConfig& config, RealizationId first_id = 0);

// Object graph of one image at one layer.
ObjectGraph build_object_graph(std::span<const PartRealization> realizations, const ModeSet& modes, double radius,
                               int layer, const std::string& image_id);

// Mean realization extent per part label; parts without realizations get 0.
void assign_footprints(std::vector<Part>& parts, std::span<const PartRealization> realizations);

// Reals stored in the vocabulary (config, modes, part values, footprints) are
// rounded to the file precision, so a reloaded vocabulary behaves identically.
TrainingResult learn_vocabulary(std::span<const ShapeImage> images, const TrainConfig& requested);

}  // namespace chop
