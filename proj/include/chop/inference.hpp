#pragma once

#include <map>
#include <span>
#include <vector>

#include "chop/graphs.hpp"
#include "chop/imaging.hpp"
#include "chop/vocabulary.hpp"

namespace chop {

// Per-layer map from a part's center label to the labels of parts rooted there.
class PartIndex {
 public:
  explicit PartIndex(const VocabularyLayer& layer);

  // Ascending part labels whose center is one of the graph's node labels.
  std::vector<PartLabel> candidates(const ObjectGraph& graph) const;

 private:
  std::map<PartLabel, std::vector<PartLabel>> by_center_;
};

// Matches the vocabulary bottom-up on one image using the vocabulary's own
// configuration. A blank image yields a single empty layer.
InferenceGraph infer(const ShapeImage& image, const Vocabulary& vocab);

// As above with an explicit configuration. Throws config-mismatch when the
// orientation count or subsampling ratio differ from the vocabulary's.
InferenceGraph infer(const ShapeImage& image, const Vocabulary& vocab, const TrainConfig& config);

std::vector<InferenceGraph> infer_all(std::span<const ShapeImage> images, const Vocabulary& vocab, int jobs = 0);

}  // namespace chop
