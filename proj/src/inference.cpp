#include "chop/inference.hpp"

#include <algorithm>

#include "chop/error.hpp"
#include "chop/miner.hpp"
#include "chop/parallel.hpp"

namespace chop {

PartIndex::PartIndex(const VocabularyLayer& layer) {
  for (const Part& p : layer.parts) by_center_[p.center].push_back(p.label);
  for (auto& [center, labels] : by_center_) std::sort(labels.begin(), labels.end());
}

std::vector<PartLabel> PartIndex::candidates(const ObjectGraph& graph) const {
  std::vector<PartLabel> out;
  for (PartLabel label : graph.distinct_labels()) {
    auto it = by_center_.find(label);
    if (it != by_center_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

InferenceGraph infer(const ShapeImage& image, const Vocabulary& vocab) { return infer(image, vocab, vocab.config); }

InferenceGraph infer(const ShapeImage& image, const Vocabulary& vocab, const TrainConfig& config) {
  if (vocab.depth() < 1) throw Error(ErrorCode::kInvalidInput, "vocabulary has no layers");
  if (config.theta_count != vocab.config.theta_count || config.sigma != vocab.config.sigma) {
    throw Error(ErrorCode::kConfigMismatch, "theta_count or sigma differ from the vocabulary");
  }
  const GaborBank bank = build_gabor_bank(config.theta_count, config.gabor);

  InferenceGraph result;
  result.image_id = image.id;
  std::vector<PartRealization> current = layer_one_realizations(image, bank, config);
  for (int layer = 1;; ++layer) {
    const VocabularyLayer& level = vocab.layer(layer);
    result.layers.push_back(
        build_object_graph(current, level.modes, config.neighborhood_radius, layer, image.id));
    const ObjectGraph& graph = result.layers.back();
    if (current.empty() || layer >= vocab.depth()) break;

    const VocabularyLayer& above = vocab.layer(layer + 1);
    const std::vector<PartLabel> labels = PartIndex(above).candidates(graph);
    std::vector<Part> parts;
    std::vector<std::vector<StarInstance>> instances;
    for (PartLabel label : labels) {
      const Part& part = above.parts.at(static_cast<std::size_t>(label - 1));
      auto found = find_star_isomorphisms(part, graph);
      if (found.empty()) continue;
      parts.push_back(part);
      instances.push_back(std::move(found));
    }
    std::vector<PartRealization> next = realize(parts, instances, graph);
    next = subsample_positions(local_inhibition(next, config.inhibition_radius), config.sigma);
    for (std::size_t i = 0; i < next.size(); ++i) next[i].id = static_cast<RealizationId>(i);
    if (next.empty()) break;
    current = std::move(next);
  }
  return result;
}

std::vector<InferenceGraph> infer_all(std::span<const ShapeImage> images, const Vocabulary& vocab, int jobs) {
  std::vector<InferenceGraph> out(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) { out[i] = infer(images[i], vocab); });
  return out;
}

}  // namespace chop
