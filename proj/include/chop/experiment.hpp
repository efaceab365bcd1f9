#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chop/graphs.hpp"
#include "chop/imaging.hpp"
#include "chop/retrieval.hpp"
#include "chop/serialization.hpp"
#include "chop/vocabulary.hpp"

namespace chop {

// Up to `per_category` images of each category after a seeded shuffle, in
// dataset order. 0 keeps everything.
std::vector<ShapeImage> training_split(std::span<const ShapeImage> images, int per_category, std::uint64_t seed);

struct TimedInference {
  std::vector<InferenceGraph> graphs;
  std::vector<double> infer_ms;  // wall clock per image
};

TimedInference infer_timed(std::span<const ShapeImage> images, const Vocabulary& vocab, int jobs = 0);

std::vector<ShapeDescriptor> describe(std::span<const InferenceGraph> graphs, int dimension, int layer = 0);

std::vector<TrainingRecord> training_records(std::span<const ShapeImage> images, const TimedInference& inference);

// Plain-text tables in the layout of the paper's retrieval tables.
std::string topk_table(const TopKReport& report);
std::string bullseye_table(double score, std::size_t images);

std::string training_report(const TrainingResult& result, std::size_t images);

}  // namespace chop
