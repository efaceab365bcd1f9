#include "chop/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include "chop/inference.hpp"
#include "chop/parallel.hpp"

namespace chop {

std::vector<ShapeImage> training_split(std::span<const ShapeImage> images, int per_category, std::uint64_t seed) {
  if (per_category <= 0) return {images.begin(), images.end()};
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < images.size(); ++i) by_category[images[i].category].push_back(i);
  std::vector<char> chosen(images.size(), 0);
  for (auto& [category, members] : by_category) {
    // Fisher-Yates on splitmix64 output, seeded by FNV-1a of the category.
    std::uint64_t state = 0xCBF29CE484222325ULL;
    for (unsigned char c : category) state = (state ^ c) * 0x100000001B3ULL;
    state ^= seed;
    auto next = [&state] {
      std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      return z ^ (z >> 31);
    };
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[next() % i]);
    const std::size_t take = std::min(members.size(), static_cast<std::size_t>(per_category));
    for (std::size_t i = 0; i < take; ++i) chosen[members[i]] = 1;
  }
  std::vector<ShapeImage> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (chosen[i]) out.push_back(images[i]);
  }
  return out;
}

TimedInference infer_timed(std::span<const ShapeImage> images, const Vocabulary& vocab, int jobs) {
  TimedInference out;
  out.graphs.resize(images.size());
  out.infer_ms.resize(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    out.graphs[i] = infer(images[i], vocab);
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    out.infer_ms[i] = elapsed.count();
  });
  return out;
}

std::vector<ShapeDescriptor> describe(std::span<const InferenceGraph> graphs, int dimension, int layer) {
  std::vector<ShapeDescriptor> out;
  out.reserve(graphs.size());
  for (const InferenceGraph& g : graphs) out.push_back(spectral_descriptor(g, dimension, layer));
  return out;
}

std::vector<TrainingRecord> training_records(std::span<const ShapeImage> images, const TimedInference& inference) {
  std::vector<TrainingRecord> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    TrainingRecord r;
    r.id = images[i].id;
    r.category = images[i].category;
    r.category_label = images[i].category_label;
    r.object_id = images[i].object_id;
    r.view_id = images[i].view_id;
    r.infer_ms = inference.infer_ms[i];
    r.graph = inference.graphs[i];
    out.push_back(std::move(r));
  }
  return out;
}

std::string topk_table(const TopKReport& report) {
  std::ostringstream out;
  out << "Top-k retrieval (" << report.queries << " queries)\n";
  out << "rank  correct  percent\n";
  for (std::size_t r = 0; r < report.correct.size(); ++r) {
    const double pct = report.queries == 0 ? 0.0 : 100.0 * report.correct[r] / report.queries;
    char line[96];
    std::snprintf(line, sizeof(line), "Top-%-2zu %4d/%-4d %7.2f\n", r + 1, report.correct[r], report.queries, pct);
    out << line;
  }
  return out.str();
}

std::string bullseye_table(double score, std::size_t images) {
  char line[96];
  std::snprintf(line, sizeof(line), "Bullseye (%zu images, 5 nearest): %.2f%%\n", images, score);
  return line;
}

std::string training_report(const TrainingResult& result, std::size_t images) {
  std::ostringstream out;
  out << "training images: " << images << "\n";
  out << "layers: " << result.vocabulary.depth() << "\n";
  out << "layer  parts  modes  realizations  mean_mdl_10_best\n";
  for (const LayerStats& s : result.stats) {
    char line[128];
    std::snprintf(line, sizeof(line), "%5d  %5zu  %5zu  %12zu  %.6f\n", s.layer, s.part_count, s.mode_count,
                  s.realization_count, s.mean_best_mdl);
    out << line;
  }
  return out.str();
}

}  // namespace chop
