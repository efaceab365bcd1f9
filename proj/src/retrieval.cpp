#include "chop/retrieval.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "chop/error.hpp"

namespace chop {

SquareMatrix weighted_adjacency(const ObjectGraph& graph) {
  SquareMatrix m;
  m.size = graph.node_count();
  m.data.assign(m.size * m.size, 0.0);
  for (const GraphEdge& e : graph.edges()) {
    const std::size_t a = *graph.index_of(e.src);
    const std::size_t b = *graph.index_of(e.dst);
    if (a == b) continue;
    const double w = std::max(m(a, b), static_cast<double>(e.mode));
    m(a, b) = w;
    m(b, a) = w;
  }
  return m;
}

std::vector<double> symmetric_eigenvalues(const SquareMatrix& matrix) {
  if (matrix.size == 0) return {};
  if (matrix.size == 1) return {matrix(0, 0)};
  if (matrix.size == 2) {
    const double mean = 0.5 * (matrix(0, 0) + matrix(1, 1));
    const double radius = std::hypot(0.5 * (matrix(0, 0) - matrix(1, 1)), matrix(0, 1));
    return {mean + radius, mean - radius};
  }
  Eigen::MatrixXd a(matrix.size, matrix.size);
  for (std::size_t r = 0; r < matrix.size; ++r) {
    for (std::size_t c = 0; c < matrix.size; ++c) a(r, c) = matrix(r, c);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  std::vector<double> values(solver.eigenvalues().data(), solver.eigenvalues().data() + matrix.size);
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

ShapeDescriptor spectral_descriptor(const InferenceGraph& inference, int dimension, int layer) {
  if (dimension < 1) throw Error(ErrorCode::kInvalidParameter, "descriptor dimension must be positive");
  ShapeDescriptor d;
  d.image_id = inference.image_id;
  d.values.assign(static_cast<std::size_t>(dimension), 0.0);
  const int chosen = layer == 0 ? inference.top_nonempty_layer() : std::min(layer, inference.depth());
  if (chosen < 1 || inference.layers[static_cast<std::size_t>(chosen - 1)].empty()) {
    d.empty = true;
    return d;
  }
  d.layer_used = chosen;
  const auto values = symmetric_eigenvalues(weighted_adjacency(inference.layers[static_cast<std::size_t>(chosen - 1)]));
  std::copy_n(values.begin(), std::min(values.size(), d.values.size()), d.values.begin());
  return d;
}

double shape_distance(const ShapeDescriptor& a, const ShapeDescriptor& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.values.size()) + " vs " + std::to_string(b.values.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double diff = a.values[i] - b.values[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

std::vector<RetrievalResult> rank_all(std::span<const ShapeDescriptor> descriptors) {
  std::vector<RetrievalResult> out;
  out.reserve(descriptors.size());
  for (std::size_t q = 0; q < descriptors.size(); ++q) {
    RetrievalResult r;
    r.query_id = descriptors[q].image_id;
    for (std::size_t c = 0; c < descriptors.size(); ++c) {
      if (c == q) continue;
      r.ranked.emplace_back(descriptors[c].image_id, shape_distance(descriptors[q], descriptors[c]));
    }
    std::stable_sort(r.ranked.begin(), r.ranked.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    out.push_back(std::move(r));
  }
  return out;
}

TopKReport top_k_eval(std::span<const RetrievalResult> results, const std::map<std::string, std::string>& group_of,
                      int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidParameter, "k must be positive");
  TopKReport report;
  report.k = k;
  report.queries = static_cast<int>(results.size());
  report.correct.assign(static_cast<std::size_t>(k), 0);
  for (const RetrievalResult& r : results) {
    if (r.ranked.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::kInvalidParameter, "query " + r.query_id + " has fewer than k candidates");
    }
    const std::string& group = group_of.at(r.query_id);
    for (int rank = 0; rank < k; ++rank) {
      if (group_of.at(r.ranked[static_cast<std::size_t>(rank)].first) == group) ++report.correct[rank];
    }
  }
  return report;
}

double bullseye_eval(std::span<const RetrievalResult> results, const std::map<std::string, std::string>& category_of) {
  if (results.empty()) return 0.0;
  constexpr std::size_t kConsidered = 5;
  std::size_t hits = 0;
  for (const RetrievalResult& r : results) {
    const std::string& category = category_of.at(r.query_id);
    ++hits;  // the query itself, at distance 0
    const std::size_t n = std::min(kConsidered - 1, r.ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (category_of.at(r.ranked[i].first) == category) ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size() * kConsidered);
}

std::map<std::string, std::string> granularity_units(std::span<const ShapeImage> images, Granularity granularity) {
  std::map<std::string, std::string> out;
  for (const ShapeImage& img : images) {
    switch (granularity) {
      case Granularity::kObject:
        out[img.id] = img.object_id.empty() ? img.id : img.object_id;
        break;
      case Granularity::kView:
        out[img.id] = img.id;
        break;
      case Granularity::kCategory:
        out[img.id] = img.category.empty() ? std::to_string(img.category_label) : img.category;
        break;
    }
  }
  return out;
}

std::vector<LayerShareability> shareability(const Vocabulary& vocab, std::span<const InferenceGraph> graphs,
                                            const std::map<std::string, std::string>& unit_of, int top_m) {
  std::vector<LayerShareability> out;
  for (int layer = 2; layer <= vocab.depth(); ++layer) {
    const auto& parts = vocab.layer(layer).parts;
    const std::size_t m = std::min(parts.size(), static_cast<std::size_t>(std::max(top_m, 0)));
    std::vector<std::set<std::string>> units(m);
    for (const InferenceGraph& g : graphs) {
      if (g.depth() < layer) continue;
      for (const PartRealization& r : g.layers[static_cast<std::size_t>(layer - 1)].nodes()) {
        if (r.part_label < 1 || static_cast<std::size_t>(r.part_label) > m) continue;
        auto it = unit_of.find(r.image_id);
        units[static_cast<std::size_t>(r.part_label - 1)].insert(it == unit_of.end() ? r.image_id : it->second);
      }
    }
    LayerShareability entry;
    entry.layer = layer;
    for (const auto& u : units) entry.part_units.push_back(static_cast<int>(u.size()));
    if (!entry.part_units.empty()) {
      entry.mean = std::accumulate(entry.part_units.begin(), entry.part_units.end(), 0.0) /
                   static_cast<double>(entry.part_units.size());
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace chop
