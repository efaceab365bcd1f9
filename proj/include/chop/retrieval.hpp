#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chop/graphs.hpp"
#include "chop/imaging.hpp"
#include "chop/vocabulary.hpp"

namespace chop {

// Dense square matrix, row-major.
struct SquareMatrix {
  std::size_t size = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * size + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * size + c]; }
};

// Undirected mode-weighted adjacency in node order. Parallel edges keep the
// largest mode id; self loops are ignored.
SquareMatrix weighted_adjacency(const ObjectGraph& graph);

// Eigenvalues of a symmetric matrix, descending.
std::vector<double> symmetric_eigenvalues(const SquareMatrix& matrix);

inline constexpr int kDefaultDescriptorDimension = 32;

struct ShapeDescriptor {
  std::string image_id;
  int layer_used = 0;
  // True when the inference graph had no realizations; values are then zero.
  bool empty = false;
  std::vector<double> values;
};

// Spectrum of the chosen layer's graph, padded with zeros or truncated to
// `dimension`. layer = 0 selects the top nonempty layer.
ShapeDescriptor spectral_descriptor(const InferenceGraph& inference, int dimension = kDefaultDescriptorDimension,
                                    int layer = 0);

// Euclidean distance. Throws dimension-mismatch.
double shape_distance(const ShapeDescriptor& a, const ShapeDescriptor& b);

struct RetrievalResult {
  std::string query_id;
  // Every other image by ascending distance; ties keep input order.
  std::vector<std::pair<std::string, double>> ranked;
};

std::vector<RetrievalResult> rank_all(std::span<const ShapeDescriptor> descriptors);

struct TopKReport {
  int k = 4;
  int queries = 0;
  // correct[r] = queries whose rank-(r+1) match shares the query's group.
  std::vector<int> correct;
};

// `group_of` maps image id to its ground-truth object. Throws
// invalid-parameter when some query has fewer than k candidates.
TopKReport top_k_eval(std::span<const RetrievalResult> results, const std::map<std::string, std::string>& group_of,
                      int k = 4);

// Percentage of same-category items among each query's five nearest images,
// normalised by N * 5. The query itself is the nearest (distance 0), followed
// by its four best-ranked candidates.
double bullseye_eval(std::span<const RetrievalResult> results, const std::map<std::string, std::string>& category_of);

enum class Granularity { kObject, kView, kCategory };

// Image id to the unit id of the requested granularity. Every image is its own
// view.
std::map<std::string, std::string> granularity_units(std::span<const ShapeImage> images, Granularity granularity);

struct LayerShareability {
  int layer = 0;
  // Distinct units per evaluated part, in label order.
  std::vector<int> part_units;
  double mean = 0.0;
};

// For each layer >= 2, the top_m lowest-value parts and the number of distinct
// units in which each has at least one realization.
std::vector<LayerShareability> shareability(const Vocabulary& vocab, std::span<const InferenceGraph> graphs,
                                            const std::map<std::string, std::string>& unit_of, int top_m = 10);

}  // namespace chop
