#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chop/geometry.hpp"

namespace chop {

using PartLabel = int;
using ModeId = int;
using RealizationId = int;

class ModeSet;

// Label given to nodes that replace a compressed instance.
inline constexpr PartLabel kCompressedLabel = 0;

struct PartEdge {
  PartLabel child_label = 0;
  ModeId mode = 0;

  friend auto operator<=>(const PartEdge&, const PartEdge&) = default;
};

// A vocabulary entry: a star over layer-(l-1) labels. Layer-1 parts have no
// edges and their center is the Gabor orientation index.
struct Part {
  PartLabel label = 0;
  int layer = 1;
  PartLabel center = 0;
  std::vector<PartEdge> edges;  // sorted, canonical
  double mdl_value = 0.0;
  // Mean extent of realizations in original pixels; visualisation only.
  double footprint_width = 0.0;
  double footprint_height = 0.0;

  // Builds a part with its edge list in canonical (sorted) order.
  static Part star(PartLabel center, std::vector<PartEdge> edges);

  std::size_t size() const { return edges.size(); }

  // Canonical identity ignores label, layer and value.
  bool same_shape(const Part& other) const { return center == other.center && edges == other.edges; }
  std::strong_ordering compare_shape(const Part& other) const;
};

struct PartRealization {
  RealizationId id = 0;
  PartLabel part_label = 0;
  std::string image_id;
  Vec2 position;
  // Root first, then one leaf per part edge in canonical edge order.
  std::vector<RealizationId> children;
  Box extent;
};

struct StarLeaf {
  RealizationId leaf = 0;
  ModeId mode = 0;
};

struct ReceptiveGraph {
  RealizationId root = 0;
  std::vector<StarLeaf> leaves;
};

struct GraphEdge {
  RealizationId src = 0;
  RealizationId dst = 0;
  ModeId mode = 0;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

// Directed, node-labelled, edge-labelled graph over the realizations of one
// layer. Immutable after construction; adjacency is indexed on build.
class ObjectGraph {
 public:
  ObjectGraph() = default;
  // Throws invalid-input on duplicate node ids or dangling edge endpoints.
  ObjectGraph(int layer, std::string image_id, std::vector<PartRealization> nodes, std::vector<GraphEdge> edges);

  int layer() const { return layer_; }
  const std::string& image_id() const { return image_id_; }
  std::span<const PartRealization> nodes() const { return nodes_; }
  std::span<const GraphEdge> edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty(); }

  std::optional<std::size_t> index_of(RealizationId id) const;
  const PartRealization& node(RealizationId id) const;
  PartLabel label_of(RealizationId id) const { return node(id).part_label; }

  // Edge indices leaving the node at `node_index`.
  std::span<const std::size_t> out_edges(std::size_t node_index) const;
  // Node indices carrying `label`, ascending by id.
  std::span<const std::size_t> nodes_with_label(PartLabel label) const;
  std::vector<PartLabel> distinct_labels() const;
  std::vector<ModeId> distinct_modes() const;

 private:
  int layer_ = 0;
  std::string image_id_;
  std::vector<PartRealization> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::pair<RealizationId, std::size_t>> id_index_;  // sorted by id
  std::vector<std::size_t> out_offsets_;
  std::vector<std::size_t> out_edge_list_;
  std::vector<std::pair<PartLabel, std::vector<std::size_t>>> label_index_;  // sorted by label
};

// One match of a star pattern: the root and one distinct leaf per pattern
// edge, in the pattern's canonical edge order. Leaves bound to identical edge
// specs are listed in ascending id, so permutations collapse to one instance.
struct StarInstance {
  RealizationId root = 0;
  std::vector<RealizationId> leaves;

  friend auto operator<=>(const StarInstance&, const StarInstance&) = default;
};

// Star around every realization: an edge to each other realization of the same
// image within `radius`, labelled with the nearest learned mode for the
// (root label, leaf label) pair. Pairs without modes produce no edge.
std::vector<ReceptiveGraph> build_receptive_graphs(std::span<const PartRealization> realizations,
                                                   const ModeSet& modes, double radius);

ObjectGraph union_object_graph(std::span<const ReceptiveGraph> stars, std::vector<PartRealization> realizations,
                               int layer, std::string image_id);

// Exhaustive star matching, sorted by (root, leaves).
std::vector<StarInstance> find_star_isomorphisms(const Part& pattern, const ObjectGraph& graph);

// Disjoint union; node ids must already be unique across inputs.
ObjectGraph disjoint_union(std::span<const ObjectGraph> graphs, int layer);

// Per-image layered result of matching a vocabulary bottom-up. layers[0] is
// layer 1. Realization children point into the previous layer.
struct InferenceGraph {
  std::string image_id;
  std::vector<ObjectGraph> layers;

  int depth() const { return static_cast<int>(layers.size()); }
  // Highest layer with at least one realization, 0 when all are empty.
  int top_nonempty_layer() const;
};

std::string to_dot(const ObjectGraph& graph);
std::string to_dot(const Part& part);

}  // namespace chop
