#pragma once

#include <span>
#include <string>
#include <vector>

#include "chop/graphs.hpp"

namespace chop {

// Label alphabets shared by DL(G), DL(S) and DL(G|S) so the three are
// comparable. Both counts are at least 1.
struct EncodingModel {
  int node_label_count = 1;
  int mode_label_count = 1;

  static EncodingModel of(const ObjectGraph& graph);
};

// Bits to encode a graph with `nodes` vertices and `edges` edges:
//   vertices  log2(v + 1) + v * log2(Lv)
//   edges     e * (1 + log2(Le))
//   adjacency v * log2(v + 1)
double description_length(std::size_t nodes, std::size_t edges, const EncodingModel& model);
double description_length(const ObjectGraph& graph, const EncodingModel& model);
double description_length(const Part& part, const EncodingModel& model);

struct Candidate {
  Part part;
  std::vector<StarInstance> instances;
  double value = 0.0;
};

struct MinerParams {
  int beam = 16;
  int num_best = 64;
  int best_part_size = 6;   // max edges per star
  int min_seed_frequency = 2;
};

// Node/edge counts of the graph after compressing with `instances`.
struct CompressedSize {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t accepted_instances = 0;
};

// Instances are taken in (root, leaves) order and accepted when node-disjoint
// from all previously accepted ones.
std::vector<StarInstance> select_disjoint(std::span<const StarInstance> instances);

CompressedSize compressed_size(const ObjectGraph& graph, std::span<const StarInstance> instances);

// Replaces every accepted instance by one node labelled kCompressedLabel placed
// at the instance root. Edges inside an instance disappear; edges between an
// instance and the rest of the graph are rewired to the new node.
ObjectGraph compress(const ObjectGraph& graph, const Candidate& candidate);

// (DL(S) + DL(G|S)) / DL(G); lower is better. Throws empty-graph when DL(G) = 0.
double compression_value(const Candidate& candidate, const ObjectGraph& graph);

// Orders by value, then fewer edges, then canonical shape. Values closer than
// 1e-12 count as equal.
bool candidate_less(const Candidate& a, const Candidate& b);

// One-edge star extensions of the parents that have at least one instance.
// Extensions only follow out-edges of a parent instance's root, so every child
// stays inside a single receptive graph. Sorted by canonical shape.
std::vector<Candidate> enumerate_children(std::span<const Candidate> parents, const ObjectGraph& graph);

struct DiscoveryResult {
  // Ascending by value (best first).
  std::vector<Candidate> parts;
  // One realization per (part, root): the root's first instance. part_label is
  // the 1-based index into `parts`; ids are 0..n-1.
  std::vector<PartRealization> realizations;
  std::vector<std::string> trace;
};

// Beam search over star substructures seeded by frequent single nodes.
DiscoveryResult discover(const ObjectGraph& graph, const MinerParams& params, int jobs = 1);

// Layer-(l+1) realizations for the given parts over `graph`, one per distinct
// instance root. part_label is set to each part's `label`.
std::vector<PartRealization> realize(std::span<const Part> parts, std::span<const std::vector<StarInstance>> instances,
                                     const ObjectGraph& graph);

}  // namespace chop
