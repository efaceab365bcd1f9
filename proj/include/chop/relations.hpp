#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chop/geometry.hpp"
#include "chop/graphs.hpp"

namespace chop {

using LabelPair = std::pair<PartLabel, PartLabel>;

struct Mode {
  LabelPair pair;
  ModeId id = 0;
  Vec2 center;
  double weight = 0.0;
};

// Learned displacement modes per ordered (root label, leaf label) pair. Mode
// ids within a pair run 1..K.
class ModeSet {
 public:
  ModeSet() = default;
  explicit ModeSet(int layer) : layer_(layer) {}

  int layer() const { return layer_; }
  const std::map<LabelPair, std::vector<Mode>>& entries() const { return entries_; }
  std::size_t pair_count() const { return entries_.size(); }
  std::size_t mode_count() const;

  // Empty span when the pair has no modes.
  std::span<const Mode> modes(PartLabel i, PartLabel j) const;
  void set(LabelPair pair, std::vector<Mode> modes);

 private:
  int layer_ = 0;
  std::map<LabelPair, std::vector<Mode>> entries_;
};

struct DisplacementSample {
  LabelPair pair;
  Vec2 d;  // root position minus leaf position
  std::string image_id;
  RealizationId a = 0;
  RealizationId b = 0;
};

// One sample per ordered pair (a, b), a != b, of the same image within
// `radius`, keyed by (label(a), label(b)).
std::vector<DisplacementSample> collect_samples(std::span<const PartRealization> realizations, double radius);

struct ClusteringParams {
  int k_max = 4;
  int max_iters = 50;
  double bin_width = 2.0;
  double min_weight = 0.05;
  int min_samples = 2;
};

struct ClusteringResult {
  std::vector<Vec2> centers;
  std::vector<double> weights;
  std::vector<int> assignment;  // index into centers, per sample
  // Objective after initialisation and after every sweep.
  std::vector<double> objective_trace;
  // Objective of the returned (pruned) assignment.
  double objective = 0.0;
  int iterations = 0;
};

// Empirical conditional entropy H(cluster | location): the displacement plane is
// cut into square bins of `bin_width`, and p(k | x) is the cluster frequency
// over the 3x3 bin block around x's bin. Averaged over samples, in nats.
double conditional_entropy(std::span<const Vec2> samples, std::span<const int> assignment, int cluster_count,
                           double bin_width);

// Minimum conditional entropy clustering of one pair's displacements.
ClusteringResult cluster_displacements(std::span<const Vec2> samples, const ClusteringParams& params,
                                       std::uint64_t seed);

ModeSet learn_modes(std::span<const DisplacementSample> samples, const ClusteringParams& params, std::uint64_t seed,
                    int layer = 0);

struct EdgeLabel {
  Vec2 center;
  ModeId mode = 0;
};

// Nearest mode by Euclidean distance; ties go to the lower mode id. Throws
// unknown-pair on an empty mode list.
EdgeLabel label_edge(Vec2 d, std::span<const Mode> modes);

}  // namespace chop
