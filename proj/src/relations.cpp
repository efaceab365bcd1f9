#include "chop/relations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "chop/error.hpp"

namespace chop {

std::size_t ModeSet::mode_count() const {
  std::size_t n = 0;
  for (const auto& [pair, modes] : entries_) n += modes.size();
  return n;
}

std::span<const Mode> ModeSet::modes(PartLabel i, PartLabel j) const {
  auto it = entries_.find({i, j});
  if (it == entries_.end()) return {};
  return it->second;
}

void ModeSet::set(LabelPair pair, std::vector<Mode> modes) {
  if (modes.empty()) {
    entries_.erase(pair);
    return;
  }
  entries_[pair] = std::move(modes);
}

std::vector<DisplacementSample> collect_samples(std::span<const PartRealization> realizations, double radius) {
  std::vector<Vec2> points;
  points.reserve(realizations.size());
  for (const auto& r : realizations) points.push_back(r.position);
  const RadiusIndex index(points, radius);

  std::vector<DisplacementSample> samples;
  std::vector<std::size_t> neighbours;
  for (std::size_t a = 0; a < realizations.size(); ++a) {
    const PartRealization& ra = realizations[a];
    neighbours.clear();
    index.for_each_within(ra.position, radius, [&](std::size_t b) {
      if (b != a && realizations[b].image_id == ra.image_id) neighbours.push_back(b);
    });
    std::sort(neighbours.begin(), neighbours.end());
    for (std::size_t b : neighbours) {
      const PartRealization& rb = realizations[b];
      samples.push_back({{ra.part_label, rb.part_label}, ra.position - rb.position, ra.image_id, ra.id, rb.id});
    }
  }
  return samples;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; identical across standard libraries.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t nearest_center(Vec2 p, std::span<const Vec2> centers) {
  std::size_t best = 0;
  double best_d = squared_norm(p - centers[0]);
  for (std::size_t k = 1; k < centers.size(); ++k) {
    const double d = squared_norm(p - centers[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

// Sample bins and their 3x3 neighbourhoods over the occupied cells. The
// neighbourhood relation is symmetric, which the incremental update relies on.
struct BinLayout {
  std::vector<std::size_t> bin_of;                  // per sample
  std::vector<std::vector<std::size_t>> neighbours;  // per bin, includes itself
  std::vector<std::size_t> population;               // samples per bin

  BinLayout(std::span<const Vec2> samples, double bin_width) {
    std::unordered_map<std::uint64_t, std::size_t> ids;
    std::vector<std::pair<std::int64_t, std::int64_t>> coords;
    auto key = [](std::int64_t bx, std::int64_t by) {
      return (static_cast<std::uint64_t>(bx) << 32) ^ (static_cast<std::uint64_t>(by) & 0xffffffffULL);
    };
    bin_of.reserve(samples.size());
    for (Vec2 s : samples) {
      const auto bx = static_cast<std::int64_t>(std::floor(s.x / bin_width));
      const auto by = static_cast<std::int64_t>(std::floor(s.y / bin_width));
      auto [it, inserted] = ids.try_emplace(key(bx, by), coords.size());
      if (inserted) coords.emplace_back(bx, by);
      bin_of.push_back(it->second);
    }
    population.assign(coords.size(), 0);
    for (std::size_t b : bin_of) ++population[b];
    neighbours.resize(coords.size());
    for (std::size_t b = 0; b < coords.size(); ++b) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          auto it = ids.find(key(coords[b].first + dx, coords[b].second + dy));
          if (it != ids.end()) neighbours[b].push_back(it->second);
        }
      }
      std::sort(neighbours[b].begin(), neighbours[b].end());
    }
  }
};

double entropy_of(std::span<const long> counts) {
  long total = 0;
  for (long c : counts) total += c;
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (long c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

// Neighbourhood cluster counts m[b][k] and per-bin entropies.
class EntropyState {
 public:
  EntropyState(const BinLayout& layout, std::span<const int> assignment, int k)
      : layout_(layout), k_(k),
        own_(layout.population.size() * k, 0),
        hood_(layout.population.size() * k, 0),
        entropy_(layout.population.size(), 0.0) {
    for (std::size_t s = 0; s < assignment.size(); ++s) ++own_[layout.bin_of[s] * k_ + assignment[s]];
    for (std::size_t b = 0; b < bins(); ++b) {
      for (std::size_t nb : layout_.neighbours[b]) {
        for (int c = 0; c < k_; ++c) hood_[b * k_ + c] += own_[nb * k_ + c];
      }
      entropy_[b] = entropy_of(hood(b));
    }
  }

  std::size_t bins() const { return layout_.population.size(); }

  double total() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < bins(); ++b) {
      sum += static_cast<double>(layout_.population[b]) * entropy_[b];
      n += layout_.population[b];
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  }

  // Change in the unnormalised objective if one sample in `bin` moves from
  // cluster `from` to cluster `to`.
  double move_delta(std::size_t bin, int from, int to) {
    double delta = 0.0;
    for (std::size_t nb : layout_.neighbours[bin]) {
      std::span<long> counts(&hood_[nb * k_], static_cast<std::size_t>(k_));
      --counts[from];
      ++counts[to];
      const double after = entropy_of(counts);
      ++counts[from];
      --counts[to];
      delta += static_cast<double>(layout_.population[nb]) * (after - entropy_[nb]);
    }
    return delta;
  }

  void apply_move(std::size_t bin, int from, int to) {
    --own_[bin * k_ + from];
    ++own_[bin * k_ + to];
    for (std::size_t nb : layout_.neighbours[bin]) {
      --hood_[nb * k_ + from];
      ++hood_[nb * k_ + to];
      entropy_[nb] = entropy_of(hood(nb));
    }
  }

 private:
  std::span<const long> hood(std::size_t b) const {
    return std::span<const long>(&hood_[b * k_], static_cast<std::size_t>(k_));
  }

  const BinLayout& layout_;
  int k_;
  std::vector<long> own_;
  std::vector<long> hood_;
  std::vector<double> entropy_;
};

// Moves smaller than this are treated as no improvement.
constexpr double kMoveTolerance = 1e-9;

void finalise_centers(std::span<const Vec2> samples, ClusteringResult& out, int k) {
  std::vector<Vec2> sums(static_cast<std::size_t>(k));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    sums[out.assignment[s]] = sums[out.assignment[s]] + samples[s];
    ++counts[out.assignment[s]];
  }
  out.centers.assign(static_cast<std::size_t>(k), {});
  out.weights.assign(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) out.centers[c] = (1.0 / static_cast<double>(counts[c])) * sums[c];
    out.weights[c] = static_cast<double>(counts[c]) / static_cast<double>(samples.size());
  }
}

// Keeps clusters in `keep` (old indices, in output order) and remaps assignment.
void reorder_clusters(std::span<const Vec2> samples, ClusteringResult& out, const std::vector<int>& keep) {
  std::vector<int> remap(out.centers.size(), -1);
  std::vector<Vec2> kept_centers;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    remap[keep[i]] = static_cast<int>(i);
    kept_centers.push_back(out.centers[keep[i]]);
  }
  for (std::size_t s = 0; s < samples.size(); ++s) {
    int c = remap[out.assignment[s]];
    if (c < 0) c = static_cast<int>(nearest_center(samples[s], kept_centers));
    out.assignment[s] = c;
  }
  finalise_centers(samples, out, static_cast<int>(keep.size()));
}

}  // namespace

double conditional_entropy(std::span<const Vec2> samples, std::span<const int> assignment, int cluster_count,
                           double bin_width) {
  if (samples.empty()) return 0.0;
  const BinLayout layout(samples, bin_width);
  return EntropyState(layout, assignment, cluster_count).total();
}

ClusteringResult cluster_displacements(std::span<const Vec2> samples, const ClusteringParams& params,
                                       std::uint64_t seed) {
  if (params.k_max < 1) throw Error(ErrorCode::kInvalidParameter, "k_max must be >= 1");
  if (params.bin_width <= 0.0) throw Error(ErrorCode::kInvalidParameter, "bin_width must be positive");
  ClusteringResult out;
  const std::size_t n = samples.size();
  if (n == 0) return out;

  if (params.k_max == 1 || n < static_cast<std::size_t>(std::max(params.min_samples, 1))) {
    out.assignment.assign(n, 0);
    finalise_centers(samples, out, 1);
    out.objective_trace.push_back(0.0);
    return out;
  }

  // k-means++ seeding; stops early once every sample coincides with a seed.
  std::mt19937_64 rng(seed);
  std::vector<Vec2> seeds{samples[static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n))]};
  std::vector<double> d2(n);
  while (seeds.size() < static_cast<std::size_t>(params.k_max)) {
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      d2[s] = squared_norm(samples[s] - seeds[nearest_center(samples[s], seeds)]);
      total += d2[s];
    }
    if (total <= 0.0) break;
    const double target = unit_uniform(rng) * total;
    double acc = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t s = 0; s < n; ++s) {
      acc += d2[s];
      if (acc > target && d2[s] > 0.0) {
        pick = s;
        break;
      }
    }
    seeds.push_back(samples[pick]);
  }
  const int k = static_cast<int>(seeds.size());
  out.assignment.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.assignment[s] = static_cast<int>(nearest_center(samples[s], seeds));

  // Greedy single-sample moves that strictly lower the conditional entropy.
  const BinLayout layout(samples, params.bin_width);
  EntropyState state(layout, out.assignment, k);
  out.objective_trace.push_back(state.total());
  for (int iter = 0; iter < params.max_iters; ++iter) {
    bool moved = false;
    for (std::size_t s = 0; s < n; ++s) {
      const int from = out.assignment[s];
      const std::size_t bin = layout.bin_of[s];
      int best = from;
      double best_delta = -kMoveTolerance;
      for (int to = 0; to < k; ++to) {
        if (to == from) continue;
        const double delta = state.move_delta(bin, from, to);
        if (delta < best_delta) {
          best_delta = delta;
          best = to;
        }
      }
      if (best != from) {
        state.apply_move(bin, from, best);
        out.assignment[s] = best;
        moved = true;
      }
    }
    ++out.iterations;
    out.objective_trace.push_back(state.total());
    if (!moved) break;
  }

  finalise_centers(samples, out, k);

  // Prune light clusters, then order survivors by weight (desc) and center.
  std::vector<int> keep;
  for (int c = 0; c < k; ++c) {
    if (out.weights[c] > 0.0 && out.weights[c] >= params.min_weight) keep.push_back(c);
  }
  if (keep.empty()) {
    keep.push_back(static_cast<int>(std::max_element(out.weights.begin(), out.weights.end()) - out.weights.begin()));
  }
  std::sort(keep.begin(), keep.end(), [&](int a, int b) {
    if (out.weights[a] != out.weights[b]) return out.weights[a] > out.weights[b];
    if (out.centers[a].x != out.centers[b].x) return out.centers[a].x < out.centers[b].x;
    return out.centers[a].y < out.centers[b].y;
  });
  reorder_clusters(samples, out, keep);
  out.objective = conditional_entropy(samples, out.assignment, static_cast<int>(out.centers.size()), params.bin_width);
  return out;
}

ModeSet learn_modes(std::span<const DisplacementSample> samples, const ClusteringParams& params, std::uint64_t seed,
                    int layer) {
  std::map<LabelPair, std::vector<Vec2>> grouped;
  for (const DisplacementSample& s : samples) grouped[s.pair].push_back(s.d);

  ModeSet modes(layer);
  for (const auto& [pair, ds] : grouped) {
    const std::uint64_t pair_seed =
        splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(pair.first) << 32) ^
                                     static_cast<std::uint64_t>(static_cast<std::uint32_t>(pair.second))));
    const ClusteringResult result = cluster_displacements(ds, params, pair_seed);
    std::vector<Mode> pair_modes;
    for (std::size_t c = 0; c < result.centers.size(); ++c) {
      pair_modes.push_back({pair, static_cast<ModeId>(c + 1), result.centers[c], result.weights[c]});
    }
    modes.set(pair, std::move(pair_modes));
  }
  return modes;
}

EdgeLabel label_edge(Vec2 d, std::span<const Mode> modes) {
  if (modes.empty()) throw Error(ErrorCode::kUnknownPair, "no modes learned for pair");
  const Mode* best = &modes[0];
  double best_d = squared_norm(d - best->center);
  for (const Mode& m : modes.subspan(1)) {
    const double dist = squared_norm(d - m.center);
    if (dist < best_d || (dist == best_d && m.id < best->id)) {
      best_d = dist;
      best = &m;
    }
  }
  return {best->center, best->id};
}

}  // namespace chop
