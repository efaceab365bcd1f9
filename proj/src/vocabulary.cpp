#include "chop/vocabulary.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ranges>
#include <set>
#include <sstream>

#include "chop/error.hpp"
#include "chop/parallel.hpp"

namespace chop {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfigInvalid, what); };
  if (theta_count < 1) fail("theta_count must be >= 1");
  if (gabor.kernel_size < 3 || gabor.kernel_size % 2 == 0) fail("kernel_size must be odd and >= 3");
  if (gabor.wavelength <= 0.0 || gabor.envelope_sigma <= 0.0 || gabor.aspect_ratio <= 0.0) {
    fail("gabor wavelength, sigma and aspect must be positive");
  }
  if (activation_fraction < 0.0 || activation_fraction > 1.0) fail("activation_fraction must lie in [0, 1]");
  if (nms_radius <= 0.0) fail("nms_radius must be positive");
  if (neighborhood_radius <= 0.0) fail("neighborhood_radius must be positive");
  if (inhibition_radius < 0.0) fail("inhibition_radius must be >= 0");
  if (!(sigma > 0.0 && sigma <= 1.0)) fail("sigma must lie in (0, 1]");
  if (clustering.k_max < 1 || clustering.max_iters < 0 || clustering.bin_width <= 0.0 ||
      clustering.min_samples < 1 || clustering.min_weight < 0.0 || clustering.min_weight >= 1.0) {
    fail("clustering parameters out of range");
  }
  if (miner.beam < 1 || miner.num_best < 1 || miner.best_part_size < 1 || miner.min_seed_frequency < 1) {
    fail("miner parameters must be positive");
  }
  if (max_layers < 1) fail("max_layers must be >= 1");
}

TrainConfig TrainConfig::quantized() const {
  TrainConfig c = *this;
  for (double* v : {&c.gabor.wavelength, &c.gabor.envelope_sigma, &c.gabor.aspect_ratio, &c.gabor.phase,
                    &c.activation_fraction, &c.nms_radius, &c.neighborhood_radius, &c.clustering.bin_width,
                    &c.clustering.min_weight, &c.inhibition_radius, &c.sigma}) {
    *v = round_significant(*v);
  }
  return c;
}

const Part* Vocabulary::find_part(int layer_number, PartLabel label) const {
  if (layer_number < 1 || layer_number > depth()) return nullptr;
  const auto& parts = layer(layer_number).parts;
  if (label < 1 || static_cast<std::size_t>(label) > parts.size()) return nullptr;
  return &parts[static_cast<std::size_t>(label - 1)];
}

std::vector<Part> assign_part_labels(std::vector<Part> parts) {
  std::stable_sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) {
    if (std::abs(a.mdl_value - b.mdl_value) > 1e-12) return a.mdl_value < b.mdl_value;
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.compare_shape(b) < 0;
  });
  for (std::size_t i = 0; i < parts.size(); ++i) parts[i].label = static_cast<PartLabel>(i + 1);
  return parts;
}

std::vector<PartRealization> local_inhibition(std::span<const PartRealization> realizations, double radius) {
  std::vector<Vec2> points;
  points.reserve(realizations.size());
  for (const auto& r : realizations) points.push_back(r.position);
  const RadiusIndex index(points, radius);

  std::vector<std::size_t> order(realizations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return realizations[a].part_label < realizations[b].part_label;
  });

  std::vector<char> alive(realizations.size(), 0);
  for (std::size_t i : order) {
    const PartRealization& r = realizations[i];
    bool suppressed = false;
    index.for_each_within(r.position, radius, [&](std::size_t j) {
      if (alive[j] && realizations[j].part_label < r.part_label && realizations[j].image_id == r.image_id) {
        suppressed = true;
      }
    });
    if (!suppressed) alive[i] = 1;
  }

  std::vector<PartRealization> out;
  for (std::size_t i = 0; i < realizations.size(); ++i) {
    if (alive[i]) out.push_back(realizations[i]);
  }
  return out;
}

std::vector<PartRealization> subsample_positions(std::vector<PartRealization> realizations, double sigma) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw Error(ErrorCode::kInvalidParameter, "sigma must lie in (0, 1]");
  for (auto& r : realizations) r.position = sigma * r.position;
  return realizations;
}

std::vector<Part> layer_one_parts(int theta_count) {
  std::vector<Part> parts;
  for (int t = 0; t < theta_count; ++t) {
    Part p = Part::star(t, {});
    p.label = t + 1;
    p.layer = 1;
    parts.push_back(std::move(p));
  }
  return parts;
}

std::vector<PartRealization> layer_one_realizations(const ShapeImage& image, const GaborBank& bank,
                                                    const TrainConfig& config, RealizationId first_id) {
  const ResponseMap responses = compute_responses(image, bank);
  if (responses.max_response <= 0.0) return {};
  const auto raw = threshold_responses(responses, config.activation_fraction * responses.max_response);
  const auto features = non_maxima_suppress(raw, config.nms_radius);
  std::vector<PartRealization> out;
  out.reserve(features.size());
  for (const Feature& f : features) {
    PartRealization r;
    r.id = first_id++;
    r.part_label = f.orientation + 1;
    r.image_id = image.id;
    r.position = {static_cast<double>(f.x), static_cast<double>(f.y)};
    r.extent = Box::point(r.position);
    out.push_back(std::move(r));
  }
  return out;
}

ObjectGraph build_object_graph(std::span<const PartRealization> realizations, const ModeSet& modes, double radius,
                               int layer, const std::string& image_id) {
  const auto stars = build_receptive_graphs(realizations, modes, radius);
  return union_object_graph(stars, {realizations.begin(), realizations.end()}, layer, image_id);
}

void assign_footprints(std::vector<Part>& parts, std::span<const PartRealization> realizations) {
  std::map<PartLabel, std::pair<std::size_t, std::pair<double, double>>> sums;
  for (const auto& r : realizations) {
    auto& s = sums[r.part_label];
    ++s.first;
    s.second.first += r.extent.width();
    s.second.second += r.extent.height();
  }
  for (Part& p : parts) {
    auto it = sums.find(p.label);
    if (it == sums.end()) continue;
    const double n = static_cast<double>(it->second.first);
    p.footprint_width = it->second.second.first / n;
    p.footprint_height = it->second.second.second / n;
  }
}

namespace {

std::uint64_t layer_seed(std::uint64_t seed, int layer) {
  return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(layer));
}

ModeSet quantized(const ModeSet& modes) {
  ModeSet out(modes.layer());
  for (const auto& [pair, list] : modes.entries()) {
    std::vector<Mode> rounded = list;
    for (Mode& m : rounded) {
      m.center = {round_significant(m.center.x), round_significant(m.center.y)};
      m.weight = round_significant(m.weight);
    }
    out.set(pair, std::move(rounded));
  }
  return out;
}

double mean_best_value(const std::vector<Part>& parts, std::size_t top) {
  const std::size_t n = std::min(top, parts.size());
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += parts[i].mdl_value;
  return sum / static_cast<double>(n);
}

using Placement = std::multiset<std::pair<double, double>>;
using Links = std::multiset<std::pair<std::pair<double, double>, std::pair<double, double>>>;

std::pair<Placement, Links> geometry(const ObjectGraph& g, double scale) {
  std::map<RealizationId, std::pair<double, double>> at;
  Placement nodes;
  for (const auto& r : g.nodes()) {
    const Vec2 p = scale * r.position;
    at[r.id] = {p.x, p.y};
    nodes.insert({p.x, p.y});
  }
  Links links;
  for (const auto& e : g.edges()) links.insert({at.at(e.src), at.at(e.dst)});
  return {std::move(nodes), std::move(links)};
}

// Same node positions and the same linked position pairs once the lower layer
// is subsampled: only the labels changed, so further layers would repeat it.
bool same_geometry(const ObjectGraph& lower, const ObjectGraph& upper, double sigma) {
  return lower.node_count() == upper.node_count() && lower.edge_count() == upper.edge_count() &&
         geometry(lower, sigma) == geometry(upper, 1.0);
}

}  // namespace

TrainingResult learn_vocabulary(std::span<const ShapeImage> images, const TrainConfig& requested) {
  requested.validate();
  const TrainConfig config = requested.quantized();
  if (images.empty()) throw Error(ErrorCode::kInvalidInput, "training set is empty");
  const int jobs = config.jobs;
  const GaborBank bank = build_gabor_bank(config.theta_count, config.gabor);
  const std::size_t n = images.size();

  std::vector<std::vector<PartRealization>> current(n);
  parallel_for(n, jobs, [&](std::size_t i) { current[i] = layer_one_realizations(images[i], bank, config); });
  {
    RealizationId next = 0;
    for (auto& rs : current) {
      for (auto& r : rs) r.id = next++;
    }
    if (next == 0) throw Error(ErrorCode::kNoFeatures, "no training image produced features");
  }

  TrainingResult result;
  result.vocabulary.config = config;
  result.training_graphs.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.training_graphs[i].image_id = images[i].id;

  std::vector<Part> parts = layer_one_parts(config.theta_count);
  for (int layer = 1;; ++layer) {
    std::vector<PartRealization> all;
    for (const auto& rs : current) all.insert(all.end(), rs.begin(), rs.end());
    assign_footprints(parts, all);
    for (Part& p : parts) {
      p.mdl_value = round_significant(p.mdl_value);
      p.footprint_width = round_significant(p.footprint_width);
      p.footprint_height = round_significant(p.footprint_height);
    }

    const auto samples = collect_samples(all, config.neighborhood_radius);
    ModeSet modes = quantized(learn_modes(samples, config.clustering, layer_seed(config.seed, layer), layer));

    std::vector<ObjectGraph> graphs(n);
    parallel_for(n, jobs, [&](std::size_t i) {
      graphs[i] = build_object_graph(current[i], modes, config.neighborhood_radius, layer, images[i].id);
    });
    if (layer > 1 && std::ranges::all_of(std::views::iota(std::size_t{0}, n), [&](std::size_t i) {
          return same_geometry(result.training_graphs[i].layers.back(), graphs[i], config.sigma);
        })) {
      break;
    }
    for (std::size_t i = 0; i < n; ++i) result.training_graphs[i].layers.push_back(graphs[i]);

    LayerStats stats;
    stats.layer = layer;
    stats.part_count = parts.size();
    stats.mode_count = modes.mode_count();
    stats.realization_count = all.size();
    stats.mean_best_mdl = layer == 1 ? 0.0 : mean_best_value(parts, 10);
    result.stats.push_back(stats);
    result.vocabulary.layers.push_back({layer, parts, std::move(modes)});

    if (layer >= config.max_layers) break;

    const ObjectGraph united = disjoint_union(graphs, layer);
    DiscoveryResult found = discover(united, config.miner, jobs);
    for (const auto& line : found.trace) result.miner_trace.push_back("layer=" + std::to_string(layer) + " " + line);

    // Only compressing compositions move up; single nodes and parts that do
    // not shrink the graph would repeat the layer below indefinitely.
    std::vector<Part> kept;
    std::vector<PartLabel> relabel(found.parts.size() + 1, 0);
    for (const Candidate& c : found.parts) {
      if (c.part.edges.empty() || c.value >= 1.0) continue;
      kept.push_back(c.part);
    }
    if (kept.empty()) break;
    const std::vector<Part> unlabelled = kept;
    kept = assign_part_labels(std::move(kept));
    for (const Part& before : unlabelled) {
      const auto it = std::find_if(kept.begin(), kept.end(), [&](const Part& p) { return p.same_shape(before); });
      relabel[static_cast<std::size_t>(before.label)] = it->label;
    }

    std::vector<std::vector<PartRealization>> next(n);
    std::map<std::string, std::size_t> image_index;
    for (std::size_t i = 0; i < n; ++i) image_index.emplace(images[i].id, i);
    for (PartRealization& r : found.realizations) {
      const PartLabel label = relabel[static_cast<std::size_t>(r.part_label)];
      if (label == 0) continue;
      r.part_label = label;
      next[image_index.at(r.image_id)].push_back(std::move(r));
    }
    RealizationId next_id = 0;
    for (auto& rs : next) {
      rs = subsample_positions(local_inhibition(rs, config.inhibition_radius), config.sigma);
      for (auto& r : rs) r.id = next_id++;
    }
    current = std::move(next);
    parts = std::move(kept);
    for (Part& p : parts) p.layer = layer + 1;
  }
  return result;
}

}  // namespace chop
