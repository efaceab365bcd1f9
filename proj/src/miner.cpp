#include "chop/miner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "chop/error.hpp"
#include "chop/parallel.hpp"

namespace chop {

EncodingModel EncodingModel::of(const ObjectGraph& graph) {
  return {std::max<int>(1, static_cast<int>(graph.distinct_labels().size())),
          std::max<int>(1, static_cast<int>(graph.distinct_modes().size()))};
}

double description_length(std::size_t nodes, std::size_t edges, const EncodingModel& model) {
  const double v = static_cast<double>(nodes);
  const double e = static_cast<double>(edges);
  const double lv = static_cast<double>(std::max(1, model.node_label_count));
  const double le = static_cast<double>(std::max(1, model.mode_label_count));
  const double vbits = std::log2(v + 1.0) + v * std::log2(lv);
  const double ebits = e * (1.0 + std::log2(le));
  const double abits = v * std::log2(v + 1.0);
  return vbits + ebits + abits;
}

double description_length(const ObjectGraph& graph, const EncodingModel& model) {
  return description_length(graph.node_count(), graph.edge_count(), model);
}

double description_length(const Part& part, const EncodingModel& model) {
  return description_length(1 + part.edges.size(), part.edges.size(), model);
}

std::vector<StarInstance> select_disjoint(std::span<const StarInstance> instances) {
  std::vector<StarInstance> ordered(instances.begin(), instances.end());
  std::sort(ordered.begin(), ordered.end());
  std::set<RealizationId> used;
  std::vector<StarInstance> accepted;
  for (const StarInstance& inst : ordered) {
    if (used.count(inst.root)) continue;
    if (std::any_of(inst.leaves.begin(), inst.leaves.end(), [&](RealizationId id) { return used.count(id) > 0; })) {
      continue;
    }
    used.insert(inst.root);
    used.insert(inst.leaves.begin(), inst.leaves.end());
    accepted.push_back(inst);
  }
  return accepted;
}

namespace {

// Group index per node (by node index), -1 for untouched nodes.
std::vector<int> group_map(const ObjectGraph& graph, std::span<const StarInstance> accepted) {
  std::vector<int> group(graph.node_count(), -1);
  for (std::size_t g = 0; g < accepted.size(); ++g) {
    group[*graph.index_of(accepted[g].root)] = static_cast<int>(g);
    for (RealizationId leaf : accepted[g].leaves) group[*graph.index_of(leaf)] = static_cast<int>(g);
  }
  return group;
}

}  // namespace

CompressedSize compressed_size(const ObjectGraph& graph, std::span<const StarInstance> instances) {
  const std::vector<StarInstance> accepted = select_disjoint(instances);
  const std::vector<int> group = group_map(graph, accepted);
  std::size_t removed_nodes = 0;
  std::size_t internal_edges = 0;
  for (std::size_t g = 0; g < accepted.size(); ++g) {
    removed_nodes += accepted[g].leaves.size();
    auto count_internal = [&](RealizationId id) {
      for (std::size_t e : graph.out_edges(*graph.index_of(id))) {
        if (group[*graph.index_of(graph.edges()[e].dst)] == static_cast<int>(g)) ++internal_edges;
      }
    };
    count_internal(accepted[g].root);
    for (RealizationId leaf : accepted[g].leaves) count_internal(leaf);
  }
  return {graph.node_count() - removed_nodes, graph.edge_count() - internal_edges, accepted.size()};
}

ObjectGraph compress(const ObjectGraph& graph, const Candidate& candidate) {
  const std::vector<StarInstance> accepted = select_disjoint(candidate.instances);
  if (accepted.empty()) {
    return ObjectGraph(graph.layer(), graph.image_id(), {graph.nodes().begin(), graph.nodes().end()},
                       {graph.edges().begin(), graph.edges().end()});
  }
  const std::vector<int> group = group_map(graph, accepted);
  RealizationId next_id = 0;
  for (const PartRealization& n : graph.nodes()) next_id = std::max(next_id, n.id + 1);

  std::vector<PartRealization> nodes;
  std::vector<RealizationId> replacement(accepted.size());
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    if (group[i] < 0) nodes.push_back(graph.nodes()[i]);
  }
  for (std::size_t g = 0; g < accepted.size(); ++g) {
    const PartRealization& root = graph.node(accepted[g].root);
    PartRealization merged;
    merged.id = next_id++;
    merged.part_label = kCompressedLabel;
    merged.image_id = root.image_id;
    merged.position = root.position;
    merged.children.push_back(accepted[g].root);
    merged.children.insert(merged.children.end(), accepted[g].leaves.begin(), accepted[g].leaves.end());
    merged.extent = root.extent;
    for (RealizationId leaf : accepted[g].leaves) merged.extent.expand(graph.node(leaf).extent);
    replacement[g] = merged.id;
    nodes.push_back(std::move(merged));
  }

  std::vector<GraphEdge> edges;
  for (const GraphEdge& e : graph.edges()) {
    const int gs = group[*graph.index_of(e.src)];
    const int gd = group[*graph.index_of(e.dst)];
    if (gs >= 0 && gs == gd) continue;
    edges.push_back({gs >= 0 ? replacement[gs] : e.src, gd >= 0 ? replacement[gd] : e.dst, e.mode});
  }
  return ObjectGraph(graph.layer(), graph.image_id(), std::move(nodes), std::move(edges));
}

double compression_value(const Candidate& candidate, const ObjectGraph& graph) {
  const EncodingModel model = EncodingModel::of(graph);
  const double dl_graph = description_length(graph, model);
  if (dl_graph <= 0.0) throw Error(ErrorCode::kEmptyGraph, "cannot evaluate against an empty graph");
  const CompressedSize size = compressed_size(graph, candidate.instances);
  return (description_length(candidate.part, model) + description_length(size.nodes, size.edges, model)) / dl_graph;
}

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (std::abs(a.value - b.value) > 1e-12) return a.value < b.value;
  if (a.part.edges.size() != b.part.edges.size()) return a.part.edges.size() < b.part.edges.size();
  return a.part.compare_shape(b.part) < 0;
}

std::vector<Candidate> enumerate_children(std::span<const Candidate> parents, const ObjectGraph& graph) {
  auto shape_less = [](const Part& a, const Part& b) { return a.compare_shape(b) < 0; };
  std::set<Part, decltype(shape_less)> shapes(shape_less);
  for (const Candidate& parent : parents) {
    std::set<RealizationId> roots;
    for (const StarInstance& inst : parent.instances) roots.insert(inst.root);
    for (RealizationId root : roots) {
      const std::size_t root_idx = *graph.index_of(root);
      std::set<PartEdge> specs;
      for (std::size_t e : graph.out_edges(root_idx)) {
        const GraphEdge& edge = graph.edges()[e];
        if (edge.dst == root) continue;
        specs.insert({graph.label_of(edge.dst), edge.mode});
      }
      for (const PartEdge& spec : specs) {
        std::vector<PartEdge> edges = parent.part.edges;
        edges.push_back(spec);
        shapes.insert(Part::star(parent.part.center, std::move(edges)));
      }
    }
  }

  std::vector<Candidate> children;
  for (const Part& shape : shapes) {
    Candidate c{shape, find_star_isomorphisms(shape, graph), 0.0};
    if (!c.instances.empty()) children.push_back(std::move(c));
  }
  return children;
}

std::vector<PartRealization> realize(std::span<const Part> parts, std::span<const std::vector<StarInstance>> instances,
                                     const ObjectGraph& graph) {
  std::vector<PartRealization> out;
  RealizationId next_id = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    RealizationId last_root = 0;
    bool first = true;
    // Instances are sorted by (root, leaves), so the first per root is the
    // lexicographically smallest leaf assignment.
    for (const StarInstance& inst : instances[p]) {
      if (!first && inst.root == last_root) continue;
      first = false;
      last_root = inst.root;
      const PartRealization& root = graph.node(inst.root);
      PartRealization r;
      r.id = next_id++;
      r.part_label = parts[p].label;
      r.image_id = root.image_id;
      r.position = root.position;
      r.children.push_back(inst.root);
      r.children.insert(r.children.end(), inst.leaves.begin(), inst.leaves.end());
      r.extent = root.extent;
      for (RealizationId leaf : inst.leaves) r.extent.expand(graph.node(leaf).extent);
      out.push_back(std::move(r));
    }
  }
  return out;
}

DiscoveryResult discover(const ObjectGraph& graph, const MinerParams& params, int jobs) {
  if (params.beam < 1 || params.num_best < 1 || params.best_part_size < 1) {
    throw Error(ErrorCode::kInvalidParameter, "beam, num_best and best_part_size must be positive");
  }
  DiscoveryResult result;
  if (graph.empty()) return result;

  auto evaluate = [&](std::vector<Candidate>& candidates) {
    parallel_for(candidates.size(), jobs,
                 [&](std::size_t i) { candidates[i].value = compression_value(candidates[i], graph); });
    std::sort(candidates.begin(), candidates.end(), candidate_less);
  };

  std::vector<Candidate> parents;
  for (PartLabel label : graph.distinct_labels()) {
    const auto holders = graph.nodes_with_label(label);
    if (static_cast<int>(holders.size()) < params.min_seed_frequency) continue;
    Candidate seed{Part::star(label, {}), {}, 0.0};
    for (std::size_t idx : holders) seed.instances.push_back({graph.nodes()[idx].id, {}});
    parents.push_back(std::move(seed));
  }
  evaluate(parents);
  std::vector<Candidate> best = parents;
  {
    std::ostringstream line;
    line << "seeds=" << parents.size();
    if (!parents.empty()) line << " best=" << parents.front().value;
    result.trace.push_back(line.str());
  }

  int size = 0;
  while (!parents.empty() && size < params.best_part_size) {
    std::vector<Candidate> children = enumerate_children(parents, graph);
    evaluate(children);
    std::ostringstream line;
    line << "size=" << size + 1 << " children=" << children.size();
    if (children.size() > static_cast<std::size_t>(params.beam)) children.resize(static_cast<std::size_t>(params.beam));
    line << " kept=" << children.size();
    if (!children.empty()) line << " best=" << children.front().value;
    result.trace.push_back(line.str());

    best.insert(best.end(), children.begin(), children.end());
    std::stable_sort(best.begin(), best.end(), candidate_less);
    parents = std::move(children);
    ++size;
  }
  if (best.size() > static_cast<std::size_t>(params.num_best)) best.resize(static_cast<std::size_t>(params.num_best));

  std::vector<Part> parts;
  std::vector<std::vector<StarInstance>> instances;
  for (std::size_t i = 0; i < best.size(); ++i) {
    best[i].part.label = static_cast<PartLabel>(i + 1);
    best[i].part.layer = graph.layer() + 1;
    best[i].part.mdl_value = best[i].value;
    parts.push_back(best[i].part);
    instances.push_back(best[i].instances);
  }
  result.realizations = realize(parts, instances, graph);
  result.parts = std::move(best);
  return result;
}

}  // namespace chop
