#include "chop/graphs.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "chop/error.hpp"
#include "chop/relations.hpp"

namespace chop {

Part Part::star(PartLabel center, std::vector<PartEdge> edges) {
  Part p;
  p.center = center;
  p.edges = std::move(edges);
  std::sort(p.edges.begin(), p.edges.end());
  return p;
}

std::strong_ordering Part::compare_shape(const Part& other) const {
  if (auto c = center <=> other.center; c != 0) return c;
  return edges <=> other.edges;
}

ObjectGraph::ObjectGraph(int layer, std::string image_id, std::vector<PartRealization> nodes,
                         std::vector<GraphEdge> edges)
    : layer_(layer), image_id_(std::move(image_id)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  id_index_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) id_index_.emplace_back(nodes_[i].id, i);
  std::sort(id_index_.begin(), id_index_.end());
  for (std::size_t i = 1; i < id_index_.size(); ++i) {
    if (id_index_[i].first == id_index_[i - 1].first) {
      throw Error(ErrorCode::kInvalidInput, "duplicate realization id " + std::to_string(id_index_[i].first));
    }
  }

  std::vector<std::size_t> degree(nodes_.size(), 0);
  std::vector<std::size_t> src_index(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto s = index_of(edges_[e].src);
    auto d = index_of(edges_[e].dst);
    if (!s || !d) {
      throw Error(ErrorCode::kInvalidInput, "edge endpoint missing: " + std::to_string(edges_[e].src) + "->" +
                                                std::to_string(edges_[e].dst));
    }
    src_index[e] = *s;
    ++degree[*s];
  }
  out_offsets_.assign(nodes_.size() + 1, 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) out_offsets_[i + 1] = out_offsets_[i] + degree[i];
  out_edge_list_.resize(edges_.size());
  std::vector<std::size_t> cursor(out_offsets_.begin(), out_offsets_.end() - 1);
  for (std::size_t e = 0; e < edges_.size(); ++e) out_edge_list_[cursor[src_index[e]]++] = e;

  std::map<PartLabel, std::vector<std::size_t>> by_label;
  for (const auto& [id, idx] : id_index_) by_label[nodes_[idx].part_label].push_back(idx);
  label_index_.assign(by_label.begin(), by_label.end());
}

std::optional<std::size_t> ObjectGraph::index_of(RealizationId id) const {
  auto it = std::lower_bound(id_index_.begin(), id_index_.end(), std::make_pair(id, std::size_t{0}));
  if (it == id_index_.end() || it->first != id) return std::nullopt;
  return it->second;
}

const PartRealization& ObjectGraph::node(RealizationId id) const {
  auto idx = index_of(id);
  if (!idx) throw Error(ErrorCode::kInvalidInput, "unknown realization id " + std::to_string(id));
  return nodes_[*idx];
}

std::span<const std::size_t> ObjectGraph::out_edges(std::size_t node_index) const {
  return std::span<const std::size_t>(out_edge_list_).subspan(
      out_offsets_[node_index], out_offsets_[node_index + 1] - out_offsets_[node_index]);
}

std::span<const std::size_t> ObjectGraph::nodes_with_label(PartLabel label) const {
  auto it = std::lower_bound(label_index_.begin(), label_index_.end(), label,
                             [](const auto& entry, PartLabel l) { return entry.first < l; });
  if (it == label_index_.end() || it->first != label) return {};
  return it->second;
}

std::vector<PartLabel> ObjectGraph::distinct_labels() const {
  std::vector<PartLabel> out;
  out.reserve(label_index_.size());
  for (const auto& entry : label_index_) out.push_back(entry.first);
  return out;
}

std::vector<ModeId> ObjectGraph::distinct_modes() const {
  std::set<ModeId> modes;
  for (const GraphEdge& e : edges_) modes.insert(e.mode);
  return {modes.begin(), modes.end()};
}

std::vector<ReceptiveGraph> build_receptive_graphs(std::span<const PartRealization> realizations,
                                                   const ModeSet& modes, double radius) {
  std::vector<Vec2> points;
  points.reserve(realizations.size());
  for (const auto& r : realizations) points.push_back(r.position);
  const RadiusIndex index(points, radius);

  std::vector<ReceptiveGraph> stars;
  stars.reserve(realizations.size());
  std::vector<std::size_t> neighbours;
  for (std::size_t a = 0; a < realizations.size(); ++a) {
    const PartRealization& root = realizations[a];
    ReceptiveGraph star{root.id, {}};
    neighbours.clear();
    index.for_each_within(root.position, radius, [&](std::size_t b) {
      if (b != a && realizations[b].image_id == root.image_id) neighbours.push_back(b);
    });
    std::sort(neighbours.begin(), neighbours.end());
    for (std::size_t b : neighbours) {
      const PartRealization& leaf = realizations[b];
      auto pair_modes = modes.modes(root.part_label, leaf.part_label);
      if (pair_modes.empty()) continue;
      const EdgeLabel label = label_edge(root.position - leaf.position, pair_modes);
      star.leaves.push_back({leaf.id, label.mode});
    }
    stars.push_back(std::move(star));
  }
  return stars;
}

ObjectGraph union_object_graph(std::span<const ReceptiveGraph> stars, std::vector<PartRealization> realizations,
                               int layer, std::string image_id) {
  std::vector<GraphEdge> edges;
  for (const ReceptiveGraph& star : stars) {
    for (const StarLeaf& leaf : star.leaves) edges.push_back({star.root, leaf.leaf, leaf.mode});
  }
  return ObjectGraph(layer, std::move(image_id), std::move(realizations), std::move(edges));
}

ObjectGraph disjoint_union(std::span<const ObjectGraph> graphs, int layer) {
  std::vector<PartRealization> nodes;
  std::vector<GraphEdge> edges;
  for (const ObjectGraph& g : graphs) {
    nodes.insert(nodes.end(), g.nodes().begin(), g.nodes().end());
    edges.insert(edges.end(), g.edges().begin(), g.edges().end());
  }
  return ObjectGraph(layer, "", std::move(nodes), std::move(edges));
}

namespace {

struct EdgeSpecGroup {
  PartEdge spec;
  std::size_t multiplicity = 0;
  std::vector<RealizationId> candidates;  // ascending, unique
};

// Chooses, group by group, ascending combinations of unused candidate leaves.
class StarMatcher {
 public:
  StarMatcher(RealizationId root, std::vector<EdgeSpecGroup>& groups, std::vector<StarInstance>& out)
      : root_(root), groups_(groups), out_(out) {}

  void run() {
    chosen_.clear();
    recurse_group(0);
  }

 private:
  void recurse_group(std::size_t g) {
    if (g == groups_.size()) {
      out_.push_back({root_, chosen_});
      return;
    }
    recurse_pick(g, 0, groups_[g].multiplicity);
  }

  void recurse_pick(std::size_t g, std::size_t start, std::size_t remaining) {
    if (remaining == 0) {
      recurse_group(g + 1);
      return;
    }
    const auto& cands = groups_[g].candidates;
    for (std::size_t i = start; i + remaining <= cands.size(); ++i) {
      const RealizationId leaf = cands[i];
      if (std::find(chosen_.begin(), chosen_.end(), leaf) != chosen_.end()) continue;
      chosen_.push_back(leaf);
      recurse_pick(g, i + 1, remaining - 1);
      chosen_.pop_back();
    }
  }

  RealizationId root_;
  std::vector<EdgeSpecGroup>& groups_;
  std::vector<StarInstance>& out_;
  std::vector<RealizationId> chosen_;
};

}  // namespace

std::vector<StarInstance> find_star_isomorphisms(const Part& pattern, const ObjectGraph& graph) {
  std::vector<EdgeSpecGroup> groups;
  for (const PartEdge& e : pattern.edges) {
    if (!groups.empty() && groups.back().spec == e) {
      ++groups.back().multiplicity;
    } else {
      groups.push_back({e, 1, {}});
    }
  }

  std::vector<StarInstance> out;
  const auto nodes = graph.nodes();
  for (std::size_t root_idx : graph.nodes_with_label(pattern.center)) {
    const RealizationId root = nodes[root_idx].id;
    bool feasible = true;
    for (EdgeSpecGroup& group : groups) {
      group.candidates.clear();
      for (std::size_t e : graph.out_edges(root_idx)) {
        const GraphEdge& edge = graph.edges()[e];
        if (edge.dst == root || edge.mode != group.spec.mode) continue;
        if (graph.label_of(edge.dst) != group.spec.child_label) continue;
        group.candidates.push_back(edge.dst);
      }
      std::sort(group.candidates.begin(), group.candidates.end());
      group.candidates.erase(std::unique(group.candidates.begin(), group.candidates.end()), group.candidates.end());
      if (group.candidates.size() < group.multiplicity) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    StarMatcher(root, groups, out).run();
  }
  return out;
}

int InferenceGraph::top_nonempty_layer() const {
  for (int l = depth(); l >= 1; --l) {
    if (!layers[static_cast<std::size_t>(l - 1)].empty()) return l;
  }
  return 0;
}

std::string to_dot(const ObjectGraph& graph) {
  std::ostringstream out;
  out << "digraph layer" << graph.layer() << " {\n";
  for (const PartRealization& n : graph.nodes()) {
    out << "  n" << n.id << " [label=\"" << n.part_label << "\", pos=\"" << n.position.x << ","
        << -n.position.y << "!\"];\n";
  }
  for (const GraphEdge& e : graph.edges()) {
    out << "  n" << e.src << " -> n" << e.dst << " [label=\"" << e.mode << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_dot(const Part& part) {
  std::ostringstream out;
  out << "digraph part_L" << part.layer << "_" << part.label << " {\n";
  out << "  root [label=\"" << part.center << "\", shape=doublecircle];\n";
  for (std::size_t i = 0; i < part.edges.size(); ++i) {
    out << "  leaf" << i << " [label=\"" << part.edges[i].child_label << "\"];\n";
    out << "  root -> leaf" << i << " [label=\"" << part.edges[i].mode << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace chop
