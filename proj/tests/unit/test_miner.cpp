#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "chop/error.hpp"
#include "chop/miner.hpp"
#include "oracles.hpp"

namespace chop {
namespace {

PartRealization node(RealizationId id, PartLabel label) {
  PartRealization r;
  r.id = id;
  r.part_label = label;
  r.image_id = "img";
  r.position = {static_cast<double>(id), 0.0};
  return r;
}

// `copies` disjoint stars 1 -> {2, 3} (modes 1, 2), plus `noise` isolated
// label-4 nodes.
ObjectGraph star_copies(int copies, int noise = 0) {
  std::vector<PartRealization> nodes;
  std::vector<GraphEdge> edges;
  int id = 0;
  for (int c = 0; c < copies; ++c) {
    nodes.push_back(node(id, 1));
    nodes.push_back(node(id + 1, 2));
    nodes.push_back(node(id + 2, 3));
    edges.push_back({id, id + 1, 1});
    edges.push_back({id, id + 2, 2});
    id += 3;
  }
  for (int n = 0; n < noise; ++n) nodes.push_back(node(id++, 4));
  return ObjectGraph(1, "img", nodes, edges);
}

oracle::SimpleGraph simple(const ObjectGraph& g) {
  oracle::SimpleGraph s;
  for (const auto& n : g.nodes()) {
    s.ids.push_back(n.id);
    s.labels.push_back(n.part_label);
  }
  for (const auto& e : g.edges()) s.edges.emplace_back(e.src, e.dst, e.mode);
  return s;
}

Part to_part(const oracle::Star& s) {
  std::vector<PartEdge> edges;
  for (const auto& [l, m] : s.edges) edges.push_back({l, m});
  return Part::star(s.center, edges);
}

TEST(DescriptionLength, EmptyGraphIsZero) {
  EXPECT_EQ(description_length(0, 0, {}), 0.0);
  EXPECT_EQ(description_length(ObjectGraph(), EncodingModel::of(ObjectGraph())), 0.0);
}

TEST(DescriptionLength, SingleNodeByHand) {
  // log2(2) + 1 * log2(1) + 0 + 1 * log2(2)
  EXPECT_DOUBLE_EQ(description_length(1, 0, {1, 1}), 2.0);
}

TEST(DescriptionLength, FourNodeStarMatchesIndependentCounter) {
  const ObjectGraph g(1, "img", {node(0, 1), node(1, 2), node(2, 2), node(3, 2)}, {{0, 1, 1}, {0, 2, 2}, {0, 3, 1}});
  const EncodingModel m = EncodingModel::of(g);
  EXPECT_EQ(m.node_label_count, 2);
  EXPECT_EQ(m.mode_label_count, 2);
  EXPECT_NEAR(description_length(g, m), oracle::bits(4, 3, 2, 2), 1e-12);
}

TEST(DescriptionLength, PositiveAndMonotone) {
  const EncodingModel m{3, 2};
  for (std::size_t v = 1; v < 20; ++v) {
    EXPECT_GT(description_length(v, 0, m), 0.0);
    EXPECT_GT(description_length(v + 1, 0, m), description_length(v, 0, m));
    EXPECT_GT(description_length(v, v, m), description_length(v, v - 1, m));
  }
}

TEST(Compress, NoInstancesLeavesGraphUnchanged) {
  const ObjectGraph g = star_copies(2);
  const ObjectGraph c = compress(g, Candidate{Part::star(1, {{2, 1}, {3, 2}}), {}, 0.0});
  EXPECT_EQ(c.node_count(), g.node_count());
  EXPECT_EQ(c.edge_count(), g.edge_count());
}

TEST(Compress, WholeStarBecomesOneNode) {
  const ObjectGraph g = star_copies(1);
  const Part p = Part::star(1, {{2, 1}, {3, 2}});
  const ObjectGraph c = compress(g, Candidate{p, find_star_isomorphisms(p, g), 0.0});
  ASSERT_EQ(c.node_count(), 1u);
  EXPECT_EQ(c.edge_count(), 0u);
  EXPECT_EQ(c.nodes()[0].part_label, kCompressedLabel);
  EXPECT_EQ(c.nodes()[0].children, (std::vector<RealizationId>{0, 1, 2}));
}

TEST(Compress, DisjointInstancesDropNodes) {
  const ObjectGraph g = star_copies(3, 4);
  const Part p = Part::star(1, {{2, 1}, {3, 2}});
  const auto inst = find_star_isomorphisms(p, g);
  ASSERT_EQ(inst.size(), 3u);
  const ObjectGraph c = compress(g, Candidate{p, inst, 0.0});
  EXPECT_EQ(c.node_count(), g.node_count() - 3 * (3 - 1));
}

TEST(Compress, RewiresOutsideEdgesAndKeepsModes) {
  // 5 -> 0 enters the instance, 1 -> 6 leaves it.
  const ObjectGraph g(1, "img", {node(0, 1), node(1, 2), node(5, 7), node(6, 8)}, {{0, 1, 1}, {5, 0, 4}, {1, 6, 3}});
  const Part p = Part::star(1, {{2, 1}});
  const ObjectGraph c = compress(g, Candidate{p, find_star_isomorphisms(p, g), 0.0});
  ASSERT_EQ(c.node_count(), 3u);
  ASSERT_EQ(c.edge_count(), 2u);
  const RealizationId merged = c.nodes().back().id;
  EXPECT_GT(merged, 6);
  EXPECT_EQ(c.edges()[0], (GraphEdge{5, merged, 4}));
  EXPECT_EQ(c.edges()[1], (GraphEdge{merged, 6, 3}));
}

TEST(Compress, OverlappingInstancesResolvedInRootOrder) {
  // Two instances share leaf 2; only the one rooted at 0 is accepted.
  const ObjectGraph g(1, "img", {node(0, 1), node(1, 1), node(2, 2)}, {{0, 2, 1}, {1, 2, 1}});
  const Part p = Part::star(1, {{2, 1}});
  const auto inst = find_star_isomorphisms(p, g);
  ASSERT_EQ(inst.size(), 2u);
  const auto accepted = select_disjoint(inst);
  ASSERT_EQ(accepted.size(), 1u);
  EXPECT_EQ(accepted[0].root, 0);
}

TEST(Compress, SizeShortcutAgreesWithRebuild) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sg = oracle::random_graph(rng, 12, 3, 2, 0.3, 3);
    const ObjectGraph g = oracle::to_object_graph(sg);
    for (const Part& p : {Part::star(1, {{2, 1}}), Part::star(2, {{1, 1}, {3, 2}}), Part::star(3, {})}) {
      const Candidate c{p, find_star_isomorphisms(p, g), 0.0};
      const ObjectGraph rebuilt = compress(g, c);
      const CompressedSize size = compressed_size(g, c.instances);
      EXPECT_EQ(size.nodes, rebuilt.node_count());
      EXPECT_EQ(size.edges, rebuilt.edge_count());
      std::set<std::pair<int, std::vector<int>>> as_set;
      for (const auto& i : c.instances) as_set.insert({i.root, i.leaves});
      const auto [v, e] = oracle::compressed_counts(sg, as_set);
      EXPECT_EQ(static_cast<double>(size.nodes), v);
      EXPECT_EQ(static_cast<double>(size.edges), e);
    }
  }
}

TEST(CompressionValue, NoInstancesExceedsOne) {
  const ObjectGraph g = star_copies(2);
  const Candidate c{Part::star(1, {{2, 1}, {3, 2}}), {}, 0.0};
  const EncodingModel m = EncodingModel::of(g);
  const double expected = 1.0 + description_length(c.part, m) / description_length(g, m);
  EXPECT_NEAR(compression_value(c, g), expected, 1e-12);
  EXPECT_GT(compression_value(c, g), 1.0);
}

TEST(CompressionValue, RepeatedStructureCompresses) {
  const ObjectGraph g = star_copies(10);
  const Part p = Part::star(1, {{2, 1}, {3, 2}});
  EXPECT_LT(compression_value(Candidate{p, find_star_isomorphisms(p, g), 0.0}, g), 1.0);
}

TEST(CompressionValue, EmptyGraphFails) {
  try {
    compression_value(Candidate{Part::star(1, {}), {}, 0.0}, ObjectGraph());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGraph);
  }
}

TEST(CompressionValue, MatchesOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sg = oracle::random_graph(rng, 10, 3, 2, 0.35, 2);
    const ObjectGraph g = oracle::to_object_graph(sg);
    for (const auto& star : oracle::all_stars(sg, 3, 1)) {
      const Part p = to_part(star);
      EXPECT_NEAR(compression_value(Candidate{p, find_star_isomorphisms(p, g), 0.0}, g), oracle::star_value(star, sg),
                  1e-12);
    }
  }
}

TEST(CompressionValue, DuplicatingGraphLowersValue) {
  const ObjectGraph one = star_copies(2, 1);
  const Part p = Part::star(1, {{2, 1}, {3, 2}});
  const double single = compression_value(Candidate{p, find_star_isomorphisms(p, one), 0.0}, one);
  const ObjectGraph two = star_copies(4, 2);
  const double doubled = compression_value(Candidate{p, find_star_isomorphisms(p, two), 0.0}, two);
  EXPECT_LT(doubled, single);
}

TEST(Children, SingleEdgeExtension) {
  const ObjectGraph g(1, "img", {node(0, 1), node(1, 2)}, {{0, 1, 3}});
  const std::vector<Candidate> parents{{Part::star(1, {}), find_star_isomorphisms(Part::star(1, {}), g), 0.0}};
  const auto children = enumerate_children(parents, g);
  ASSERT_EQ(children.size(), 1u);
  EXPECT_TRUE(children[0].part.same_shape(Part::star(1, {{2, 3}})));
  ASSERT_EQ(children[0].instances.size(), 1u);
}

TEST(Children, NeverSpanTwoReceptiveGraphs) {
  // Chain 1 -> 2 -> 3: extending star {1: (2,1)} through node 2 would need a
  // path, which no single receptive graph contains.
  const ObjectGraph g(1, "img", {node(0, 1), node(1, 2), node(2, 3)}, {{0, 1, 1}, {1, 2, 1}});
  const Part parent = Part::star(1, {{2, 1}});
  const std::vector<Candidate> parents{{parent, find_star_isomorphisms(parent, g), 0.0}};
  EXPECT_TRUE(enumerate_children(parents, g).empty());
}

TEST(Children, MatchesBruteForceExtensions) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sg = oracle::random_graph(rng, 12, 3, 2, 0.3, 12);
    const ObjectGraph g = oracle::to_object_graph(sg);
    std::vector<Candidate> parents;
    for (const auto& star : oracle::all_stars(sg, 1, 1)) {
      const Part p = to_part(star);
      parents.push_back({p, find_star_isomorphisms(p, g), 0.0});
    }
    std::set<oracle::Star> expected;
    for (const Candidate& parent : parents) {
      for (int l = 1; l <= 3; ++l) {
        for (int m = 1; m <= 2; ++m) {
          oracle::Star s{parent.part.center, {}};
          for (const auto& e : parent.part.edges) s.edges.emplace_back(e.child_label, e.mode);
          s.edges.emplace_back(l, m);
          std::sort(s.edges.begin(), s.edges.end());
          if (!oracle::match_star(s, sg).empty()) expected.insert(s);
        }
      }
    }
    std::set<oracle::Star> got;
    for (const Candidate& c : enumerate_children(parents, g)) {
      oracle::Star s{c.part.center, {}};
      for (const auto& e : c.part.edges) s.edges.emplace_back(e.child_label, e.mode);
      EXPECT_TRUE(got.insert(s).second);
      EXPECT_EQ(c.instances, find_star_isomorphisms(c.part, g));
    }
    EXPECT_EQ(got, expected) << "trial " << trial;
  }
}

TEST(Discover, EmptyGraphGivesNothing) {
  const DiscoveryResult r = discover(ObjectGraph(), {});
  EXPECT_TRUE(r.parts.empty());
  EXPECT_TRUE(r.realizations.empty());
}

TEST(Discover, RejectsBadParameters) {
  MinerParams p;
  p.beam = 0;
  EXPECT_THROW(discover(star_copies(1), p), Error);
}

TEST(Discover, IsolatedNodesGiveOnlySingleNodePart) {
  std::vector<PartRealization> nodes;
  for (int i = 0; i < 10; ++i) nodes.push_back(node(i, 5));
  const DiscoveryResult r = discover(ObjectGraph(1, "img", nodes, {}), {});
  ASSERT_EQ(r.parts.size(), 1u);
  EXPECT_TRUE(r.parts[0].part.edges.empty());
  EXPECT_EQ(r.parts[0].part.center, 5);
}

TEST(Discover, RepeatedStarRanksFirst) {
  const DiscoveryResult r = discover(star_copies(5, 6), {});
  ASSERT_FALSE(r.parts.empty());
  EXPECT_TRUE(r.parts[0].part.same_shape(Part::star(1, {{2, 1}, {3, 2}})));
  EXPECT_EQ(r.parts[0].instances.size(), 5u);
}

TEST(Discover, InvariantsHold) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sg = oracle::random_graph(rng, 14, 3, 2, 0.3, 4);
    const ObjectGraph g = oracle::to_object_graph(sg);
    MinerParams params;
    params.num_best = 10;
    const DiscoveryResult r = discover(g, params);
    EXPECT_LE(r.parts.size(), 10u);
    for (std::size_t i = 0; i < r.parts.size(); ++i) {
      EXPECT_EQ(r.parts[i].instances, find_star_isomorphisms(r.parts[i].part, g));
      EXPECT_EQ(r.parts[i].part.label, static_cast<PartLabel>(i + 1));
      EXPECT_LE(r.parts[i].part.edges.size(), static_cast<std::size_t>(params.best_part_size));
      if (i > 0) EXPECT_LE(r.parts[i - 1].value, r.parts[i].value + 1e-12);
    }
    std::set<std::pair<PartLabel, RealizationId>> roots;
    for (const PartRealization& real : r.realizations) {
      EXPECT_TRUE(roots.insert({real.part_label, real.children.front()}).second);
      EXPECT_EQ(real.position, g.node(real.children.front()).position);
      const Candidate& c = r.parts[static_cast<std::size_t>(real.part_label - 1)];
      EXPECT_EQ(real.children.size(), c.part.edges.size() + 1);
    }
  }
}

TEST(Discover, WideBeamMatchesExhaustiveSearch) {
  std::mt19937_64 rng(2024);
  MinerParams params;
  params.beam = 64;
  for (int trial = 0; trial < 40; ++trial) {
    const auto sg = oracle::random_graph(rng, 8, 3, 2, 0.35, 2);
    const ObjectGraph g = oracle::to_object_graph(sg);
    const DiscoveryResult r = discover(g, params);
    double best = INFINITY;
    oracle::Star best_star;
    for (const auto& star : oracle::all_stars(sg, params.best_part_size, params.min_seed_frequency)) {
      if (oracle::match_star(star, sg).empty()) continue;
      const double v = oracle::star_value(star, sg);
      if (v < best - 1e-12 || (std::abs(v - best) <= 1e-12 && (star.edges.size() < best_star.edges.size() ||
                                                                (star.edges.size() == best_star.edges.size() &&
                                                                 star < best_star)))) {
        best = v;
        best_star = star;
      }
    }
    if (std::isinf(best)) {
      EXPECT_TRUE(r.parts.empty());
      continue;
    }
    ASSERT_FALSE(r.parts.empty());
    EXPECT_NEAR(r.parts[0].value, best, 1e-12);
    EXPECT_TRUE(r.parts[0].part.same_shape(to_part(best_star))) << "trial " << trial;
  }
}

}  // namespace
}  // namespace chop
