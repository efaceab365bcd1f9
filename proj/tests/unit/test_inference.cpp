#include <gtest/gtest.h>

#include <set>

#include "chop/error.hpp"
#include "chop/inference.hpp"
#include "chop/serialization.hpp"
#include "synthetic.hpp"

namespace chop {
namespace {

using testing::ShapeKind;

struct Trained {
  std::vector<ShapeImage> images;
  TrainingResult result;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained out;
    out.images = testing::shape_set(ShapeKind::kSquare, "square", 1, 4, 10);
    const auto tris = testing::shape_set(ShapeKind::kTriangle, "tri", 2, 4, 20);
    out.images.insert(out.images.end(), tris.begin(), tris.end());
    out.result = learn_vocabulary(out.images, {});
    return out;
  }();
  return t;
}

std::multiset<std::pair<PartLabel, std::pair<double, double>>> signature(const ObjectGraph& g) {
  std::multiset<std::pair<PartLabel, std::pair<double, double>>> out;
  for (const auto& n : g.nodes()) out.insert({n.part_label, {n.position.x, n.position.y}});
  return out;
}

TEST(PartIndex, CandidatesAscending) {
  VocabularyLayer layer;
  layer.parts = {Part::star(2, {{1, 1}}), Part::star(1, {{1, 1}}), Part::star(2, {{2, 1}})};
  for (std::size_t i = 0; i < layer.parts.size(); ++i) layer.parts[i].label = static_cast<PartLabel>(i + 1);
  PartRealization r;
  r.part_label = 2;
  r.image_id = "img";
  const ObjectGraph g(1, "img", {r}, {});
  EXPECT_EQ(PartIndex(layer).candidates(g), (std::vector<PartLabel>{1, 3}));
}

TEST(Inference, ReproducesTrainingGraphs) {
  const Trained& t = trained();
  for (std::size_t i = 0; i < t.images.size(); ++i) {
    const InferenceGraph g = infer(t.images[i], t.result.vocabulary);
    const InferenceGraph& expected = t.result.training_graphs[i];
    ASSERT_GE(g.depth(), 2);
    // Every layer seen in training is rebuilt with the same realizations.
    const int shared = std::min(g.depth(), expected.depth());
    for (int l = 0; l < shared; ++l) {
      EXPECT_EQ(signature(g.layers[l]), signature(expected.layers[l])) << t.images[i].id << " layer " << l + 1;
      EXPECT_EQ(g.layers[l].edge_count(), expected.layers[l].edge_count());
    }
  }
}

TEST(Inference, BlankImageGivesEmptyGraph) {
  const InferenceGraph g = infer(testing::blank_image("blank", 48), trained().result.vocabulary);
  EXPECT_EQ(g.image_id, "blank");
  ASSERT_EQ(g.depth(), 1);
  EXPECT_TRUE(g.layers[0].empty());
  EXPECT_EQ(g.top_nonempty_layer(), 0);
}

TEST(Inference, ConfigMismatch) {
  const Vocabulary& v = trained().result.vocabulary;
  TrainConfig c = v.config;
  c.theta_count = 4;
  try {
    infer(trained().images[0], v, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigMismatch);
  }
  c = v.config;
  c.sigma = 0.25;
  EXPECT_THROW(infer(trained().images[0], v, c), Error);
}

TEST(Inference, DeterministicAndThreadIndependent) {
  const Trained& t = trained();
  const auto serial = infer_all(t.images, t.result.vocabulary, 1);
  const auto parallel = infer_all(t.images, t.result.vocabulary, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(inference_to_json(serial[i]), inference_to_json(parallel[i]));
    EXPECT_EQ(inference_to_json(serial[i]), inference_to_json(infer(t.images[i], t.result.vocabulary)));
  }
}

TEST(Inference, LabelsExistAndChildrenResolve) {
  const Trained& t = trained();
  const Vocabulary& v = t.result.vocabulary;
  for (const InferenceGraph& g : infer_all(t.images, v, 1)) {
    EXPECT_LE(g.depth(), v.depth());
    for (int l = 1; l <= g.depth(); ++l) {
      const ObjectGraph& layer = g.layers[static_cast<std::size_t>(l - 1)];
      EXPECT_EQ(layer.layer(), l);
      for (const auto& n : layer.nodes()) {
        ASSERT_NE(v.find_part(l, n.part_label), nullptr);
        if (l == 1) continue;
        const Part& p = *v.find_part(l, n.part_label);
        const ObjectGraph& below = g.layers[static_cast<std::size_t>(l - 2)];
        ASSERT_EQ(n.children.size(), p.edges.size() + 1);
        EXPECT_EQ(below.label_of(n.children[0]), p.center);
        for (std::size_t k = 0; k < p.edges.size(); ++k) {
          EXPECT_EQ(below.label_of(n.children[k + 1]), p.edges[k].child_label);
        }
      }
    }
  }
}

TEST(Inference, UnseenShapeStillInfers) {
  const auto circle = testing::make_shape(ShapeKind::kCircle, "circle", "circle", "circle");
  const InferenceGraph g = infer(circle, trained().result.vocabulary);
  ASSERT_GE(g.depth(), 1);
  EXPECT_FALSE(g.layers[0].empty());
}

}  // namespace
}  // namespace chop
