#include "chop/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chop/error.hpp"
#include "json.hpp"

namespace chop {

using Json = nlohmann::ordered_json;

namespace {

std::string format_real(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

// Reals are written with 9 significant digits.
double real(double v) { return round_significant(v); }

Json config_to_json(const TrainConfig& c) {
  Json j;
  j["theta_count"] = c.theta_count;
  j["gabor"] = {{"kernel_size", c.gabor.kernel_size},
                {"wavelength", real(c.gabor.wavelength)},
                {"envelope_sigma", real(c.gabor.envelope_sigma)},
                {"aspect_ratio", real(c.gabor.aspect_ratio)},
                {"phase", real(c.gabor.phase)}};
  j["activation_fraction"] = real(c.activation_fraction);
  j["nms_radius"] = real(c.nms_radius);
  j["neighborhood_radius"] = real(c.neighborhood_radius);
  j["clustering"] = {{"k_max", c.clustering.k_max},
                     {"max_iters", c.clustering.max_iters},
                     {"bin_width", real(c.clustering.bin_width)},
                     {"min_weight", real(c.clustering.min_weight)},
                     {"min_samples", c.clustering.min_samples}};
  j["miner"] = {{"beam", c.miner.beam},
                {"num_best", c.miner.num_best},
                {"best_part_size", c.miner.best_part_size},
                {"min_seed_frequency", c.miner.min_seed_frequency}};
  j["inhibition_radius"] = real(c.inhibition_radius);
  j["sigma"] = real(c.sigma);
  j["max_layers"] = c.max_layers;
  j["seed"] = c.seed;
  return j;
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.theta_count = j.at("theta_count").get<int>();
  const Json& g = j.at("gabor");
  c.gabor.kernel_size = g.at("kernel_size").get<int>();
  c.gabor.wavelength = g.at("wavelength").get<double>();
  c.gabor.envelope_sigma = g.at("envelope_sigma").get<double>();
  c.gabor.aspect_ratio = g.at("aspect_ratio").get<double>();
  c.gabor.phase = g.at("phase").get<double>();
  c.activation_fraction = j.at("activation_fraction").get<double>();
  c.nms_radius = j.at("nms_radius").get<double>();
  c.neighborhood_radius = j.at("neighborhood_radius").get<double>();
  const Json& k = j.at("clustering");
  c.clustering.k_max = k.at("k_max").get<int>();
  c.clustering.max_iters = k.at("max_iters").get<int>();
  c.clustering.bin_width = k.at("bin_width").get<double>();
  c.clustering.min_weight = k.at("min_weight").get<double>();
  c.clustering.min_samples = k.at("min_samples").get<int>();
  const Json& m = j.at("miner");
  c.miner.beam = m.at("beam").get<int>();
  c.miner.num_best = m.at("num_best").get<int>();
  c.miner.best_part_size = m.at("best_part_size").get<int>();
  c.miner.min_seed_frequency = m.at("min_seed_frequency").get<int>();
  c.inhibition_radius = j.at("inhibition_radius").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.max_layers = j.at("max_layers").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Json graph_to_json(const ObjectGraph& g) {
  Json j;
  j["layer"] = g.layer();
  Json nodes = Json::array();
  for (const PartRealization& r : g.nodes()) {
    Json n;
    n["id"] = r.id;
    n["label"] = r.part_label;
    n["x"] = real(r.position.x);
    n["y"] = real(r.position.y);
    n["children"] = r.children;
    if (r.extent.empty()) {
      n["extent"] = nullptr;
    } else {
      n["extent"] = {real(r.extent.min_x), real(r.extent.min_y), real(r.extent.max_x), real(r.extent.max_y)};
    }
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const GraphEdge& e : g.edges()) edges.push_back({e.src, e.dst, e.mode});
  j["edges"] = std::move(edges);
  return j;
}

ObjectGraph graph_from_json(const Json& j, const std::string& image_id) {
  std::vector<PartRealization> nodes;
  for (const Json& n : j.at("nodes")) {
    PartRealization r;
    r.id = n.at("id").get<RealizationId>();
    r.part_label = n.at("label").get<PartLabel>();
    r.image_id = image_id;
    r.position = {n.at("x").get<double>(), n.at("y").get<double>()};
    r.children = n.at("children").get<std::vector<RealizationId>>();
    const Json& e = n.at("extent");
    if (!e.is_null()) r.extent = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>(), e.at(3).get<double>()};
    nodes.push_back(std::move(r));
  }
  std::vector<GraphEdge> edges;
  for (const Json& e : j.at("edges")) {
    edges.push_back({e.at(0).get<RealizationId>(), e.at(1).get<RealizationId>(), e.at(2).get<ModeId>()});
  }
  return ObjectGraph(j.at("layer").get<int>(), image_id, std::move(nodes), std::move(edges));
}

Json inference_json(const InferenceGraph& g) {
  Json j;
  j["image_id"] = g.image_id;
  Json layers = Json::array();
  for (const ObjectGraph& layer : g.layers) layers.push_back(graph_to_json(layer));
  j["layers"] = std::move(layers);
  return j;
}

InferenceGraph inference_from(const Json& j) {
  InferenceGraph g;
  g.image_id = j.at("image_id").get<std::string>();
  for (const Json& layer : j.at("layers")) g.layers.push_back(graph_from_json(layer, g.image_id));
  return g;
}

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kArtifactCorrupt, e.what());
  }
}

void check_version(const Json& j, int expected) {
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer()) {
    throw Error(ErrorCode::kArtifactCorrupt, "missing format version");
  }
  const int version = j["version"].get<int>();
  if (version != expected) {
    throw Error(ErrorCode::kVersionMismatch,
                "format version " + std::to_string(version) + ", expected " + std::to_string(expected));
  }
}

// Runs a decoder, turning schema violations into artifact-corrupt.
template <typename Fn>
auto decode(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kArtifactCorrupt, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidInput) throw Error(ErrorCode::kArtifactCorrupt, e.what());
    throw;
  }
}

}  // namespace

std::string vocabulary_to_json(const Vocabulary& vocab) {
  Json j;
  j["version"] = kVocabularyFormatVersion;
  j["config"] = config_to_json(vocab.config);
  Json layers = Json::array();
  for (const VocabularyLayer& layer : vocab.layers) {
    Json l;
    l["layer"] = layer.layer;
    Json parts = Json::array();
    for (const Part& p : layer.parts) {
      Json pj;
      pj["label"] = p.label;
      pj["center"] = p.center;
      Json edges = Json::array();
      for (const PartEdge& e : p.edges) edges.push_back({e.child_label, e.mode});
      pj["edges"] = std::move(edges);
      pj["value"] = real(p.mdl_value);
      pj["footprint"] = {real(p.footprint_width), real(p.footprint_height)};
      parts.push_back(std::move(pj));
    }
    l["parts"] = std::move(parts);
    Json modes = Json::array();
    for (const auto& [pair, list] : layer.modes.entries()) {
      for (const Mode& m : list) {
        modes.push_back({{"i", pair.first},
                         {"j", pair.second},
                         {"k", m.id},
                         {"center", {real(m.center.x), real(m.center.y)}},
                         {"weight", real(m.weight)}});
      }
    }
    l["modes"] = std::move(modes);
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  return j.dump(1) + "\n";
}

Vocabulary vocabulary_from_json(const std::string& text) {
  const Json j = parse(text);
  check_version(j, kVocabularyFormatVersion);
  return decode([&] {
    Vocabulary vocab;
    vocab.config = config_from_json(j.at("config"));
    for (const Json& l : j.at("layers")) {
      VocabularyLayer layer;
      layer.layer = l.at("layer").get<int>();
      for (const Json& pj : l.at("parts")) {
        std::vector<PartEdge> edges;
        for (const Json& e : pj.at("edges")) edges.push_back({e.at(0).get<PartLabel>(), e.at(1).get<ModeId>()});
        Part p = Part::star(pj.at("center").get<PartLabel>(), std::move(edges));
        p.label = pj.at("label").get<PartLabel>();
        p.layer = layer.layer;
        p.mdl_value = pj.at("value").get<double>();
        if (pj.contains("footprint")) {
          p.footprint_width = pj["footprint"].at(0).get<double>();
          p.footprint_height = pj["footprint"].at(1).get<double>();
        }
        if (p.label != static_cast<PartLabel>(layer.parts.size() + 1)) {
          throw Error(ErrorCode::kArtifactCorrupt, "part labels must run 1..n");
        }
        layer.parts.push_back(std::move(p));
      }
      layer.modes = ModeSet(layer.layer);
      std::map<LabelPair, std::vector<Mode>> grouped;
      for (const Json& m : l.at("modes")) {
        const LabelPair pair{m.at("i").get<PartLabel>(), m.at("j").get<PartLabel>()};
        Mode mode{pair, m.at("k").get<ModeId>(),
                  {m.at("center").at(0).get<double>(), m.at("center").at(1).get<double>()},
                  m.at("weight").get<double>()};
        grouped[pair].push_back(mode);
      }
      for (auto& [pair, list] : grouped) {
        std::sort(list.begin(), list.end(), [](const Mode& a, const Mode& b) { return a.id < b.id; });
        layer.modes.set(pair, std::move(list));
      }
      if (layer.layer != vocab.depth() + 1) throw Error(ErrorCode::kArtifactCorrupt, "layers out of order");
      vocab.layers.push_back(std::move(layer));
    }
    if (vocab.layers.empty()) throw Error(ErrorCode::kArtifactCorrupt, "vocabulary has no layers");
    return vocab;
  });
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  write_text(path, vocabulary_to_json(vocab));
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kMissingArtifacts, "vocabulary not found: " + path.string());
  }
  return vocabulary_from_json(read_text(path));
}

std::string inference_to_json(const InferenceGraph& graph) {
  Json j;
  j["version"] = kInferenceFormatVersion;
  const Json body = inference_json(graph);
  for (const auto& [key, value] : body.items()) j[key] = value;
  return j.dump(1) + "\n";
}

InferenceGraph inference_from_json(const std::string& text) {
  const Json j = parse(text);
  check_version(j, kInferenceFormatVersion);
  return decode([&] { return inference_from(j); });
}

std::string training_to_json(std::span<const TrainingRecord> records) {
  Json j;
  j["version"] = kInferenceFormatVersion;
  Json images = Json::array();
  for (const TrainingRecord& r : records) {
    Json item;
    item["id"] = r.id;
    item["category"] = r.category;
    item["category_label"] = r.category_label;
    item["object_id"] = r.object_id;
    item["view_id"] = r.view_id;
    item["infer_ms"] = real(r.infer_ms);
    item["graph"] = inference_json(r.graph);
    images.push_back(std::move(item));
  }
  j["images"] = std::move(images);
  return j.dump() + "\n";
}

std::vector<TrainingRecord> training_from_json(const std::string& text) {
  const Json j = parse(text);
  check_version(j, kInferenceFormatVersion);
  return decode([&] {
    std::vector<TrainingRecord> out;
    for (const Json& item : j.at("images")) {
      TrainingRecord r;
      r.id = item.at("id").get<std::string>();
      r.category = item.at("category").get<std::string>();
      r.category_label = item.at("category_label").get<int>();
      r.object_id = item.at("object_id").get<std::string>();
      r.view_id = item.at("view_id").get<std::string>();
      r.infer_ms = item.at("infer_ms").get<double>();
      r.graph = inference_from(item.at("graph"));
      out.push_back(std::move(r));
    }
    return out;
  });
}

std::string features_csv(const std::string& image_id, std::span<const Feature> features, bool header) {
  std::ostringstream out;
  if (header) out << "image_id,x,y,orientation,response\n";
  for (const Feature& f : features) {
    out << image_id << ',' << f.x << ',' << f.y << ',' << f.orientation << ',' << format_real(f.response) << '\n';
  }
  return out.str();
}

std::string modes_csv(const Vocabulary& vocab) {
  std::ostringstream out;
  out << "layer,i,j,k,cx,cy,weight\n";
  for (const VocabularyLayer& layer : vocab.layers) {
    for (const auto& [pair, list] : layer.modes.entries()) {
      for (const Mode& m : list) {
        out << layer.layer << ',' << pair.first << ',' << pair.second << ',' << m.id << ',' << format_real(m.center.x)
            << ',' << format_real(m.center.y) << ',' << format_real(m.weight) << '\n';
      }
    }
  }
  return out.str();
}

std::string descriptors_csv(std::span<const ShapeDescriptor> descriptors) {
  std::ostringstream out;
  const std::size_t dim = descriptors.empty() ? 0 : descriptors.front().values.size();
  out << "image_id,layer";
  for (std::size_t i = 1; i <= dim; ++i) out << ",v" << i;
  out << '\n';
  for (const ShapeDescriptor& d : descriptors) {
    out << d.image_id << ',' << d.layer_used;
    for (double v : d.values) out << ',' << format_real(v);
    out << '\n';
  }
  return out.str();
}

std::string ranked_csv(std::span<const RetrievalResult> results) {
  std::ostringstream out;
  out << "query_id,rank,candidate_id,distance\n";
  for (const RetrievalResult& r : results) {
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      out << r.query_id << ',' << i + 1 << ',' << r.ranked[i].first << ',' << format_real(r.ranked[i].second) << '\n';
    }
  }
  return out.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingArtifacts, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + path.string());
  out << text;
}

}  // namespace chop
