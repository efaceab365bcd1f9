// chop: train, infer, retrieve, stats and export-dot.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chop/config.hpp"
#include "chop/error.hpp"
#include "chop/experiment.hpp"
#include "chop/geometry.hpp"
#include "chop/image_io.hpp"
#include "chop/inference.hpp"
#include "chop/retrieval.hpp"
#include "chop/serialization.hpp"
#include "chop/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace chop;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDatasetNotFound:
    case ErrorCode::kUnreadableImage:
    case ErrorCode::kMissingArtifacts:
    case ErrorCode::kNoFeatures:
      return 2;
    case ErrorCode::kArtifactCorrupt:
    case ErrorCode::kVersionMismatch:
      return 3;
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kProtocolUnknown:
    case ErrorCode::kConfigMismatch:
      return 4;
    default:
      return 1;
  }
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;
  int jobs = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Experiment config file");
  cmd->add_option("--set", o.settings, "Override a config key, e.g. --set miner.beam=32");
  cmd->add_option("-j,--jobs", o.jobs, "Worker threads (0 = all cores)");
}

// File, then --set overrides, then CHOP_SEED, then explicit flags.
ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig config = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const std::string& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kConfigInvalid, "--set expects key=value, got '" + s + "'");
    apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  if (const char* seed = std::getenv("CHOP_SEED")) apply_setting(config, "seed", seed);
  if (o.jobs >= 0) config.train.jobs = o.jobs;
  config.train.validate();
  return config;
}

fs::path require_output(const ExperimentConfig& config) {
  if (config.output.empty()) throw Error(ErrorCode::kConfigInvalid, "no output directory (--output)");
  return config.output;
}

std::vector<ShapeImage> load_input(const fs::path& path) {
  if (fs::is_regular_file(path)) return {load_shape_image(path)};
  return load_dataset(path);
}

std::string file_stem_for(const std::string& image_id) {
  std::string out = image_id;
  for (char& c : out) {
    if (c == '/' || c == '\\') c = '_';
  }
  return out;
}

int cmd_train(const CommonOptions& common, const std::string& dataset, const std::string& output) {
  ExperimentConfig config = resolve(common);
  if (!dataset.empty()) config.dataset = dataset;
  if (!output.empty()) config.output = output;
  const fs::path out = require_output(config);
  const auto all = load_dataset(config.dataset);
  const auto images = training_split(all, config.per_category, config.split_seed);

  const TrainingResult result = learn_vocabulary(images, config.train);
  const TimedInference timed = infer_timed(images, result.vocabulary, config.train.jobs);

  save_vocabulary(result.vocabulary, out / "vocabulary.json");
  write_text(out / "training.json", training_to_json(training_records(images, timed)));
  write_text(out / "modes.csv", modes_csv(result.vocabulary));
  std::string trace;
  for (const std::string& line : result.miner_trace) trace += line + "\n";
  write_text(out / "miner_trace.txt", trace);
  const std::string report = training_report(result, images.size());
  write_text(out / "train_report.txt", report);
  std::cout << report;
  return 0;
}

int cmd_infer(const CommonOptions& common, const std::string& vocab_path, const std::string& input,
              const std::string& output, bool dot, bool features) {
  ExperimentConfig config = resolve(common);
  if (!output.empty()) config.output = output;
  const fs::path out = require_output(config);
  const Vocabulary vocab = load_vocabulary(vocab_path);
  const auto images = load_input(input);
  const TimedInference timed = infer_timed(images, vocab, config.train.jobs);

  std::ostringstream timing;
  timing << "image_id,infer_ms,layers\n";
  const GaborBank bank = build_gabor_bank(vocab.config.theta_count, vocab.config.gabor);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const InferenceGraph& g = timed.graphs[i];
    const std::string stem = file_stem_for(images[i].id);
    write_text(out / (stem + ".json"), inference_to_json(g));
    if (dot) {
      for (const ObjectGraph& layer : g.layers) {
        write_text(out / (stem + ".layer" + std::to_string(layer.layer()) + ".dot"), to_dot(layer));
      }
    }
    if (features) {
      const ResponseMap responses = compute_responses(images[i], bank);
      const auto kept = non_maxima_suppress(
          threshold_responses(responses, vocab.config.activation_fraction * responses.max_response),
          vocab.config.nms_radius);
      write_text(out / (stem + ".features.csv"), features_csv(images[i].id, kept));
    }
    char line[64];
    std::snprintf(line, sizeof(line), "%.3f", timed.infer_ms[i]);
    timing << images[i].id << ',' << line << ',' << g.depth() << '\n';
    std::cout << images[i].id << " infer_ms=" << line << " layers=" << g.depth()
              << " top=" << g.top_nonempty_layer() << "\n";
  }
  write_text(out / "timing.csv", timing.str());
  return 0;
}

int cmd_retrieve(const CommonOptions& common, const std::string& vocab_path, const std::string& dataset,
                 const std::string& output, const std::string& protocol, int k) {
  ExperimentConfig config = resolve(common);
  if (!dataset.empty()) config.dataset = dataset;
  if (!output.empty()) config.output = output;
  if (!protocol.empty()) config.protocol = parse_protocol(protocol);
  if (k > 0) config.k = k;
  const fs::path out = require_output(config);
  const Vocabulary vocab = load_vocabulary(vocab_path);
  const auto images = load_dataset(config.dataset);
  if (images.size() < 2) throw Error(ErrorCode::kConfigInvalid, "retrieval needs at least 2 images");
  if (config.protocol == Protocol::kTopK && (config.k < 1 || static_cast<std::size_t>(config.k) > images.size() - 1)) {
    throw Error(ErrorCode::kConfigInvalid,
                "k = " + std::to_string(config.k) + " exceeds the " + std::to_string(images.size() - 1) +
                    " candidates per query");
  }

  const TimedInference timed = infer_timed(images, vocab, config.train.jobs);
  const auto descriptors = describe(timed.graphs, config.dimension, config.descriptor_layer);
  const auto results = rank_all(descriptors);
  write_text(out / "descriptors.csv", descriptors_csv(descriptors));
  write_text(out / "ranked.csv", ranked_csv(results));

  std::string report;
  if (config.protocol == Protocol::kTopK) {
    report = topk_table(top_k_eval(results, granularity_units(images, Granularity::kObject), config.k));
  } else {
    report = bullseye_table(bullseye_eval(results, granularity_units(images, Granularity::kCategory)), images.size());
  }
  write_text(out / "retrieval_report.txt", report);
  std::cout << report;
  return 0;
}

struct RunSummary {
  std::size_t n = 0;
  std::size_t vocab_size = 0;
  double mean_mdl = 0.0;
  double infer_ms = 0.0;
  double shareability = 0.0;
};

int cmd_stats(const std::vector<std::string>& runs, const std::string& output, const std::string& granularity_name) {
  Granularity granularity = Granularity::kCategory;
  if (granularity_name == "object") {
    granularity = Granularity::kObject;
  } else if (granularity_name == "view") {
    granularity = Granularity::kView;
  } else if (granularity_name != "category") {
    throw Error(ErrorCode::kConfigInvalid, "granularity must be object, view or category");
  }
  std::ostringstream summary;
  summary << "n,vocab_size,mean_mdl,infer_ms,shareability\n";
  std::ostringstream layers;
  layers << "run,layer,parts,modes,mean_mdl,shareability\n";
  for (const std::string& run : runs) {
    const Vocabulary vocab = load_vocabulary(fs::path(run) / "vocabulary.json");
    const auto records = training_from_json(read_text(fs::path(run) / "training.json"));
    std::vector<ShapeImage> tags;
    std::vector<InferenceGraph> graphs;
    std::set<std::string> categories;
    double total_ms = 0.0;
    for (const TrainingRecord& r : records) {
      ShapeImage tag;
      tag.id = r.id;
      tag.category = r.category;
      tag.category_label = r.category_label;
      tag.object_id = r.object_id;
      tag.view_id = r.view_id;
      tags.push_back(tag);
      graphs.push_back(r.graph);
      categories.insert(r.category);
      total_ms += r.infer_ms;
    }
    std::map<int, double> share;
    for (const LayerShareability& ls : shareability(vocab, graphs, granularity_units(tags, granularity), 10)) {
      share[ls.layer] = ls.mean;
    }

    RunSummary s;
    s.n = categories.size();
    double mdl_sum = 0.0;
    double share_sum = 0.0;
    for (int l = 2; l <= vocab.depth(); ++l) {
      const auto& parts = vocab.layer(l).parts;
      s.vocab_size += parts.size();
      const std::size_t top = std::min<std::size_t>(10, parts.size());
      double mdl = 0.0;
      for (std::size_t i = 0; i < top; ++i) mdl += parts[i].mdl_value;
      mdl = top == 0 ? 0.0 : mdl / static_cast<double>(top);
      const double sh = share.count(l) ? share.at(l) : 0.0;
      mdl_sum += mdl;
      share_sum += sh;
      layers << run << ',' << l << ',' << parts.size() << ',' << vocab.layer(l).modes.mode_count() << ','
             << round_significant(mdl) << ',' << round_significant(sh) << '\n';
    }
    const int composite = std::max(0, vocab.depth() - 1);
    s.mean_mdl = composite == 0 ? 0.0 : mdl_sum / composite;
    s.shareability = composite == 0 ? 0.0 : share_sum / composite;
    s.infer_ms = records.empty() ? 0.0 : total_ms / static_cast<double>(records.size());
    summary << s.n << ',' << s.vocab_size << ',' << round_significant(s.mean_mdl) << ','
            << round_significant(s.infer_ms, 6) << ',' << round_significant(s.shareability) << '\n';
  }
  const fs::path out = output;
  write_text(out / "stats.csv", summary.str());
  write_text(out / "stats_layers.csv", layers.str());
  std::cout << summary.str();
  return 0;
}

int cmd_export_dot(const std::string& vocab_path, const std::string& inference_path, const std::string& output) {
  const fs::path out = output;
  if (!vocab_path.empty()) {
    const Vocabulary vocab = load_vocabulary(vocab_path);
    for (const VocabularyLayer& layer : vocab.layers) {
      for (const Part& p : layer.parts) {
        write_text(out / ("layer" + std::to_string(layer.layer) + "_part" + std::to_string(p.label) + ".dot"),
                   to_dot(p));
      }
    }
  }
  if (!inference_path.empty()) {
    const InferenceGraph g = inference_from_json(read_text(inference_path));
    const std::string stem = file_stem_for(g.image_id);
    for (const ObjectGraph& layer : g.layers) {
      write_text(out / (stem + ".layer" + std::to_string(layer.layer()) + ".dot"), to_dot(layer));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional Hierarchy of Parts: learn shape vocabularies and retrieve shapes"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string dataset;
  std::string output;
  std::string vocab;

  auto* train = app.add_subcommand("train", "Learn a vocabulary from a dataset");
  add_common(train, common);
  train->add_option("-d,--dataset", dataset, "Dataset root (<category>/<object>/<image>)");
  train->add_option("-o,--output", output, "Output directory");

  std::string input;
  bool dot = false;
  bool features = false;
  auto* infer_cmd = app.add_subcommand("infer", "Infer inference graphs for an image or a directory");
  add_common(infer_cmd, common);
  infer_cmd->add_option("-v,--vocab", vocab, "vocabulary.json")->required();
  infer_cmd->add_option("-i,--input", input, "Image file or dataset directory")->required();
  infer_cmd->add_option("-o,--output", output, "Output directory");
  infer_cmd->add_flag("--dot", dot, "Also write one DOT file per layer");
  infer_cmd->add_flag("--features", features, "Also write layer-1 features as CSV");

  std::string protocol;
  int k = 0;
  auto* retrieve = app.add_subcommand("retrieve", "Rank every image against the others and score");
  add_common(retrieve, common);
  retrieve->add_option("-v,--vocab", vocab, "vocabulary.json")->required();
  retrieve->add_option("-d,--dataset", dataset, "Dataset root");
  retrieve->add_option("-o,--output", output, "Output directory");
  retrieve->add_option("-p,--protocol", protocol, "topk or bullseye");
  retrieve->add_option("-k", k, "Ranks scored by the topk protocol");

  std::vector<std::string> runs;
  std::string granularity = "category";
  auto* stats = app.add_subcommand("stats", "Summarise training runs as CSV");
  stats->add_option("-r,--run", runs, "Output directory of a train run (repeatable)")->required();
  stats->add_option("-o,--output", output, "Directory for stats.csv and stats_layers.csv")->required();
  stats->add_option("-g,--granularity", granularity, "Shareability unit: object, view or category");

  std::string inference_path;
  auto* export_dot = app.add_subcommand("export-dot", "Write vocabulary parts or an inference graph as DOT");
  export_dot->add_option("-v,--vocab", vocab, "vocabulary.json");
  export_dot->add_option("-i,--inference", inference_path, "Inference JSON written by infer");
  export_dot->add_option("-o,--output", output, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }

  try {
    if (*train) return cmd_train(common, dataset, output);
    if (*infer_cmd) return cmd_infer(common, vocab, input, output, dot, features);
    if (*retrieve) return cmd_retrieve(common, vocab, dataset, output, protocol, k);
    if (*stats) return cmd_stats(runs, output, granularity);
    if (*export_dot) {
      if (vocab.empty() && inference_path.empty()) {
        throw Error(ErrorCode::kConfigInvalid, "export-dot needs --vocab or --inference");
      }
      return cmd_export_dot(vocab, inference_path, output);
    }
  } catch (const Error& e) {
    std::cerr << "chop: error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "chop: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
