#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <vector>

#include "chop/config.hpp"
#include "chop/error.hpp"
#include "chop/experiment.hpp"
#include "chop/image_io.hpp"
#include "chop/inference.hpp"
#include "chop/retrieval.hpp"
#include "chop/serialization.hpp"
#include "chop/vocabulary.hpp"

namespace py = pybind11;
using namespace chop;

namespace {

using Pixels = py::array_t<double, py::array::c_style | py::array::forcecast>;

Pixels to_numpy(const Image& image) {
  Pixels out({image.height(), image.width()});
  auto view = out.mutable_unchecked<2>();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) view(y, x) = image.at(x, y);
  }
  return out;
}

Image from_numpy(const Pixels& pixels) {
  if (pixels.ndim() != 2) throw Error(ErrorCode::kInvalidInput, "pixels must be a 2-D array");
  const auto view = pixels.unchecked<2>();
  Image image(static_cast<int>(view.shape(1)), static_cast<int>(view.shape(0)));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) image.at(x, y) = view(y, x);
  }
  return image;
}

const ObjectGraph& layer_of(const InferenceGraph& g, int layer) {
  if (layer < 1 || layer > g.depth()) throw py::index_error("layer " + std::to_string(layer) + " out of range");
  return g.layers[static_cast<std::size_t>(layer - 1)];
}

Granularity parse_granularity(const std::string& name) {
  if (name == "object") return Granularity::kObject;
  if (name == "view") return Granularity::kView;
  if (name == "category") return Granularity::kCategory;
  throw Error(ErrorCode::kConfigInvalid, "granularity must be object, view or category");
}

ExperimentConfig settings_config(const std::map<std::string, std::string>& settings, int jobs) {
  ExperimentConfig config;
  for (const auto& [key, value] : settings) apply_setting(config, key, value);
  config.train.jobs = jobs;
  return config;
}

}  // namespace

PYBIND11_MODULE(_chop, m) {
  m.doc() = "Compositional Hierarchy of Parts";

  static py::exception<Error> chop_error(m, "ChopError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(chop_error, e.what());
    }
  });

  py::class_<ShapeImage>(m, "ShapeImage")
      .def(py::init([](const Pixels& pixels, std::string id, std::string category, std::string object_id) {
             ShapeImage img;
             img.pixels = from_numpy(pixels);
             img.id = std::move(id);
             img.category = std::move(category);
             img.object_id = object_id.empty() ? img.id : std::move(object_id);
             img.view_id = img.id;
             return img;
           }),
           py::arg("pixels"), py::arg("id") = "image", py::arg("category") = "", py::arg("object_id") = "")
      .def_readwrite("id", &ShapeImage::id)
      .def_readwrite("category", &ShapeImage::category)
      .def_readwrite("category_label", &ShapeImage::category_label)
      .def_readwrite("object_id", &ShapeImage::object_id)
      .def_readwrite("view_id", &ShapeImage::view_id)
      .def_property_readonly("width", &ShapeImage::width)
      .def_property_readonly("height", &ShapeImage::height)
      .def_property_readonly("pixels", [](const ShapeImage& img) { return to_numpy(img.pixels); })
      .def("__repr__", [](const ShapeImage& img) {
        return "<ShapeImage " + img.id + " " + std::to_string(img.width()) + "x" + std::to_string(img.height()) + ">";
      });

  m.def("load_image", &load_shape_image, py::arg("path"), "Load a PNG or PGM file as a ShapeImage.");
  m.def("load_dataset", &load_dataset, py::arg("root"), "Load root/<category>/<object>/<image> files.");

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_property_readonly("depth", &Vocabulary::depth)
      .def("part_count", [](const Vocabulary& v, int layer) { return v.layer(layer).parts.size(); }, py::arg("layer"))
      .def("mode_count", [](const Vocabulary& v, int layer) { return v.layer(layer).modes.mode_count(); },
           py::arg("layer"))
      .def("to_json", &vocabulary_to_json)
      .def("save", &save_vocabulary, py::arg("path"))
      .def("__repr__", [](const Vocabulary& v) { return "<Vocabulary depth=" + std::to_string(v.depth()) + ">"; });

  m.def("load_vocabulary", &load_vocabulary, py::arg("path"));
  m.def("vocabulary_from_json", &vocabulary_from_json, py::arg("text"));

  py::class_<InferenceGraph>(m, "InferenceGraph")
      .def_readonly("image_id", &InferenceGraph::image_id)
      .def_property_readonly("depth", &InferenceGraph::depth)
      .def_property_readonly("top_layer", &InferenceGraph::top_nonempty_layer)
      .def(
          "nodes",
          [](const InferenceGraph& g, int layer) {
            std::vector<std::tuple<RealizationId, PartLabel, double, double>> out;
            for (const auto& n : layer_of(g, layer).nodes()) out.emplace_back(n.id, n.part_label, n.position.x, n.position.y);
            return out;
          },
          py::arg("layer"), "(id, label, x, y) per realization.")
      .def(
          "edges",
          [](const InferenceGraph& g, int layer) {
            std::vector<std::tuple<RealizationId, RealizationId, int>> out;
            for (const auto& e : layer_of(g, layer).edges()) out.emplace_back(e.src, e.dst, e.mode);
            return out;
          },
          py::arg("layer"), "(source, target, mode) per edge.")
      .def("to_json", &inference_to_json)
      .def("to_dot", [](const InferenceGraph& g, int layer) { return to_dot(layer_of(g, layer)); }, py::arg("layer"));

  m.def("inference_from_json", &inference_from_json, py::arg("text"));

  py::class_<TrainingResult>(m, "TrainingResult")
      .def_readonly("vocabulary", &TrainingResult::vocabulary)
      .def_readonly("training_graphs", &TrainingResult::training_graphs)
      .def_readonly("miner_trace", &TrainingResult::miner_trace)
      .def_property_readonly("report", [](const TrainingResult& r) {
        return training_report(r, r.training_graphs.size());
      });

  m.def(
      "train",
      [](const std::vector<ShapeImage>& images, const std::map<std::string, std::string>& settings, int jobs) {
        const ExperimentConfig config = settings_config(settings, jobs);
        py::gil_scoped_release release;
        return learn_vocabulary(images, config.train);
      },
      py::arg("images"), py::arg("settings") = std::map<std::string, std::string>{}, py::arg("jobs") = 0,
      "Learn a vocabulary. `settings` takes config keys, e.g. {'miner.beam': '32'}.");

  m.def(
      "infer",
      [](const ShapeImage& image, const Vocabulary& vocab) {
        py::gil_scoped_release release;
        return infer(image, vocab);
      },
      py::arg("image"), py::arg("vocabulary"));
  m.def(
      "infer_all",
      [](const std::vector<ShapeImage>& images, const Vocabulary& vocab, int jobs) {
        py::gil_scoped_release release;
        return infer_all(images, vocab, jobs);
      },
      py::arg("images"), py::arg("vocabulary"), py::arg("jobs") = 0);

  py::class_<ShapeDescriptor>(m, "ShapeDescriptor")
      .def_readonly("image_id", &ShapeDescriptor::image_id)
      .def_readonly("layer_used", &ShapeDescriptor::layer_used)
      .def_readonly("empty", &ShapeDescriptor::empty)
      .def_readonly("values", &ShapeDescriptor::values);

  m.def("descriptor", &spectral_descriptor, py::arg("graph"), py::arg("dimension") = kDefaultDescriptorDimension,
        py::arg("layer") = 0, "Sorted eigenvalues of the chosen layer's weighted adjacency (0 = top nonempty).");
  m.def("distance", &shape_distance, py::arg("a"), py::arg("b"));
  m.def(
      "rank_all",
      [](const std::vector<ShapeDescriptor>& descriptors) {
        std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> out;
        for (RetrievalResult& r : rank_all(descriptors)) out.emplace_back(r.query_id, std::move(r.ranked));
        return out;
      },
      py::arg("descriptors"), "Per query, the other images by ascending distance.");
  m.def(
      "bullseye",
      [](const std::vector<ShapeDescriptor>& descriptors, const std::vector<ShapeImage>& images) {
        return bullseye_eval(rank_all(descriptors), granularity_units(images, Granularity::kCategory));
      },
      py::arg("descriptors"), py::arg("images"));
  m.def(
      "top_k",
      [](const std::vector<ShapeDescriptor>& descriptors, const std::vector<ShapeImage>& images, int k) {
        return top_k_eval(rank_all(descriptors), granularity_units(images, Granularity::kObject), k).correct;
      },
      py::arg("descriptors"), py::arg("images"), py::arg("k") = 4, "Correct matches at ranks 1..k.");
  m.def(
      "shareability",
      [](const Vocabulary& vocab, const std::vector<InferenceGraph>& graphs, const std::vector<ShapeImage>& images,
         const std::string& granularity, int top_m) {
        std::map<int, double> out;
        for (const auto& s : shareability(vocab, graphs, granularity_units(images, parse_granularity(granularity)), top_m)) {
          out[s.layer] = s.mean;
        }
        return out;
      },
      py::arg("vocabulary"), py::arg("graphs"), py::arg("images"), py::arg("granularity") = "category",
      py::arg("top_m") = 10, "Mean distinct units per layer over the top_m lowest-value parts.");
}
