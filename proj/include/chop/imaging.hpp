#pragma once

#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace chop {

// Row-major grayscale raster with intensities in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> data() { return pixels_; }
  std::span<const double> data() const { return pixels_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

struct ShapeImage {
  std::string id;
  int category_label = 1;
  // Ground-truth grouping used by retrieval and shareability; empty when unknown.
  std::string category;
  std::string object_id;
  std::string view_id;
  Image pixels;

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
};

struct GaborParams {
  int kernel_size = 11;
  double wavelength = 4.0;
  double envelope_sigma = 2.0;
  double aspect_ratio = 0.5;
  double phase = std::numbers::pi / 2.0;
};

// A square kernel stored row-major, kernel_size x kernel_size.
struct GaborKernel {
  double orientation = 0.0;  // radians
  std::vector<double> weights;
};

// Oriented filter bank. Kernel t is tuned to orientation t * pi / theta_count;
// at t = 0 the carrier runs along x, so the kernel responds to vertical
// structure. Every kernel is zero-mean with unit L2 norm.
class GaborBank {
 public:
  GaborBank(int theta_count, GaborParams params, std::vector<GaborKernel> kernels)
      : theta_count_(theta_count), params_(params), kernels_(std::move(kernels)) {}

  int theta_count() const { return theta_count_; }
  int kernel_size() const { return params_.kernel_size; }
  const GaborParams& params() const { return params_; }
  const GaborKernel& kernel(int t) const { return kernels_.at(static_cast<std::size_t>(t)); }
  std::span<const GaborKernel> kernels() const { return kernels_; }

 private:
  int theta_count_;
  GaborParams params_;
  std::vector<GaborKernel> kernels_;
};

GaborBank build_gabor_bank(int theta_count, const GaborParams& params = {});

struct Feature {
  int x = 0;
  int y = 0;
  int orientation = 0;
  double response = 0.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

// Per-pixel max-over-orientation magnitude and its argmax orientation.
struct ResponseMap {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<int> orientation;
  double max_response = 0.0;
};

// Magnitudes below this are treated as exact zeros (floating-point residue of
// zero-mean kernels on flat regions).
inline constexpr double kResponseFloor = 1e-12;

ResponseMap compute_responses(const ShapeImage& image, const GaborBank& bank);

// Pixels with magnitude >= threshold and a nonzero response, in (y, x) order.
std::vector<Feature> threshold_responses(const ResponseMap& responses, double threshold);

std::vector<Feature> extract_features(const ShapeImage& image, const GaborBank& bank, double threshold);

// Responses closer than this fraction of the strongest response count as equal.
inline constexpr double kResponseTieTolerance = 1e-7;

// Drops every feature that has a strictly stronger feature within `radius`.
// Among equal responses within `radius` the smaller (y, x) position wins, with
// the remaining plateau swept in (y, x) order. Output is sorted by
// (y, x, orientation).
std::vector<Feature> non_maxima_suppress(std::span<const Feature> features, double radius);

}  // namespace chop
