#include "chop/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chop/error.hpp"
#include "chop/geometry.hpp"

namespace chop {

GaborBank build_gabor_bank(int theta_count, const GaborParams& params) {
  if (theta_count < 1) {
    throw Error(ErrorCode::kInvalidParameter, "theta_count must be >= 1");
  }
  if (params.kernel_size < 3 || params.kernel_size % 2 == 0) {
    throw Error(ErrorCode::kInvalidParameter, "kernel_size must be odd and >= 3");
  }
  if (params.wavelength <= 0.0 || params.envelope_sigma <= 0.0 || params.aspect_ratio <= 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "wavelength, envelope_sigma and aspect_ratio must be positive");
  }

  const int size = params.kernel_size;
  const int half = size / 2;
  const double two_sigma2 = 2.0 * params.envelope_sigma * params.envelope_sigma;
  const double gamma2 = params.aspect_ratio * params.aspect_ratio;

  std::vector<GaborKernel> kernels;
  kernels.reserve(static_cast<std::size_t>(theta_count));
  for (int t = 0; t < theta_count; ++t) {
    GaborKernel k;
    k.orientation = t * std::numbers::pi / theta_count;
    k.weights.resize(static_cast<std::size_t>(size) * size);
    const double c = std::cos(k.orientation);
    const double s = std::sin(k.orientation);
    for (int y = -half; y <= half; ++y) {
      for (int x = -half; x <= half; ++x) {
        const double xr = x * c + y * s;
        const double yr = -x * s + y * c;
        const double envelope = std::exp(-(xr * xr + gamma2 * yr * yr) / two_sigma2);
        const double carrier = std::cos(2.0 * std::numbers::pi * xr / params.wavelength + params.phase);
        k.weights[static_cast<std::size_t>(y + half) * size + (x + half)] = envelope * carrier;
      }
    }
    const double mean = std::accumulate(k.weights.begin(), k.weights.end(), 0.0) / k.weights.size();
    for (double& w : k.weights) w -= mean;
    double norm2 = 0.0;
    for (double w : k.weights) norm2 += w * w;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& w : k.weights) w *= inv;
    // A second centering pass removes the residue left by the rescale.
    const double residue = std::accumulate(k.weights.begin(), k.weights.end(), 0.0) / k.weights.size();
    for (double& w : k.weights) w -= residue;
    kernels.push_back(std::move(k));
  }
  return GaborBank(theta_count, params, std::move(kernels));
}

ResponseMap compute_responses(const ShapeImage& image, const GaborBank& bank) {
  const int size = bank.kernel_size();
  if (image.width() < size || image.height() < size) {
    throw Error(ErrorCode::kImageTooSmall,
                image.id + " is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                    ", kernel is " + std::to_string(size));
  }
  const int w = image.width();
  const int h = image.height();
  const int half = size / 2;

  ResponseMap out;
  out.width = w;
  out.height = h;
  out.magnitude.assign(static_cast<std::size_t>(w) * h, 0.0);
  out.orientation.assign(static_cast<std::size_t>(w) * h, 0);

  // Correlation with replicated borders.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = 0.0;
      int best_t = 0;
      for (int t = 0; t < bank.theta_count(); ++t) {
        const auto& weights = bank.kernel(t).weights;
        double acc = 0.0;
        for (int ky = -half; ky <= half; ++ky) {
          const int sy = std::clamp(y + ky, 0, h - 1);
          const double* krow = &weights[static_cast<std::size_t>(ky + half) * size];
          for (int kx = -half; kx <= half; ++kx) {
            const int sx = std::clamp(x + kx, 0, w - 1);
            acc += krow[kx + half] * image.pixels.at(sx, sy);
          }
        }
        const double mag = std::abs(acc);
        if (mag > best) {
          best = mag;
          best_t = t;
        }
      }
      if (best < kResponseFloor) best = 0.0;
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      out.magnitude[idx] = best;
      out.orientation[idx] = best_t;
      out.max_response = std::max(out.max_response, best);
    }
  }
  return out;
}

std::vector<Feature> threshold_responses(const ResponseMap& responses, double threshold) {
  std::vector<Feature> out;
  for (int y = 0; y < responses.height; ++y) {
    for (int x = 0; x < responses.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * responses.width + x;
      const double r = responses.magnitude[idx];
      if (r > 0.0 && r >= threshold) {
        out.push_back({x, y, responses.orientation[idx], r});
      }
    }
  }
  return out;
}

std::vector<Feature> extract_features(const ShapeImage& image, const GaborBank& bank, double threshold) {
  return threshold_responses(compute_responses(image, bank), threshold);
}

std::vector<Feature> non_maxima_suppress(std::span<const Feature> features, double radius) {
  if (radius <= 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "nms radius must be positive");
  }
  std::vector<Vec2> points;
  points.reserve(features.size());
  for (const Feature& f : features) points.push_back({static_cast<double>(f.x), static_cast<double>(f.y)});
  const RadiusIndex index(points, radius);
  double strongest = 0.0;
  for (const Feature& f : features) strongest = std::max(strongest, f.response);
  const double tolerance = kResponseTieTolerance * strongest;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < features.size(); ++i) {
    bool dominated = false;
    index.for_each_within(points[i], radius, [&](std::size_t j) {
      if (j != i && features[j].response > features[i].response + tolerance) dominated = true;
    });
    if (!dominated) candidates.push_back(i);
  }
  auto yx_less = [&](std::size_t a, std::size_t b) {
    const Feature& fa = features[a];
    const Feature& fb = features[b];
    if (fa.y != fb.y) return fa.y < fb.y;
    if (fa.x != fb.x) return fa.x < fb.x;
    if (fa.orientation != fb.orientation) return fa.orientation < fb.orientation;
    return a < b;
  };
  std::sort(candidates.begin(), candidates.end(), yx_less);

  // Plateaus of equal responses: sweep in (y, x) order, keeping a candidate
  // unless an equal one was already kept within the radius.
  std::vector<char> kept_flag(features.size(), 0);
  std::vector<Feature> kept;
  for (std::size_t i : candidates) {
    bool tied = false;
    index.for_each_within(points[i], radius, [&](std::size_t j) {
      if (j != i && kept_flag[j] && std::abs(features[j].response - features[i].response) <= tolerance) tied = true;
    });
    if (tied) continue;
    kept_flag[i] = 1;
    kept.push_back(features[i]);
  }
  return kept;
}

}  // namespace chop
