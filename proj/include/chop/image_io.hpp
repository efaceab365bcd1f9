#pragma once

#include <filesystem>
#include <vector>

#include "chop/imaging.hpp"

namespace chop {

// Loads PNG (any bit depth / colour type) or binary/ASCII PGM as grayscale in
// [0, 1]. Throws unreadable-image on failure.
Image load_image(const std::filesystem::path& path);

void save_png(const Image& image, const std::filesystem::path& path);
void save_pgm(const Image& image, const std::filesystem::path& path);

// Walks root/<category>/<object_id>/<image>.{png,pgm}. Categories are numbered
// 1..C in lexicographic directory order. Image ids are
// "<category>/<object_id>/<stem>". Throws dataset-not-found when the root is
// missing or holds no images.
std::vector<ShapeImage> load_dataset(const std::filesystem::path& root);

// Single image with id = file stem, category label 1.
ShapeImage load_shape_image(const std::filesystem::path& path);

}  // namespace chop
