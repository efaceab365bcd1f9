#include "chop/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "chop/error.hpp"

namespace chop {
namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

Image load_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kUnreadableImage, path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kUnreadableImage, path.string() + " is not a PNG");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kUnreadableImage, path.string());
  }
  // Declared before setjmp so a libpng longjmp never skips their construction.
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kUnreadableImage, path.string() + " is corrupt");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t channels = rowbytes / static_cast<std::size_t>(w);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y) = rows[y][x * channels] / 255.0;
    }
  }
  return img;
}

// Reads the next whitespace-separated PGM header token, skipping comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

Image load_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadableImage, path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") throw Error(ErrorCode::kUnreadableImage, path.string() + " is not a PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUnreadableImage, path.string() + " has a malformed header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorCode::kUnreadableImage, path.string() + " has a malformed header");
  }
  Image img(w, h);
  if (magic == "P2") {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int v = 0;
        if (!(in >> v)) throw Error(ErrorCode::kUnreadableImage, path.string() + " is truncated");
        img.at(x, y) = static_cast<double>(v) / maxval;
      }
    }
  } else {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * bytes);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw Error(ErrorCode::kUnreadableImage, path.string() + " is truncated");
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
        img.at(x, y) = static_cast<double>(v) / maxval;
      }
    }
  }
  return img;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower_extension(p);
  return ext == ".png" || ext == ".pgm";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (directories ? entry.is_directory() : (entry.is_regular_file() && is_image_file(entry.path()))) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image load_image(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kUnreadableImage, path.string() + " not found");
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm") return load_pgm(path);
  throw Error(ErrorCode::kUnreadableImage, path.string() + ": unsupported format");
}

void save_pgm(const Image& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + path.string());
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  for (double v : image.data()) out.put(static_cast<char>(to_byte(v)));
}

void save_png(const Image& image, const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kInvalidInput, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kInvalidInput, "png writer init failed");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kInvalidInput, "png write failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) row[x] = to_byte(image.at(x, y));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ShapeImage load_shape_image(const fs::path& path) {
  ShapeImage img;
  img.id = path.stem().string();
  img.object_id = img.id;
  img.view_id = img.id;
  img.pixels = load_image(path);
  return img;
}

std::vector<ShapeImage> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::kDatasetNotFound, root.string());
  std::vector<ShapeImage> images;
  int label = 0;
  for (const fs::path& category_dir : sorted_entries(root, true)) {
    bool any = false;
    for (const fs::path& object_dir : sorted_entries(category_dir, true)) {
      for (const fs::path& file : sorted_entries(object_dir, false)) {
        if (!any) {
          ++label;
          any = true;
        }
        ShapeImage img;
        const std::string category = category_dir.filename().string();
        const std::string object = object_dir.filename().string();
        img.id = category + "/" + object + "/" + file.stem().string();
        img.category_label = label;
        img.category = category;
        img.object_id = category + "/" + object;
        img.view_id = img.id;
        img.pixels = load_image(file);
        images.push_back(std::move(img));
      }
    }
  }
  if (images.empty()) throw Error(ErrorCode::kDatasetNotFound, root.string() + " contains no images");
  return images;
}

}  // namespace chop
