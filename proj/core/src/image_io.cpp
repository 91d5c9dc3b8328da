#include "slscan/image_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <png.h>

#include "slscan/error.hpp"

namespace slscan {

namespace fs = std::filesystem;

namespace {

std::string bytes_of(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

/// Cursor over a PGM header: skips whitespace and '#' comments.
class HeaderReader {
 public:
  HeaderReader(const std::string& data, std::string name) : data_(data), name_(std::move(name)) {}

  long next_int() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (start == pos_ || pos_ - start > 9) fail("expected a positive integer");
    return std::stol(data_.substr(start, pos_ - start));
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  bool at_whitespace() const {
    return pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]));
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("malformed PGM header in '" + name_ + "': " + what);
  }

 private:
  void skip() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& data_;
  std::string name_;
  std::size_t pos_ = 0;
};

struct PngErrorState {
  char message[256] = {};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  const std::string data = bytes_of(path);
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '2' && data[1] != '5')) {
    throw DataError("malformed PGM header in '" + path.string() + "': expected P2 or P5");
  }
  const bool ascii = data[1] == '2';
  HeaderReader hr(data, path.string());
  hr.advance(2);
  const long w = hr.next_int();
  const long h = hr.next_int();
  const long maxval = hr.next_int();
  if (w <= 0 || h <= 0) hr.fail("non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) hr.fail("maxval must be in [1, 65535]");

  GrayImage img;
  img.maxval = static_cast<int>(maxval);
  img.pixels = Image<std::uint16_t>(static_cast<int>(w), static_cast<int>(h));
  const std::size_t count = img.pixels.size();
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = hr.next_int();
      if (v > maxval) throw DataError("PGM sample above maxval in '" + path.string() + "'");
      img.pixels[i] = static_cast<std::uint16_t>(v);
    }
    return img;
  }
  if (!hr.at_whitespace()) hr.fail("missing separator before raster");
  hr.advance(1);
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  if (data.size() - hr.pos() < count * bytes) throw DataError("truncated PGM raster in '" + path.string() + "'");
  const auto* raw = reinterpret_cast<const unsigned char*>(data.data() + hr.pos());
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes == 2 ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    if (v > static_cast<unsigned>(maxval)) throw DataError("PGM sample above maxval in '" + path.string() + "'");
    img.pixels[i] = static_cast<std::uint16_t>(v);
  }
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image, PgmEncoding encoding) {
  if (image.maxval <= 0 || image.maxval > 65535) throw ConfigError("PGM maxval must be in [1, 65535]");
  std::ostringstream out;
  out << (encoding == PgmEncoding::ascii ? "P2" : "P5") << '\n'
      << image.pixels.width() << ' ' << image.pixels.height() << '\n'
      << image.maxval << '\n';
  std::string data = out.str();
  if (encoding == PgmEncoding::ascii) {
    std::ostringstream body;
    for (int y = 0; y < image.pixels.height(); ++y) {
      for (int x = 0; x < image.pixels.width(); ++x) body << (x ? " " : "") << image.pixels(x, y);
      body << '\n';
    }
    data += body.str();
  } else {
    const bool wide = image.maxval > 255;
    data.reserve(data.size() + image.pixels.size() * (wide ? 2 : 1));
    for (std::uint16_t v : image.pixels.pixels()) {
      if (wide) data.push_back(static_cast<char>(v >> 8));
      data.push_back(static_cast<char>(v & 0xff));
    }
  }
  write_bytes(path, data);
}

GrayImage read_png(const fs::path& path) {
  std::FILE* file = std::fopen(path.string().c_str(), "rb");
  if (!file) throw DataError("cannot open '" + path.string() + "'");
  PngErrorState state;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler, png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  GrayImage img;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buf;
  std::string problem;
  if (!png || !info) {
    problem = "libpng initialisation failed";
  } else if (setjmp(png_jmpbuf(png))) {
    problem = state.message;
  } else {
    png_init_io(png, file);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
      problem = "only single-channel greyscale PNG is supported";
    } else {
      if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
      png_read_update_info(png, info);
      img.maxval = depth == 16 ? 65535 : 255;
      img.pixels = Image<std::uint16_t>(static_cast<int>(w), static_cast<int>(h));
      if (depth == 16) {
        rows.resize(h);
        for (png_uint_32 y = 0; y < h; ++y) {
          rows[y] = reinterpret_cast<png_bytep>(img.pixels.row(static_cast<int>(y)).data());
        }
        png_read_image(png, rows.data());
      } else {
        buf.resize(static_cast<std::size_t>(w) * h);
        rows.resize(h);
        for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w;
        png_read_image(png, rows.data());
        for (std::size_t i = 0; i < buf.size(); ++i) img.pixels[i] = buf[i];
      }
      png_read_end(png, nullptr);
    }
  }
  png_destroy_read_struct(png ? &png : nullptr, info ? &info : nullptr, nullptr);
  std::fclose(file);
  if (!problem.empty()) throw DataError("PNG '" + path.string() + "': " + problem);
  return img;
}

void write_png(const fs::path& path, const GrayImage& image) {
  if (image.maxval != 255 && image.maxval != 65535) {
    throw ConfigError("PNG output needs 8- or 16-bit data (maxval 255 or 65535)");
  }
  std::FILE* file = std::fopen(path.string().c_str(), "wb");
  if (!file) throw DataError("cannot write '" + path.string() + "'");
  PngErrorState state;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler, png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  const bool wide = image.maxval == 65535;
  const int w = image.pixels.width();
  const int h = image.pixels.height();
  std::vector<png_byte> buf(image.pixels.size() * (wide ? 2 : 1));
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const std::uint16_t v = image.pixels[i];
    if (wide) {
      buf[2 * i] = static_cast<png_byte>(v >> 8);
      buf[2 * i + 1] = static_cast<png_byte>(v & 0xff);
    } else {
      buf[i] = static_cast<png_byte>(v);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = buf.data() + static_cast<std::size_t>(y) * w * (wide ? 2 : 1);
  std::string problem;
  if (!png || !info) {
    problem = "libpng initialisation failed";
  } else if (setjmp(png_jmpbuf(png))) {
    problem = state.message;
  } else {
    png_init_io(png, file);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), wide ? 16 : 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(png ? &png : nullptr, info ? &info : nullptr);
  std::fclose(file);
  if (!problem.empty()) throw DataError("PNG '" + path.string() + "': " + problem);
}

GrayImage read_gray(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw ConfigError("unsupported image format '" + path.string() + "' (expected .pgm or .png)");
}

void write_gray(const fs::path& path, const GrayImage& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return write_pgm(path, image);
  if (ext == ".png") return write_png(path, image);
  throw ConfigError("unsupported image format '" + path.string() + "' (expected .pgm or .png)");
}

ImageD to_unit(const GrayImage& image) {
  ImageD out(image.pixels.width(), image.pixels.height());
  const double maxval = image.maxval;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image.pixels[i] / maxval;
  return out;
}

GrayImage from_unit(const ImageD& image, int bits) {
  if (bits < 8 || bits > 16) throw ConfigError("bit depth must be in [8, 16]");
  GrayImage out;
  out.maxval = (1 << bits) - 1;
  out.pixels = Image<std::uint16_t>(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = image[i];
    const double level = std::isfinite(v) ? std::floor(v * out.maxval + 0.5) : 0.0;
    out.pixels[i] = static_cast<std::uint16_t>(std::clamp(level, 0.0, static_cast<double>(out.maxval)));
  }
  return out;
}

void write_float_map(const fs::path& path, const ImageD& image) {
  std::string data(image.size() * 4, '\0');
  for (std::size_t i = 0; i < image.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(image[i]));
    for (int b = 0; b < 4; ++b) data[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  write_bytes(path, data);
}

ImageD read_float_map(const fs::path& path, int width, int height) {
  if (width <= 0 || height <= 0) throw DataError("float map dimensions must be positive");
  const std::string data = bytes_of(path);
  const std::size_t expected = static_cast<std::size_t>(width) * height * 4;
  if (data.size() != expected) {
    throw DataError("float map '" + path.string() + "' holds " + std::to_string(data.size()) + " bytes, expected " +
                    std::to_string(expected) + " for " + std::to_string(width) + "x" + std::to_string(height));
  }
  ImageD out(width, height);
  const auto* raw = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(raw[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_map_bundle(const fs::path& manifest, const std::map<std::string, ImageD>& maps) {
  if (maps.empty()) throw ConfigError("map bundle: nothing to write");
  const int w = maps.begin()->second.width();
  const int h = maps.begin()->second.height();
  nlohmann::json j{{"width", w}, {"height", h}, {"dtype", "float32"}, {"byte_order", "little"}};
  j["maps"] = nlohmann::json::object();
  const fs::path dir = manifest.parent_path();
  for (const auto& [name, img] : maps) {
    if (img.width() != w || img.height() != h) throw DataError("map bundle: '" + name + "' differs in size");
    const std::string file = name + ".f32";
    write_float_map(dir / file, img);
    j["maps"][name] = file;
  }
  write_bytes(manifest, j.dump(2) + "\n");
}

std::map<std::string, ImageD> read_map_bundle(const fs::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes_of(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("map manifest '" + manifest.string() + "': " + e.what());
  }
  for (const char* key : {"width", "height", "maps"}) {
    if (!j.contains(key)) throw DataError("map manifest: missing field '" + std::string(key) + "'");
  }
  if (j.value("dtype", "float32") != "float32") throw DataError("map manifest field 'dtype' must be float32");
  if (j.value("byte_order", "little") != "little") throw DataError("map manifest field 'byte_order' must be little");
  const int w = j["width"].get<int>();
  const int h = j["height"].get<int>();
  std::map<std::string, ImageD> out;
  for (const auto& [name, file] : j["maps"].items()) {
    out.emplace(name, read_float_map(manifest.parent_path() / file.get<std::string>(), w, h));
  }
  return out;
}

}  // namespace slscan
