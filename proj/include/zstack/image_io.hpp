#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "zstack/error.hpp"
#include "zstack/image.hpp"

namespace zstack {

namespace fs = std::filesystem;

// ITU-R BT.601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline void skip_pnm_space(std::istream& in) {
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

inline int read_pnm_int(std::istream& in, const fs::path& path) {
  skip_pnm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw IoError("malformed PNM header in " + path.string());
  return v;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace detail

// Reads P2/P5 (gray) and P3/P6 (color, converted to luma), 8- or 16-bit.
inline Frame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '2' && magic[1] != '3' && magic[1] != '5' && magic[1] != '6')) {
    throw IoError("unsupported PNM variant in " + path.string());
  }
  const bool ascii = magic[1] == '2' || magic[1] == '3';
  const int channels = (magic[1] == '3' || magic[1] == '6') ? 3 : 1;
  const int width = detail::read_pnm_int(in, path);
  const int height = detail::read_pnm_int(in, path);
  const int maxval = detail::read_pnm_int(in, path);
  if (maxval <= 0 || maxval > 65535) throw IoError("bad PNM maxval in " + path.string());
  in.get();  // single whitespace before raster

  const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> raw(samples);
  if (ascii) {
    for (auto& v : raw) v = detail::read_pnm_int(in, path);
  } else if (maxval < 256) {
    std::vector<std::uint8_t> buf(samples);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(samples));
    if (in.gcount() != static_cast<std::streamsize>(samples)) throw IoError("truncated " + path.string());
    std::copy(buf.begin(), buf.end(), raw.begin());
  } else {
    std::vector<std::uint8_t> buf(samples * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw IoError("truncated " + path.string());
    for (std::size_t i = 0; i < samples; ++i) raw[i] = (buf[2 * i] << 8) | buf[2 * i + 1];
  }

  std::vector<double> px(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (channels == 1) {
      px[i] = raw[i] / maxval;
    } else {
      px[i] = luma(raw[3 * i] / maxval, raw[3 * i + 1] / maxval, raw[3 * i + 2] / maxval);
    }
  }
  return Frame::clamped(Image(width, height, std::move(px)));
}

inline Frame read_png(const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<std::uint8_t> data;
  std::vector<png_bytep> rows;
  int width = 0, height = 0, channels = 0, depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("cannot decode " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_expand(png);  // palette/low-bit gray/tRNS to 8-bit
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  data.resize(rowbytes * height);
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = data.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const double maxval = depth == 16 ? 65535.0 : 255.0;
  auto sample = [&](int y, int x, int c) -> double {
    const std::uint8_t* r = rows[y];
    const std::size_t i = static_cast<std::size_t>(x) * channels + c;
    if (depth == 16) {
      std::uint16_t v;
      std::memcpy(&v, r + 2 * i, 2);
      return v / maxval;
    }
    return r[i] / maxval;
  };
  std::vector<double> px(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      px[static_cast<std::size_t>(y) * width + x] =
          channels >= 3 ? luma(sample(y, x, 0), sample(y, x, 1), sample(y, x, 2)) : sample(y, x, 0);
    }
  }
  return Frame::clamped(Image(width, height, std::move(px)));
}

inline bool is_image_file(const fs::path& path) {
  const std::string ext = detail::lower(path.extension().string());
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

inline Frame read_image(const fs::path& path) {
  const std::string ext = detail::lower(path.extension().string());
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw IoError("unsupported image format: " + path.string());
}

// P5, 8-bit, round-to-nearest quantization.
inline void write_pgm(const fs::path& path, ImageView image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) row[x] = detail::to_byte(image(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("short write to " + path.string());
}

inline void write_png(const fs::path& path, ImageView image) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) row[x] = detail::to_byte(image(x, y));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Format chosen by extension; anything but .png is written as PGM.
inline void write_image(const fs::path& path, ImageView image) {
  if (detail::lower(path.extension().string()) == ".png") {
    write_png(path, image);
  } else {
    write_pgm(path, image);
  }
}

inline constexpr const char* kStackSidecar = "stack.json";

// Loads every PGM/PPM/PNG in the directory; lexicographic filename order is
// z-order. An optional stack.json sidecar supplies {"stride", "resolution_tag"}.
inline ZStack load_stack(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty()) throw IoError("no readable images in " + dir.string());

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    Frame frame = read_image(f);
    if (!frames.empty() &&
        (frame.width() != frames[0].width() || frame.height() != frames[0].height())) {
      throw DimensionMismatch("dimension mismatch: " + f.filename().string() + " is " +
                              std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                              ", expected " + std::to_string(frames[0].width()) + "x" +
                              std::to_string(frames[0].height()));
    }
    frames.push_back(std::move(frame));
  }

  int stride = 1;
  std::string tag;
  if (const fs::path sidecar = dir / kStackSidecar; fs::exists(sidecar)) {
    try {
      std::ifstream in(sidecar);
      const auto j = nlohmann::json::parse(in);
      stride = j.value("stride", 1);
      tag = j.value("resolution_tag", std::string{});
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad " + sidecar.string() + ": " + e.what());
    }
  }
  return ZStack(std::move(frames), stride, std::move(tag));
}

// Writes frames as 0000.pgm, 0001.pgm, ... plus the stack.json sidecar.
inline void save_stack(const fs::path& dir, const ZStack& stack) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.pgm", i);
    write_pgm(dir / name, stack[i]);
  }
  std::ofstream out(dir / kStackSidecar);
  out << nlohmann::json{{"stride", stack.stride()}, {"resolution_tag", stack.resolution_tag()}}.dump(2)
      << "\n";
}

}  // namespace zstack
