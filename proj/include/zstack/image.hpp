#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zstack/error.hpp"

namespace zstack {

// Non-owning read-only view of a row-major grayscale raster. Views may refer
// to a sub-rectangle of a larger image (stride > width).
struct ImageView {
  const double* data = nullptr;
  int width = 0;
  int height = 0;
  std::ptrdiff_t stride = 0;

  double operator()(int x, int y) const { return data[y * stride + x]; }
  const double* row(int y) const { return data + y * stride; }

  ImageView crop(int x, int y, int w, int h) const {
    return ImageView{data + y * stride + x, w, h, stride};
  }
};

// Owning raster with no range constraints. Used for intermediate results and
// for raw-valued fixtures; see Frame for the validated slice type.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(std::max(0, width)) * std::max(0, height), fill) {
    if (width < 0 || height < 0) throw InvalidArgument("negative image dimensions");
  }
  Image(int width, int height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw InvalidArgument("pixel count does not match image dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double operator()(int x, int y) const { return pixels_[index(x, y)]; }
  double& operator()(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }
  double* row(int y) { return pixels_.data() + static_cast<std::size_t>(y) * width_; }
  const double* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y) * width_; }

  ImageView view() const { return ImageView{pixels_.data(), width_, height_, width_}; }
  operator ImageView() const { return view(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

// One grayscale slice of a Z-stack: at least 3x3, intensities in [0, 1].
class Frame {
 public:
  static constexpr int kMinSide = 3;

  Frame() = default;
  explicit Frame(Image image) : image_(std::move(image)) { validate(); }
  Frame(int width, int height, std::vector<double> pixels)
      : Frame(Image(width, height, std::move(pixels))) {}

  static Frame constant(int width, int height, double value) {
    return Frame(Image(width, height, value));
  }

  // Clamps every sample into [0, 1] instead of rejecting out-of-range values.
  static Frame clamped(Image image) {
    for (double& v : image.pixels()) v = std::clamp(v, 0.0, 1.0);
    return Frame(std::move(image));
  }

  int width() const { return image_.width(); }
  int height() const { return image_.height(); }
  std::size_t size() const { return image_.size(); }
  double operator()(int x, int y) const { return image_(x, y); }
  std::span<const double> pixels() const { return image_.pixels(); }
  const Image& image() const { return image_; }
  ImageView view() const { return image_.view(); }
  operator ImageView() const { return image_.view(); }
  bool empty() const { return image_.size() == 0; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  void validate() const {
    if (image_.width() < kMinSide || image_.height() < kMinSide) {
      throw InvalidArgument("frame must be at least 3x3, got " + std::to_string(image_.width()) +
                            "x" + std::to_string(image_.height()));
    }
    for (double v : image_.pixels()) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("frame intensity outside [0,1]");
    }
  }

  Image image_;
};

// Ordered frames at increasing z. stride is the z-step between consecutive
// frames in motor steps.
class ZStack {
 public:
  ZStack() = default;
  explicit ZStack(std::vector<Frame> frames, int stride = 1, std::string resolution_tag = {})
      : frames_(std::move(frames)), stride_(stride), resolution_tag_(std::move(resolution_tag)) {
    if (stride_ < 1) throw InvalidArgument("stack stride must be >= 1");
    for (std::size_t i = 1; i < frames_.size(); ++i) {
      if (frames_[i].width() != frames_[0].width() || frames_[i].height() != frames_[0].height()) {
        throw DimensionMismatch("frame " + std::to_string(i) + " is " +
                                std::to_string(frames_[i].width()) + "x" +
                                std::to_string(frames_[i].height()) + ", expected " +
                                std::to_string(frames_[0].width()) + "x" +
                                std::to_string(frames_[0].height()));
      }
    }
    if (resolution_tag_.empty() && !frames_.empty()) {
      resolution_tag_ =
          std::to_string(frames_[0].width()) + "x" + std::to_string(frames_[0].height());
    }
  }

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Frame>& frames() const { return frames_; }
  int stride() const { return stride_; }
  const std::string& resolution_tag() const { return resolution_tag_; }
  int width() const { return frames_.empty() ? 0 : frames_[0].width(); }
  int height() const { return frames_.empty() ? 0 : frames_[0].height(); }

  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

  // Frames [first, last] inclusive, keeping the stride.
  ZStack slice(std::size_t first, std::size_t last) const {
    if (first > last || last >= frames_.size()) throw InvalidArgument("stack slice out of range");
    return ZStack(std::vector<Frame>(frames_.begin() + first, frames_.begin() + last + 1), stride_,
                  resolution_tag_);
  }

  // Every step-th frame starting at 0, as a coarse scan with stride * step.
  ZStack decimate(int step) const {
    if (step < 1) throw InvalidArgument("decimation step must be >= 1");
    std::vector<Frame> out;
    for (std::size_t i = 0; i < frames_.size(); i += static_cast<std::size_t>(step)) out.push_back(frames_[i]);
    return ZStack(std::move(out), stride_ * step, resolution_tag_);
  }

  ZStack subset(std::span<const int> indices) const {
    std::vector<Frame> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(frames_.at(static_cast<std::size_t>(i)));
    return ZStack(std::move(out), stride_, resolution_tag_);
  }

 private:
  std::vector<Frame> frames_;
  int stride_ = 1;
  std::string resolution_tag_;
};

// true = masked (dark) pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool operator()(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  std::size_t count() const { return count(0, 0, width_, height_); }
  std::size_t count(int x0, int y0, int w, int h) const {
    std::size_t n = 0;
    for (int y = y0; y < y0 + h; ++y) {
      const std::uint8_t* r = bits_.data() + static_cast<std::size_t>(y) * width_;
      for (int x = x0; x < x0 + w; ++x) n += r[x];
    }
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline void require_same_size(ImageView a, ImageView b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height));
  }
}

namespace detail {

struct AreaTap {
  int src;
  double weight;
};

// For each destination cell along one axis, the source cells it overlaps and
// the overlap fractions (normalized to sum to 1).
inline std::vector<std::vector<AreaTap>> area_taps(int src_len, int dst_len) {
  std::vector<std::vector<AreaTap>> taps(static_cast<std::size_t>(dst_len));
  const double scale = static_cast<double>(src_len) / dst_len;
  for (int d = 0; d < dst_len; ++d) {
    const double lo = d * scale;
    const double hi = (d + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src_len - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int s = first; s <= last; ++s) {
      const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (overlap > 0.0) taps[d].push_back({s, overlap / scale});
    }
  }
  return taps;
}

}  // namespace detail

// Area-average (box) resampling to a smaller raster.
inline Frame downscale(const Frame& frame, int new_width, int new_height) {
  if (new_width < Frame::kMinSide || new_height < Frame::kMinSide) {
    throw InvalidArgument("downscale target must be at least 3x3");
  }
  if (new_width > frame.width() || new_height > frame.height()) {
    throw InvalidArgument("downscale target larger than source");
  }
  const auto xtaps = detail::area_taps(frame.width(), new_width);
  const auto ytaps = detail::area_taps(frame.height(), new_height);

  Image horizontal(new_width, frame.height());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < new_width; ++x) {
      double acc = 0.0;
      for (const auto& t : xtaps[x]) acc += t.weight * frame(t.src, y);
      horizontal(x, y) = acc;
    }
  }
  Image out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    for (int x = 0; x < new_width; ++x) {
      double acc = 0.0;
      for (const auto& t : ytaps[y]) acc += t.weight * horizontal(x, t.src);
      out(x, y) = acc;
    }
  }
  return Frame::clamped(std::move(out));
}

// Mean absolute intensity difference.
inline double frame_diff_mad(ImageView a, ImageView b) {
  require_same_size(a, b, "frame_diff_mad");
  double sum = 0.0;
  for (int y = 0; y < a.height; ++y) {
    const double* ra = a.row(y);
    const double* rb = b.row(y);
    for (int x = 0; x < a.width; ++x) sum += std::abs(ra[x] - rb[x]);
  }
  return sum / (static_cast<double>(a.width) * a.height);
}

inline BinaryMask dark_mask(const Frame& frame, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("dark threshold must lie in (0,1)");
  }
  BinaryMask mask(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) mask.set(x, y, frame(x, y) < threshold);
  }
  return mask;
}

inline double mean_intensity(ImageView v) {
  double sum = 0.0;
  for (int y = 0; y < v.height; ++y) {
    const double* r = v.row(y);
    for (int x = 0; x < v.width; ++x) sum += r[x];
  }
  return sum / (static_cast<double>(v.width) * v.height);
}

inline double rmse(ImageView a, ImageView b) {
  require_same_size(a, b, "rmse");
  double sum = 0.0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      const double d = a(x, y) - b(x, y);
      sum += d * d;
    }
  }
  return std::sqrt(sum / (static_cast<double>(a.width) * a.height));
}

}  // namespace zstack
