#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace compaug {

enum class ErrorCode {
  InvalidArgument,
  InvalidBox,
  RectOutOfBounds,
  EvenKernel,
  NonPositiveSigma,
  NoAlphaChannel,
  GainOutOfRange,
  ForegroundOutOfBounds,
  EmptyMask,
  BadThresholds,
  NoValidPlacement,
  MalformedLine,
  ClassOutOfRange,
  CoordOutOfRange,
  MissingKey,
  CountMismatch,
  DanglingLabel,
  UnreadableFile,
  IoFailure,
  NameCollision,
  BadTau,
  NoGroundTruth,
  EmptySplit,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-checkable code plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// ---------------------------------------------------------------------------
// Raster
// ---------------------------------------------------------------------------

enum class Channels : int { Gray = 1, RGB = 3, RGBA = 4 };

/// Row-major interleaved 8-bit raster.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  /// Zero-filled image. Throws InvalidArgument on empty dimensions.
  ImageBuffer(int width, int height, Channels channels);
  /// Adopts `data`; its length must equal width * height * channels.
  ImageBuffer(int width, int height, Channels channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Channels channels() const noexcept { return channels_; }
  int channel_count() const noexcept { return static_cast<int>(channels_); }
  bool has_alpha() const noexcept { return channels_ == Channels::RGBA; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c) {
    return data_[index(x, y, c)];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data_[index(x, y, c)];
  }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channel_count()) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  Channels channels_ = Channels::RGB;
  std::vector<std::uint8_t> data_;
};

/// Round half away from zero, then clamp into [0, 255].
std::uint8_t saturate_u8(double value) noexcept;

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

/// Half-open pixel rectangle: [x_min, x_max) x [y_min, y_max).
struct PixelRect {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min; }
  int height() const noexcept { return y_max - y_min; }
  bool valid() const noexcept {
    return x_min >= 0 && y_min >= 0 && x_min < x_max && y_min < y_max;
  }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// YOLO-style normalized center/size box. Invariants are enforced on
/// construction: 0 < w,h <= 1 and 0 <= cx,cy <= 1.
class NormBBox {
 public:
  NormBBox(double cx, double cy, double w, double h);

  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  double w() const noexcept { return w_; }
  double h() const noexcept { return h_; }

  double x_min() const noexcept { return cx_ - w_ / 2.0; }
  double y_min() const noexcept { return cy_ - h_ / 2.0; }
  double x_max() const noexcept { return cx_ + w_ / 2.0; }
  double y_max() const noexcept { return cy_ + h_ / 2.0; }

  friend bool operator==(const NormBBox&, const NormBBox&) = default;

 private:
  double cx_;
  double cy_;
  double w_;
  double h_;
};

struct Annotation {
  int class_id = 0;
  NormBBox bbox;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Detection {
  Detection(int class_id, double confidence, NormBBox bbox);

  int class_id;
  double confidence;
  NormBBox bbox;

  friend bool operator==(const Detection&, const Detection&) = default;
};

PixelRect norm_to_pixel(const NormBBox& box, int width, int height);
NormBBox pixel_to_norm(const PixelRect& rect, int width, int height);

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

/// Counter-based random stream. Draw k of a stream is a pure function of
/// (key, k), so streams derived per item are independent of scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() noexcept;
  /// Uniform in [lo, hi]; returns lo when lo == hi.
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  bool bernoulli(double p) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

RngStream derive_stream(std::uint64_t root_seed, std::uint64_t item_index) noexcept;

}  // namespace compaug
