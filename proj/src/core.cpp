#include "compaug/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace compaug {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::RectOutOfBounds: return "RectOutOfBounds";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::NoAlphaChannel: return "NoAlphaChannel";
    case ErrorCode::GainOutOfRange: return "GainOutOfRange";
    case ErrorCode::ForegroundOutOfBounds: return "ForegroundOutOfBounds";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::BadThresholds: return "BadThresholds";
    case ErrorCode::NoValidPlacement: return "NoValidPlacement";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::CoordOutOfRange: return "CoordOutOfRange";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::DanglingLabel: return "DanglingLabel";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NameCollision: return "NameCollision";
    case ErrorCode::BadTau: return "BadTau";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::EmptySplit: return "EmptySplit";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

ImageBuffer::ImageBuffer(int width, int height, Channels channels)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channel_count()),
               0);
}

ImageBuffer::ImageBuffer(int width, int height, Channels channels,
                         std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
  }
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                        static_cast<std::size_t>(channel_count());
  if (data_.size() != expected) {
    throw Error(ErrorCode::InvalidArgument,
                "image data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(expected));
  }
}

std::uint8_t saturate_u8(double value) noexcept {
  if (!(value > 0.0)) return 0;  // also maps NaN to 0
  const double r = std::round(value);
  return r >= 255.0 ? 255 : static_cast<std::uint8_t>(r);
}

NormBBox::NormBBox(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
  const bool ok = std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) &&
                  std::isfinite(h) && w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0 &&
                  cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0;
  if (!ok) {
    throw Error(ErrorCode::InvalidBox, "normalized box (" + std::to_string(cx) + ", " +
                                           std::to_string(cy) + ", " + std::to_string(w) +
                                           ", " + std::to_string(h) + ") violates invariants");
  }
}

Detection::Detection(int class_id_, double confidence_, NormBBox bbox_)
    : class_id(class_id_), confidence(confidence_), bbox(bbox_) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "detection confidence " + std::to_string(confidence) + " outside [0,1]");
  }
  if (class_id < 0) {
    throw Error(ErrorCode::ClassOutOfRange, "negative class id");
  }
}

namespace {

// Widen a collapsed [lo, hi) interval to one pixel inside [0, extent).
void widen_to_one(int& lo, int& hi, int extent) {
  if (hi > lo) return;
  if (lo >= extent) {
    lo = extent - 1;
    hi = extent;
  } else {
    hi = lo + 1;
  }
}

}  // namespace

PixelRect norm_to_pixel(const NormBBox& box, int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
  }
  const auto edge = [](double v, int extent) {
    const double r = std::round(v * extent);
    return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(extent)));
  };
  PixelRect r{edge(box.x_min(), width), edge(box.y_min(), height), edge(box.x_max(), width),
              edge(box.y_max(), height)};
  widen_to_one(r.x_min, r.x_max, width);
  widen_to_one(r.y_min, r.y_max, height);
  return r;
}

NormBBox pixel_to_norm(const PixelRect& rect, int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
  }
  if (!rect.valid() || rect.x_max > width || rect.y_max > height) {
    throw Error(ErrorCode::RectOutOfBounds,
                "rect (" + std::to_string(rect.x_min) + "," + std::to_string(rect.y_min) + "," +
                    std::to_string(rect.x_max) + "," + std::to_string(rect.y_max) +
                    ") does not fit " + std::to_string(width) + "x" + std::to_string(height));
  }
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  return NormBBox((rect.x_min + rect.x_max) / (2.0 * w), (rect.y_min + rect.y_max) / (2.0 * h),
                  rect.width() / w, rect.height() / h);
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) noexcept {
  if (hi <= lo) return lo;
  return lo + (hi - lo) * uniform();
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  if (hi <= lo) return lo;
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return lo + static_cast<std::int64_t>(draw % span);
}

bool RngStream::bernoulli(double p) noexcept { return uniform() < p; }

double RngStream::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream derive_stream(std::uint64_t root_seed, std::uint64_t item_index) noexcept {
  const std::uint64_t root = mix64(root_seed + kGolden);
  return RngStream(mix64(root ^ mix64(item_index * 0xD1B54A32D192ED03ULL + kGolden)));
}

}  // namespace compaug
