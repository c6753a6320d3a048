#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "compaug/core.hpp"

namespace compaug {

/// Square convolution kernel of odd size, stored row-major.
class Kernel {
 public:
  Kernel(int size, std::vector<double> weights);

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }
  /// Weight at offset (dx, dy) from the center, each in [-radius, radius].
  double at(int dx, int dy) const noexcept {
    return weights_[static_cast<std::size_t>((dy + radius()) * size_ + (dx + radius()))];
  }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  int size_;
  std::vector<double> weights_;
};

/// Single-channel 8-bit coverage map.
class AlphaMask {
 public:
  AlphaMask() = default;
  AlphaMask(int width, int height, std::uint8_t fill = 0);
  AlphaMask(int width, int height, std::vector<std::uint8_t> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint8_t& at(int x, int y) {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)];
  }
  std::uint8_t at(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)];
  }
  std::span<const std::uint8_t> values() const noexcept { return values_; }

  friend bool operator==(const AlphaMask&, const AlphaMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> values_;
};

enum class BorderMode { Replicate };

Kernel gaussian_kernel(int k, double sigma);
/// Kernel-size driven sigma, 0.3 * ((k - 1) / 2 - 1) + 0.8.
double auto_sigma(int k);

ImageBuffer convolve(const ImageBuffer& img, const Kernel& kernel,
                     BorderMode border = BorderMode::Replicate);
/// `sigma` defaults to auto_sigma(k) when empty.
ImageBuffer gaussian_blur(const ImageBuffer& img, int k, std::optional<double> sigma = {});

ImageBuffer hflip(const ImageBuffer& img);

/// Rotates an RGBA image by `degrees` (clockwise on screen, y pointing down)
/// around its center. The canvas grows to the rotated extent; uncovered
/// pixels are fully transparent.
ImageBuffer rotate_rgba(const ImageBuffer& img, double degrees);
/// Canvas size rotate_rgba produces for a w x h input.
std::pair<int, int> rotated_extent(int width, int height, double degrees);

/// Bilinear resampling to the given size. RGBA is interpolated with
/// premultiplied alpha.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

ImageBuffer adjust_exposure(const ImageBuffer& img, double gain);

/// Blends an RGBA foreground over an RGB background with its top-left corner
/// at (origin_x, origin_y).
ImageBuffer alpha_composite(const ImageBuffer& fg, const ImageBuffer& bg, int origin_x,
                            int origin_y);

AlphaMask extract_alpha(const ImageBuffer& rgba);
/// Copy of `rgba` with its alpha channel replaced by `mask`.
ImageBuffer with_alpha(const ImageBuffer& rgba, const AlphaMask& mask);

AlphaMask feather_mask(const AlphaMask& mask, int k, std::optional<double> sigma = {});

/// Smallest half-open rect containing every pixel with value > threshold.
PixelRect tight_bbox(const AlphaMask& mask, std::uint8_t threshold);

/// Luma (BT.601 weights) of an RGB/RGBA image; Gray passes through.
ImageBuffer to_gray(const ImageBuffer& img);

/// Binary (0/255) Canny edge map. Smoothing is fixed at a 5x5, sigma 1.4
/// Gaussian; gradients are 3x3 Sobel with L2 magnitude; thresholds apply
/// to that magnitude.
ImageBuffer canny(const ImageBuffer& img, double low, double high);

}  // namespace compaug
