#include "compaug/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace compaug {

namespace {

void require_odd_kernel(int k) {
  if (k < 1 || k % 2 == 0) {
    throw Error(ErrorCode::EvenKernel, "kernel size must be odd and >= 1, got " + std::to_string(k));
  }
}

int clamp_index(int v, int extent) noexcept { return std::clamp(v, 0, extent - 1); }

// Direct 2-D convolution of one real-valued plane with edge replication.
std::vector<double> convolve_plane(std::span<const double> plane, int width, int height,
                                   const Kernel& kernel) {
  const int r = kernel.radius();
  std::vector<double> out(plane.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int sy = clamp_index(y - dy, height);
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = clamp_index(x - dx, width);
          acc += kernel.at(dx, dy) * plane[static_cast<std::size_t>(sy) * width + sx];
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

struct Rgba {
  double r = 0, g = 0, b = 0, a = 0;
};

// Premultiplied RGBA sample; out-of-range pixels read as transparent.
Rgba premultiplied(const ImageBuffer& img, int x, int y) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return {};
  const double a = img.at(x, y, 3);
  const double s = a / 255.0;
  return {img.at(x, y, 0) * s, img.at(x, y, 1) * s, img.at(x, y, 2) * s, a};
}

void store_unpremultiplied(ImageBuffer& out, int x, int y, const Rgba& p) {
  const std::uint8_t a = saturate_u8(p.a);
  out.at(x, y, 3) = a;
  if (p.a <= 0.0 || a == 0) {
    out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = 0;
    return;
  }
  const double inv = 255.0 / p.a;
  out.at(x, y, 0) = saturate_u8(p.r * inv);
  out.at(x, y, 1) = saturate_u8(p.g * inv);
  out.at(x, y, 2) = saturate_u8(p.b * inv);
}

Rgba bilinear_rgba(const ImageBuffer& img, double sx, double sy, bool replicate) {
  if (replicate) {
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
  }
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  const auto fetch = [&](int x, int y) {
    if (replicate) {
      x = clamp_index(x, img.width());
      y = clamp_index(y, img.height());
    }
    return premultiplied(img, x, y);
  };
  const Rgba p00 = fetch(x0, y0), p10 = fetch(x0 + 1, y0);
  const Rgba p01 = fetch(x0, y0 + 1), p11 = fetch(x0 + 1, y0 + 1);
  const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
  return {w00 * p00.r + w10 * p10.r + w01 * p01.r + w11 * p11.r,
          w00 * p00.g + w10 * p10.g + w01 * p01.g + w11 * p11.g,
          w00 * p00.b + w10 * p10.b + w01 * p01.b + w11 * p11.b,
          w00 * p00.a + w10 * p10.a + w01 * p01.a + w11 * p11.a};
}

// Rotation angle normalized into [0, 360).
double normalize_degrees(double degrees) {
  double t = std::fmod(degrees, 360.0);
  if (t < 0) t += 360.0;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

Kernel::Kernel(int size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {
  require_odd_kernel(size);
  if (weights_.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size)) {
    throw Error(ErrorCode::InvalidArgument, "kernel weight count does not match size");
  }
}

AlphaMask::AlphaMask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "mask dimensions must be >= 1");
  }
  values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

AlphaMask::AlphaMask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 1 || height < 1 ||
      values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::InvalidArgument, "mask dimensions do not match its data");
  }
}

Kernel gaussian_kernel(int k, double sigma) {
  require_odd_kernel(k);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::NonPositiveSigma, "sigma must be > 0");
  }
  const int r = k / 2;
  std::vector<double> w(static_cast<std::size_t>(k) * k);
  double total = 0.0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>((y + r) * k + (x + r))] = v;
      total += v;
    }
  }
  for (double& v : w) v /= total;
  return Kernel(k, std::move(w));
}

double auto_sigma(int k) {
  require_odd_kernel(k);
  return 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8;
}

ImageBuffer convolve(const ImageBuffer& img, const Kernel& kernel, BorderMode /*border*/) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot convolve an empty image");
  const int w = img.width(), h = img.height(), nc = img.channel_count();
  ImageBuffer out(w, h, img.channels());
  std::vector<double> plane(static_cast<std::size_t>(w) * h);
  for (int c = 0; c < nc; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) plane[static_cast<std::size_t>(y) * w + x] = img.at(x, y, c);
    const auto filtered = convolve_plane(plane, w, h, kernel);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(x, y, c) = saturate_u8(filtered[static_cast<std::size_t>(y) * w + x]);
  }
  return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, int k, std::optional<double> sigma) {
  const Kernel kernel = gaussian_kernel(k, sigma ? *sigma : auto_sigma(k));
  if (k == 1) return img;
  return convolve(img, kernel);
}

ImageBuffer hflip(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height(), img.channels());
  const int w = img.width(), nc = img.channel_count();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) out.at(w - 1 - x, y, c) = img.at(x, y, c);
  return out;
}

std::pair<int, int> rotated_extent(int width, int height, double degrees) {
  const double t = normalize_degrees(degrees);
  if (t == 0.0 || t == 180.0) return {width, height};
  if (t == 90.0 || t == 270.0) return {height, width};
  const double rad = t * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(rad)), s = std::abs(std::sin(rad));
  const auto extent = [](double v) { return std::max(1, static_cast<int>(std::ceil(v - 1e-9))); };
  return {extent(width * c + height * s), extent(width * s + height * c)};
}

ImageBuffer rotate_rgba(const ImageBuffer& img, double degrees) {
  if (!img.has_alpha()) {
    throw Error(ErrorCode::NoAlphaChannel, "rotate_rgba requires an RGBA image");
  }
  const double t = normalize_degrees(degrees);
  const int w = img.width(), h = img.height();
  if (t == 0.0) return img;
  if (t == 90.0 || t == 180.0 || t == 270.0) {
    const auto [ow, oh] = rotated_extent(w, h, t);
    ImageBuffer out(ow, oh, Channels::RGBA);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int dx = 0, dy = 0;
        if (t == 90.0) {
          dx = h - 1 - y;
          dy = x;
        } else if (t == 180.0) {
          dx = w - 1 - x;
          dy = h - 1 - y;
        } else {
          dx = y;
          dy = w - 1 - x;
        }
        for (int c = 0; c < 4; ++c) out.at(dx, dy, c) = img.at(x, y, c);
      }
    }
    return out;
  }

  const auto [ow, oh] = rotated_extent(w, h, t);
  const double rad = t * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  ImageBuffer out(ow, oh, Channels::RGBA);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double dx = x + 0.5 - ow / 2.0;
      const double dy = y + 0.5 - oh / 2.0;
      const double sx = dx * cs + dy * sn + w / 2.0 - 0.5;
      const double sy = -dx * sn + dy * cs + h / 2.0 - 0.5;
      store_unpremultiplied(out, x, y, bilinear_rgba(img, sx, sy, /*replicate=*/false));
    }
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "resize target must be >= 1x1");
  }
  if (width == img.width() && height == img.height()) return img;
  const double rx = static_cast<double>(img.width()) / width;
  const double ry = static_cast<double>(img.height()) / height;
  ImageBuffer out(width, height, img.channels());
  const int nc = img.channel_count();
  for (int y = 0; y < height; ++y) {
    const double sy = (y + 0.5) * ry - 0.5;
    for (int x = 0; x < width; ++x) {
      const double sx = (x + 0.5) * rx - 0.5;
      if (img.has_alpha()) {
        store_unpremultiplied(out, x, y, bilinear_rgba(img, sx, sy, /*replicate=*/true));
        continue;
      }
      const double cx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
      const double cy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
      const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
      const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
      const double fx = cx - x0, fy = cy - y0;
      for (int c = 0; c < nc; ++c) {
        const double top = img.at(x0, y0, c) * (1 - fx) + img.at(x1, y0, c) * fx;
        const double bot = img.at(x0, y1, c) * (1 - fx) + img.at(x1, y1, c) * fx;
        out.at(x, y, c) = saturate_u8(top * (1 - fy) + bot * fy);
      }
    }
  }
  return out;
}

ImageBuffer adjust_exposure(const ImageBuffer& img, double gain) {
  if (!(gain >= 0.25 && gain <= 4.0)) {
    throw Error(ErrorCode::GainOutOfRange,
                "exposure gain " + std::to_string(gain) + " outside [0.25, 4.0]");
  }
  ImageBuffer out = img;
  const int color = img.has_alpha() ? 3 : img.channel_count();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < color; ++c) out.at(x, y, c) = saturate_u8(img.at(x, y, c) * gain);
  return out;
}

ImageBuffer alpha_composite(const ImageBuffer& fg, const ImageBuffer& bg, int origin_x,
                            int origin_y) {
  if (!fg.has_alpha()) throw Error(ErrorCode::NoAlphaChannel, "foreground must be RGBA");
  if (bg.channels() != Channels::RGB) {
    throw Error(ErrorCode::InvalidArgument, "background must be RGB");
  }
  if (origin_x < 0 || origin_y < 0 || origin_x + fg.width() > bg.width() ||
      origin_y + fg.height() > bg.height()) {
    throw Error(ErrorCode::ForegroundOutOfBounds,
                std::to_string(fg.width()) + "x" + std::to_string(fg.height()) +
                    " foreground at (" + std::to_string(origin_x) + "," +
                    std::to_string(origin_y) + ") exceeds " + std::to_string(bg.width()) + "x" +
                    std::to_string(bg.height()) + " background");
  }
  ImageBuffer out = bg;
  for (int y = 0; y < fg.height(); ++y) {
    for (int x = 0; x < fg.width(); ++x) {
      const int a = fg.at(x, y, 3);
      if (a == 0) continue;
      const int bx = origin_x + x, by = origin_y + y;
      for (int c = 0; c < 3; ++c) {
        const int blended = a * fg.at(x, y, c) + (255 - a) * bg.at(bx, by, c);
        out.at(bx, by, c) = saturate_u8(blended / 255.0);
      }
    }
  }
  return out;
}

AlphaMask extract_alpha(const ImageBuffer& rgba) {
  if (!rgba.has_alpha()) throw Error(ErrorCode::NoAlphaChannel, "image has no alpha channel");
  AlphaMask mask(rgba.width(), rgba.height());
  for (int y = 0; y < rgba.height(); ++y)
    for (int x = 0; x < rgba.width(); ++x) mask.at(x, y) = rgba.at(x, y, 3);
  return mask;
}

ImageBuffer with_alpha(const ImageBuffer& rgba, const AlphaMask& mask) {
  if (!rgba.has_alpha()) throw Error(ErrorCode::NoAlphaChannel, "image has no alpha channel");
  if (mask.width() != rgba.width() || mask.height() != rgba.height()) {
    throw Error(ErrorCode::InvalidArgument, "mask dimensions differ from image");
  }
  ImageBuffer out = rgba;
  for (int y = 0; y < rgba.height(); ++y)
    for (int x = 0; x < rgba.width(); ++x) out.at(x, y, 3) = mask.at(x, y);
  return out;
}

AlphaMask feather_mask(const AlphaMask& mask, int k, std::optional<double> sigma) {
  const ImageBuffer gray(mask.width(), mask.height(), Channels::Gray,
                         {mask.values().begin(), mask.values().end()});
  const ImageBuffer blurred = gaussian_blur(gray, k, sigma);
  return AlphaMask(mask.width(), mask.height(),
                   std::vector<std::uint8_t>(blurred.data().begin(), blurred.data().end()));
}

PixelRect tight_bbox(const AlphaMask& mask, std::uint8_t threshold) {
  int x_min = mask.width(), y_min = mask.height(), x_max = -1, y_max = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) <= threshold) continue;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max < 0) {
    throw Error(ErrorCode::EmptyMask,
                "no pixel exceeds alpha threshold " + std::to_string(threshold));
  }
  return {x_min, y_min, x_max + 1, y_max + 1};
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels() == Channels::Gray) return img;
  ImageBuffer out(img.width(), img.height(), Channels::Gray);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y, 0) = saturate_u8(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                                    0.114 * img.at(x, y, 2));
  return out;
}

ImageBuffer canny(const ImageBuffer& img, double low, double high) {
  if (!(low >= 0.0 && low < high)) {
    throw Error(ErrorCode::BadThresholds, "canny requires 0 <= low < high, got low=" +
                                              std::to_string(low) +
                                              " high=" + std::to_string(high));
  }
  const ImageBuffer gray = to_gray(img);
  const int w = gray.width(), h = gray.height();
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

  std::vector<double> plane(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) plane[idx(x, y)] = gray.at(x, y, 0);
  const auto smooth = convolve_plane(plane, w, h, gaussian_kernel(5, 1.4));

  std::vector<double> mag(plane.size());
  std::vector<std::uint8_t> sector(plane.size());
  const auto px = [&](int x, int y) { return smooth[idx(clamp_index(x, w), clamp_index(y, h))]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      mag[idx(x, y)] = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      std::uint8_t s = 0;  // gradient along x: compare left/right
      if (angle >= 22.5 && angle < 67.5) s = 1;
      else if (angle >= 67.5 && angle < 112.5) s = 2;
      else if (angle >= 112.5 && angle < 157.5) s = 3;
      sector[idx(x, y)] = s;
    }
  }

  // Non-maximum thinning. Ties keep the pixel on the positive side so a
  // symmetric ridge yields exactly one pixel.
  static constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  const auto mag_or_zero = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag[idx(x, y)];
  };
  std::vector<double> thin(plane.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = mag[idx(x, y)];
      if (m <= 0.0) continue;
      const auto [sx, sy] = kStep[sector[idx(x, y)]];
      if (m >= mag_or_zero(x - sx, y - sy) && m > mag_or_zero(x + sx, y + sy)) thin[idx(x, y)] = m;
    }
  }

  // Double threshold and 8-connected hysteresis from strong pixels.
  ImageBuffer out(w, h, Channels::Gray);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (thin[idx(x, y)] >= high && thin[idx(x, y)] > 0.0) {
        out.at(x, y, 0) = 255;
        stack.emplace_back(x, y);
      }
    }
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || out.at(nx, ny, 0) != 0) continue;
        const double m = thin[idx(nx, ny)];
        if (m > 0.0 && m >= low) {
          out.at(nx, ny, 0) = 255;
          stack.emplace_back(nx, ny);
        }
      }
    }
  }
  return out;
}

}  // namespace compaug
