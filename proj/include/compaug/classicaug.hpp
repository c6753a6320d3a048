#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "compaug/core.hpp"

namespace compaug {

enum class FlipMode { Off, On, Random };

struct BlurOp {
  int k = 3;
  std::optional<double> sigma;  // empty: auto_sigma(k)
};

struct GainRange {
  double lo = 0.75;
  double hi = 1.25;
};

/// The classical baseline: horizontal flip, Gaussian blur, exposure gain.
struct ClassicOps {
  FlipMode flip = FlipMode::Off;
  std::optional<BlurOp> blur;
  std::optional<GainRange> exposure;

  /// Throws on an even kernel or a gain range outside [0.25, 4.0].
  void validate() const;
  bool any() const noexcept { return flip != FlipMode::Off || blur || exposure; }
};

struct AugmentedImage {
  ImageBuffer image;
  std::vector<Annotation> annotations;
};

/// Applies flip -> blur -> exposure. Random choices (flip coin first, then
/// the gain) are drawn from `rng` in that order.
AugmentedImage augment_classical(const ImageBuffer& img, const std::vector<Annotation>& anns,
                                 const ClassicOps& ops, RngStream& rng);

/// Mirrors a label horizontally: cx -> 1 - cx.
Annotation flip_annotation(const Annotation& ann);

/// Splits `ops` into one single-op recipe per enabled operation, for
/// producing separate dataset copies instead of one jointly augmented copy.
std::vector<ClassicOps> separate_ops(const ClassicOps& ops);

}  // namespace compaug
