#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "compaug/core.hpp"

namespace compaug {

/// A matted foreground cutout (RGBA, at least one non-transparent pixel).
struct ForegroundAsset {
  ForegroundAsset(ImageBuffer image, int class_id, std::string source_id);

  ImageBuffer image;
  int class_id;
  std::string source_id;
};

/// An opaque RGB background with its provenance id.
struct BackgroundAsset {
  BackgroundAsset(ImageBuffer image, std::string source_id);

  ImageBuffer image;
  std::string source_id;
};

struct ComposeConfig {
  double theta_min = 0.0;
  double theta_max = 10.0;
  double flip_probability = 0.5;
  /// Width of the placed (rotated, scaled) asset as a fraction of the
  /// background width.
  double scale_min = 0.15;
  double scale_max = 0.45;
  int feather_k = 3;
  std::uint8_t alpha_threshold = 127;
  /// Optional exact per-class sample counts for batch_compose.
  std::map<int, int> class_targets;
  int threads = 1;
};

/// Concrete parameters of one composite. `scale` is the resize factor
/// applied to the rotated asset (1.0 keeps its size).
struct ComposeParams {
  double theta = 0.0;
  bool flip = false;
  double scale = 1.0;
  int origin_x = 0;
  int origin_y = 0;
  int feather_k = 3;
  std::uint8_t alpha_threshold = 127;

  friend bool operator==(const ComposeParams&, const ComposeParams&) = default;
};

struct ComposedSample {
  ImageBuffer image;
  Annotation annotation;
  ComposeParams params;
  std::string foreground_id;
  std::string background_id;
};

/// Pixel size of a w x h asset after resizing by `scale`.
std::pair<int, int> scaled_size(int width, int height, double scale);

ComposeParams sample_params(const ForegroundAsset& fg, const ImageBuffer& bg, RngStream& rng,
                            const ComposeConfig& config);

/// flip -> rotate -> scale -> feather -> paste. The label comes from the
/// pre-feather alpha so seam treatment never changes the box.
ComposedSample composite_sample(const ForegroundAsset& fg, const BackgroundAsset& bg,
                                const ComposeParams& params);

/// Class id for every output index. With class targets the classes are
/// interleaved round-robin until each target is met; otherwise the classes
/// present among the foregrounds are cycled.
std::vector<int> plan_classes(const std::vector<ForegroundAsset>& fgs, std::size_t n,
                              const std::map<int, int>& class_targets);

/// Foreground index for every output index. Foregrounds of a class are used
/// in rotation, so each is chosen floor(n_c/k) or ceil(n_c/k) times.
std::vector<std::size_t> plan_foregrounds(const std::vector<ForegroundAsset>& fgs, std::size_t n,
                                          const std::map<int, int>& class_targets);

/// Item `index` of a batch: the background and parameters are drawn from
/// derive_stream(root_seed, index). Errors carry the item index.
ComposedSample compose_item(const std::vector<ForegroundAsset>& fgs,
                            const std::vector<BackgroundAsset>& bgs, std::size_t fg_index,
                            std::size_t index, std::uint64_t root_seed, const ComposeConfig& config);

/// Composes items 0..n-1, in parallel when config.threads > 1. Output is
/// ordered by index and independent of the thread count.
std::vector<ComposedSample> batch_compose(const std::vector<ForegroundAsset>& fgs,
                                          const std::vector<BackgroundAsset>& bgs, std::size_t n,
                                          std::uint64_t root_seed, const ComposeConfig& config);

}  // namespace compaug
