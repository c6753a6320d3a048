#include "compaug/compose.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "compaug/imgproc.hpp"
#include "compaug/parallel.hpp"

namespace compaug {

ForegroundAsset::ForegroundAsset(ImageBuffer image_, int class_id_, std::string source_id_)
    : image(std::move(image_)), class_id(class_id_), source_id(std::move(source_id_)) {
  if (!image.has_alpha()) {
    throw Error(ErrorCode::NoAlphaChannel, "foreground '" + source_id + "' has no alpha channel");
  }
  if (class_id < 0) throw Error(ErrorCode::ClassOutOfRange, "negative foreground class id");
  const auto px = image.data();
  bool any = false;
  for (std::size_t i = 3; i < px.size() && !any; i += 4) any = px[i] > 0;
  if (!any) throw Error(ErrorCode::EmptyMask, "foreground '" + source_id + "' is fully transparent");
}

BackgroundAsset::BackgroundAsset(ImageBuffer image_, std::string source_id_)
    : image(std::move(image_)), source_id(std::move(source_id_)) {
  if (image.channels() != Channels::RGB) {
    throw Error(ErrorCode::InvalidArgument, "background '" + source_id + "' must be RGB");
  }
}

std::pair<int, int> scaled_size(int width, int height, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidArgument, "scale must be > 0");
  }
  return {std::max(1, static_cast<int>(std::round(width * scale))),
          std::max(1, static_cast<int>(std::round(height * scale)))};
}

ComposeParams sample_params(const ForegroundAsset& fg, const ImageBuffer& bg, RngStream& rng,
                            const ComposeConfig& config) {
  if (!(config.scale_min > 0.0) || config.scale_max < config.scale_min ||
      config.theta_max < config.theta_min) {
    throw Error(ErrorCode::InvalidArgument, "invalid compose config ranges");
  }
  ComposeParams p;
  p.feather_k = config.feather_k;
  p.alpha_threshold = config.alpha_threshold;
  p.theta = rng.uniform(config.theta_min, config.theta_max);
  p.flip = rng.bernoulli(config.flip_probability);

  const auto [rw, rh] = rotated_extent(fg.image.width(), fg.image.height(), p.theta);
  const double bw = bg.width(), bh = bg.height();
  // Largest width fraction at which the rotated asset still fits vertically.
  const double fit = std::min(1.0, (bh / rh) * (rw / bw));
  const double hi = std::min(config.scale_max, fit);
  if (config.scale_min > hi + 1e-12) {
    throw Error(ErrorCode::NoValidPlacement,
                "foreground '" + fg.source_id + "' cannot fit at width fraction " +
                    std::to_string(config.scale_min));
  }
  const double fraction = rng.uniform(config.scale_min, std::max(config.scale_min, hi));
  p.scale = fraction * bw / rw;

  const auto [sw, sh] = scaled_size(rw, rh, p.scale);
  if (sw > bg.width() || sh > bg.height()) {
    throw Error(ErrorCode::NoValidPlacement, "scaled foreground '" + fg.source_id +
                                                 "' exceeds the background");
  }
  p.origin_x = static_cast<int>(rng.uniform_int(0, bg.width() - sw));
  p.origin_y = static_cast<int>(rng.uniform_int(0, bg.height() - sh));
  return p;
}

ComposedSample composite_sample(const ForegroundAsset& fg, const BackgroundAsset& bg,
                                const ComposeParams& params) {
  ImageBuffer asset = params.flip ? hflip(fg.image) : fg.image;
  asset = rotate_rgba(asset, params.theta);
  const auto [sw, sh] = scaled_size(asset.width(), asset.height(), params.scale);
  asset = resize_bilinear(asset, sw, sh);

  const ImageBuffer& canvas = bg.image;
  if (params.origin_x < 0 || params.origin_y < 0 || params.origin_x + sw > canvas.width() ||
      params.origin_y + sh > canvas.height()) {
    throw Error(ErrorCode::ForegroundOutOfBounds,
                "placed foreground '" + fg.source_id + "' leaves the background");
  }

  const AlphaMask alpha = extract_alpha(asset);
  PixelRect box = tight_bbox(alpha, params.alpha_threshold);
  box.x_min += params.origin_x;
  box.x_max += params.origin_x;
  box.y_min += params.origin_y;
  box.y_max += params.origin_y;

  const ImageBuffer feathered = with_alpha(asset, feather_mask(alpha, params.feather_k));
  return ComposedSample{
      alpha_composite(feathered, canvas, params.origin_x, params.origin_y),
      Annotation{fg.class_id, pixel_to_norm(box, canvas.width(), canvas.height())},
      params,
      fg.source_id,
      bg.source_id,
  };
}

std::vector<int> plan_classes(const std::vector<ForegroundAsset>& fgs, std::size_t n,
                              const std::map<int, int>& class_targets) {
  std::map<int, int> remaining = class_targets;
  if (remaining.empty()) {
    std::vector<int> classes;
    for (const auto& fg : fgs) classes.push_back(fg.class_id);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.empty() && n > 0) throw Error(ErrorCode::InvalidArgument, "no foregrounds to plan");
    std::vector<int> plan(n);
    for (std::size_t i = 0; i < n; ++i) plan[i] = classes[i % classes.size()];
    return plan;
  }

  std::size_t total = 0;
  for (const auto& [cls, count] : remaining) {
    if (count < 0) throw Error(ErrorCode::InvalidArgument, "negative class target");
    total += static_cast<std::size_t>(count);
  }
  if (total != n) {
    throw Error(ErrorCode::InvalidArgument, "class targets sum to " + std::to_string(total) +
                                                " but " + std::to_string(n) + " items requested");
  }
  std::vector<int> plan;
  plan.reserve(n);
  while (plan.size() < n) {
    for (auto& [cls, count] : remaining) {
      if (count > 0) {
        plan.push_back(cls);
        --count;
      }
    }
  }
  return plan;
}

std::vector<std::size_t> plan_foregrounds(const std::vector<ForegroundAsset>& fgs, std::size_t n,
                                          const std::map<int, int>& class_targets) {
  if (n == 0) return {};
  if (fgs.empty()) throw Error(ErrorCode::InvalidArgument, "no foregrounds to compose");
  const std::vector<int> plan = plan_classes(fgs, n, class_targets);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < fgs.size(); ++i) by_class[fgs[i].class_id].push_back(i);
  std::map<int, std::size_t> used;
  std::vector<std::size_t> fg_index(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = by_class.find(plan[i]);
    if (it == by_class.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "no foreground available for class " + std::to_string(plan[i]));
    }
    fg_index[i] = it->second[used[plan[i]]++ % it->second.size()];
  }
  return fg_index;
}

ComposedSample compose_item(const std::vector<ForegroundAsset>& fgs,
                            const std::vector<BackgroundAsset>& bgs, std::size_t fg_index,
                            std::size_t index, std::uint64_t root_seed, const ComposeConfig& config) {
  try {
    if (bgs.empty()) throw Error(ErrorCode::InvalidArgument, "no backgrounds to compose onto");
    RngStream rng = derive_stream(root_seed, index);
    const auto& bg = bgs[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(bgs.size()) - 1))];
    const auto& fg = fgs.at(fg_index);
    return composite_sample(fg, bg, sample_params(fg, bg.image, rng, config));
  } catch (const Error& e) {
    throw Error(e.code(), "item " + std::to_string(index) + ": " + e.detail());
  }
}

std::vector<ComposedSample> batch_compose(const std::vector<ForegroundAsset>& fgs,
                                          const std::vector<BackgroundAsset>& bgs, std::size_t n,
                                          std::uint64_t root_seed, const ComposeConfig& config) {
  if (n == 0) return {};
  if (fgs.empty() || bgs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "batch_compose needs foregrounds and backgrounds");
  }
  const auto fg_index = plan_foregrounds(fgs, n, config.class_targets);
  std::vector<std::optional<ComposedSample>> slots(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    slots[i] = compose_item(fgs, bgs, fg_index[i], i, root_seed, config);
  });
  std::vector<ComposedSample> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace compaug
