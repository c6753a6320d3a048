#include <gtest/gtest.h>

#include <map>

#include "compaug/compose.hpp"
#include "compaug/imgproc.hpp"
#include "support/oracles.hpp"

using namespace compaug;

namespace {

ImageBuffer opaque_rgba(int w, int h, std::uint8_t value = 200) {
  ImageBuffer img(w, h, Channels::RGBA);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = value;
      img.at(x, y, 1) = static_cast<std::uint8_t>(x * 4);
      img.at(x, y, 2) = static_cast<std::uint8_t>(y * 4);
      img.at(x, y, 3) = 255;
    }
  return img;
}

/// Ellipse cutout with a soft rim so thresholds matter.
ImageBuffer blob(int w, int h) {
  ImageBuffer img(w, h, Channels::RGBA);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - w / 2.0) / (w / 2.0), dy = (y + 0.5 - h / 2.0) / (h / 2.0);
      const double d = std::sqrt(dx * dx + dy * dy);
      img.at(x, y, 0) = 240;
      img.at(x, y, 1) = 30;
      img.at(x, y, 2) = static_cast<std::uint8_t>(x);
      img.at(x, y, 3) = saturate_u8(std::clamp((1.0 - d) * 4.0, 0.0, 1.0) * 255.0);
    }
  return img;
}

BackgroundAsset sky(int w, int h, const std::string& id = "sky") {
  ImageBuffer img(w, h, Channels::RGB);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = 90;
      img.at(x, y, 1) = static_cast<std::uint8_t>(120 + y % 40);
      img.at(x, y, 2) = 220;
    }
  return BackgroundAsset(img, id);
}

}  // namespace

TEST(Composite, PlainPasteAnnotation) {
  const ForegroundAsset fg(opaque_rgba(50, 50), 1, "jet");
  ComposeParams p;
  p.origin_x = 100;
  p.origin_y = 80;
  const auto s = composite_sample(fg, sky(640, 480), p);
  EXPECT_EQ(s.annotation.class_id, 1);
  EXPECT_NEAR(s.annotation.bbox.cx(), 0.1953125, 1e-9);
  EXPECT_NEAR(s.annotation.bbox.cy(), 0.21875, 1e-9);
  EXPECT_NEAR(s.annotation.bbox.w(), 0.078125, 1e-9);
  EXPECT_NEAR(s.annotation.bbox.h(), 0.1041667, 1e-7);
  EXPECT_EQ(s.foreground_id, "jet");
  EXPECT_EQ(s.background_id, "sky");
}

TEST(Composite, TransparentForegroundRejected) {
  ImageBuffer clear(5, 5, Channels::RGBA);
  try {
    ForegroundAsset(clear, 0, "ghost");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
  }
  try {
    ForegroundAsset(ImageBuffer(5, 5, Channels::RGB), 0, "flat");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAlphaChannel);
  }
}

TEST(Composite, FeatherDoesNotMoveTheBox) {
  const ForegroundAsset fg(blob(40, 24), 0, "b");
  ComposeParams p;
  p.theta = 7.0;
  p.flip = true;
  p.scale = 1.3;
  p.origin_x = 10;
  p.origin_y = 12;
  p.feather_k = 1;
  const auto a = composite_sample(fg, sky(120, 90), p);
  p.feather_k = 3;
  const auto b = composite_sample(fg, sky(120, 90), p);
  EXPECT_EQ(a.annotation, b.annotation);
  EXPECT_NE(a.image, b.image);
}

TEST(Composite, BackgroundUntouchedWhereAlphaIsZero) {
  const ForegroundAsset fg(blob(30, 30), 0, "b");
  const auto bg = sky(80, 60);
  ComposeParams p;
  p.origin_x = 20;
  p.origin_y = 10;
  const auto s = composite_sample(fg, bg, p);
  const auto feathered = feather_mask(extract_alpha(fg.image), p.feather_k);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x) {
      const bool inside = x >= 20 && x < 50 && y >= 10 && y < 40;
      if (inside && feathered.at(x - 20, y - 10) > 0) continue;
      for (int c = 0; c < 3; ++c) ASSERT_EQ(s.image.at(x, y, c), bg.image.at(x, y, c));
    }
}

TEST(Composite, OutOfBoundsPlacement) {
  const ForegroundAsset fg(opaque_rgba(20, 20), 0, "f");
  ComposeParams p;
  p.origin_x = 50;
  try {
    composite_sample(fg, sky(60, 60), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ForegroundOutOfBounds);
  }
}

TEST(SampleParams, DegeneratePlacement) {
  const ForegroundAsset fg(opaque_rgba(64, 48), 0, "f");
  ComposeConfig cfg;
  cfg.theta_min = cfg.theta_max = 0.0;
  cfg.scale_min = cfg.scale_max = 1.0;
  RngStream rng = derive_stream(1, 0);
  const auto p = sample_params(fg, sky(64, 48).image, rng, cfg);
  EXPECT_EQ(p.origin_x, 0);
  EXPECT_EQ(p.origin_y, 0);
  EXPECT_DOUBLE_EQ(p.scale, 1.0);
}

TEST(SampleParams, Deterministic) {
  const ForegroundAsset fg(blob(40, 20), 0, "f");
  const auto bg = sky(320, 240);
  RngStream a = derive_stream(42, 17), b = derive_stream(42, 17);
  EXPECT_EQ(sample_params(fg, bg.image, a, {}), sample_params(fg, bg.image, b, {}));
}

TEST(SampleParams, Distributions) {
  const ForegroundAsset fg(blob(40, 20), 0, "f");
  const auto bg = sky(320, 240);
  double theta = 0;
  int flips = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    RngStream rng = derive_stream(9, static_cast<std::uint64_t>(i));
    const auto p = sample_params(fg, bg.image, rng, {});
    ASSERT_GE(p.theta, 0.0);
    ASSERT_LE(p.theta, 10.0);
    theta += p.theta;
    flips += p.flip;
    const auto [rw, rh] = rotated_extent(40, 20, p.theta);
    const auto [sw, sh] = scaled_size(rw, rh, p.scale);
    ASSERT_LE(p.origin_x + sw, 320);
    ASSERT_LE(p.origin_y + sh, 240);
    ASSERT_GE(sw, static_cast<int>(0.15 * 320) - 1);
    ASSERT_LE(sw, static_cast<int>(0.45 * 320) + 1);
  }
  EXPECT_NEAR(theta / n, 5.0, 0.3);
  EXPECT_NEAR(static_cast<double>(flips) / n, 0.5, 0.05);
}

TEST(SampleParams, NoValidPlacement) {
  const ForegroundAsset fg(opaque_rgba(10, 100), 0, "tall");
  ComposeConfig cfg;
  cfg.scale_min = 0.5;
  cfg.scale_max = 0.6;
  RngStream rng = derive_stream(0, 0);
  try {
    sample_params(fg, sky(200, 50).image, rng, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidPlacement);
  }
}

TEST(BatchCompose, EmptyBatch) {
  const std::vector<ForegroundAsset> fgs{ForegroundAsset(blob(10, 10), 0, "f")};
  EXPECT_TRUE(batch_compose(fgs, {sky(40, 30)}, 0, 1, {}).empty());
}

TEST(BatchCompose, ThreadCountDoesNotChangeOutput) {
  const std::vector<ForegroundAsset> fgs{ForegroundAsset(blob(20, 12), 0, "a"),
                                         ForegroundAsset(blob(14, 18), 1, "b")};
  const std::vector<BackgroundAsset> bgs{sky(96, 72, "s0"), sky(80, 80, "s1")};
  ComposeConfig one, eight;
  eight.threads = 8;
  const auto a = batch_compose(fgs, bgs, 40, 42, one);
  const auto b = batch_compose(fgs, bgs, 40, 42, eight);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].annotation, b[i].annotation);
    EXPECT_EQ(a[i].params, b[i].params);
    EXPECT_EQ(a[i].background_id, b[i].background_id);
  }
}

TEST(BatchCompose, ClassTargetsAndBalancedUse) {
  std::vector<ForegroundAsset> fgs;
  for (int i = 0; i < 5; ++i) fgs.emplace_back(blob(8 + i, 6 + i), 1, "mil" + std::to_string(i));
  fgs.emplace_back(blob(9, 9), 0, "com0");
  ComposeConfig cfg;
  cfg.class_targets = {{1, 316}};
  const auto out = batch_compose(fgs, {sky(48, 36)}, 316, 5, cfg);
  ASSERT_EQ(out.size(), 316u);
  std::map<std::string, int> uses;
  for (const auto& s : out) {
    EXPECT_EQ(s.annotation.class_id, 1);
    ++uses[s.foreground_id];
  }
  ASSERT_EQ(uses.size(), 5u);
  for (const auto& [id, n] : uses) EXPECT_TRUE(n == 63 || n == 64) << id << " used " << n;
}

TEST(PlanClasses, InterleavesAndValidates) {
  const std::vector<ForegroundAsset> fgs{ForegroundAsset(blob(5, 5), 0, "a"), ForegroundAsset(blob(5, 5), 1, "b")};
  EXPECT_EQ(plan_classes(fgs, 5, {{0, 2}, {1, 3}}), (std::vector<int>{0, 1, 0, 1, 1}));
  EXPECT_EQ(plan_classes(fgs, 3, {}), (std::vector<int>{0, 1, 0}));
  EXPECT_THROW(plan_classes(fgs, 4, {{0, 2}, {1, 3}}), Error);
  EXPECT_THROW(plan_foregrounds(fgs, 2, {{2, 2}}), Error);
}

TEST(ComposeItem, ErrorsCarryIndex) {
  const std::vector<ForegroundAsset> fgs{ForegroundAsset(opaque_rgba(10, 100), 0, "tall")};
  ComposeConfig cfg;
  cfg.scale_min = cfg.scale_max = 0.9;
  try {
    compose_item(fgs, {sky(200, 50)}, 0, 12, 0, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidPlacement);
    EXPECT_EQ(e.detail().rfind("item 12: ", 0), 0u) << e.detail();
  }
}
