#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "compaug/core.hpp"

using namespace compaug;

namespace {

void expect_box(const NormBBox& b, double cx, double cy, double w, double h, double tol = 1e-7) {
  EXPECT_NEAR(b.cx(), cx, tol);
  EXPECT_NEAR(b.cy(), cy, tol);
  EXPECT_NEAR(b.w(), w, tol);
  EXPECT_NEAR(b.h(), h, tol);
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no compaug::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ImageBuffer, ShapeAndAccess) {
  ImageBuffer img(3, 2, Channels::RGBA);
  EXPECT_EQ(img.data().size(), 3u * 2u * 4u);
  img.at(2, 1, 3) = 7;
  EXPECT_EQ(img.data()[(1 * 3 + 2) * 4 + 3], 7);
  EXPECT_TRUE(img.has_alpha());
}

TEST(ImageBuffer, RejectsBadShapes) {
  EXPECT_THROW(ImageBuffer(0, 2, Channels::RGB), Error);
  EXPECT_THROW(ImageBuffer(2, 2, Channels::RGB, std::vector<std::uint8_t>(5)), Error);
}

TEST(Saturate, RoundsHalfAwayAndClamps) {
  EXPECT_EQ(saturate_u8(2.5), 3);
  EXPECT_EQ(saturate_u8(2.49), 2);
  EXPECT_EQ(saturate_u8(-4.0), 0);
  EXPECT_EQ(saturate_u8(300.0), 255);
}

TEST(NormBBox, Validation) {
  EXPECT_NO_THROW(NormBBox(0.5, 0.5, 1.0, 1.0));
  EXPECT_EQ(code_of([] { NormBBox(0.5, 0.5, 0.0, 0.1); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([] { NormBBox(0.5, 0.5, 1.2, 0.1); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([] { NormBBox(1.2, 0.5, 0.1, 0.1); }), ErrorCode::InvalidBox);
}

TEST(Detection, ConfidenceRange) {
  EXPECT_THROW(Detection(0, 1.5, NormBBox(0.5, 0.5, 0.1, 0.1)), Error);
  EXPECT_THROW(Detection(0, -0.1, NormBBox(0.5, 0.5, 0.1, 0.1)), Error);
}

TEST(NormToPixel, Examples) {
  EXPECT_EQ(norm_to_pixel(NormBBox(0.5, 0.5, 1, 1), 640, 480), (PixelRect{0, 0, 640, 480}));
  EXPECT_EQ(norm_to_pixel(NormBBox(0.1953125, 0.21875, 0.078125, 0.1041667), 640, 480),
            (PixelRect{100, 80, 150, 130}));
  EXPECT_EQ(norm_to_pixel(NormBBox(0.5, 0.5, 0.5, 0.5), 100, 100), (PixelRect{25, 25, 75, 75}));
}

TEST(PixelToNorm, Examples) {
  expect_box(pixel_to_norm({0, 0, 640, 480}, 640, 480), 0.5, 0.5, 1.0, 1.0);
  expect_box(pixel_to_norm({100, 80, 150, 130}, 640, 480), 0.1953125, 0.21875, 0.078125, 0.1041667);
  expect_box(pixel_to_norm({25, 25, 75, 75}, 100, 100), 0.5, 0.5, 0.5, 0.5);
}

TEST(PixelToNorm, RejectsOutOfFrame) {
  EXPECT_EQ(code_of([] { pixel_to_norm({0, 0, 641, 480}, 640, 480); }), ErrorCode::RectOutOfBounds);
  EXPECT_EQ(code_of([] { pixel_to_norm({5, 0, 5, 10}, 640, 480); }), ErrorCode::RectOutOfBounds);
}

TEST(BoxConversion, RoundTripOnRandomRects) {
  RngStream rng = derive_stream(11, 0);
  for (int i = 0; i < 1000; ++i) {
    const int w = static_cast<int>(rng.uniform_int(1, 2000));
    const int h = static_cast<int>(rng.uniform_int(1, 2000));
    const int x0 = static_cast<int>(rng.uniform_int(0, w - 1));
    const int y0 = static_cast<int>(rng.uniform_int(0, h - 1));
    const PixelRect r{x0, y0, static_cast<int>(rng.uniform_int(x0 + 1, w)),
                      static_cast<int>(rng.uniform_int(y0 + 1, h))};
    EXPECT_EQ(norm_to_pixel(pixel_to_norm(r, w, h), w, h), r);
  }
}

TEST(NormToPixel, ClampsPartialBoxes) {
  const auto r = norm_to_pixel(NormBBox(0.0, 0.0, 0.2, 0.2), 100, 100);
  EXPECT_EQ(r, (PixelRect{0, 0, 10, 10}));
}

TEST(Rng, SameKeySameDraws) {
  RngStream a = derive_stream(1234, 56), b = derive_stream(1234, 56);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, NeighbouringIndicesDiffer) {
  RngStream a = derive_stream(7, 0), b = derive_stream(7, 1);
  int same = 0;
  for (int i = 0; i < 10; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, GoldenSequenceSeedZeroIndexZero) {
  RngStream r = derive_stream(0, 0);
  EXPECT_EQ(r.next_u64(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(r.next_u64(), 0x6E789E6AA1B965F4ull);
  EXPECT_EQ(r.next_u64(), 0x06C45D188009454Full);
  EXPECT_EQ(r.next_u64(), 0xF88BB8A8724C81ECull);
  EXPECT_EQ(r.next_u64(), 0x1B39896A51A8749Bull);
  EXPECT_EQ(derive_stream(0, 0).uniform(), 0.88331080821364261);
}

TEST(Rng, UniformIntCoversRangeEvenly) {
  RngStream r = derive_stream(3, 3);
  std::vector<int> hist(6, 0);
  for (int i = 0; i < 60000; ++i) ++hist[static_cast<std::size_t>(r.uniform_int(0, 5))];
  for (int c : hist) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, NormalMoments) {
  RngStream r = derive_stream(5, 9);
  double s = 0, s2 = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(ErrorCodes, NamesAreDistinct) {
  std::set<std::string_view> names;
  for (int c = 0; c <= static_cast<int>(ErrorCode::EmptySplit); ++c) {
    names.insert(to_string(static_cast<ErrorCode>(c)));
  }
  EXPECT_EQ(names.size(), static_cast<std::size_t>(ErrorCode::EmptySplit) + 1);
  const Error e(ErrorCode::MissingKey, "train");
  EXPECT_EQ(std::string(e.what()), "MissingKey: train");
  EXPECT_EQ(e.detail(), "train");
}
