#include "compaug/classicaug.hpp"

#include "compaug/imgproc.hpp"

namespace compaug {

void ClassicOps::validate() const {
  if (blur) {
    if (blur->k < 1 || blur->k % 2 == 0) {
      throw Error(ErrorCode::EvenKernel, "blur kernel must be odd, got " + std::to_string(blur->k));
    }
    if (blur->sigma && !(*blur->sigma > 0.0)) {
      throw Error(ErrorCode::NonPositiveSigma, "blur sigma must be > 0");
    }
  }
  if (exposure) {
    const auto [lo, hi] = *exposure;
    if (!(lo >= 0.25 && lo <= hi && hi <= 4.0)) {
      throw Error(ErrorCode::GainOutOfRange, "exposure range must satisfy 0.25 <= lo <= hi <= 4");
    }
  }
}

Annotation flip_annotation(const Annotation& ann) {
  const auto& b = ann.bbox;
  return Annotation{ann.class_id, NormBBox(1.0 - b.cx(), b.cy(), b.w(), b.h())};
}

AugmentedImage augment_classical(const ImageBuffer& img, const std::vector<Annotation>& anns,
                                 const ClassicOps& ops, RngStream& rng) {
  ops.validate();
  AugmentedImage out{img, anns};

  const bool flip = ops.flip == FlipMode::On || (ops.flip == FlipMode::Random && rng.bernoulli(0.5));
  if (flip) {
    out.image = hflip(out.image);
    for (auto& a : out.annotations) a = flip_annotation(a);
  }
  if (ops.blur) out.image = gaussian_blur(out.image, ops.blur->k, ops.blur->sigma);
  if (ops.exposure) {
    out.image = adjust_exposure(out.image, rng.uniform(ops.exposure->lo, ops.exposure->hi));
  }
  return out;
}

std::vector<ClassicOps> separate_ops(const ClassicOps& ops) {
  std::vector<ClassicOps> out;
  if (ops.flip != FlipMode::Off) out.push_back(ClassicOps{ops.flip, {}, {}});
  if (ops.blur) out.push_back(ClassicOps{FlipMode::Off, ops.blur, {}});
  if (ops.exposure) out.push_back(ClassicOps{FlipMode::Off, {}, ops.exposure});
  return out;
}

}  // namespace compaug
