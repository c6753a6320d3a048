#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compaug/core.hpp"
#include "compaug/dataset.hpp"

namespace compaug {

/// Intersection over union in corner space; 0 for disjoint boxes.
double iou(const NormBBox& a, const NormBBox& b);

/// Greedy per-class suppression: keep the most confident remaining box and
/// drop every same-class box with IoU > tau against it. Equal confidences keep
/// input order. The result is sorted by descending confidence.
std::vector<Detection> nms(const std::vector<Detection>& dets, double tau);

struct ImageRecord {
  std::string image_id;
  std::vector<Annotation> ground_truth;
  std::vector<Detection> predictions;
};

struct MatchRecord {
  std::string image_id;
  int class_id = 0;
  double confidence = 0.0;
  bool is_tp = false;
  /// Position of the prediction in the concatenated input (image order,
  /// then prediction order); the tie-breaker for equal confidences.
  std::size_t input_order = 0;
};

struct MatchLedger {
  /// Sorted by descending confidence, ties by image id then input_order.
  std::vector<MatchRecord> records;
  /// Ground-truth instances per class.
  std::vector<int> gt_totals;

  int num_classes() const noexcept { return static_cast<int>(gt_totals.size()); }
  int true_positives(std::optional<int> class_id = {}) const;
  int false_positives(std::optional<int> class_id = {}) const;
  int ground_truth(std::optional<int> class_id = {}) const;
};

/// Each GT box is consumed at most once. Within an image and class,
/// predictions are visited by descending confidence and matched to the
/// unmatched GT with the highest IoU; the match counts when IoU >= threshold.
MatchLedger match_detections(std::span<const ImageRecord> images, int num_classes,
                             double iou_threshold = 0.5);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

/// Pooled over all classes, or restricted to one class. No predictions gives
/// precision 1; no ground truth gives recall 1.
PrecisionRecall precision_recall(const MatchLedger& ledger, std::optional<int> class_id = {});

/// All-point interpolated AP: area under the monotone precision envelope.
double average_precision(const MatchLedger& ledger, int class_id);

struct ClassReport {
  int class_id = 0;
  std::string name;
  int ground_truth = 0;
  int predictions = 0;
  int true_positives = 0;
  int false_positives = 0;
  std::optional<double> ap50;  // empty when the class has no ground truth
  double precision = 1.0;
  double recall = 1.0;
};

struct EvalReport {
  std::vector<ClassReport> classes;
  /// Unweighted mean AP over classes with ground truth (0 if none has any).
  double map50 = 0.0;
  double precision = 1.0;
  double recall = 1.0;
  int images = 0;
  int ground_truth = 0;
  int raw_predictions = 0;
  int predictions = 0;  // after NMS
  double iou_threshold = 0.5;
  double nms_tau = 0.5;
};

/// Lines of `class_id confidence cx cy w h`.
std::vector<Detection> parse_predictions(std::string_view text, int num_classes);

/// NMS per image, matching, then per-class metrics.
EvalReport evaluate_records(const std::vector<ImageRecord>& images,
                            const std::vector<std::string>& class_names, double nms_tau,
                            double iou_threshold, int threads = 1);

/// Scores `<pred_root>/<stem>.txt` files against the labels of one split.
/// Missing prediction files mean no detections for that image.
EvalReport evaluate(const std::filesystem::path& pred_root, const DatasetConfig& config,
                    double nms_tau = 0.5, double iou_threshold = 0.5, Split split = Split::Test,
                    int threads = 1);

std::string format_report_table(const EvalReport& report);
/// `class,ap,precision,recall` rows, then `map50`, `precision`, `recall`.
std::string format_report_kv(const EvalReport& report);

}  // namespace compaug
