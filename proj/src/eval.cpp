#include "compaug/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "compaug/parallel.hpp"
#include "text_util.hpp"

namespace compaug {

namespace fs = std::filesystem;

double iou(const NormBBox& a, const NormBBox& b) {
  const double ix = std::max(0.0, std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min()));
  const double iy = std::max(0.0, std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min()));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  const double uni = a.w() * a.h() + b.w() * b.h() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

namespace {

std::vector<std::size_t> confidence_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

}  // namespace

std::vector<Detection> nms(const std::vector<Detection>& dets, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::BadTau, "nms tau " + std::to_string(tau) + " outside [0,1]");
  }
  const auto order = confidence_order(dets);
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& best = dets[order[i]];
    if (suppressed[order[i]]) continue;
    kept.push_back(best);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& other = dets[order[j]];
      if (!suppressed[order[j]] && other.class_id == best.class_id && iou(best.bbox, other.bbox) > tau) {
        suppressed[order[j]] = true;
      }
    }
  }
  return kept;
}

int MatchLedger::true_positives(std::optional<int> class_id) const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [&](const MatchRecord& r) {
    return r.is_tp && (!class_id || r.class_id == *class_id);
  }));
}

int MatchLedger::false_positives(std::optional<int> class_id) const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [&](const MatchRecord& r) {
    return !r.is_tp && (!class_id || r.class_id == *class_id);
  }));
}

int MatchLedger::ground_truth(std::optional<int> class_id) const {
  if (class_id) {
    return *class_id >= 0 && *class_id < num_classes()
               ? gt_totals[static_cast<std::size_t>(*class_id)]
               : 0;
  }
  return std::accumulate(gt_totals.begin(), gt_totals.end(), 0);
}

MatchLedger match_detections(std::span<const ImageRecord> images, int num_classes,
                             double iou_threshold) {
  MatchLedger ledger;
  ledger.gt_totals.assign(static_cast<std::size_t>(std::max(0, num_classes)), 0);
  std::size_t order_base = 0;
  for (const auto& img : images) {
    for (const auto& gt : img.ground_truth) {
      if (gt.class_id < 0 || gt.class_id >= num_classes) {
        throw Error(ErrorCode::ClassOutOfRange, img.image_id + ": ground-truth class " +
                                                    std::to_string(gt.class_id));
      }
      ++ledger.gt_totals[static_cast<std::size_t>(gt.class_id)];
    }
    std::vector<bool> matched(img.ground_truth.size(), false);
    for (const std::size_t p : confidence_order(img.predictions)) {
      const auto& det = img.predictions[p];
      if (det.class_id >= num_classes) {
        throw Error(ErrorCode::ClassOutOfRange, img.image_id + ": predicted class " +
                                                    std::to_string(det.class_id));
      }
      double best = -1.0;
      std::size_t best_gt = 0;
      for (std::size_t g = 0; g < img.ground_truth.size(); ++g) {
        if (matched[g] || img.ground_truth[g].class_id != det.class_id) continue;
        const double v = iou(det.bbox, img.ground_truth[g].bbox);
        if (v > best) {
          best = v;
          best_gt = g;
        }
      }
      const bool tp = best >= iou_threshold;
      if (tp) matched[best_gt] = true;
      ledger.records.push_back({img.image_id, det.class_id, det.confidence, tp, order_base + p});
    }
    order_base += img.predictions.size();
  }
  std::sort(ledger.records.begin(), ledger.records.end(), [](const MatchRecord& a, const MatchRecord& b) {
    // Ties break on image id first so the ranking does not depend on the
    // order images were processed in.
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.input_order < b.input_order;
  });
  return ledger;
}

PrecisionRecall precision_recall(const MatchLedger& ledger, std::optional<int> class_id) {
  const int tp = ledger.true_positives(class_id);
  const int fp = ledger.false_positives(class_id);
  const int gt = ledger.ground_truth(class_id);
  PrecisionRecall pr;
  pr.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  pr.recall = gt == 0 ? 1.0 : static_cast<double>(tp) / gt;
  return pr;
}

double average_precision(const MatchLedger& ledger, int class_id) {
  const int gt = ledger.ground_truth(class_id);
  if (gt == 0) {
    throw Error(ErrorCode::NoGroundTruth, "class " + std::to_string(class_id) + " has no ground truth");
  }
  std::vector<double> recall, precision;
  int tp = 0, seen = 0;
  for (const auto& r : ledger.records) {
    if (r.class_id != class_id) continue;
    ++seen;
    if (r.is_tp) ++tp;
    recall.push_back(static_cast<double>(tp) / gt);
    precision.push_back(static_cast<double>(tp) / seen);
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

std::vector<Detection> parse_predictions(std::string_view text, int num_classes) {
  using namespace detail;
  std::vector<Detection> out;
  int line_no = 0;
  for (const auto raw : split_lines(text)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no);
    const auto tok = split_ws(line);
    if (tok.size() != 6) {
      throw Error(ErrorCode::MalformedLine, where + ": expected 6 fields, got " + std::to_string(tok.size()));
    }
    const auto cls = parse_int(tok[0]);
    if (!cls) throw Error(ErrorCode::MalformedLine, where + ": bad class id");
    double v[5];
    for (std::size_t i = 0; i < 5; ++i) {
      const auto d = parse_double(tok[i + 1]);
      if (!d || !std::isfinite(*d)) throw Error(ErrorCode::MalformedLine, where + ": bad number");
      v[i] = *d;
    }
    if (*cls < 0 || *cls >= num_classes) {
      throw Error(ErrorCode::ClassOutOfRange, where + ": class " + std::to_string(*cls));
    }
    for (double x : v) {
      if (x < 0.0 || x > 1.0) throw Error(ErrorCode::CoordOutOfRange, where + ": value outside [0,1]");
    }
    if (v[3] <= 0.0 || v[4] <= 0.0) {
      throw Error(ErrorCode::CoordOutOfRange, where + ": box width and height must be > 0");
    }
    out.emplace_back(*cls, v[0], NormBBox(v[1], v[2], v[3], v[4]));
  }
  return out;
}

EvalReport evaluate_records(const std::vector<ImageRecord>& images,
                            const std::vector<std::string>& class_names, double nms_tau,
                            double iou_threshold, int threads) {
  if (!(nms_tau >= 0.0 && nms_tau <= 1.0)) {
    throw Error(ErrorCode::BadTau, "nms tau " + std::to_string(nms_tau) + " outside [0,1]");
  }
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "iou threshold outside [0,1]");
  }
  std::vector<ImageRecord> suppressed(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    suppressed[i] = ImageRecord{images[i].image_id, images[i].ground_truth,
                                nms(images[i].predictions, nms_tau)};
  });
  const int nc = static_cast<int>(class_names.size());
  const MatchLedger ledger = match_detections(suppressed, nc, iou_threshold);

  EvalReport report;
  report.iou_threshold = iou_threshold;
  report.nms_tau = nms_tau;
  report.images = static_cast<int>(images.size());
  report.ground_truth = ledger.ground_truth();
  for (const auto& img : images) report.raw_predictions += static_cast<int>(img.predictions.size());
  report.predictions = static_cast<int>(ledger.records.size());

  double ap_sum = 0.0;
  int ap_classes = 0;
  for (int c = 0; c < nc; ++c) {
    ClassReport cr;
    cr.class_id = c;
    cr.name = class_names[static_cast<std::size_t>(c)];
    cr.ground_truth = ledger.ground_truth(c);
    cr.true_positives = ledger.true_positives(c);
    cr.false_positives = ledger.false_positives(c);
    cr.predictions = cr.true_positives + cr.false_positives;
    const auto pr = precision_recall(ledger, c);
    cr.precision = pr.precision;
    cr.recall = pr.recall;
    if (cr.ground_truth > 0) {
      cr.ap50 = average_precision(ledger, c);
      ap_sum += *cr.ap50;
      ++ap_classes;
    }
    report.classes.push_back(std::move(cr));
  }
  report.map50 = ap_classes ? ap_sum / ap_classes : 0.0;
  const auto pr = precision_recall(ledger);
  report.precision = pr.precision;
  report.recall = pr.recall;
  return report;
}

EvalReport evaluate(const fs::path& pred_root, const DatasetConfig& config, double nms_tau,
                    double iou_threshold, Split split, int threads) {
  if (!fs::is_directory(pred_root)) {
    throw Error(ErrorCode::UnreadableFile, "prediction directory " + pred_root.string() + " does not exist");
  }
  const auto items = list_split(config, split);
  std::map<std::string, std::size_t> by_stem;
  for (std::size_t i = 0; i < items.size(); ++i) by_stem[items[i].image_path.stem().string()] = i;

  std::vector<ImageRecord> records(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    records[i].image_id = items[i].image_path.stem().string();
    records[i].ground_truth = items[i].annotations;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(pred_root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto it = by_stem.find(file.stem().string());
    if (it == by_stem.end()) {
      throw Error(ErrorCode::DanglingLabel, file.string() + " matches no image in the " +
                                                std::string(to_string(split)) + " split");
    }
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      records[it->second].predictions = parse_predictions(ss.str(), config.num_classes());
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.detail());
    }
  }
  return evaluate_records(records, config.class_names, nms_tau, iou_threshold, threads);
}

std::string format_report_table(const EvalReport& r) {
  std::size_t width = 5;
  for (const auto& c : r.classes) width = std::max(width, c.name.size());
  const int w = static_cast<int>(width);
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "images %d, ground truth %d, predictions %d (%d after NMS), IoU %.2f, NMS tau %.2f\n",
                r.images, r.ground_truth, r.raw_predictions, r.predictions, r.iou_threshold, r.nms_tau);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-*s %6s %6s %6s %6s %9s %7s %7s\n", w, "class", "gt", "pred", "tp",
                "fp", "precision", "recall", "ap50");
  out += buf;
  for (const auto& c : r.classes) {
    char ap[16];
    if (c.ap50) std::snprintf(ap, sizeof ap, "%.4f", *c.ap50);
    else std::snprintf(ap, sizeof ap, "n/a");
    std::snprintf(buf, sizeof buf, "%-*s %6d %6d %6d %6d %9.4f %7.4f %7s\n", w, c.name.c_str(),
                  c.ground_truth, c.predictions, c.true_positives, c.false_positives, c.precision,
                  c.recall, ap);
    out += buf;
  }
  int tp = 0, fp = 0;
  for (const auto& c : r.classes) {
    tp += c.true_positives;
    fp += c.false_positives;
  }
  std::snprintf(buf, sizeof buf, "%-*s %6d %6d %6d %6d %9.4f %7.4f %7.4f\n", w, "all", r.ground_truth,
                r.predictions, tp, fp, r.precision, r.recall, r.map50);
  out += buf;
  std::snprintf(buf, sizeof buf, "mAP50 = %.4f\n", r.map50);
  out += buf;
  out += "precision/recall are taken over the full ranked list (confidence threshold 0)\n";
  return out;
}

std::string format_report_kv(const EvalReport& r) {
  std::string out = "class,ap,precision,recall\n";
  char buf[256];
  for (const auto& c : r.classes) {
    if (c.ap50) {
      std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f\n", c.name.c_str(), *c.ap50, c.precision, c.recall);
    } else {
      std::snprintf(buf, sizeof buf, "%s,na,%.4f,%.4f\n", c.name.c_str(), c.precision, c.recall);
    }
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "map50,%.4f\nprecision,%.4f\nrecall,%.4f\n", r.map50, r.precision, r.recall);
  out += buf;
  return out;
}

}  // namespace compaug
