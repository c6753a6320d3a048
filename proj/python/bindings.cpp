#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "compaug/classicaug.hpp"
#include "compaug/compose.hpp"
#include "compaug/dataset.hpp"
#include "compaug/eval.hpp"
#include "compaug/imgproc.hpp"
#include "compaug/toytrain.hpp"

namespace py = pybind11;
using namespace compaug;

namespace {

using Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ImageBuffer to_buffer(const Array& arr) {
  const auto info = arr.request();
  int channels = 1;
  if (info.ndim == 3) {
    channels = static_cast<int>(info.shape[2]);
  } else if (info.ndim != 2) {
    throw py::value_error("expected an HxW or HxWxC uint8 array");
  }
  if (channels != 1 && channels != 3 && channels != 4) throw py::value_error("channels must be 1, 3 or 4");
  const auto h = static_cast<int>(info.shape[0]), w = static_cast<int>(info.shape[1]);
  const auto* src = static_cast<const std::uint8_t*>(info.ptr);
  return ImageBuffer(w, h, static_cast<Channels>(channels),
                     std::vector<std::uint8_t>(src, src + static_cast<std::size_t>(info.size)));
}

Array to_array(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channel_count() > 1) shape.push_back(img.channel_count());
  Array out(shape);
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
  return out;
}

py::tuple box_tuple(const NormBBox& b) { return py::make_tuple(b.cx(), b.cy(), b.w(), b.h()); }

NormBBox to_box(const std::array<double, 4>& b) { return NormBBox(b[0], b[1], b[2], b[3]); }

py::dict report_dict(const EvalReport& r) {
  py::list classes;
  for (const auto& c : r.classes) {
    py::dict d;
    d["name"] = c.name;
    d["ap50"] = c.ap50 ? py::cast(*c.ap50) : py::none();
    d["precision"] = c.precision;
    d["recall"] = c.recall;
    d["ground_truth"] = c.ground_truth;
    d["true_positives"] = c.true_positives;
    d["false_positives"] = c.false_positives;
    classes.append(d);
  }
  py::dict d;
  d["classes"] = classes;
  d["map50"] = r.map50;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["images"] = r.images;
  d["ground_truth"] = r.ground_truth;
  d["predictions"] = r.predictions;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compositing augmentation, image primitives and detection metrics";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("gaussian_kernel", [](int k, double sigma) {
    const auto kern = gaussian_kernel(k, sigma);
    py::array_t<double> out({k, k});
    std::memcpy(out.mutable_data(), kern.weights().data(), kern.weights().size() * sizeof(double));
    return out;
  }, py::arg("k"), py::arg("sigma"));
  m.def("auto_sigma", &auto_sigma, py::arg("k"));
  m.def("gaussian_blur", [](const Array& img, int k, std::optional<double> sigma) {
    return to_array(gaussian_blur(to_buffer(img), k, sigma));
  }, py::arg("image"), py::arg("k"), py::arg("sigma") = py::none());
  m.def("hflip", [](const Array& img) { return to_array(hflip(to_buffer(img))); }, py::arg("image"));
  m.def("rotate_rgba", [](const Array& img, double deg) { return to_array(rotate_rgba(to_buffer(img), deg)); },
        py::arg("image"), py::arg("degrees"));
  m.def("adjust_exposure", [](const Array& img, double gain) {
    return to_array(adjust_exposure(to_buffer(img), gain));
  }, py::arg("image"), py::arg("gain"));
  m.def("alpha_composite", [](const Array& fg, const Array& bg, int x, int y) {
    return to_array(alpha_composite(to_buffer(fg), to_buffer(bg), x, y));
  }, py::arg("fg"), py::arg("bg"), py::arg("x"), py::arg("y"));
  m.def("tight_bbox", [](const Array& alpha, int threshold) {
    const auto img = to_buffer(alpha);
    if (img.channel_count() != 1) throw py::value_error("expected a single-channel mask");
    const auto r = tight_bbox(AlphaMask(img.width(), img.height(),
                                        std::vector<std::uint8_t>(img.data().begin(), img.data().end())),
                              static_cast<std::uint8_t>(threshold));
    return py::make_tuple(r.x_min, r.y_min, r.x_max, r.y_max);
  }, py::arg("mask"), py::arg("threshold") = 127);
  m.def("canny", [](const Array& img, double low, double high) { return to_array(canny(to_buffer(img), low, high)); },
        py::arg("image"), py::arg("low"), py::arg("high"));

  m.def("iou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
    return iou(to_box(a), to_box(b));
  }, py::arg("a"), py::arg("b"));
  m.def("nms", [](const std::vector<std::tuple<int, double, std::array<double, 4>>>& dets, double tau) {
    std::vector<Detection> in;
    for (const auto& [c, conf, b] : dets) in.emplace_back(c, conf, to_box(b));
    py::list out;
    for (const auto& d : nms(in, tau)) out.append(py::make_tuple(d.class_id, d.confidence, box_tuple(d.bbox)));
    return out;
  }, py::arg("detections"), py::arg("tau") = 0.5);
  m.def("average_precision", [](const std::vector<std::pair<double, bool>>& ranked, int gt) {
    MatchLedger l;
    l.gt_totals = {gt};
    std::size_t i = 0;
    for (const auto& [conf, tp] : ranked) l.records.push_back({"", 0, conf, tp, i++});
    std::stable_sort(l.records.begin(), l.records.end(),
                     [](const MatchRecord& a, const MatchRecord& b) { return a.confidence > b.confidence; });
    return average_precision(l, 0);
  }, py::arg("ranked"), py::arg("ground_truth"),
     "AP of (confidence, is_true_positive) pairs for one class.");

  m.def("parse_yolo_labels", [](std::string_view text, int num_classes) {
    py::list out;
    for (const auto& a : parse_yolo_labels(text, num_classes)) out.append(py::make_tuple(a.class_id, box_tuple(a.bbox)));
    return out;
  }, py::arg("text"), py::arg("num_classes"));
  m.def("write_yolo_labels", [](const std::vector<std::pair<int, std::array<double, 4>>>& anns) {
    std::vector<Annotation> in;
    for (const auto& [c, b] : anns) in.push_back({c, to_box(b)});
    return write_yolo_labels(in);
  }, py::arg("annotations"));
  m.def("summarize", [](const std::filesystem::path& config) {
    const auto s = summarize_split(load_data_config(config));
    py::dict out;
    for (std::size_t c = 0; c < s.class_names.size(); ++c) {
      out[py::str(s.class_names[c])] = py::make_tuple(s.count(Split::Train, static_cast<int>(c)),
                                                      s.count(Split::Val, static_cast<int>(c)),
                                                      s.count(Split::Test, static_cast<int>(c)));
    }
    return out;
  }, py::arg("config"), "Per-class (train, val, test) image counts.");
  m.def("evaluate", [](const std::filesystem::path& preds, const std::filesystem::path& config, double tau,
                       double iou_threshold) {
    return report_dict(evaluate(preds, load_data_config(config), tau, iou_threshold));
  }, py::arg("preds"), py::arg("config"), py::arg("nms_tau") = 0.5, py::arg("iou") = 0.5);

  m.def("compose", [](const std::vector<Array>& fgs, const std::vector<int>& classes, const std::vector<Array>& bgs,
                      std::size_t n, std::uint64_t seed, int threads) {
    if (fgs.size() != classes.size()) throw py::value_error("one class id per foreground");
    std::vector<ForegroundAsset> fg;
    for (std::size_t i = 0; i < fgs.size(); ++i) fg.emplace_back(to_buffer(fgs[i]), classes[i], "fg" + std::to_string(i));
    std::vector<BackgroundAsset> bg;
    for (std::size_t i = 0; i < bgs.size(); ++i) bg.emplace_back(to_buffer(bgs[i]), "bg" + std::to_string(i));
    ComposeConfig cfg;
    cfg.threads = threads;
    std::vector<ComposedSample> samples;
    {
      py::gil_scoped_release release;
      samples = batch_compose(fg, bg, n, seed, cfg);
    }
    py::list out;
    for (const auto& s : samples) {
      out.append(py::make_tuple(to_array(s.image), s.annotation.class_id, box_tuple(s.annotation.bbox)));
    }
    return out;
  }, py::arg("foregrounds"), py::arg("classes"), py::arg("backgrounds"), py::arg("n"), py::arg("seed") = 0,
     py::arg("threads") = 1, "Returns a list of (image, class_id, (cx, cy, w, h)).");

  m.def("train_toy", [](int epochs, int patience, double lr, const std::string& optimizer, std::uint64_t seed) {
    toy::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.patience = patience;
    cfg.seed = seed;
    cfg.optimizer.lr = lr;
    cfg.optimizer.kind = optimizer == "gd" ? toy::OptimizerKind::PlainGD : toy::OptimizerKind::AdamW;
    const auto problem = toy::make_toy_problem(200, 8, 2, seed);
    const auto r = toy::train_loop(problem.train, problem.val, toy::init_model(8, 2, seed), cfg);
    py::list val;
    for (const auto& e : r.history.epochs) val.append(e.val_loss);
    py::dict d;
    d["val_loss"] = val;
    d["best_epoch"] = r.history.best_epoch;
    d["best_val_loss"] = r.history.best_val_loss;
    d["stopped_early"] = r.history.stopped_early;
    return d;
  }, py::arg("epochs") = 500, py::arg("patience") = 10, py::arg("lr") = 0.001667, py::arg("optimizer") = "adamw",
     py::arg("seed") = 0);
}
