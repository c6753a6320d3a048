#include "compaug/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "compaug/classicaug.hpp"
#include "compaug/compose.hpp"
#include "compaug/dataset.hpp"
#include "compaug/eval.hpp"
#include "compaug/image_io.hpp"
#include "compaug/imgproc.hpp"
#include "compaug/parallel.hpp"
#include "compaug/toytrain.hpp"
#include "text_util.hpp"

namespace compaug::cli {

namespace fs = std::filesystem;

namespace {

/// Malformed flag values discovered after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError(std::string(flag) + " expects MIN:MAX");
  const auto lo = detail::parse_double(detail::trim(std::string_view(text).substr(0, colon)));
  const auto hi = detail::parse_double(detail::trim(std::string_view(text).substr(colon + 1)));
  if (!lo || !hi || *lo > *hi) throw UsageError(std::string(flag) + " expects MIN:MAX with MIN <= MAX");
  return {*lo, *hi};
}

/// "1:316,0:89" -> {1: 316, 0: 89}
std::map<int, int> parse_targets(const std::string& text) {
  std::map<int, int> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto comma = text.find(',', start);
    const auto part = std::string_view(text).substr(start, comma == std::string::npos ? text.npos : comma - start);
    const auto colon = part.find(':');
    const auto cls = colon == part.npos ? std::nullopt : detail::parse_int(detail::trim(part.substr(0, colon)));
    const auto count = colon == part.npos ? std::nullopt : detail::parse_int(detail::trim(part.substr(colon + 1)));
    if (!cls || !count || *cls < 0 || *count < 0) throw UsageError("--targets expects CLASS:COUNT[,CLASS:COUNT...]");
    out[*cls] = *count;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::UnreadableFile, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& p : sorted_entries(dir)) {
    if (fs::is_regular_file(p) && is_image_file(p)) out.push_back(p);
  }
  return out;
}

bool overlaps(const fs::path& a, const fs::path& b) {
  const auto ca = fs::weakly_canonical(fs::absolute(a));
  const auto cb = fs::weakly_canonical(fs::absolute(b));
  const auto prefix = [](const fs::path& outer, const fs::path& inner) {
    auto o = outer.begin(), i = inner.begin();
    for (; o != outer.end(); ++o, ++i) {
      if (o->empty()) continue;
      if (i == inner.end() || *o != *i) return false;
    }
    return true;
  };
  return prefix(ca, cb) || prefix(cb, ca);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------

struct ComposeArgs {
  std::string fg, bg, out, base, scale = "0.15:0.45", targets;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  double theta_min = 0.0, theta_max = 10.0;
  int feather = 3, alpha_threshold = 127, default_class = 0, threads = 1;
};

std::vector<ForegroundAsset> load_foregrounds(const fs::path& dir, int default_class,
                                              const std::vector<std::string>& names) {
  std::vector<ForegroundAsset> fgs;
  const auto load = [&](const fs::path& file, int cls) {
    fgs.emplace_back(read_image(file), cls, file.stem().string());
  };
  for (const auto& p : sorted_entries(dir)) {
    if (fs::is_directory(p)) {
      const auto name = p.filename().string();
      std::optional<int> cls = detail::parse_int(name);
      if (!cls) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it != names.end()) cls = static_cast<int>(it - names.begin());
      }
      if (!cls) throw Error(ErrorCode::ClassOutOfRange, "foreground folder '" + name + "' names no class");
      for (const auto& f : image_files(p)) load(f, *cls);
    } else if (fs::is_regular_file(p) && is_image_file(p)) {
      load(p, default_class);
    }
  }
  if (fgs.empty()) throw Error(ErrorCode::UnreadableFile, "no foreground images in " + dir.string());
  return fgs;
}

int run_compose(const ComposeArgs& a, std::ostream& out) {
  ComposeConfig cfg;
  std::tie(cfg.scale_min, cfg.scale_max) = parse_range(a.scale, "--scale");
  cfg.theta_min = a.theta_min;
  cfg.theta_max = a.theta_max;
  cfg.feather_k = a.feather;
  if (a.alpha_threshold < 0 || a.alpha_threshold > 255) throw UsageError("--alpha-threshold must be in [0,255]");
  cfg.alpha_threshold = static_cast<std::uint8_t>(a.alpha_threshold);
  cfg.threads = a.threads;
  if (!a.targets.empty()) cfg.class_targets = parse_targets(a.targets);
  if (a.feather < 1 || a.feather % 2 == 0) throw UsageError("--feather must be an odd integer >= 1");

  std::size_t n = a.n;
  if (!cfg.class_targets.empty()) {
    n = 0;
    for (const auto& [cls, count] : cfg.class_targets) n += static_cast<std::size_t>(count);
  }
  std::optional<DatasetConfig> base;
  if (!a.base.empty()) base = load_data_config(a.base);
  const auto fgs = load_foregrounds(a.fg, a.default_class, base ? base->class_names : std::vector<std::string>{});
  std::vector<BackgroundAsset> bgs;
  for (const auto& f : image_files(a.bg)) bgs.emplace_back(to_rgb(read_image(f)), f.stem().string());
  if (bgs.empty()) throw Error(ErrorCode::UnreadableFile, "no background images in " + a.bg);
  if (overlaps(a.out, a.fg) || overlaps(a.out, a.bg)) {
    throw Error(ErrorCode::IoFailure, "--out must not overlap the foreground or background folders");
  }
  if (base) {
    for (const auto& fg : fgs) {
      if (fg.class_id >= base->num_classes()) {
        throw Error(ErrorCode::ClassOutOfRange, "foreground '" + fg.source_id + "' has class " +
                                                    std::to_string(fg.class_id));
      }
    }
  }

  out << "compose: seed=" << a.seed << " n=" << n << " threads=" << a.threads << "\n";
  const auto plan = plan_foregrounds(fgs, n, cfg.class_targets);
  const auto stem_of = [&](std::size_t i) { return provenance_stem(fgs[plan[i]].source_id, "ic", i); };

  if (base) {
    const auto samples = batch_compose(fgs, bgs, n, a.seed, cfg);
    std::vector<AugmentedItem> items;
    items.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      items.push_back({Split::Train, stem_of(i), samples[i].image, {samples[i].annotation}});
    }
    assemble(items, *base, a.out);
    out << "wrote " << n << " composites into dataset " << fs::path(a.out).string() << "\n";
    return kExitOk;
  }

  const fs::path root(a.out);
  fs::remove_all(root / "images");
  fs::remove_all(root / "labels");
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  std::string manifest = "stem,class_id,foreground,background,theta,flip,scale,origin_x,origin_y\n";
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t count = std::min(kChunk, n - start);
    std::vector<std::optional<ComposedSample>> samples(count);
    std::vector<std::vector<std::uint8_t>> encoded(count);
    parallel_for(count, a.threads, [&](std::size_t k) {
      samples[k] = compose_item(fgs, bgs, plan[start + k], start + k, a.seed, cfg);
      encoded[k] = encode_png(samples[k]->image);
    });
    for (std::size_t k = 0; k < count; ++k) {
      const auto& s = *samples[k];
      const auto stem = stem_of(start + k);
      write_bytes(root / "images" / (stem + ".png"), encoded[k]);
      write_text(root / "labels" / (stem + ".txt"), write_yolo_labels({s.annotation}));
      char buf[512];
      std::snprintf(buf, sizeof buf, "%s,%d,%s,%s,%.6f,%d,%.6f,%d,%d\n", stem.c_str(), s.annotation.class_id,
                    s.foreground_id.c_str(), s.background_id.c_str(), s.params.theta, s.params.flip ? 1 : 0,
                    s.params.scale, s.params.origin_x, s.params.origin_y);
      manifest += buf;
    }
  }
  write_text(root / "manifest.csv", manifest);
  out << "wrote " << n << " composites to " << root.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ClassicArgs {
  std::string in, out, exposure, mode = "joint";
  bool flip = false, flip_random = false;
  int blur = 0;
  double blur_sigma = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_classic(const ClassicArgs& a, std::ostream& out) {
  ClassicOps ops;
  if (a.flip && a.flip_random) throw UsageError("--flip and --flip-random are exclusive");
  if (a.flip) ops.flip = FlipMode::On;
  if (a.flip_random) ops.flip = FlipMode::Random;
  if (a.blur != 0) {
    ops.blur = BlurOp{a.blur, a.blur_sigma > 0.0 ? std::optional<double>(a.blur_sigma) : std::nullopt};
  }
  if (!a.exposure.empty()) {
    const auto [lo, hi] = parse_range(a.exposure, "--exposure");
    ops.exposure = GainRange{lo, hi};
  }
  if (a.mode != "joint" && a.mode != "separate") throw UsageError("--mode must be joint or separate");
  try {
    ops.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const DatasetConfig cfg = load_data_config(a.in);
  const auto recipes = a.mode == "joint" ? std::vector<ClassicOps>{ops} : separate_ops(ops);
  const auto sources = list_split(cfg, Split::Train);
  out << "classic: seed=" << a.seed << " mode=" << a.mode << " sources=" << sources.size()
      << " threads=" << a.threads << "\n";

  const std::size_t per_source = ops.any() ? recipes.size() : 0;
  std::vector<std::optional<AugmentedItem>> slots(sources.size() * per_source);
  parallel_for(slots.size(), a.threads, [&](std::size_t index) {
    const auto& src = sources[index / per_source];
    RngStream rng = derive_stream(a.seed, index);
    auto aug = augment_classical(read_image(src.image_path), src.annotations, recipes[index % per_source], rng);
    slots[index] = AugmentedItem{Split::Train, provenance_stem(src.image_path.stem().string(), "cl", index),
                                 std::move(aug.image), std::move(aug.annotations)};
  });
  std::vector<AugmentedItem> items;
  items.reserve(slots.size());
  for (auto& s : slots) items.push_back(std::move(*s));
  assemble(items, cfg, a.out);
  out << "wrote " << items.size() << " augmented images into dataset " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_edges(const std::string& in, const std::string& out_dir, double low, double high, int threads,
              std::ostream& out) {
  if (!(low >= 0.0 && low < high)) throw UsageError("--low and --high must satisfy 0 <= low < high");
  const auto files = image_files(in);
  if (overlaps(in, out_dir)) throw Error(ErrorCode::IoFailure, "--out must not overlap --in");
  fs::create_directories(out_dir);
  parallel_for(files.size(), threads, [&](std::size_t i) {
    write_png(fs::path(out_dir) / (files[i].stem().string() + ".png"), canny(read_image(files[i]), low, high));
  });
  out << "wrote " << files.size() << " edge maps to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  int epochs = 500, patience = 10, batch = 16, samples = 200, features = 8, classes = 2;
  double lr = 0.001667;
  std::string optimizer = "adamw", csv;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  toy::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.optimizer.lr = a.lr;
  cfg.optimizer.kind = a.optimizer == "gd" ? toy::OptimizerKind::PlainGD : toy::OptimizerKind::AdamW;
  if (a.epochs < 1 || a.patience < 1 || a.batch < 1 || !(a.lr > 0.0) || a.samples < 2 || a.features < 1 ||
      a.classes < 1) {
    throw UsageError("epochs, patience, batch, lr, samples, features and classes must be positive");
  }
  const auto problem = toy::make_toy_problem(a.samples, a.features, a.classes, a.seed);
  const auto init = toy::init_model(a.features, a.classes, a.seed);
  out << "# train-toy seed=" << a.seed << " optimizer=" << a.optimizer << " lr=" << a.lr
      << " epochs=" << a.epochs << " patience=" << a.patience << " batch=" << a.batch << "\n";
  const auto result = toy::train_loop(problem.train, problem.val, init, cfg);
  const auto csv = toy::format_history_csv(result.history);
  if (a.csv.empty()) out << csv;
  else write_text(a.csv, csv);
  char buf[256];
  std::snprintf(buf, sizeof buf, "best_epoch=%d best_val_loss=%.4f epochs_run=%zu stopped_early=%s\n",
                result.history.best_epoch, result.history.best_val_loss, result.history.epochs.size(),
                result.history.stopped_early ? "true" : "false");
  out << buf;
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"compaug: compositing augmentation and detection evaluation toolkit", "compaug"};
  app.require_subcommand(1);
  int threads = 1;

  ComposeArgs ca;
  auto* compose = app.add_subcommand("compose", "Paste foreground cutouts onto backgrounds");
  compose->add_option("--fg", ca.fg, "Foreground RGBA cutouts (subfolders name classes)")->required();
  compose->add_option("--bg", ca.bg, "Background images")->required();
  compose->add_option("--out", ca.out, "Output folder")->required();
  compose->add_option("--n", ca.n, "Number of composites")->capture_default_str();
  compose->add_option("--seed", ca.seed, "Root seed")->capture_default_str();
  compose->add_option("--theta-min", ca.theta_min, "Minimum rotation (degrees)")->capture_default_str();
  compose->add_option("--theta-max", ca.theta_max, "Maximum rotation (degrees)")->capture_default_str();
  compose->add_option("--scale", ca.scale, "Placed width as a fraction of background width, MIN:MAX")
      ->capture_default_str();
  compose->add_option("--feather", ca.feather, "Seam feathering kernel size (odd)")->capture_default_str();
  compose->add_option("--alpha-threshold", ca.alpha_threshold, "Alpha level defining object extent")
      ->capture_default_str();
  compose->add_option("--class", ca.default_class, "Class of foregrounds placed directly in --fg")
      ->capture_default_str();
  compose->add_option("--targets", ca.targets, "Exact per-class counts CLASS:COUNT,... (overrides --n)");
  compose->add_option("--base", ca.base, "Dataset config to extend; writes a full dataset to --out");
  compose->add_option("--threads", ca.threads, "Worker threads")->capture_default_str();

  ClassicArgs cl;
  auto* classic = app.add_subcommand("classic", "Classical flip/blur/exposure augmentation of a dataset");
  classic->add_option("--in", cl.in, "Source dataset config")->required();
  classic->add_option("--out", cl.out, "Output dataset folder")->required();
  classic->add_flag("--flip", cl.flip, "Mirror every image");
  classic->add_flag("--flip-random", cl.flip_random, "Mirror each image with probability 0.5");
  classic->add_option("--blur", cl.blur, "Gaussian blur kernel size (odd)");
  classic->add_option("--blur-sigma", cl.blur_sigma, "Blur sigma (default: derived from kernel size)");
  classic->add_option("--exposure", cl.exposure, "Exposure gain range LO:HI");
  classic->add_option("--mode", cl.mode, "joint: one copy with all ops; separate: one copy per op")
      ->capture_default_str();
  classic->add_option("--seed", cl.seed, "Root seed")->capture_default_str();
  classic->add_option("--threads", cl.threads, "Worker threads")->capture_default_str();

  std::string edges_in, edges_out;
  double low = 50.0, high = 150.0;
  auto* edges = app.add_subcommand("edges", "Canny edge maps for every image in a folder");
  edges->add_option("--in", edges_in, "Input image folder")->required();
  edges->add_option("--out", edges_out, "Output folder")->required();
  edges->add_option("--low", low, "Hysteresis low threshold")->capture_default_str();
  edges->add_option("--high", high, "Hysteresis high threshold")->capture_default_str();
  edges->add_option("--threads", threads, "Worker threads")->capture_default_str();

  std::string summary_config;
  auto* summary = app.add_subcommand("dataset-summary", "Per-class image counts of each split");
  summary->add_option("--config", summary_config, "Dataset config")->required();

  std::string eval_config, preds, report_path, split_name = "test";
  double nms_tau = 0.5, iou_thresh = 0.5;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score prediction files against a split");
  evaluate_cmd->add_option("--config", eval_config, "Dataset config")->required();
  evaluate_cmd->add_option("--preds", preds, "Folder of <stem>.txt prediction files")->required();
  evaluate_cmd->add_option("--nms-tau", nms_tau, "NMS IoU threshold")->capture_default_str();
  evaluate_cmd->add_option("--iou", iou_thresh, "Match IoU threshold")->capture_default_str();
  evaluate_cmd->add_option("--split", split_name, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  evaluate_cmd->add_option("--report", report_path, "Also write the key-value report here");
  evaluate_cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train-toy", "Train the toy detection head with early stopping");
  train->add_option("--epochs", ta.epochs, "Maximum epochs")->capture_default_str();
  train->add_option("--patience", ta.patience, "Early-stopping patience")->capture_default_str();
  train->add_option("--lr", ta.lr, "Learning rate")->capture_default_str();
  train->add_option("--optimizer", ta.optimizer, "gd or adamw")
      ->check(CLI::IsMember({"gd", "adamw"}))
      ->capture_default_str();
  train->add_option("--seed", ta.seed, "Seed")->capture_default_str();
  train->add_option("--batch", ta.batch, "Batch size")->capture_default_str();
  train->add_option("--samples", ta.samples, "Synthetic samples (train + val)")->capture_default_str();
  train->add_option("--features", ta.features, "Feature dimension")->capture_default_str();
  train->add_option("--classes", ta.classes, "Number of classes")->capture_default_str();
  train->add_option("--csv", ta.csv, "Write the history CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (compose->parsed()) return run_compose(ca, out);
    if (classic->parsed()) return run_classic(cl, out);
    if (edges->parsed()) return run_edges(edges_in, edges_out, low, high, threads, out);
    if (summary->parsed()) {
      out << format_summary(summarize_split(load_data_config(summary_config)));
      return kExitOk;
    }
    if (evaluate_cmd->parsed()) {
      const Split split = split_name == "train" ? Split::Train : split_name == "val" ? Split::Val : Split::Test;
      const auto report = evaluate(preds, load_data_config(eval_config), nms_tau, iou_thresh, split, threads);
      out << format_report_table(report);
      if (!report_path.empty()) write_text(report_path, format_report_kv(report));
      return kExitOk;
    }
    if (train->parsed()) return run_train(ta, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: IoFailure: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace compaug::cli
