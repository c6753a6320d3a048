#include "compaug/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "compaug/image_io.hpp"
#include "text_util.hpp"

namespace compaug {

namespace fs = std::filesystem;
using detail::parse_double;
using detail::parse_int;
using detail::split_lines;
using detail::split_ws;
using detail::trim;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

const fs::path& DatasetConfig::dir(Split split) const {
  switch (split) {
    case Split::Train: return train_dir;
    case Split::Val: return val_dir;
    case Split::Test: return test_dir;
  }
  return train_dir;
}

// ---------------------------------------------------------------------------
// Label files
// ---------------------------------------------------------------------------

std::vector<Annotation> parse_yolo_labels(std::string_view text, int num_classes) {
  std::vector<Annotation> out;
  int line_no = 0;
  for (const auto raw : split_lines(text)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no);
    const auto tok = split_ws(line);
    if (tok.size() != 5) {
      throw Error(ErrorCode::MalformedLine, where + ": expected 5 fields, got " +
                                                std::to_string(tok.size()));
    }
    const auto cls = parse_int(tok[0]);
    if (!cls) throw Error(ErrorCode::MalformedLine, where + ": bad class id '" + std::string(tok[0]) + "'");
    double v[4];
    for (int i = 0; i < 4; ++i) {
      const auto d = parse_double(tok[static_cast<std::size_t>(i + 1)]);
      if (!d || !std::isfinite(*d)) {
        throw Error(ErrorCode::MalformedLine,
                    where + ": bad number '" + std::string(tok[static_cast<std::size_t>(i + 1)]) + "'");
      }
      v[i] = *d;
    }
    if (*cls < 0 || *cls >= num_classes) {
      throw Error(ErrorCode::ClassOutOfRange, where + ": class " + std::to_string(*cls) +
                                                  " not in [0," + std::to_string(num_classes) + ")");
    }
    for (double x : v) {
      if (x < 0.0 || x > 1.0) {
        throw Error(ErrorCode::CoordOutOfRange, where + ": coordinate outside [0,1]");
      }
    }
    if (v[2] <= 0.0 || v[3] <= 0.0) {
      throw Error(ErrorCode::CoordOutOfRange, where + ": box width and height must be > 0");
    }
    out.push_back(Annotation{*cls, NormBBox(v[0], v[1], v[2], v[3])});
  }
  return out;
}

std::string write_yolo_labels(const std::vector<Annotation>& anns) {
  std::string out;
  char buf[128];
  for (const auto& a : anns) {
    // Sizes under half a micro-unit would print as zero and fail to parse.
    const double w = std::max(a.bbox.w(), 1e-6);
    const double h = std::max(a.bbox.h(), 1e-6);
    const int n = std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f\n", a.class_id,
                                a.bbox.cx(), a.bbox.cy(), w, h);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data config
// ---------------------------------------------------------------------------

namespace {

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

std::vector<std::string> parse_names(std::string_view value) {
  value = trim(value);
  if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
    throw Error(ErrorCode::MalformedLine, "names must be a bracketed list");
  }
  value = trim(value.substr(1, value.size() - 2));
  std::vector<std::string> names;
  if (value.empty()) return names;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    auto name = unquote(value.substr(start, comma == std::string_view::npos ? value.npos : comma - start));
    if (name.empty()) throw Error(ErrorCode::MalformedLine, "empty class name in names list");
    names.push_back(std::move(name));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return names;
}

// `foo/images` is accepted as a synonym for the split root `foo`.
fs::path split_root(std::string_view value) {
  fs::path p(unquote(value));
  if (!p.has_filename() && p.has_parent_path()) p = p.parent_path();
  if (p.filename() == "images") p = p.parent_path();
  return p;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

}  // namespace

DatasetConfig parse_data_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  int line_no = 0;
  for (const auto raw : split_lines(text)) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no) + ": missing ':'");
    }
    kv[std::string(trim(line.substr(0, colon)))] = std::string(trim(line.substr(colon + 1)));
  }
  for (const char* key : {"train", "val", "test", "nc", "names"}) {
    if (!kv.contains(key)) throw Error(ErrorCode::MissingKey, std::string("config lacks '") + key + ":'");
  }
  DatasetConfig cfg;
  cfg.train_dir = split_root(kv["train"]);
  cfg.val_dir = split_root(kv["val"]);
  cfg.test_dir = split_root(kv["test"]);
  cfg.class_names = parse_names(kv["names"]);
  const auto nc = parse_int(kv["nc"]);
  if (!nc) throw Error(ErrorCode::MalformedLine, "nc must be an integer");
  if (*nc != cfg.num_classes()) {
    throw Error(ErrorCode::CountMismatch, "nc is " + std::to_string(*nc) + " but names lists " +
                                              std::to_string(cfg.num_classes()));
  }
  if (*nc < 1) throw Error(ErrorCode::InvalidArgument, "a dataset needs at least one class");
  if (cfg.train_dir == cfg.val_dir || cfg.train_dir == cfg.test_dir || cfg.val_dir == cfg.test_dir) {
    throw Error(ErrorCode::InvalidArgument, "train, val and test paths must be distinct");
  }
  return cfg;
}

std::string write_data_config(const DatasetConfig& config) {
  std::string out;
  out += "train: " + config.train_dir.generic_string() + "\n";
  out += "val: " + config.val_dir.generic_string() + "\n";
  out += "test: " + config.test_dir.generic_string() + "\n";
  out += "nc: " + std::to_string(config.num_classes()) + "\n";
  out += "names: [";
  for (std::size_t i = 0; i < config.class_names.size(); ++i) {
    if (i) out += ", ";
    out += config.class_names[i];
  }
  out += "]\n";
  return out;
}

DatasetConfig load_data_config(const fs::path& path) {
  DatasetConfig cfg;
  try {
    cfg = parse_data_config(read_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
  const fs::path base = path.parent_path();
  for (auto* p : {&cfg.train_dir, &cfg.val_dir, &cfg.test_dir}) {
    if (p->is_relative()) *p = (base / *p).lexically_normal();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Directory trees
// ---------------------------------------------------------------------------

std::vector<LabeledItem> list_split(const DatasetConfig& config, Split split) {
  const fs::path& root = config.dir(split);
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::UnreadableFile, "split directory " + root.string() + " does not exist");
  }
  std::map<std::string, fs::path> images;
  if (fs::is_directory(root / "images")) {
    for (const auto& entry : fs::directory_iterator(root / "images")) {
      if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
      const auto stem = entry.path().stem().string();
      if (!images.emplace(stem, entry.path()).second) {
        throw Error(ErrorCode::NameCollision, "two images share the stem '" + stem + "' in " +
                                                  (root / "images").string());
      }
    }
  }
  std::map<std::string, fs::path> labels;
  if (fs::is_directory(root / "labels")) {
    for (const auto& entry : fs::directory_iterator(root / "labels")) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
      const auto stem = entry.path().stem().string();
      if (!images.contains(stem)) {
        throw Error(ErrorCode::DanglingLabel, entry.path().string() + " has no matching image");
      }
      labels.emplace(stem, entry.path());
    }
  }
  std::vector<LabeledItem> items;
  items.reserve(images.size());
  for (const auto& [stem, image_path] : images) {
    LabeledItem item{image_path, {}};
    if (const auto it = labels.find(stem); it != labels.end()) {
      try {
        item.annotations = parse_yolo_labels(read_text(it->second), config.num_classes());
      } catch (const Error& e) {
        throw Error(e.code(), it->second.string() + ": " + e.detail());
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

SplitSummary summarize_split(const DatasetConfig& config) {
  SplitSummary s;
  s.class_names = config.class_names;
  for (const Split split : kAllSplits) {
    const auto si = static_cast<std::size_t>(split);
    s.per_class[si].assign(config.class_names.size(), 0);
    const auto items = list_split(config, split);
    s.images[si] = static_cast<int>(items.size());
    for (const auto& item : items) {
      std::set<int> present;
      for (const auto& a : item.annotations) present.insert(a.class_id);
      for (int c : present) ++s.per_class[si][static_cast<std::size_t>(c)];
    }
  }
  return s;
}

std::string format_summary(const SplitSummary& summary) {
  std::size_t width = 5;
  for (const auto& n : summary.class_names) width = std::max(width, n.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %10s %6s\n", static_cast<int>(width), "Class", "Training",
                "Validation", "Test");
  out += buf;
  for (std::size_t c = 0; c < summary.class_names.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%-*s %8d %10d %6d\n", static_cast<int>(width),
                  summary.class_names[c].c_str(), summary.per_class[0][c], summary.per_class[1][c],
                  summary.per_class[2][c]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s %8d %10d %6d\n", static_cast<int>(width), "(images)",
                summary.images[0], summary.images[1], summary.images[2]);
  out += buf;
  return out;
}

std::string provenance_stem(std::string_view base, std::string_view tag, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%.*s%04zu", static_cast<int>(tag.size()), tag.data(), index);
  return std::string(base) + buf;
}

namespace {

bool path_contains(const fs::path& outer, const fs::path& inner) {
  auto o = outer.begin(), i = inner.begin();
  for (; o != outer.end(); ++o, ++i) {
    if (o->empty()) continue;  // trailing separator
    if (i == inner.end() || *o != *i) return false;
  }
  return true;
}

}  // namespace

DatasetConfig assemble(const std::vector<AugmentedItem>& items, const DatasetConfig& base,
                       const fs::path& out_dir) {
  const fs::path out_abs = fs::weakly_canonical(fs::absolute(out_dir));
  DatasetConfig result = base;
  result.train_dir = out_abs / "train";
  result.val_dir = out_abs / "val";
  result.test_dir = out_abs / "test";

  // Validate everything before touching the filesystem.
  std::array<std::vector<LabeledItem>, 3> base_items;
  for (const Split split : kAllSplits) {
    const auto si = static_cast<std::size_t>(split);
    const fs::path src = fs::weakly_canonical(fs::absolute(base.dir(split)));
    const fs::path dst = result.dir(split);
    if (path_contains(src, dst) || path_contains(dst, src)) {
      throw Error(ErrorCode::IoFailure, "output " + dst.string() + " overlaps source " + src.string());
    }
    base_items[si] = list_split(base, split);
  }
  std::array<std::set<std::string>, 3> stems;
  for (const Split split : kAllSplits) {
    for (const auto& it : base_items[static_cast<std::size_t>(split)]) {
      stems[static_cast<std::size_t>(split)].insert(it.image_path.stem().string());
    }
  }
  for (const auto& item : items) {
    if (item.stem.empty() || item.stem.find_first_of("/\\") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "invalid item stem '" + item.stem + "'");
    }
    for (const auto& a : item.annotations) {
      if (a.class_id < 0 || a.class_id >= base.num_classes()) {
        throw Error(ErrorCode::ClassOutOfRange, "item '" + item.stem + "' has class " +
                                                    std::to_string(a.class_id));
      }
    }
    if (!stems[static_cast<std::size_t>(item.split)].insert(item.stem).second) {
      throw Error(ErrorCode::NameCollision, "stem '" + item.stem + "' already exists in " +
                                                std::string(to_string(item.split)));
    }
  }

  try {
    fs::create_directories(out_abs);
    for (const Split split : kAllSplits) {
      const auto si = static_cast<std::size_t>(split);
      const fs::path dst = result.dir(split);
      fs::remove_all(dst);
      fs::create_directories(dst / "images");
      fs::create_directories(dst / "labels");
      const fs::path src_labels = base.dir(split) / "labels";
      for (const auto& it : base_items[si]) {
        fs::copy_file(it.image_path, dst / "images" / it.image_path.filename(),
                      fs::copy_options::overwrite_existing);
        const fs::path label = src_labels / (it.image_path.stem().string() + ".txt");
        if (fs::exists(label)) {
          fs::copy_file(label, dst / "labels" / label.filename(), fs::copy_options::overwrite_existing);
        }
      }
    }
    for (const auto& item : items) {
      const fs::path dst = result.dir(item.split);
      write_png(dst / "images" / (item.stem + ".png"), item.image);
      write_text(dst / "labels" / (item.stem + ".txt"), write_yolo_labels(item.annotations));
    }
    DatasetConfig on_disk = result;
    on_disk.train_dir = "train";
    on_disk.val_dir = "val";
    on_disk.test_dir = "test";
    write_text(out_abs / "data.yaml", write_data_config(on_disk));
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoFailure, e.what());
  }
  return result;
}

}  // namespace compaug
