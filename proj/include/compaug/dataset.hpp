#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "compaug/core.hpp"

namespace compaug {

enum class Split { Train = 0, Val = 1, Test = 2 };
inline constexpr std::array<Split, 3> kAllSplits{Split::Train, Split::Val, Split::Test};
std::string_view to_string(Split split);

/// Dataset roots and class roster. Each split directory holds `images/` and
/// `labels/` subdirectories whose files are matched by stem.
struct DatasetConfig {
  std::filesystem::path train_dir;
  std::filesystem::path val_dir;
  std::filesystem::path test_dir;
  std::vector<std::string> class_names;

  int num_classes() const noexcept { return static_cast<int>(class_names.size()); }
  const std::filesystem::path& dir(Split split) const;
};

struct LabeledItem {
  std::filesystem::path image_path;
  std::vector<Annotation> annotations;
};

/// Per-split, per-class image counts. An image counts once for every class
/// present in its labels.
struct SplitSummary {
  std::vector<std::string> class_names;
  std::array<std::vector<int>, 3> per_class{};
  std::array<int, 3> images{};

  int count(Split split, int class_id) const {
    return per_class[static_cast<std::size_t>(split)][static_cast<std::size_t>(class_id)];
  }
};

/// A generated image destined for one split of an assembled dataset.
struct AugmentedItem {
  Split split = Split::Train;
  std::string stem;
  ImageBuffer image;
  std::vector<Annotation> annotations;
};

/// One `class cx cy w h` record per non-blank line.
std::vector<Annotation> parse_yolo_labels(std::string_view text, int num_classes);
/// Fixed six-decimal rendering, one line per annotation.
std::string write_yolo_labels(const std::vector<Annotation>& anns);

/// Flat `key: value` subset of the usual data.yaml: train, val, test, nc and
/// a bracketed names list. `#` starts a comment; unknown keys are ignored.
DatasetConfig parse_data_config(std::string_view text);
std::string write_data_config(const DatasetConfig& config);
/// Reads a config file, resolving relative split paths against its folder.
DatasetConfig load_data_config(const std::filesystem::path& path);

/// Items of one split sorted by stem. Images without a label file are
/// background images with no annotations.
std::vector<LabeledItem> list_split(const DatasetConfig& config, Split split);

SplitSummary summarize_split(const DatasetConfig& config);
std::string format_summary(const SplitSummary& summary);

/// `<base>_<tag><index:04>` e.g. `plane3_ic0007`.
std::string provenance_stem(std::string_view base, std::string_view tag, std::size_t index);

/// Writes base images/labels plus `items` into `out_dir/{train,val,test}` and
/// a `data.yaml` beside them. Split folders under `out_dir` are rebuilt from
/// scratch, so repeated runs give identical trees. Sources are never touched.
DatasetConfig assemble(const std::vector<AugmentedItem>& items, const DatasetConfig& base,
                       const std::filesystem::path& out_dir);

}  // namespace compaug
