#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "compaug/cli.hpp"
#include "compaug/dataset.hpp"
#include "compaug/image_io.hpp"
#include "support/oracles.hpp"

using namespace compaug;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{COMPAUG_FIXTURES};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "compaug");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("compaug_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).generic_string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

void make_assets(const fs::path& root) {
  RngStream rng = derive_stream(77, 0);
  fs::create_directories(root / "fg" / "0");
  fs::create_directories(root / "fg" / "1");
  fs::create_directories(root / "bg");
  for (int i = 0; i < 2; ++i) {
    ImageBuffer fg(20 + 4 * i, 14, Channels::RGBA);
    for (int y = 0; y < fg.height(); ++y)
      for (int x = 0; x < fg.width(); ++x) {
        for (int c = 0; c < 3; ++c) fg.at(x, y, c) = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        fg.at(x, y, 3) = (x > 2 && y > 2 && x < fg.width() - 2) ? 255 : 0;
      }
    write_png(root / "fg" / std::to_string(i) / ("plane" + std::to_string(i) + ".png"), fg);
    write_png(root / "bg" / ("sky" + std::to_string(i) + ".png"), oracle::random_image(rng, 96, 64, Channels::RGB));
  }
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("compose"), std::string::npos);
  r = run({"dataset-summary", "--config", "x.yaml", "--bogus"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train-toy", "--optimizer", "sgd"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"compose", "--fg", "a", "--bg", "b", "--out", "c", "--scale", "0.5"}).code, cli::kExitUsage);
}

TEST(Cli, DataErrorsExitTwo) {
  const auto r = run({"dataset-summary", "--config", "/nonexistent/data.yaml"});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("UnreadableFile"), std::string::npos);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST(Cli, DatasetSummaryBaseline) {
  const auto r = run({"dataset-summary", "--config", (kFixtures / "split_counts_baseline" / "data.yaml").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("commercial      218         62     36"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("military         22          9      6"), std::string::npos) << r.out;
}

TEST(Cli, EvaluatePerfectPredictions) {
  TempDir tmp("perfect");
  const auto root = kFixtures / "eval_golden";
  fs::create_directories(tmp.path / "preds");
  for (const auto& e : fs::directory_iterator(root / "test" / "labels")) {
    std::ifstream in(e.path());
    std::ofstream out(tmp.path / "preds" / e.path().filename());
    int c;
    double cx, cy, w, h;
    while (in >> c >> cx >> cy >> w >> h) out << c << " 1.0 " << cx << ' ' << cy << ' ' << w << ' ' << h << '\n';
  }
  const auto r = run({"evaluate", "--config", (root / "data.yaml").string(), "--preds",
                      (tmp.path / "preds").string(), "--report", (tmp.path / "report.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mAP50 = 1.0000"), std::string::npos) << r.out;
  std::ifstream rep(tmp.path / "report.txt");
  const std::string kv((std::istreambuf_iterator<char>(rep)), std::istreambuf_iterator<char>());
  EXPECT_NE(kv.find("map50,1.0000"), std::string::npos);
}

TEST(Cli, ComposeIsDeterministicAcrossThreads) {
  TempDir tmp("compose");
  make_assets(tmp.path);
  const auto args = [&](const std::string& out, const std::string& threads) {
    return std::vector<std::string>{"compose", "--fg", (tmp.path / "fg").string(), "--bg", (tmp.path / "bg").string(),
                                    "--out", (tmp.path / out).string(), "--n", "12", "--seed", "42",
                                    "--threads", threads};
  };
  auto r = run(args("one", "1"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("seed=42"), std::string::npos);
  ASSERT_EQ(run(args("eight", "8")).code, 0);
  const auto a = tree_contents(tmp.path / "one"), b = tree_contents(tmp.path / "eight");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 12u * 2 + 1);
  EXPECT_TRUE(a.contains("images/plane0_ic0000.png"));
  EXPECT_TRUE(a.contains("labels/plane1_ic0001.txt"));
  const auto label = parse_yolo_labels(a.at("labels/plane1_ic0001.txt"), 2);
  ASSERT_EQ(label.size(), 1u);
  EXPECT_EQ(label[0].class_id, 1);
}

TEST(Cli, ComposeIntoDataset) {
  TempDir tmp("compose_base");
  make_assets(tmp.path);
  const auto r = run({"compose", "--fg", (tmp.path / "fg").string(), "--bg", (tmp.path / "bg").string(), "--out",
                      (tmp.path / "aug").string(), "--targets", "1:5", "--base",
                      (kFixtures / "split_counts_baseline" / "data.yaml").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = summarize_split(load_data_config(tmp.path / "aug" / "data.yaml"));
  EXPECT_EQ(s.count(Split::Train, 1), 27);
  EXPECT_EQ(s.count(Split::Train, 0), 218);
}

TEST(Cli, ClassicAugmentsTrainSplit) {
  TempDir tmp("classic");
  const auto cfg = (kFixtures / "eval_golden" / "data.yaml").string();
  // The golden fixture's train split is empty, so build a small one.
  ImageBuffer img(8, 6, Channels::RGB);
  for (auto& v : img.data()) v = 100;
  AugmentedItem seed{Split::Train, "src", img, {{0, NormBBox(0.25, 0.5, 0.2, 0.4)}}};
  assemble({seed}, load_data_config(cfg), tmp.path / "base");
  const auto r = run({"classic", "--in", (tmp.path / "base" / "data.yaml").string(), "--out",
                      (tmp.path / "out").string(), "--flip", "--blur", "3", "--exposure", "0.8:1.2", "--mode",
                      "separate", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto out = load_data_config(tmp.path / "out" / "data.yaml");
  const auto items = list_split(out, Split::Train);
  ASSERT_EQ(items.size(), 4u);
  EXPECT_EQ(items[1].image_path.stem().string(), "src_cl0000");
  EXPECT_NEAR(items[1].annotations[0].bbox.cx(), 0.75, 1e-6);
  EXPECT_NEAR(items[2].annotations[0].bbox.cx(), 0.25, 1e-6);
  EXPECT_EQ(run({"classic", "--in", cfg, "--out", (tmp.path / "x").string(), "--blur", "4"}).code, 1);
}

TEST(Cli, EdgesWritesBinaryMaps) {
  TempDir tmp("edges");
  fs::create_directories(tmp.path / "in");
  ImageBuffer step(16, 8, Channels::RGB);
  for (int y = 0; y < 8; ++y)
    for (int x = 8; x < 16; ++x)
      for (int c = 0; c < 3; ++c) step.at(x, y, c) = 255;
  write_png(tmp.path / "in" / "step.png", step);
  const auto r = run({"edges", "--in", (tmp.path / "in").string(), "--out", (tmp.path / "out").string(), "--low",
                      "50", "--high", "150"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = read_image(tmp.path / "out" / "step.png");
  EXPECT_EQ(e.channels(), Channels::Gray);
  int on = 0;
  for (auto v : e.data()) {
    EXPECT_TRUE(v == 0 || v == 255);
    on += v == 255;
  }
  EXPECT_EQ(on, 8);
  EXPECT_EQ(run({"edges", "--in", (tmp.path / "in").string(), "--out", (tmp.path / "o2").string(), "--low", "90",
                 "--high", "10"})
                .code,
            cli::kExitUsage);
}

TEST(Cli, TrainToy) {
  const auto r = run({"train-toy", "--epochs", "15", "--patience", "3", "--optimizer", "gd", "--lr", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# train-toy seed=0", 0), 0u);
  EXPECT_NE(r.out.find("epoch,train_loss,val_loss\n1,"), std::string::npos);
  EXPECT_NE(r.out.find("best_epoch="), std::string::npos);
  EXPECT_EQ(r.out, run({"train-toy", "--epochs", "15", "--patience", "3", "--optimizer", "gd", "--lr", "0.05"}).out);
}
